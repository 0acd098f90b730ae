"""Per-step regret traces and the CSV format they round-trip through."""
import csv
from dataclasses import dataclass, fields

import numpy as np

COLUMNS = ("t", "action", "reward", "cumulative_regret", "sqrt_beta", "log_det", "recomputed")
_FLOAT_COLS = ("reward", "cumulative_regret", "sqrt_beta", "log_det")


def fmt_float(x):
    # 17 significant digits round-trip every float64
    return format(float(x), ".17g")


@dataclass(eq=False)
class RegretTrace:
    t: np.ndarray
    action: np.ndarray
    reward: np.ndarray
    cumulative_regret: np.ndarray
    sqrt_beta: np.ndarray
    log_det: np.ndarray
    recomputed: np.ndarray

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=np.int64)
        self.action = np.asarray(self.action, dtype=np.int64)
        for name in _FLOAT_COLS:
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        self.recomputed = np.asarray(self.recomputed, dtype=bool)
        n = self.t.shape[0]
        if any(getattr(self, f.name).shape != (n,) for f in fields(self)):
            raise ValueError("trace columns must be 1-d and equally long")

    def __len__(self):
        return self.t.shape[0]

    def __eq__(self, other):
        if not isinstance(other, RegretTrace):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, c), getattr(other, c), equal_nan=c in _FLOAT_COLS)
            for c in COLUMNS
        )

    def validate(self):
        """Raise if t is not 1, 2, ... or cumulative regret ever decreases."""
        if len(self) and not np.array_equal(self.t, np.arange(1, len(self) + 1)):
            raise ValueError("t must run 1, 2, ..., T")
        if np.any(np.diff(self.cumulative_regret) < 0):
            raise ValueError("cumulative regret decreased")
        return self

    def rows(self):
        for i in range(len(self)):
            yield (
                str(int(self.t[i])),
                str(int(self.action[i])),
                fmt_float(self.reward[i]),
                fmt_float(self.cumulative_regret[i]),
                fmt_float(self.sqrt_beta[i]),
                fmt_float(self.log_det[i]),
                "1" if self.recomputed[i] else "0",
            )


def write_trace(trace, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        w.writerows(trace.rows())


def read_trace(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != COLUMNS:
            raise ValueError(f"unexpected trace header {header}")
        cols = list(zip(*reader)) or [()] * len(COLUMNS)
    data = dict(zip(COLUMNS, cols))
    return RegretTrace(
        t=[int(v) for v in data["t"]],
        action=[int(v) for v in data["action"]],
        recomputed=[v == "1" for v in data["recomputed"]],
        **{c: [float(v) for v in data[c]] for c in _FLOAT_COLS},
    )


def write_table(path, header, rows):
    """Write a generic result table; floats get 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return fmt_float(v)
    return str(v)
