"""Self-normalized confidence sets for online least squares and linear bandits."""
from ._accel import backend
from .confidence import (
    NoiseSpec,
    dani_radius,
    ellipsoid_radius,
    kappa_bound,
    self_normalized_bound_sq,
    skipping_radius,
    ucb_halfwidth,
    worst_case_bound_sq,
)
from .design_matrix import DesignMatrixState, log_det_ratio, new_design, rank_one_update, weighted_norm_sq
from .envs import ArmedBandit, LinearBandit, NoiseModel, instantaneous_regret, play, pull, replication_rng
from .estimator import (
    ConfidenceEllipsoid,
    RidgeRegressor,
    contains,
    ellipsoid,
    new_regressor,
    observe,
    predict_with_interval,
)
from .policies import (
    OfulState,
    RarelySwitchingState,
    UcbDeltaState,
    det_ratio_norm_bound_check,
    new_oful,
    oful_regret_bound,
    oful_select,
    oful_update,
    problem_dependent_bound,
    rs_oful_regret_bound,
    rs_oful_select,
    rs_oful_update,
    ucb_regret_bound,
    ucb_select,
    ucb_update,
)

__version__ = "0.1.0"
