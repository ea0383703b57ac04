from .design import FitData, prepare
from .fit import fit
from .state import FitOptions, FitReport, VariationalState
from .truncnorm import sample_truncnorm, truncnorm_mean
from .updates import (
    update_q1,
    update_q2,
    update_q3,
    update_q4,
    update_q4_undirected,
    update_q5,
    update_q6,
)

__all__ = [
    "FitData",
    "FitOptions",
    "FitReport",
    "VariationalState",
    "fit",
    "prepare",
    "sample_truncnorm",
    "truncnorm_mean",
    "update_q1",
    "update_q2",
    "update_q3",
    "update_q4",
    "update_q4_undirected",
    "update_q5",
    "update_q6",
]
