"""Longitudinal reference growth charts via quantile regression on B-splines.

Marginal charts (quantile curves of weight or height against age),
conditional charts that use a child's own prior growth path plus current
height, a catch-up growth coefficient fitted to growth-rate deviations,
and window-matched reference-group screening. Fitting relies on an exact
check-loss LP solver; synthetic cohorts with known quantile structure
back all verification.
"""

from .splines import (
    DomainError,
    KnotVector,
    basis_at,
    default_infancy_knots,
    design_matrix,
    make_knots,
)
from .qr_solver import (
    ConvergenceError,
    QuantileFit,
    RankDeficiencyError,
    check_loss,
    fit,
    verify_optimality,
)

__version__ = "0.1.0"
