"""Barycenters, isometry-invariant distributions and maximum likelihood on hyperbolic balls.

Three models are supported: the Poincare disc (points are complex scalars),
the real Poincare ball of dimension ``d`` and the complex Bergman ball of
dimension ``m``. See :func:`get_model`.
"""
from .barycenter import (
    BarycenterResult,
    SwarmParams,
    balance_transform,
    barycenter,
    barycenter_flow,
    hyp_gradient,
    is_balanced,
    potential,
    swarm_step,
    swarm_trajectory,
    weighted_potential,
)
from .distributions import (
    MoebParams,
    log_density,
    log_normalizer,
    pushforward_params,
    radial_cdf,
    radial_quantile,
    sample,
)
from .estimation import FitResult, fit, log_likelihood, s_equation_residual
from .estimators import ConformalBarycenter, MoebiusDistribution
from .exceptions import (
    ConvergenceError,
    DegenerateDataError,
    DomainError,
    HyperballError,
    StepFailure,
)
from .geometry import (
    BergmanBall,
    Disc,
    PoincareBall,
    get_model,
    isometry_taking_origin_to,
    pairwise_distance_matrix,
)

__version__ = "0.1.0"
