"""Conformal barycenters: potentials, hyperbolic gradients and swarm flows.

The barycenter of a configuration is the unique minimizer of the log
potential

    H(a) = -sum_i log(1 - |phi_a(x_i)|^2)

where ``phi_a`` is the model involution exchanging ``a`` and the origin.
It is computed by integrating the low-dimensional flow

    da/dt = (K / 2N) (1 - |a|^2) sum_i phi_a(x_i),     K < 0,

from ``a = 0`` until the pushed configuration ``phi_a(x_i)`` is balanced.
The full N-particle swarm, whose solutions move by isometries, is provided
for trajectory export and invariance checks.

Sign convention: ``phi_a`` is the ``(a - z)`` form for every model, so the
disc flow uses ``(a - z) / (1 - conj(a) z)`` together with ``+K``; the
``(z - a)`` form with ``-K`` describes the same flow.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import DomainError
from .geometry import BOUNDARY_MARGIN, Disc, BergmanBall, Model, PoincareBall, _cinner
from .numerics import StepControl, integrate_ode, rk4_stepper

logger = logging.getLogger(__name__)

__all__ = [
    "SwarmParams",
    "BarycenterResult",
    "SwarmTrajectory",
    "potential",
    "weighted_potential",
    "pushed_mean",
    "hyp_gradient",
    "hyperbolic_norm",
    "barycenter_velocity",
    "dissipation_rate",
    "swarm_velocity",
    "swarm_step",
    "swarm_trajectory",
    "barycenter_flow",
    "barycenter",
    "is_balanced",
    "balance_transform",
]


@dataclass(frozen=True)
class SwarmParams:
    """Solver settings shared by the swarm and barycenter integrators.

    Parameters
    ----------
    K : float
        Coupling; negative values drive configurations toward balance.
    step : float
        Initial (or fixed) integration step.
    residual_tol : float
        Stop once the weighted mean of the pushed configuration is this small.
    max_steps : int
        Cap on accepted integration steps.
    weights : array_like, optional
        Non-negative point weights summing to one; uniform when omitted.
    step_tol : float or None
        Local error tolerance of the adaptive barycenter integrator. ``None``
        integrates with the fixed step ``step``.
    """

    K: float = -1.0
    step: float = 0.05
    residual_tol: float = 1e-10
    max_steps: int = 1_000_000
    weights: Optional[np.ndarray] = field(default=None, compare=False)
    step_tol: Optional[float] = 1e-9

    def __post_init__(self):
        if self.K == 0:
            raise DomainError("coupling K must be non-zero")
        if not self.step > 0:
            raise DomainError("step must be positive")
        if not self.residual_tol > 0:
            raise DomainError("residual_tol must be positive")
        if self.max_steps < 1:
            raise DomainError("max_steps must be at least 1")

    def control(self) -> StepControl:
        # RK4 is stable for h |lambda| < 2.78; flow eigenvalues are bounded by |K|
        return StepControl(h=self.step, tol=self.step_tol, h_max=2.0 / abs(self.K))


@dataclass
class BarycenterResult:
    point: np.ndarray
    potential: float
    iterations: int
    residual: float
    converged: bool
    time: float = 0.0


@dataclass
class SwarmTrajectory:
    times: np.ndarray
    states: np.ndarray
    energies: np.ndarray
    residuals: np.ndarray
    drift: np.ndarray


def _weights(X, weights):
    n = X.shape[0]
    if weights is None:
        return np.full(n, 1.0 / n)
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,):
        raise DomainError(f"expected {n} weights, got shape {w.shape}")
    if np.any(w < 0) or not np.isclose(w.sum(), 1.0, rtol=0, atol=1e-12):
        raise DomainError("weights must be non-negative and sum to one")
    return w


def _wsum(w, V):
    # weighted sum over the leading (point) axis
    return w @ V


def _rdot(u, v):
    """Real inner product of (possibly complex) vectors."""
    return float(np.real(np.sum(np.asarray(u) * np.conj(v))))


def potential(model: Model, X, a, weights=None) -> float:
    """Log potential ``H(a)`` of a configuration (unnormalized sum).

    With weights ``w`` the terms are scaled by ``N w_i`` so uniform weights
    reproduce the plain sum.
    """
    X = model.check_points(X)
    a = model.check_point(a)
    w = _weights(X, weights)
    return float(-X.shape[0] * np.dot(w, model.log_kernel(a, X)))


def weighted_potential(model: Model, X, weights, a) -> float:
    return potential(model, X, a, weights)


def pushed_mean(model: Model, X, a, weights=None):
    """Weighted mean of the configuration pushed by the involution at ``a``."""
    return _wsum(_weights(X, weights), model.involution(a, X))


def hyperbolic_norm(model: Model, a, v) -> float:
    """Norm of a tangent vector ``v`` at ``a`` in the metric ``2|dx| / (1 - |x|^2)``."""
    return 2.0 * float(np.sqrt(np.sum(np.abs(v) ** 2))) / (1.0 - float(model.sqnorm(a)))


def hyp_gradient(model: Model, X, a, weights=None):
    """Hyperbolic gradient ``(1/4)(1 - |a|^2)^2 grad_Eucl H(a)`` of the potential.

    For the disc and the Poincare ball this is ``(1/2)(1 - |a|^2) sum h_a(x_i)``.
    For the Bergman ball the Euclidean gradient is not parallel to
    ``sum m_a(x_i)`` once m >= 2; the component orthogonal to ``a`` picks
    up a factor ``sqrt(1 - |a|^2)``.
    """
    X = model.check_points(X)
    a = model.check_point(a)
    w = _weights(X, weights)
    aa = float(model.sqnorm(a))
    s = X.shape[0] * _wsum(w, model.involution(a, X))
    if isinstance(model, BergmanBall) and aa > 0.0:
        par = (_cinner(s, a) / aa) * a
        s = par + np.sqrt(1.0 - aa) * (s - par)
    return 0.5 * (1.0 - aa) * s


def barycenter_velocity(model: Model, X, a, K: float, weights=None):
    """Right-hand side ``(K/2)(1 - |a|^2) sum_i w_i phi_a(x_i)`` of the barycenter flow."""
    return _velocity(model, X, a, K, _weights(X, weights))


def _velocity(model, X, a, K, w):
    return 0.5 * K * (1.0 - model.sqnorm(a)) * (w @ model.involution(a, X))


def dissipation_rate(model: Model, X, a, K: float, weights=None) -> float:
    """Predicted ``dH/dt`` along the barycenter flow.

    Equals ``(K/N) |grad_hyp H|^2_hyp`` for the disc and the Poincare ball.
    """
    a = model.check_point(a)
    g = hyp_gradient(model, X, a, weights)
    v = barycenter_velocity(model, X, a, K, weights)
    return 4.0 / (1.0 - float(model.sqnorm(a))) ** 2 * _rdot(g, v)


# --------------------------------------------------------------------------
# swarms


def swarm_velocity(model: Model, X, K: float, weights=None):
    """Velocity field of the swarm whose solutions evolve by isometries."""
    X = np.asarray(X)
    n = X.shape[0]
    w = _weights(X, weights)
    S = n * _wsum(w, X)
    if isinstance(model, Disc):
        c = K / (2.0 * n)
        return -c * np.conj(S) * X**2 + c * S
    if isinstance(model, PoincareBall):
        sq = np.sum(X * X, axis=1)
        return -(K / n) * (X @ S)[:, None] * X + (K / (2.0 * n)) * (1.0 + sq)[:, None] * S
    if isinstance(model, BergmanBall):
        return (K / n) * (S - _cinner(X, S)[:, None] * X)
    raise DomainError(f"unsupported model {model!r}")


def _inside(model: Model):
    def admissible(Y):
        return bool(np.all(1.0 - model.sqnorm(Y) >= BOUNDARY_MARGIN))
    return admissible


def swarm_step(model: Model, X, params: SwarmParams = SwarmParams()):
    """Advance the swarm by one RK4 step of size ``params.step``.

    A step that would leave the ball is retried with half the size (at most
    50 times) and then raises :class:`~hyperball.exceptions.StepFailure`.
    """
    X = model.check_points(X)
    control = StepControl(h=params.step)
    field_ = lambda t, Y: swarm_velocity(model, Y, params.K, params.weights)  # noqa: E731
    stepper = rk4_stepper(field_, X, control, _inside(model), t_end=params.step)
    Y = X
    for _, Y in stepper:
        pass
    return Y


def swarm_trajectory(model: Model, X, params: SwarmParams, t_end: float,
                     every: int = 1) -> SwarmTrajectory:
    """Integrate the swarm on ``[0, t_end]`` with fixed step ``params.step``."""
    X = model.check_points(X)
    field_ = lambda t, Y: swarm_velocity(model, Y, params.K, params.weights)  # noqa: E731
    times, states = integrate_ode(field_, X, t_end, StepControl(h=params.step),
                                  _inside(model), every=every)
    origin = model.origin()
    w = _weights(X, params.weights)
    energies = np.array([potential(model, Y, origin, params.weights) for Y in states])
    residuals = np.array([float(model.norm(_wsum(w, Y))) for Y in states])
    iu = np.triu_indices(X.shape[0], 1)
    d0 = _pairwise(model, X)[iu]
    drift = np.array([np.max(np.abs(_pairwise(model, Y)[iu] - d0), initial=0.0)
                      for Y in states])
    return SwarmTrajectory(times, states, energies, residuals, drift)


def _pairwise(model, X):
    n = X.shape[0]
    D = np.zeros((n, n))
    for i in range(n - 1):
        D[i, i + 1:] = model.distance(X[i + 1:], X[i])
    return D


# --------------------------------------------------------------------------
# barycenter


def barycenter_flow(model: Model, X, params: SwarmParams = SwarmParams(),
                    t_end: float | None = None):
    """Path ``a(t)`` of the barycenter flow started at the origin.

    Returns ``(times, points)``. With ``t_end`` the flow is integrated on
    ``[0, t_end]``; otherwise it runs until the residual falls below
    ``params.residual_tol`` or ``params.max_steps`` steps were taken.
    """
    X = model.check_points(X)
    if params.K >= 0:
        raise DomainError("the barycenter flow needs K < 0")
    field_ = lambda t, a: barycenter_velocity(model, X, a, params.K, params.weights)  # noqa: E731
    admissible = _inside(model)
    if t_end is not None:
        control = params.control() if params.step_tol is not None else StepControl(h=params.step)
        return integrate_ode(field_, model.origin(), t_end, control, admissible)
    times, path = [0.0], [model.origin()]
    for t, a, _ in _run_flow(model, X, params):
        times.append(t)
        path.append(a)
    return np.asarray(times), np.asarray(path)


def _run_flow(model, X, params):
    """Yield ``(t, a, residual)`` until convergence or the step cap."""
    w = _weights(X, params.weights)
    field_ = lambda t, a: _velocity(model, X, a, params.K, w)  # noqa: E731
    control = params.control() if params.step_tol is not None else StepControl(h=params.step)
    stepper = rk4_stepper(field_, model.origin(), control, _inside(model))
    if float(model.norm(_wsum(w, model.involution(model.origin(), X)))) <= params.residual_tol:
        return
    for i, (t, a) in enumerate(stepper, 1):
        res = float(model.norm(_wsum(w, model.involution(a, X))))
        yield t, a, res
        if res <= params.residual_tol or i >= params.max_steps:
            return


def barycenter(model: Model, X, params: SwarmParams = SwarmParams()) -> BarycenterResult:
    """Conformal (Bergman: holomorphic) barycenter of a configuration.

    Non-convergence within ``params.max_steps`` is reported through
    ``converged=False``; the last iterate is returned as is.
    """
    X = model.check_points(X)
    w = _weights(X, params.weights)
    if X.shape[0] == 1:
        a = X[0].copy()
        return BarycenterResult(a, potential(model, X, a), 0, 0.0, True)
    if params.K >= 0:
        raise DomainError("the barycenter flow needs K < 0")
    a = model.origin()
    t = 0.0
    res = float(model.norm(_wsum(w, model.involution(a, X))))
    iterations = 0
    for iterations, (t, a, res) in enumerate(_run_flow(model, X, params), 1):
        pass
    converged = res <= params.residual_tol
    if not converged:
        logger.warning("barycenter flow stopped after %d steps with residual %.3g",
                       iterations, res)
    logger.debug("barycenter: %d steps, t=%.4g, residual=%.3g", iterations, t, res)
    return BarycenterResult(np.asarray(a), potential(model, X, a, params.weights),
                            iterations, res, converged, t)


def is_balanced(model: Model, X, tol: float) -> bool:
    """True when ``|sum x_i| / N <= tol``."""
    X = model.check_points(X)
    return float(model.norm(X.mean(axis=0))) <= tol


def balance_transform(model: Model, X, params: SwarmParams = SwarmParams()):
    """Isometry centered at the barycenter and the balanced configuration it produces.

    The map is unique up to a rotation; the returned one has identity
    rotation part.
    """
    X = model.check_points(X)
    result = barycenter(model, X, params)
    iso = model.isometry_taking_origin_to(result.point)
    return iso, iso.apply(X)

