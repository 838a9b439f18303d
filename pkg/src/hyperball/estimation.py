"""Maximum-likelihood estimation of location and concentration.

The log-likelihood of a configuration of ``N`` points is

    l(a, s) = N log c(s) - s H(a)

with ``H`` the unnormalized potential of :mod:`hyperball.barycenter`. It
splits: ``a`` maximizes it exactly at the barycenter for every ``s``, and
``s`` then solves the one-dimensional stationarity equation

    g(s) = H(a_hat) / N,

where ``g = d log c / ds`` is

    disc     1 / (s - 1)
    ball     psi(1 + s - d/2) - psi(1 + s - d)
    Bergman  sum_{k=1..m} 1 / (s - k)  =  psi(s) - psi(s - m)

``g`` decreases from ``+inf`` at the admissible bound to ``0`` at infinity,
so the root is unique whenever ``H > 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .barycenter import SwarmParams, barycenter, potential
from .distributions import MoebParams, concentration_lower_bound, log_normalizer
from .exceptions import ConvergenceError, DegenerateDataError, DomainError
from .geometry import BergmanBall, Disc, Model, PoincareBall
from .numerics import digamma, find_root

__all__ = [
    "FitResult",
    "log_likelihood",
    "concentration_score",
    "s_equation_residual",
    "solve_concentration",
    "fit",
]

_BRACKET_OFFSET = 1e-9
_MAX_DOUBLINGS = 200


@dataclass
class FitResult:
    params: MoebParams
    log_likelihood: float
    barycenter_residual: float
    s_equation_residual: float
    n_obs: int
    iterations: int = 0

    def to_dict(self) -> dict:
        """JSON-ready mapping; complex coordinates become ``[re, im]`` pairs."""
        model = self.params.model
        return {
            "model": model.name,
            "d_or_m": model.dim,
            "a": [float(v) for v in np.ravel(model.to_real(self.params.a))],
            "s": float(self.params.s),
            "loglik": float(self.log_likelihood),
            "residuals": {
                "barycenter": float(self.barycenter_residual),
                "s_equation": float(self.s_equation_residual),
            },
            "n_obs": int(self.n_obs),
        }


def log_likelihood(params: MoebParams, X) -> float:
    """``N log c(s) - s H(a)`` for the configuration ``X``."""
    model = params.model
    X = model.check_points(X)
    n = X.shape[0]
    return n * log_normalizer(model, params.s) - params.s * potential(model, X, params.a)


def _closed_form_score(model: Model, s: float) -> float:
    if isinstance(model, Disc):
        return 1.0 / (s - 1.0)
    if isinstance(model, BergmanBall):
        return math.fsum(1.0 / (s - k) for k in range(1, model.dim + 1))
    d = model.dim
    if d % 2:
        raise DomainError(f"no finite closed form for odd d={d}")
    # psi(x + d/2) - psi(x) telescopes with x = 1 + s - d
    return math.fsum(1.0 / (1.0 + s - d + j) for j in range(d // 2))


def concentration_score(model: Model, s: float, method: str = "digamma") -> float:
    """Derivative of the log normalizer in ``s``.

    ``method="digamma"`` evaluates the digamma difference for every model;
    ``method="closed"`` uses the finite sums (disc, even-dimensional ball,
    Bergman).
    """
    bound = concentration_lower_bound(model)
    if not s > bound:
        raise DomainError(f"concentration for {model} must exceed {bound:g}, got {s!r}")
    if method == "closed":
        return _closed_form_score(model, s)
    if method != "digamma":
        raise DomainError(f"unknown method {method!r}")
    if isinstance(model, Disc):
        return 1.0 / (s - 1.0)
    if isinstance(model, PoincareBall):
        d = model.dim
        return digamma(1.0 + s - 0.5 * d) - digamma(1.0 + s - d)
    return digamma(s) - digamma(s - model.dim)


def s_equation_residual(model: Model, s: float, potential_per_obs: float,
                        method: str = "digamma") -> float:
    """``g(s) - H/N``; strictly decreasing in ``s``."""
    return concentration_score(model, s, method) - float(potential_per_obs)


def _quadratic_d4(c: float) -> float:
    # 1/(s-3) + 1/(s-2) = c  <=>  c s^2 - (5c + 2) s + (6c + 5) = 0, larger root
    b = 5.0 * c + 2.0
    disc = b * b - 4.0 * c * (6.0 * c + 5.0)
    return (b + math.sqrt(disc)) / (2.0 * c)


def solve_concentration(model: Model, potential_per_obs: float,
                        method: str = "digamma", tol: float = 1e-12) -> float:
    """Root ``s`` of :func:`s_equation_residual`.

    The disc root ``1 + N/H`` and, with ``method="closed"``, the four-ball
    quadratic root are returned directly. Otherwise the bracket starts at
    the bound plus 1e-9 and its upper end doubles its distance from the
    bound until the residual turns negative.
    """
    c = float(potential_per_obs)
    if not c > 0 or not math.isfinite(c):
        raise DegenerateDataError(f"potential per observation must be positive, got {c!r}")
    if isinstance(model, Disc):
        return 1.0 + 1.0 / c
    if method == "closed" and isinstance(model, PoincareBall) and model.dim == 4:
        return _quadratic_d4(c)
    bound = concentration_lower_bound(model)
    lo = bound + _BRACKET_OFFSET
    f = lambda s: s_equation_residual(model, s, c, method)  # noqa: E731
    width = 1.0
    for _ in range(_MAX_DOUBLINGS):
        hi = bound + width
        if f(hi) < 0:
            break
        lo = max(lo, hi)
        width *= 2.0
    else:
        raise ConvergenceError("could not bracket the concentration root")
    return find_root(f, (lo, hi), tol=tol * max(1.0, hi))


def fit(model: Model, X, params: SwarmParams = SwarmParams(),
        method: str = "digamma") -> FitResult:
    """Maximum-likelihood ``(a, s)``.

    Raises
    ------
    DegenerateDataError
        If all observations coincide, so that the likelihood grows without
        bound in ``s``.
    ConvergenceError
        If the barycenter flow does not reach ``params.residual_tol``.
    """
    X = model.check_points(X)
    n = X.shape[0]
    if np.all(X == X[0]):
        raise DegenerateDataError("all observations coincide; the concentration is unbounded")
    bary = barycenter(model, X, params)
    if not bary.converged:
        raise ConvergenceError(
            f"barycenter did not converge: residual {bary.residual:.3g} after "
            f"{bary.iterations} steps"
        )
    h = bary.potential
    s_hat = solve_concentration(model, h / n, method)
    est = MoebParams(model, bary.point, s_hat)
    return FitResult(
        params=est,
        log_likelihood=log_likelihood(est, X),
        barycenter_residual=bary.residual,
        s_equation_residual=s_equation_residual(model, s_hat, h / n, method),
        n_obs=n,
        iterations=bary.iterations,
    )
