"""Moebius (Poincare ball) and holomorphically natural (Bergman ball) families.

The density of ``(a, s)`` with respect to the hyperbolic measure is

    p(x; a, s) = c(s) * (1 - |phi_a(x)|^2) ** s

with the normalizers

    disc     c = (s - 1) / pi                                  s > 1
    ball     c = pi^(-d/2) Gamma(1 + s - d/2) / Gamma(1 + s - d)   s > d - 1
    Bergman  c = pi^(-m) Gamma(s) / Gamma(s - m)                s > m

Densities are taken with respect to ``dLambda``, not Lebesgue measure; the
two differ by the factor ``(1 - |x|^2)^k`` of
:meth:`hyperball.geometry.Disc.measure_density`.

At ``a = 0`` the radius ``|x|`` has the law ``|x|^2 ~ Beta(p, q)`` with
``p`` half the real dimension and ``q = s - s_min``; samplers invert its
CDF and push the origin-centered draw to ``a`` by an isometry.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError
from .geometry import Disc, Model, PoincareBall, BergmanBall
from .numerics import (
    find_root,
    find_root_increasing,
    gauss_2f1,
    log_gamma,
    make_rng,
    uniform_sphere_direction,
)

__all__ = [
    "MoebParams",
    "concentration_lower_bound",
    "log_normalizer",
    "log_density",
    "radial_cdf",
    "radial_pdf",
    "radial_quantile",
    "sample",
    "sample_origin",
    "pushforward_params",
    "density_grid",
]

_QUANTILE_HI = 1.0 - 1e-15


def concentration_lower_bound(model: Model) -> float:
    """Open lower bound on the concentration ``s``: 1, d - 1 or m."""
    if isinstance(model, Disc):
        return 1.0
    if isinstance(model, PoincareBall):
        return float(model.dim - 1)
    if isinstance(model, BergmanBall):
        return float(model.dim)
    raise DomainError(f"unsupported model {model!r}")


def _check_s(model: Model, s: float) -> float:
    s = float(s)
    bound = concentration_lower_bound(model)
    if not s > bound or not math.isfinite(s):
        raise DomainError(f"concentration for {model} must exceed {bound:g}, got {s!r}")
    return s


@dataclass(frozen=True, eq=False)
class MoebParams:
    """Location ``a`` (a point of ``model``) and concentration ``s``."""

    model: Model
    a: np.ndarray
    s: float

    def __post_init__(self):
        object.__setattr__(self, "a", self.model.check_point(self.a))
        object.__setattr__(self, "s", _check_s(self.model, self.s))


def log_normalizer(model: Model, s: float) -> float:
    s = _check_s(model, s)
    if isinstance(model, Disc):
        return math.log(s - 1.0) - math.log(math.pi)
    if isinstance(model, PoincareBall):
        d = model.dim
        return log_gamma(1.0 + s - 0.5 * d) - log_gamma(1.0 + s - d) - 0.5 * d * math.log(math.pi)
    m = model.dim
    return log_gamma(s) - log_gamma(s - m) - m * math.log(math.pi)


def log_density(params: MoebParams, x):
    """Log density at ``x`` with respect to the hyperbolic measure."""
    model = params.model
    x = np.asarray(x, dtype=complex if model.is_complex else float)
    if x.shape == model.point_shape:
        model.check_point(x)
    else:
        model.check_points(x)
    return log_normalizer(model, params.s) + params.s * model.log_kernel(params.a, x)


# --------------------------------------------------------------------------
# radial law


def _beta_shape(model: Model, s: float) -> tuple[float, float]:
    return 0.5 * model.real_dim, s - concentration_lower_bound(model)


def _log_beta(p, q):
    return log_gamma(p) + log_gamma(q) - log_gamma(p + q)


def _incomplete_beta(p, q, x):
    """Regularized incomplete beta ``I_x(p, q)`` for ``x`` in ``[0, 1]``.

    Sums ``x^p (1 - x)^q / (p B(p, q)) * 2F1(p + q, 1; p + 1; x)``, the
    positive-term rearrangement of ``x^p / (p B) * 2F1(p, 1 - q; p + 1; x)``,
    below the switch point ``(p + 1) / (p + q + 2)`` and the same series for
    the complement in ``1 - x`` above it. Neither branch cancels, so the
    result stays accurate for large ``q``. Between the switch point and 1/2
    the direct branch is kept while its terms cannot overflow, since the
    complement converges slowly there.
    """
    x = np.asarray(x, dtype=float)
    out = np.where(x >= 1.0, 1.0, 0.0)
    inner = (x > 0.0) & (x < 1.0)
    log_b = _log_beta(p, q)
    switch = (p + 1.0) / (p + q + 2.0)
    direct = inner & ((x <= switch) | ((x <= 0.5) & (q * x <= 500.0)))
    comp = inner & ~direct
    if np.any(direct):
        xd = x[direct]
        logpre = p * np.log(xd) + q * np.log1p(-xd) - math.log(p) - log_b
        out[direct] = np.exp(logpre) * gauss_2f1(p + q, 1.0, p + 1.0, xd)
    if np.any(comp):
        xc = x[comp]
        y = 1.0 - xc
        logpre = q * np.log(y) + p * np.log(xc) - math.log(q) - log_b
        out[comp] = 1.0 - np.exp(logpre) * gauss_2f1(p + q, 1.0, q + 1.0, y)
    return out


def _check_b(b):
    b = np.asarray(b, dtype=float)
    if np.any(b < 0) or np.any(b > 1):
        raise DomainError("radius must lie in [0, 1]")
    return b


def radial_cdf(model: Model, s: float, b):
    """``P{|x| < b}`` for the origin-centered law of concentration ``s``.

    Disc: ``1 - (1 - b^2)^(s - 1)``. Ball and Bergman: the hypergeometric
    form ``C b^k / k * 2F1(k/2, 1 - q; k/2 + 1; b^2)`` with ``k`` the real
    dimension and ``q = s - s_min``, i.e. the regularized incomplete beta
    function ``I_{b^2}(k/2, q)``; see :func:`_incomplete_beta` for how it
    is summed.
    """
    s = _check_s(model, s)
    b = _check_b(b)
    x = b * b
    if isinstance(model, Disc):
        with np.errstate(divide="ignore"):
            out = -np.expm1((s - 1.0) * np.log1p(-x))
    else:
        p, q = _beta_shape(model, s)
        out = _incomplete_beta(p, q, x)
    out = np.clip(out, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def radial_pdf(model: Model, s: float, b):
    """Density of ``|x|`` on ``(0, 1)``: derivative of :func:`radial_cdf`."""
    s = _check_s(model, s)
    b = _check_b(b)
    p, q = _beta_shape(model, s)
    x = b * b
    with np.errstate(divide="ignore", invalid="ignore"):
        logv = (math.log(2.0) + (2 * p - 1) * np.log(b) + (q - 1) * np.log1p(-x)
                - _log_beta(p, q))
    out = np.exp(logv)
    return float(out) if out.ndim == 0 else out


def radial_quantile(model: Model, s: float, kappa):
    """Inverse of :func:`radial_cdf` for ``kappa`` in ``[0, 1)``.

    Closed form on the disc; a bracketed root solve on ``[0, 1 - 1e-15]``
    with tolerance 1e-12 for the other models. When ``s`` is close to its
    lower bound the CDF may still be short of ``kappa`` at ``1 - 1e-15``;
    such quantiles saturate there, as no float radius lies beyond it.
    """
    s = _check_s(model, s)
    k = np.asarray(kappa, dtype=float)
    if np.any(k < 0) or np.any(k >= 1):
        raise DomainError("kappa must lie in [0, 1)")
    if isinstance(model, Disc):
        out = np.sqrt(-np.expm1(np.log1p(-k) / (s - 1.0)))
    elif k.ndim == 0:
        kf = float(k)
        if kf == 0.0:
            return 0.0
        if radial_cdf(model, s, _QUANTILE_HI) <= kf:
            return _QUANTILE_HI
        out = np.asarray(find_root(lambda b: radial_cdf(model, s, b) - kf, (0.0, _QUANTILE_HI)))
    else:
        out = find_root_increasing(
            lambda b: radial_cdf(model, s, b),
            lambda b: radial_pdf(model, s, b),
            k, 0.0, _QUANTILE_HI, tol=1e-12,
        )
        out = np.where(k == 0.0, 0.0, out)
        out = np.where(radial_cdf(model, s, _QUANTILE_HI) <= k, _QUANTILE_HI, out)
    return float(out) if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------
# sampling


def sample_origin(model: Model, s: float, size: int, rng: np.random.Generator):
    """Draws from the origin-centered law: uniform direction times quantile radius.

    The direction is drawn first (``size`` Gaussian vectors), then the
    uniforms for the radii.
    """
    u = uniform_sphere_direction(rng, model.real_dim, size)
    kappa = rng.random(size)
    b = radial_quantile(model, s, kappa)
    return model.from_real(np.asarray(b)[:, None] * u)


def sample(params: MoebParams, size: int, rng=None):
    """``size`` independent draws from the family member ``params``.

    ``rng`` is a :class:`numpy.random.Generator` or a seed.
    """
    if not isinstance(rng, np.random.Generator):
        rng = make_rng(rng)
    size = int(size)
    if size < 1:
        raise DomainError("size must be positive")
    model = params.model
    y = sample_origin(model, params.s, size, rng)
    out = model.isometry_taking_origin_to(params.a).apply(y)
    # draws that round onto the rim are pulled back to the admissible margin
    sq = model.sqnorm(out)
    over = 1.0 - sq < 1e-15
    if np.any(over):
        scale = np.sqrt((1.0 - 1e-15) / sq[over])
        out[over] = out[over] * (scale if out.ndim == 1 else scale[:, None])
    return out


def pushforward_params(params: MoebParams, g) -> MoebParams:
    """Parameters of the image law under an isometry ``g``: ``(g(a), s)``."""
    if g.model != params.model:
        raise DomainError(f"isometry of {g.model} cannot act on {params.model}")
    return MoebParams(params.model, g.apply(params.a), params.s)


def density_grid(params: MoebParams, resolution: int):
    """Density on a ``resolution x resolution`` grid over ``[-1, 1]^2``.

    For models of real dimension above two the grid is the slice spanned by
    the first two real coordinates. Returns ``(xs, ys, density)`` with NaN
    outside the ball; ``density[i, j]`` belongs to ``(xs[j], ys[i])``.
    """
    resolution = int(resolution)
    if resolution < 2:
        raise DomainError("resolution must be at least 2")
    model = params.model
    # cell centers
    xs = -1.0 + (np.arange(resolution) + 0.5) * (2.0 / resolution)
    gx, gy = np.meshgrid(xs, xs)
    inside = gx**2 + gy**2 < 1.0 - 1e-12
    V = np.zeros((int(inside.sum()), model.real_dim))
    V[:, 0] = gx[inside]
    V[:, 1] = gy[inside]
    dens = np.full(gx.shape, np.nan)
    dens[inside] = np.exp(log_density(params, model.from_real(V)))
    return xs, xs.copy(), dens
