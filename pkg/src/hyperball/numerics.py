"""Special functions, ODE stepping, root finding and random streams.

Everything here is model-agnostic support code for the geometry, barycenter
and distribution modules.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np
from scipy import optimize

from .exceptions import ConvergenceError, DomainError, StepFailure

__all__ = [
    "log_gamma",
    "digamma",
    "gauss_2f1",
    "StepControl",
    "rk4_step",
    "rk4_stepper",
    "integrate_ode",
    "find_root",
    "find_root_increasing",
    "make_rng",
    "uniform_sphere_direction",
]

_DIGAMMA_SHIFT = 10.0
# B_{2k} / (2k) for k = 1..6
_DIGAMMA_COEFS = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
)
_HYP2F1_MAX_TERMS = 100_000
_HYP2F1_RTOL = 1e-13


def log_gamma(x: float) -> float:
    """Natural logarithm of the Gamma function for ``x > 0``."""
    if not x > 0:
        raise DomainError(f"log_gamma requires x > 0, got {x!r}")
    return math.lgamma(x)


def digamma(x):
    """Logarithmic derivative of the Gamma function.

    Shifts the argument upward with ``psi(x) = psi(x + 1) - 1/x`` until it
    exceeds 10, then applies the asymptotic Bernoulli series. Accepts scalars
    or arrays; absolute error is below 1e-13 on ``x > 0``.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("digamma requires x > 0")
    x = arr.copy()
    acc = np.zeros_like(x)
    low = x < _DIGAMMA_SHIFT
    while np.any(low):
        acc[low] -= 1.0 / x[low]
        x[low] += 1.0
        low = x < _DIGAMMA_SHIFT
    inv2 = 1.0 / (x * x)
    series = np.zeros_like(x)
    for coef in reversed(_DIGAMMA_COEFS):
        series = (series + coef) * inv2
    out = acc + np.log(x) - 0.5 / x - series
    return float(out) if out.ndim == 0 else out


def _nonpositive_integer(v: float) -> bool:
    return v <= 0 and float(v).is_integer()


def gauss_2f1(a: float, b: float, c: float, x):
    """Gauss hypergeometric series 2F1(a, b; c; x) for ``0 <= x < 1``.

    Summed term by term. A non-positive integer ``a`` or ``b`` makes the
    series a polynomial, which is summed exactly. Otherwise summation stops
    once the geometric bound on the remaining tail drops below 1e-13 of the
    partial sum. ``x`` may be an array.

    Accuracy is relative to the sum of the absolute terms: when the terms
    alternate and nearly cancel (``b`` very negative, ``x`` near 1) the
    relative error grows by the ratio of that sum to the result.
    """
    if _nonpositive_integer(c):
        raise DomainError(f"2F1 undefined for non-positive integer c={c!r}")
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0) or np.any(xs >= 1):
        raise DomainError("gauss_2f1 requires 0 <= x < 1")

    n_terms = None
    for p in (a, b):
        if _nonpositive_integer(p):
            n = int(-p) + 1
            n_terms = n if n_terms is None else min(n_terms, n)

    flat = xs.ravel()
    total = np.ones_like(flat)
    term = np.ones_like(flat)
    idx = np.arange(flat.size)  # entries still being summed
    limit = n_terms if n_terms is not None else _HYP2F1_MAX_TERMS
    for k in range(limit - 1):
        xk = flat[idx]
        term = term * ((a + k) * (b + k) / ((c + k) * (k + 1.0))) * xk
        total[idx] += term
        if n_terms is not None:
            continue
        ratio = abs((a + k + 1) * (b + k + 1) / ((c + k + 1) * (k + 2.0))) * xk
        bound_ratio = np.maximum(ratio, xk)
        with np.errstate(divide="ignore", invalid="ignore"):
            tail = np.abs(term) * bound_ratio / (1.0 - bound_ratio)
        keep = ~((ratio < 1.0) & (tail <= _HYP2F1_RTOL * np.abs(total[idx])))
        idx = idx[keep]
        term = term[keep]
        if idx.size == 0:
            break
    else:
        if n_terms is None and idx.size:
            raise ConvergenceError(
                f"2F1({a}, {b}; {c}; x) did not converge in {_HYP2F1_MAX_TERMS} terms"
            )
    total = total.reshape(xs.shape)
    return float(total) if total.ndim == 0 else total


@dataclass(frozen=True)
class StepControl:
    """Step-size policy for :func:`integrate_ode`.

    With ``tol=None`` steps have the fixed size ``h``; otherwise each step is
    checked against two half steps and the size adapts so that the local
    error estimate stays below ``tol``, never exceeding ``h_max``.
    """

    h: float = 1e-3
    tol: float | None = None
    h_max: float = math.inf
    h_min: float = 1e-14
    max_halvings: int = 50

    def __post_init__(self):
        if not self.h > 0:
            raise DomainError("step size must be positive")
        if self.tol is not None and not self.tol > 0:
            raise DomainError("step tolerance must be positive")


Field = Callable[[float, np.ndarray], np.ndarray]


def rk4_step(field: Field, t: float, y: np.ndarray, h: float) -> np.ndarray:
    """One classical fourth-order Runge-Kutta step."""
    k1 = field(t, y)
    k2 = field(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = field(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = field(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _max_abs(v) -> float:
    return float(np.max(np.abs(v))) if np.size(v) else 0.0


def rk4_stepper(
    field: Field,
    y0,
    control: StepControl,
    admissible: Callable[[np.ndarray], bool] | None = None,
    t0: float = 0.0,
    t_end: float | None = None,
) -> Iterator[tuple[float, np.ndarray]]:
    """Yield ``(t, y)`` after every accepted step, starting after ``t0``.

    A step whose result fails ``admissible`` is retried with half the size;
    ``StepFailure`` is raised after ``control.max_halvings`` consecutive
    halvings. The generator is exhausted at ``t_end`` when one is given.
    """
    y = np.array(y0, copy=True)
    t = float(t0)
    h = float(control.h)
    if control.tol is not None:
        h = min(h, control.h_max)
    while t_end is None or t < t_end:
        step = h
        if t_end is not None and t_end - t <= h * (1 + 1e-9):
            # absorb rounding slivers into the final step
            step = t_end - t
        halvings = 0
        while True:
            if control.tol is None:
                y_new = rk4_step(field, t, y, step)
                err = 0.0
            else:
                full = rk4_step(field, t, y, step)
                half = rk4_step(field, t, y, 0.5 * step)
                y_new = rk4_step(field, t + 0.5 * step, half, 0.5 * step)
                err = _max_abs(y_new - full) / 15.0
            ok = np.all(np.isfinite(y_new)) and (admissible is None or admissible(y_new))
            if ok and (control.tol is None or err <= control.tol):
                break
            halvings += 1
            if halvings > control.max_halvings or step < control.h_min:
                raise StepFailure(
                    f"step at t={t:.6g} failed after {halvings - 1} halvings"
                )
            if ok and control.tol is not None:
                shrink = 0.9 * (control.tol / err) ** 0.2
                step *= min(0.5, max(0.1, shrink))
            else:
                step *= 0.5
        t = t + step if t_end is None or step < t_end - t else t_end
        y = y_new
        if control.tol is not None:
            grow = 2.0 if err == 0.0 else min(2.0, 0.9 * (control.tol / err) ** 0.2)
            h = min(control.h_max, max(step, step * grow))
        yield t, y


def integrate_ode(
    field: Field,
    y0,
    t_end: float,
    control: StepControl = StepControl(),
    admissible: Callable[[np.ndarray], bool] | None = None,
    every: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate ``y' = field(t, y)`` from ``t = 0`` to ``t_end``.

    Returns the sample times and states. The initial state and the endpoint
    are always included; in between every ``every``-th accepted step is kept.
    """
    if t_end < 0:
        raise DomainError("t_end must be non-negative")
    y0 = np.asarray(y0)
    times, states = [0.0], [np.array(y0, copy=True)]
    last = None
    for i, (t, y) in enumerate(rk4_stepper(field, y0, control, admissible, 0.0, t_end), 1):
        last = (t, y)
        if i % every == 0:
            times.append(t)
            states.append(y)
    if last is not None and times[-1] != last[0]:
        times.append(last[0])
        states.append(last[1])
    return np.asarray(times), np.asarray(states)


def find_root(
    f: Callable[[float], float],
    bracket: tuple[float, float],
    tol: float = 1e-12,
    max_iter: int = 200,
) -> float:
    """Root of a continuous scalar function on a sign-changing bracket.

    Brent's method: bisection safeguarding secant and inverse quadratic steps.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise DomainError(f"invalid bracket [{lo}, {hi}]")
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise DomainError(
            f"bracket [{lo}, {hi}] does not change sign ({f_lo:.3g}, {f_hi:.3g})"
        )
    try:
        return optimize.brentq(f, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps,
                               maxiter=max_iter)
    except RuntimeError as exc:
        raise ConvergenceError(str(exc)) from exc


def find_root_increasing(f, fprime, target, lo, hi, tol=1e-12, max_iter=200):
    """Elementwise solve ``f(x) = target`` for an increasing ``f`` on ``[lo, hi]``.

    Newton steps are taken when they stay inside the current bracket and
    bisection otherwise, so the bracket shrinks monotonically. Entries stop
    once a step or the bracket is below ``tol``; one further Newton step
    then polishes them. ``target`` is an array, ``lo`` and ``hi`` scalars
    bounding every root; ``f`` and ``fprime`` must accept arrays.
    """
    target = np.asarray(target, dtype=float)
    flat = target.ravel()
    out = np.empty_like(flat)
    idx = np.arange(flat.size)
    a = np.full(flat.size, float(lo))
    b = np.full(flat.size, float(hi))
    x = 0.5 * (a + b)
    for _ in range(max_iter):
        g = f(x) - flat[idx]
        a = np.where(g <= 0, x, a)
        b = np.where(g > 0, x, b)
        d = fprime(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = x - g / d
        inside = np.isfinite(newton) & (newton > a) & (newton < b)
        x_new = np.where(inside, newton, 0.5 * (a + b))
        done = (np.abs(x_new - x) <= tol) | (b - a <= tol)
        if np.any(done):
            xd = x_new[done]
            with np.errstate(divide="ignore", invalid="ignore"):
                polished = xd - (f(xd) - flat[idx[done]]) / fprime(xd)
            ok = np.isfinite(polished) & (polished >= a[done]) & (polished <= b[done])
            out[idx[done]] = np.where(ok, polished, xd)
            keep = ~done
            idx, a, b, x_new = idx[keep], a[keep], b[keep], x_new[keep]
        x = x_new
        if idx.size == 0:
            return out.reshape(target.shape)
    raise ConvergenceError("vectorized root solve did not converge")


def make_rng(seed: int | None) -> np.random.Generator:
    """Random stream used throughout the library (numpy PCG64)."""
    if seed is not None and not 0 <= int(seed) < 2**64:
        raise DomainError("seed must be a 64-bit unsigned integer")
    return np.random.Generator(np.random.PCG64(seed))


def uniform_sphere_direction(rng: np.random.Generator, dim: int, size: int | None = None):
    """Uniform unit vector(s) in ``R^dim`` from normalized Gaussian draws."""
    if dim < 1:
        raise DomainError("dim must be at least 1")
    n = 1 if size is None else int(size)
    v = rng.standard_normal((n, dim))
    norms = np.linalg.norm(v, axis=1)
    bad = norms == 0.0
    while np.any(bad):
        v[bad] = rng.standard_normal((int(bad.sum()), dim))
        norms = np.linalg.norm(v, axis=1)
        bad = norms == 0.0
    v /= norms[:, None]
    return v[0] if size is None else v
