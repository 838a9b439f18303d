"""Ball models of hyperbolic space and their isometry groups.

Three models are supported:

* ``Disc`` -- the Poincare disc, points are complex scalars;
* ``PoincareBall(d)`` -- the real unit ball in ``R^d``;
* ``BergmanBall(m)`` -- the complex unit ball in ``C^m``.

Point arrays are stacked along the first axis: a disc configuration is a
complex array of shape ``(N,)``, a ball configuration a real ``(N, d)``
array and a Bergman configuration a complex ``(N, m)`` array. A single
point drops the leading axis.

Every ``1 - |.|^2`` of a transformed point is computed from the closed-form
identities rather than from the transformed coordinates, which keeps the
quantities positive right up to the boundary.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .exceptions import DomainError

BOUNDARY_MARGIN = 1e-15

__all__ = [
    "BOUNDARY_MARGIN",
    "Disc",
    "PoincareBall",
    "BergmanBall",
    "Model",
    "get_model",
    "DiscIsometry",
    "BallIsometry",
    "BergmanIsometry",
    "disc_apply",
    "disc_involution",
    "disc_distance",
    "rho",
    "ball_involution",
    "ball_apply",
    "ball_distance",
    "one_minus_sq_pushed_ball",
    "ball_jacobian",
    "bergman_involution",
    "bergman_apply",
    "bergman_distance",
    "one_minus_sq_pushed_bergman",
    "bergman_jacobian",
    "hyperbolic_measure_density",
    "isometry_taking_origin_to",
    "pairwise_distance_matrix",
]


def _distance_from_pushed(r_sq_complement, r):
    # 0.5 * log((1 + R) / (1 - R)) = log(1 + R) - 0.5 * log(1 - R^2)
    return np.log1p(r) - 0.5 * np.log(r_sq_complement)


# --------------------------------------------------------------------------
# Poincare disc


def disc_involution(a, z):
    """``(a - z) / (1 - conj(a) z)``, the disc Moebius map swapping ``a`` and 0."""
    a = np.asarray(a, dtype=complex)
    z = np.asarray(z, dtype=complex)
    return (a - z) / (1.0 - np.conj(a) * z)


def disc_apply(g: "DiscIsometry", z):
    return np.exp(1j * g.theta) * disc_involution(g.a, z)


def _disc_one_minus_sq(a, z):
    a = np.asarray(a, dtype=complex)
    z = np.asarray(z, dtype=complex)
    return (1.0 - abs(a) ** 2) * (1.0 - np.abs(z) ** 2) / np.abs(1.0 - np.conj(a) * z) ** 2


def disc_distance(z, w):
    """Hyperbolic distance ``artanh |g_w(z)|`` in the disc."""
    r = np.abs(disc_involution(w, z))
    return _distance_from_pushed(_disc_one_minus_sq(w, z), r)


# --------------------------------------------------------------------------
# Poincare ball


def _sq(x):
    x = np.asarray(x)
    if np.iscomplexobj(x):
        return np.sum(x.real**2 + x.imag**2, axis=-1)
    return np.sum(x * x, axis=-1)


def rho(x, a):
    """``|x - a|^2 + (1 - |a|^2)(1 - |x|^2)``; symmetric and positive inside the ball."""
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=float)
    return _sq(x - a) + (1.0 - _sq(a)) * (1.0 - _sq(x))


def ball_involution(a, x):
    """Boost ``h_a`` of the Poincare ball (orthogonal part equal to the identity)."""
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    diff = a - x
    dsq = _sq(diff)
    c = 1.0 - _sq(a)
    rho_xa = dsq + c * (1.0 - _sq(x))
    return (a * dsq[..., None] + c * diff) / rho_xa[..., None]


def ball_apply(h: "BallIsometry", x):
    return ball_involution(h.a, x) @ h.A.T


def one_minus_sq_pushed_ball(a, x):
    """``1 - |h_a(x)|^2`` via ``(1 - |a|^2)(1 - |x|^2) / rho(x, a)``."""
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    return (1.0 - _sq(a)) * (1.0 - _sq(x)) / rho(x, a)


def ball_distance(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    p = rho(x, y)
    r = np.sqrt(_sq(x - y) / p)
    return _distance_from_pushed((1.0 - _sq(x)) * (1.0 - _sq(y)) / p, r)


def ball_jacobian(a, x):
    """Absolute Jacobian determinant of ``x -> h_a(x)``."""
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    return (one_minus_sq_pushed_ball(a, x) / (1.0 - _sq(x))) ** d


# --------------------------------------------------------------------------
# Bergman ball


def _cinner(z, w):
    """Hermitian product ``<z, w> = sum z_k conj(w_k)`` along the last axis."""
    return np.sum(z * np.conj(w), axis=-1)


def bergman_involution(a, z):
    """Holomorphic involution ``m_a(z) = (a - P_a z - s_a Q_a z) / (1 - <z, a>)``."""
    a = np.asarray(a, dtype=complex)
    z = np.asarray(z, dtype=complex)
    aa = float(_sq(a))
    za = _cinner(z, a)
    if aa == 0.0:
        return -z
    proj = (za / aa)[..., None] * a
    s_a = np.sqrt(1.0 - aa)
    return (a - proj - s_a * (z - proj)) / (1.0 - za)[..., None]


def bergman_apply(q: "BergmanIsometry", z):
    return bergman_involution(q.a, z) @ q.U.T


def one_minus_sq_pushed_bergman(a, z):
    """``1 - |m_a(z)|^2`` via ``(1 - |z|^2)(1 - |a|^2) / |1 - <a, z>|^2``."""
    a = np.asarray(a, dtype=complex)
    z = np.asarray(z, dtype=complex)
    return (1.0 - _sq(z)) * (1.0 - _sq(a)) / np.abs(1.0 - _cinner(a, z)) ** 2


def bergman_distance(z, w):
    r = np.sqrt(_sq(bergman_involution(w, z)))
    return _distance_from_pushed(one_minus_sq_pushed_bergman(w, z), r)


def bergman_jacobian(a, z):
    """Real Jacobian determinant of ``z -> m_a(z)`` (squared modulus of the complex one)."""
    a = np.asarray(a, dtype=complex)
    z = np.asarray(z, dtype=complex)
    m = z.shape[-1]
    return ((1.0 - _sq(a)) / np.abs(1.0 - _cinner(z, a)) ** 2) ** (m + 1)


# --------------------------------------------------------------------------
# isometries


class _IsometryOps:
    model: "Model"

    def __call__(self, x):
        return self.apply(x)

    def compose(self, other):
        """Factored form of ``self o other``.

        The center of the composite is its preimage of the origin; the
        rotation part is read off the composite restricted to a frame at the
        origin, where it acts linearly.
        """
        center = other.inverse().apply(self.inverse().apply(self.model.origin()))
        return self.model._compose_from(lambda x: self.apply(other.apply(x)), center)


@dataclass(frozen=True)
class DiscIsometry(_IsometryOps):
    """``z -> exp(i theta) (a - z) / (1 - conj(a) z)``."""

    theta: float
    a: complex

    def __post_init__(self):
        object.__setattr__(self, "theta", float(self.theta) % (2 * np.pi))
        object.__setattr__(self, "a", complex(Disc().check_point(self.a)))

    @property
    def model(self):
        return Disc()

    def apply(self, z):
        return disc_apply(self, z)

    def inverse(self) -> "DiscIsometry":
        return DiscIsometry(-self.theta, np.exp(1j * self.theta) * self.a)


@dataclass(frozen=True, eq=False)
class BallIsometry(_IsometryOps):
    """``x -> A h_a(x)`` with ``A`` orthogonal."""

    A: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        a = np.asarray(self.a, dtype=float)
        if A.shape != (a.size, a.size):
            raise DomainError("rotation and center dimensions disagree")
        if not np.allclose(A.T @ A, np.eye(a.size), atol=1e-12, rtol=0):
            raise DomainError("rotation part is not orthogonal")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "a", PoincareBall(a.size).check_point(a))

    @property
    def model(self):
        return PoincareBall(self.a.size)

    def apply(self, x):
        return ball_apply(self, x)

    def inverse(self) -> "BallIsometry":
        # h_a(A^T y) = A^T h_{A a}(y)
        return BallIsometry(self.A.T, self.A @ self.a)


@dataclass(frozen=True, eq=False)
class BergmanIsometry(_IsometryOps):
    """``z -> U m_a(z)`` with ``U`` unitary."""

    U: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        U = np.asarray(self.U, dtype=complex)
        a = np.asarray(self.a, dtype=complex)
        if U.shape != (a.size, a.size):
            raise DomainError("unitary and center dimensions disagree")
        if not np.allclose(U.conj().T @ U, np.eye(a.size), atol=1e-12, rtol=0):
            raise DomainError("rotation part is not unitary")
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "a", BergmanBall(a.size).check_point(a))

    @property
    def model(self):
        return BergmanBall(self.a.size)

    def apply(self, z):
        return bergman_apply(self, z)

    def inverse(self) -> "BergmanIsometry":
        return BergmanIsometry(self.U.conj().T, self.U @ self.a)


Isometry = Union[DiscIsometry, BallIsometry, BergmanIsometry]


# --------------------------------------------------------------------------
# model objects


@dataclass(frozen=True)
class _BallModel:
    """Shared behaviour of the three ball models."""

    name: str = field(init=False)
    dim: int

    # -- shapes and validation ------------------------------------------
    @property
    def real_dim(self) -> int:
        raise NotImplementedError

    @property
    def measure_exponent(self) -> int:
        """Exponent ``k`` in ``dLambda = dlambda / (1 - |x|^2)^k``."""
        raise NotImplementedError

    @property
    def is_complex(self) -> bool:
        raise NotImplementedError

    @property
    def point_shape(self) -> tuple:
        return (self.dim,)

    def origin(self):
        return np.zeros(self.point_shape, dtype=complex if self.is_complex else float)

    def sqnorm(self, x):
        """``|x|^2`` for a point or a stack of points."""
        return _sq(x)

    def norm(self, x):
        return np.sqrt(self.sqnorm(x))

    def check_points(self, X):
        """Validate a configuration; returns an array of shape ``(N,) + point_shape``."""
        X = np.asarray(X, dtype=complex if self.is_complex else float)
        if X.ndim != len(self.point_shape) + 1 or X.shape[1:] != self.point_shape:
            raise DomainError(
                f"expected points of shape (N, {', '.join(map(str, self.point_shape))}) "
                f"for {self}, got {X.shape}"
            )
        if X.shape[0] < 1:
            raise DomainError("a configuration needs at least one point")
        self._check_interior(X)
        return X

    def check_point(self, x):
        x = np.asarray(x, dtype=complex if self.is_complex else float)
        if x.shape != self.point_shape:
            raise DomainError(f"expected a point of shape {self.point_shape}, got {x.shape}")
        self._check_interior(x)
        return x

    def _check_interior(self, X):
        if not np.all(np.isfinite(X)):
            raise DomainError("points must be finite")
        if np.any(1.0 - self.sqnorm(X) < BOUNDARY_MARGIN):
            raise DomainError("points must lie strictly inside the unit ball")

    # -- real coordinates -----------------------------------------------
    def to_real(self, X):
        """Flatten points to real coordinates (complex entries become re, im pairs)."""
        X = np.asarray(X)
        if not self.is_complex:
            return np.asarray(X, dtype=float)
        Z = X[..., None] if self.point_shape == () else X
        out = np.empty(Z.shape[:-1] + (2 * Z.shape[-1],))
        out[..., 0::2] = Z.real
        out[..., 1::2] = Z.imag
        return out

    def from_real(self, V):
        V = np.asarray(V, dtype=float)
        if V.shape[-1] != self.real_dim:
            raise DomainError(f"expected {self.real_dim} real coordinates, got {V.shape[-1]}")
        if not self.is_complex:
            return V
        Z = V[..., 0::2] + 1j * V[..., 1::2]
        return Z[..., 0] if self.point_shape == () else Z

    # -- geometry ---------------------------------------------------------
    def involution(self, a, x):
        """The involutive isometry exchanging ``a`` and the origin."""
        raise NotImplementedError

    def one_minus_sq_pushed(self, a, x):
        raise NotImplementedError

    def distance(self, x, y):
        raise NotImplementedError

    def measure_density(self, x):
        """Density of the hyperbolic measure with respect to Lebesgue measure."""
        return (1.0 - self.sqnorm(x)) ** (-self.measure_exponent)

    def log_kernel(self, a, x):
        """``log(1 - |phi_a(x)|^2)``, the log-argument of potentials and densities."""
        return np.log(self.one_minus_sq_pushed(a, x))

    def jacobian(self, a, x):
        """Real Jacobian determinant of the involution centered at ``a``."""
        raise NotImplementedError

    # -- group ------------------------------------------------------------
    def identity_rotation(self):
        raise NotImplementedError

    def isometry(self, rotation, center):
        raise NotImplementedError

    def isometry_taking_origin_to(self, a):
        return self.isometry(self.identity_rotation(), a)

    def random_rotation(self, rng):
        raise NotImplementedError

    def _compose_from(self, fn, center):
        raise NotImplementedError


@dataclass(frozen=True)
class Disc(_BallModel):
    dim: int = 1
    name: str = field(init=False, default="disc")

    def __post_init__(self):
        if self.dim != 1:
            raise DomainError("the disc has complex dimension 1")

    def __str__(self):
        return "disc"

    real_dim = property(lambda self: 2)
    measure_exponent = property(lambda self: 2)
    is_complex = property(lambda self: True)
    point_shape = property(lambda self: ())

    def sqnorm(self, x):
        return np.abs(x) ** 2

    def involution(self, a, x):
        return disc_involution(a, x)

    def one_minus_sq_pushed(self, a, x):
        return _disc_one_minus_sq(a, x)

    def distance(self, x, y):
        return disc_distance(x, y)

    def jacobian(self, a, x):
        return (self.one_minus_sq_pushed(a, x) / (1.0 - np.abs(x) ** 2)) ** 2

    def identity_rotation(self):
        return 0.0

    def isometry(self, rotation, center):
        return DiscIsometry(rotation, center)

    def random_rotation(self, rng):
        return float(rng.uniform(0.0, 2 * np.pi))

    def _compose_from(self, fn, center):
        z0 = 0.5 if abs(center - 0.5) > 0.25 else -0.5
        phase = fn(np.complex128(z0)) / disc_involution(center, z0)
        return DiscIsometry(float(np.angle(phase)), center)


@dataclass(frozen=True)
class PoincareBall(_BallModel):
    dim: int = 2
    name: str = field(init=False, default="ball")

    def __post_init__(self):
        if self.dim < 2:
            raise DomainError("the Poincare ball needs dimension d >= 2")

    def __str__(self):
        return f"ball(d={self.dim})"

    real_dim = property(lambda self: self.dim)
    measure_exponent = property(lambda self: self.dim)
    is_complex = property(lambda self: False)

    def involution(self, a, x):
        return ball_involution(a, x)

    def one_minus_sq_pushed(self, a, x):
        return one_minus_sq_pushed_ball(a, x)

    def distance(self, x, y):
        return ball_distance(x, y)

    def jacobian(self, a, x):
        return ball_jacobian(a, x)

    def identity_rotation(self):
        return np.eye(self.dim)

    def isometry(self, rotation, center):
        return BallIsometry(rotation, center)

    def random_rotation(self, rng):
        q, r = np.linalg.qr(rng.standard_normal((self.dim, self.dim)))
        return q * np.sign(np.diag(r))

    def _compose_from(self, fn, center):
        t = 0.5
        frame = self.involution(center, t * np.eye(self.dim))
        A = (fn(frame) / t).T
        return BallIsometry(_nearest_orthogonal(A), center)


@dataclass(frozen=True)
class BergmanBall(_BallModel):
    dim: int = 1
    name: str = field(init=False, default="bergman")

    def __post_init__(self):
        if self.dim < 1:
            raise DomainError("the Bergman ball needs dimension m >= 1")

    def __str__(self):
        return f"bergman(m={self.dim})"

    real_dim = property(lambda self: 2 * self.dim)
    measure_exponent = property(lambda self: self.dim + 1)
    is_complex = property(lambda self: True)

    def involution(self, a, x):
        return bergman_involution(a, x)

    def one_minus_sq_pushed(self, a, x):
        return one_minus_sq_pushed_bergman(a, x)

    def distance(self, x, y):
        return bergman_distance(x, y)

    def jacobian(self, a, x):
        return bergman_jacobian(a, x)

    def identity_rotation(self):
        return np.eye(self.dim, dtype=complex)

    def isometry(self, rotation, center):
        return BergmanIsometry(rotation, center)

    def random_rotation(self, rng):
        m = self.dim
        g = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
        q, r = np.linalg.qr(g)
        d = np.diag(r)
        return q * (d / np.abs(d))

    def _compose_from(self, fn, center):
        t = 0.5
        frame = self.involution(center, t * np.eye(self.dim, dtype=complex))
        U = (fn(frame) / t).T
        return BergmanIsometry(_nearest_orthogonal(U), center)


def _nearest_orthogonal(M):
    # removes rounding drift from a matrix that is orthogonal/unitary in exact arithmetic
    u, _, vh = np.linalg.svd(M)
    return u @ vh


Model = Union[Disc, PoincareBall, BergmanBall]

MODEL_NAMES = ("disc", "ball", "bergman")


def get_model(name: str, dim: int | None = None) -> Model:
    """Model instance from its name; ``dim`` is d for the ball and m for Bergman."""
    name = name.lower()
    if name == "disc":
        if dim not in (None, 1, 2):
            raise DomainError("the disc has no dimension parameter")
        return Disc()
    if name == "ball":
        return PoincareBall(3 if dim is None else int(dim))
    if name == "bergman":
        return BergmanBall(1 if dim is None else int(dim))
    raise DomainError(f"unknown model {name!r}; expected one of {MODEL_NAMES}")


# --------------------------------------------------------------------------
# model-dispatching helpers


def _model_of_point(x) -> Model:
    x = np.asarray(x)
    if x.ndim == 0:
        return Disc()
    if np.iscomplexobj(x):
        return BergmanBall(x.shape[-1])
    return PoincareBall(x.shape[-1])


def hyperbolic_measure_density(model: Model, x):
    """``dLambda / dlambda`` at ``x``: ``(1 - |x|^2)^-k`` with k = 2, d or m + 1."""
    return model.measure_density(x)


def isometry_taking_origin_to(a, model: Model | None = None) -> Isometry:
    """Isometry with identity rotation part sending the origin to ``a``."""
    model = model or _model_of_point(a)
    return model.isometry_taking_origin_to(a)


def pairwise_distance_matrix(model: Model, X) -> np.ndarray:
    X = model.check_points(X)
    n = X.shape[0]
    D = np.zeros((n, n))
    for i in range(n - 1):
        D[i, i + 1:] = model.distance(X[i + 1:], X[i])
    D = D + D.T
    return D
