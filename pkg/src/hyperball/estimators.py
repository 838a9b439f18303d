"""scikit-learn style wrappers around the barycenter and MLE routines.

Inputs are real coordinate arrays of shape ``(n_samples, n_features)``: two
features for the disc, ``d`` for the Poincare ball and ``2m`` (interleaved
real and imaginary parts) for the Bergman ball.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, DensityMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .barycenter import SwarmParams, barycenter
from .distributions import MoebParams, log_density, sample
from .estimation import fit as _fit
from .exceptions import ConvergenceError, DomainError
from .geometry import get_model

__all__ = ["ConformalBarycenter", "MoebiusDistribution"]


class _ModelMixin:
    def _model(self):
        return get_model(self.model, self.dim)

    def _solver(self, sample_weight=None):
        return SwarmParams(K=self.K, step=self.step, residual_tol=self.residual_tol,
                           max_steps=self.max_steps, weights=sample_weight)

    def _points(self, X, reset=False):
        X = check_array(X, dtype=np.float64, ensure_min_samples=1)
        model = self._model()
        if X.shape[1] != model.real_dim:
            raise DomainError(
                f"{model} needs {model.real_dim} features, got {X.shape[1]}"
            )
        if reset:
            self.n_features_in_ = X.shape[1]
        elif X.shape[1] != getattr(self, "n_features_in_", X.shape[1]):
            raise DomainError("feature count differs from the one seen in fit")
        return model, model.check_points(model.from_real(X))


class ConformalBarycenter(_ModelMixin, TransformerMixin, BaseEstimator):
    """Barycenter of a point cloud and the isometry that balances it.

    Parameters
    ----------
    model : {"disc", "ball", "bergman"}
    dim : int, optional
        Ball dimension ``d`` or Bergman dimension ``m``.
    K : float, default=-1.0
        Flow coupling, must be negative.
    step : float, default=0.05
    residual_tol : float, default=1e-10
    max_steps : int, default=1_000_000

    Attributes
    ----------
    barycenter_ : ndarray of shape (n_features,)
        Real coordinates of the barycenter.
    potential_ : float
    residual_ : float
    n_iter_ : int

    Notes
    -----
    ``transform`` applies the involution centered at the barycenter, which
    sends the fitted cloud to a balanced one; it is its own inverse.
    """

    def __init__(self, model="disc", dim=None, K=-1.0, step=0.05,
                 residual_tol=1e-10, max_steps=1_000_000):
        self.model = model
        self.dim = dim
        self.K = K
        self.step = step
        self.residual_tol = residual_tol
        self.max_steps = max_steps

    def fit(self, X, y=None, sample_weight=None):
        model, P = self._points(X, reset=True)
        if sample_weight is not None:
            sample_weight = np.asarray(sample_weight, dtype=float)
            sample_weight = sample_weight / sample_weight.sum()
        res = barycenter(model, P, self._solver(sample_weight))
        if not res.converged:
            raise ConvergenceError(f"barycenter did not converge (residual {res.residual:.3g})")
        self.point_ = res.point
        self.barycenter_ = model.to_real(res.point)
        self.potential_ = res.potential
        self.residual_ = res.residual
        self.n_iter_ = res.iterations
        return self

    def transform(self, X):
        check_is_fitted(self, "point_")
        model, P = self._points(X)
        return model.to_real(model.involution(self.point_, P))

    def inverse_transform(self, X):
        return self.transform(X)


class MoebiusDistribution(_ModelMixin, DensityMixin, BaseEstimator):
    """Isometry-invariant unimodal law on a hyperbolic ball, fitted by maximum likelihood.

    Parameters are as for :class:`ConformalBarycenter`.

    Attributes
    ----------
    location_ : ndarray of shape (n_features,)
    concentration_ : float
    log_likelihood_ : float
    params_ : MoebParams
    """

    def __init__(self, model="disc", dim=None, K=-1.0, step=0.05,
                 residual_tol=1e-10, max_steps=1_000_000):
        self.model = model
        self.dim = dim
        self.K = K
        self.step = step
        self.residual_tol = residual_tol
        self.max_steps = max_steps

    def fit(self, X, y=None):
        model, P = self._points(X, reset=True)
        result = _fit(model, P, self._solver())
        self.params_ = result.params
        self.location_ = model.to_real(result.params.a)
        self.concentration_ = result.params.s
        self.log_likelihood_ = result.log_likelihood
        self.fit_result_ = result
        return self

    def score_samples(self, X):
        """Log density of each row with respect to the hyperbolic measure."""
        check_is_fitted(self, "params_")
        _, P = self._points(X)
        return np.asarray(log_density(self.params_, P), dtype=float)

    def score(self, X, y=None):
        return float(np.sum(self.score_samples(X)))

    def sample(self, n_samples=1, random_state=None):
        check_is_fitted(self, "params_")
        rng = random_state
        if not isinstance(rng, np.random.Generator):
            rng = None if rng is None else int(rng)
        draws = sample(self.params_, n_samples, rng)
        return self.params_.model.to_real(draws)

    @classmethod
    def from_params(cls, model, location, concentration, dim=None):
        """Unfitted-data estimator carrying fixed parameters, e.g. for sampling."""
        est = cls(model=model, dim=dim)
        m = est._model()
        a = m.from_real(np.asarray(location, dtype=float))
        est.params_ = MoebParams(m, a, concentration)
        est.location_ = np.asarray(location, dtype=float)
        est.concentration_ = float(concentration)
        est.n_features_in_ = m.real_dim
        return est
