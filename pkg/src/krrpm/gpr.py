"""Gaussian-process (Bayesian ridge) predictive distribution."""
from dataclasses import dataclass
import math

import numpy as np
from scipy.special import ndtr

from krrpm.errors import InputError
from krrpm.ridge import leverage_terms


@dataclass(frozen=True)
class GaussianPrediction:
    mean: float
    variance: float
    sigma: float

    @property
    def std(self):
        return math.sqrt(self.variance)


def bayes_predict(state, test, sigma, terms=None):
    """Posterior predictive ``N(mean, variance)`` for the label of ``test``.

    The prior is ``cov(y_i, y_j) = (sigma^2 / a) K(x_i, x_j) + sigma^2 [i == j]``.
    Pass precomputed ``terms`` to share the matrix-vector product with a
    conformal prediction at the same test object.
    """
    sigma = float(sigma)
    if not (np.isfinite(sigma) and sigma > 0):
        raise InputError(f"sigma must be positive, got {sigma}")
    if terms is None:
        terms = leverage_terms(state, test)
    s2 = sigma * sigma
    variance = (s2 / state.a) * terms.kappa + s2 - (s2 / state.a) * terms.kmk
    return GaussianPrediction(terms.bayes_mean, variance, sigma)


def gaussian_cdf(pred, y):
    """Distribution function of ``pred`` at ``y`` (scalar or array)."""
    z = (np.asarray(y, dtype=float) - pred.mean) / pred.std
    p = ndtr(z)
    return float(p) if p.ndim == 0 else p
