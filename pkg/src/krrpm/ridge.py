"""Regularized kernel linear algebra shared by the predictors.

Fitting factors ``K + aI`` once (O(n^3)); every later test object costs a
single matrix-vector product with the stored inverse plus O(n) work.
"""
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from krrpm.errors import InputError, NumericError
from krrpm.kernels import KernelSpec, as_objects, kernel_matrix, kernel_vector

# Exact arithmetic keeps leverages below 1 and the Schur complement positive.
LEVERAGE_GUARD = 1e-12


@dataclass(frozen=True)
class FitState:
    """Cached training quantities.

    Attributes
    ----------
    objects : ndarray (n, d)
    labels : ndarray (n,)
    a : float
        Ridge parameter.
    kernel : KernelSpec
    gram : ndarray (n, n)
        Training kernel matrix ``K``.
    inv : ndarray (n, n)
        ``(K + aI)^{-1}``, symmetrized.
    train_predictions : ndarray (n,)
        ``H Y`` with ``H = (K + aI)^{-1} K``.
    train_leverage : ndarray (n,)
        Diagonal of ``H``; each entry in ``[0, 1)``.
    """

    objects: np.ndarray
    labels: np.ndarray
    a: float
    kernel: KernelSpec
    gram: np.ndarray
    inv: np.ndarray
    train_predictions: np.ndarray
    train_leverage: np.ndarray

    @property
    def n(self):
        return self.labels.shape[0]

    def hat(self):
        """Training hat matrix ``H = (K + aI)^{-1} K`` (O(n^3), diagnostics only)."""
        return self.inv @ self.gram


@dataclass(frozen=True)
class LeverageTerms:
    """Per-test quantities from the partitioned inverse.

    ``m = (K + aI)^{-1} k``; ``d = 1 / (kappa + a - k'm)``;
    ``one_minus_h_test = 1 - h_bar_{n+1} = ad``;
    ``one_minus_h[i] = 1 - h_i + ad * m_i^2``; ``bayes_mean = k' (K + aI)^{-1} Y``.
    """

    k: np.ndarray
    m: np.ndarray
    kappa: float
    d: float
    ad: float
    one_minus_h: np.ndarray
    bayes_mean: float
    kmk: float

    @property
    def one_minus_h_test(self):
        return self.ad


def _solve_inverse(K, a):
    n = K.shape[0]
    try:
        factor = cho_factor(K + a * np.eye(n), lower=True, check_finite=False)
    except LinAlgError as exc:
        raise NumericError(
            f"Cholesky factorization of K + aI failed (n={n}, a={a}); "
            f"min diag(K)={np.min(np.diag(K)):.3e}. Is the kernel PSD?"
        ) from exc
    M = cho_solve(factor, np.eye(n), check_finite=False)
    return 0.5 * (M + M.T)


def fit(objects, labels, kernel, a):
    """Precompute everything a test object needs.

    Parameters
    ----------
    objects : array-like (n, d)
    labels : array-like (n,)
    kernel : KernelSpec
    a : float
        Ridge parameter, strictly positive.

    Returns
    -------
    FitState
    """
    X = as_objects(objects)
    Y = np.asarray(labels, dtype=float).ravel()
    if X.shape[0] == 0:
        raise InputError("empty training set")
    if X.shape[0] != Y.shape[0]:
        raise InputError(f"{X.shape[0]} objects but {Y.shape[0]} labels")
    if not np.all(np.isfinite(Y)):
        raise InputError("labels contain NaN or infinite values")
    a = float(a)
    if not (np.isfinite(a) and a > 0):
        raise InputError(f"ridge parameter a must be positive, got {a}")
    K = kernel_matrix(kernel, X)
    M = _solve_inverse(K, a)
    y_hat = M @ (K @ Y)
    # diag(MK) without forming the product
    h = np.einsum("ij,ji->i", M, K)
    if np.any(h >= 1.0 - LEVERAGE_GUARD):
        i = int(np.argmax(h))
        raise NumericError(f"training leverage h[{i}] = {h[i]!r} is not below 1")
    for arr in (X, Y, K, M, y_hat, h):
        arr.setflags(write=False)
    return FitState(X, Y, a, kernel, K, M, y_hat, h)


def leverage_terms(state, test):
    """Quantities of the (n+1)-hat matrix obtained from training data alone."""
    k, kappa = kernel_vector(state.kernel, state.objects, test)
    m = state.inv @ k
    kmk = float(k @ m)
    denom = kappa + state.a - kmk
    if not denom > LEVERAGE_GUARD:
        raise NumericError(
            f"kappa + a - k'(K+aI)^-1 k = {denom!r} is not positive; kernel is not PSD"
        )
    d = 1.0 / denom
    ad = state.a * d
    one_minus_h = 1.0 - state.train_leverage + ad * m * m
    if np.any(one_minus_h <= LEVERAGE_GUARD):
        i = int(np.argmin(one_minus_h))
        raise NumericError(f"extended leverage 1 - h_bar[{i}] = {one_minus_h[i]!r}")
    bayes_mean = float(m @ state.labels)
    return LeverageTerms(k, m, kappa, d, ad, one_minus_h, bayes_mean, kmk)


def hat_matrix_full(objects, kernel, a):
    """Hat matrix ``(K + aI)^{-1} K`` by direct solve; used as an oracle."""
    X = as_objects(objects)
    K = kernel_matrix(kernel, X)
    n = K.shape[0]
    H = np.linalg.solve(K + float(a) * np.eye(n), K)
    return 0.5 * (H + H.T)


def partitioned_hat(state, test):
    """Assemble the (n+1)-hat matrix block-wise from the fitted state."""
    t = leverage_terms(state, test)
    n = state.n
    out = np.empty((n + 1, n + 1))
    out[:n, :n] = state.hat() - t.ad * np.outer(t.m, t.m)
    out[:n, n] = t.ad * t.m
    out[n, :n] = t.ad * t.m
    out[n, n] = t.d * t.kappa - t.d * t.kmk
    return out
