"""Pure numpy implementations of the hot kernels.

Mirrors :mod:`krrpm._core` function by function; selected automatically
when the compiled extension is missing or ``KRRPM_PURE_PYTHON=1``.
"""
import numpy as np


def _mirror_upper(G):
    return np.triu(G) + np.triu(G, 1).T


def laplacian_gram(X, Z, scale):
    diff = X[:, None, :] - Z[None, :, :]
    return np.exp(-np.sqrt(np.sum(diff * diff, axis=2)) / scale)


def laplacian_gram_sym(X, scale):
    return _mirror_upper(laplacian_gram(X, X, scale))


def trig2d_gram(X, Z):
    return np.cos(X[:, None, 0] - Z[None, :, 0]) + np.cos(X[:, None, 1] - Z[None, :, 1])


def trig2d_gram_sym(X):
    return _mirror_upper(trig2d_gram(X, X))


def critical_values(resid, m, one_minus_h, ad, mean, p):
    """Return the slope-intercept pairs ``(A, B)`` of the conformity difference.

    ``p`` is the exponent applied to ``1 - h_bar_i``: 0.5 studentized,
    0 ordinary, 1 deleted.
    """
    if p == 0.5:
        s = np.sqrt(one_minus_h)
    elif p == 0.0:
        s = np.ones_like(one_minus_h)
    else:
        s = np.power(one_minus_h, p)
    lead = ad ** (1.0 - p)
    A = lead * mean + (resid + ad * m * mean) / s
    B = lead + ad * m / s
    return A, B


def step_counts(keys, ykeys):
    """Counts of sorted ``keys`` strictly below and equal to each of ``ykeys``."""
    lo = np.searchsorted(keys, ykeys, side="left")
    hi = np.searchsorted(keys, ykeys, side="right")
    return lo.astype(np.int64), (hi - lo).astype(np.int64)
