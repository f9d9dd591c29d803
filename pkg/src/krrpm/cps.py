"""Conformal predictive distributions from kernel ridge regression.

Three conformity measures are supported, differing only in how the
residual ``y_i - yhat_i`` of the (n+1)-observation ridge fit is scaled by
its leverage ``h_i``:

- ordinary: ``e_i`` (exponent 0)
- studentized: ``e_i / sqrt(1 - h_i)`` (exponent 1/2)
- deleted: ``e_i / (1 - h_i)`` (exponent 1)

For every training index ``i`` the difference between the test score and
the ``i``-th score is an affine function ``B_i y - A_i`` of the candidate
label, so the whole predictive distribution is determined by the roots
``C_i = A_i / B_i``. Only the studentized variant has ``B_i > 0``
guaranteed; the other two raise :class:`NonMonotoneError` otherwise.
"""
from dataclasses import dataclass
import enum
import math

import numpy as np

from krrpm._backend import impl
from krrpm.errors import InputError, NonMonotoneError, NumericError
from krrpm.kernels import as_objects, kernel_matrix
from krrpm.ridge import hat_matrix_full, leverage_terms

SLOPE_GUARD = 1e-12
TIE_DIGITS = 12


class Variant(str, enum.Enum):
    STUDENTIZED = "studentized"
    ORDINARY = "ordinary"
    DELETED = "deleted"

    @property
    def exponent(self):
        return {"studentized": 0.5, "ordinary": 0.0, "deleted": 1.0}[self.value]

    @classmethod
    def coerce(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InputError(
                f"unknown variant {value!r}; choose from {[v.value for v in cls]}"
            ) from None


def _tie_step(c):
    scale = float(np.max(np.abs(c))) if c.size else 0.0
    if not scale > 0:
        scale = 1.0
    return 10.0 ** (math.floor(math.log10(scale)) - (TIE_DIGITS - 1))


class ConformalDistribution:
    """Randomized predictive distribution ``Q(y, tau)`` as a step function.

    Parameters
    ----------
    c : array-like
        Critical values ``C_1..C_n`` (any order; sorted stably here).
    variant : Variant or str

    Notes
    -----
    Values agreeing to 12 significant digits (relative to the largest
    ``|C_i|``) are treated as tied, so duplicated observations form a single
    jump regardless of rounding noise.
    """

    def __init__(self, c, variant=Variant.STUDENTIZED):
        c = np.asarray(c, dtype=float).ravel()
        if c.size == 0:
            raise InputError("a conformal distribution needs at least one critical value")
        if not np.all(np.isfinite(c)):
            raise NumericError("non-finite critical value")
        self.c_sorted = np.sort(c, kind="stable")
        self.variant = Variant.coerce(variant)
        self.n = self.c_sorted.size
        self.step = _tie_step(self.c_sorted)
        self.keys = np.ascontiguousarray(np.round(self.c_sorted / self.step))
        for arr in (self.c_sorted, self.keys):
            arr.setflags(write=False)

    def __repr__(self):
        return f"ConformalDistribution(n={self.n}, variant={self.variant.value!r})"

    def _key(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(np.isnan(y)):
            raise InputError("cannot evaluate the distribution at NaN")
        with np.errstate(over="ignore"):
            return np.round(y / self.step)

    def counts(self, y):
        """Number of critical values strictly below and tied with each ``y``."""
        ky = np.ascontiguousarray(np.atleast_1d(self._key(y)).ravel())
        lt, eq = impl.step_counts(self.keys, ky)
        shape = np.shape(y)
        return lt.reshape(shape), eq.reshape(shape)

    def __call__(self, y, tau=0.5):
        return eval_distribution(self, y, tau)

    @property
    def tie_groups(self):
        """1-based inclusive index ranges ``(i', i'')`` of tied sorted values."""
        _, first, sizes = np.unique(self.keys, return_index=True, return_counts=True)
        return [(int(f) + 1, int(f + s)) for f, s in zip(first, sizes)]

    def to_json(self):
        return {"n": int(self.n), "C": [float(v) for v in self.c_sorted], "variant": self.variant.value}

    @classmethod
    def from_json(cls, payload):
        dist = cls(payload["C"], payload.get("variant", "studentized"))
        if int(payload["n"]) != dist.n:
            raise InputError(f"n={payload['n']} does not match {dist.n} critical values")
        return dist


def eval_distribution(dist, y, tau):
    """``Q(y, tau)``; vectorized over ``y`` and ``tau``.

    Between jumps the value is ``(i + tau) / (n + 1)`` where ``i`` values lie
    below ``y``; at a jump shared by ``g`` tied values it is
    ``(i + tau * (g + 1)) / (n + 1)``.
    """
    tau = np.asarray(tau, dtype=float)
    if np.any((tau < 0) | (tau > 1)):
        raise InputError("tau must lie in [0, 1]")
    lt, eq = dist.counts(y)
    q = (lt + tau * (eq + 1)) / (dist.n + 1)
    return float(q) if np.ndim(q) == 0 else q


def quantile(dist, level, tau=0.5):
    """Smallest ``y`` with ``Q(y, tau) >= level``.

    Returns ``-inf`` when the level is reached below every critical value
    and ``+inf`` when it is never reached (the step function tops out at
    ``(n + tau) / (n + 1)``). When the level is reached only on the open
    interval right of a jump, that jump's location is returned.
    """
    if not 0 < level < 1:
        raise InputError(f"level must lie in (0, 1), got {level}")
    if not 0 <= tau <= 1:
        raise InputError("tau must lie in [0, 1]")
    n1 = dist.n + 1
    if tau / n1 >= level:
        return -math.inf
    _, first, sizes = np.unique(dist.keys, return_index=True, return_counts=True)
    for f, g in zip(first, sizes):
        at_jump = (f + tau * (g + 1)) / n1
        after = (f + g + tau) / n1
        if at_jump >= level or after >= level:
            return float(dist.c_sorted[f])
    return math.inf


def krrpm_predict(state, test, variant=Variant.STUDENTIZED, terms=None):
    """Conformal predictive distribution for the label of ``test``.

    Parameters
    ----------
    state : FitState
    test : array-like (d,)
    variant : Variant or str
    terms : LeverageTerms, optional
        Reuse a previous :func:`leverage_terms` result for this test object.

    Raises
    ------
    NonMonotoneError
        Ordinary or deleted variant with some ``B_i <= 1e-12``.
    """
    variant = Variant.coerce(variant)
    if terms is None:
        terms = leverage_terms(state, test)
    A, B = _lines(state, terms, variant.exponent)
    bad = np.flatnonzero(B <= SLOPE_GUARD)
    if bad.size:
        i = int(bad[np.argmin(B[bad])])
        if variant is Variant.STUDENTIZED:
            raise NumericError(f"studentized slope B[{i}] = {B[i]!r} is not positive")
        raise NonMonotoneError(i, B[i])
    return ConformalDistribution(A / B, variant)


def _lines(state, terms, p):
    resid = np.ascontiguousarray(state.labels - state.train_predictions)
    return impl.critical_values(
        resid,
        np.ascontiguousarray(terms.m),
        np.ascontiguousarray(terms.one_minus_h),
        float(terms.ad),
        float(terms.bayes_mean),
        float(p),
    )


def lemma2_terms(state, test):
    """Studentized ``(A, B)`` computed from training-only quantities."""
    return _lines(state, leverage_terms(state, test), 0.5)


def lemma2_terms_from_hat(objects, labels, test, kernel, a):
    """Studentized ``(A, B)`` read directly off the full (n+1)-hat matrix."""
    X = as_objects(objects)
    Xbar = np.vstack([X, as_objects(np.atleast_1d(np.asarray(test, dtype=float))[None, :])])
    Y = np.asarray(labels, dtype=float)
    n = Y.size
    H = hat_matrix_full(Xbar, kernel, a)
    h = np.diag(H)
    root_test = math.sqrt(1.0 - h[n])
    root_i = np.sqrt(1.0 - h[:n])
    A = (H[n, :n] @ Y) / root_test + (Y - H[:n, :n] @ Y) / root_i
    B = root_test + H[:n, n] / root_i
    return A, B


def conformity_scores(objects, labels, test, y, variant, kernel, a):
    """All ``n + 1`` conformity scores for candidate label ``y``, brute force.

    Ordinary and studentized scores come from one (n+1)-observation hat
    matrix; deleted scores refit ridge regression without each observation
    in turn. The last entry is the test observation's score.
    """
    variant = Variant.coerce(variant)
    X = as_objects(objects)
    Xbar = np.vstack([X, as_objects(np.atleast_1d(np.asarray(test, dtype=float))[None, :])])
    Ybar = np.append(np.asarray(labels, dtype=float), float(y))
    if variant is Variant.DELETED:
        Kbar = kernel_matrix(kernel, Xbar)
        N = Ybar.size
        alphas = np.empty(N)
        for i in range(N):
            rest = np.arange(N) != i
            K = Kbar[np.ix_(rest, rest)]
            coef = np.linalg.solve(K + a * np.eye(N - 1), Ybar[rest])
            alphas[i] = Ybar[i] - Kbar[i, rest] @ coef
        return alphas
    H = hat_matrix_full(Xbar, kernel, a)
    e = Ybar - H @ Ybar
    if variant is Variant.ORDINARY:
        return e
    return e / np.sqrt(1.0 - np.diag(H))


def slow_oracle_counts(objects, labels, test, y, variant, kernel, a):
    """``(#{alpha_i < alpha_test}, #{alpha_i == alpha_test})`` over ``i <= n``."""
    alphas = conformity_scores(objects, labels, test, y, variant, kernel, a)
    train, last = alphas[:-1], alphas[-1]
    return int(np.sum(train < last)), int(np.sum(train == last))


def slow_oracle_Q(objects, labels, test, y, tau, variant, kernel, a):
    """Conformal transducer evaluated by recomputing every conformity score.

    O(n^3) per query (O(n^4) for the deleted variant); a test oracle.
    """
    lt, eq = slow_oracle_counts(objects, labels, test, y, variant, kernel, a)
    n = np.asarray(labels).size
    return (lt + tau * (eq + 1)) / (n + 1)
