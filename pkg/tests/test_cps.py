import json
import math

from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from conftest import random_instance
from krrpm import (
    ConformalDistribution,
    InputError,
    KernelSpec,
    NonMonotoneError,
    Variant,
    eval_distribution,
    fit,
    krrpm_predict,
    lemma2_terms,
    quantile,
    slow_oracle_Q,
)
from krrpm.cps import conformity_scores, lemma2_terms_from_hat, slow_oracle_counts


def zero_kernel(n):
    return KernelSpec.precomputed(np.zeros((n + 1, n + 1)))


@pytest.mark.parametrize("variant", list(Variant))
def test_zero_kernel_gives_label_ecdf(variant):
    Y = np.array([0.3, -1.2, 4.0, 0.3])
    st_ = fit(np.arange(4.0)[:, None], Y, zero_kernel(4), 1.0)
    dist = krrpm_predict(st_, [4], variant)
    np.testing.assert_array_equal(dist.c_sorted, np.sort(Y))
    assert dist.tie_groups == [(1, 1), (2, 3), (4, 4)]


def test_single_observation_example():
    st_ = fit([[0]], [5.0], KernelSpec.precomputed(np.eye(2)), 1.0)
    A, B = lemma2_terms(st_, [1])
    assert A[0] == pytest.approx(2.5 / math.sqrt(0.5))
    assert B[0] == pytest.approx(math.sqrt(0.5))
    assert krrpm_predict(st_, [1]).c_sorted[0] == pytest.approx(5.0)


def bisect_root(f, lo=-1.0, hi=1.0, tol=1e-12):
    while f(lo) > 0:
        lo *= 2
    while f(hi) < 0:
        hi *= 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


def test_critical_values_match_bisection(rng):
    for _ in range(25):
        X, Y, test, kernel, a = random_instance(rng, n_max=15)
        state = fit(X, Y, kernel, a)
        A, B = lemma2_terms(state, test)
        C = A / B
        for i in range(Y.size):
            def gap(y, i=i):
                s = conformity_scores(X, Y, test, y, "studentized", kernel, a)
                return s[-1] - s[i]
            assert C[i] == pytest.approx(bisect_root(gap), abs=1e-7 * max(1.0, abs(C[i])))


def test_eval_distribution_examples():
    d = ConformalDistribution([1, 2, 3])
    assert eval_distribution(d, 1.5, 0.0) == 0.25
    assert eval_distribution(d, 2.0, 0.5) == 0.5
    assert eval_distribution(d, -100.0, 0.0) == 0.0
    assert eval_distribution(d, 100.0, 1.0) == 1.0
    with pytest.raises(InputError):
        eval_distribution(d, 0.0, 1.5)


def test_eval_distribution_ties():
    d = ConformalDistribution([1.0, 2.0, 2.0, 2.0 + 1e-15, 3.0])
    assert d.tie_groups == [(1, 1), (2, 4), (5, 5)]
    # i' = 2, i'' = 4: (i' - 1 + tau (i'' - i' + 2)) / (n + 1)
    assert eval_distribution(d, 2.0, 0.25) == pytest.approx((1 + 0.25 * 4) / 6)
    assert eval_distribution(d, 2.0, 0.0) == eval_distribution(d, 2.0 - 1e-6, 0.0)
    assert eval_distribution(d, 2.0, 1.0) == eval_distribution(d, 2.0 + 1e-6, 1.0)


def test_slow_oracle_examples(rng):
    X, Y = [[0.0]], [1.0]
    for y in (-3.0, 0.2, 4.0):
        assert slow_oracle_Q(X, Y, [0.7], y, 0.0, "studentized", KernelSpec.laplacian(), 1.0) in (0.0, 0.5, 1.0)
    Y = rng.normal(size=6)
    q = slow_oracle_Q(np.arange(6.0)[:, None], Y, [6], Y.max() + 1, 0.0, "ordinary", zero_kernel(6), 1.0)
    assert q == pytest.approx(6 / 7)


@pytest.mark.parametrize("variant", list(Variant))
def test_fast_path_equals_slow_oracle(rng, variant):
    for _ in range(20):
        X, Y, test, kernel, a = random_instance(rng, n_max=12)
        state = fit(X, Y, kernel, a)
        try:
            dist = krrpm_predict(state, test, variant)
        except NonMonotoneError:
            continue
        for _ in range(10):
            y = float(rng.normal() * 3 * (np.std(Y) + 1))
            fast = tuple(int(v) for v in dist.counts(y))
            slow = slow_oracle_counts(X, Y, test, y, variant, kernel, a)
            if np.min(np.abs(dist.c_sorted - y)) > 1e-9:
                assert fast == slow


def test_quantile_examples():
    d = ConformalDistribution([1, 2, 3])
    assert quantile(d, 0.5, 0.5) == 2.0
    assert quantile(d, 1e-6, 0.5) == -math.inf
    assert quantile(d, 0.999, 0.5) == math.inf
    assert quantile(d, 1e-6, 0.0) == 1.0
    with pytest.raises(InputError):
        quantile(d, 1.0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=12), st.floats(0, 1), st.floats(0.01, 0.99))
def test_quantile_is_generalized_inverse(c, tau, level):
    d = ConformalDistribution(c)
    q = quantile(d, level, tau)
    if math.isfinite(q):
        below = np.nextafter(q, -np.inf) if q != 0 else -1e-300
        assert eval_distribution(d, q, tau) >= level or eval_distribution(d, q + 1e-9, tau) >= level
        assert eval_distribution(d, below - 1e-9 * max(1, abs(q)), tau) < level


def test_lemma2_terms_zero_kernel():
    st_ = fit(np.arange(5.0)[:, None], np.arange(5.0), zero_kernel(5), 0.7)
    np.testing.assert_array_equal(lemma2_terms(st_, [5])[1], np.ones(5))


def test_lemma2_two_forms_agree(rng):
    for _ in range(50):
        X, Y, test, kernel, a = random_instance(rng, n_max=30)
        A1, B1 = lemma2_terms(fit(X, Y, kernel, a), test)
        A2, B2 = lemma2_terms_from_hat(X, Y, test, kernel, a)
        scale = 1 + np.max(np.abs(Y))
        np.testing.assert_allclose(A1, A2, atol=1e-8 * scale)
        np.testing.assert_allclose(B1, B2, atol=1e-8)
        assert np.min(B1) > 1e-12


def test_lemma1_conditions(rng):
    for _ in range(20):
        X, Y, test, kernel, a = random_instance(rng, n_max=10)
        span = 10 * (np.ptp(Y) + 1)
        ys = np.linspace(-span, span, 41)
        gaps = np.array([conformity_scores(X, Y, test, y, "studentized", kernel, a) for y in ys])
        diff = gaps[:, -1:] - gaps[:, :-1]
        assert np.all(np.diff(diff, axis=0) > 0)
        wide = np.array([conformity_scores(X, Y, test, y, "studentized", kernel, a) for y in (-1e3 * span, 1e3 * span)])
        wdiff = wide[:, -1:] - wide[:, :-1]
        assert np.all(wdiff[0] < diff[0]) and np.all(wdiff[1] > diff[-1])


def test_rps_axioms(rng):
    for _ in range(30):
        X, Y, test, kernel, a = random_instance(rng, n_max=15)
        d = krrpm_predict(fit(X, Y, kernel, a), test)
        ys = np.sort(np.concatenate([rng.normal(size=100) * 5, d.c_sorted]))
        for tau in (0.0, 0.3, 1.0):
            assert np.all(np.diff(eval_distribution(d, ys, tau)) >= 0)
        taus = np.linspace(0, 1, 11)
        for y in ys[::7]:
            q = eval_distribution(d, np.full(11, y), taus)
            assert np.all(np.diff(q) >= 0)
            np.testing.assert_allclose(
                q, (1 - taus) * eval_distribution(d, y, 0.0) + taus * eval_distribution(d, y, 1.0), atol=1e-12)
        assert eval_distribution(d, -np.inf, 0.0) == 0.0
        assert eval_distribution(d, np.inf, 1.0) == 1.0


@pytest.mark.parametrize("variant", list(Variant))
def test_permutation_invariance(rng, variant):
    for _ in range(10):
        X, Y, test, kernel, a = random_instance(rng, n_max=10)
        perm = rng.permutation(Y.size)
        for y in rng.normal(size=5) * 3:
            assert slow_oracle_counts(X, Y, test, y, variant, kernel, a) == \
                slow_oracle_counts(X[perm], Y[perm], test, y, variant, kernel, a)


def test_label_scaling(rng):
    for _ in range(20):
        X, Y, test, kernel, a = random_instance(rng, n_max=20)
        state = fit(X, Y, kernel, a)
        c = float(rng.uniform(0.01, 100))
        base = krrpm_predict(state, test).c_sorted
        scaled = krrpm_predict(fit(X, c * Y, kernel, a), test).c_sorted
        np.testing.assert_allclose(scaled, c * base, rtol=1e-9, atol=1e-12 * c * (1 + np.max(np.abs(Y))))


def high_leverage_case():
    G = np.array([[1.0, -10.0], [-10.0, 100.0]])
    return [[0]], [2.0], [1], KernelSpec.precomputed(G), 1.0


def test_ordinary_non_monotone_is_reported():
    X, Y, test, kernel, a = high_leverage_case()
    state = fit(X, Y, kernel, a)
    with pytest.raises(NonMonotoneError) as info:
        krrpm_predict(state, test, "ordinary")
    assert info.value.index == 0
    # the conformity difference really decreases in y
    g0, g1 = (conformity_scores(X, Y, test, y, "ordinary", kernel, a) for y in (0.0, 1.0))
    assert (g1[-1] - g1[0]) - (g0[-1] - g0[0]) < 0
    assert krrpm_predict(state, test, "studentized").n == 1
    assert krrpm_predict(state, test, "deleted").n == 1


@pytest.mark.parametrize("variant", [Variant.ORDINARY, Variant.DELETED])
def test_search_for_non_monotone_cases(rng, variant):
    """Every reported failure must be genuine; finding none is acceptable."""
    for _ in range(200):
        X, Y, test, kernel, a = random_instance(rng, n_max=8, kind="spiky")
        try:
            krrpm_predict(fit(X, Y, kernel, a), test, variant)
        except NonMonotoneError as exc:
            g0, g1 = (conformity_scores(X, Y, test, y, variant, kernel, a) for y in (0.0, 1.0))
            i = exc.index
            assert (g1[-1] - g1[i]) - (g0[-1] - g0[i]) <= 1e-9


def test_json_round_trip(rng):
    X, Y, test, kernel, a = random_instance(rng, n_max=15)
    d = krrpm_predict(fit(X, Y, kernel, a), test, "studentized")
    payload = json.loads(json.dumps(d.to_json()))
    assert set(payload) == {"n", "C", "variant"}
    d2 = ConformalDistribution.from_json(payload)
    ys = np.concatenate([d.c_sorted, rng.normal(size=50) * 3])
    for tau in (0.0, 0.4, 1.0):
        assert np.array_equal(eval_distribution(d, ys, tau), eval_distribution(d2, ys, tau))
    with pytest.raises(InputError):
        ConformalDistribution.from_json({"n": 3, "C": [1.0], "variant": "ordinary"})


def test_variant_coercion():
    assert Variant.coerce("Ordinary") is Variant.ORDINARY
    assert [v.exponent for v in Variant] == [0.5, 0.0, 1.0]
    with pytest.raises(InputError):
        Variant.coerce("jackknife")
