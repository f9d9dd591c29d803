"""The compiled core and the numpy fallback must agree."""
import os
import subprocess
import sys

import numpy as np
import pytest

from krrpm import _backend, _fallback

core = pytest.importorskip("krrpm._core")


@pytest.fixture
def data():
    rng = np.random.default_rng(7)
    return rng.uniform(-2, 2, (40, 2)), rng.uniform(-2, 2, (13, 2))


def test_laplacian(data):
    X, Z = data
    for scale in (1.0, 0.25):
        np.testing.assert_allclose(core.laplacian_gram(X, Z, scale), _fallback.laplacian_gram(X, Z, scale),
                                   rtol=1e-14, atol=1e-15)
        S = core.laplacian_gram_sym(X, scale)
        assert np.array_equal(S, S.T)
        np.testing.assert_allclose(S, _fallback.laplacian_gram_sym(X, scale), rtol=1e-14, atol=1e-15)


def test_trig(data):
    X, Z = data
    np.testing.assert_allclose(core.trig2d_gram(X, Z), _fallback.trig2d_gram(X, Z), rtol=0, atol=1e-15)
    S = core.trig2d_gram_sym(X)
    assert np.array_equal(S, S.T)
    np.testing.assert_allclose(S, _fallback.trig2d_gram_sym(X), rtol=0, atol=1e-15)


@pytest.mark.parametrize("p", [0.0, 0.5, 1.0])
def test_critical_values(p):
    rng = np.random.default_rng(3)
    resid, m = rng.normal(size=50), rng.normal(size=50) * 0.1
    omh = rng.uniform(0.1, 1.0, 50)
    A1, B1 = core.critical_values(resid, m, omh, 0.7, 1.3, p)
    A2, B2 = _fallback.critical_values(resid, m, omh, 0.7, 1.3, p)
    np.testing.assert_allclose(A1, A2, rtol=1e-14)
    np.testing.assert_allclose(B1, B2, rtol=1e-14)


def test_step_counts():
    rng = np.random.default_rng(5)
    keys = np.sort(rng.integers(-20, 20, 200).astype(float))
    ys = np.concatenate([rng.integers(-25, 25, 300).astype(float), [-np.inf, np.inf]])
    for got, want in zip(core.step_counts(keys, ys), _fallback.step_counts(keys, ys)):
        np.testing.assert_array_equal(got, want)


def test_env_var_forces_fallback():
    code = "import krrpm; print(krrpm.BACKEND)"
    env = dict(os.environ, KRRPM_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    expected = "python" if os.environ.get("KRRPM_PURE_PYTHON") == "1" else "compiled"
    assert _backend.BACKEND == expected
