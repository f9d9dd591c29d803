import numpy as np
import pytest

from krrpm.kernels import KernelSpec

KINDS = ("full", "lowrank", "zero", "duplicates", "spiky")


def random_gram(rng, size, kind):
    """Random PSD matrix of the requested flavour.

    Normalized to unit mean diagonal, like the built-in kernels; the spiky
    flavour then carries one very high-leverage object.
    """
    if kind == "zero":
        return np.zeros((size, size))
    if kind == "full":
        A = rng.standard_normal((size, size))
    elif kind == "lowrank":
        A = rng.standard_normal((size, int(rng.integers(1, 4))))
    elif kind == "duplicates":
        base = rng.standard_normal((max(1, size // 2), 3))
        A = base[rng.integers(0, base.shape[0], size)]
    else:
        A = rng.standard_normal((size, 4))
        A[rng.integers(0, size)] *= 100.0
    G = A @ A.T
    G = 0.5 * (G + G.T)
    return G / np.mean(np.diag(G))


def random_instance(rng, n_max=15, kind=None, a_range=(1e-3, 10.0)):
    """Training set, test object and kernel over a precomputed Gram matrix.

    Objects are indices ``0..n`` into the Gram matrix; index ``n`` is the test.
    """
    n = int(rng.integers(1, n_max + 1))
    kind = kind or KINDS[int(rng.integers(len(KINDS)))]
    G = random_gram(rng, n + 1, kind)
    a = float(np.exp(rng.uniform(np.log(a_range[0]), np.log(a_range[1]))))
    X = np.arange(n, dtype=float)[:, None]
    Y = rng.standard_normal(n) * 10.0 ** rng.uniform(-1, 1)
    if kind == "duplicates" and n > 1:
        Y = np.round(Y, 1)
    return X, Y, np.array([float(n)]), KernelSpec.precomputed(G), a


@pytest.fixture
def rng():
    return np.random.default_rng(20171019)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
