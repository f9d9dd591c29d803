"""Calibration harness, synthetic data and experiment runners.

Random streams use numpy's Philox (counter-based, 64-bit words) keyed by
``SeedSequence([seed, stream])``, so every trial has its own reproducible
stream regardless of execution order.
"""
from dataclasses import dataclass, field
import itertools
import math

import numpy as np

from krrpm.cps import Variant, eval_distribution, krrpm_predict
from krrpm.errors import InputError
from krrpm.gpr import bayes_predict, gaussian_cdf
from krrpm.kernels import KernelSpec
from krrpm.ridge import fit, leverage_terms

KS_CRITICAL_5PCT = 1.358


def make_rng(seed, *stream):
    """Philox generator for ``(seed, *stream)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, stream)])))


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else make_rng(seed)


@dataclass
class SyntheticDataset:
    objects: np.ndarray
    labels: np.ndarray
    generator: str
    seed: object
    params: dict = field(default_factory=dict)

    def __len__(self):
        return self.labels.shape[0]


def trig_features(X):
    X = np.asarray(X, dtype=float)
    return np.column_stack([np.cos(X[:, 0]), np.cos(X[:, 1]), np.sin(X[:, 0]), np.sin(X[:, 1])])


def gen_trig(n, seed=0, w=None):
    """``y = w . (cos x1, cos x2, sin x1, sin x2) + noise``, ``x ~ U[-1, 1]^2``.

    ``w ~ N(0, I_4)`` is drawn first from the same stream unless given.
    """
    if n < 1:
        raise InputError("n must be at least 1")
    rng = _rng(seed)
    if w is None:
        w = rng.standard_normal(4)
    w = np.asarray(w, dtype=float)
    X = rng.uniform(-1.0, 1.0, size=(n, 2))
    noise = rng.standard_normal(n)
    y = trig_features(X) @ w + noise
    return SyntheticDataset(X, y, "trig", seed if not isinstance(seed, np.random.Generator) else None, {"w": w})


def gen_triangle(n, seed=0):
    """``x ~ U[0, 1]``, then ``y | x ~ U[-x, x]``."""
    if n < 1:
        raise InputError("n must be at least 1")
    rng = _rng(seed)
    x = rng.uniform(0.0, 1.0, size=n)
    y = rng.uniform(-x, x)
    return SyntheticDataset(x[:, None], y, "triangle", seed if not isinstance(seed, np.random.Generator) else None)


GENERATORS = {"trig": gen_trig, "triangle": gen_triangle}


def ks_statistic(u):
    """Two-sided sup distance between the empirical CDF of ``u`` and U[0, 1]."""
    u = np.sort(np.asarray(u, dtype=float))
    m = u.size
    i = np.arange(1, m + 1)
    return float(max(np.max(i / m - u), np.max(u - (i - 1) / m)))


@dataclass
class CalibrationReport:
    pit_values: np.ndarray
    ks_statistic: float
    histogram: np.ndarray
    trials: int
    seed: int
    config: dict = field(default_factory=dict)

    @property
    def threshold(self):
        return KS_CRITICAL_5PCT / math.sqrt(self.trials)

    def passed(self, threshold=None):
        return self.ks_statistic < (self.threshold if threshold is None else threshold)

    def to_json(self):
        return {
            "trials": self.trials,
            "seed": self.seed,
            "ks_statistic": self.ks_statistic,
            "ks_critical_5pct": self.threshold,
            "histogram": [int(c) for c in self.histogram],
            "config": self.config,
            "pit_values": [float(v) for v in self.pit_values],
        }


def krrpm_pit(kernel, a, variant):
    """PIT function ``(X, Y, x_test, y_test, tau) -> Q`` for the KRRPM."""

    def pit(X, Y, x_test, y_test, tau):
        return eval_distribution(krrpm_predict(fit(X, Y, kernel, a), x_test, variant), y_test, tau)

    return pit


def calibration_suite(generator, n, kernel=None, a=1.0, variant=Variant.STUDENTIZED,
                      trials=2000, seed=0, pit=None, bins=10):
    """Monte Carlo check that ``Q(z_1..z_n, z_{n+1}, tau)`` is uniform.

    Each trial draws ``n + 1`` IID observations and ``tau ~ U[0, 1]`` from
    its own stream and evaluates the predictive distribution at the true
    test label. For the trig generator the weights ``w`` are drawn once per
    run, so all trials share one data distribution.

    Parameters
    ----------
    generator : {"trig", "triangle"} or callable ``(n, rng) -> SyntheticDataset``
    pit : callable, optional
        Replace the predictor (``krrpm_pit(kernel, a, variant)`` by default).
    """
    if trials < 100:
        raise InputError(f"need at least 100 trials, got {trials}")
    if n < 1:
        raise InputError("n must be at least 1")
    kernel = KernelSpec.laplacian() if kernel is None else kernel
    variant = Variant.coerce(variant)
    name = generator if isinstance(generator, str) else getattr(generator, "__name__", "custom")
    if isinstance(generator, str):
        if generator not in GENERATORS:
            raise InputError(f"unknown generator {generator!r}; choose from {sorted(GENERATORS)}")
        if generator == "trig":
            w = make_rng(seed, 0xFFFFFFFF).standard_normal(4)
            draw = lambda m, rng: gen_trig(m, rng, w=w)  # noqa: E731
        else:
            draw = GENERATORS[generator]
    else:
        draw = generator
    if pit is None:
        pit = krrpm_pit(kernel, a, variant)
    values = np.empty(trials)
    for t in range(trials):
        rng = make_rng(seed, t)
        data = draw(n + 1, rng)
        tau = rng.uniform()
        values[t] = pit(data.objects[:n], data.labels[:n], data.objects[n], data.labels[n], tau)
    hist, _ = np.histogram(values, bins=bins, range=(0.0, 1.0))
    config = {"generator": name, "n": n, "kernel": kernel.to_string(), "a": a, "variant": variant.value}
    return CalibrationReport(values, ks_statistic(values), hist, trials, int(seed), config)


def exact_pit_cdf(points, probs, kernel, a, u, variant=Variant.STUDENTIZED, n=2):
    """``P(Q <= u)`` by enumerating every ``(n + 1)``-tuple of a discrete law.

    ``tau`` is integrated analytically: given the counts, ``Q <= u`` iff
    ``tau <= ((n + 1) u - lt) / (eq + 1)``.

    Parameters
    ----------
    points : sequence of ``(x, y)`` with ``x`` an object vector
    probs : sequence of probabilities, same length
    u : float or sequence of floats
    """
    probs = np.asarray(probs, dtype=float)
    if not math.isclose(probs.sum(), 1.0, abs_tol=1e-12):
        raise InputError("probabilities must sum to 1")
    u = np.atleast_1d(np.asarray(u, dtype=float))
    total = np.zeros_like(u)
    for combo in itertools.product(range(len(points)), repeat=n + 1):
        weight = float(np.prod(probs[list(combo)]))
        X = np.array([np.atleast_1d(points[j][0]) for j in combo], dtype=float)
        Y = np.array([points[j][1] for j in combo], dtype=float)
        dist = krrpm_predict(fit(X[:n], Y[:n], kernel, a), X[n], variant)
        lt, eq = dist.counts(Y[n])
        total += weight * np.clip(((n + 1) * u - lt) / (eq + 1), 0.0, 1.0)
    return total


def sup_distance_to_cdf(dist, cdf):
    """``sup_y max_tau |Q(y, tau) - F(y)|`` for a continuous distribution function ``F``."""
    n1 = dist.n + 1
    _, first, sizes = np.unique(dist.keys, return_index=True, return_counts=True)
    F = np.asarray(cdf(dist.c_sorted[first]), dtype=float)
    best = 0.0
    for tau in (0.0, 1.0):
        left = (first + tau) / n1
        at = (first + tau * (sizes + 1)) / n1
        right = (first + sizes + tau) / n1
        best = max(best, tau / n1, (1 - tau) / n1,
                   float(np.max(np.abs(np.concatenate([left - F, at - F, right - F])))))
    return best


def sup_distance(dist_a, dist_b):
    """``sup_y max_tau |Q_a(y, tau) - Q_b(y, tau)|`` for two step distributions."""
    pts = np.unique(np.concatenate([dist_a.c_sorted, dist_b.c_sorted]))
    mids = 0.5 * (pts[:-1] + pts[1:])
    ys = np.concatenate([[pts[0] - 1.0], pts, mids, [pts[-1] + 1.0]])
    return max(float(np.max(np.abs(eval_distribution(dist_a, ys, t) - eval_distribution(dist_b, ys, t))))
               for t in (0.0, 1.0))


def curve_grid(dists, size=512, span=None):
    """Grid covering all critical values with a margin of ``span``.

    The default margin is three interquartile ranges of the pooled values.
    """
    c = np.concatenate([d.c_sorted for d in dists])
    if span is None:
        q1, q3 = np.percentile(c, [25, 75])
        span = 3.0 * (q3 - q1)
        if not span > 0:
            span = max(1.0, abs(float(c[0])))
    return np.linspace(c.min() - span, c.max() + span, size)


def step_curve(dist, grid):
    """Columns ``y, Q0, Q1``."""
    return np.column_stack([grid, eval_distribution(dist, grid, 0.0), eval_distribution(dist, grid, 1.0)])


@dataclass
class ExperimentResult:
    """Named ``(m, 3)`` curve tables (``y, Q0, Q1``) plus summary numbers."""

    curves: dict
    metrics: dict
    distributions: dict = field(default_factory=dict, repr=False)


def run_figure1(n=1000, seed=0, test=(1.0, 1.0), a=1.0, sigma=1.0, grid_size=512):
    """Bayes vs conformal predictive distributions on the trig model.

    Curves: Bayesian with the true kernel, and studentized KRRPM with the
    true, Laplacian and linear kernels, all at ``test``.
    """
    data = gen_trig(n, seed)
    test = np.asarray(test, dtype=float)
    kernels = {"true": KernelSpec.trig2d(), "laplacian": KernelSpec.laplacian(), "linear": KernelSpec.linear()}
    dists = {}
    bayes = None
    for name, kernel in kernels.items():
        state = fit(data.objects, data.labels, kernel, a)
        terms = leverage_terms(state, test)
        dists[name] = krrpm_predict(state, test, Variant.STUDENTIZED, terms=terms)
        if name == "true":
            bayes = bayes_predict(state, test, sigma, terms=terms)
    cdf = lambda y: gaussian_cdf(bayes, y)  # noqa: E731
    grid = curve_grid(list(dists.values()), grid_size)
    F = cdf(grid)
    curves = {"bayes_true": np.column_stack([grid, F, F])}
    for name, dist in dists.items():
        curves[f"cpd_{name}"] = step_curve(dist, grid)
    metrics = {f"sup_{name}_vs_bayes": sup_distance_to_cdf(dist, cdf) for name, dist in dists.items()}
    metrics.update({"bayes_mean": bayes.mean, "bayes_variance": bayes.variance, "n": n, "seed": seed})
    return ExperimentResult(curves, metrics, dict(dists, bayes=bayes))


def run_figure23(n=1000, seed=0, kernel=None, a=1.0, tests=(0.0, 1.0), grid_size=512):
    """Studentized and ordinary KRRPM on triangle data at two test points."""
    kernel = KernelSpec.laplacian() if kernel is None else kernel
    data = gen_triangle(n, seed)
    state = fit(data.objects, data.labels, kernel, a)
    dists = {}
    for x in tests:
        terms = leverage_terms(state, [x])
        for variant in (Variant.STUDENTIZED, Variant.ORDINARY):
            dists[f"{variant.value}_x{x:g}"] = krrpm_predict(state, [x], variant, terms=terms)
    grid = curve_grid(list(dists.values()), grid_size)
    curves = {name: step_curve(d, grid) for name, d in dists.items()}
    metrics = {"n": n, "seed": seed}
    for x in tests:
        metrics[f"sup_studentized_vs_ordinary_x{x:g}"] = sup_distance(
            dists[f"studentized_x{x:g}"], dists[f"ordinary_x{x:g}"])
    if len(tests) == 2:
        x0, x1 = (f"{t:g}" for t in tests)
        for variant in ("studentized", "ordinary"):
            metrics[f"sup_{variant}_x{x0}_vs_x{x1}"] = sup_distance(
                dists[f"{variant}_x{x0}"], dists[f"{variant}_x{x1}"])
    return ExperimentResult(curves, metrics, dists)
