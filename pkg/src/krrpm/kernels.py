"""Kernel functions and Gram matrix construction.

Objects are rows of a 2-D float array ``(n, d)``. A precomputed kernel
addresses a fixed Gram matrix by integer index, so its objects are 1-D
index vectors, e.g. ``[[0], [1], [2]]``.
"""
from dataclasses import dataclass, field
import re

import numpy as np
from scipy.linalg import cholesky, LinAlgError

from krrpm._backend import impl
from krrpm.errors import InputError

KERNEL_NAMES = ("linear", "laplacian", "trig2d", "precomputed")


@dataclass(frozen=True)
class KernelSpec:
    """Which kernel to use, with its parameters.

    Parameters
    ----------
    name : {"linear", "laplacian", "trig2d", "precomputed"}
    scale : float
        Length scale of the Laplacian kernel ``exp(-||x - x'|| / scale)``.
        The unscaled kernel is ``scale=1``.
    gram : ndarray, optional
        Symmetric matrix for the precomputed variant.
    """

    name: str = "laplacian"
    scale: float = 1.0
    gram: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.name not in KERNEL_NAMES:
            raise InputError(f"unknown kernel {self.name!r}; choose from {KERNEL_NAMES}")
        if self.name == "laplacian" and not (np.isfinite(self.scale) and self.scale > 0):
            raise InputError(f"laplacian scale must be positive, got {self.scale}")
        if self.name == "precomputed":
            if self.gram is None:
                raise InputError("precomputed kernel needs a gram matrix")
            G = np.asarray(self.gram, dtype=float)
            if G.ndim != 2 or G.shape[0] != G.shape[1]:
                raise InputError(f"precomputed gram must be square, got shape {G.shape}")
            if not np.all(np.isfinite(G)):
                raise InputError("precomputed gram has non-finite entries")
            if G.size and np.max(np.abs(G - G.T)) > 1e-10:
                raise InputError("precomputed gram is not symmetric within 1e-10")
            G = np.triu(G) + np.triu(G, 1).T
            G.setflags(write=False)
            object.__setattr__(self, "gram", G)

    @classmethod
    def linear(cls):
        return cls("linear")

    @classmethod
    def laplacian(cls, scale=1.0):
        return cls("laplacian", scale=float(scale))

    @classmethod
    def trig2d(cls):
        return cls("trig2d")

    @classmethod
    def precomputed(cls, gram):
        return cls("precomputed", gram=gram)

    def to_string(self):
        if self.name == "laplacian":
            return f"kernel=laplacian scale={self.scale!r}"
        return f"kernel={self.name}"


def parse_kernel(text, **params):
    """Build a :class:`KernelSpec` from a config string.

    Accepts a bare name (``"laplacian"``) or ``key=value`` tokens
    (``"kernel=laplacian scale=0.5"``). Keyword ``params`` fill in anything
    the string leaves out.

    >>> parse_kernel("kernel=laplacian scale=2")
    KernelSpec(name='laplacian', scale=2.0)
    """
    tokens = re.split(r"[\s,]+", text.strip())
    opts = dict(params)
    name = None
    for tok in tokens:
        if not tok:
            continue
        if "=" in tok:
            key, value = tok.split("=", 1)
            if key == "kernel":
                name = value
            else:
                opts[key] = value
        elif name is None:
            name = tok
        else:
            raise InputError(f"cannot parse kernel token {tok!r}")
    if name is None:
        raise InputError("empty kernel specification")
    if name == "laplacian":
        try:
            return KernelSpec.laplacian(float(opts.get("scale", 1.0)))
        except ValueError as exc:
            raise InputError(f"bad laplacian scale: {opts.get('scale')!r}") from exc
    if name == "precomputed":
        return KernelSpec.precomputed(opts.get("gram"))
    return KernelSpec(name)


def as_objects(objects):
    """Coerce to a C-contiguous finite ``(n, d)`` float array."""
    X = np.asarray(objects, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[1] < 1:
        raise InputError(f"objects must be a 2-D array (n, d), got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InputError("objects contain NaN or infinite coordinates")
    return np.ascontiguousarray(X)


def _check_dims(spec, X, Z=None):
    d = X.shape[1]
    if Z is not None and Z.shape[1] != d:
        raise InputError(f"dimension mismatch: {d} vs {Z.shape[1]}")
    if spec.name == "trig2d" and d != 2:
        raise InputError(f"trig2d kernel needs 2-D objects, got dimension {d}")
    if spec.name == "precomputed":
        if d != 1:
            raise InputError("precomputed kernel objects must be 1-D index vectors")
        for A in (X, Z):
            if A is None:
                continue
            idx = A[:, 0]
            if np.any(idx != np.round(idx)) or np.any(idx < 0) or np.any(idx >= spec.gram.shape[0]):
                raise InputError("precomputed kernel objects must be valid integer indices")


def _index(A):
    return A[:, 0].astype(np.intp)


def cross_gram(spec, X, Z):
    """Kernel values between two object sets, shape ``(len(X), len(Z))``."""
    X, Z = as_objects(X), as_objects(Z)
    _check_dims(spec, X, Z)
    if spec.name == "linear":
        return X @ Z.T
    if spec.name == "laplacian":
        return impl.laplacian_gram(X, Z, spec.scale)
    if spec.name == "trig2d":
        return impl.trig2d_gram(X, Z)
    return spec.gram[np.ix_(_index(X), _index(Z))]


def eval_kernel(spec, x, x2):
    """Kernel value for a single pair of objects."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x.ndim != 1 or x2.ndim != 1:
        raise InputError("eval_kernel takes two single objects")
    return float(cross_gram(spec, x[None, :], x2[None, :])[0, 0])


def kernel_matrix(spec, objects):
    """Exactly symmetric Gram matrix of ``objects``."""
    X = as_objects(objects)
    if X.shape[0] == 0:
        raise InputError("kernel_matrix needs at least one object")
    _check_dims(spec, X)
    if spec.name == "linear":
        G = X @ X.T
        return np.triu(G) + np.triu(G, 1).T
    if spec.name == "laplacian":
        return impl.laplacian_gram_sym(X, spec.scale)
    if spec.name == "trig2d":
        return impl.trig2d_gram_sym(X)
    idx = _index(X)
    return spec.gram[np.ix_(idx, idx)].copy()


def kernel_vector(spec, objects, test):
    """Return ``(k, kappa)``: kernel values against ``test`` and its self-similarity."""
    X = as_objects(objects)
    t = as_objects(np.atleast_1d(np.asarray(test, dtype=float))[None, :])
    k = cross_gram(spec, X, t)[:, 0]
    kappa = float(cross_gram(spec, t, t)[0, 0])
    return k, kappa


def validate_psd(matrix, jitter=1e-10):
    """True iff ``matrix + jitter * I`` has a Cholesky factorization."""
    M = np.asarray(matrix, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InputError(f"validate_psd needs a square matrix, got shape {M.shape}")
    try:
        cholesky(M + jitter * np.eye(M.shape[0]), lower=True, check_finite=True)
    except (LinAlgError, ValueError):
        return False
    return True
