"""Classical and quantum kernels as Gram-matrix builders.

Classical kernels form a small composition tree::

    kernel1 = DotProduct(1.0) + White(10.0)
    kernel2 = Constant(1.0) * RBF(10.0)

Quantum kernels encode every input once with a feature map and then
compare states (fidelity kernel) or per-qubit Pauli expectations
(projected kernel).
"""
from dataclasses import dataclass, replace

import numpy as np

from . import _backend
from .encodings import EncodingSpec, encode_many
from .errors import NumericalError, ShapeError


def _as_matrix(X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise ShapeError(f"expected a list of vectors, got array of shape {X.shape}")
    return X


class PairCache:
    """Dot products and squared distances shared by every leaf of a tree.

    Building these once lets hyperparameter searches re-evaluate a kernel
    for new parameters without touching the inputs again.
    """

    def __init__(self, XA, XB, same_set):
        XA = _as_matrix(XA)
        XB = _as_matrix(XB)
        if XA.shape[1] != XB.shape[1]:
            raise ShapeError(f"dimension mismatch: {XA.shape[1]} vs {XB.shape[1]}")
        if same_set and XA.shape != XB.shape:
            raise ShapeError("same_set requires identical input lists")
        self.shape = (XA.shape[0], XB.shape[0])
        self.same_set = same_set
        self.dot = XA @ XB.T
        self.sqdist = _backend.impl.sqdist_matrix(XA, XB)
        if same_set:
            np.fill_diagonal(self.sqdist, 0.0)


class ClassicalKernel:
    """Base for nodes of a classical kernel composition tree."""

    def __add__(self, other):
        return Sum(self, other)

    def __mul__(self, other):
        return Product(self, other)

    def leaves(self):
        return [self]

    def get_params(self):
        return np.array([leaf._value() for leaf in self.leaves()], dtype=np.float64)

    def param_names(self):
        return [f"{type(leaf).__name__}.{leaf._param}" for leaf in self.leaves()]

    def with_params(self, values):
        """Copy of the tree with leaf parameters replaced in ``leaves()`` order."""
        values = list(np.asarray(values, dtype=np.float64))
        if len(values) != len(self.leaves()):
            raise ShapeError(f"expected {len(self.leaves())} parameters, got {len(values)}")
        out = self._rebuild(values)
        return out

    def _rebuild(self, values):
        return replace(self, **{self._param: float(values.pop(0))})

    def _value(self):
        return getattr(self, self._param)


@dataclass(frozen=True)
class DotProduct(ClassicalKernel):
    """sigma0_sq + x_i . x_j"""

    sigma0_sq: float = 1.0
    _param = "sigma0_sq"

    def _gram(self, c):
        return self.sigma0_sq + c.dot

    def _eval(self, xi, xj, same):
        return self.sigma0_sq + float(np.dot(xi, xj))

    def _diag(self, X):
        return self.sigma0_sq + np.einsum("ij,ij->i", X, X)


@dataclass(frozen=True)
class White(ClassicalKernel):
    """noise_level * delta_ij; only nonzero on the diagonal of a self-Gram."""

    noise_level: float = 1.0
    _param = "noise_level"

    def _gram(self, c):
        if c.same_set:
            return self.noise_level * np.eye(c.shape[0])
        return np.zeros(c.shape)

    def _eval(self, xi, xj, same):
        return self.noise_level if same else 0.0

    def _diag(self, X):
        return np.full(X.shape[0], self.noise_level)


@dataclass(frozen=True)
class RBF(ClassicalKernel):
    """exp(-|x_i - x_j|^2 / (2 l^2))"""

    length_scale: float = 1.0
    _param = "length_scale"

    def _gram(self, c):
        return np.exp(-c.sqdist / (2.0 * self.length_scale ** 2))

    def _eval(self, xi, xj, same):
        d = np.asarray(xi) - np.asarray(xj)
        return float(np.exp(-np.dot(d, d) / (2.0 * self.length_scale ** 2)))

    def _diag(self, X):
        return np.ones(X.shape[0])


@dataclass(frozen=True)
class Constant(ClassicalKernel):
    value: float = 1.0
    _param = "value"

    def _gram(self, c):
        return np.full(c.shape, self.value)

    def _eval(self, xi, xj, same):
        return self.value

    def _diag(self, X):
        return np.full(X.shape[0], self.value)


@dataclass(frozen=True)
class Sum(ClassicalKernel):
    left: ClassicalKernel
    right: ClassicalKernel

    def leaves(self):
        return self.left.leaves() + self.right.leaves()

    def _rebuild(self, values):
        return Sum(self.left._rebuild(values), self.right._rebuild(values))

    def _gram(self, c):
        return self.left._gram(c) + self.right._gram(c)

    def _eval(self, xi, xj, same):
        return self.left._eval(xi, xj, same) + self.right._eval(xi, xj, same)

    def _diag(self, X):
        return self.left._diag(X) + self.right._diag(X)


@dataclass(frozen=True)
class Product(ClassicalKernel):
    left: ClassicalKernel
    right: ClassicalKernel

    def leaves(self):
        return self.left.leaves() + self.right.leaves()

    def _rebuild(self, values):
        return Product(self.left._rebuild(values), self.right._rebuild(values))

    def _gram(self, c):
        return self.left._gram(c) * self.right._gram(c)

    def _eval(self, xi, xj, same):
        return self.left._eval(xi, xj, same) * self.right._eval(xi, xj, same)

    def _diag(self, X):
        return self.left._diag(X) * self.right._diag(X)


def classical_kernel_eval(spec, x_i, x_j, same_index=False):
    """Evaluate one kernel entry; ``same_index`` drives White's delta."""
    x_i = np.asarray(x_i, dtype=np.float64)
    x_j = np.asarray(x_j, dtype=np.float64)
    if x_i.shape != x_j.shape:
        raise ShapeError(f"dimension mismatch: {x_i.shape} vs {x_j.shape}")
    value = spec._eval(x_i, x_j, same_index)
    if not np.isfinite(value):
        raise NumericalError(f"kernel value is not finite: {value}")
    return float(value)


def gram_from_cache(spec, cache):
    K = spec._gram(cache)
    if not np.all(np.isfinite(K)):
        raise NumericalError("kernel matrix has non-finite entries")
    return K


def classical_gram(spec, XA, XB, same_set=False):
    """Entry (i, j) = k(XA[i], XB[j]) with delta_ij only when ``same_set``."""
    return gram_from_cache(spec, PairCache(XA, XB, same_set))


# --- quantum kernels ------------------------------------------------------

QUANTUM_KINDS = ("FQK", "PQK")


@dataclass(frozen=True)
class QuantumKernelSpec:
    kind: str
    encoding: EncodingSpec
    gamma: float = 1.0

    def __post_init__(self):
        if self.kind not in QUANTUM_KINDS:
            raise ValueError(f"quantum kernel kind must be one of {QUANTUM_KINDS}")
        if self.kind == "PQK" and not self.gamma > 0:
            raise ValueError("PQK gamma must be positive")


class QuantumFeatureCache:
    """Per-input encoded states (FQK) or Pauli feature vectors (PQK).

    Rows are keyed by their raw bytes, so each distinct input is simulated
    once no matter how many Gram matrices it appears in.
    """

    def __init__(self, spec):
        self.spec = spec
        self._rows = {}

    def __len__(self):
        return len(self._rows)

    def _compute(self, X):
        states = encode_many(self.spec.encoding, X)
        if self.spec.kind == "FQK":
            return states
        return _backend.impl.bloch_batch(states, self.spec.encoding.n_qubits)

    def features(self, X):
        X = _as_matrix(X)
        n = self.spec.encoding.n_qubits
        if X.shape[1] != n:
            raise ShapeError(f"inputs must have dimension {n}, got {X.shape[1]}")
        X = np.ascontiguousarray(X)
        keys = [row.tobytes() for row in X]
        missing = {}
        for i, k in enumerate(keys):
            if k not in self._rows and k not in missing:
                missing[k] = i
        if missing:
            fresh = self._compute(X[list(missing.values())])
            for k, row in zip(missing, fresh):
                self._rows[k] = row
        return np.array([self._rows[k] for k in keys])

    def gram(self, XA, XB, same_set=False):
        FA = self.features(XA)
        FB = FA if same_set else self.features(XB)
        if self.spec.kind == "FQK":
            K = _backend.impl.fidelity_matrix(FA, FB)
        else:
            K = np.exp(-self.spec.gamma * _backend.impl.sqdist_matrix(FA, FB))
        if same_set:
            # self-overlaps are exactly 1; rounding noise is dropped
            K = 0.5 * (K + K.T)
            np.fill_diagonal(K, 1.0)
        return np.minimum(K, 1.0)


def fqk_gram(spec, XA, XB, cache=None):
    """Fidelity kernel |<phi(a)|phi(b)>|^2 between all rows."""
    if spec.kind != "FQK":
        raise ValueError("fqk_gram requires an FQK spec")
    cache = QuantumFeatureCache(spec) if cache is None else cache
    return cache.gram(XA, XB, same_set=XA is XB)


def pqk_feature_vector(spec, x):
    """(<X>_k, <Y>_k, <Z>_k) for k = 0..n-1 of the encoded state."""
    states = encode_many(spec.encoding, _as_matrix(x))
    return _backend.impl.bloch_batch(states, spec.encoding.n_qubits)[0]


def pqk_gram(spec, XA, XB, cache=None):
    """Projected kernel exp(-gamma |f(a) - f(b)|^2) over Pauli features."""
    if spec.kind != "PQK":
        raise ValueError("pqk_gram requires a PQK spec")
    cache = QuantumFeatureCache(spec) if cache is None else cache
    return cache.gram(XA, XB, same_set=XA is XB)


def is_quantum(kernel):
    return isinstance(kernel, QuantumKernelSpec)


def gram(kernel, XA, XB, same_set=False, cache=None):
    """Gram matrix for either kernel family."""
    if is_quantum(kernel):
        cache = QuantumFeatureCache(kernel) if cache is None else cache
        return cache.gram(XA, XB, same_set=same_set)
    return classical_gram(kernel, XA, XB, same_set=same_set)


def kernel_diag(kernel, X):
    """k(x, x) for each row, with White's delta switched on."""
    X = _as_matrix(X)
    if is_quantum(kernel):
        return np.ones(X.shape[0])
    return kernel._diag(X)
