"""Data-encoding circuits (feature maps) YZ_CX and HighDim.

The exact layouts are fixed stand-ins chosen to match the two circuit
families by name; they are not transcribed from any reference drawing.

YZ_CX, per repetition:
    RY(x_q) on every qubit, RZ(x_q) on every qubit, CX(q, q+1) chain.
HighDim:
    H on every qubit once, then per repetition r = 1..reps:
    RZ(x_q) on every qubit, RY(x_{(q+r) mod n}) on every qubit,
    CX(q, (q+1) mod n) ring for q = 0..n-1.

Inputs are expected already scaled into [0, pi]; nothing is rescaled here.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _backend
from .errors import ShapeError, SizeError
from .qsim import CX, H, MAX_QUBITS, RY, RZ, Gate, Statevector, compile_gates

KINDS = ("YZ_CX", "HighDim")


@dataclass(frozen=True)
class EncodingSpec:
    kind: str
    n_qubits: int
    reps: int = 4

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"encoding kind must be one of {KINDS}, got {self.kind!r}")
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise SizeError(f"n_qubits must be in [1, {MAX_QUBITS}]")
        if self.reps < 1:
            raise SizeError("reps must be >= 1")


def _template(spec):
    """Gate layout as (kind, target, control, feature_index) tuples."""
    n = spec.n_qubits
    out = []
    if spec.kind == "YZ_CX":
        for _ in range(spec.reps):
            out += [("RY", q, -1, q) for q in range(n)]
            out += [("RZ", q, -1, q) for q in range(n)]
            out += [("CX", q + 1, q, -1) for q in range(n - 1)]
    else:
        out += [("H", q, -1, -1) for q in range(n)]
        for r in range(1, spec.reps + 1):
            out += [("RZ", q, -1, q) for q in range(n)]
            out += [("RY", q, -1, (q + r) % n) for q in range(n)]
            if n > 1:
                out += [("CX", (q + 1) % n, q, -1) for q in range(n)]
    return out


@lru_cache(maxsize=64)
def compiled_template(spec):
    """Array program for the backend: kinds, targets, controls, feature."""
    tpl = _template(spec)
    gates = [Gate(k, t, control=c) for k, t, c, _ in tpl]
    kinds, targets, controls, _ = compile_gates(gates)
    feature = np.array([f for *_, f in tpl], dtype=np.intc)
    for arr in (kinds, targets, controls, feature):
        arr.flags.writeable = False
    return kinds, targets, controls, feature


def _check_x(spec, x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size != spec.n_qubits:
        raise ShapeError(f"feature vector must have length {spec.n_qubits}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("feature vector has non-finite entries")
    return x


def build_circuit(spec, x):
    """Gate sequence encoding ``x`` under ``spec``."""
    x = _check_x(spec, x)
    gates = []
    for kind, target, control, feat in _template(spec):
        if kind == "H":
            gates.append(H(target))
        elif kind == "CX":
            gates.append(CX(control, target))
        elif kind == "RY":
            gates.append(RY(x[feat], target))
        else:
            gates.append(RZ(x[feat], target))
    return gates


def gate_count(spec):
    return len(_template(spec))


def encode_many(spec, X):
    """Encoded amplitudes for every row of ``X``, shape (rows, 2**n)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != spec.n_qubits:
        raise ShapeError(f"inputs must have shape (rows, {spec.n_qubits}), got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("inputs contain non-finite entries")
    kinds, targets, controls, feature = compiled_template(spec)
    return _backend.impl.encode_batch(X, spec.n_qubits, kinds, targets, controls, feature)


def encode(spec, x):
    """Statevector produced by the encoding circuit acting on |0...0>."""
    x = _check_x(spec, x)
    return Statevector(spec.n_qubits, encode_many(spec, x[None, :])[0])
