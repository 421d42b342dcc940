"""Noise-free dense statevector simulation of small circuits.

Conventions
-----------
Qubit 0 is the least significant bit of the amplitude index, so the
amplitude of basis state |q_{n-1} ... q_1 q_0> sits at index
``sum(q_k << k)``. No canonical global phase is imposed on states.

Gates: ``H``, ``RY(theta) = exp(-i theta Y / 2)``,
``RZ(theta) = exp(-i theta Z / 2)`` and ``CX(control, target)``.
"""
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import NumericalError, QubitIndexError, ShapeError, SizeError

MAX_QUBITS = 16
NORM_TOL = 1e-10

GATE_KINDS = ("H", "RY", "RZ", "CX")
_OPCODES = {"H": _backend.OP_H, "RY": _backend.OP_RY, "RZ": _backend.OP_RZ, "CX": _backend.OP_CX}

PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


@dataclass(frozen=True)
class Statevector:
    """Normalized pure state of ``n_qubits`` qubits.

    The amplitude array is made read-only on construction.
    """

    n_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise SizeError(f"n_qubits must be in [1, {MAX_QUBITS}], got {self.n_qubits}")
        amps = np.array(self.amplitudes, dtype=np.complex128).ravel()
        if amps.size != 1 << self.n_qubits:
            raise ShapeError(f"expected {1 << self.n_qubits} amplitudes, got {amps.size}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise NumericalError(f"state norm {norm!r} deviates from 1")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self):
        return self.amplitudes.size

    def norm(self):
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))


@dataclass(frozen=True)
class Gate:
    """One gate of the restricted set {H, RY, RZ, CX}."""

    kind: str
    target: int
    angle: float = 0.0
    control: int = -1

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.kind == "CX" and self.control == self.target:
            raise QubitIndexError("CX control and target must differ")

    def check(self, n_qubits):
        if not 0 <= self.target < n_qubits:
            raise QubitIndexError(f"target {self.target} out of range for {n_qubits} qubits")
        if self.kind == "CX" and not 0 <= self.control < n_qubits:
            raise QubitIndexError(f"control {self.control} out of range for {n_qubits} qubits")

    def __repr__(self):
        if self.kind == "CX":
            return f"CX({self.control},{self.target})"
        if self.kind == "H":
            return f"H(q{self.target})"
        return f"{self.kind}({self.angle:.6g},q{self.target})"


def H(target):
    return Gate("H", target)


def RY(angle, target):
    return Gate("RY", target, angle=float(angle))


def RZ(angle, target):
    return Gate("RZ", target, angle=float(angle))


def CX(control, target):
    return Gate("CX", target, control=control)


def compile_gates(gates):
    """Lower a gate sequence to the backend's array program format."""
    kinds = np.array([_OPCODES[g.kind] for g in gates], dtype=np.intc)
    targets = np.array([g.target for g in gates], dtype=np.intc)
    controls = np.array([g.control for g in gates], dtype=np.intc)
    angles = np.array([g.angle for g in gates], dtype=np.float64)
    return kinds, targets, controls, angles


def init_state(n_qubits):
    """Return |0...0> on ``n_qubits`` qubits."""
    if not isinstance(n_qubits, (int, np.integer)) or not 1 <= n_qubits <= MAX_QUBITS:
        raise SizeError(f"n_qubits must be an integer in [1, {MAX_QUBITS}], got {n_qubits!r}")
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return Statevector(int(n_qubits), amps)


def apply_gates(state, gates):
    """Apply a gate sequence, returning a new state."""
    gates = list(gates)
    for g in gates:
        g.check(state.n_qubits)
    if not gates:
        return state
    work = state.amplitudes.copy().reshape(1, -1)
    kinds, targets, controls, angles = compile_gates(gates)
    _backend.impl.run_program(work, state.n_qubits, kinds, targets, controls, angles.reshape(1, -1))
    return Statevector(state.n_qubits, work[0])


def apply_gate(state, gate):
    """Apply one gate, returning a new state."""
    return apply_gates(state, [gate])


def run_circuit(n_qubits, gates):
    return apply_gates(init_state(n_qubits), gates)


def state_fidelity(a, b):
    """|<a|b>|^2, symmetric and phase-invariant."""
    if a.n_qubits != b.n_qubits:
        raise ShapeError(f"qubit counts differ: {a.n_qubits} vs {b.n_qubits}")
    overlap = np.vdot(a.amplitudes, b.amplitudes)
    return min(float(overlap.real ** 2 + overlap.imag ** 2), 1.0)


def reduced_density_matrix(state, qubit):
    """2x2 density matrix of ``qubit`` with all other qubits traced out."""
    if not 0 <= qubit < state.n_qubits:
        raise QubitIndexError(f"qubit {qubit} out of range for {state.n_qubits} qubits")
    view = state.amplitudes.reshape(-1, 2, 1 << qubit)
    comps = view.transpose(1, 0, 2).reshape(2, -1)
    return comps @ comps.conj().T


def pauli_expectation(rdm, pauli):
    """tr(P rho) for P in {X, Y, Z}."""
    try:
        op = PAULI[pauli]
    except KeyError:
        raise ValueError(f"pauli must be one of X, Y, Z, got {pauli!r}") from None
    value = np.trace(op @ np.asarray(rdm))
    if abs(value.imag) >= 1e-10:
        raise NumericalError(f"tr(P rho) has imaginary part {value.imag:.3e}; rho is not Hermitian")
    return float(value.real)


def bloch_vector(state, qubit):
    rdm = reduced_density_matrix(state, qubit)
    return np.array([pauli_expectation(rdm, p) for p in "XYZ"])
