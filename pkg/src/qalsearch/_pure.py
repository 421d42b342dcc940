"""Pure numpy implementations of the numerical hot kernels.

Every function here has an identically named, identically behaving
counterpart in the compiled ``_core`` extension. ``_backend`` picks one at
import time; tests check that both agree.

Gate programs are encoded as parallel integer arrays. ``kinds`` holds the
opcode (see ``OP_*``), ``targets``/``controls`` the qubit indices (control
is -1 for one-qubit gates) and ``feature`` the column of the input row that
supplies the rotation angle (-1 for H and CX). Qubit 0 is the least
significant bit of the amplitude index.
"""
import numpy as np

OP_H = 0
OP_RY = 1
OP_RZ = 2
OP_CX = 3

_SQRT_HALF = 1.0 / np.sqrt(2.0)


def _apply_1q_batch(states, n_qubits, target, u00, u01, u10, u11):
    lo = 1 << target
    view = states.reshape(states.shape[0], -1, 2, lo)
    a0 = view[:, :, 0, :].copy()
    a1 = view[:, :, 1, :]
    # broadcast per-row gate entries over (hi, lo)
    shape = (-1, 1, 1)
    view[:, :, 0, :] = np.reshape(u00, shape) * a0 + np.reshape(u01, shape) * a1
    view[:, :, 1, :] = np.reshape(u10, shape) * a0 + np.reshape(u11, shape) * a1


def _apply_cx_batch(states, n_qubits, control, target):
    tensor = states.reshape((states.shape[0],) + (2,) * n_qubits)
    c_axis = n_qubits - control
    t_axis = n_qubits - target
    lo = [slice(None)] * (n_qubits + 1)
    hi = [slice(None)] * (n_qubits + 1)
    lo[c_axis] = hi[c_axis] = 1
    lo[t_axis] = 0
    hi[t_axis] = 1
    lo, hi = tuple(lo), tuple(hi)
    tmp = tensor[lo].copy()
    tensor[lo] = tensor[hi]
    tensor[hi] = tmp


def run_program(states, n_qubits, kinds, targets, controls, angles):
    """Apply one gate program in place to every row of ``states``.

    ``angles`` has shape (n_rows, n_gates); entries of non-rotation gates
    are ignored.
    """
    states = np.asarray(states)
    angles = np.asarray(angles, dtype=np.float64).reshape(states.shape[0], -1)
    for g in range(len(kinds)):
        kind = kinds[g]
        t = targets[g]
        if kind == OP_H:
            h = _SQRT_HALF
            _apply_1q_batch(states, n_qubits, t, h, h, h, -h)
        elif kind == OP_RY:
            half = 0.5 * angles[:, g]
            c, s = np.cos(half), np.sin(half)
            _apply_1q_batch(states, n_qubits, t, c, -s, s, c)
        elif kind == OP_RZ:
            half = 0.5 * angles[:, g]
            zero = np.zeros_like(half)
            _apply_1q_batch(states, n_qubits, t, np.exp(-1j * half), zero, zero, np.exp(1j * half))
        elif kind == OP_CX:
            _apply_cx_batch(states, n_qubits, controls[g], t)
        else:
            raise ValueError(f"unknown opcode {kind}")


def encode_batch(X, n_qubits, kinds, targets, controls, feature):
    """Run the encoding program on |0...0> once per row of ``X``."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    states = np.zeros((X.shape[0], 1 << n_qubits), dtype=np.complex128)
    states[:, 0] = 1.0
    feature = np.asarray(feature)
    angles = np.zeros((X.shape[0], len(kinds)))
    rot = feature >= 0
    angles[:, rot] = X[:, feature[rot]]
    run_program(states, n_qubits, kinds, targets, controls, angles)
    return states


def fidelity_matrix(SA, SB):
    """|<a_i|b_j>|^2 for all row pairs."""
    overlap = np.conj(SA) @ SB.T
    return overlap.real ** 2 + overlap.imag ** 2


def bloch_batch(states, n_qubits):
    """Per-qubit (<X>, <Y>, <Z>) of every row, concatenated over qubits."""
    out = np.empty((states.shape[0], 3 * n_qubits))
    for k in range(n_qubits):
        view = states.reshape(states.shape[0], -1, 2, 1 << k)
        a0 = view[:, :, 0, :]
        a1 = view[:, :, 1, :]
        rho01 = np.sum(a0 * np.conj(a1), axis=(1, 2))
        p0 = np.sum(a0.real ** 2 + a0.imag ** 2, axis=(1, 2))
        p1 = np.sum(a1.real ** 2 + a1.imag ** 2, axis=(1, 2))
        out[:, 3 * k] = 2.0 * rho01.real
        out[:, 3 * k + 1] = -2.0 * rho01.imag
        out[:, 3 * k + 2] = p0 - p1
    return out


def sqdist_matrix(A, B):
    """Pairwise squared Euclidean distances between rows of A and B."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    diff = A[:, None, :] - B[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def mbtr2_accumulate(inv_r, weights, classes, n_classes, grid, sigma):
    """Sum weighted normalized Gaussians of inverse distances per pair class.

    Returns a flat vector of ``n_classes`` blocks of ``len(grid)`` points.
    """
    grid = np.asarray(grid, dtype=np.float64)
    out = np.zeros((n_classes, grid.size))
    norm = 1.0 / (sigma * np.sqrt(2.0 * np.pi))
    if len(inv_r):
        z = (grid[None, :] - np.asarray(inv_r)[:, None]) / sigma
        contrib = np.asarray(weights)[:, None] * norm * np.exp(-0.5 * z * z)
        np.add.at(out, np.asarray(classes), contrib)
    return out.ravel()
