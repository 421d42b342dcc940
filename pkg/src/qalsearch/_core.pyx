# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels in ``_pure``.

Signatures and semantics mirror ``qalsearch._pure`` exactly.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, exp, sqrt, M_PI
from scipy.linalg.cython_blas cimport zgemm

cnp.import_array()

DEF OP_H = 0
DEF OP_RY = 1
DEF OP_RZ = 2
DEF OP_CX = 3


cdef inline void _apply_1q(double complex[::1] psi, Py_ssize_t dim, int target,
                           double complex u00, double complex u01,
                           double complex u10, double complex u11) noexcept nogil:
    cdef Py_ssize_t k, i, j
    cdef Py_ssize_t half = dim >> 1
    cdef Py_ssize_t bit = (<Py_ssize_t>1) << target
    cdef Py_ssize_t low_mask = bit - 1
    cdef double complex a, b
    for k in range(half):
        i = ((k & ~low_mask) << 1) | (k & low_mask)
        j = i | bit
        a = psi[i]
        b = psi[j]
        psi[i] = u00 * a + u01 * b
        psi[j] = u10 * a + u11 * b


cdef inline void _apply_ry(double complex[::1] psi, Py_ssize_t dim, int target,
                           double c, double s) noexcept nogil:
    cdef Py_ssize_t k, i, j
    cdef Py_ssize_t bit = (<Py_ssize_t>1) << target
    cdef Py_ssize_t low_mask = bit - 1
    cdef double complex a, b
    for k in range(dim >> 1):
        i = ((k & ~low_mask) << 1) | (k & low_mask)
        j = i | bit
        a = psi[i]
        b = psi[j]
        psi[i] = c * a - s * b
        psi[j] = s * a + c * b


cdef inline void _apply_rz(double complex[::1] psi, Py_ssize_t dim, int target,
                           double c, double s) noexcept nogil:
    # diag(c - i s, c + i s)
    cdef Py_ssize_t i
    cdef Py_ssize_t bit = (<Py_ssize_t>1) << target
    cdef double re, im, si
    for i in range(dim):
        re = psi[i].real
        im = psi[i].imag
        si = s if (i & bit) else -s
        psi[i] = (c * re - si * im) + 1j * (c * im + si * re)


cdef inline void _apply_cx(double complex[::1] psi, Py_ssize_t dim,
                           int control, int target) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef Py_ssize_t cbit = (<Py_ssize_t>1) << control
    cdef Py_ssize_t tbit = (<Py_ssize_t>1) << target
    cdef double complex tmp
    for i in range(dim):
        if (i & cbit) and not (i & tbit):
            j = i | tbit
            tmp = psi[i]
            psi[i] = psi[j]
            psi[j] = tmp


cdef void _run_row(double complex[::1] psi, Py_ssize_t dim,
                   const int[::1] kinds, const int[::1] targets,
                   const int[::1] controls, const double[::1] angles) noexcept nogil:
    cdef Py_ssize_t g
    cdef double h = sqrt(0.5)
    cdef double c, s
    for g in range(kinds.shape[0]):
        if kinds[g] == OP_H:
            _apply_1q(psi, dim, targets[g], h, h, h, -h)
        elif kinds[g] == OP_RY:
            c = cos(0.5 * angles[g])
            s = sin(0.5 * angles[g])
            _apply_ry(psi, dim, targets[g], c, s)
        elif kinds[g] == OP_RZ:
            _apply_rz(psi, dim, targets[g], cos(0.5 * angles[g]), sin(0.5 * angles[g]))
        else:
            _apply_cx(psi, dim, controls[g], targets[g])


def run_program(states, int n_qubits, kinds, targets, controls, angles):
    cdef double complex[:, ::1] S = states
    cdef const int[::1] k = np.ascontiguousarray(kinds, dtype=np.intc)
    cdef const int[::1] t = np.ascontiguousarray(targets, dtype=np.intc)
    cdef const int[::1] c = np.ascontiguousarray(controls, dtype=np.intc)
    cdef double[:, ::1] a = np.ascontiguousarray(
        np.asarray(angles, dtype=np.float64).reshape(S.shape[0], -1))
    cdef Py_ssize_t r
    for r in range(S.shape[0]):
        _run_row(S[r], S.shape[1], k, t, c, a[r])


def encode_batch(X, int n_qubits, kinds, targets, controls, feature):
    cdef double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef const int[::1] k = np.ascontiguousarray(kinds, dtype=np.intc)
    cdef const int[::1] t = np.ascontiguousarray(targets, dtype=np.intc)
    cdef const int[::1] c = np.ascontiguousarray(controls, dtype=np.intc)
    cdef const int[::1] f = np.ascontiguousarray(feature, dtype=np.intc)
    cdef Py_ssize_t rows = x.shape[0]
    cdef Py_ssize_t dim = (<Py_ssize_t>1) << n_qubits
    cdef Py_ssize_t n_gates = k.shape[0]
    out = np.zeros((rows, dim), dtype=np.complex128)
    cdef double complex[:, ::1] S = out
    cdef double[::1] angles = np.zeros(n_gates)
    cdef Py_ssize_t r, g
    for r in range(rows):
        for g in range(n_gates):
            angles[g] = x[r, f[g]] if f[g] >= 0 else 0.0
        S[r, 0] = 1.0
        _run_row(S[r], dim, k, t, c, angles)
    return out


def fidelity_matrix(SA, SB):
    cdef double complex[:, ::1] A = np.ascontiguousarray(SA, dtype=np.complex128)
    cdef double complex[:, ::1] B = np.ascontiguousarray(SB, dtype=np.complex128)
    cdef int na = A.shape[0], nb = B.shape[0], dim = A.shape[1]
    out = np.empty((na, nb))
    if na == 0 or nb == 0:
        return out
    overlap = np.empty((na, nb), dtype=np.complex128)
    cdef double complex[:, ::1] C = overlap
    cdef double[:, ::1] F = out
    cdef double complex one = 1.0, zero = 0.0
    cdef char transa = b'C', transb = b'N'
    # row-major C = conj(A) B^T is column-major conj(B^H A^T) of shape (nb, na);
    # zgemm yields its conjugate, which has the same modulus
    zgemm(&transa, &transb, &nb, &na, &dim, &one, &B[0, 0], &dim, &A[0, 0], &dim,
          &zero, &C[0, 0], &nb)
    cdef Py_ssize_t i, j
    for i in range(na):
        for j in range(nb):
            F[i, j] = C[i, j].real * C[i, j].real + C[i, j].imag * C[i, j].imag
    return out


def bloch_batch(states, int n_qubits):
    cdef const double complex[:, ::1] S = np.ascontiguousarray(states, dtype=np.complex128)
    cdef Py_ssize_t rows = S.shape[0], dim = S.shape[1]
    out = np.zeros((rows, 3 * n_qubits))
    cdef double[:, ::1] O = out
    cdef Py_ssize_t r, i, j, bit
    cdef int q
    cdef double complex a, b
    cdef double rr, ri, p0, p1
    for r in range(rows):
        for q in range(n_qubits):
            bit = (<Py_ssize_t>1) << q
            rr = 0.0
            ri = 0.0
            p0 = 0.0
            p1 = 0.0
            for i in range(dim):
                if i & bit:
                    continue
                j = i | bit
                a = S[r, i]
                b = S[r, j]
                # rho01 = sum a * conj(b)
                rr += a.real * b.real + a.imag * b.imag
                ri += a.imag * b.real - a.real * b.imag
                p0 += a.real * a.real + a.imag * a.imag
                p1 += b.real * b.real + b.imag * b.imag
            O[r, 3 * q] = 2.0 * rr
            O[r, 3 * q + 1] = -2.0 * ri
            O[r, 3 * q + 2] = p0 - p1
    return out


def sqdist_matrix(A, B):
    cdef const double[:, ::1] a = np.ascontiguousarray(A, dtype=np.float64)
    cdef const double[:, ::1] b = np.ascontiguousarray(B, dtype=np.float64)
    cdef Py_ssize_t na = a.shape[0], nb = b.shape[0], dim = a.shape[1]
    out = np.empty((na, nb))
    cdef double[:, ::1] D = out
    cdef Py_ssize_t i, j, d
    cdef double acc, diff
    for i in range(na):
        for j in range(nb):
            acc = 0.0
            for d in range(dim):
                diff = a[i, d] - b[j, d]
                acc += diff * diff
            D[i, j] = acc
    return out


def mbtr2_accumulate(inv_r, weights, classes, int n_classes, grid, double sigma):
    cdef const double[::1] x = np.ascontiguousarray(inv_r, dtype=np.float64)
    cdef const double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef const int[::1] cls = np.ascontiguousarray(classes, dtype=np.intc)
    cdef const double[::1] g = np.ascontiguousarray(grid, dtype=np.float64)
    cdef Py_ssize_t n_grid = g.shape[0]
    out = np.zeros(n_classes * n_grid)
    cdef double[::1] O = out
    cdef double norm = 1.0 / (sigma * sqrt(2.0 * M_PI))
    cdef Py_ssize_t p, k, base
    cdef double z
    for p in range(x.shape[0]):
        base = cls[p] * n_grid
        for k in range(n_grid):
            z = (g[k] - x[p]) / sigma
            O[base + k] += w[p] * norm * exp(-0.5 * z * z)
    return out
