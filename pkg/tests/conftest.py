import numpy as np
import pytest

from qalsearch import _backend

BACKENDS = sorted(_backend.available())


@pytest.fixture(params=BACKENDS)
def each_backend(request):
    with _backend.use_backend(request.param):
        yield request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_state(rng, n):
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return v / np.linalg.norm(v)


# --- brute-force oracles, independent of the simulator --------------------

_MATS = {
    "H": lambda a: np.array([[1, 1], [1, -1]]) / np.sqrt(2),
    "RY": lambda a: np.array([[np.cos(a / 2), -np.sin(a / 2)], [np.sin(a / 2), np.cos(a / 2)]]),
    "RZ": lambda a: np.diag([np.exp(-0.5j * a), np.exp(0.5j * a)]),
}


def full_unitary(gate, n):
    """Dense 2^n unitary; qubit 0 is the rightmost Kronecker factor."""
    dim = 1 << n
    if gate.kind == "CX":
        U = np.zeros((dim, dim))
        for i in range(dim):
            j = i ^ (1 << gate.target) if (i >> gate.control) & 1 else i
            U[j, i] = 1
        return U
    U = np.array([[1.0]])
    for q in reversed(range(n)):
        U = np.kron(U, _MATS[gate.kind](gate.angle) if q == gate.target else np.eye(2))
    return U


def dense_run(n, gates, psi=None):
    if psi is None:
        psi = np.zeros(1 << n, complex)
        psi[0] = 1
    for g in gates:
        psi = full_unitary(g, n) @ psi
    return psi


def partial_trace_brute(psi, n, keep):
    rho = np.outer(psi, psi.conj())
    out = np.zeros((2, 2), complex)
    for i in range(1 << n):
        for j in range(1 << n):
            # entries that agree on every traced-out bit
            if (i & ~(1 << keep)) == (j & ~(1 << keep)):
                out[(i >> keep) & 1, (j >> keep) & 1] += rho[i, j]
    return out
