"""Gaussian-process regression over classical or quantum Gram matrices.

Targets are centered by their training mean before solving and the mean
is added back at prediction time. ``diag_reg`` is added to the diagonal of
the training Gram matrix (alpha for classical kernels, the regularization
strength for quantum kernels) and is never tuned.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .errors import ConditioningError, NumericalError, ShapeError, SizeError
from .kernels import (
    PairCache,
    QuantumFeatureCache,
    gram,
    gram_from_cache,
    is_quantum,
    kernel_diag,
)

VARIANCE_TOL = 1e-10
_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class HyperBounds:
    """(lower, upper) for every tunable leaf, in ``kernel.leaves()`` order."""

    pairs: tuple

    def __post_init__(self):
        pairs = tuple((float(lo), float(hi)) for lo, hi in self.pairs)
        for lo, hi in pairs:
            if not 0 < lo < hi:
                raise ValueError(f"bounds must satisfy 0 < lower < upper, got ({lo}, {hi})")
        object.__setattr__(self, "pairs", pairs)

    @property
    def lower(self):
        return np.array([p[0] for p in self.pairs])

    @property
    def upper(self):
        return np.array([p[1] for p in self.pairs])


@dataclass
class GprModel:
    kernel: object
    diag_reg: float
    training_inputs: np.ndarray
    target_mean: float
    factor: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    cache: object = field(default=None, repr=False)


def _find_bad_pivot(A, tol):
    n = A.shape[0]
    L = np.zeros_like(A)
    for j in range(n):
        v = A[j, j] - L[j, :j] @ L[j, :j]
        if not v > tol:
            return j, v
        L[j, j] = np.sqrt(v)
        L[j + 1:, j] = (A[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return n - 1, A[n - 1, n - 1]


def cholesky(A):
    """Lower Cholesky factor; raises ConditioningError naming the failing pivot.

    Pivots below ``n * eps * max(diag(A))`` count as failures so that
    numerically singular matrices are rejected instead of silently
    producing huge weights.
    """
    n = A.shape[0]
    tol = n * np.finfo(float).eps * max(float(np.max(np.abs(np.diag(A)))), 1e-300)
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        L = None
    if L is not None:
        piv = np.diag(L) ** 2
        j = int(np.argmin(piv))
        if piv[j] > tol:
            return L
    j, v = _find_bad_pivot(A, tol)
    raise ConditioningError(
        f"kernel matrix is not positive definite: pivot {j} = {v:.3e} (tolerance {tol:.1e})",
        pivot_index=j,
        pivot_value=float(v),
    )


def _check_xy(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 2:
        raise ShapeError(f"X must be a list of vectors, got shape {X.shape}")
    if len(X) != len(y) or len(y) < 1:
        raise SizeError(f"need len(X) == len(y) >= 1, got {len(X)} and {len(y)}")
    return X, y


def _train_gram(kernel, X, cache):
    if is_quantum(kernel):
        return gram(kernel, X, X, same_set=True, cache=cache)
    return gram_from_cache(kernel, cache if cache is not None else PairCache(X, X, True))


def _factorize(K, diag_reg):
    A = K.copy()
    A[np.diag_indices_from(A)] += diag_reg
    return cholesky(A)


def fit(kernel, X, y, diag_reg, cache=None):
    """Fit a GP with fixed kernel parameters.

    ``cache`` may be a ``QuantumFeatureCache`` reused across fits.
    """
    X, y = _check_xy(X, y)
    if is_quantum(kernel) and cache is None:
        cache = QuantumFeatureCache(kernel)
    K = _train_gram(kernel, X, cache if is_quantum(kernel) else None)
    L = _factorize(K, diag_reg)
    mean = float(np.mean(y))
    yc = y - mean
    w = solve_triangular(L.T, solve_triangular(L, yc, lower=True), lower=False)
    return GprModel(kernel, float(diag_reg), X, mean, L, w, cache if is_quantum(kernel) else None)


def predict(model, Xstar):
    """Posterior means and variances at the query rows."""
    Xstar = np.asarray(Xstar, dtype=np.float64)
    if Xstar.ndim == 1:
        Xstar = Xstar[None, :]
    if Xstar.shape[1] != model.training_inputs.shape[1]:
        raise ShapeError(
            f"query dimension {Xstar.shape[1]} != training dimension {model.training_inputs.shape[1]}"
        )
    Ks = gram(model.kernel, Xstar, model.training_inputs, same_set=False, cache=model.cache)
    means = model.target_mean + Ks @ model.weights
    v = solve_triangular(model.factor, Ks.T, lower=True)
    var = kernel_diag(model.kernel, Xstar) - np.einsum("ij,ij->j", v, v)
    if np.any(var < -VARIANCE_TOL):
        raise NumericalError(f"negative predictive variance {var.min():.3e}")
    return means, np.maximum(var, 0.0)


def _lml_from_gram(K, y, diag_reg):
    L = _factorize(K, diag_reg)
    yc = y - np.mean(y)
    alpha = solve_triangular(L, yc, lower=True)
    return float(-0.5 * alpha @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * len(y) * _LOG_2PI)


def log_marginal_likelihood(kernel, X, y, diag_reg, cache=None):
    """-1/2 yc^T A^-1 yc - 1/2 log det A - N/2 log 2 pi, A = K + diag_reg I."""
    X, y = _check_xy(X, y)
    if not is_quantum(kernel) and cache is None:
        cache = PairCache(X, X, True)
    return _lml_from_gram(_train_gram(kernel, X, cache), y, diag_reg)


def _coordinate_search(objective, theta0, lo, hi, tol, max_evals):
    theta = np.clip(theta0, lo, hi)
    best = objective(theta)
    n_evals = 1
    step = (hi - lo) / 4.0
    while np.any(step > tol) and n_evals < max_evals:
        improved = False
        for i in range(theta.size):
            if step[i] <= tol:
                continue
            for sign in (1.0, -1.0):
                cand = theta.copy()
                cand[i] = np.clip(theta[i] + sign * step[i], lo[i], hi[i])
                if cand[i] == theta[i]:
                    continue
                f = objective(cand)
                n_evals += 1
                if f > best:
                    theta, best, improved = cand, f, True
                    break
        if not improved:
            step = step * 0.5
    return theta, best, n_evals


def optimize_hyperparameters(kernel, bounds, X, y, diag_reg, n_restarts=2, rng=None,
                             tol=1e-2, max_evals=400):
    """Maximize the log marginal likelihood over classical kernel parameters.

    Derivative-free coordinate search in log-parameter space, started from
    the kernel's current parameters and from ``n_restarts`` points drawn
    uniformly in the log-space box. Returns the best kernel found.
    """
    if is_quantum(kernel):
        raise TypeError("quantum kernel parameters are fixed; nothing to optimize")
    X, y = _check_xy(X, y)
    if len(bounds.pairs) != len(kernel.leaves()):
        raise ShapeError(f"bounds cover {len(bounds.pairs)} parameters, kernel has {len(kernel.leaves())}")
    rng = rng if rng is not None else np.random.default_rng(0)
    cache = PairCache(X, X, True)
    lo, hi = np.log(bounds.lower), np.log(bounds.upper)

    def to_params(theta):
        return np.clip(np.exp(theta), bounds.lower, bounds.upper)

    def objective(theta):
        try:
            return _lml_from_gram(gram_from_cache(kernel.with_params(to_params(theta)), cache), y, diag_reg)
        except (ConditioningError, NumericalError):
            return -np.inf

    starts = [np.log(kernel.get_params())]
    starts += [rng.uniform(lo, hi) for _ in range(n_restarts)]
    best_theta, best_val = None, -np.inf
    for theta0 in starts:
        theta, val, _ = _coordinate_search(objective, theta0, lo, hi, tol, max_evals)
        if val > best_val:
            best_theta, best_val = theta, val
    if best_theta is None:
        raise ConditioningError("kernel matrix failed to factorize at every start point")
    return kernel.with_params(to_params(best_theta))


def mae(predictions, truth):
    """Mean absolute error."""
    p = np.asarray(predictions, dtype=np.float64).ravel()
    t = np.asarray(truth, dtype=np.float64).ravel()
    if p.size == 0 or t.size == 0:
        raise SizeError("mae needs at least one value")
    if p.size != t.size:
        raise ShapeError(f"length mismatch: {p.size} vs {t.size}")
    return float(np.mean(np.abs(p - t)))
