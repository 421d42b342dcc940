"""Structure descriptors: two-body MBTR, PCA and min-max angle scaling."""
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _backend
from .errors import DegenerateGeometryError, ParseError, ShapeError, SizeError


@dataclass(frozen=True)
class Geometry:
    """Element symbols and Cartesian positions in Angstrom."""

    elements: tuple
    positions: np.ndarray = field(repr=False)

    def __post_init__(self):
        pos = np.array(self.positions, dtype=np.float64).reshape(-1, 3)
        elements = tuple(str(e) for e in self.elements)
        if len(elements) != len(pos):
            raise ShapeError(f"{len(elements)} elements but {len(pos)} positions")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        pos.flags.writeable = False
        object.__setattr__(self, "elements", elements)
        object.__setattr__(self, "positions", pos)

    def __len__(self):
        return len(self.elements)

    def with_elements(self, elements):
        return Geometry(tuple(elements), self.positions)


def parse_xyz(text):
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty XYZ input", 1)
    try:
        n = int(lines[0].strip())
    except ValueError:
        raise ParseError(f"atom count expected, got {lines[0]!r}", 1) from None
    if len(lines) < n + 2:
        raise ParseError(f"expected {n} atom lines, file has {max(len(lines) - 2, 0)}", len(lines))
    elements, positions = [], []
    for lineno in range(3, n + 3):
        parts = lines[lineno - 1].split()
        if len(parts) < 4:
            raise ParseError(f"expected 'Element x y z', got {lines[lineno - 1]!r}", lineno)
        try:
            positions.append([float(v) for v in parts[1:4]])
        except ValueError:
            raise ParseError(f"bad coordinate in {lines[lineno - 1]!r}", lineno) from None
        elements.append(parts[0])
    return Geometry(tuple(elements), np.array(positions))


def read_xyz(path):
    return parse_xyz(Path(path).read_text(encoding="utf-8"))


def format_xyz(geometry, comment=""):
    rows = [str(len(geometry)), comment.replace("\n", " ")]
    for el, (x, y, z) in zip(geometry.elements, geometry.positions):
        rows.append(f"{el} {x:.10f} {y:.10f} {z:.10f}")
    return "\n".join(rows) + "\n"


def write_xyz(geometry, path, comment=""):
    Path(path).write_text(format_xyz(geometry, comment), encoding="utf-8")


@dataclass(frozen=True)
class MbtrParams:
    """Two-body MBTR settings; inverse distances are in 1/Angstrom."""

    grid_min: float = 0.0
    grid_max: float = 1.0
    grid_points: int = 50
    sigma: float = 0.02
    decay: float = 0.5
    element_pairs: tuple = (("Si", "Si"), ("Si", "Al"), ("Al", "Al"))

    def __post_init__(self):
        if not self.grid_min < self.grid_max:
            raise ValueError("grid_min must be < grid_max")
        if self.grid_points < 2:
            raise ValueError("grid_points must be >= 2")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.decay < 0:
            raise ValueError("decay must be non-negative")
        object.__setattr__(self, "element_pairs", tuple(tuple(p) for p in self.element_pairs))

    @property
    def grid(self):
        return np.linspace(self.grid_min, self.grid_max, self.grid_points)

    @property
    def length(self):
        return len(self.element_pairs) * self.grid_points


def pair_geometry(geometry):
    """Upper-triangle atom index pairs and their distances."""
    i, j = np.triu_indices(len(geometry), k=1)
    r = np.linalg.norm(geometry.positions[i] - geometry.positions[j], axis=1)
    if np.any(r == 0.0):
        k = int(np.argmin(r))
        raise DegenerateGeometryError(f"atoms {i[k]} and {j[k]} coincide")
    return i, j, r


def mbtr2(geometry, params=MbtrParams()):
    """Broadened, distance-weighted histogram of inverse pair distances.

    One block of ``grid_points`` values per entry of ``element_pairs``.
    """
    if len(geometry) < 2:
        raise SizeError("need at least two atoms for a pair descriptor")
    lookup = {}
    for c, (a, b) in enumerate(params.element_pairs):
        lookup[(a, b)] = lookup[(b, a)] = c
    known = {e for pair in params.element_pairs for e in pair}
    unknown = set(geometry.elements) - known
    if unknown:
        raise ValueError(f"elements {sorted(unknown)} appear in no pair class")
    i, j, r = pair_geometry(geometry)
    els = geometry.elements
    classes = np.array([lookup.get((els[a], els[b]), -1) for a, b in zip(i, j)], dtype=np.intc)
    keep = classes >= 0
    return _backend.impl.mbtr2_accumulate(
        1.0 / r[keep],
        np.exp(-params.decay * r[keep]),
        classes[keep],
        len(params.element_pairs),
        params.grid,
        params.sigma,
    )


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray

    @property
    def n_components(self):
        return self.components.shape[0]

    @property
    def explained_variance_ratio(self):
        total = self.total_variance
        return self.explained_variance / total if total > 0 else np.zeros_like(self.explained_variance)

    total_variance: float = 0.0


def fit_pca(D, m):
    """Principal axes of the rows of ``D`` (sample covariance, ddof=1).

    Each component is signed so its largest-magnitude entry is positive.
    """
    D = np.asarray(D, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] < 2:
        raise SizeError("fit_pca needs a matrix with at least two rows")
    if not 1 <= m <= min(D.shape):
        raise SizeError(f"m must be in [1, {min(D.shape)}], got {m}")
    mean = D.mean(axis=0)
    _, s, vt = np.linalg.svd(D - mean, full_matrices=False)
    comps = vt[:m].copy()
    lead = np.argmax(np.abs(comps), axis=1)
    signs = np.sign(comps[np.arange(m), lead])
    signs[signs == 0] = 1.0
    comps *= signs[:, None]
    var = s ** 2 / (D.shape[0] - 1)
    return PcaModel(mean, comps, var[:m].copy(), float(var.sum()))


def pca_project(model, x):
    """components . (x - mean); accepts one vector or a matrix of rows."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.mean.size:
        raise ShapeError(f"expected dimension {model.mean.size}, got {x.shape[-1]}")
    return (x - model.mean) @ model.components.T


@dataclass(frozen=True)
class ScaleParams:
    """Per-column affine map ``x * scale + offset``."""

    scale: np.ndarray
    offset: np.ndarray
    constant: np.ndarray

    def apply(self, X):
        return np.asarray(X, dtype=np.float64) * self.scale + self.offset


def minmax_scale(columns, target=(0.0, np.pi)):
    """Map each column's observed [min, max] affinely onto ``target``.

    Constant columns map to the midpoint of ``target`` and trigger a
    warning. Values are never clamped.
    """
    X = np.asarray(columns, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    lo, hi = map(float, target)
    if not hi > lo:
        raise ValueError("target interval needs hi > lo")
    cmin, cmax = X.min(axis=0), X.max(axis=0)
    span = cmax - cmin
    constant = span == 0
    safe = np.where(constant, 1.0, span)
    scale = np.where(constant, 0.0, (hi - lo) / safe)
    offset = np.where(constant, 0.5 * (lo + hi), lo - cmin * scale)
    if np.any(constant):
        warnings.warn(f"constant columns {np.flatnonzero(constant).tolist()} mapped to midpoint")
    params = ScaleParams(scale, offset, constant)
    scaled = params.apply(X)
    # pin extremes exactly so round-off cannot leave [lo, hi]
    for c in np.flatnonzero(~constant):
        scaled[X[:, c] == cmin[c], c] = lo
        scaled[X[:, c] == cmax[c], c] = hi
    return scaled, params
