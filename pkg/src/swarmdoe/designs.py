"""Design-quality mathematics for full second-order response-surface models.

An exact design is an N x K matrix whose rows are runs and whose columns are
factor settings inside a box-shaped region (default [-1, 1]^K).  Quality is
judged through the scaled prediction variance

    spv(x) = N * f(x)' (F'F)^{-1} f(x),

where f expands a point into the p = (K + 2)(K + 1)/2 second-order model
terms and F is the expanded design.  The G score of a design is the maximum
spv over a finite evaluation grid; lower is better, and p is a hard lower
bound, which gives the efficiency scale geff = 100 * p / G.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

# An information matrix counts as singular when its smallest eigenvalue
# falls below this fraction of its largest.
SINGULAR_RATIO = 1e-10

DEFAULT_GRID_LEVELS = 5


class SingularDesignError(ValueError):
    """Raised when a prediction-variance query needs a matrix inverse that
    does not exist because the design cannot estimate every model term."""


class DesignFileError(ValueError):
    """Raised when a design CSV file cannot be parsed into a design matrix."""


def p_count(k_factors: int) -> int:
    """Number of terms in the full second-order model for ``k_factors``.

    Counts one intercept, ``k`` linear terms, ``k * (k - 1) / 2`` two-way
    interactions, and ``k`` pure quadratics.
    """
    if k_factors < 1:
        raise ValueError(f"k_factors must be >= 1, got {k_factors}")
    return (k_factors + 2) * (k_factors + 1) // 2


@dataclass(frozen=True)
class ModelSpec:
    """Full second-order model in ``k_factors`` continuous factors.

    Term order is fixed: intercept, linear terms x1..xK, two-way
    interactions xi*xj with i < j in lexicographic order, then pure
    quadratics x1^2..xK^2.
    """

    k_factors: int
    order: int = 2

    def __post_init__(self) -> None:
        if self.k_factors < 1:
            raise ValueError(f"k_factors must be >= 1, got {self.k_factors}")
        if self.order != 2:
            raise ValueError("only the full second-order model is supported")

    @property
    def p(self) -> int:
        """Number of model terms."""
        return p_count(self.k_factors)

    @property
    def interaction_pairs(self) -> tuple[tuple[int, int], ...]:
        """Zero-based factor index pairs (i, j), i < j, in term order."""
        k = self.k_factors
        return tuple((i, j) for i in range(k) for j in range(i + 1, k))

    @property
    def term_names(self) -> tuple[str, ...]:
        names = ["1"]
        names += [f"x{i + 1}" for i in range(self.k_factors)]
        names += [f"x{i + 1}*x{j + 1}" for i, j in self.interaction_pairs]
        names += [f"x{i + 1}^2" for i in range(self.k_factors)]
        return tuple(names)


def normalize_bounds(
    bounds, k_factors: int
) -> tuple[np.ndarray, np.ndarray]:
    """Resolve a bounds argument to per-factor (lower, upper) arrays.

    ``bounds`` may be None (meaning [-1, 1] for every factor), a single
    (low, high) pair applied to every factor, or a length-K sequence of
    (low, high) pairs.
    """
    if bounds is None:
        lower = np.full(k_factors, -1.0)
        upper = np.full(k_factors, 1.0)
        return lower, upper
    arr = np.asarray(bounds, dtype=float)
    if arr.shape == (2,):
        arr = np.tile(arr, (k_factors, 1))
    if arr.shape != (k_factors, 2):
        raise ValueError(
            f"bounds must be a (low, high) pair or a ({k_factors}, 2) array, "
            f"got shape {arr.shape}"
        )
    lower, upper = arr[:, 0].copy(), arr[:, 1].copy()
    if not np.all(lower < upper):
        raise ValueError("every factor needs lower < upper bounds")
    return lower, upper


def _expand_stacked(points: np.ndarray, k_factors: int) -> np.ndarray:
    """Expand points of shape (..., K) into model terms of shape (..., p)."""
    if points.shape[-1] != k_factors:
        raise ValueError(
            f"expected {k_factors} columns, got {points.shape[-1]}"
        )
    k = k_factors
    out = np.empty(points.shape[:-1] + (p_count(k),), dtype=float)
    out[..., 0] = 1.0
    out[..., 1 : 1 + k] = points
    col = 1 + k
    for i in range(k):
        for j in range(i + 1, k):
            out[..., col] = points[..., i] * points[..., j]
            col += 1
    out[..., col : col + k] = points * points
    return out


def model_expand(x, spec: ModelSpec) -> np.ndarray:
    """Expand a single point into its second-order model terms.

    Parameters
    ----------
    x : array_like, shape (K,)
        Point in factor space.
    spec : ModelSpec

    Returns
    -------
    numpy.ndarray, shape (p,)
        Terms in the fixed order: 1, linears, i<j interactions, quadratics.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"x must be one-dimensional, got shape {x.shape}")
    return _expand_stacked(x, spec.k_factors)


def build_model_matrix(design, spec: ModelSpec) -> np.ndarray:
    """Expand an N x K design into its N x p model matrix."""
    design = np.asarray(design, dtype=float)
    if design.ndim != 2:
        raise ValueError(
            f"design must be a 2-d matrix, got shape {design.shape}"
        )
    return _expand_stacked(design, spec.k_factors)


@dataclass(frozen=True)
class InformationMatrix:
    """Moment matrix F'F of an expanded design, with a regularity verdict."""

    matrix: np.ndarray
    regular: bool


def information_matrix(design, spec: ModelSpec) -> InformationMatrix:
    """Compute F'F and report whether it is numerically invertible.

    The matrix counts as regular when its smallest eigenvalue is at least
    ``SINGULAR_RATIO`` times its largest (and the largest is positive).
    """
    f = build_model_matrix(design, spec)
    m = f.T @ f
    eigvals = np.linalg.eigvalsh(m)
    largest = eigvals[-1]
    regular = largest > 0.0 and eigvals[0] >= SINGULAR_RATIO * largest
    return InformationMatrix(matrix=m, regular=bool(regular))


def _factor_stacked(
    designs: np.ndarray, k_factors: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Eigen-factor the information matrices of stacked designs.

    Parameters
    ----------
    designs : numpy.ndarray, shape (B, N, K)

    Returns
    -------
    eigvals : (B, p), eigvecs : (B, p, p), singular : (B,) bool mask.
    """
    f = _expand_stacked(designs, k_factors)
    m = np.matmul(np.swapaxes(f, -1, -2), f)
    eigvals, eigvecs = np.linalg.eigh(m)
    largest = eigvals[..., -1]
    singular = (largest <= 0.0) | (eigvals[..., 0] < SINGULAR_RATIO * largest)
    return eigvals, eigvecs, singular


def _spv_stacked(
    designs: np.ndarray, points_model: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Scaled prediction variance of stacked designs at expanded points.

    Parameters
    ----------
    designs : numpy.ndarray, shape (B, N, K)
    points_model : numpy.ndarray, shape (G, p)
        Model-term expansion of the query points.

    Returns
    -------
    values : (B, G) spv values (garbage rows where singular), and the
    (B,) singular mask.
    """
    n_runs = designs.shape[-2]
    eigvals, eigvecs, singular = _factor_stacked(designs, designs.shape[-1])
    # Guard eigenvalues of singular designs so the batch math stays finite;
    # callers must mask those rows out.
    safe = np.where(singular[..., None], 1.0, eigvals)
    t = np.matmul(points_model, eigvecs)
    values = n_runs * np.matmul(t * t, (1.0 / safe)[..., None])[..., 0]
    return values, singular


def spv(x, design, spec: ModelSpec) -> float:
    """Scaled prediction variance of ``design`` at the point ``x``.

    Raises
    ------
    SingularDesignError
        If the design's information matrix is not invertible.
    """
    design = np.asarray(design, dtype=float)
    if design.ndim != 2:
        raise ValueError(
            f"design must be a 2-d matrix, got shape {design.shape}"
        )
    fx = model_expand(x, spec)
    values, singular = _spv_stacked(design[None], fx[None])
    if singular[0]:
        raise SingularDesignError(
            f"information matrix of the {design.shape[0]}-run design is "
            "singular; prediction variance is undefined"
        )
    return float(values[0, 0])


def level_values(lower: float, upper: float, n_levels: int) -> np.ndarray:
    """Equally spaced factor levels from ``lower`` to ``upper`` inclusive.

    Computed as ``lower + (upper - lower) * i / (n_levels - 1)`` so that a
    grid with ``4m + 1`` levels contains the 5-level grid's values bit for
    bit (the shared fractions i/(n-1) reduce to the same exact quotients),
    which keeps denser rescoring grids true supersets of the coarse one.
    """
    if n_levels < 2:
        raise ValueError(f"n_levels must be >= 2, got {n_levels}")
    return lower + (upper - lower) * (np.arange(n_levels) / (n_levels - 1))


@dataclass(frozen=True)
class ScoringGrid:
    """Cartesian evaluation grid with its pre-expanded model matrix.

    ``points`` enumerates the full product in row-major order (the last
    factor varies fastest).  ``model_matrix`` holds the expanded terms of
    every point and is what scoring actually consumes.
    """

    levels: tuple[np.ndarray, ...]
    points: np.ndarray
    model_matrix: np.ndarray = field(repr=False)

    @property
    def n_points(self) -> int:
        return self.points.shape[0]


def make_grid(
    spec: ModelSpec,
    levels_per_factor: int = DEFAULT_GRID_LEVELS,
    bounds=None,
) -> ScoringGrid:
    """Build an equally spaced Cartesian grid over the design region.

    Each factor gets ``levels_per_factor`` points from its lower to its
    upper bound inclusive, so the grid has ``levels_per_factor ** K``
    points and always contains the region's corners and center lines.
    """
    if levels_per_factor < 2:
        raise ValueError(
            f"levels_per_factor must be >= 2, got {levels_per_factor}"
        )
    lower, upper = normalize_bounds(bounds, spec.k_factors)
    levels = tuple(
        level_values(lower[j], upper[j], levels_per_factor)
        for j in range(spec.k_factors)
    )
    mesh = np.meshgrid(*levels, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=-1)
    return ScoringGrid(
        levels=levels,
        points=points,
        model_matrix=_expand_stacked(points, spec.k_factors),
    )


@dataclass(frozen=True)
class GScore:
    """Worst-case scaled prediction variance over a grid.

    ``argmax`` is the first grid point (in enumeration order) attaining the
    maximum, or None when the design is singular and ``value`` is +inf.
    ``n_spv_evals`` counts the grid evaluations performed (0 when singular).
    """

    value: float
    argmax: np.ndarray | None
    n_spv_evals: int


def g_score(design, grid: ScoringGrid, spec: ModelSpec) -> GScore:
    """Maximum scaled prediction variance of ``design`` over ``grid``.

    Singular designs score +inf rather than raising, so that search code
    can rank them as arbitrarily bad.
    """
    design = np.asarray(design, dtype=float)
    if design.ndim != 2:
        raise ValueError(
            f"design must be a 2-d matrix, got shape {design.shape}"
        )
    values, singular = _spv_stacked(design[None], grid.model_matrix)
    if singular[0]:
        return GScore(value=math.inf, argmax=None, n_spv_evals=0)
    row = values[0]
    idx = int(np.argmax(row))
    return GScore(
        value=float(row[idx]),
        argmax=grid.points[idx].copy(),
        n_spv_evals=row.size,
    )


def g_efficiency(g_value: float, p: int) -> float:
    """G efficiency 100 * p / G, in percent.

    100 means the theoretical optimum; an infinite G maps to 0.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if math.isinf(g_value):
        return 0.0
    if g_value < p:
        raise ValueError(
            f"G score {g_value} is below the lower bound p = {p}"
        )
    return 100.0 * p / g_value


def relative_efficiency(eff_a: float, eff_b: float) -> float:
    """Efficiency of design a relative to design b, as 100 * eff_a / eff_b."""
    if eff_b <= 0.0:
        raise ValueError(f"reference efficiency must be > 0, got {eff_b}")
    if eff_a < 0.0:
        raise ValueError(f"efficiency must be >= 0, got {eff_a}")
    return 100.0 * eff_a / eff_b


class GridScorer:
    """Batch objective: worst-case grid spv for a stack of candidate designs.

    Instances are callable on position stacks of shape (B, N, K) and return
    B scores, with +inf for candidates whose information matrix is singular.
    The grid expansion is precomputed once, so per-call cost is two stacked
    matrix products and one eigendecomposition.
    """

    def __init__(self, spec: ModelSpec, grid: ScoringGrid):
        self.spec = spec
        self.grid = grid

    def __call__(self, positions: np.ndarray) -> np.ndarray:
        positions = np.asarray(positions, dtype=float)
        if positions.ndim != 3:
            raise ValueError(
                f"positions must have shape (B, N, K), got {positions.shape}"
            )
        values, singular = _spv_stacked(positions, self.grid.model_matrix)
        scores = values.max(axis=1)
        scores[singular] = np.inf
        return scores


def save_design_csv(path, design) -> None:
    """Write a design matrix as CSV with header x1..xK.

    Values are written with 17 significant digits so that reading the file
    back reproduces the exact float64 design.
    """
    design = np.asarray(design, dtype=float)
    if design.ndim != 2:
        raise ValueError(
            f"design must be a 2-d matrix, got shape {design.shape}"
        )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{j + 1}" for j in range(design.shape[1])])
        for row in design:
            writer.writerow([f"{v:.17g}" for v in row])


def load_design_csv(path) -> np.ndarray:
    """Read a design matrix from CSV with header x1..xK.

    Raises
    ------
    DesignFileError
        On a missing or malformed header, a ragged row, or a value that
        does not parse as a number; the message names the offending row
        and column.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DesignFileError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        expected = [f"x{j + 1}" for j in range(len(header))]
        if header != expected:
            raise DesignFileError(
                f"{path}: header must be x1..x{len(header)}, got {header}"
            )
        k = len(header)
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != k:
                raise DesignFileError(
                    f"{path}: row {line_no} has {len(row)} fields, "
                    f"expected {k}"
                )
            parsed = []
            for col_idx, cell in enumerate(row):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise DesignFileError(
                        f"{path}: row {line_no}, column {header[col_idx]}: "
                        f"cannot parse {cell!r} as a number"
                    ) from None
            rows.append(parsed)
    if not rows:
        raise DesignFileError(f"{path}: no design rows after the header")
    return np.asarray(rows, dtype=float)


def validate_in_bounds(design, bounds=None, atol: float = 0.0) -> None:
    """Check every design coordinate lies inside the factor bounds.

    Raises ValueError naming the first offending run and factor.
    """
    design = np.asarray(design, dtype=float)
    lower, upper = normalize_bounds(bounds, design.shape[1])
    bad = (design < lower - atol) | (design > upper + atol)
    bad |= ~np.isfinite(design)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise ValueError(
            f"run {i + 1}, factor x{j + 1}: value {design[i, j]!r} is "
            f"outside [{lower[j]}, {upper[j]}]"
        )
