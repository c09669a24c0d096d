"""Independent verification of design scores.

Search optimizes worst-case prediction variance over a coarse grid, so a
reported score can flatter a design whose variance spikes between grid
points.  The tools here rescore a design on a denser grid (or a Monte
Carlo point cloud for high dimension), audit design files on disk, and
cross-check small cases against a deliberately separate brute-force
implementation that shares no linear-algebra code with the fast path.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .designs import (
    DesignFileError,
    ModelSpec,
    _expand_stacked,
    _factor_stacked,
    g_score,
    level_values,
    load_design_csv,
    make_grid,
    normalize_bounds,
    validate_in_bounds,
)

# Expand a fine grid in one shot only while the model matrix stays modest;
# beyond this many matrix cells, stream the points in blocks instead.
_DIRECT_CELL_LIMIT = 20_000_000
_BLOCK_POINTS = 200_000


@dataclass(frozen=True)
class RescoreReport:
    """Coarse-versus-fine rescore of one design.

    ``discrepancy_pct`` is the percentage by which the fine score exceeds
    the coarse one; above a couple of percent the coarse grid was hiding a
    variance spike and the coarse score should not be trusted.  For a
    singular design both scores are +inf, the argmax is None and the
    discrepancy is 0.  ``fine_levels`` is 0 in Monte Carlo mode, where
    ``mc_samples`` random points (plus the whole coarse grid) replace the
    fine lattice.
    """

    coarse_g: float
    fine_g: float
    fine_levels: int
    argmax_fine: np.ndarray | None
    discrepancy_pct: float
    mc_samples: int = 0


def _grid_blocks(levels: tuple[np.ndarray, ...], block: int = _BLOCK_POINTS):
    """Yield the Cartesian grid in row-major blocks without materializing it.

    Enumeration order matches the one-shot grid (last factor fastest), so
    the first maximizer found is the same point either way.
    """
    sizes = [lv.size for lv in levels]
    total = int(np.prod(sizes))
    k = len(levels)
    for start in range(0, total, block):
        flat = np.arange(start, min(start + block, total), dtype=np.int64)
        pts = np.empty((flat.size, k))
        rem = flat
        for j in range(k - 1, -1, -1):
            pts[:, j] = levels[j][rem % sizes[j]]
            rem = rem // sizes[j]
        yield pts


def _max_spv_streamed(
    design: np.ndarray, spec: ModelSpec, blocks, n_runs: int
) -> tuple[float, np.ndarray | None]:
    """Worst-case spv over streamed point blocks (design already regular).

    Factors the information matrix once, then scans blocks; ties keep the
    earliest point seen.
    """
    eigvals, eigvecs, singular = _factor_stacked(
        design[None], spec.k_factors
    )
    if singular[0]:
        return math.inf, None
    inv_w = 1.0 / eigvals[0]
    v = eigvecs[0]
    best = -math.inf
    best_point = None
    for pts in blocks:
        t = _expand_stacked(pts, spec.k_factors) @ v
        vals = n_runs * ((t * t) @ inv_w)
        idx = int(np.argmax(vals))
        if vals[idx] > best:
            best = float(vals[idx])
            best_point = pts[idx].copy()
    return best, best_point


def rescore_fine(
    design,
    spec: ModelSpec | None = None,
    fine_levels: int = 21,
    bounds=None,
    coarse_levels: int = 5,
    mc_samples: int | None = None,
    mc_seed: int = 0,
) -> RescoreReport:
    """Rescore a design on its coarse grid and on a denser point set.

    ``fine_levels`` must be at least 5 and one more than a multiple of 4,
    so the fine lattice contains every coarse 5-level point and the fine
    score can never undercut the coarse one.  With ``mc_samples`` set, the
    fine set is that many uniform points plus the whole coarse grid
    instead, which is the practical choice when a fine lattice would be
    astronomically large.
    """
    design = np.asarray(design, dtype=float)
    if design.ndim != 2:
        raise ValueError(
            f"design must be a 2-d matrix, got shape {design.shape}"
        )
    if spec is None:
        spec = ModelSpec(design.shape[1])
    elif spec.k_factors != design.shape[1]:
        raise ValueError(
            f"design has {design.shape[1]} columns but the model expects "
            f"{spec.k_factors}"
        )
    if fine_levels < 5 or (fine_levels - 1) % 4 != 0:
        raise ValueError(
            "fine_levels must be >= 5 and congruent to 1 modulo 4, "
            f"got {fine_levels}"
        )
    coarse_grid = make_grid(spec, coarse_levels, bounds)
    coarse = g_score(design, coarse_grid, spec)
    if math.isinf(coarse.value):
        return RescoreReport(
            coarse_g=math.inf,
            fine_g=math.inf,
            fine_levels=0 if mc_samples else fine_levels,
            argmax_fine=None,
            discrepancy_pct=0.0,
            mc_samples=int(mc_samples or 0),
        )
    n_runs = design.shape[0]
    if mc_samples:
        if mc_samples < 1:
            raise ValueError(f"mc_samples must be >= 1, got {mc_samples}")
        lower, upper = normalize_bounds(bounds, spec.k_factors)
        rng = np.random.Generator(np.random.Philox(mc_seed))

        def blocks():
            remaining = int(mc_samples)
            while remaining > 0:
                m = min(remaining, _BLOCK_POINTS)
                yield lower + rng.random((m, spec.k_factors)) * (upper - lower)
                remaining -= m
            yield coarse_grid.points

        fine_g, argmax_fine = _max_spv_streamed(design, spec, blocks(), n_runs)
        report_levels = 0
    else:
        n_points = fine_levels**spec.k_factors
        if n_points * spec.p <= _DIRECT_CELL_LIMIT:
            fine = g_score(design, make_grid(spec, fine_levels, bounds), spec)
            fine_g, argmax_fine = fine.value, fine.argmax
        else:
            lower, upper = normalize_bounds(bounds, spec.k_factors)
            levels = tuple(
                level_values(lower[j], upper[j], fine_levels)
                for j in range(spec.k_factors)
            )
            fine_g, argmax_fine = _max_spv_streamed(
                design, spec, _grid_blocks(levels), n_runs
            )
        report_levels = fine_levels
    return RescoreReport(
        coarse_g=coarse.value,
        fine_g=fine_g,
        fine_levels=report_levels,
        argmax_fine=argmax_fine,
        discrepancy_pct=100.0 * (fine_g - coarse.value) / coarse.value,
        mc_samples=int(mc_samples or 0),
    )


def audit_design_file(
    path,
    spec: ModelSpec | None = None,
    fine_levels: int = 21,
    bounds=None,
    coarse_levels: int = 5,
) -> RescoreReport:
    """Load, validate, and rescore a design CSV.

    Parse problems and bounds violations raise ``DesignFileError`` naming
    the offending row and column.  A ``spec`` whose factor count differs
    from the file's column count is a dimension error.
    """
    design = load_design_csv(path)
    k = design.shape[1]
    if spec is not None and spec.k_factors != k:
        raise DesignFileError(
            f"{path}: file has {k} factor columns but the model expects "
            f"{spec.k_factors}"
        )
    if spec is None:
        spec = ModelSpec(k)
    try:
        validate_in_bounds(design, bounds)
    except ValueError as err:
        raise DesignFileError(f"{path}: {err}") from None
    return rescore_fine(
        design, spec, fine_levels, bounds, coarse_levels=coarse_levels
    )


def _expand_point_plain(x: tuple, k: int) -> list:
    """Second-order expansion via plain Python (no shared array code)."""
    terms = [1.0]
    terms.extend(float(x[i]) for i in range(k))
    for i, j in itertools.combinations(range(k), 2):
        terms.append(float(x[i]) * float(x[j]))
    terms.extend(float(x[i]) * float(x[i]) for i in range(k))
    return terms


def _invert_plain(matrix: list[list[float]]) -> list[list[float]] | None:
    """Gauss-Jordan inverse with partial pivoting, or None when singular.

    A pivot counts as zero below 1e-10 times the largest initial entry.
    """
    size = len(matrix)
    work = [row[:] + [1.0 if i == j else 0.0 for j in range(size)]
            for i, row in enumerate(matrix)]
    tol = 1e-10 * max(abs(v) for row in matrix for v in row)
    if tol == 0.0:
        return None
    for col in range(size):
        pivot_row = max(range(col, size), key=lambda r: abs(work[r][col]))
        if abs(work[pivot_row][col]) < tol:
            return None
        work[col], work[pivot_row] = work[pivot_row], work[col]
        pivot = work[col][col]
        work[col] = [v / pivot for v in work[col]]
        for r in range(size):
            if r == col:
                continue
            factor = work[r][col]
            if factor != 0.0:
                work[r] = [
                    a - factor * b for a, b in zip(work[r], work[col])
                ]
    return [row[size:] for row in work]


def brute_force_check(design, spec: ModelSpec, levels: int = 5, bounds=None) -> float:
    """Worst-case grid spv via a from-scratch implementation.

    Pure Python end to end: explicit term loops, hand-rolled Gauss-Jordan
    inverse, ``itertools.product`` grid walk.  Deliberately shares nothing
    with the fast scoring path so agreement between the two is meaningful
    evidence.  Small cases only (at most 10 model terms); returns +inf for
    a singular design.
    """
    if spec.p > 10:
        raise ValueError(
            f"brute-force check handles at most 10 model terms, got {spec.p}"
        )
    if levels < 2:
        raise ValueError(f"levels must be >= 2, got {levels}")
    rows = [tuple(float(v) for v in row) for row in np.asarray(design, float)]
    if any(len(row) != spec.k_factors for row in rows):
        raise ValueError("design column count does not match the model")
    k, p = spec.k_factors, spec.p
    expanded = [_expand_point_plain(row, k) for row in rows]
    moment = [
        [sum(f[i] * f[j] for f in expanded) for j in range(p)]
        for i in range(p)
    ]
    inverse = _invert_plain(moment)
    if inverse is None:
        return math.inf
    lower, upper = normalize_bounds(bounds, k)
    axes = [
        [lower[j] + t * (upper[j] - lower[j]) / (levels - 1) for t in range(levels)]
        for j in range(k)
    ]
    n_runs = len(rows)
    worst = -math.inf
    for point in itertools.product(*axes):
        f = _expand_point_plain(point, k)
        quad = sum(
            f[i] * inverse[i][j] * f[j] for i in range(p) for j in range(p)
        )
        worst = max(worst, n_runs * quad)
    return worst
