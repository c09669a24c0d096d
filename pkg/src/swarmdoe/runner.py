"""Batch campaigns: many independent seeded searches per design scenario.

A scenario fixes the problem (factors, run count, bounds, grid) and the
search settings; a batch launches ``n_searches`` runs seeded
``base_seed + index`` and keeps every result, so batches are reproducible
and embarrassingly parallel.  Efficiency statistics and evaluation-cost
extrapolation live here too.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .designs import ModelSpec, normalize_bounds, p_count, save_design_csv
from .pso import PsoParams, RunResult, run


@dataclass(frozen=True)
class ScenarioConfig:
    """One design-search problem plus its campaign settings.

    ``n_searches`` independent runs are seeded ``base_seed + run_index``.
    ``parallelism`` > 1 fans runs out over worker processes; results are
    identical either way because every run owns its seeded generator.
    """

    k_factors: int
    n_runs_design: int
    bounds: tuple = None
    grid_levels: int = 5
    pso: PsoParams = field(default_factory=PsoParams)
    n_searches: int = 140
    base_seed: int = 0
    parallelism: int = 1
    trace: bool = False

    def __post_init__(self) -> None:
        if self.k_factors < 1:
            raise ValueError(f"k_factors must be >= 1, got {self.k_factors}")
        if self.n_runs_design < 1:
            raise ValueError(
                f"n_runs_design must be >= 1, got {self.n_runs_design}"
            )
        if self.grid_levels < 2:
            raise ValueError(f"grid_levels must be >= 2, got {self.grid_levels}")
        if self.n_searches < 1:
            raise ValueError(f"n_searches must be >= 1, got {self.n_searches}")
        if self.parallelism < 1:
            raise ValueError(f"parallelism must be >= 1, got {self.parallelism}")
        normalize_bounds(self.bounds, self.k_factors)
        p = p_count(self.k_factors)
        if self.n_runs_design < p:
            warnings.warn(
                f"design has {self.n_runs_design} runs but the model has "
                f"{p} terms; every information matrix will be singular",
                stacklevel=2,
            )


def builtin_scenarios(base_seed: int = 0, parallelism: int = 1) -> list[ScenarioConfig]:
    """The 29 standard benchmark scenarios.

    K = 1, 2, 3 each pair with seven consecutive run counts starting at a
    small value above the term count and use 140 searches; K = 4 and 5 use
    a spread of four run counts and 210 searches.
    """
    table = [
        (1, range(3, 10), 140),
        (2, range(6, 13), 140),
        (3, range(10, 17), 140),
        (4, (15, 17, 20, 24), 210),
        (5, (21, 23, 26, 30), 210),
    ]
    scenarios = []
    for k, n_values, n_searches in table:
        for n in n_values:
            scenarios.append(
                ScenarioConfig(
                    k_factors=k,
                    n_runs_design=n,
                    n_searches=n_searches,
                    base_seed=base_seed,
                    parallelism=parallelism,
                )
            )
    return scenarios


@dataclass
class Catalog:
    """All results of one batch, in run-index order.

    ``best_index`` points at the lowest best_g; ties go to the lowest run
    index.
    """

    scenario: ScenarioConfig
    results: list[RunResult]
    best_index: int

    @property
    def best(self) -> RunResult:
        return self.results[self.best_index]


def _run_indexed(task: tuple[ScenarioConfig, int]) -> RunResult:
    scenario, index = task
    return run(
        scenario,
        seed=scenario.base_seed + index,
        collect_trace=scenario.trace,
    )


def run_batch(scenario: ScenarioConfig) -> Catalog:
    """Run a whole campaign and collect every result.

    The result list is ordered by run index and is bit-identical for any
    ``parallelism`` setting.
    """
    tasks = [(scenario, i) for i in range(scenario.n_searches)]
    if scenario.parallelism <= 1:
        results = [_run_indexed(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=scenario.parallelism) as pool:
            results = list(pool.map(_run_indexed, tasks))
    best_index = int(np.argmin([r.best_g for r in results]))
    return Catalog(scenario=scenario, results=results, best_index=best_index)


@dataclass(frozen=True)
class BatchSummary:
    """Efficiency statistics of a batch.

    ``g_effs`` lists every run's G efficiency in run order (0 for
    singular runs).  Relative efficiencies compare each of those to
    ``baseline_eff`` (by default the batch's own best, so the best run
    scores 100 and ``max_releff`` is 100).  When the baseline is zero,
    every run was singular and the relative columns are NaN.
    """

    best_index: int
    best_g: float
    best_g_eff: float
    baseline_eff: float
    g_effs: tuple[float, ...]
    releffs: tuple[float, ...]
    min_releff: float
    median_releff: float
    max_releff: float
    total_evals: int
    log10_evals: float


def summarize(catalog: Catalog, baseline_eff: float | None = None) -> BatchSummary:
    """Reduce a catalog to its headline statistics."""
    if not catalog.results:
        raise ValueError("catalog has no results to summarize")
    spec = ModelSpec(catalog.scenario.k_factors)
    best = catalog.best
    effs = [
        0.0 if math.isinf(r.best_g) else 100.0 * spec.p / r.best_g
        for r in catalog.results
    ]
    if baseline_eff is None:
        baseline_eff = max(effs)
    if baseline_eff > 0.0:
        releffs = tuple(100.0 * e / baseline_eff for e in effs)
        rel_min = min(releffs)
        rel_med = float(np.median(releffs))
        rel_max = max(releffs)
    else:
        releffs = tuple(math.nan for _ in effs)
        rel_min = rel_med = rel_max = math.nan
    total = sum(r.eval_count for r in catalog.results)
    return BatchSummary(
        best_index=catalog.best_index,
        best_g=best.best_g,
        best_g_eff=best.best_g_eff,
        baseline_eff=float(baseline_eff),
        g_effs=tuple(effs),
        releffs=releffs,
        min_releff=rel_min,
        median_releff=rel_med,
        max_releff=rel_max,
        total_evals=total,
        log10_evals=math.log10(total) if total > 0 else -math.inf,
    )


def scale_eval_count(
    total: float, n_observed: int, n_target: int
) -> tuple[float, tuple[float, float]]:
    """Extrapolate an evaluation count to a different number of searches.

    Treats ``total`` as a Poisson count observed over ``n_observed``
    searches; the estimate for ``n_target`` searches is
    ``total * n_target / n_observed`` with the normal-approximation 95%
    interval ``estimate +- 1.9596 * sqrt(total) * n_target / n_observed``.
    """
    if total < 0:
        raise ValueError(f"total must be >= 0, got {total}")
    if n_observed < 1:
        raise ValueError(f"n_observed must be >= 1, got {n_observed}")
    if n_target < 1:
        raise ValueError(f"n_target must be >= 1, got {n_target}")
    factor = n_target / n_observed
    estimate = total * factor
    half_width = 1.9596 * math.sqrt(total) * factor
    return estimate, (estimate - half_width, estimate + half_width)


@dataclass(frozen=True)
class CostSummary:
    """Evaluation cost of a batch, extrapolated to a target search count."""

    total_evals: int
    log10_evals: float
    n_observed: int
    n_target: int
    scaled_estimate: float
    scaled_ci95: tuple[float, float]


def cost_summary(catalog: Catalog, n_target: int) -> CostSummary:
    """Cost statistics for a catalog, scaled to ``n_target`` searches."""
    total = sum(r.eval_count for r in catalog.results)
    estimate, ci = scale_eval_count(total, len(catalog.results), n_target)
    return CostSummary(
        total_evals=total,
        log10_evals=math.log10(total) if total > 0 else -math.inf,
        n_observed=len(catalog.results),
        n_target=n_target,
        scaled_estimate=estimate,
        scaled_ci95=ci,
    )


def _json_num(x: float):
    """JSON-safe number: non-finite floats become strings."""
    x = float(x)
    return x if math.isfinite(x) else str(x)


def _pso_to_dict(params: PsoParams) -> dict:
    vmax = params.vmax
    if vmax is not None:
        vmax = np.asarray(vmax, dtype=float)
        vmax = (
            _json_num(vmax)
            if vmax.ndim == 0
            else [_json_num(v) for v in vmax]
        )
    return {
        "omega": params.omega,
        "c1": params.c1,
        "c2": params.c2,
        "swarm_size": params.swarm_size,
        "vmax": vmax,
        "expected_informees": params.expected_informees,
        "improvement_epsilon": params.improvement_epsilon,
        "max_iterations": params.max_iterations,
        "stagnation_limit": params.stagnation_limit,
    }


def _scenario_to_dict(scenario: ScenarioConfig) -> dict:
    lower, upper = normalize_bounds(scenario.bounds, scenario.k_factors)
    return {
        "k_factors": scenario.k_factors,
        "n_runs_design": scenario.n_runs_design,
        "bounds": [[lo, hi] for lo, hi in zip(lower, upper)],
        "grid_levels": scenario.grid_levels,
        "n_searches": scenario.n_searches,
        "base_seed": scenario.base_seed,
        "pso": _pso_to_dict(scenario.pso),
    }


def _result_to_dict(result: RunResult) -> dict:
    entry = {
        "seed": result.seed,
        "best_g": _json_num(result.best_g),
        "best_g_eff": _json_num(result.best_g_eff),
        "eval_count": result.eval_count,
        "iterations": result.iterations,
        "stop_reason": result.stop_reason,
    }
    if result.trace is not None:
        entry["trace"] = [[i, _json_num(g)] for i, g in result.trace]
    return entry


def catalog_to_dict(catalog: Catalog) -> dict:
    return {
        "scenario": _scenario_to_dict(catalog.scenario),
        "results": [_result_to_dict(r) for r in catalog.results],
        "best_index": catalog.best_index,
    }


def save_catalog(path, catalog: Catalog) -> None:
    """Write a catalog as JSON (designs are stored separately as CSV)."""
    with open(path, "w") as fh:
        json.dump(catalog_to_dict(catalog), fh, indent=2)
        fh.write("\n")


SUMMARY_COLUMNS = (
    "K",
    "N",
    "best_G",
    "best_Geff",
    "min_releff",
    "median_releff",
    "max_releff",
    "log10_evals",
)


def write_summary_csv(path, catalog: Catalog, summary: BatchSummary | None = None) -> None:
    """Write the one-row batch summary table."""
    if summary is None:
        summary = summarize(catalog)
    row = [
        catalog.scenario.k_factors,
        catalog.scenario.n_runs_design,
        f"{summary.best_g:.10g}",
        f"{summary.best_g_eff:.10g}",
        f"{summary.min_releff:.10g}",
        f"{summary.median_releff:.10g}",
        f"{summary.max_releff:.10g}",
        f"{summary.log10_evals:.10g}",
    ]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        writer.writerow(row)


def save_best_design(path, catalog: Catalog) -> None:
    """Write the batch's best design as CSV."""
    save_design_csv(path, catalog.best.best_design)
