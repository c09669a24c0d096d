"""Command-line interface.

Subcommands: ``search`` runs a seeded batch of swarm searches and writes
its artifacts (catalog JSON, best-design CSV, summary CSV); ``score`` and
``compare`` rescore existing design files; ``grid-check`` audits a design
file on a denser grid; ``scenarios`` lists the built-in benchmark table.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path
from typing import Sequence

from .audit import audit_design_file, rescore_fine
from .designs import (
    DesignFileError,
    ModelSpec,
    g_efficiency,
    g_score,
    load_design_csv,
    make_grid,
    relative_efficiency,
)
from .pso import PsoParams
from .runner import (
    ScenarioConfig,
    builtin_scenarios,
    run_batch,
    save_best_design,
    save_catalog,
    summarize,
    write_summary_csv,
)

# Above this coarse-to-fine discrepancy (percent), a design's reported
# score is flagged as untrustworthy.
SUSPECT_DISCREPANCY_PCT = 2.0

# Fine rescoring of a search winner: dense lattice while affordable, Monte
# Carlo cloud beyond that.
_AUDIT_FINE_LEVELS = 21
_AUDIT_MC_FACTORS = 5
_AUDIT_MC_SAMPLES = 1_000_000


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swarmdoe",
        description=(
            "Search for exact designs with low worst-case prediction "
            "variance for full second-order models, and verify design "
            "files on the G-efficiency scale."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    search = sub.add_parser(
        "search",
        help="run a batch of seeded swarm searches and write its artifacts",
    )
    search.add_argument("--k", type=int, required=True, help="number of factors")
    search.add_argument("--n", type=int, required=True, help="runs in the design")
    search.add_argument(
        "--runs",
        type=int,
        default=10,
        help="independent searches in the batch (default: 10; the built-in "
        "benchmark scenarios use 140 or 210)",
    )
    search.add_argument("--seed", type=int, default=0, help="base seed (run i uses seed+i)")
    search.add_argument("--particles", type=int, default=150, help="swarm size")
    search.add_argument("--grid", type=int, default=5, help="scoring grid levels per factor")
    search.add_argument("--threads", type=int, default=1, help="worker processes")
    search.add_argument("--out", default=".", help="output directory")
    search.add_argument(
        "--trace",
        action="store_true",
        help="record (iteration, best score) milestones in the catalog",
    )
    search.set_defaults(func=_cmd_search)

    score = sub.add_parser("score", help="score a design file on a grid")
    score.add_argument("--design", required=True, help="design CSV file")
    score.add_argument("--grid", type=int, default=5, help="grid levels per factor")
    score.set_defaults(func=_cmd_score)

    compare = sub.add_parser(
        "compare", help="relative efficiency of design a versus design b"
    )
    compare.add_argument("--a", required=True, help="design CSV file a")
    compare.add_argument("--b", required=True, help="design CSV file b (reference)")
    compare.add_argument("--grid", type=int, default=5, help="grid levels per factor")
    compare.set_defaults(func=_cmd_compare)

    grid_check = sub.add_parser(
        "grid-check", help="audit a design file against a denser grid"
    )
    grid_check.add_argument("--design", required=True, help="design CSV file")
    grid_check.add_argument(
        "--grid", type=int, default=5, help="coarse grid levels per factor"
    )
    grid_check.add_argument(
        "--fine-grid",
        type=int,
        default=21,
        dest="fine_grid",
        help="fine grid levels per factor (>= 5, congruent to 1 mod 4)",
    )
    grid_check.set_defaults(func=_cmd_grid_check)

    scenarios = sub.add_parser("scenarios", help="list built-in benchmark scenarios")
    scenarios.set_defaults(func=_cmd_scenarios)

    return parser


def _score_file(path: str, grid_levels: int):
    design = load_design_csv(path)
    spec = ModelSpec(design.shape[1])
    grid = make_grid(spec, grid_levels)
    score = g_score(design, grid, spec)
    return design, spec, score


def _cmd_search(args) -> int:
    pso = PsoParams(swarm_size=args.particles)
    scenario = ScenarioConfig(
        k_factors=args.k,
        n_runs_design=args.n,
        grid_levels=args.grid,
        pso=pso,
        n_searches=args.runs,
        base_seed=args.seed,
        parallelism=args.threads,
        trace=args.trace,
    )
    print(
        f"searching: K={args.k} N={args.n} grid={args.grid} "
        f"runs={args.runs} seed={args.seed} particles={args.particles} "
        f"threads={args.threads}"
    )
    catalog = run_batch(scenario)
    for i, result in enumerate(catalog.results):
        print(
            f"run {i} seed {result.seed}: G={result.best_g:.6f} "
            f"eff={result.best_g_eff:.2f}% iters={result.iterations} "
            f"evals={result.eval_count} stop={result.stop_reason}"
        )
    summary = summarize(catalog)
    best = catalog.best
    print(f"best_run: {catalog.best_index}")
    print(f"best_G: {best.best_g}")
    print(f"best_G_eff: {best.best_g_eff}")
    print(f"min_releff: {summary.min_releff}")
    print(f"median_releff: {summary.median_releff}")
    print(f"max_releff: {summary.max_releff}")
    print(f"total_evals: {summary.total_evals}")
    print(f"log10_evals: {summary.log10_evals}")

    if math.isinf(best.best_g):
        print("audit_status: singular (every search ended singular)")
    else:
        spec = ModelSpec(args.k)
        if args.k >= _AUDIT_MC_FACTORS:
            report = rescore_fine(
                best.best_design, spec, mc_samples=_AUDIT_MC_SAMPLES
            )
        else:
            report = rescore_fine(
                best.best_design, spec, fine_levels=_AUDIT_FINE_LEVELS
            )
        print(f"audit_fine_G: {report.fine_g}")
        print(f"audit_discrepancy_pct: {report.discrepancy_pct}")
        if report.discrepancy_pct > SUSPECT_DISCREPANCY_PCT:
            print(
                "audit_status: suspect (fine rescore exceeds the grid score "
                f"by {report.discrepancy_pct:.2f}%)"
            )
        else:
            print("audit_status: ok")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    catalog_path = out_dir / "catalog.json"
    design_path = out_dir / "best_design.csv"
    summary_path = out_dir / "summary.csv"
    save_catalog(catalog_path, catalog)
    save_best_design(design_path, catalog)
    write_summary_csv(summary_path, catalog, summary)
    print(f"wrote: {catalog_path}")
    print(f"wrote: {design_path}")
    print(f"wrote: {summary_path}")
    return 0


def _cmd_score(args) -> int:
    design, spec, score = _score_file(args.design, args.grid)
    print(f"design: {args.design}")
    print(f"rows: {design.shape[0]}")
    print(f"factors: {spec.k_factors}")
    print(f"grid_levels: {args.grid}")
    print(f"G: {score.value}")
    print(f"G_eff: {g_efficiency(score.value, spec.p)}")
    if score.argmax is None:
        print("argmax: none (singular design)")
    else:
        print("argmax: " + ",".join(f"{v:.17g}" for v in score.argmax))
    return 0


def _cmd_compare(args) -> int:
    design_a, spec_a, score_a = _score_file(args.a, args.grid)
    design_b, spec_b, score_b = _score_file(args.b, args.grid)
    if spec_a.k_factors != spec_b.k_factors:
        raise ValueError(
            f"designs have different factor counts: {args.a} has "
            f"{spec_a.k_factors}, {args.b} has {spec_b.k_factors}"
        )
    eff_a = g_efficiency(score_a.value, spec_a.p)
    eff_b = g_efficiency(score_b.value, spec_b.p)
    print(f"G_a: {score_a.value}")
    print(f"G_eff_a: {eff_a}")
    print(f"G_b: {score_b.value}")
    print(f"G_eff_b: {eff_b}")
    print(f"releff: {relative_efficiency(eff_a, eff_b)}")
    return 0


def _cmd_grid_check(args) -> int:
    report = audit_design_file(
        args.design, fine_levels=args.fine_grid, coarse_levels=args.grid
    )
    print(f"design: {args.design}")
    print(f"coarse_levels: {args.grid}")
    print(f"coarse_G: {report.coarse_g}")
    print(f"fine_levels: {report.fine_levels}")
    print(f"fine_G: {report.fine_g}")
    if report.argmax_fine is None:
        print("argmax_fine: none (singular design)")
    else:
        print("argmax_fine: " + ",".join(f"{v:.17g}" for v in report.argmax_fine))
    print(f"discrepancy_pct: {report.discrepancy_pct}")
    if report.discrepancy_pct > SUSPECT_DISCREPANCY_PCT:
        print("status: suspect")
    else:
        print("status: ok")
    return 0


def _cmd_scenarios(args) -> int:
    print("K  N   searches  grid  particles")
    for sc in builtin_scenarios():
        print(
            f"{sc.k_factors}  {sc.n_runs_design:<3} {sc.n_searches:<8} "
            f"{sc.grid_levels:<5} {sc.pso.swarm_size}"
        )
    return 0


def cli_main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (DesignFileError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
