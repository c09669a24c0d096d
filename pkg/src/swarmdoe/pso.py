"""Matrix-particle swarm search over the space of exact designs.

Each particle is a full N x K candidate design; position and velocity are
matrices of the same shape.  Particles share progress through a sparse
random who-informs-whom graph that is resampled after every iteration that
fails to improve the swarm's best score, which keeps the search exploring
instead of collapsing onto one leader.

The walls of the design region reflect: a coordinate that leaves its factor
interval is moved onto the boundary and its velocity component is halved
and reversed.

All randomness flows through one counter-based generator per run.  The
stream is consumed in a fixed documented order (see ``init_state`` and
``step``), so a run is reproducible from its seed alone, and drawing the
per-particle coefficient blocks one by one or as a single stacked block
yields identical values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .designs import (
    GridScorer,
    ModelSpec,
    g_efficiency,
    g_score,
    make_grid,
    normalize_bounds,
)

# Smallest meaningful score improvement: the square root of float64
# machine epsilon, about 1.49e-8.
SQRT_EPS = float(np.sqrt(np.finfo(np.float64).eps))

STOP_EPSILON = "epsilon_improvement"
STOP_STAGNATION = "stagnation"
STOP_MAX_ITERATIONS = "max_iterations"


@dataclass(frozen=True)
class PsoParams:
    """Hyperparameters of the swarm search.

    ``omega`` damps the previous velocity; ``c1`` and ``c2`` weight the
    pulls toward a particle's own best and its informants' best.  The
    defaults are the constriction-type values omega = 0.72984 and
    c1 = c2 = 2.05 * omega = 1.496172.

    ``vmax`` bounds each velocity component per factor.  None means half
    the factor range, resolved against the bounds at initialization; use
    ``numpy.inf`` to disable clamping.

    A run stops on the first of: a positive best-score improvement smaller
    than ``improvement_epsilon``, ``stagnation_limit`` consecutive
    iterations with no improvement at all, or ``max_iterations``.
    """

    omega: float = 0.72984
    c1: float = 1.496172
    c2: float = 1.496172
    swarm_size: int = 150
    vmax: float | Sequence[float] | None = None
    expected_informees: int = 3
    improvement_epsilon: float = SQRT_EPS
    max_iterations: int = 10_000
    stagnation_limit: int = 500

    def __post_init__(self) -> None:
        if not 0.0 < self.omega < 1.0:
            raise ValueError(f"omega must be in (0, 1), got {self.omega}")
        # Zero attraction weights are allowed so pure-inertia decay can be
        # exercised directly; real searches use positive values.
        if self.c1 < 0.0 or self.c2 < 0.0:
            raise ValueError("c1 and c2 must be >= 0")
        if self.swarm_size < 1:
            raise ValueError(f"swarm_size must be >= 1, got {self.swarm_size}")
        if self.expected_informees < 1:
            raise ValueError(
                f"expected_informees must be >= 1, got {self.expected_informees}"
            )
        if not self.improvement_epsilon > 0.0:
            raise ValueError("improvement_epsilon must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.stagnation_limit < 1:
            raise ValueError("stagnation_limit must be >= 1")

    def resolve_vmax(self, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
        """Per-factor velocity limit implied by these params and bounds."""
        if self.vmax is None:
            return (upper - lower) / 2.0
        arr = np.asarray(self.vmax, dtype=float)
        if arr.ndim == 0:
            arr = np.full(lower.shape, float(arr))
        if arr.shape != lower.shape:
            raise ValueError(
                f"vmax must be scalar or length {lower.size}, got shape {arr.shape}"
            )
        if not np.all(arr > 0.0):
            raise ValueError("vmax entries must be positive")
        return arr.copy()


@dataclass(frozen=True)
class InformantGraph:
    """Directed who-informs-whom relation over the swarm.

    ``links[i, j]`` is True when particle i informs particle j.  Every
    particle informs itself.
    """

    links: np.ndarray

    @property
    def size(self) -> int:
        return self.links.shape[0]

    def informs(self, i: int) -> np.ndarray:
        """Indices of the particles that particle ``i`` informs."""
        return np.flatnonzero(self.links[i])

    def informants_of(self, i: int) -> np.ndarray:
        """Indices of the particles that inform particle ``i``."""
        return np.flatnonzero(self.links[:, i])


def gen_neighbors(
    swarm_size: int, expected_informees: int, rng: np.random.Generator
) -> InformantGraph:
    """Sample a random informant graph.

    Each particle informs itself and ``expected_informees`` particles drawn
    uniformly with replacement, so duplicate or self draws make some
    particles inform fewer than ``expected_informees`` distinct others.
    """
    if swarm_size < 1:
        raise ValueError(f"swarm_size must be >= 1, got {swarm_size}")
    links = np.zeros((swarm_size, swarm_size), dtype=bool)
    np.fill_diagonal(links, True)
    targets = rng.integers(0, swarm_size, size=(swarm_size, expected_informees))
    sources = np.repeat(np.arange(swarm_size), expected_informees)
    links[sources, targets.ravel()] = True
    return InformantGraph(links=links)


@dataclass
class Particle:
    """Snapshot of one particle (copies, safe to mutate)."""

    position: np.ndarray
    velocity: np.ndarray
    pbest_position: np.ndarray
    pbest_score: float


@dataclass
class SwarmState:
    """Complete mutable state of a swarm search.

    Positions, velocities and the per-particle bests are stored as stacked
    (S, N, K) arrays.  ``last_improvement`` is the decrease in
    ``gbest_score`` achieved by the most recent iteration (+inf before the
    first one), which drives both stopping and graph regeneration.
    """

    positions: np.ndarray
    velocities: np.ndarray
    pbest_positions: np.ndarray
    pbest_scores: np.ndarray
    lbest_positions: np.ndarray
    lbest_scores: np.ndarray
    graph: InformantGraph
    gbest_position: np.ndarray
    gbest_score: float
    lower: np.ndarray
    upper: np.ndarray
    vmax: np.ndarray
    rng: np.random.Generator
    iteration: int = 0
    eval_count: int = 0
    last_improvement: float = math.inf

    @property
    def swarm_size(self) -> int:
        return self.positions.shape[0]

    def particle(self, i: int) -> Particle:
        return Particle(
            position=self.positions[i].copy(),
            velocity=self.velocities[i].copy(),
            pbest_position=self.pbest_positions[i].copy(),
            pbest_score=float(self.pbest_scores[i]),
        )


def velocity_update(
    particle: Particle,
    lbest_position: np.ndarray,
    params: PsoParams,
    rng: np.random.Generator,
    vmax=None,
) -> np.ndarray:
    """New velocity for one particle.

    Draws two independent uniform coefficient matrices (own-best first,
    informant-best second) and clamps the result to ``vmax`` per factor.
    ``vmax`` falls back to ``params.vmax``; if both are None no clamp is
    applied, since the default limit depends on bounds this function does
    not see.
    """
    shape = particle.position.shape
    u1 = rng.random(shape)
    u2 = rng.random(shape)
    v = (
        params.omega * particle.velocity
        + params.c1 * u1 * (particle.pbest_position - particle.position)
        + params.c2 * u2 * (lbest_position - particle.position)
    )
    limit = vmax if vmax is not None else params.vmax
    if limit is not None:
        limit = np.asarray(limit, dtype=float)
        np.clip(v, -limit, limit, out=v)
    return v


def confine(position, velocity, bounds=None) -> tuple[np.ndarray, np.ndarray]:
    """Reflect out-of-bounds coordinates back onto the walls.

    A coordinate outside its factor interval is set to the violated
    boundary and its velocity component is replaced by minus half itself.
    In-bounds components pass through unchanged.  Works on a single N x K
    matrix or on stacked (..., N, K) arrays.
    """
    position = np.asarray(position, dtype=float)
    velocity = np.asarray(velocity, dtype=float)
    if position.shape != velocity.shape:
        raise ValueError(
            f"position shape {position.shape} != velocity shape {velocity.shape}"
        )
    lower, upper = normalize_bounds(bounds, position.shape[-1])
    below = position < lower
    above = position > upper
    out = below | above
    new_position = np.where(below, lower, np.where(above, upper, position))
    new_velocity = np.where(out, -0.5 * velocity, velocity)
    return new_position, new_velocity


def _refresh_lbest(state: SwarmState) -> None:
    """Recompute every particle's informant-best from current pbests.

    Ties go to the lowest-index informant.
    """
    # Column j of the mask holds the pbest scores of j's informants; every
    # particle informs itself, so no column is all-masked.
    masked = np.where(state.graph.links, state.pbest_scores[:, None], np.inf)
    idx = masked.argmin(axis=0)
    state.lbest_scores = state.pbest_scores[idx].copy()
    state.lbest_positions = state.pbest_positions[idx].copy()


def init_state(
    objective: Callable[[np.ndarray], np.ndarray],
    n_rows: int,
    k_factors: int,
    bounds=None,
    params: PsoParams | None = None,
    seed: int = 0,
) -> SwarmState:
    """Initialize a swarm for an arbitrary batch objective.

    ``objective`` maps a stacked (B, N, K) position array to B scores
    (lower is better, +inf allowed).  Positions start uniform inside the
    bounds; each velocity component starts uniform on
    [(lower - x) / 2, (upper - x) / 2], then is clamped to the velocity
    limit.  Every particle's best starts at its initial position, so the
    objective is evaluated once per particle here.

    Random stream order: one stacked position block, one stacked velocity
    block, then the informant-graph draws.
    """
    if params is None:
        params = PsoParams()
    if n_rows < 1:
        raise ValueError(f"n_rows must be >= 1, got {n_rows}")
    lower, upper = normalize_bounds(bounds, k_factors)
    vmax = params.resolve_vmax(lower, upper)
    rng = np.random.Generator(np.random.Philox(seed))
    s = params.swarm_size
    shape = (s, n_rows, k_factors)

    positions = lower + rng.random(shape) * (upper - lower)
    v_low = (lower - positions) / 2.0
    v_high = (upper - positions) / 2.0
    velocities = v_low + rng.random(shape) * (v_high - v_low)
    np.clip(velocities, -vmax, vmax, out=velocities)
    graph = gen_neighbors(s, params.expected_informees, rng)

    scores = np.asarray(objective(positions), dtype=float)
    if scores.shape != (s,):
        raise ValueError(
            f"objective must return {s} scores, got shape {scores.shape}"
        )
    gbest_idx = int(np.argmin(scores))
    state = SwarmState(
        positions=positions,
        velocities=velocities,
        pbest_positions=positions.copy(),
        pbest_scores=scores.copy(),
        lbest_positions=positions.copy(),
        lbest_scores=scores.copy(),
        graph=graph,
        gbest_position=positions[gbest_idx].copy(),
        gbest_score=float(scores[gbest_idx]),
        lower=lower,
        upper=upper,
        vmax=vmax,
        rng=rng,
        iteration=0,
        eval_count=s,
        last_improvement=math.inf,
    )
    _refresh_lbest(state)
    return state


def step(
    state: SwarmState,
    objective: Callable[[np.ndarray], np.ndarray],
    params: PsoParams | None = None,
) -> SwarmState:
    """Advance the swarm one iteration in place.

    Order of play: if the previous iteration improved the best score by
    exactly zero, resample the informant graph (consuming its draws first)
    and rebind informant bests under it; then draw one stacked (S, 2, N, K)
    uniform block (own-best coefficients before informant-best ones for
    each particle), update velocities and positions, reflect at the walls,
    score everything, update per-particle bests and the swarm best;
    finally refresh informant bests for the next iteration.

    The swarm best only moves on strict improvement, and score ties go to
    the lowest particle index.
    """
    if params is None:
        params = PsoParams()
    s = state.swarm_size
    if state.iteration > 0 and state.last_improvement == 0.0:
        state.graph = gen_neighbors(s, params.expected_informees, state.rng)
        _refresh_lbest(state)

    u = state.rng.random((s, 2) + state.positions.shape[1:])
    vel = (
        params.omega * state.velocities
        + params.c1 * u[:, 0] * (state.pbest_positions - state.positions)
        + params.c2 * u[:, 1] * (state.lbest_positions - state.positions)
    )
    np.clip(vel, -state.vmax, state.vmax, out=vel)
    pos = state.positions + vel
    pos, vel = confine(pos, vel, np.stack([state.lower, state.upper], axis=1))
    scores = np.asarray(objective(pos), dtype=float)

    state.positions = pos
    state.velocities = vel
    state.eval_count += s
    improved = scores < state.pbest_scores
    state.pbest_scores = np.where(improved, scores, state.pbest_scores)
    state.pbest_positions[improved] = pos[improved]

    prev = state.gbest_score
    best = float(np.min(state.pbest_scores))
    if best < prev:
        idx = int(np.argmin(state.pbest_scores))
        state.gbest_score = best
        state.gbest_position = state.pbest_positions[idx].copy()
        state.last_improvement = prev - best if math.isfinite(prev) else math.inf
    else:
        state.last_improvement = 0.0

    _refresh_lbest(state)
    state.iteration += 1
    return state


def run_swarm(
    objective: Callable[[np.ndarray], np.ndarray],
    n_rows: int,
    k_factors: int,
    bounds=None,
    params: PsoParams | None = None,
    seed: int = 0,
    collect_trace: bool = False,
) -> tuple[SwarmState, str, list[tuple[int, float]] | None]:
    """Run a full swarm search on an arbitrary batch objective.

    Returns the final state, the stop reason (one of ``STOP_EPSILON``,
    ``STOP_STAGNATION``, ``STOP_MAX_ITERATIONS``) and, when requested, a
    trace of (iteration, best score) at initialization and after every
    improving iteration.
    """
    if params is None:
        params = PsoParams()
    state = init_state(objective, n_rows, k_factors, bounds, params, seed)
    trace: list[tuple[int, float]] | None = None
    if collect_trace:
        trace = [(0, state.gbest_score)]
    stop_reason = STOP_MAX_ITERATIONS
    zero_streak = 0
    while state.iteration < params.max_iterations:
        step(state, objective, params)
        delta = state.last_improvement
        if collect_trace and delta > 0.0:
            trace.append((state.iteration, state.gbest_score))
        if delta == 0.0:
            zero_streak += 1
            if zero_streak >= params.stagnation_limit:
                stop_reason = STOP_STAGNATION
                break
        else:
            zero_streak = 0
            if delta < params.improvement_epsilon:
                stop_reason = STOP_EPSILON
                break
    return state, stop_reason, trace


@dataclass
class RunResult:
    """Outcome of one seeded swarm search.

    ``best_g`` is the worst-case grid prediction variance of
    ``best_design`` recomputed through the canonical scoring path after
    the search, so it matches a later standalone rescore bit for bit.
    ``eval_count`` counts objective evaluations: swarm size times
    (1 + iterations).  ``trace`` lists (iteration, best score) milestones
    when tracing was requested, else None.
    """

    best_design: np.ndarray
    best_g: float
    best_g_eff: float
    eval_count: int
    iterations: int
    seed: int
    stop_reason: str
    trace: list[tuple[int, float]] | None = None


def init_swarm(scenario, params: PsoParams | None = None, seed=None) -> SwarmState:
    """Initialize a swarm for a design-search scenario.

    ``scenario`` provides k_factors, n_runs_design, bounds, grid_levels,
    pso params, and base_seed (used when ``seed`` is None).
    """
    if params is None:
        params = scenario.pso
    if seed is None:
        seed = scenario.base_seed
    spec = ModelSpec(scenario.k_factors)
    grid = make_grid(spec, scenario.grid_levels, scenario.bounds)
    scorer = GridScorer(spec, grid)
    return init_state(
        scorer,
        scenario.n_runs_design,
        scenario.k_factors,
        scenario.bounds,
        params,
        seed,
    )


def run(
    scenario,
    params: PsoParams | None = None,
    seed=None,
    collect_trace: bool = False,
) -> RunResult:
    """Run one seeded swarm search for a design-search scenario.

    The best design found is rescored once through the single-design
    scoring path (not counted in ``eval_count``) so that the reported
    score is exactly reproducible from the design file alone.
    """
    if params is None:
        params = scenario.pso
    if seed is None:
        seed = scenario.base_seed
    spec = ModelSpec(scenario.k_factors)
    grid = make_grid(spec, scenario.grid_levels, scenario.bounds)
    scorer = GridScorer(spec, grid)
    state, stop_reason, trace = run_swarm(
        scorer,
        scenario.n_runs_design,
        scenario.k_factors,
        scenario.bounds,
        params,
        seed,
        collect_trace,
    )
    best = g_score(state.gbest_position, grid, spec)
    return RunResult(
        best_design=state.gbest_position.copy(),
        best_g=best.value,
        best_g_eff=g_efficiency(best.value, spec.p),
        eval_count=state.eval_count,
        iterations=state.iteration,
        seed=int(seed),
        stop_reason=stop_reason,
        trace=trace,
    )
