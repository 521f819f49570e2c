"""Seeded Monte Carlo estimation beyond the enumeration budget.

Replications are simulated in lockstep: one replication per row of a
vectorized state, stepping through k = 1..n_max together.  Every float
operation mirrors the scalar loop in the algorithm module (same kernels,
same accumulation and association order), so a lockstep replication is
bit-identical to running ``run_germ`` on the same derived generator.

Determinism contract: replication r draws from the generator derived from
(base_seed, r), consuming one ``random(n_max)`` block for the sample and,
only in the EmpiricalMcDiarmid gap mode, one k-sign block per step.
Replications are processed in fixed-size chunks and chunk results are
reduced in chunk order, so means, standard errors, and coverage counts do
not depend on the worker count.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .algorithm import AlgorithmSpec, CustomRule, GermAlgorithm, PlainErm, algo_label, run_germ
from .gap import (
    EmpiricalBernstein,
    EmpiricalMcDiarmid,
    FixedDelta,
    GapSpec,
    MassartDeterministic,
    UniformConvergence,
    bernstein_log_term,
    delta_uniform,
)
from .oracle import RiskCurve
from .problem import LearningProblem, draw_sample, optimal_risk, population_risk
from .rademacher import exact_rademacher, mcdiarmid_radius, rbar_massart
from .rng import draw_signs, philox_stream

CHUNK = 4096

POSITIVE_EXCESS_FLOOR = 1e-12

COVERAGE_COLUMNS = ("n", "event", "level", "coverage", "replications")


@dataclass(frozen=True)
class McConfig:
    """Replication count, horizon, base seed, and the n-grid to record."""

    replications: int
    n_max: int
    base_seed: int
    grid: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.replications < 1:
            raise ValueError(f"need at least one replication, got {self.replications}")
        if self.n_max < 1:
            raise ValueError(f"horizon must be >= 1, got {self.n_max}")
        if not 0 <= self.base_seed <= 2**64 - 1:
            raise ValueError(f"base seed must fit in 64 bits, got {self.base_seed}")
        if not self.grid:
            raise ValueError("the n-grid must be nonempty")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError(f"the n-grid must be strictly increasing, got {self.grid}")
        if self.grid[0] < 1 or self.grid[-1] > self.n_max:
            raise ValueError(f"the n-grid must lie within [1, {self.n_max}], got {self.grid}")


@dataclass(frozen=True)
class ExcessBoundEvent:
    """Excess risk within the high-probability bound, floor 1 - 2/n.

    Runs the gated loop with a uniform-convergence gap and checks, at each
    grid n, that L(h_n) - min_h L(h) stays within the additive slack built
    from the run's own Rademacher bound at step n.
    """

    algo: GermAlgorithm

    name = "excess-bound"

    def __post_init__(self) -> None:
        if not isinstance(self.algo, GermAlgorithm):
            raise ValueError("the excess-risk bound event runs the gated loop")
        gap = self.algo.gap
        if not (isinstance(gap, GapSpec) and isinstance(gap.variant, UniformConvergence)):
            raise ValueError(
                "the excess-risk bound is stated for uniform-convergence gaps; "
                f"got {gap!r}"
            )


@dataclass(frozen=True)
class EstimatorDeviationEvent:
    """Sign-weighted supremum within its concentration radius, floor 1 - delta.

    Algorithm-free: draws fresh signs at each grid n and compares the
    supremum against the exact expected supremum, which bounds grid sizes
    by the exact-enumeration budget.  delta = 1 is allowed and makes the
    floor vacuous.
    """

    delta: float

    name = "estimator-deviation"

    def __post_init__(self) -> None:
        if not 0.0 < self.delta <= 1.0:
            raise ValueError(f"delta must lie in (0, 1], got {self.delta}")


@dataclass(frozen=True)
class PairwiseBernsteinEvent:
    """All pairwise empirical-Bernstein bounds hold at once, floor 1 - delta."""

    delta: float

    name = "pairwise-bernstein"

    def __post_init__(self) -> None:
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")


BoundEvent = ExcessBoundEvent | EstimatorDeviationEvent | PairwiseBernsteinEvent


@dataclass(frozen=True)
class CoverageResult:
    """Measured event frequency per grid n against its theoretical floor."""

    event: str
    ns: tuple[int, ...]
    coverages: tuple[float, ...]
    floors: tuple[float, ...]
    replications: int
    problem: str
    seed: int
    algo: str | None = None

    def __post_init__(self) -> None:
        if len(self.coverages) != len(self.ns) or len(self.floors) != len(self.ns):
            raise ValueError("coverages, floors, and ns lengths differ")
        for c in self.coverages:
            if not 0.0 <= c <= 1.0:
                raise ValueError(f"coverage {c!r} outside [0, 1]")
        if self.replications < 1:
            raise ValueError("coverage needs at least one replication")


@dataclass(frozen=True)
class DecayFit:
    """Least-squares slope of log excess risk against log n.

    ``slope_bound`` is the hinted rate -1/(2 - beta) plus 0.15 of
    log-factor headroom; callers compare against it or against their own
    threshold.  ``degenerate`` marks fits with fewer than two positive
    excess points; slope, intercept, and residual are NaN there.
    """

    slope: float
    intercept: float
    residual: float
    beta_hint: float
    slope_bound: float
    ns: tuple[int, ...]
    excesses: tuple[float, ...]
    degenerate: bool


def _chunk_ranges(replications: int) -> list[tuple[int, int]]:
    return [(start, min(start + CHUNK, replications)) for start in range(0, replications, CHUNK)]


def _draw_outcome_block(problem: LearningProblem, cfg: McConfig, start: int, stop: int, keep_generators: bool):
    """Per-replication samples; generators returned when signs follow."""
    m = problem.loss.outcome_count
    cum = np.cumsum(problem.distribution.as_array())
    B = stop - start
    outcomes = np.empty((B, cfg.n_max), dtype=np.int64)
    gens = [] if keep_generators else None
    for i, r in enumerate(range(start, stop)):
        gen = philox_stream(cfg.base_seed, r)
        outcomes[i] = np.minimum(
            np.searchsorted(cum, gen.random(cfg.n_max), side="right"), m - 1
        )
        if keep_generators:
            gens.append(gen)
    return outcomes, gens


def _sign_sup_block(loss_array: np.ndarray, one_hot: np.ndarray, signs: np.ndarray, k: int) -> np.ndarray:
    """Vectorized sign-weighted supremum at step k, one value per row.

    Mirrors the scalar kernel: integer signed counts per outcome, then a
    float accumulation in ascending outcome order, max over rows, divide
    by k.  Integer W is exact, so both paths round identically.
    """
    B = signs.shape[0]
    m = loss_array.shape[1]
    W = np.einsum("bkm,bk->bm", one_hot[:, :k, :], signs)
    T = np.zeros((B, loss_array.shape[0]))
    for z in range(m):
        T += W[:, z, np.newaxis] * loss_array[:, z]
    return T.max(axis=1) / k


def _lockstep_block(problem: LearningProblem, algo: AlgorithmSpec, cfg: McConfig, start: int, stop: int, capture_rbar: bool):
    """Run all replications of one chunk in lockstep.

    Returns (chosen, rbars): ``chosen`` maps each grid position to the
    chosen indices (B,), ``rbars`` to per-replication Rademacher bounds
    (EmpiricalMcDiarmid), per-step scalars (other uniform modes), or None.
    """
    loss = problem.loss
    L = loss.as_array()
    LT = L.T.copy()
    m = loss.outcome_count
    class_size = loss.class_size
    germ = isinstance(algo, GermAlgorithm)

    empirical = False
    massart = user = fixed = bernstein = False
    if germ:
        gap = algo.gap
        if isinstance(gap, FixedDelta):
            fixed = True
        elif isinstance(gap.variant, EmpiricalBernstein):
            bernstein = True
        else:
            mode = gap.variant.mode
            if isinstance(mode, EmpiricalMcDiarmid):
                empirical = True
            elif isinstance(mode, MassartDeterministic):
                massart = True
            else:
                user = True
                if len(mode.values) < cfg.n_max:
                    raise ValueError(
                        f"UserConstant supplies {len(mode.values)} values, "
                        f"run needs {cfg.n_max}"
                    )

    outcomes, gens = _draw_outcome_block(problem, cfg, start, stop, empirical)
    B = stop - start
    rows_idx = np.arange(B)
    S = np.zeros((B, class_size))
    counts = np.zeros((B, m), dtype=np.int64) if bernstein else None
    one_hot = (outcomes[:, :, np.newaxis] == np.arange(m)).astype(np.int64) if empirical else None
    if bernstein:
        # squared loss differences, indexed [candidate, incumbent, outcome]
        D2 = (L[:, np.newaxis, :] - L[np.newaxis, :, :]) ** 2
    incumbent = np.full(B, algo.initial_index if germ else 0, dtype=np.int64)

    grid_set = set(cfg.grid)
    chosen: dict[int, np.ndarray] = {}
    rbars: dict[int, np.ndarray] = {}
    scalar_rbars: dict[int, float] = {}

    for k in range(1, cfg.n_max + 1):
        z = outcomes[:, k - 1]
        S += LT[z]
        if bernstein:
            counts[rows_idx, z] += 1
        cand = np.argmin(S, axis=1)
        if germ:
            if fixed:
                delta = algo.gap.value
            elif bernstein:
                if k == 1:
                    delta = math.inf
                else:
                    d2 = D2[cand, incumbent]
                    q = np.zeros(B)
                    for zz in range(m):
                        q += counts[:, zz] * d2[:, zz]
                    log_term = bernstein_log_term(k, class_size)
                    delta = np.sqrt(2.0 * q * log_term) / (k - 1)
                    delta = delta + 5.0 * log_term / (k - 1)
                    delta = delta + 2.0 / k
            else:
                radius = mcdiarmid_radius(k)
                if empirical:
                    signs = np.empty((B, k), dtype=np.int64)
                    for i, gen in enumerate(gens):
                        signs[i] = draw_signs(gen, k)
                    sup = _sign_sup_block(L, one_hot, signs, k)
                    rbar = np.maximum(0.0, sup + radius)
                    delta = 4.0 * rbar
                    delta = delta + radius
                    delta = delta + 2.0 / k
                else:
                    rbar_k = rbar_massart(class_size, k) if massart else algo.gap.variant.mode.values[k - 1]
                    delta = delta_uniform(k, rbar_k)
            diff = (S[rows_idx, cand] - S[rows_idx, incumbent]) / k
            updated = diff <= -delta
            incumbent = np.where(updated, cand, incumbent)
        else:
            incumbent = cand
        if k in grid_set:
            chosen[k] = incumbent.copy()
            if capture_rbar:
                if empirical:
                    rbars[k] = rbar.copy()
                elif massart or user:
                    scalar_rbars[k] = rbar_k
    if capture_rbar:
        return chosen, (rbars if empirical else scalar_rbars)
    return chosen, None


def _scalar_block(problem: LearningProblem, algo: GermAlgorithm, cfg: McConfig, start: int, stop: int, capture_rbar: bool):
    """Per-replication fallback for custom learner rules."""
    needs_rng = (
        isinstance(algo.gap, GapSpec)
        and isinstance(algo.gap.variant, UniformConvergence)
        and isinstance(algo.gap.variant.mode, EmpiricalMcDiarmid)
    )
    B = stop - start
    chosen = {n: np.empty(B, dtype=np.int64) for n in cfg.grid}
    rbars = {n: np.empty(B) for n in cfg.grid} if capture_rbar else None
    for i, r in enumerate(range(start, stop)):
        gen = philox_stream(cfg.base_seed, r)
        sample = draw_sample(problem, cfg.n_max, gen)
        trajectory = run_germ(
            problem,
            sample,
            algo.gap,
            learner=algo.learner,
            initial=algo.initial_index,
            rng=gen if needs_rng else None,
        )
        for n in cfg.grid:
            step = trajectory.steps[n - 1]
            chosen[n][i] = step.chosen_index
            if capture_rbar:
                rbars[n][i] = step.rbar
    return chosen, rbars


def _chosen_block(problem: LearningProblem, algo: AlgorithmSpec, cfg: McConfig, start: int, stop: int, capture_rbar: bool):
    """Route one chunk to the lockstep engine or the scalar fallback."""
    if isinstance(algo, GermAlgorithm) and isinstance(algo.learner, CustomRule):
        return _scalar_block(problem, algo, cfg, start, stop, capture_rbar)
    return _lockstep_block(problem, algo, cfg, start, stop, capture_rbar)


def _risk_chunk(problem: LearningProblem, algo: AlgorithmSpec, cfg: McConfig, start: int, stop: int):
    """Chunk statistics per grid n: (sum, sum of squares, min, max)."""
    chosen, _ = _chosen_block(problem, algo, cfg, start, stop, capture_rbar=False)
    pop = np.array([population_risk(problem, h) for h in range(problem.class_size)])
    stats = []
    for n in cfg.grid:
        values = pop[chosen[n]]
        stats.append(
            (float(values.sum()), float((values * values).sum()), float(values.min()), float(values.max()))
        )
    return stats


def mc_risk_curve(
    problem: LearningProblem,
    algo: AlgorithmSpec,
    cfg: McConfig,
    *,
    workers: int = 1,
) -> RiskCurve:
    """Estimated expected-risk curve over the configured grid.

    Each replication r draws its own generator from (base_seed, r), draws
    one sample of length n_max, and runs the loop once; the prefix
    trajectory yields every grid n.  The result is bit-identical for any
    worker count.  Custom learner rules fall back to a per-replication
    scalar loop and must be picklable when workers > 1.
    """
    if workers < 1:
        raise ValueError(f"worker count must be >= 1, got {workers}")
    _validate_mc_algo(problem, algo, cfg)
    ranges = _chunk_ranges(cfg.replications)
    if workers == 1 or len(ranges) == 1:
        parts = [_risk_chunk(problem, algo, cfg, a, b) for a, b in ranges]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_risk_chunk, problem, algo, cfg, a, b) for a, b in ranges]
            parts = [f.result() for f in futures]
    R = cfg.replications
    values = []
    stderrs = []
    for gi in range(len(cfg.grid)):
        total = 0.0
        total_sq = 0.0
        lo = math.inf
        hi = -math.inf
        for part in parts:
            s, sq, mn, mx = part[gi]
            total += s
            total_sq += sq
            lo = min(lo, mn)
            hi = max(hi, mx)
        mean = total / R
        if R == 1 or lo == hi:
            stderr = 0.0
        else:
            var = max(0.0, (total_sq - R * mean * mean) / (R - 1))
            stderr = math.sqrt(var / R)
        values.append(mean)
        stderrs.append(stderr)
    return RiskCurve(
        ns=cfg.grid,
        values=tuple(values),
        stderrs=tuple(stderrs),
        kind="mc",
        problem=problem.name,
        algo=algo_label(algo),
        seed=cfg.base_seed,
        replications=R,
        degenerate=R == 1,
    )


def _validate_mc_algo(problem: LearningProblem, algo: AlgorithmSpec, cfg: McConfig) -> None:
    if isinstance(algo, PlainErm):
        return
    if not isinstance(algo, GermAlgorithm):
        raise ValueError(f"unknown algorithm spec {algo!r}")
    if isinstance(algo.gap, GapSpec):
        if algo.gap.class_size != problem.class_size:
            raise ValueError(
                f"gap is bound to class size {algo.gap.class_size}, "
                f"problem has {problem.class_size}"
            )
    if algo.initial_index >= problem.class_size:
        raise ValueError(
            f"initial index {algo.initial_index} out of range "
            f"for class of size {problem.class_size}"
        )


def _excess_chunk(problem: LearningProblem, event: ExcessBoundEvent, cfg: McConfig, start: int, stop: int):
    chosen, rbars = _chosen_block(problem, event.algo, cfg, start, stop, capture_rbar=True)
    pop = np.array([population_risk(problem, h) for h in range(problem.class_size)])
    star = optimal_risk(problem)[0]
    counts = []
    for n in cfg.grid:
        excess = pop[chosen[n]] - star
        rbar = rbars[n]
        bound = 12.0 * rbar
        bound = bound + 3.0 * mcdiarmid_radius(n)
        bound = bound + 2.0 / n
        counts.append(int(np.count_nonzero(excess <= bound)))
    return counts


def _estimator_chunk(problem: LearningProblem, event: EstimatorDeviationEvent, cfg: McConfig, start: int, stop: int, exact_sups: dict[int, float]):
    outcomes, gens = _draw_outcome_block(problem, cfg, start, stop, keep_generators=True)
    m = problem.loss.outcome_count
    L = problem.loss.as_array()
    one_hot = (outcomes[:, :, np.newaxis] == np.arange(m)).astype(np.int64)
    B = stop - start
    # consumption order: each replication draws its grid sign blocks in
    # ascending n, all from its own generator
    sign_blocks = {n: np.empty((B, n), dtype=np.int64) for n in cfg.grid}
    for i, gen in enumerate(gens):
        for n in cfg.grid:
            sign_blocks[n][i] = draw_signs(gen, n)
    counts = []
    for n in cfg.grid:
        sup = _sign_sup_block(L, one_hot, sign_blocks[n], n)
        radius = math.sqrt(2.0 * math.log(2.0 / event.delta) / n)
        counts.append(int(np.count_nonzero(np.abs(sup - exact_sups[n]) <= radius)))
    return counts


def _pairwise_chunk(problem: LearningProblem, event: PairwiseBernsteinEvent, cfg: McConfig, start: int, stop: int):
    outcomes, _ = _draw_outcome_block(problem, cfg, start, stop, keep_generators=False)
    m = problem.loss.outcome_count
    L = problem.loss.as_array()
    H = problem.class_size
    pop = np.array([population_risk(problem, h) for h in range(H)])
    D2 = (L[:, np.newaxis, :] - L[np.newaxis, :, :]) ** 2
    B = stop - start
    counts = np.zeros((B, m), dtype=np.int64)
    prev = 0
    counts_out = []
    for n in cfg.grid:
        seg = outcomes[:, prev:n]
        np.add.at(counts, (np.repeat(np.arange(B), n - prev), seg.ravel()), 1)
        prev = n
        emp = counts @ L.T / n
        log_term = math.log(2.0 * H * H / event.delta)
        ok = np.ones(B, dtype=bool)
        for a in range(H):
            for c in range(a + 1, H):
                sq = counts @ D2[a, c]
                rhs = np.sqrt(2.0 * sq * log_term) / (n - 1) + 5.0 * log_term / (n - 1)
                gap = (pop[a] - pop[c]) - (emp[:, a] - emp[:, c])
                ok &= np.abs(gap) <= rhs
        counts_out.append(int(np.count_nonzero(ok)))
    return counts_out


def mc_bound_coverage(
    problem: LearningProblem,
    event: BoundEvent,
    cfg: McConfig,
    *,
    workers: int = 1,
) -> CoverageResult:
    """Fraction of replications where a bound event holds, per grid n.

    The theoretical floor is 1 - 2/n for the excess-risk bound and
    1 - delta for the deviation and pairwise events.  The estimator
    deviation event compares against exact expected suprema, so its grid
    is limited by the enumeration budget; the pairwise event needs every
    grid n >= 2.
    """
    if workers < 1:
        raise ValueError(f"worker count must be >= 1, got {workers}")
    if isinstance(event, ExcessBoundEvent):
        _validate_mc_algo(problem, event.algo, cfg)
        chunk = _excess_chunk
        floors = tuple(1.0 - 2.0 / n for n in cfg.grid)
        algo = algo_label(event.algo)
        extra: tuple = ()
    elif isinstance(event, EstimatorDeviationEvent):
        exact_sups = {n: exact_rademacher(problem, n) for n in cfg.grid}
        chunk = _estimator_chunk
        floors = tuple(1.0 - event.delta for _ in cfg.grid)
        algo = None
        extra = (exact_sups,)
    elif isinstance(event, PairwiseBernsteinEvent):
        if cfg.grid[0] < 2:
            raise ValueError("the pairwise event needs every grid n >= 2")
        chunk = _pairwise_chunk
        floors = tuple(1.0 - event.delta for _ in cfg.grid)
        algo = None
        extra = ()
    else:
        raise ValueError(f"unknown bound event {event!r}")
    ranges = _chunk_ranges(cfg.replications)
    if workers == 1 or len(ranges) == 1:
        parts = [chunk(problem, event, cfg, a, b, *extra) for a, b in ranges]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(chunk, problem, event, cfg, a, b, *extra) for a, b in ranges
            ]
            parts = [f.result() for f in futures]
    totals = [sum(part[gi] for part in parts) for gi in range(len(cfg.grid))]
    coverages = tuple(t / cfg.replications for t in totals)
    return CoverageResult(
        event=event.name,
        ns=cfg.grid,
        coverages=coverages,
        floors=floors,
        replications=cfg.replications,
        problem=problem.name,
        seed=cfg.base_seed,
        algo=algo,
    )


def excess_risk_decay(
    problem: LearningProblem,
    algo: AlgorithmSpec,
    cfg: McConfig,
    beta_hint: float,
    *,
    curve: RiskCurve | None = None,
    workers: int = 1,
) -> DecayFit:
    """Fit log mean-excess-risk against log n over the grid.

    The grid must span at least a decade.  Points with excess at or below
    the positive floor are dropped; fewer than two surviving points yield
    a degenerate fit.  Pass ``curve`` to reuse an existing estimate made
    with the same problem, algorithm, and grid.
    """
    if not 0.0 <= beta_hint <= 1.0:
        raise ValueError(f"beta hint must lie in [0, 1], got {beta_hint}")
    if cfg.grid[-1] < 10 * cfg.grid[0]:
        raise ValueError(
            f"decay fits need a grid spanning a decade, got {cfg.grid[0]}..{cfg.grid[-1]}"
        )
    if curve is None:
        curve = mc_risk_curve(problem, algo, cfg, workers=workers)
    else:
        if curve.ns != cfg.grid:
            raise ValueError("supplied curve was computed on a different grid")
        if curve.problem != problem.name or curve.algo != algo_label(algo):
            raise ValueError("supplied curve does not match the problem and algorithm")
    star = optimal_risk(problem)[0]
    points = [
        (n, v - star)
        for n, v in zip(curve.ns, curve.values)
        if v - star > POSITIVE_EXCESS_FLOOR
    ]
    slope_bound = -1.0 / (2.0 - beta_hint) + 0.15
    if len(points) < 2:
        return DecayFit(
            slope=math.nan,
            intercept=math.nan,
            residual=math.nan,
            beta_hint=beta_hint,
            slope_bound=slope_bound,
            ns=tuple(n for n, _ in points),
            excesses=tuple(e for _, e in points),
            degenerate=True,
        )
    xs = [math.log(n) for n, _ in points]
    ys = [math.log(e) for _, e in points]
    x_mean = math.fsum(xs) / len(xs)
    y_mean = math.fsum(ys) / len(ys)
    sxx = math.fsum((x - x_mean) ** 2 for x in xs)
    sxy = math.fsum((x - x_mean) * (y - y_mean) for x, y in zip(xs, ys))
    slope = sxy / sxx
    intercept = y_mean - slope * x_mean
    residual = math.sqrt(
        math.fsum((y - (intercept + slope * x)) ** 2 for x, y in zip(xs, ys)) / len(xs)
    )
    return DecayFit(
        slope=slope,
        intercept=intercept,
        residual=residual,
        beta_hint=beta_hint,
        slope_bound=slope_bound,
        ns=tuple(n for n, _ in points),
        excesses=tuple(e for _, e in points),
        degenerate=False,
    )


def coverage_to_csv(result: CoverageResult) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(COVERAGE_COLUMNS)
    for n, floor, coverage in zip(result.ns, result.floors, result.coverages):
        writer.writerow([str(n), result.event, repr(floor), repr(coverage), str(result.replications)])
    return out.getvalue()


def write_coverage(result: CoverageResult, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(coverage_to_csv(result))
