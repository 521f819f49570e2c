"""Exact-expectation engine for small discrete problems.

For a finite outcome space the expected risk of a deterministic learner at
every step n <= n_max is an exact finite sum: enumerate the outcome prefix
tree, run the gated loop incrementally along each path, and accumulate
path weight times population risk of the chosen hypothesis at each depth.
One tree walk yields the whole curve.

The walk reproduces the algorithm module's arithmetic operation for
operation (same accumulation order, same gap kernels), so the curve equals
a brute-force average of ``run_germ`` over all sequences bit for bit.
Partitioning by the first outcome keeps the weighted reduction in a fixed
order, which makes results independent of the worker count.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .algorithm import AlgorithmSpec, CustomRule, GermAlgorithm, PlainErm, algo_label
from .analysis import pairwise_rhs_from_sq
from .errors import ResourceLimitError
from .gap import (
    EmpiricalBernstein,
    EmpiricalMcDiarmid,
    FixedDelta,
    MassartDeterministic,
    UniformConvergence,
    UserConstant,
    bernstein_delta_from_sq,
    delta_uniform,
)
from .problem import (
    DiscreteDistribution,
    LearningProblem,
    LossTable,
    Sample,
    population_risk,
)
from .rademacher import ENUMERATION_BUDGET, rbar_massart

CURVE_COLUMNS = ("n", "value", "stderr", "kind", "problem", "algo", "seed")

EXACT_TOLERANCE = 1e-12


@dataclass(frozen=True)
class RiskCurve:
    """Expected risk per sample size, exact or Monte Carlo."""

    ns: tuple[int, ...]
    values: tuple[float, ...]
    stderrs: tuple[float, ...] | None
    kind: str
    problem: str
    algo: str
    seed: int | None = None
    replications: int | None = None
    # single-replication standard errors are reported as 0 and flagged
    degenerate: bool = False

    def __post_init__(self) -> None:
        if self.kind not in ("exact", "mc"):
            raise ValueError(f"kind must be 'exact' or 'mc', got {self.kind!r}")
        if not self.ns:
            raise ValueError("a curve needs at least one point")
        if len(self.values) != len(self.ns):
            raise ValueError("values and ns lengths differ")
        if any(b <= a for a, b in zip(self.ns, self.ns[1:])):
            raise ValueError("sample sizes must be strictly increasing")
        if any(n < 0 for n in self.ns):
            raise ValueError("sample sizes must be nonnegative")
        for v in self.values:
            if not -1e-12 <= v <= 1.0 + 1e-12:
                raise ValueError(f"expected risk {v!r} outside [0, 1]")
        if (self.stderrs is not None) != (self.kind == "mc"):
            raise ValueError("standard errors are present exactly for Monte Carlo curves")
        if self.stderrs is not None:
            if len(self.stderrs) != len(self.ns):
                raise ValueError("stderrs and ns lengths differ")
            if any(s < 0 for s in self.stderrs):
                raise ValueError("standard errors must be nonnegative")
        if self.kind == "mc" and self.seed is None:
            raise ValueError("Monte Carlo curves record their seed")
        if not self.problem or not self.algo:
            raise ValueError("problem and algo labels must be nonempty")


@dataclass(frozen=True)
class MonotonicityReport:
    """Result of a risk-curve monotonicity check.

    ``max_increase`` is the largest consecutive increase anywhere on the
    curve (0 if the curve never rises), whether or not it clears the
    tolerance; ``violations`` lists only the steps that do.
    """

    verdict: str
    violations: tuple[tuple[int, float], ...]
    max_increase: float
    tolerance: float | str

    def __post_init__(self) -> None:
        if self.verdict not in ("monotone", "violated"):
            raise ValueError(f"verdict must be 'monotone' or 'violated', got {self.verdict!r}")
        if (self.verdict == "violated") != bool(self.violations):
            raise ValueError("verdict must be 'violated' exactly when violations exist")


def check_monotone(curve: RiskCurve, tolerance: float | None = None) -> MonotonicityReport:
    """Flag every step where the curve rises by more than the tolerance.

    With no explicit tolerance, exact curves use EXACT_TOLERANCE and Monte
    Carlo curves use three pooled standard errors per step.
    """
    if tolerance is not None and tolerance < 0:
        raise ValueError(f"tolerance must be nonnegative, got {tolerance}")
    diffs = [b - a for a, b in zip(curve.values, curve.values[1:])]
    if tolerance is not None:
        tols = [tolerance] * len(diffs)
        used: float | str = tolerance
    elif curve.kind == "exact":
        tols = [EXACT_TOLERANCE] * len(diffs)
        used = EXACT_TOLERANCE
    else:
        tols = [
            3.0 * math.sqrt(a * a + b * b)
            for a, b in zip(curve.stderrs, curve.stderrs[1:])
        ]
        used = "3*pooled-se"
    violations = tuple(
        (curve.ns[i + 1], diff)
        for i, (diff, tol) in enumerate(zip(diffs, tols))
        if diff > tol
    )
    max_increase = max(0.0, max(diffs, default=0.0))
    verdict = "violated" if violations else "monotone"
    return MonotonicityReport(
        verdict=verdict,
        violations=violations,
        max_increase=max_increase,
        tolerance=used,
    )


def _deterministic_deltas(algo: GermAlgorithm, class_size: int, n_max: int):
    """Per-step gap values for depth-only gap modes; None for Bernstein."""
    gap = algo.gap
    if isinstance(gap, FixedDelta):
        return [gap.value] * n_max
    if isinstance(gap.variant, EmpiricalBernstein):
        return None
    mode = gap.variant.mode
    if isinstance(mode, EmpiricalMcDiarmid):
        raise ValueError(
            "exact enumeration requires a deterministic gap; "
            "the EmpiricalMcDiarmid mode draws random signs"
        )
    if isinstance(mode, UserConstant):
        if len(mode.values) < n_max:
            raise ValueError(
                f"UserConstant supplies {len(mode.values)} values, curve needs {n_max}"
            )
        return [delta_uniform(k, mode.values[k - 1]) for k in range(1, n_max + 1)]
    return [delta_uniform(k, rbar_massart(class_size, k)) for k in range(1, n_max + 1)]


def _validate_exact_args(problem: LearningProblem, algo: AlgorithmSpec, n_max: int):
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    m = problem.loss.outcome_count
    if m**n_max > ENUMERATION_BUDGET:
        raise ResourceLimitError(
            f"enumerating {m}^{n_max} sequences exceeds the budget of {ENUMERATION_BUDGET}"
        )
    if isinstance(algo, GermAlgorithm):
        if isinstance(algo.gap, FixedDelta):
            pass
        elif algo.gap.class_size != problem.class_size:
            raise ValueError(
                f"gap is bound to class size {algo.gap.class_size}, "
                f"problem has {problem.class_size}"
            )
        if algo.initial_index >= problem.class_size:
            raise ValueError(
                f"initial index {algo.initial_index} out of range "
                f"for class of size {problem.class_size}"
            )
    elif not isinstance(algo, PlainErm):
        raise ValueError(f"unknown algorithm spec {algo!r}")


def _enumerate_partition(
    problem: LearningProblem, algo: AlgorithmSpec, n_max: int, z0: int
) -> list[float]:
    """Accumulate weight * population-risk per depth over the z0 subtree.

    Depth-first, children in ascending outcome order, so the float
    accumulation order is a pure function of (problem, algo, n_max, z0).
    """
    loss = problem.loss
    rows = loss.rows
    m = loss.outcome_count
    class_size = loss.class_size
    probs = problem.distribution.probs
    pop = [population_risk(problem, h) for h in range(class_size)]
    germ = isinstance(algo, GermAlgorithm)
    deltas = _deterministic_deltas(algo, class_size, n_max) if germ else None
    bernstein = germ and deltas is None
    custom = germ and isinstance(algo.learner, CustomRule)
    hs = range(class_size)
    acc = [0.0] * (n_max + 1)

    # stack entries: (k, weight, z, sums, counts, incumbent, path);
    # sums/counts reflect the prefix BEFORE the entry's outcome z, and
    # path is tracked only for custom rules
    root_inc = algo.initial_index if germ else 0
    root_path = (z0,) if custom else None
    stack = [(1, probs[z0], z0, [0.0] * class_size, [0] * m, root_inc, root_path)]
    while stack:
        k, weight, z, sums, counts, incumbent, path = stack.pop()
        sums = [sums[h] + rows[h][z] for h in hs]
        counts = counts.copy()
        counts[z] += 1
        if custom:
            cand = algo.learner.choose(loss, Sample(path))
            if not isinstance(cand, int) or not 0 <= cand < class_size:
                raise ValueError(
                    f"rule {algo.learner.name!r} returned invalid index {cand!r} at step {k}"
                )
        else:
            cand = min(hs, key=sums.__getitem__)
        if germ:
            if bernstein:
                if k == 1:
                    delta = math.inf
                else:
                    cand_row, inc_row = rows[cand], rows[incumbent]
                    sq = 0.0
                    for zz in range(m):
                        d = cand_row[zz] - inc_row[zz]
                        sq += counts[zz] * (d * d)
                    delta = bernstein_delta_from_sq(k, sq, class_size)
            else:
                delta = deltas[k - 1]
            diff = (sums[cand] - sums[incumbent]) / k
            chosen = cand if diff <= -delta else incumbent
        else:
            chosen = cand
        acc[k] += weight * pop[chosen]
        if k < n_max:
            # LIFO stack: push descending so children pop in ascending order
            for child in range(m - 1, -1, -1):
                child_path = path + (child,) if custom else None
                stack.append(
                    (k + 1, weight * probs[child], child, sums, counts, chosen, child_path)
                )
    return acc


def exact_risk_curve(
    problem: LearningProblem,
    algo: AlgorithmSpec,
    n_max: int,
    *,
    workers: int = 1,
) -> RiskCurve:
    """Exact expected-risk curve by full enumeration of outcome sequences.

    Parameters
    ----------
    problem:
        Finite problem; the outcome count m must satisfy m**n_max within
        the enumeration budget.
    algo:
        ``PlainErm`` or a deterministic ``GermAlgorithm`` (the
        EmpiricalMcDiarmid gap mode is rejected: its random signs would
        add a 2**k factor per step).
    n_max:
        Largest sample size on the curve.
    workers:
        Process count for partitioned enumeration.  Results are identical
        for every worker count; with a custom learner rule the rule must
        be picklable when workers > 1.

    Returns
    -------
    RiskCurve
        For the gated loop the curve starts at n = 0 with the population
        risk of the initial hypothesis, so the first comparison of a
        monotonicity check covers the step into n = 1.  The plain ERM
        curve starts at n = 1.
    """
    _validate_exact_args(problem, algo, n_max)
    if workers < 1:
        raise ValueError(f"worker count must be >= 1, got {workers}")
    germ = isinstance(algo, GermAlgorithm)
    if germ:
        _deterministic_deltas(algo, problem.class_size, n_max)  # reject early
    m = problem.loss.outcome_count
    if workers == 1 or m == 1:
        parts = [_enumerate_partition(problem, algo, n_max, z0) for z0 in range(m)]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, m)) as pool:
            futures = [
                pool.submit(_enumerate_partition, problem, algo, n_max, z0)
                for z0 in range(m)
            ]
            parts = [f.result() for f in futures]
    totals = [0.0] * (n_max + 1)
    for part in parts:
        for k in range(1, n_max + 1):
            totals[k] += part[k]
    if germ:
        ns = tuple(range(0, n_max + 1))
        initial_value = population_risk(problem, algo.initial_index)
        values = (initial_value, *totals[1:])
    else:
        ns = tuple(range(1, n_max + 1))
        values = tuple(totals[1:])
    return RiskCurve(
        ns=ns,
        values=values,
        stderrs=None,
        kind="exact",
        problem=problem.name,
        algo=algo_label(algo),
        seed=None,
    )


def find_erm_nonmonotone(
    m: int,
    class_size: int,
    n_probe: int,
    search_budget: int,
    rng: np.random.Generator,
) -> LearningProblem | None:
    """Search random quantized problems for an ERM risk-curve increase.

    Losses and outcome probabilities are drawn on a 0.05 grid, which keeps
    found witnesses reproducible and away from floating-point knife edges.
    Returns the first problem whose exact plain-ERM curve up to n_probe
    rises by more than 1e-9, or None when the budget is exhausted.
    """
    if m < 1 or class_size < 1:
        raise ValueError("need at least one outcome and one hypothesis")
    if n_probe < 2:
        raise ValueError(f"a monotonicity probe needs n_probe >= 2, got {n_probe}")
    if search_budget < 0:
        raise ValueError(f"search budget must be nonnegative, got {search_budget}")
    for trial in range(search_budget):
        counts = rng.multinomial(20, np.full(m, 1.0 / m))
        entries = rng.integers(0, 21, size=(class_size, m))
        probs = tuple(float(c) / 20.0 for c in counts)
        rows = tuple(tuple(float(v) / 20.0 for v in row) for row in entries)
        problem = LearningProblem(
            name=f"erm-witness-candidate-{trial}",
            distribution=DiscreteDistribution(probs=probs),
            loss=LossTable(rows=rows),
        )
        curve = exact_risk_curve(problem, PlainErm(), n_probe)
        if check_monotone(curve, tolerance=1e-9).verdict == "violated":
            return problem
    return None


def pairwise_bernstein_coverage(problem: LearningProblem, n: int, delta: float) -> float:
    """Exact probability that the pairwise Bernstein bounds all hold at n.

    The event is simultaneous over every ordered pair (h, h'): population
    gap at most empirical gap plus the pairwise slack.  Both the empirical
    risks and the slack depend on the sample only through its outcome
    counts, so the expectation reduces to a multinomial sum over count
    vectors.
    """
    if n < 2:
        raise ValueError(f"the pairwise slack needs n >= 2, got {n}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"confidence level must lie in (0, 1), got {delta}")
    rows = problem.loss.rows
    m = problem.loss.outcome_count
    class_size = problem.class_size
    probs = problem.distribution.probs
    pop = [population_risk(problem, h) for h in range(class_size)]
    pairs = [
        (a, b) for a in range(class_size) for b in range(class_size) if a != b
    ]

    def count_vectors(total: int, parts: int):
        if parts == 1:
            yield (total,)
            return
        for first in range(total + 1):
            for rest in count_vectors(total - first, parts - 1):
                yield (first, *rest)

    log_fact = [math.lgamma(i + 1) for i in range(n + 1)]
    coverage = 0.0
    for counts in count_vectors(n, m):
        if any(c > 0 and p == 0.0 for c, p in zip(counts, probs)):
            continue
        weight = math.exp(
            log_fact[n]
            - math.fsum(log_fact[c] for c in counts)
            + math.fsum(c * math.log(p) for c, p in zip(counts, probs) if c > 0)
        )
        emp = [
            math.fsum(c * l for c, l in zip(counts, row)) / n for row in rows
        ]
        ok = True
        for a, b in pairs:
            sq = math.fsum(
                c * (rows[a][z] - rows[b][z]) ** 2 for z, c in enumerate(counts)
            )
            rhs = pairwise_rhs_from_sq(sq, n, class_size, delta)
            if pop[a] - pop[b] > emp[a] - emp[b] + rhs:
                ok = False
                break
        if ok:
            coverage += weight
    return coverage


def curve_to_csv(curve: RiskCurve) -> str:
    """Serialize a curve to CSV with a fixed column order.

    Floats are written with repr so reading the file back reproduces them
    exactly; exact curves leave stderr and seed empty.
    """
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CURVE_COLUMNS)
    for i, n in enumerate(curve.ns):
        stderr = "" if curve.stderrs is None else repr(curve.stderrs[i])
        seed = "" if curve.seed is None else str(curve.seed)
        writer.writerow(
            [str(n), repr(curve.values[i]), stderr, curve.kind, curve.problem, curve.algo, seed]
        )
    return out.getvalue()


def curve_from_csv(text: str) -> RiskCurve:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("empty curve file") from None
    if tuple(header) != CURVE_COLUMNS:
        raise ValueError(f"unexpected curve columns {header!r}")
    ns: list[int] = []
    values: list[float] = []
    stderrs: list[float] = []
    meta: set[tuple] = set()
    for row in reader:
        if not row:
            continue
        if len(row) != len(CURVE_COLUMNS):
            raise ValueError(f"malformed curve row {row!r}")
        ns.append(int(row[0]))
        values.append(float(row[1]))
        if row[2]:
            stderrs.append(float(row[2]))
        meta.add((row[3], row[4], row[5], row[6]))
    if not ns:
        raise ValueError("curve file has no data rows")
    if len(meta) != 1:
        raise ValueError("curve file mixes kinds, problems, algorithms, or seeds")
    kind, problem, algo, seed = meta.pop()
    if stderrs and len(stderrs) != len(ns):
        raise ValueError("stderr column is partially filled")
    return RiskCurve(
        ns=tuple(ns),
        values=tuple(values),
        stderrs=tuple(stderrs) if stderrs else None,
        kind=kind,
        problem=problem,
        algo=algo,
        seed=int(seed) if seed else None,
    )


def write_curve(curve: RiskCurve, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(curve_to_csv(curve))


def read_curve(path) -> RiskCurve:
    with open(path, "r", encoding="utf-8", newline="") as f:
        return curve_from_csv(f.read())
