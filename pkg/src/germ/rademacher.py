"""Rademacher complexity of a finite loss class: estimators and bounds.

The quantity of interest is R_k = E[sup_h (1/k) sum_i sigma_i loss(h, Z_i)]
over i.i.d. fair signs sigma and i.i.d. outcomes Z.  Three routes to an
upper bound R-bar_k are provided:

* ``rbar_empirical``: a single-draw estimate padded by a concentration
  radius, correct with probability at least 1 - 1/k per draw;
* ``rbar_massart``: the deterministic finite-class bound sqrt(2 ln|H| / k);
* exact enumeration (``exact_rademacher``) over all sign/sample pairs,
  feasible only for small k and used as the ground truth in tests.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .errors import ResourceLimitError
from .problem import LearningProblem, LossTable, Sample, _check_outcomes
from .rng import draw_signs

ENUMERATION_BUDGET = 10**7


def mcdiarmid_radius(k: int) -> float:
    """sqrt(2 ln(2k) / k): the deviation radius at confidence level 1/k."""
    if k < 1:
        raise ValueError(f"step index must be >= 1, got {k}")
    return math.sqrt(2.0 * math.log(2.0 * k) / k)


def deviation_radius(n: int, delta: float) -> float:
    """Two-sided concentration radius sqrt(2 ln(2/delta) / n).

    The sign-weighted supremum over a [0, 1]-valued class has bounded
    differences 1/n per coordinate, so it deviates from its mean by more
    than this radius with probability at most ``delta``.
    """
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return math.sqrt(2.0 * math.log(2.0 / delta) / n)


def rademacher_sup(loss: LossTable, sample: Sample, signs) -> float:
    """sup over h of (1/k) sum_i signs[i] * loss[h][z_i], exactly over the class.

    Parameters
    ----------
    loss:
        Loss table defining the class.
    sample:
        Observed outcomes, length k >= 1.
    signs:
        Sequence of k values from {-1, +1}.

    Notes
    -----
    Computed through per-outcome signed counts, accumulated in ascending
    outcome order.  The greedy loop and the vectorized Monte Carlo engine
    reproduce this arithmetic step for step, so all three paths agree
    bit-for-bit.
    """
    k = len(sample)
    if k == 0:
        raise ValueError("the sign-weighted supremum needs a nonempty sample")
    signs = [int(s) for s in signs]
    if len(signs) != k:
        raise ValueError(f"{len(signs)} signs for {k} observations")
    if any(s not in (-1, 1) for s in signs):
        raise ValueError("signs must be +1 or -1")
    _check_outcomes(sample, loss.outcome_count)

    w = [0] * loss.outcome_count
    for z, s in zip(sample.outcomes, signs):
        w[z] += s
    best = -math.inf
    for row in loss.rows:
        t = 0.0
        for z in range(loss.outcome_count):
            t += w[z] * row[z]
        if t > best:
            best = t
    return best / k


def rbar_from_signs(loss: LossTable, sample: Sample, signs) -> float:
    """Deterministic kernel of the single-draw bound: max(0, sup + radius).

    Exposed so tests can force specific sign vectors; production code draws
    signs through ``rbar_empirical``.
    """
    k = len(sample)
    return max(0.0, rademacher_sup(loss, sample, signs) + mcdiarmid_radius(k))


def rbar_empirical(loss: LossTable, sample: Sample, rng: np.random.Generator) -> float:
    """Single-draw upper estimate of R_k, valid with probability >= 1 - 1/k.

    Draws k fresh fair signs from ``rng`` (exactly one ``integers`` call)
    and returns max(0, rademacher_sup + sqrt(2 ln(2k) / k)).
    """
    return rbar_from_signs(loss, sample, draw_signs(rng, len(sample)))


def rbar_massart(class_size: int, k: int) -> float:
    """Deterministic finite-class bound sqrt(2 ln|H| / k) on R_k."""
    if class_size < 1:
        raise ValueError(f"class size must be >= 1, got {class_size}")
    if k < 1:
        raise ValueError(f"step index must be >= 1, got {k}")
    return math.sqrt(2.0 * math.log(class_size) / k)


def sign_matrix(k: int) -> np.ndarray:
    """All 2^k sign vectors as a (2^k, k) float array of +1/-1 entries."""
    if k < 1:
        raise ValueError(f"need k >= 1, got {k}")
    bits = (np.arange(2**k, dtype=np.int64)[:, None] >> np.arange(k)) & 1
    return (2 * bits - 1).astype(np.float64)


def _check_enumeration_budget(m: int, k: int, budget: int) -> None:
    if (2 * m) ** k > budget:
        raise ResourceLimitError(
            f"exact enumeration needs (2m)^k = {(2 * m) ** k} evaluations, budget is {budget}"
        )


def sup_enumeration(problem: LearningProblem, k: int, budget: int = ENUMERATION_BUDGET):
    """Enumerate the sign-weighted supremum over every (sample, sign) pair.

    Returns
    -------
    (weights, sups):
        ``weights``: (m^k,) sample probabilities (product weights).
        ``sups``: (m^k, 2^k) supremum values, one column per sign vector.

    Raises
    ------
    ResourceLimitError
        When (2m)^k exceeds ``budget``.
    """
    if k < 1:
        raise ValueError(f"need k >= 1, got {k}")
    m = problem.outcome_count
    _check_enumeration_budget(m, k, budget)
    probs = problem.distribution.probs
    loss_t = problem.loss.as_array().T  # (m, H)
    smat = sign_matrix(k)  # (2^k, k)
    weights = np.empty(m**k)
    sups = np.empty((m**k, 2**k))
    for i, zs in enumerate(itertools.product(range(m), repeat=k)):
        weights[i] = math.prod(probs[z] for z in zs)
        values = loss_t[list(zs)]  # (k, H)
        sups[i] = (smat @ values).max(axis=1) / k
    return weights, sups


def exact_rademacher(problem: LearningProblem, k: int, budget: int = ENUMERATION_BUDGET) -> float:
    """Exact R_k by full enumeration of sign vectors and samples.

    Feasible only while (2m)^k stays within ``budget``; raises
    ``ResourceLimitError`` beyond that.
    """
    weights, sups = sup_enumeration(problem, k, budget)
    return float(weights @ sups.mean(axis=1))


def estimator_deviation_exceedance(
    problem: LearningProblem, k: int, delta: float, budget: int = ENUMERATION_BUDGET
) -> float:
    """Exact probability that |rademacher_sup - R_k| exceeds deviation_radius(k, delta)."""
    radius = deviation_radius(k, delta)
    weights, sups = sup_enumeration(problem, k, budget)
    exact = float(weights @ sups.mean(axis=1))
    exceed = np.abs(sups - exact) > radius
    return float(weights @ exceed.mean(axis=1))


def rbar_undershoot_rate(problem: LearningProblem, k: int, budget: int = ENUMERATION_BUDGET) -> float:
    """Exact probability that the single-draw bound falls below the true R_k.

    The bound's guarantee is that this never exceeds 1/k.
    """
    weights, sups = sup_enumeration(problem, k, budget)
    exact = float(weights @ sups.mean(axis=1))
    rbar = np.maximum(0.0, sups + mcdiarmid_radius(k))
    return float(weights @ (rbar < exact).mean(axis=1))
