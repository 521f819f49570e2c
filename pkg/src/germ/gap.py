"""Gap sequences: the per-step empirical-improvement thresholds of the greedy loop.

Two production variants exist.  The uniform-convergence gap

    delta_k = 4 R-bar_k + sqrt(2 ln(2k) / k) + 2/k

consumes a per-step Rademacher bound R-bar_k (see the rademacher module for
the three modes).  The empirical-Bernstein gap

    delta_k = sqrt(2 Q_k ln(2k |H|^2)) / (k-1) + 5 ln(2k |H|^2) / (k-1) + 2/k

uses the empirical second moment Q_k = sum_i (l(cand, z_i) - l(inc, z_i))^2
of the candidate/incumbent loss differences, adapting to low-variance pairs.
At k = 1 the Bernstein gap is undefined (division by k-1) and is pinned to
+infinity, which freezes the incumbent at step 1; see the decisions ledger.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .rademacher import mcdiarmid_radius


@dataclass(frozen=True)
class EmpiricalMcDiarmid:
    """Randomized per-step bound: one fresh sign draw, McDiarmid-padded."""


@dataclass(frozen=True)
class MassartDeterministic:
    """Deterministic finite-class bound sqrt(2 ln|H| / k)."""


@dataclass(frozen=True)
class UserConstant:
    """Caller-supplied per-step bounds; values[k-1] is used at step k."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        clean = tuple(float(v) for v in self.values)
        if len(clean) == 0:
            raise ValueError("UserConstant needs at least one value")
        for v in clean:
            if not v >= 0.0:
                raise ValueError(f"bound values must be >= 0, got {v!r}")
        object.__setattr__(self, "values", clean)


RademacherBoundMode = EmpiricalMcDiarmid | MassartDeterministic | UserConstant


@dataclass(frozen=True)
class UniformConvergence:
    """Gap built from a per-step Rademacher bound in the given mode."""

    mode: RademacherBoundMode

    def __post_init__(self) -> None:
        if not isinstance(self.mode, (EmpiricalMcDiarmid, MassartDeterministic, UserConstant)):
            raise ValueError(f"unknown Rademacher bound mode {self.mode!r}")


@dataclass(frozen=True)
class EmpiricalBernstein:
    """Variance-adaptive gap from candidate/incumbent loss differences."""


GapVariant = UniformConvergence | EmpiricalBernstein


@dataclass(frozen=True)
class GapSpec:
    """A gap variant bound to the class size it will run against."""

    variant: GapVariant
    class_size: int

    def __post_init__(self) -> None:
        if not isinstance(self.variant, (UniformConvergence, EmpiricalBernstein)):
            raise ValueError(f"unknown gap variant {self.variant!r}")
        if self.class_size < 1:
            raise ValueError(f"class size must be >= 1, got {self.class_size}")


@dataclass(frozen=True)
class FixedDelta:
    """Direct per-step gap override for diagnostics and tests.

    Not a bound-derived sequence and not reachable from experiment configs;
    ``value`` 0.0 makes the gate fire on any empirical non-increase, which
    recovers near-plain-ERM behavior as a sanity bridge.
    """

    value: float = 0.0

    def __post_init__(self) -> None:
        if not self.value >= 0.0:
            raise ValueError(f"gap override must be >= 0, got {self.value!r}")


def delta_uniform(k: int, rbar_k: float) -> float:
    """Uniform-convergence gap at step k given the Rademacher bound rbar_k."""
    if k < 1:
        raise ValueError(f"step index must be >= 1, got {k}")
    if not rbar_k >= 0.0:
        raise ValueError(f"rbar must be >= 0, got {rbar_k!r}")
    return 4.0 * rbar_k + mcdiarmid_radius(k) + 2.0 / k


def bernstein_log_term(k: int, class_size: int) -> float:
    """ln(2 k |H|^2), the confidence term shared by both Bernstein pieces."""
    if k < 1 or class_size < 1:
        raise ValueError(f"need k >= 1 and class_size >= 1, got k={k}, |H|={class_size}")
    return math.log(2.0 * k * class_size * class_size)


def bernstein_delta_from_sq(k: int, sq_sum: float, class_size: int) -> float:
    """Empirical-Bernstein gap from the precomputed squared-difference sum.

    This is the kernel shared by ``delta_bernstein``, the greedy loop, and
    the vectorized Monte Carlo engine, so all paths evaluate the same
    arithmetic.
    """
    if k == 1:
        return math.inf
    log_term = bernstein_log_term(k, class_size)
    return math.sqrt(2.0 * sq_sum * log_term) / (k - 1) + 5.0 * log_term / (k - 1) + 2.0 / k


def delta_bernstein(k: int, cand_losses, inc_losses, class_size: int) -> float:
    """Empirical-Bernstein gap at step k from per-observation loss sequences.

    Parameters
    ----------
    k:
        Step index; both sequences must have length k.
    cand_losses, inc_losses:
        Losses of the step's candidate and of the incumbent on z_1..z_k,
        entries in [0, 1].
    class_size:
        Size of the hypothesis class (enters the confidence term).

    Returns
    -------
    float
        The gap value; +infinity at k = 1.
    """
    cand = tuple(float(v) for v in cand_losses)
    inc = tuple(float(v) for v in inc_losses)
    if len(cand) != k or len(inc) != k:
        raise ValueError(f"loss sequences must have length k={k}, got {len(cand)} and {len(inc)}")
    for v in cand + inc:
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"loss entry {v!r} outside [0, 1]")
    if class_size < 1:
        raise ValueError(f"class size must be >= 1, got {class_size}")
    if k == 1:
        return math.inf
    sq_sum = math.fsum((a - b) ** 2 for a, b in zip(cand, inc))
    return bernstein_delta_from_sq(k, sq_sum, class_size)
