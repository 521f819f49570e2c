"""Finite learning problems: a discrete outcome distribution plus a bounded loss table.

A problem is the triple (distribution over m outcomes, |H| x m loss matrix
with entries in [0, 1], name).  Outcomes and hypotheses are plain indices;
everything downstream (gap sequences, the greedy loop, the exact oracle)
works directly on these tables.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

PROB_SUM_TOLERANCE = 1e-12


@dataclass(frozen=True)
class DiscreteDistribution:
    """Probabilities over outcome indices 0..m-1.

    Entries must be nonnegative and sum to 1 within ``PROB_SUM_TOLERANCE``;
    inputs inside the tolerance are renormalized on construction, anything
    further off is rejected.
    """

    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        probs = tuple(float(p) for p in self.probs)
        if len(probs) == 0:
            raise ValueError("a distribution needs at least one outcome")
        for p in probs:
            if not p >= 0.0:
                raise ValueError(f"negative or non-numeric probability {p!r}")
        total = math.fsum(probs)
        if abs(total - 1.0) > PROB_SUM_TOLERANCE:
            raise ValueError(f"probabilities sum to {total!r}, expected 1 within {PROB_SUM_TOLERANCE}")
        object.__setattr__(self, "probs", tuple(p / total for p in probs))

    @property
    def outcome_count(self) -> int:
        return len(self.probs)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=np.float64)


@dataclass(frozen=True)
class LossTable:
    """Loss matrix: rows[h][z] is the loss of hypothesis h on outcome z, in [0, 1]."""

    rows: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        if len(self.rows) == 0:
            raise ValueError("a loss table needs at least one hypothesis row")
        width = len(self.rows[0])
        if width == 0:
            raise ValueError("a loss table needs at least one outcome column")
        clean = []
        for h, row in enumerate(self.rows):
            if len(row) != width:
                raise ValueError(f"ragged loss table: row {h} has {len(row)} entries, expected {width}")
            for v in row:
                if not 0.0 <= float(v) <= 1.0:
                    raise ValueError(f"loss entry {v!r} in row {h} is outside [0, 1]")
            clean.append(tuple(float(v) for v in row))
        object.__setattr__(self, "rows", tuple(clean))

    @property
    def class_size(self) -> int:
        return len(self.rows)

    @property
    def outcome_count(self) -> int:
        return len(self.rows[0])

    def as_array(self) -> np.ndarray:
        return np.asarray(self.rows, dtype=np.float64)


@dataclass(frozen=True)
class LearningProblem:
    """A named (distribution, loss table) pair over a shared outcome space."""

    name: str
    distribution: DiscreteDistribution
    loss: LossTable

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("a problem needs a nonempty name")
        if self.distribution.outcome_count != self.loss.outcome_count:
            raise ValueError(
                f"distribution has {self.distribution.outcome_count} outcomes "
                f"but loss table has {self.loss.outcome_count}"
            )

    @property
    def class_size(self) -> int:
        return self.loss.class_size

    @property
    def outcome_count(self) -> int:
        return self.loss.outcome_count


@dataclass(frozen=True)
class Sample:
    """An immutable sequence of observed outcome indices z_1..z_n."""

    outcomes: tuple[int, ...]

    def __post_init__(self) -> None:
        clean = tuple(int(z) for z in self.outcomes)
        for z in clean:
            if z < 0:
                raise ValueError(f"outcome index {z} is negative")
        object.__setattr__(self, "outcomes", clean)

    def __len__(self) -> int:
        return len(self.outcomes)

    def prefix(self, k: int) -> "Sample":
        """The first k observations as a new sample."""
        if not 0 <= k <= len(self.outcomes):
            raise ValueError(f"prefix length {k} out of range for sample of size {len(self.outcomes)}")
        return Sample(self.outcomes[:k])


def _check_hypothesis(loss: LossTable, h: int) -> None:
    if not 0 <= h < loss.class_size:
        raise ValueError(f"hypothesis index {h} out of range for class of size {loss.class_size}")


def _check_outcomes(sample: Sample, m: int) -> None:
    for z in sample.outcomes:
        if z >= m:
            raise ValueError(f"outcome index {z} out of range for {m} outcomes")


def empirical_risk(loss: LossTable, h: int, sample: Sample) -> float:
    """Average loss of hypothesis h over the sample.

    Parameters
    ----------
    loss:
        Loss table defining the class.
    h:
        Hypothesis index.
    sample:
        Nonempty sample of outcome indices.

    Returns
    -------
    float
        (1/n) sum_i loss[h][z_i].
    """
    _check_hypothesis(loss, h)
    if len(sample) == 0:
        raise ValueError("empirical risk of an empty sample is undefined")
    _check_outcomes(sample, loss.outcome_count)
    row = loss.rows[h]
    return math.fsum(row[z] for z in sample.outcomes) / len(sample)


def population_risk(problem: LearningProblem, h: int) -> float:
    """Expected loss of hypothesis h under the problem's distribution."""
    _check_hypothesis(problem.loss, h)
    row = problem.loss.rows[h]
    return math.fsum(p * v for p, v in zip(problem.distribution.probs, row))


def optimal_risk(problem: LearningProblem) -> tuple[float, int]:
    """Minimum population risk over the class and its argmin index.

    Ties break toward the lowest index, matching every other argmin in the
    package.
    """
    risks = [population_risk(problem, h) for h in range(problem.class_size)]
    best = min(range(len(risks)), key=risks.__getitem__)
    return risks[best], best


def draw_sample(problem: LearningProblem, n: int, rng: np.random.Generator) -> Sample:
    """Draw n i.i.d. outcomes by inverse CDF over the cumulative probabilities.

    Consumes exactly one ``rng.random(n)`` call, which the Monte Carlo engine
    relies on for bit-reproducible replications.
    """
    if n < 0:
        raise ValueError(f"sample size must be nonnegative, got {n}")
    cum = np.cumsum(problem.distribution.as_array())
    u = rng.random(n)
    idx = np.minimum(np.searchsorted(cum, u, side="right"), problem.outcome_count - 1)
    return Sample(tuple(int(z) for z in idx))


def problem_to_dict(problem: LearningProblem) -> dict:
    return {
        "name": problem.name,
        "probs": list(problem.distribution.probs),
        "losses": [list(row) for row in problem.loss.rows],
    }


def problem_from_dict(doc: dict) -> LearningProblem:
    if not isinstance(doc, dict):
        raise ValueError(f"expected a JSON object, got {type(doc).__name__}")
    missing = {"name", "probs", "losses"} - set(doc)
    if missing:
        raise ValueError(f"problem document is missing fields: {sorted(missing)}")
    name, probs, losses = doc["name"], doc["probs"], doc["losses"]
    if not isinstance(name, str):
        raise ValueError("problem name must be a string")
    if not isinstance(probs, list) or not isinstance(losses, list):
        raise ValueError("probs must be a list and losses a list of lists")
    for row in losses:
        if not isinstance(row, list):
            raise ValueError("losses must be a list of lists")
    return LearningProblem(
        name=name,
        distribution=DiscreteDistribution(tuple(probs)),
        loss=LossTable(tuple(tuple(row) for row in losses)),
    )


def problem_to_json(problem: LearningProblem) -> str:
    return json.dumps(problem_to_dict(problem), indent=2) + "\n"


def problem_from_json(text: str) -> LearningProblem:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"invalid problem JSON: {exc}") from exc
    return problem_from_dict(doc)


def load_problem(path) -> LearningProblem:
    with open(path, "r", encoding="utf-8") as fh:
        return problem_from_json(fh.read())


def save_problem(problem: LearningProblem, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(problem_to_json(problem))
