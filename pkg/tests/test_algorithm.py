import json
import math

import numpy as np
import pytest

from germ.algorithm import (
    CustomRule,
    ErmLowestIndex,
    GermAlgorithm,
    PlainErm,
    Trajectory,
    TrajectoryStep,
    algo_label,
    erm,
    run_germ,
    run_germ_from_step,
    trajectory_to_json,
)
from germ.gap import (
    EmpiricalBernstein,
    EmpiricalMcDiarmid,
    FixedDelta,
    GapSpec,
    MassartDeterministic,
    UniformConvergence,
    UserConstant,
    bernstein_delta_from_sq,
    delta_uniform,
)
from germ.problem import (
    DiscreteDistribution,
    LearningProblem,
    LossTable,
    Sample,
    draw_sample,
    empirical_risk,
)
from germ.rademacher import rbar_from_signs, rbar_massart
from germ.rng import draw_signs, philox_stream


def two_point_problem():
    return LearningProblem(
        name="two-point",
        distribution=DiscreteDistribution(probs=(0.5, 0.5)),
        loss=LossTable(rows=((0.0, 0.0), (1.0, 1.0))),
    )


def random_problem(rng, class_size, outcome_count):
    probs = rng.dirichlet(np.ones(outcome_count))
    rows = tuple(
        tuple(round(float(v), 3) for v in rng.random(outcome_count))
        for _ in range(class_size)
    )
    return LearningProblem(
        name="random",
        distribution=DiscreteDistribution(probs=tuple(float(p) for p in probs)),
        loss=LossTable(rows=rows),
    )


def massart_gap(class_size):
    return GapSpec(UniformConvergence(MassartDeterministic()), class_size)


def empirical_gap(class_size):
    return GapSpec(UniformConvergence(EmpiricalMcDiarmid()), class_size)


def bernstein_gap(class_size):
    return GapSpec(EmpiricalBernstein(), class_size)


def test_erm_examples():
    loss = LossTable(rows=((0.2, 0.8), (0.6, 0.1), (0.4, 0.4)))
    assert erm(loss, Sample((0,))) == 0
    assert erm(loss, Sample((1,))) == 1
    # sums over (0, 1): h0 = 1.0, h1 = 0.7, h2 = 0.8
    assert erm(loss, Sample((0, 1))) == 1


def test_erm_tie_breaks_to_lowest_index():
    loss = LossTable(rows=((0.5, 0.5), (0.5, 0.5), (0.1, 0.9)))
    assert erm(loss, Sample((0, 1))) == 0
    assert erm(loss, Sample((0,))) == 2


def test_erm_rejects_empty_prefix():
    loss = LossTable(rows=((0.0,),))
    with pytest.raises(ValueError):
        erm(loss, Sample(()))


def test_erm_matches_argmin_of_empirical_risk():
    for trial in range(50):
        rng = philox_stream(4000, trial)
        problem = random_problem(rng, class_size=5, outcome_count=3)
        sample = draw_sample(problem, 12, rng)
        got = erm(problem.loss, sample)
        risks = [empirical_risk(problem.loss, h, sample) for h in range(5)]
        best = min(range(5), key=risks.__getitem__)
        assert risks[got] == pytest.approx(risks[best], abs=1e-12)
        assert all(risks[got] < risks[h] for h in range(got))


def test_huge_fixed_gap_never_updates():
    problem = two_point_problem()
    sample = Sample((0,) * 30)
    trajectory = run_germ(problem, sample, FixedDelta(10.0), initial=1)
    assert trajectory.final_index == 1
    assert not any(step.updated for step in trajectory.steps)
    assert all(step.chosen_index == 1 for step in trajectory.steps)
    assert all(step.erm_index == 0 for step in trajectory.steps)


def test_zero_fixed_gap_tracks_the_erm():
    # diff <= 0 always holds for the lowest-index ERM, so a zero gap
    # reduces the loop to plain ERM.
    for trial in range(10):
        rng = philox_stream(4100, trial)
        problem = random_problem(rng, class_size=4, outcome_count=3)
        sample = draw_sample(problem, 15, rng)
        trajectory = run_germ(problem, sample, FixedDelta(0.0), initial=2)
        for step in trajectory.steps:
            assert step.updated
            assert step.chosen_index == step.erm_index
            assert step.erm_index == erm(problem.loss, sample.prefix(step.k))


def test_first_update_step_with_massart_gap():
    # Two hypotheses with constant losses 0 and 1, incumbent starts at the
    # bad one.  The gate fires at the first k with delta_k <= 1.  Scanning
    # 4*sqrt(2*ln(2)/k) + sqrt(2*ln(2k)/k) + 2/k puts that at k = 66.
    first = None
    for k in range(1, 200):
        if delta_uniform(k, rbar_massart(2, k)) <= 1.0:
            first = k
            break
    assert first == 66

    problem = two_point_problem()
    sample = Sample((0,) * 80)
    trajectory = run_germ(problem, sample, massart_gap(2), initial=1)
    updates = [step.k for step in trajectory.steps if step.updated]
    assert updates == [66]
    assert [step.chosen_index for step in trajectory.steps] == [1] * 65 + [0] * 15
    assert trajectory.final_index == 0


def test_first_update_step_with_bernstein_gap():
    # Same two-hypothesis setup.  Squared loss differences are all 1, so
    # the scan uses sq_sum = k; the gate first clears 1 at k = 62.
    first = None
    for k in range(2, 200):
        if bernstein_delta_from_sq(k, float(k), 2) <= 1.0:
            first = k
            break
    assert first == 62

    problem = two_point_problem()
    sample = Sample((0,) * 70)
    trajectory = run_germ(problem, sample, bernstein_gap(2), initial=1)
    updates = [step.k for step in trajectory.steps if step.updated]
    assert updates == [62]
    assert trajectory.steps[0].delta == math.inf
    assert trajectory.final_index == 0


def test_single_hypothesis_class_is_constant():
    problem = LearningProblem(
        name="solo",
        distribution=DiscreteDistribution(probs=(0.4, 0.6)),
        loss=LossTable(rows=((0.3, 0.7),)),
    )
    sample = Sample((0, 1, 1, 0, 1))
    for gap in (massart_gap(1), bernstein_gap(1), FixedDelta(0.5)):
        trajectory = run_germ(problem, sample, gap, initial=0)
        assert trajectory.indices() == (0,) * 5
        assert not any(step.updated for step in trajectory.steps)


def test_from_step_one_equals_full_run():
    rng = philox_stream(4200, 0)
    problem = random_problem(rng, class_size=3, outcome_count=3)
    sample = draw_sample(problem, 10, rng)
    full = run_germ(problem, sample, massart_gap(3), initial=1)
    restarted = run_germ_from_step(problem, sample, massart_gap(3), 1, initial=1)
    assert full == restarted


def test_from_step_holds_the_initial_until_start():
    problem = two_point_problem()
    sample = Sample((0,) * 80)
    trajectory = run_germ_from_step(problem, sample, massart_gap(2), 70, initial=1)
    assert trajectory.start_step == 70
    assert [step.k for step in trajectory.steps] == list(range(70, 81))
    # Gate fires immediately: at k = 70 the massart delta is already < 1.
    assert trajectory.steps[0].updated
    assert trajectory.final_index == 0


def test_from_step_at_n_gates_once():
    problem = two_point_problem()
    sample = Sample((0,) * 10)
    trajectory = run_germ_from_step(problem, sample, FixedDelta(0.0), 10, initial=1)
    assert len(trajectory.steps) == 1
    assert trajectory.steps[0].k == 10
    assert trajectory.steps[0].updated
    assert trajectory.final_index == 0


def test_from_step_uses_the_full_prefix():
    # Proposals at the first gated step still rest on z_1..z_k, not on the
    # suffix, so the ERM at the start step reflects all earlier outcomes.
    loss = LossTable(rows=((0.0, 1.0), (1.0, 0.0)))
    problem = LearningProblem(
        name="flip",
        distribution=DiscreteDistribution(probs=(0.5, 0.5)),
        loss=loss,
    )
    sample = Sample((0, 0, 0, 1))
    trajectory = run_germ_from_step(problem, sample, FixedDelta(0.0), 4, initial=1)
    # sums over the full prefix: h0 = 1, h1 = 3, so the ERM is h0.
    assert trajectory.steps[0].erm_index == 0
    assert trajectory.steps[0].erm_empirical_loss == pytest.approx(0.25)


def test_from_step_range_validation():
    problem = two_point_problem()
    sample = Sample((0, 1, 0))
    for bad in (0, 4, -1):
        with pytest.raises(ValueError):
            run_germ_from_step(problem, sample, FixedDelta(0.0), bad)


def test_trajectory_invariants_across_gap_variants():
    for trial in range(30):
        rng = philox_stream(4300, trial)
        problem = random_problem(rng, class_size=4, outcome_count=3)
        sample = draw_sample(problem, 14, rng)
        gaps = [
            massart_gap(4),
            empirical_gap(4),
            bernstein_gap(4),
            FixedDelta(0.3),
        ]
        for gap in gaps:
            trajectory = run_germ(problem, sample, gap, initial=3, rng=philox_stream(4301, trial))
            assert [step.k for step in trajectory.steps] == list(range(1, 15))
            previous = 3
            for step in trajectory.steps:
                assert step.delta >= 0.0
                expected = step.erm_index if step.updated else previous
                assert step.chosen_index == expected
                # lowest-index ERM never has a worse sum than the incumbent
                assert step.erm_empirical_loss <= step.incumbent_empirical_loss
                assert step.erm_empirical_loss == pytest.approx(
                    empirical_risk(problem.loss, step.erm_index, sample.prefix(step.k)),
                    abs=1e-12,
                )
                if step.updated:
                    gate = step.erm_empirical_loss - step.incumbent_empirical_loss
                    assert gate <= -step.delta
                previous = step.chosen_index
            assert trajectory.final_index == previous


def test_empirical_mode_is_deterministic_per_stream():
    rng = philox_stream(4400, 0)
    problem = random_problem(rng, class_size=3, outcome_count=2)
    sample = draw_sample(problem, 20, rng)
    a = run_germ(problem, sample, empirical_gap(3), initial=2, rng=philox_stream(77, 5))
    b = run_germ(problem, sample, empirical_gap(3), initial=2, rng=philox_stream(77, 5))
    assert a == b
    c = run_germ(problem, sample, empirical_gap(3), initial=2, rng=philox_stream(77, 6))
    assert [s.rbar for s in a.steps] != [s.rbar for s in c.steps]


def test_empirical_mode_consumes_one_sign_block_per_step():
    # Replaying the generator must reproduce every recorded rbar exactly:
    # the loop draws exactly one k-sign block per step and nothing else.
    rng = philox_stream(4500, 0)
    problem = random_problem(rng, class_size=4, outcome_count=3)
    sample = draw_sample(problem, 12, rng)
    trajectory = run_germ(problem, sample, empirical_gap(4), rng=philox_stream(91, 3))
    replay = philox_stream(91, 3)
    for step in trajectory.steps:
        signs = draw_signs(replay, step.k)
        assert step.rbar == rbar_from_signs(problem.loss, sample.prefix(step.k), signs)
        assert step.delta == delta_uniform(step.k, step.rbar)


def test_empirical_mode_requires_rng():
    problem = two_point_problem()
    with pytest.raises(ValueError):
        run_germ(problem, Sample((0, 1)), empirical_gap(2))


def test_massart_and_bernstein_ignore_rng():
    problem = two_point_problem()
    sample = Sample((0, 1, 0, 1))
    for gap in (massart_gap(2), bernstein_gap(2)):
        with_rng = run_germ(problem, sample, gap, rng=philox_stream(1, 1))
        without = run_germ(problem, sample, gap)
        assert with_rng == without


def test_user_constant_values_feed_the_uniform_gap():
    problem = two_point_problem()
    values = (0.5, 0.4, 0.3, 0.2)
    gap = GapSpec(UniformConvergence(UserConstant(values=values)), 2)
    trajectory = run_germ(problem, Sample((0, 1, 0, 1)), gap)
    for step, rbar in zip(trajectory.steps, values):
        assert step.rbar == rbar
        assert step.delta == delta_uniform(step.k, rbar)


def test_user_constant_must_cover_the_run():
    problem = two_point_problem()
    gap = GapSpec(UniformConvergence(UserConstant(values=(0.1, 0.1))), 2)
    with pytest.raises(ValueError):
        run_germ(problem, Sample((0, 1, 0)), gap)


def test_gap_class_size_must_match():
    problem = two_point_problem()
    with pytest.raises(ValueError):
        run_germ(problem, Sample((0, 1)), massart_gap(3))


def test_initial_index_must_be_in_range():
    problem = two_point_problem()
    with pytest.raises(ValueError):
        run_germ(problem, Sample((0, 1)), FixedDelta(0.0), initial=2)


def test_empty_sample_is_rejected():
    problem = two_point_problem()
    with pytest.raises(ValueError):
        run_germ(problem, Sample(()), FixedDelta(0.0))


def test_custom_rule_proposals_are_gated():
    problem = two_point_problem()
    stubborn = CustomRule(name="always-one", choose=lambda loss, prefix: 1)
    trajectory = run_germ(
        problem, Sample((0,) * 5), FixedDelta(0.0), learner=stubborn, initial=0
    )
    # proposing the worse hypothesis never clears diff <= 0 strictly below
    for step in trajectory.steps:
        assert step.erm_index == 1
        assert not step.updated
    assert trajectory.final_index == 0


def test_custom_rule_bad_return_is_rejected():
    problem = two_point_problem()
    broken = CustomRule(name="broken", choose=lambda loss, prefix: 7)
    with pytest.raises(ValueError):
        run_germ(problem, Sample((0, 1)), FixedDelta(0.0), learner=broken)


def test_custom_rule_validation():
    with pytest.raises(ValueError):
        CustomRule(name="", choose=lambda loss, prefix: 0)
    with pytest.raises(ValueError):
        CustomRule(name="x", choose=3)


def test_algo_label_forms():
    assert algo_label(PlainErm()) == "erm"
    assert algo_label(GermAlgorithm(gap=massart_gap(2))) == "germ:uniform-massart:init0"
    assert (
        algo_label(GermAlgorithm(gap=empirical_gap(2), initial_index=3))
        == "germ:uniform-empirical:init3"
    )
    assert algo_label(GermAlgorithm(gap=bernstein_gap(2))) == "germ:bernstein:init0"
    assert algo_label(GermAlgorithm(gap=FixedDelta(0.1))) == "germ:fixed:init0"
    user = GapSpec(UniformConvergence(UserConstant(values=(0.1,))), 2)
    assert algo_label(GermAlgorithm(gap=user)) == "germ:uniform-constant:init0"
    rule = CustomRule(name="probe", choose=lambda loss, prefix: 0)
    assert (
        algo_label(GermAlgorithm(gap=FixedDelta(0.0), learner=rule))
        == "germ:fixed:init0:rule=probe"
    )


def test_algorithm_spec_validation():
    with pytest.raises(ValueError):
        GermAlgorithm(gap="massart")
    with pytest.raises(ValueError):
        GermAlgorithm(gap=FixedDelta(0.0), learner="erm")
    with pytest.raises(ValueError):
        GermAlgorithm(gap=FixedDelta(0.0), initial_index=-1)


def test_trajectory_json_is_stable_and_encodes_infinities():
    problem = two_point_problem()
    trajectory = run_germ(problem, Sample((0, 1, 0)), bernstein_gap(2), initial=1)
    text = trajectory_to_json(trajectory)
    assert text.endswith("\n")
    decoded = json.loads(text)
    assert decoded["initial_index"] == 1
    assert decoded["start_step"] == 1
    assert decoded["steps"][0]["delta"] == "inf"
    assert decoded["steps"][1]["delta"] == pytest.approx(
        bernstein_delta_from_sq(2, 2.0, 2)
    )
    assert [s["k"] for s in decoded["steps"]] == [1, 2, 3]
    assert json.loads(trajectory_to_json(trajectory)) == decoded


def test_trajectory_final_index_defaults_to_initial():
    empty = Trajectory(initial_index=2, start_step=1, steps=())
    assert empty.final_index == 2
    one = Trajectory(
        initial_index=2,
        start_step=1,
        steps=(
            TrajectoryStep(
                k=1,
                erm_index=0,
                chosen_index=0,
                delta=0.0,
                erm_empirical_loss=0.0,
                incumbent_empirical_loss=1.0,
                updated=True,
            ),
        ),
    )
    assert one.final_index == 0
