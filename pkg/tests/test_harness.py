import math

import numpy as np
import pytest

from mnlrank import (
    ExperimentConfig,
    expected_reward,
    optimal_action,
    problem_instance,
    read_trajectories,
    regret_upper_bound_value,
    run_experiment,
    run_replication,
)
from mnlrank.harness import trajectory_path, summary_path, write_result_csv
from mnlrank.policies import EpochPolicy


class FixedAction(EpochPolicy):
    """Scripted policy playing one action forever."""

    name = "fixed"

    def __init__(self, action):
        self.action = tuple(action)

    def begin_epoch(self, epoch):
        return self.action

    def observe(self, record):
        pass


class TestRunReplication:
    def test_oracle_policy_has_zero_trace(self):
        inst = problem_instance("b", 500)
        best = optimal_action(inst.alpha, inst.biases)
        trace = run_replication(inst, FixedAction(best), 0, base_seed=4)
        assert len(trace) == 500
        assert np.all(trace.per_round == 0.0)
        assert trace.cumulative[-1] == 0.0

    def test_constant_action_closed_form(self):
        inst = problem_instance("b", 1000)
        trace = run_replication(inst, FixedAction((0, 1, 2)), 0, base_seed=4)
        gap = 0.355 / 1.355 - 0.205 / 1.205
        assert trace.cumulative[-1] == pytest.approx(1000 * gap, abs=1e-9)

    def test_horizon_accounting_exact(self):
        inst = problem_instance("a", 777)
        trace = run_replication(inst, "epoch-ucb", 0, base_seed=0)
        assert len(trace) == 777
        assert np.all(np.isfinite(trace.per_round))

    def test_realized_mode_allows_negative_rounds(self):
        inst = problem_instance("b", 300)
        trace = run_replication(inst, "epoch-ucb", 0, base_seed=1, realized=True)
        assert trace.per_round.min() < 0  # clicked rounds score r* - 1
        assert len(trace) == 300

    def test_round_policies_also_fill_horizon(self):
        inst = problem_instance("b", 250)
        trace = run_replication(inst, "pbucb", 0, base_seed=2)
        assert len(trace) == 250


class TestRunExperiment:
    @staticmethod
    def small_config(tmp_path=None, **overrides):
        fields = dict(
            problem="b",
            horizon=120,
            policies=("epoch-ucb", "pbucb"),
            replications=3,
            base_seed=11,
            out_dir=str(tmp_path) if tmp_path else None,
        )
        fields.update(overrides)
        return ExperimentConfig(**fields)

    def test_aggregate_mean_is_mean_of_traces(self):
        result = run_experiment(self.small_config())
        stacked = np.array([result.traces[("epoch-ucb", r)] for r in range(3)])
        assert result.mean_trace("epoch-ucb") == pytest.approx(stacked.mean(axis=0))
        assert result.final_regrets("epoch-ucb") == pytest.approx(stacked[:, -1])

    def test_parallel_equals_serial(self):
        serial = run_experiment(self.small_config())
        parallel = run_experiment(self.small_config(threads=2))
        for key, trace in serial.traces.items():
            assert parallel.traces[key] == pytest.approx(trace, abs=0)

    def test_csv_round_trip(self, tmp_path):
        result = run_experiment(self.small_config(tmp_path))
        parsed = read_trajectories(trajectory_path(tmp_path, "b"))
        assert parsed.problem == "b"
        assert parsed.policies == ("epoch-ucb", "pbucb")
        assert parsed.replications == 3
        for key, trace in result.traces.items():
            assert parsed.traces[key].tolist() == trace.tolist()  # exact, via repr

    def test_deterministic_bytes(self, tmp_path):
        first_dir = tmp_path / "first"
        second_dir = tmp_path / "second"
        run_experiment(self.small_config(first_dir))
        run_experiment(self.small_config(second_dir))
        for path_of in (trajectory_path, summary_path):
            assert path_of(first_dir, "b").read_bytes() == path_of(second_dir, "b").read_bytes()

    def test_stride_thins_rows_but_keeps_final(self, tmp_path):
        result = run_experiment(self.small_config())
        write_result_csv(result, tmp_path, stride=50)
        parsed = read_trajectories(trajectory_path(tmp_path, "b"))
        assert parsed.horizon == 120
        assert len(parsed.traces[("epoch-ucb", 0)]) == 3  # rounds 50, 100, 120
        assert parsed.traces[("epoch-ucb", 0)][-1] == pytest.approx(
            result.traces[("epoch-ucb", 0)][-1]
        )

    def test_summary_csv_has_one_row_per_policy_rep(self, tmp_path):
        run_experiment(self.small_config(tmp_path))
        lines = summary_path(tmp_path, "b").read_text().strip().splitlines()
        assert lines[0] == "problem,policy,replication,final_cum_regret"
        assert len(lines) == 1 + 2 * 3

    def test_rejects_unknown_policy_and_bad_reps(self):
        with pytest.raises(ValueError):
            self.small_config(policies=("epoch-greedy",))
        with pytest.raises(ValueError):
            self.small_config(replications=0)


class TestRegretUpperBound:
    def test_degenerate_instance_positive(self):
        inst = problem_instance(
            "a", horizon=1
        )  # value itself only needs J, K, biases
        assert regret_upper_bound_value(inst, 1) > 0

    def test_single_item_single_slot(self):
        from mnlrank import ProblemInstance

        inst = ProblemInstance(1, 1, (0.5,), (1.0,), horizon=1)
        value = regret_upper_bound_value(inst)
        assert math.isfinite(value) and value > 0

    def test_matches_independent_re_evaluation_on_a(self):
        inst = problem_instance("a", 50_000)
        t, j, k, lam_min = 50_000, 6, 4, 0.1
        expected = (9 * (k + 1) + 14 * j / (lam_min * k) * math.log(j * t * t / 2)) * (
            math.log(t) + 1
        ) + math.sqrt(48 * math.log(j * t * t) * j * k * t / lam_min)
        assert regret_upper_bound_value(inst) == pytest.approx(expected, rel=1e-12)

    def test_grows_sublinearly_in_horizon(self):
        inst = problem_instance("a", 50_000)
        assert regret_upper_bound_value(inst, 40_000) < 2 * regret_upper_bound_value(inst, 20_000)
