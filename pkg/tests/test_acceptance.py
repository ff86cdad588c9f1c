"""Acceptance suite: one test per criterion, at the stated tolerances.

Run with -v for one pass/fail line per criterion.  The desk-scale regret
experiments run once per session (problems (a) and (b) at T=20000, problem
(c) at T=8000, 20 replications each, fixed seeds) and their CSVs are
written to results/ for the figure package.

Two estimator-suite criteria are expected to fail: the alternating
estimation scheme's fixed point is not the maximiser of the marginal
likelihood, and the likelihood is not monotone along its iterates (the
scheme is moment matching, not likelihood ascent).  The tests state the
criteria faithfully and the decisions ledger carries the analysis.
"""

import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import pytest

from mnlrank import (
    CountState,
    EpochRecord,
    ExperimentConfig,
    ExperimentResult,
    em_fit,
    expected_reward,
    gamma_bar,
    log_likelihood,
    make_rng,
    mg_constant,
    optimal_action,
    problem_instance,
    regret_upper_bound_value,
    run_experiment,
    sample_epoch_fast,
    solve_assignment,
    update_counts,
)
from mnlrank.checks import concentration_suite, distributional_suite
from mnlrank.harness import _job, summary_path, trajectory_path, write_result_csv
from mnlrank.inference import alpha_bar, em_iterates

RESULTS_DIR = Path(__file__).resolve().parent.parent / "results"

DESK_RUNS = {
    # problem -> (horizon, reps, base_seed, policies), most expensive first
    "c": (8000, 20, 3000, ("epoch-ucb-star-upb", "mnl-bandit", "epoch-ucb", "epoch-ucb-w", "toprank", "pbucb")),
    "a": (20000, 20, 1000, ("epoch-ucb", "epoch-ucb-w", "epoch-ucb-upb", "epoch-ucb-star-upb", "mnl-bandit", "toprank", "pbucb")),
    "b": (20000, 20, 2000, ("epoch-ucb", "epoch-ucb-w", "mnl-bandit", "toprank", "pbucb")),
}

# rough seconds per replication, to schedule long jobs first on the pool
JOB_COST = {
    ("c", "epoch-ucb-star-upb"): 6.0,
    ("a", "epoch-ucb-upb"): 2.0,
    ("a", "epoch-ucb-star-upb"): 1.6,
    ("a", "mnl-bandit"): 1.1,
    ("b", "mnl-bandit"): 1.0,
}


@pytest.fixture(scope="session")
def desk_runs():
    """Run the regret-reproduction experiments once and persist their CSVs."""
    jobs = [
        (problem, spec[0], policy, rep, spec[2], False)
        for problem, spec in DESK_RUNS.items()
        for policy in spec[3]
        for rep in range(spec[1])
    ]
    jobs.sort(key=lambda job: JOB_COST.get((job[0], job[2]), 0.5), reverse=True)
    started = time.time()
    with ProcessPoolExecutor(max_workers=2) as pool:
        outcomes = list(pool.map(_job, jobs))
    elapsed = time.time() - started
    results = {
        problem: ExperimentResult(problem, spec[0], spec[3], spec[1])
        for problem, spec in DESK_RUNS.items()
    }
    for job, (policy, rep, cumulative) in zip(jobs, outcomes):
        results[job[0]].traces[(policy, rep)] = cumulative
    RESULTS_DIR.mkdir(exist_ok=True)
    for result in results.values():
        write_result_csv(result, RESULTS_DIR, stride=50)
    return results, elapsed


# --- distributional suite ---------------------------------------------------


def test_distributional_suite():
    started = time.time()
    outcomes = distributional_suite()
    elapsed = time.time() - started
    for outcome in outcomes:
        print(outcome.line())
    assert all(o.passed for o in outcomes), [o.line() for o in outcomes if not o.passed]
    assert elapsed < 30.0, f"distributional suite took {elapsed:.1f}s (limit 30s)"


# --- estimator suite ---------------------------------------------------------


def test_estimator_alpha_bar_unbiased_within_three_se():
    inst = problem_instance("a", 10**9)
    action = (0, 1, 2, 3)
    rng = make_rng(4040)
    state = CountState(inst.n_items, inst.n_slots)
    per_epoch = np.zeros((10_000, inst.n_slots))
    for i in range(10_000):
        record = sample_epoch_fast(inst, action, rng)
        per_epoch[i] = record.slot_clicks
        update_counts(state, record, biases=inst.biases)
    estimates = alpha_bar(state)
    for slot, item in enumerate(action):
        stderr = per_epoch[:, slot].std() / inst.biases[slot] / np.sqrt(10_000)
        assert abs(estimates[item] - inst.alpha[item]) <= 3 * stderr


def test_estimator_gamma_bar_unbiased_within_three_se():
    inst = problem_instance("b", 10**9)
    action = (3, 1, 2)
    rng = make_rng(4141)
    state = CountState(inst.n_items, inst.n_slots)
    per_epoch = np.zeros((10_000, inst.n_slots))
    for i in range(10_000):
        record = sample_epoch_fast(inst, action, rng)
        per_epoch[i] = record.slot_clicks
        update_counts(state, record)
    estimates = gamma_bar(state)
    for slot, item in enumerate(action):
        truth = inst.biases[slot] * inst.alpha[item]
        stderr = per_epoch[:, slot].std() / np.sqrt(10_000)
        assert abs(estimates[slot, item] - truth) <= 3 * stderr


def worked_example_state():
    state = CountState(n_items=2, n_slots=2)
    state.clicks = np.array([[4, 2], [1, 1]], dtype=np.int64)
    state.placements = np.full((2, 2), 10, dtype=np.int64)
    state.item_clicks = state.clicks.sum(axis=0)
    state.epochs = 20
    return state


def test_estimator_em_closed_form_fixed_point():
    x = 2 * np.sqrt(2)
    estimate = em_fit(worked_example_state())
    assert estimate.alpha[0] == pytest.approx((4 + x) / 20, abs=1e-4)
    assert estimate.alpha[1] == pytest.approx((2 + x) / 20, abs=1e-4)
    assert estimate.biases[1] == pytest.approx(1 / x, abs=1e-4)


def random_count_state(rng):
    """Small two-item, two-slot dataset with balanced placements."""
    state = CountState(n_items=2, n_slots=2)
    state.placements = np.full((2, 2), 10, dtype=np.int64)
    state.epochs = 20
    truth_alpha = rng.uniform(0.15, 0.8, 2)
    truth_bias = np.array([1.0, rng.uniform(0.2, 0.9)])
    mean = np.outer(truth_bias, truth_alpha) * state.placements
    state.clicks = rng.poisson(mean).astype(np.int64)
    state.clicks = np.maximum(state.clicks, 1)  # keep the MLE interior
    state.item_clicks = state.clicks.sum(axis=0)
    return state


def grid_search_mle(state, step=1e-3, hi=1.5):
    """Exact grid maximiser of the marginal log likelihood.

    For two items the likelihood separates per item once the slot-2 bias is
    fixed, so the grid scan is exact at the stated resolution.
    """
    grid = np.arange(step, hi, step)
    n = state.clicks
    nt = state.placements

    def item_profile(j, lam2):
        gamma1 = grid
        gamma2 = grid * lam2
        ll = (
            n[0, j] * np.log(gamma1)
            - (n[0, j] + nt[0, j]) * np.log1p(gamma1)
            + n[1, j] * np.log(gamma2)
            - (n[1, j] + nt[1, j]) * np.log1p(gamma2)
        )
        best = int(np.argmax(ll))
        return grid[best], ll[best]

    best_value, best_params = -np.inf, None
    for lam2 in grid:
        a1, v1 = item_profile(0, lam2)
        a2, v2 = item_profile(1, lam2)
        if v1 + v2 > best_value:
            best_value = v1 + v2
            best_params = (a1, a2, lam2)
    return best_params


def test_estimator_em_matches_grid_search_mle():
    """Criterion: EM fixed point matches the grid-search MLE within 1e-3.

    Expected to fail: the alternating scheme's fixed point is a
    moment-matching solution, not the likelihood maximiser (ledger entry
    'EM scheme fixed point != maximizer of the likelihood').
    """
    rng = make_rng(777)
    worst = 0.0
    for _ in range(3):
        state = random_count_state(rng)
        estimate = em_fit(state, xi=1e-10)
        a1, a2, lam2 = grid_search_mle(state)
        gap = max(
            abs(estimate.alpha[0] - a1),
            abs(estimate.alpha[1] - a2),
            abs(estimate.biases[1] - lam2),
        )
        worst = max(worst, gap)
    assert worst <= 1e-3 + 5e-4, (
        f"EM fixed point differs from the grid-search likelihood maximiser "
        f"by up to {worst:.4f} (tolerance 1e-3): the scheme does not maximise "
        "the marginal likelihood"
    )


def test_estimator_em_loglik_monotone_every_iteration():
    """Criterion: log likelihood nondecreasing at every iteration (tol 1e-10).

    Expected to fail: the iteration overshoots the likelihood maximum and
    descends to its fixed point (same root cause as the grid-search
    criterion; see the decisions ledger).
    """
    state = worked_example_state()
    iterator = em_iterates(state)
    values = []
    for _ in range(60):
        alpha, biases = next(iterator)
        values.append(log_likelihood(state, alpha, biases))
    drops = np.diff(values)
    assert drops.min() >= -1e-10, (
        f"log likelihood decreases by {-drops.min():.2e} along the EM path "
        "(largest drop); the scheme is not an ascent method for this likelihood"
    )


# --- concentration suite ------------------------------------------------------


def test_concentration_suite():
    outcomes = concentration_suite()
    for outcome in outcomes:
        print(outcome.line())
    assert all(o.passed for o in outcomes), [o.line() for o in outcomes if not o.passed]


def test_concentration_mg_constant_value():
    value = mg_constant(0.5)
    assert value <= 9.0
    assert value == pytest.approx(8.8886, abs=1e-3)


# --- optimization suite --------------------------------------------------------


def test_optimization_assignment_matches_brute_force_on_1000_instances():
    rng = make_rng(909)
    for _ in range(1000):
        n_slots = int(rng.integers(1, 5))
        n_items = int(rng.integers(n_slots, 7))
        weights = rng.uniform(-1.0, 2.0, size=(n_slots, n_items))
        assignment = solve_assignment(weights)
        best = max(
            itertools.permutations(range(n_items), n_slots),
            key=lambda items: sum(weights[k, j] for k, j in enumerate(items)),
        )
        assert assignment == best


def test_optimization_optimal_action_matches_enumeration():
    for name, expected in (("a", (0, 1, 2, 3)), ("b", (3, 1, 2))):
        inst = problem_instance(name, horizon=10)
        best = max(
            itertools.permutations(range(inst.n_items), inst.n_slots),
            key=lambda action: expected_reward(inst, action),
        )
        assert optimal_action(inst.alpha, inst.biases) == expected == best


# --- regret reproduction at desk scale -----------------------------------------


def test_regret_i_weak_coefficients_more_conservative_on_a(desk_runs):
    results, _ = desk_runs
    plain = results["a"].final_regrets("epoch-ucb").mean()
    weak = results["a"].final_regrets("epoch-ucb-w").mean()
    print(f"problem (a): epoch-ucb {plain:.1f} vs epoch-ucb-w {weak:.1f}")
    assert plain < weak


def test_regret_ii_star_variant_below_paper_variant_on_a(desk_runs):
    results, _ = desk_runs
    star = results["a"].final_regrets("epoch-ucb-star-upb").mean()
    paper = results["a"].final_regrets("epoch-ucb-upb").mean()
    print(f"problem (a): star-upb {star:.1f} vs paper-upb {paper:.1f}")
    assert star < paper


def test_regret_iii_toprank_linear_on_non_monotone_biases(desk_runs):
    results, _ = desk_runs
    window = DESK_RUNS["b"][0] // 10
    slopes = {}
    for policy in ("toprank", "epoch-ucb"):
        trace = results["b"].mean_trace(policy)
        slopes[policy] = (trace[-1] - trace[-1 - window]) / window
    print(f"problem (b) final-10% slopes: {slopes}")
    assert slopes["toprank"] > 5 * slopes["epoch-ucb"]


def test_regret_iv_mnl_bandit_explores_longer_on_c(desk_runs):
    results, _ = desk_runs
    bandit = results["c"].final_regrets("mnl-bandit").mean()
    star = results["c"].final_regrets("epoch-ucb-star-upb").mean()
    print(f"problem (c): mnl-bandit {bandit:.1f} vs star-upb {star:.1f}")
    assert bandit > star


def test_regret_v_sublinear_growth_on_a(desk_runs):
    results, _ = desk_runs
    half = DESK_RUNS["a"][0] // 2
    ratios = [
        results["a"].traces[("epoch-ucb", rep)][-1]
        / results["a"].traces[("epoch-ucb", rep)][half - 1]
        for rep in range(DESK_RUNS["a"][1])
    ]
    print(f"problem (a): mean regret(T)/regret(T/2) = {np.mean(ratios):.3f}")
    assert np.mean(ratios) < 1.8


def test_regret_runtime_within_target(desk_runs):
    _, elapsed = desk_runs
    print(f"desk-scale experiments took {elapsed:.1f}s")
    assert elapsed < 300.0, f"regret reproduction took {elapsed:.1f}s (target < 5 min)"


def test_regret_upper_bound_dominates_observed_mean_on_a(desk_runs):
    results, _ = desk_runs
    inst = problem_instance("a", DESK_RUNS["a"][0])
    trace = results["a"].mean_trace("epoch-ucb")
    for t in range(100, DESK_RUNS["a"][0] + 1, 100):
        assert regret_upper_bound_value(inst, t) >= trace[t - 1]


# --- determinism ----------------------------------------------------------------


def test_determinism_byte_identical_csv(tmp_path):
    config = dict(
        problem="b",
        horizon=150,
        policies=("epoch-ucb", "toprank"),
        replications=2,
        base_seed=99,
    )
    first, second = tmp_path / "first", tmp_path / "second"
    run_experiment(ExperimentConfig(out_dir=str(first), **config))
    run_experiment(ExperimentConfig(out_dir=str(second), **config))
    for path_of in (trajectory_path, summary_path):
        assert path_of(first, "b").read_bytes() == path_of(second, "b").read_bytes()
