"""Self-contained property suites, runnable from the CLI and the test suite.

Each suite returns a list of named outcomes; the CLI prints one line per
check and the acceptance tests assert them.  Oracles here are independent of
the code paths they validate: goodness-of-fit tests compare samplers against
analytic probability mass functions, coverage checks compare deviation radii
against raw Monte Carlo draws, and formula checks re-evaluate expressions
directly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .concentration import (
    central_moment_geometric,
    derangement,
    mg_constant,
    theorem1_bound,
    ucb_width_em,
    ucb_width_known,
    ucb_width_weak,
)
from .environment import make_rng, run_epoch, sample_epoch_fast
from .model import expected_reward, lower_bound_value, optimal_action
from .problems import problem_instance


@dataclass(frozen=True)
class CheckOutcome:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def _geometric_gof_pvalue(samples: np.ndarray, p: float) -> float:
    """Chi-square goodness of fit against Geometric(p) on {0, 1, ...}.

    Bins are merged from the tail until every expected count is at least 5.
    """
    n = len(samples)
    cutoff = int(samples.max()) + 1
    observed = np.bincount(samples, minlength=cutoff + 1).astype(float)
    expected = np.array([n * (1 - p) ** x * p for x in range(cutoff)] + [n * (1 - p) ** cutoff])
    while len(expected) > 2 and expected[-1] < 5.0:
        expected[-2] += expected[-1]
        observed[-2] += observed[-1]
        expected, observed = expected[:-1], observed[:-1]
    stat = ((observed - expected) ** 2 / expected).sum()
    return float(stats.chi2.sf(stat, len(expected) - 1))


def distributional_suite(seed: int = 20240, epochs: int = 10**5) -> list[CheckOutcome]:
    """Lemma-1 marginals and the equivalence of the two epoch samplers."""
    outcomes = []
    inst = problem_instance("b", horizon=10**9)
    action = (3, 1, 2)
    rng = make_rng(seed)
    counts = np.empty((epochs, inst.n_slots), dtype=np.int64)
    for i in range(epochs):
        counts[i] = run_epoch(inst, action, 10**9, rng).slot_clicks
    for slot in range(inst.n_slots):
        weight = inst.biases[slot] * inst.alpha[action[slot]]
        p = 1.0 / (1.0 + weight)
        pval = _geometric_gof_pvalue(counts[:, slot], p)
        outcomes.append(
            CheckOutcome(
                f"geometric-gof-slot-{slot + 1}",
                pval >= 0.01,
                f"chi-square p={pval:.4f} vs Geometric((1+{weight:.3f})^-1), {epochs} epochs",
            )
        )

    pair_inst = problem_instance("b", horizon=10**9)
    pair_action = (3, 2, 1)
    rng_a = make_rng(seed + 1)
    rng_b = make_rng(seed + 2)
    joint_a = np.empty((epochs, 2), dtype=np.int64)
    joint_b = np.empty((epochs, 2), dtype=np.int64)
    for i in range(epochs):
        joint_a[i] = run_epoch(pair_inst, pair_action, 10**9, rng_a).slot_clicks[:2]
        joint_b[i] = sample_epoch_fast(pair_inst, pair_action, rng_b).slot_clicks[:2]
    cap = 3  # support {0,1,2,3+} per slot
    table = np.zeros((2, (cap + 1) ** 2))
    for row, joint in enumerate((joint_a, joint_b)):
        clipped = np.minimum(joint, cap)
        cells = clipped[:, 0] * (cap + 1) + clipped[:, 1]
        table[row] = np.bincount(cells, minlength=(cap + 1) ** 2)
    occupied = table.sum(axis=0) > 0
    _, pval, _, _ = stats.chi2_contingency(table[:, occupied])
    outcomes.append(
        CheckOutcome(
            "epoch-sampler-equivalence",
            pval > 0.01,
            f"round-by-round vs geometric/multinomial joint law, chi-square p={pval:.4f}",
        )
    )
    return outcomes


def _coverage_iid(rng, trials: int, n: int, p: float, confidence: float) -> float:
    mu = (1 - p) / p
    sigma_sq = mu * mu + mu
    radius = theorem1_bound(n * sigma_sq, confidence)
    violations = 0
    chunk = 20_000
    done = 0
    while done < trials:
        size = min(chunk, trials - done)
        sums = (rng.geometric(p, size=(size, n)) - 1).sum(axis=1)
        violations += int((np.abs(sums - n * mu) > radius).sum())
        done += size
    return violations / trials


def _coverage_adaptive(rng, trials: int, n: int, confidence: float) -> float:
    """Coverage with a p-schedule that reacts to past draws (mu_i <= 1)."""
    p = np.full(trials, 0.5)
    total = np.zeros(trials)
    mu_sum = np.zeros(trials)
    var_sum = np.zeros(trials)
    for _ in range(n):
        draws = rng.geometric(p) - 1
        mu = (1 - p) / p
        total += draws
        mu_sum += mu
        var_sum += mu * mu + mu
        p = np.where(draws == 0, 0.9, 0.5)
    radius = np.sqrt(2.0 * var_sum * math.log(confidence)) + 4.0 * math.log(confidence)
    return float((np.abs(total - mu_sum) > radius).mean())


def _lemma3_violation_rate(rng, reps: int, epochs: int, n_items: int, alpha: float) -> float:
    """Empirical miss rate of the estimator confidence interval.

    One item fixed in slot 1 (bias 1) for ``epochs`` epochs, so its
    exposure is exactly the epoch count.
    """
    p = 1.0 / (1.0 + alpha)
    totals = (rng.geometric(p, size=(reps, epochs)) - 1).sum(axis=1)
    estimates = totals / epochs
    log_term = math.log(n_items * epochs * epochs / 2.0)
    radius = math.sqrt(4.0 * log_term / epochs) + 4.0 * log_term / epochs
    return float((np.abs(estimates - alpha) > radius).mean())


def concentration_suite(seed: int = 20241, trials: int = 10**5) -> list[CheckOutcome]:
    outcomes = []
    confidence = 100.0
    rate = _coverage_iid(make_rng(seed), trials, n=200, p=0.6, confidence=confidence)
    outcomes.append(
        CheckOutcome(
            "deviation-coverage-iid",
            rate <= 2.0 / confidence,
            f"violation rate {rate:.5f} <= {2.0 / confidence} (200 iid Geometric(0.6) draws, {trials} trials)",
        )
    )
    rate = _coverage_adaptive(make_rng(seed + 1), trials, n=200, confidence=confidence)
    outcomes.append(
        CheckOutcome(
            "deviation-coverage-adaptive",
            rate <= 2.0 / confidence,
            f"violation rate {rate:.5f} <= {2.0 / confidence} (draw-dependent p in {{0.5, 0.9}})",
        )
    )

    grid_ok = True
    worst = ""
    for n in range(2, 9):
        for p in np.arange(0.50, 0.951, 0.05):
            p = round(float(p), 2)
            moment = central_moment_geometric(n, p)
            bound = derangement(n) * (1 - p) / p**n
            if moment > bound * (1 + 1e-12):
                grid_ok = False
                worst = f"violated at n={n}, p={p}: {moment} > {bound}"
    equality = abs(central_moment_geometric(2, 0.7) - derangement(2) * 0.3 / 0.49) < 1e-12
    outcomes.append(
        CheckOutcome(
            "central-moment-bound-grid",
            grid_ok and equality,
            worst or "mu_n <= !n (1-p)/p^n on n in 2..8, p in 0.50..0.95; tight at n=2",
        )
    )

    bernstein_ok = True
    for n in range(3, 9):
        if derangement(n) > math.factorial(n) / 2:
            bernstein_ok = False
        for p in np.arange(0.50, 0.951, 0.05):
            p = float(p)
            rhs = (math.factorial(n) / 2.0) * ((1 - p) / p**2) * (1 / p) ** (n - 2)
            if central_moment_geometric(n, p) > rhs * (1 + 1e-12):
                bernstein_ok = False
    outcomes.append(
        CheckOutcome(
            "bernstein-moment-condition",
            bernstein_ok,
            "mu_n <= (n!/2) sigma^2 c^(n-2) with sigma^2=(1-p)/p^2, c=1/p; and !n <= n!/2",
        )
    )

    m_half = mg_constant(0.5)
    outcomes.append(
        CheckOutcome(
            "entropy-constant-at-half",
            m_half <= 9.0,
            f"M(0.5) = {m_half:.6f} <= 9",
        )
    )

    for epochs in (10, 100):
        rate = _lemma3_violation_rate(make_rng(seed + 2 + epochs), reps=20_000, epochs=epochs, n_items=6, alpha=0.3)
        bound = 4.0 / (6 * epochs)
        outcomes.append(
            CheckOutcome(
                f"estimator-interval-coverage-l{epochs}",
                rate <= bound,
                f"miss rate {rate:.5f} <= {bound:.5f} at l={epochs}",
            )
        )
    return outcomes


def _enumerate_best(inst) -> tuple[tuple[int, ...], float]:
    best, best_reward = None, -1.0
    for action in itertools.permutations(range(inst.n_items), inst.n_slots):
        reward = expected_reward(inst, action)
        if reward > best_reward + 1e-15:
            best, best_reward = action, reward
    return best, best_reward


def theory_suite() -> list[CheckOutcome]:
    """Direct re-evaluations of the closed-form quantities."""
    outcomes = []
    width = ucb_width_known(0.5, 100.0, 6, 10)
    expected = math.sqrt(4 * 1.0 * math.log(300.0) / 100) + 4 * math.log(300.0) / 100
    outcomes.append(
        CheckOutcome("ucb-width-known-example", abs(width - expected) < 1e-12, f"width(J=6,l=10,L=100)={width:.6f}")
    )
    weak = ucb_width_weak(0.5, 100.0, 6, 10)
    outcomes.append(
        CheckOutcome("ucb-width-ordering", weak > width, f"weak {weak:.5f} > strong {width:.5f} at the example point")
    )

    star_below = all(
        ucb_width_em(b, j, l, "star") < ucb_width_em(b, j, l, "paper")
        for b in (1e-4, 0.01, 0.5, 2.0)
        for j in (2, 4, 8, 30)
        for l in (2, 10, 1000)
    )
    outcomes.append(CheckOutcome("star-width-below-paper-width", star_below, "0.5 sqrt(b log(sqrt(J) l)) < sqrt(36 b log(J l^2))"))

    identity_ok = all(derangement(n) == n * derangement(n - 1) + (-1) ** n for n in range(1, 13))
    outcomes.append(CheckOutcome("derangement-identity", identity_ok, "!n = n !(n-1) + (-1)^n up to n=12"))

    sort_ok = True
    for name in ("a", "b"):
        inst = problem_instance(name, horizon=100)
        enumerated, _ = _enumerate_best(inst)
        if optimal_action(inst.alpha, inst.biases) != enumerated:
            sort_ok = False
    outcomes.append(CheckOutcome("optimal-action-vs-enumeration", sort_ok, "sort-and-pair equals exhaustive argmax on (a) and (b)"))

    inst_a = problem_instance("a", horizon=50_000)
    inst_b = problem_instance("b", horizon=50_000)
    values = (lower_bound_value(inst_a), lower_bound_value(inst_b))
    expect_a = math.sqrt(6 * 50_000 * 1.14**2 / 1.6)
    expect_b = math.sqrt(4 * 50_000 * 1.85**2 / 2.1)
    outcomes.append(
        CheckOutcome(
            "lower-bound-values",
            abs(values[0] - expect_a) < 1e-9 and abs(values[1] - expect_b) < 1e-9,
            f"problem (a): {values[0]:.2f}, problem (b): {values[1]:.2f} at T=50000",
        )
    )
    return outcomes


SUITES = {
    "distributional": distributional_suite,
    "concentration": concentration_suite,
    "theory": theory_suite,
}
