"""Confidence-width formulas and the combinatorial machinery behind them.

The widths drive the optimistic policies; the derangement / cumulant / Bell
polynomial helpers give exact values for the geometric central-moment bound
used by the concentration property tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .inference import (
    DEFAULT_FLOOR,
    DEFAULT_MAX_ITER,
    DEFAULT_XI,
    CountState,
    EmEstimate,
    em_fit,
    em_fit_batch,
)

UNEXPLORED = float("inf")


def _log_term(x: float) -> float:
    # Widths are confidence radii; a negative log (only possible for J*l^2 < 2)
    # would make them meaningless, so clamp at zero.
    return max(math.log(x), 0.0)


def ucb_width_known(alpha_bar_j: float, exposure_j: float, n_items: int, epoch: int) -> float:
    """Confidence radius for the known-bias estimator after ``epoch``-1 epochs.

    sqrt(4 min(1, 2 abar) log(J l^2 / 2) / exposure) + 4 log(J l^2 / 2) / exposure.
    Unexplored items (zero exposure) get +inf so they are tried first.
    """
    if exposure_j <= 0:
        return UNEXPLORED
    log_term = _log_term(n_items * epoch * epoch / 2.0)
    scale = min(1.0, 2.0 * alpha_bar_j)
    return math.sqrt(4.0 * scale * log_term / exposure_j) + 4.0 * log_term / exposure_j


def ucb_width_weak(alpha_bar_j: float, exposure_j: float, n_items: int, epoch: int) -> float:
    """Width with the looser constants: coefficient 48 and log(sqrt(J) l / sqrt(2))."""
    if exposure_j <= 0:
        return UNEXPLORED
    log_term = _log_term(math.sqrt(n_items / 2.0) * epoch)
    scale = min(1.0, 2.0 * alpha_bar_j)
    return math.sqrt(48.0 * scale * log_term / exposure_j) + 48.0 * log_term / exposure_j


def ucb_width_em(beta1_sq_j: float, n_items: int, epoch: int, variant: str = "paper") -> float:
    """Width added to an EM estimate from its finite-difference bound.

    variant "paper": sqrt(36 beta1^2 log(J l^2)); variant "star": the
    rescaled 0.5 sqrt(beta1^2 log(sqrt(J) l)).
    """
    if variant == "paper":
        return math.sqrt(36.0 * beta1_sq_j * _log_term(n_items * epoch * epoch))
    if variant == "star":
        return 0.5 * math.sqrt(beta1_sq_j * _log_term(math.sqrt(n_items) * epoch))
    raise ValueError(f"unknown width variant {variant!r}")


def mnl_cell_width(gamma_bar_kj: float, pulls_kj: float, n_items: int, n_slots: int, epoch: int) -> float:
    """Per-(slot, item) width for the product-parameter bandit."""
    if pulls_kj <= 0:
        return UNEXPLORED
    log_term = _log_term(n_items * n_slots * epoch * epoch / 2.0)
    scale = min(1.0, 2.0 * gamma_bar_kj)
    return math.sqrt(4.0 * scale * log_term / pulls_kj) + 4.0 * log_term / pulls_kj


def mg_constant(p_min: float) -> float:
    """Sub-exponential constant of the geometric functional inequality.

    Evaluates sqrt(1-p) / (p (1 - (1-p)^{1/4})), the entropy-method constant
    at its reference point b = -log(1-p)/2.  At p = 1/2 this is about 8.8887,
    hence the familiar bound of 9 for click parameters in [1/2, 1).
    """
    if not 0.0 < p_min < 1.0:
        raise ValueError("p must lie in (0, 1)")
    q = 1.0 - p_min
    return math.sqrt(q) / (p_min * (1.0 - q**0.25))


def derangement(m: int) -> int:
    """Exact number of fixed-point-free permutations of m elements."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    if m == 0:
        return 1
    prev2, prev1 = 1, 0  # !0, !1
    for n in range(2, m + 1):
        prev2, prev1 = prev1, (n - 1) * (prev2 + prev1)
    return prev1 if m >= 1 else prev2


def cumulant_coeffs(n: int) -> list[int]:
    """Coefficients h_{n,1..n} of the geometric cumulant polynomial.

    kappa_n(p) = sum_i (-1)^{n-i} h_{n,i} / p^i for n >= 2, built from
    h_2 = (1, 1) via h_{n,i} = i h_{n-1,i} + (i-1) h_{n-1,i-1} and
    h_{n,n} = (n-1) h_{n-1,n-1}.  The n = 1 cumulant (1-p)/p has a constant
    term outside this basis and is deliberately not exposed.
    """
    if n < 2:
        raise ValueError("cumulant coefficients are defined for n >= 2")
    coeffs = [1, 1]
    for m in range(3, n + 1):
        nxt = [1]
        for i in range(2, m):
            nxt.append(i * coeffs[i - 1] + (i - 1) * coeffs[i - 2])
        nxt.append((m - 1) * coeffs[-1])
        coeffs = nxt
    return coeffs


def geometric_cumulant(n: int, p: float) -> float:
    """kappa_n of a geometric(p) variable on {0, 1, ...}, n >= 2."""
    coeffs = cumulant_coeffs(n)
    return sum((-1) ** (n - i) * h / p**i for i, h in enumerate(coeffs, start=1))


def bell_incomplete(n: int, m: int, x: list[float]) -> float:
    """Incomplete exponential Bell polynomial B_{n,m}(x_1, ..., x_{n-m+1}).

    Exact sum over nonnegative integer sequences (j_1, ..., j_{n-m+1}) with
    sum j_i = m and sum i*j_i = n, enumerated by bounded search.
    """
    if not n >= m >= 1:
        raise ValueError("need n >= m >= 1")
    width = n - m + 1
    if len(x) != width:
        raise ValueError(f"expected {width} arguments, got {len(x)}")
    total = 0.0
    factorial = math.factorial

    def recurse(idx: int, parts_left: int, weight_left: int, coeff: float) -> None:
        nonlocal total
        if idx == width:
            if parts_left == 0 and weight_left == 0:
                total += coeff
            return
        i = idx + 1
        max_j = min(parts_left, weight_left // i)
        for j in range(max_j + 1):
            recurse(
                idx + 1,
                parts_left - j,
                weight_left - i * j,
                coeff * (x[idx] / factorial(i)) ** j / factorial(j),
            )

    recurse(0, m, n, float(factorial(n)))
    return total


def central_moment_geometric(n: int, p: float) -> float:
    """n-th central moment of geometric(p), assembled from cumulants.

    mu_n = sum_{m=1}^n B_{n,m}(0, kappa_2, ..., kappa_{n-m+1}).
    """
    if n < 2:
        raise ValueError("defined for n >= 2")
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    total = 0.0
    for m in range(1, n + 1):
        width = n - m + 1
        args = [0.0] + [geometric_cumulant(i, p) for i in range(2, width + 1)]
        total += bell_incomplete(n, m, args[:width])
    return total


def moment_bound_holds(n: int, p: float) -> bool:
    """Check mu_n <= !n (1-p) / p^n (tight at n = 2)."""
    bound = derangement(n) * (1.0 - p) / p**n
    return central_moment_geometric(n, p) <= bound * (1.0 + 1e-12)


def theorem1_bound(sigma_sq_sum: float, confidence: float, variant: str = "oracle", y_sum: float | None = None) -> float:
    """Deviation radius for sums of (possibly adaptive) geometric variables.

    variant "oracle" uses the true variance sum, "empirical" the observed sum
    of the draws; coverage of these radii is what the concentration suite
    verifies.
    """
    if confidence <= 1.0:
        raise ValueError("confidence parameter C must exceed 1")
    log_c = math.log(confidence)
    if variant == "oracle":
        return math.sqrt(2.0 * sigma_sq_sum * log_c) + 4.0 * log_c
    if variant == "empirical":
        if y_sum is None:
            raise ValueError("empirical variant needs y_sum")
        return math.sqrt(8.0 * y_sum * log_c) + 4.0 * log_c
    raise ValueError(f"unknown variant {variant!r}")


@dataclass(frozen=True)
class FiniteDifferenceBound:
    """Per-item beta_1^2 values plus the refits' convergence diagnostics."""

    values: np.ndarray
    base: EmEstimate
    perturbed_converged: bool


def beta1_squared(
    state: CountState,
    base: EmEstimate | None = None,
    xi: float = DEFAULT_XI,
    max_iter: int = DEFAULT_MAX_ITER,
    floor: float = DEFAULT_FLOOR,
) -> FiniteDifferenceBound:
    """Data-dependent squared finite differences of the EM estimator.

    For every cell (k, s) that has been placed at least once, refit the
    estimator with one extra click in that cell and accumulate, per item j,

        beta1^2_j = sum_cells (alpha_j - alpha_j^{cell})^2 * placements_ks.

    Refits are warm-started from the unperturbed fixed point (equivalence
    with cold starts is covered by tests); a refit that hits max_iter keeps
    its last iterate and lowers the ``perturbed_converged`` flag.
    """
    if base is None:
        base = em_fit(state, xi=xi, max_iter=max_iter, floor=floor)
    cells = np.argwhere(state.placements >= 1)
    if len(cells) == 0:
        raise ValueError("need at least one placed (slot, item) cell")
    stack = np.repeat(state.clicks[None, :, :].astype(float), len(cells), axis=0)
    for idx, (slot, item) in enumerate(cells):
        stack[idx, slot, item] += 1.0
    init_alpha = np.repeat(base.alpha[None, :], len(cells), axis=0)
    init_biases = np.repeat(base.biases[None, :], len(cells), axis=0)
    alpha, _, _, converged = em_fit_batch(
        stack,
        state.displays(),
        state.epochs,
        init_alpha,
        init_biases,
        xi=xi,
        max_iter=max_iter,
        floor=floor,
    )
    weights = state.placements[cells[:, 0], cells[:, 1]]
    diffs_sq = (alpha - base.alpha[None, :]) ** 2
    values = (diffs_sq * weights[:, None]).sum(axis=0)
    return FiniteDifferenceBound(values=values, base=base, perturbed_converged=bool(converged.all()))
