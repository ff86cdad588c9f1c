"""Estimators for attractiveness and position-bias parameters.

Two inference routes are supported.  With known position biases, the
closed-form weighted estimator ``alpha_bar`` divides an item's total clicks
by its accumulated bias-weighted exposure.  With unknown biases, ``em_fit``
alternates the moment-matching updates

    lambda_k = (1/L) * sum_j N_kj / alpha_j          (k >= 2, lambda_1 = 1)
    alpha_j  = (sum_k N_kj / lambda_k) / (#epochs item j was displayed)

until the largest parameter change falls below a tolerance.  Estimates are
floored at a small epsilon rather than adopting 0/0 = 0, because a hard zero
is an absorbing state of the iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np

from .environment import EpochRecord

DEFAULT_XI = 1e-6
DEFAULT_MAX_ITER = 10_000
DEFAULT_FLOOR = 1e-6


@dataclass
class CountState:
    """Sufficient statistics aggregated over epochs.

    clicks[k, j] counts clicks on slot k while item j occupied it,
    placements[k, j] the epochs in which it did.  ``exposure`` accumulates
    bias-weighted display counts (known-bias mode only).
    """

    n_items: int
    n_slots: int
    clicks: np.ndarray = field(default=None)  # type: ignore[assignment]
    placements: np.ndarray = field(default=None)  # type: ignore[assignment]
    exposure: np.ndarray = field(default=None)  # type: ignore[assignment]
    item_clicks: np.ndarray = field(default=None)  # type: ignore[assignment]
    epochs: int = 0
    exposure_tracked: bool = False

    def __post_init__(self) -> None:
        if self.clicks is None:
            self.clicks = np.zeros((self.n_slots, self.n_items), dtype=np.int64)
        if self.placements is None:
            self.placements = np.zeros((self.n_slots, self.n_items), dtype=np.int64)
        if self.exposure is None:
            self.exposure = np.zeros(self.n_items)
        if self.item_clicks is None:
            self.item_clicks = np.zeros(self.n_items, dtype=np.int64)

    def displays(self) -> np.ndarray:
        """Number of epochs in which each item appeared (any slot)."""
        return self.placements.sum(axis=0)


def update_counts(state: CountState, epoch: EpochRecord, biases: Sequence[float] | None = None) -> CountState:
    """Fold one epoch's feedback into the running counts (in place).

    When ``biases`` is given, per-item bias-weighted exposure is accumulated
    as well; mixing updates with and without biases is rejected.
    """
    if biases is not None:
        state.exposure_tracked = True
    elif state.exposure_tracked:
        raise ValueError("state tracks exposure; pass biases on every update")
    for slot, item in enumerate(epoch.action):
        clicks = int(epoch.slot_clicks[slot])
        state.clicks[slot, item] += clicks
        state.placements[slot, item] += 1
        state.item_clicks[item] += clicks
        if biases is not None:
            state.exposure[item] += float(biases[slot])
    state.epochs += 1
    return state


def alpha_bar(state: CountState) -> np.ndarray:
    """Known-bias estimator: clicks over bias-weighted exposure, per item.

    Items never shown get 0 by convention (callers treat them as unexplored).
    Values are not clipped to [0, 1].
    """
    if not state.exposure_tracked:
        raise ValueError("alpha_bar needs a state built with known biases")
    with np.errstate(invalid="ignore", divide="ignore"):
        est = state.item_clicks / state.exposure
    return np.where(state.exposure > 0, est, 0.0)


def gamma_bar(state: CountState) -> np.ndarray:
    """Per-cell product-parameter estimates N_kj / placements_kj, 0/0 -> 0."""
    with np.errstate(invalid="ignore", divide="ignore"):
        est = state.clicks / state.placements
    return np.where(state.placements > 0, est, 0.0)


@dataclass(frozen=True)
class EmEstimate:
    """Result of the alternating estimation scheme; biases[0] is pinned to 1."""

    alpha: np.ndarray
    biases: np.ndarray
    iterations: int
    converged: bool


def em_fit_batch(
    clicks: np.ndarray,
    displays: np.ndarray,
    epochs: int,
    init_alpha: np.ndarray,
    init_biases: np.ndarray,
    xi: float = DEFAULT_XI,
    max_iter: int = DEFAULT_MAX_ITER,
    floor: float = DEFAULT_FLOOR,
) -> tuple[np.ndarray, np.ndarray, int, np.ndarray]:
    """Run the alternating updates on a stack of click matrices at once.

    ``clicks`` has shape (C, K, J): C problems sharing the same placement
    counts (hence ``displays`` per item and epoch count).  Used both for the
    plain fit (C=1) and for the one-click-perturbed refits of the
    finite-difference bound, which would otherwise dominate runtime.
    Returns (alpha (C,J), biases (C,K), sweeps, converged (C,)).
    """
    if not 0.0 < xi < 1.0:
        raise ValueError("tolerance xi must lie in (0, 1)")
    if epochs < 1:
        raise ValueError("need at least one epoch of data")
    clicks = np.asarray(clicks, dtype=float)
    alpha = np.array(init_alpha, dtype=float)
    biases = np.array(init_biases, dtype=float)
    return solve_problem_stack(clicks, alpha, biases, epochs, np.maximum(displays, 1), xi, max_iter, floor)


@numba.njit(cache=True)
def _alternate_until_converged(clicks, alpha, biases, epochs, disp_safe, xi, max_iter, floor):
    """Alternating updates over a stack of problems, in place.

    Each row is an independent problem that stops once its largest parameter
    change drops to xi; rows exhausting max_iter keep their last iterate.
    Returns the largest sweep count and the per-row convergence flags.
    """
    n_problems, n_slots, n_items = clicks.shape
    converged = np.zeros(n_problems, dtype=np.bool_)
    max_sweeps = 0
    for c in range(n_problems):
        a = alpha[c]
        b = biases[c]
        b[0] = 1.0
        sweeps = 0
        for _ in range(max_iter):
            sweeps += 1
            delta = 0.0
            for k in range(1, n_slots):
                acc = 0.0
                for j in range(n_items):
                    value = clicks[c, k, j]
                    if value != 0.0:  # click matrices are sparse for cold items
                        acc += value / a[j]
                value = acc / epochs
                if value < floor:
                    value = floor
                diff = abs(value - b[k])
                if diff > delta:
                    delta = diff
                b[k] = value
            for j in range(n_items):
                acc = 0.0
                for k in range(n_slots):
                    value = clicks[c, k, j]
                    if value != 0.0:
                        acc += value / b[k]
                value = acc / disp_safe[j]
                if value < floor:
                    value = floor
                diff = abs(value - a[j])
                if diff > delta:
                    delta = diff
                a[j] = value
            if delta <= xi:
                converged[c] = True
                break
        if sweeps > max_sweeps:
            max_sweeps = sweeps
    return max_sweeps, converged


def solve_problem_stack(clicks, alpha, biases, epochs, disp_safe, xi, max_iter, floor):
    """Run the alternating scheme on a stack of problems (see the kernel)."""
    clicks = np.ascontiguousarray(clicks, dtype=np.float64)
    alpha = np.ascontiguousarray(alpha, dtype=np.float64)
    biases = np.ascontiguousarray(biases, dtype=np.float64)
    sweeps, converged = _alternate_until_converged(
        clicks, alpha, biases, float(epochs), np.asarray(disp_safe, dtype=np.float64), xi, max_iter, floor
    )
    return alpha, biases, sweeps, converged


def em_fit(
    state: CountState,
    init_alpha: Sequence[float] | None = None,
    init_biases: Sequence[float] | None = None,
    xi: float = DEFAULT_XI,
    max_iter: int = DEFAULT_MAX_ITER,
    floor: float = DEFAULT_FLOOR,
) -> EmEstimate:
    """Fit attractiveness and position-bias estimates from epoch counts.

    Initial values default to 0.5 everywhere (bias for slot 1 is always
    pinned to 1); policies warm-start from their previous estimate instead.
    On hitting ``max_iter`` the last iterate is returned with
    converged=False and the caller decides how to proceed.
    """
    alpha0 = np.full(state.n_items, 0.5) if init_alpha is None else np.asarray(init_alpha, dtype=float)
    biases0 = np.full(state.n_slots, 0.5) if init_biases is None else np.asarray(init_biases, dtype=float)
    alpha, biases, sweeps, converged = em_fit_batch(
        state.clicks[None, :, :],
        state.displays(),
        state.epochs,
        alpha0[None, :],
        biases0[None, :],
        xi=xi,
        max_iter=max_iter,
        floor=floor,
    )
    return EmEstimate(alpha[0], biases[0], sweeps, bool(converged[0]))


def em_iterates(
    state: CountState,
    init_alpha: Sequence[float] | None = None,
    init_biases: Sequence[float] | None = None,
    floor: float = DEFAULT_FLOOR,
):
    """Yield successive (alpha, biases) sweeps of the alternating scheme.

    Diagnostic view of em_fit's path, used to examine per-iteration
    behaviour of the likelihood; iterate and floor semantics are identical.
    """
    alpha = np.full(state.n_items, 0.5) if init_alpha is None else np.asarray(init_alpha, dtype=float)
    biases = np.full(state.n_slots, 0.5) if init_biases is None else np.asarray(init_biases, dtype=float)
    while True:
        alpha_new, biases_new, _, _ = em_fit_batch(
            state.clicks[None, :, :],
            state.displays(),
            state.epochs,
            alpha[None, :],
            biases[None, :],
            xi=0.5,
            max_iter=1,
            floor=floor,
        )
        alpha, biases = alpha_new[0], biases_new[0]
        yield alpha.copy(), biases.copy()


def log_likelihood(state: CountState, alpha: Sequence[float], biases: Sequence[float]) -> float:
    """Product-of-geometric-marginals log likelihood of the counts.

    sum_{k,j} [ N_kj log(alpha_j lambda_k) - (N_kj + placements_kj) log(1 + alpha_j lambda_k) ].
    Requires strictly positive parameters.
    """
    alpha = np.asarray(alpha, dtype=float)
    biases = np.asarray(biases, dtype=float)
    if np.any(alpha <= 0) or np.any(biases <= 0):
        raise ValueError("log_likelihood needs strictly positive parameters")
    products = np.outer(biases, alpha)
    click_terms = np.where(state.clicks > 0, state.clicks * np.log(products), 0.0)
    return float((click_terms - (state.clicks + state.placements) * np.log1p(products)).sum())
