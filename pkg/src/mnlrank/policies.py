"""Decision-making policies behind one shared interface.

Five of the seven policies are epoch-based: they pick a ranked list when a
new epoch opens (after a no-click) and digest the whole epoch's feedback at
once.  TopRank and PBUCB re-rank every round.  All policies emit valid
actions (distinct items) at every step and none sees the true attractiveness
parameters; the known-bias policies receive the position biases only.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .assignment import solve_assignment
from .concentration import UNEXPLORED, ucb_width_em, ucb_width_known, ucb_width_weak
from .environment import EpochRecord, SimulationRng
from .inference import (
    DEFAULT_FLOOR,
    DEFAULT_MAX_ITER,
    DEFAULT_XI,
    CountState,
    EmEstimate,
    alpha_bar,
    gamma_bar,
    solve_problem_stack,
    update_counts,
)
from .model import Action, optimal_action


class EpochPolicy:
    """Chooses an action per epoch; ``observe`` is called once per epoch."""

    name: str
    is_epoch_based = True

    def begin_epoch(self, epoch: int) -> Action:
        raise NotImplementedError

    def observe(self, record: EpochRecord) -> None:
        raise NotImplementedError

    def diagnostics(self) -> dict:
        return {}


class RoundPolicy:
    """Chooses an action per round; ``observe`` gets the raw click outcome."""

    name: str
    is_epoch_based = False

    def choose(self, round_index: int) -> Action:
        raise NotImplementedError

    def observe(self, action: Action, click: int) -> None:
        raise NotImplementedError

    def diagnostics(self) -> dict:
        return {}


class EpochUcb(EpochPolicy):
    """Optimism over the closed-form estimator when biases are known."""

    def __init__(self, n_items: int, n_slots: int, biases: Sequence[float], weak: bool = False):
        self.name = "epoch-ucb-w" if weak else "epoch-ucb"
        self.n_items = n_items
        self.biases = np.asarray(biases, dtype=float)
        self.state = CountState(n_items, n_slots)
        self.width = ucb_width_weak if weak else ucb_width_known

    def begin_epoch(self, epoch: int) -> Action:
        estimates = alpha_bar(self.state) if self.state.exposure_tracked else np.zeros(self.n_items)
        scores = [
            estimates[j] + self.width(estimates[j], self.state.exposure[j], self.n_items, epoch)
            for j in range(self.n_items)
        ]
        return optimal_action(scores, self.biases)

    def observe(self, record: EpochRecord) -> None:
        update_counts(self.state, record, self.biases)


class _StackedRefits:
    """Incrementally maintained one-click-perturbed click matrices.

    Row 0 is the unperturbed count matrix; every placed (slot, item) cell
    owns one row with that cell's count incremented.  The base fit is
    warm-started from the previous epoch's estimate; the perturbed refits
    always start from the fresh base fixed point (their fixed points are not
    unique on degenerate designs, and the base basin is the meaningful one),
    and all of them are solved as one batch.  ``refit_max_iter`` bounds the
    per-epoch refit budget; a refit that exhausts it keeps its last iterate,
    as non-converged fits do everywhere else.
    """

    def __init__(self, n_items: int, n_slots: int, floor: float, refit_max_iter: int = 500):
        self.n_items = n_items
        self.n_slots = n_slots
        self.floor = floor
        self.refit_max_iter = refit_max_iter
        self.cells: list[tuple[int, int]] = []
        self._cell_row: dict[tuple[int, int], int] = {}
        self.clicks = np.zeros((1, n_slots, n_items))
        self.weights = np.zeros(0)  # placement count per perturbed cell
        self.base_alpha = np.full(n_items, 0.5)
        self.base_biases = np.full(n_slots, 0.5)
        self.base_biases[0] = 1.0

    def fold_in(self, state: CountState, record: EpochRecord) -> None:
        """Mirror one observed epoch (already folded into ``state``)."""
        grew = []
        for slot, item in enumerate(record.action):
            clicks = int(record.slot_clicks[slot])
            if clicks:
                self.clicks[:, slot, item] += clicks
            if state.placements[slot, item] == 1:  # cell became eligible
                grew.append((slot, item))
            else:
                self.weights[self._cell_row[(slot, item)]] += 1.0
        for slot, item in grew:
            row = self.clicks[0].copy()
            row[slot, item] += 1.0
            self.clicks = np.concatenate([self.clicks, row[None]])
            self._cell_row[(slot, item)] = len(self.cells)
            self.cells.append((slot, item))
            self.weights = np.append(self.weights, 1.0)

    def solve(self, state: CountState, xi: float, max_iter: int) -> tuple[EmEstimate, np.ndarray, bool]:
        epochs = state.epochs
        disp_safe = np.maximum(state.displays(), 1)
        base_alpha, base_biases, sweeps, base_conv = solve_problem_stack(
            self.clicks[:1],
            self.base_alpha[None, :].copy(),
            self.base_biases[None, :].copy(),
            epochs,
            disp_safe,
            xi,
            max_iter,
            self.floor,
        )
        self.base_alpha, self.base_biases = base_alpha[0], base_biases[0]
        estimate = EmEstimate(base_alpha[0].copy(), base_biases[0].copy(), sweeps, bool(base_conv[0]))

        n_rows = len(self.cells) + 1
        stack_alpha, _, _, stack_conv = solve_problem_stack(
            self.clicks,
            np.broadcast_to(base_alpha[0], (n_rows, self.n_items)).copy(),
            np.broadcast_to(base_biases[0], (n_rows, self.n_slots)).copy(),
            epochs,
            disp_safe,
            xi,
            self.refit_max_iter,
            self.floor,
        )
        beta_sq = ((stack_alpha[1:] - base_alpha[0]) ** 2 * self.weights[:, None]).sum(axis=0)
        return estimate, beta_sq, bool(base_conv[0] and stack_conv.all())


class EpochUcbUpb(EpochPolicy):
    """Optimism over EM estimates when position biases are unknown.

    Slot ranking follows the estimated biases (slot 1 pinned to 1, no
    clipping); item scores add the finite-difference confidence width to the
    EM point estimate, with the requested coefficient variant.
    """

    def __init__(
        self,
        n_items: int,
        n_slots: int,
        variant: str = "paper",
        xi: float = DEFAULT_XI,
        max_iter: int = DEFAULT_MAX_ITER,
        floor: float = DEFAULT_FLOOR,
    ):
        self.name = "epoch-ucb-upb" if variant == "paper" else "epoch-ucb-star-upb"
        self.variant = variant
        self.n_items = n_items
        self.n_slots = n_slots
        self.state = CountState(n_items, n_slots)
        self.xi = xi
        self.max_iter = max_iter
        self._refits = _StackedRefits(n_items, n_slots, floor)
        self._non_converged = 0
        self.last_estimate: EmEstimate | None = None

    def begin_epoch(self, epoch: int) -> Action:
        if self.state.epochs == 0:
            return tuple(range(self.n_slots))
        estimate, beta_sq, all_converged = self._refits.solve(self.state, self.xi, self.max_iter)
        if not all_converged:
            self._non_converged += 1
        self.last_estimate = estimate
        if self.variant == "paper":
            log_term = max(math.log(self.n_items * epoch * epoch), 0.0)
            widths = np.sqrt(36.0 * beta_sq * log_term)
        else:
            log_term = max(math.log(math.sqrt(self.n_items) * epoch), 0.0)
            widths = 0.5 * np.sqrt(beta_sq * log_term)
        scores = np.where(self.state.displays() > 0, estimate.alpha + widths, UNEXPLORED)
        return optimal_action(scores, estimate.biases)

    def observe(self, record: EpochRecord) -> None:
        update_counts(self.state, record)
        self._refits.fold_in(self.state, record)

    def diagnostics(self) -> dict:
        return {"em_non_converged_epochs": self._non_converged}


class MnlBandit(EpochPolicy):
    """Product-parameter bandit: one UCB per (slot, item) cell, then an
    exact assignment; ignores the shared structure across cells."""

    name = "mnl-bandit"

    def __init__(self, n_items: int, n_slots: int):
        self.n_items = n_items
        self.n_slots = n_slots
        self.state = CountState(n_items, n_slots)

    def begin_epoch(self, epoch: int) -> Action:
        gbar = gamma_bar(self.state)
        pulls = self.state.placements
        log_term = max(math.log(self.n_items * self.n_slots * epoch * epoch / 2.0), 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            widths = np.sqrt(4.0 * np.minimum(1.0, 2.0 * gbar) * log_term / pulls) + 4.0 * log_term / pulls
        ucbs = np.where(pulls > 0, gbar + widths, UNEXPLORED)
        return solve_assignment(ucbs)

    def observe(self, record: EpochRecord) -> None:
        update_counts(self.state, record)


class TopRank(RoundPolicy):
    """Blocked randomised ranking with pairwise click-difference elimination.

    Items live in ordered blocks; each round the list shows the blocks in
    order, shuffled within a block.  When one item has out-clicked another in
    the same block by more than the deviation allowance, the loser is
    demoted below it permanently.  Assumes slots are best in index order, so
    it cannot adapt to non-monotone position biases.
    """

    name = "toprank"

    def __init__(
        self,
        n_items: int,
        n_slots: int,
        horizon: int,
        rng: SimulationRng,
        scale_c: float = 4.0,
    ):
        self.n_items = n_items
        self.n_slots = n_slots
        self.delta = 1.0 / horizon
        self.scale_c = scale_c
        self.rng = rng
        self.wins = np.zeros((n_items, n_items))
        self.worse_than = np.zeros((n_items, n_items), dtype=bool)
        self.blocks: list[list[int]] = [list(range(n_items))]
        self._block_of = np.zeros(n_items, dtype=np.int64)

    def choose(self, round_index: int) -> Action:
        action: list[int] = []
        for block in self.blocks:
            order = [block[i] for i in self.rng.permutation(len(block))]
            action.extend(order)
            if len(action) >= self.n_slots:
                break
        return tuple(action[: self.n_slots])

    def observe(self, action: Action, click: int) -> None:
        clicked = action[click - 1] if click > 0 else None
        shown = set(action)
        demoted = False
        for block in self.blocks:
            members = [i for i in block if i in shown]
            if len(members) < 2:
                continue
            if clicked is not None and clicked in members:
                for other in members:
                    if other != clicked:
                        self.wins[clicked, other] += 1
            for i in members:
                for j in members:
                    if i == j or self.worse_than[j, i]:
                        continue
                    lead = self.wins[i, j] - self.wins[j, i]
                    total = self.wins[i, j] + self.wins[j, i]
                    if total > 0 and lead >= math.sqrt(
                        2.0 * total * math.log(self.scale_c * math.sqrt(total) / self.delta)
                    ):
                        self.worse_than[j, i] = True
                        demoted = True
        if demoted:
            self._rebuild_blocks()

    def _rebuild_blocks(self) -> None:
        remaining = list(range(self.n_items))
        blocks: list[list[int]] = []
        while remaining:
            rem = np.array(remaining)
            top = [i for i in remaining if not self.worse_than[i, rem].any()]
            if not top:  # contradictory statistics; cannot happen with one-sided demotions
                top = remaining[:]
            blocks.append(top)
            remaining = [i for i in remaining if i not in top]
        self.blocks = blocks

    def diagnostics(self) -> dict:
        return {"blocks": [list(b) for b in self.blocks]}


class Pbucb(RoundPolicy):
    """Position-based-model UCB with known biases.

    Estimates each item's click-through rate as clicks over bias-weighted
    exposure and adds an exploration term shrinking with the display count.
    Its inference model allows several clicks per round, which the single-
    choice data generating process never produces, so the estimates are
    biased low; the ranking they induce is still consistent.
    """

    name = "pbucb"

    def __init__(self, n_items: int, n_slots: int, biases: Sequence[float]):
        self.n_items = n_items
        self.biases = np.asarray(biases, dtype=float)
        self.displays = np.zeros(n_items)
        self.exposure = np.zeros(n_items)
        self.clicks = np.zeros(n_items)

    def choose(self, round_index: int) -> Action:
        log_t = math.log(round_index) if round_index > 1 else 0.0
        scores = np.full(self.n_items, UNEXPLORED)
        seen = self.displays > 0
        theta = np.where(seen, self.clicks / np.maximum(self.exposure, 1e-300), 0.0)
        widths = np.sqrt(self.displays[seen] / self.exposure[seen]) * np.sqrt(
            log_t / (2.0 * self.displays[seen])
        )
        scores[seen] = theta[seen] + widths
        return optimal_action(scores, self.biases)

    def observe(self, action: Action, click: int) -> None:
        for slot, item in enumerate(action):
            self.displays[item] += 1
            self.exposure[item] += self.biases[slot]
            if click == slot + 1:
                self.clicks[item] += 1


POLICY_NAMES = (
    "epoch-ucb",
    "epoch-ucb-w",
    "epoch-ucb-upb",
    "epoch-ucb-star-upb",
    "mnl-bandit",
    "toprank",
    "pbucb",
)


def make_policy(
    name: str,
    n_items: int,
    n_slots: int,
    biases: Sequence[float] | None = None,
    horizon: int | None = None,
    rng: SimulationRng | None = None,
) -> EpochPolicy | RoundPolicy:
    """Instantiate a policy by its registry name.

    ``biases`` is required by the known-bias policies, ``horizon`` and
    ``rng`` by TopRank.
    """
    if name in ("epoch-ucb", "epoch-ucb-w", "pbucb") and biases is None:
        raise ValueError(f"{name} needs the position biases")
    if name == "epoch-ucb":
        return EpochUcb(n_items, n_slots, biases)
    if name == "epoch-ucb-w":
        return EpochUcb(n_items, n_slots, biases, weak=True)
    if name == "epoch-ucb-upb":
        return EpochUcbUpb(n_items, n_slots, variant="paper")
    if name == "epoch-ucb-star-upb":
        return EpochUcbUpb(n_items, n_slots, variant="star")
    if name == "mnl-bandit":
        return MnlBandit(n_items, n_slots)
    if name == "toprank":
        if horizon is None or rng is None:
            raise ValueError("toprank needs the horizon and an rng stream")
        return TopRank(n_items, n_slots, horizon, rng)
    if name == "pbucb":
        return Pbucb(n_items, n_slots, biases)
    raise ValueError(f"unknown policy {name!r}; known: {', '.join(POLICY_NAMES)}")
