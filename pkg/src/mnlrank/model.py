"""Core probability model for ranked lists under multinomial-logit choice.

A problem instance has J items with attractiveness parameters alpha_j in
(0, 1] and K display slots with position biases lambda_k in (0, 1].  When an
ordered list ``a`` (one item per slot) is shown, the user clicks slot k with
probability

    P(click on slot k) = lambda_k * alpha_{a_k} / (1 + sum_v lambda_v * alpha_{a_v})

and clicks nothing with the complementary probability.  Everything in this
module is a pure function of its arguments.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

# An action is an ordered list of K distinct item indices (0-based); entry k
# is the item shown in slot k.
Action = tuple[int, ...]


@dataclass(frozen=True)
class ProblemInstance:
    """Ground truth of a simulation: sizes, parameters and horizon."""

    n_items: int
    n_slots: int
    alpha: np.ndarray
    biases: np.ndarray
    horizon: int

    def __post_init__(self) -> None:
        alpha = np.asarray(self.alpha, dtype=float)
        biases = np.asarray(self.biases, dtype=float)
        alpha.setflags(write=False)
        biases.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "biases", biases)
        if self.n_items < 1 or self.n_slots < 1:
            raise ValueError("need at least one item and one slot")
        if self.n_slots > self.n_items:
            raise ValueError(f"more slots ({self.n_slots}) than items ({self.n_items})")
        if alpha.shape != (self.n_items,):
            raise ValueError(f"alpha must have shape ({self.n_items},), got {alpha.shape}")
        if biases.shape != (self.n_slots,):
            raise ValueError(f"biases must have shape ({self.n_slots},), got {biases.shape}")
        # Position biases are deliberately *not* required to be sorted.
        if not np.all((alpha > 0.0) & (alpha <= 1.0)):
            raise ValueError("attractiveness parameters must lie in (0, 1]")
        if not np.all((biases > 0.0) & (biases <= 1.0)):
            raise ValueError("position biases must lie in (0, 1]")
        if self.horizon < 1:
            raise ValueError("horizon must be a positive integer")


def validate_action(inst: ProblemInstance, action: Sequence[int]) -> Action:
    """Check that ``action`` is a valid ordered list for ``inst``.

    Returns the action as a tuple; raises ValueError on wrong length,
    out-of-range item indices, or repeated items.
    """
    act = tuple(int(a) for a in action)
    if len(act) != inst.n_slots:
        raise ValueError(f"action must fill all {inst.n_slots} slots, got {len(act)}")
    if any(a < 0 or a >= inst.n_items for a in act):
        raise ValueError(f"item index out of range in action {act}")
    if len(set(act)) != len(act):
        raise ValueError(f"action contains a repeated item: {act}")
    return act


def attraction_weights(inst: ProblemInstance, action: Sequence[int]) -> np.ndarray:
    """Per-slot choice weights lambda_k * alpha_{a_k} for a validated action."""
    act = validate_action(inst, action)
    return inst.biases * inst.alpha[list(act)]


def click_distribution(inst: ProblemInstance, action: Sequence[int]) -> np.ndarray:
    """Distribution of the click variable for one round.

    Entry 0 is the no-click probability, entry k (1-based) the probability of
    a click on slot k.  Entries are positive and sum to one.
    """
    weights = attraction_weights(inst, action)
    denom = 1.0 + weights.sum()
    probs = np.empty(inst.n_slots + 1)
    probs[0] = 1.0 / denom
    probs[1:] = weights / denom
    return probs


def expected_reward(inst: ProblemInstance, action: Sequence[int]) -> float:
    """Probability of receiving any click: S / (1 + S) with S = sum of weights."""
    total = attraction_weights(inst, action).sum()
    return float(total / (1.0 + total))


def optimal_action(scores: Sequence[float], biases: Sequence[float]) -> Action:
    """Action maximising sum_k biases[k] * scores[a_k].

    Pairs the k-th largest score with the k-th largest bias; because the
    reward S/(1+S) is strictly increasing in S, this also maximises the
    expected reward when ``scores`` are attractiveness values.  Ties are
    broken by ascending index (items and slots) so the result is
    deterministic.  Scores may exceed 1 or be +inf (unexplored-item
    sentinels).
    """
    scores = list(map(float, scores))
    biases = list(map(float, biases))
    if len(biases) > len(scores):
        raise ValueError("more slots than items")
    slot_order = sorted(range(len(biases)), key=lambda k: (-biases[k], k))
    item_order = sorted(range(len(scores)), key=lambda j: (-scores[j], j))
    action = [0] * len(biases)
    for rank, slot in enumerate(slot_order):
        action[slot] = item_order[rank]
    return tuple(action)


def lower_bound_value(inst: ProblemInstance) -> float:
    """Scale of the minimax regret lower bound, sqrt(J T S_{K,2}^2 / S_K).

    Reporting-only scalar; S_K and S_{K,2} are the sum of the position biases
    and of their squares.
    """
    s_k = float(inst.biases.sum())
    s_k2 = float((inst.biases**2).sum())
    return float(np.sqrt(inst.n_items * inst.horizon * s_k2**2 / s_k))


@dataclass(frozen=True)
class RegretTrace:
    """Per-round and cumulative regret of one (policy, replication) run."""

    per_round: np.ndarray
    cumulative: np.ndarray

    @classmethod
    def from_per_round(cls, per_round: np.ndarray, allow_negative: bool = False) -> "RegretTrace":
        per_round = np.asarray(per_round, dtype=float)
        if not allow_negative and np.any(per_round < -1e-12):
            raise ValueError("pseudo-regret must be nonnegative in every round")
        return cls(per_round=per_round, cumulative=np.cumsum(per_round))

    def __len__(self) -> int:
        return len(self.per_round)
