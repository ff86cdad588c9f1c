"""Stochastic simulator of the click feedback loop.

Interaction is epoch-structured: a fixed ranked list is shown round after
round until the first no-click, which closes the epoch.  Within an epoch the
number of clicks on slot k is geometric with parameter
(1 + lambda_k * alpha_{a_k})^{-1} under the convention P(X=x) = (1-p)^x p on
x in {0, 1, ...}; ``sample_epoch_fast`` exploits the equivalent
geometric-total / multinomial-split representation of the same joint law.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .model import Action, ProblemInstance, click_distribution

# One PCG64 stream per replication; streams for sub-components are spawned
# from the replication's SeedSequence so they never overlap.
SimulationRng = np.random.Generator


def make_rng(seed: int) -> SimulationRng:
    return np.random.default_rng(seed)


def spawn_rngs(seed: int, n: int) -> list[SimulationRng]:
    """Independent child streams for one replication seed."""
    seq = np.random.SeedSequence(seed)
    return [np.random.default_rng(child) for child in seq.spawn(n)]


@dataclass(frozen=True)
class EpochRecord:
    """Feedback from one epoch: the action, per-slot click counts, length.

    ``truncated`` is set when the horizon, not a no-click event, ended the
    epoch; in that case every observed round was a click.  Otherwise the
    final round is the single no-click, so length = 1 + total clicks.
    """

    action: Action
    slot_clicks: np.ndarray
    length: int
    truncated: bool


def sample_click(inst: ProblemInstance, action, rng: SimulationRng) -> int:
    """One categorical draw of the click variable: 0 = no click, k = slot k."""
    cumulative = np.cumsum(click_distribution(inst, action)).tolist()
    return min(bisect_right(cumulative, rng.random()), inst.n_slots)


def run_epoch(inst: ProblemInstance, action, rounds_left: int, rng: SimulationRng) -> EpochRecord:
    """Show ``action`` repeatedly until the first no-click or the horizon.

    ``rounds_left`` caps the epoch length; if it is exhausted before a
    no-click occurs the record is marked truncated.
    """
    if rounds_left < 1:
        raise ValueError("rounds_left must be at least 1")
    cumulative = np.cumsum(click_distribution(inst, action)).tolist()
    n_slots = inst.n_slots
    slot_clicks = [0] * n_slots
    used = 0
    while used < rounds_left:
        used += 1
        outcome = min(bisect_right(cumulative, rng.random()), n_slots)
        if outcome == 0:
            return EpochRecord(tuple(action), np.array(slot_clicks), used, truncated=False)
        slot_clicks[outcome - 1] += 1
    return EpochRecord(tuple(action), np.array(slot_clicks), used, truncated=True)


def sample_epoch_fast(inst: ProblemInstance, action, rng: SimulationRng) -> EpochRecord:
    """Draw an untruncated epoch in two calls instead of round by round.

    Total clicks are geometric with the no-click probability as parameter
    (numpy's geometric counts trials, hence the -1), and are split across
    slots multinomially in proportion to the attraction weights.  The joint
    law of the slot counts matches ``run_epoch`` without a horizon cap.
    """
    probs = click_distribution(inst, action)
    total = int(rng.geometric(probs[0])) - 1
    weights = probs[1:] / probs[1:].sum()
    slot_clicks = rng.multinomial(total, weights)
    return EpochRecord(tuple(action), slot_clicks, total + 1, truncated=False)
