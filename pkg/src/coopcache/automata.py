"""Discretized pursuit learning automaton: keeps an action-probability
vector, estimates per-action reward probabilities by maximum likelihood,
and on every rewarded step moves probability mass in quanta of
delta = 1/(n_actions * kappa) toward the best-estimated action.

Environment response convention: r = 0 means reward, r = 1 means penalty.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class PursuitAutomaton:
    n_actions: int
    kappa: int
    probs: np.ndarray = field(repr=False)
    reward_count_u: np.ndarray = field(repr=False)
    select_count_v: np.ndarray = field(repr=False)

    @property
    def delta(self) -> float:
        return 1.0 / (self.n_actions * self.kappa)

    @property
    def estimates_d(self) -> np.ndarray:
        return self.reward_count_u / self.select_count_v

    def snapshot_row(self) -> list[float]:
        """Flat (probs..., u..., v...) row for CSV convergence exports."""
        return [*self.probs, *self.reward_count_u, *self.select_count_v]


def new(n_actions: int, kappa: int, prior_u: int = 1, prior_v: int = 2) -> PursuitAutomaton:
    """Uniform automaton with d-estimates pre-seeded to prior_u/prior_v.

    The prior avoids 0/0 before an action's first selection and washes out
    after a few visits.
    """
    if n_actions < 2:
        raise ValueError("need at least 2 actions")
    if kappa < 1:
        raise ValueError("kappa must be a positive integer")
    return PursuitAutomaton(
        n_actions=n_actions,
        kappa=kappa,
        probs=np.full(n_actions, 1.0 / n_actions),
        reward_count_u=np.full(n_actions, float(prior_u)),
        select_count_v=np.full(n_actions, float(prior_v)),
    )


def select(la: PursuitAutomaton, rng) -> int:
    """Sample an action by inverse CDF on a single uniform draw."""
    u = rng.random()
    return int(min(np.searchsorted(np.cumsum(la.probs), u), la.n_actions - 1))


def update(la: PursuitAutomaton, chosen: int, response: int) -> PursuitAutomaton:
    """Apply one environment response (0 = reward, 1 = penalty) in place.

    On reward: every non-best component drops by delta (clamped at 0) and
    the best-estimated action takes the exact complement, so the vector
    stays normalized exactly.
    """
    if not 0 <= chosen < la.n_actions:
        raise ValueError(f"action index {chosen} out of range")
    if response not in (0, 1):
        raise ValueError("response must be 0 (reward) or 1 (penalty)")

    la.reward_count_u[chosen] += 1 - response
    la.select_count_v[chosen] += 1

    if response == 0:
        h = int(np.argmax(la.estimates_d))  # ties -> lowest index
        p = np.maximum(la.probs - la.delta, 0.0)
        p[h] = 0.0
        p[h] = 1.0 - p.sum()
        la.probs = p
    return la


def converged(la: PursuitAutomaton, threshold: float = 0.95) -> int | None:
    """Index of the action whose probability has reached `threshold`, if any."""
    h = int(np.argmax(la.probs))
    return h if la.probs[h] >= threshold else None
