"""Reference placement policies and the exhaustive brute-force oracle,
plus the operation-count accounting used to compare scheme complexity.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .agents import CacheEnv, decode_state, encode_state
from .netmodel import CachePlacement

ENUMERATION_CAP = 10**6


class EnumerationTooLargeError(RuntimeError):
    def __init__(self, state_count: int):
        super().__init__(
            f"state space F^(S*M) = {state_count} exceeds the enumeration cap"
        )
        self.state_count = state_count


@dataclass
class OpsBudget:
    method: str
    op_count: int


def optimal_exhaustive(env: CacheEnv, cap: int = ENUMERATION_CAP):
    """Enumerate every placement and return (best placement, best sum MOS).

    Refuses (rather than truncates) when F^(S*M) exceeds `cap`. Ties break
    toward the lowest state key.
    """
    m, s, f = env.dims
    state_count = f ** (s * m)
    if state_count > cap:
        raise EnumerationTooLargeError(state_count)

    best_combo, best_score = None, -np.inf
    # itertools.product yields combos in ascending key order, so keeping
    # the first maximum realizes the lowest-key tie-break
    for combo in itertools.product(range(f), repeat=m * s):
        score, _ = env.evaluate_tuple(combo)
        if score > best_score:
            best_combo, best_score = combo, score
    placement = CachePlacement(np.array(best_combo, dtype=np.int64).reshape(m, s))
    return placement, float(best_score)


def non_cooperative(env: CacheEnv, popularity=None) -> CachePlacement:
    """Every BS independently caches the top-S most popular contents
    (ties toward the lower content index); identical rows by construction."""
    m, s, f = env.dims
    p = np.asarray(env.popularity if popularity is None else popularity, dtype=float)
    if s > f:
        raise ValueError("cache capacity exceeds library size")
    top = np.lexsort((np.arange(f), -p))[:s]
    return CachePlacement(np.tile(np.sort(top), (m, 1)))


def random_placement(env: CacheEnv, rng) -> CachePlacement:
    """Each slot uniform over the content library."""
    m, s, f = env.dims
    return CachePlacement(rng.integers(0, f, size=(m, s)))


def ops_budget(num_contents: int, slots: int, num_bs: int) -> dict[str, OpsBudget]:
    """Exact operation counts per scheme (python ints, arbitrary precision)."""
    f, s, m = num_contents, slots, num_bs
    if min(f, s, m) < 1:
        raise ValueError("dimensions must be positive")
    return {
        "optimal": OpsBudget("optimal", f ** (s * m)),
        "eps_greedy_q": OpsBudget("eps_greedy_q", f * s * m),
        "laql": OpsBudget("laql", f * s * m * 2 * s * m),
    }
