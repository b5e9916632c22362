"""MDP layer over cache placements: state/action encoding, MOS-based
binary reward, tabular Q-learning with epsilon-greedy selection, and
LAQL, which drives action selection through one pursuit automaton per
visited state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import automata, netmodel
from .netmodel import CachePlacement, FadingRealization, NetworkScenario, QoeParams

_DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"


class StateKeyError(ValueError):
    """Raised for malformed state keys."""


@dataclass
class AgentConfig:
    learning_rate_alpha: float = 0.75
    discount_gamma: float = 0.6
    epsilon: float = 0.1
    kappa: int = 10
    episodes: int = 10
    steps_per_episode: int = 1000
    infeasible_penalty: bool = True
    reward_mode: str = "binary"             # binary | shaped
    stability_window: int | None = None     # early stop when best placement
                                            # is unchanged this many steps

    def __post_init__(self):
        if not 0 < self.learning_rate_alpha < 1:
            raise ValueError("alpha must lie in (0,1)")
        if not 0 < self.discount_gamma < 1:
            raise ValueError("gamma must lie in (0,1)")
        if not 0 <= self.epsilon <= 1:
            raise ValueError("epsilon must lie in [0,1]")
        if self.reward_mode not in ("binary", "shaped"):
            raise ValueError("reward_mode must be 'binary' or 'shaped'")


@dataclass
class OpsCounter:
    q_updates: int = 0
    la_updates: int = 0
    env_evaluations: int = 0
    action_counts: np.ndarray | None = None


@dataclass
class TrainOutcome:
    q_table: dict
    automata_map: dict
    best_placement: CachePlacement
    best_sum_mos: float
    reward_curve: list[int]
    best_mos_curve: list[float]
    ops_counter: OpsCounter
    method: str


def encode_state(placement: CachePlacement, num_contents: int) -> str:
    """Base-F digit string over the M*S slots in row-major order."""
    if num_contents > len(_DIGITS):
        raise StateKeyError(f"base-F encoding supports F <= {len(_DIGITS)}")
    placement.validate(num_contents)
    return "".join(_DIGITS[v] for v in placement.entries.ravel())


def decode_state(key: str, num_bs: int, slots: int, num_contents: int) -> CachePlacement:
    if len(key) != num_bs * slots:
        raise StateKeyError(f"key length {len(key)} != M*S = {num_bs * slots}")
    try:
        vals = [_DIGITS.index(c) for c in key]
    except ValueError:
        raise StateKeyError(f"bad digit in key {key!r}") from None
    if any(v >= num_contents for v in vals):
        raise StateKeyError("key digit out of content range")
    return CachePlacement(np.array(vals, dtype=np.int64).reshape(num_bs, slots))


def num_actions(num_bs: int, slots: int) -> int:
    return 2 * slots * num_bs + 1


def apply_action(placement: CachePlacement, action: int, num_contents: int) -> CachePlacement:
    """Actions 2k / 2k+1 shift slot k (row-major) +1 / -1 modulo F; the
    last action index is the no-op."""
    m, s = placement.shape
    n = num_actions(m, s)
    if not 0 <= action < n:
        raise ValueError(f"action {action} out of range [0,{n})")
    if action == n - 1:
        return placement
    slot, direction = divmod(action, 2)
    out = placement.entries.copy()
    row, col = divmod(slot, s)
    delta = 1 if direction == 0 else -1
    out[row, col] = (out[row, col] + delta) % num_contents
    return CachePlacement(out)


def reward(mos_prev: float, mos_next: float, feasible_next: bool = True,
           infeasible_penalty: bool = True) -> int:
    """Environment response: 0 on non-decreasing MOS (reward/'active'),
    1 otherwise; infeasible successor states are always penalized."""
    if infeasible_penalty and not feasible_next:
        return 1
    return 0 if mos_next >= mos_prev else 1


def q_update(q: dict, s: str, a: int, r_q: float, s_next: str,
             config: AgentConfig, n_actions: int) -> dict:
    """One Bellman update on the state-keyed Q table (created lazily)."""
    for key in (s, s_next):
        if key not in q:
            q[key] = np.zeros(n_actions)
    alpha, gamma = config.learning_rate_alpha, config.discount_gamma
    q[s][a] = (1 - alpha) * q[s][a] + alpha * (r_q + gamma * q[s_next].max())
    return q


class CacheEnv:
    """One trial's frozen environment: scenario, fading realization, and
    popularity vector, with memoized per-state objective and feasibility.

    Geometry-dependent quantities are precomputed once so that evaluating
    a placement costs only a handful of small matrix products.
    """

    def __init__(self, scenario: NetworkScenario, popularity, qoe: QoeParams | None = None,
                 fading: FadingRealization | None = None):
        self.scenario = scenario
        self.popularity = np.asarray(popularity, dtype=float)
        self.qoe = qoe or QoeParams()
        self.fading = fading or FadingRealization.expectation(
            scenario.num_bs, scenario.num_users)
        self._cache: dict[tuple, tuple[float, bool]] = {}
        self.eval_count = 0

        d = scenario.distances()
        self._amp = (np.sqrt(scenario.tx_power_rho) * self.fading.magnitudes
                     * d ** (-scenario.pathloss_alpha / 2.0))
        self._pwr = self._amp**2
        # one-hot nearest-BS association, users x BSs
        assoc = scenario.nearest_bs()
        self._assoc_onehot = np.zeros((scenario.num_users, scenario.num_bs))
        self._assoc_onehot[np.arange(scenario.num_users), assoc] = 1.0
        self._rows = np.repeat(np.arange(scenario.num_bs), scenario.cache_capacity_s)

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.scenario.num_bs, self.scenario.cache_capacity_s,
                self.scenario.num_contents_f)

    @property
    def n_actions(self) -> int:
        m, s, _ = self.dims
        return num_actions(m, s)

    def random_placement(self, rng) -> CachePlacement:
        m, s, f = self.dims
        return CachePlacement(rng.integers(0, f, size=(m, s)))

    def evaluate(self, placement: CachePlacement) -> tuple[float, bool]:
        """(sum MOS, feasible) of a placement; cached per state."""
        return self.evaluate_tuple(tuple(int(v) for v in placement.entries.ravel()))

    def evaluate_key(self, key: str, placement: CachePlacement | None = None):
        m, s, f = self.dims
        if placement is None:
            placement = decode_state(key, m, s, f)
        return self.evaluate(placement)

    def evaluate_tuple(self, slots: tuple) -> tuple[float, bool]:
        hit = self._cache.get(slots)
        if hit is not None:
            return hit
        self.eval_count += 1
        m, s, f = self.dims
        sc = self.scenario

        ind = np.zeros((m, f))
        ind[self._rows, list(slots)] = 1.0
        counts = ind.sum(axis=0)
        num = (ind.T @ self._amp) ** 2                       # F x N_u
        interf = (1.0 - ind).T @ self._pwr
        sinr = num / (interf + sc.noise_sigma2)
        sinr[counts == 0, :] = 0.0
        log_terms = np.log2(1.0 + sinr)

        rates = sc.bandwidth_b * (self.popularity * counts) @ log_terms
        total = float(netmodel.mos_vector(rates, self.qoe).sum())

        feasible = bool(np.all(rates >= sc.min_rate_rmin))
        if feasible and np.isfinite(sc.fronthaul_max_rmax):
            weighted = self.popularity[:, None] * log_terms   # F x N_u
            per_bs = weighted @ self._assoc_onehot            # F x M
            loads = sc.bandwidth_b * (ind * per_bs.T).sum(axis=1)
            feasible = bool(np.all(loads <= sc.fronthaul_max_rmax))

        self._cache[slots] = (total, feasible)
        return self._cache[slots]


def _apply_action_tuple(slots: tuple, action: int, num_contents: int,
                        noop: int) -> tuple:
    if action == noop:
        return slots
    slot, direction = divmod(action, 2)
    out = list(slots)
    out[slot] = (out[slot] + (1 if direction == 0 else -1)) % num_contents
    return tuple(out)


def _tuple_key(slots: tuple) -> str:
    return "".join(_DIGITS[v] for v in slots)


def _run_training(env: CacheEnv, config: AgentConfig, seed: int,
                  method: str) -> TrainOutcome:
    rng = np.random.default_rng(seed)
    m, s, f = env.dims
    n_act = env.n_actions
    noop = n_act - 1
    alpha, gamma = config.learning_rate_alpha, config.discount_gamma
    shaped = config.reward_mode == "shaped"
    q: dict[str, np.ndarray] = {}
    la_map: dict[str, automata.PursuitAutomaton] = {}
    ops = OpsCounter(action_counts=np.zeros(n_act, dtype=np.int64))

    state = tuple(int(v) for v in rng.integers(0, f, size=m * s))
    key = _tuple_key(state)
    mos_s, _ = env.evaluate_tuple(state)

    best_mos, best_state = mos_s, state
    reward_curve: list[int] = []
    best_mos_curve: list[float] = []
    stable_steps = 0

    for _ in range(config.episodes):
        for _ in range(config.steps_per_episode):
            if method == "laql":
                la = la_map.get(key)
                if la is None:
                    la = la_map[key] = automata.new(n_act, config.kappa)
                action = automata.select(la, rng)
            else:  # epsilon-greedy
                if rng.random() < config.epsilon:
                    action = int(rng.integers(0, n_act))
                else:
                    values = q.get(key)
                    action = 0 if values is None else int(np.argmax(values))

            ops.action_counts[action] += 1
            nxt = _apply_action_tuple(state, action, f, noop)
            nxt_key = _tuple_key(nxt)
            mos_n, feasible_n = env.evaluate_tuple(nxt)

            if config.infeasible_penalty and not feasible_n:
                r = 1
            else:
                r = 0 if mos_n >= mos_s else 1
            reward_curve.append(r)

            if method == "laql":
                automata.update(la, action, r)
                ops.la_updates += 1

            r_q = (mos_n - mos_s) if shaped else (1 - r)
            qs = q.get(key)
            if qs is None:
                qs = q[key] = np.zeros(n_act)
            qn = q.get(nxt_key)
            if qn is None:
                qn = q[nxt_key] = np.zeros(n_act)
            qs[action] = (1 - alpha) * qs[action] + alpha * (r_q + gamma * qn.max())
            ops.q_updates += 1

            state, key, mos_s = nxt, nxt_key, mos_n
            if mos_s > best_mos:
                best_mos, best_state = mos_s, state
                stable_steps = 0
            else:
                stable_steps += 1
            best_mos_curve.append(best_mos)
            if (config.stability_window is not None
                    and stable_steps >= config.stability_window):
                break
        else:
            continue
        break

    ops.env_evaluations = env.eval_count
    best_placement = CachePlacement(
        np.array(best_state, dtype=np.int64).reshape(m, s))
    return TrainOutcome(q_table=q, automata_map=la_map,
                        best_placement=best_placement, best_sum_mos=best_mos,
                        reward_curve=reward_curve, best_mos_curve=best_mos_curve,
                        ops_counter=ops, method=method)


def train_laql(env: CacheEnv, config: AgentConfig, seed: int) -> TrainOutcome:
    """Training stage with learning-automata action selection: one pursuit
    automaton per visited state, created lazily."""
    return _run_training(env, config, seed, "laql")


def train_qlearning(env: CacheEnv, config: AgentConfig, seed: int) -> TrainOutcome:
    """Baseline training stage with epsilon-greedy action selection
    (lowest-index tie-break on the greedy argmax)."""
    return _run_training(env, config, seed, "eps_greedy_q")


def test_stage(trained: TrainOutcome, env: CacheEnv, iterations: int,
               seed: int) -> CachePlacement:
    """From a random initial placement, walk the trained policy and return
    the best placement encountered."""
    rng = np.random.default_rng(seed)
    m, s, f = env.dims
    state = env.random_placement(rng)
    key = encode_state(state, f)
    best_mos, _ = env.evaluate_key(key, state)
    best = state.copy()

    for _ in range(iterations):
        if trained.method == "laql" and key in trained.automata_map:
            action = automata.select(trained.automata_map[key], rng)
        elif key in trained.q_table:
            action = int(np.argmax(trained.q_table[key]))
        else:
            action = int(rng.integers(0, env.n_actions))
        state = apply_action(state, action, f)
        key = encode_state(state, f)
        mos_s, _ = env.evaluate_key(key, state)
        if mos_s > best_mos:
            best_mos, best = mos_s, state.copy()
    return best
