"""Experiment orchestration: key-value config parsing, seed management,
the predict-then-place pipeline per time slot, parameter sweeps, and CSV
emission for every figure analogue.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import baselines, demand, netmodel, predictor
from .agents import AgentConfig, CacheEnv, TrainOutcome, train_laql, train_qlearning
from .baselines import EnumerationTooLargeError
from .netmodel import (CachePlacement, FadingRealization, NetworkScenario,
                       QoeParams, dbm_to_watts)

ALL_METHODS = ("optimal", "laql", "eps_greedy_q", "non_cooperative", "random")


class ConfigError(ValueError):
    """Raised for unparsable or invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    # scenario (linear units derived from the dBm fields at parse time)
    num_contents: int = 10
    num_bs: int = 2
    num_users: int = 100
    cache_slots: int = 4
    bandwidth_hz: float = 20e6
    tx_power_dbm: float = 20.0
    noise_dbm: float = -95.0
    pathloss_alpha: float = 3.0
    region_side_m: float = 4000.0
    fronthaul_max_bps: float = float("inf")
    min_rate_bps: float = 0.0
    fading_mode: str = "expectation"         # expectation | rayleigh
    zipf_exponent: float = 0.8
    # QoE
    rtt_s: float = 0.1
    page_size_bits: float = 1e6
    mss_bits: float = 11680.0
    c1: float = 1.120
    c2: float = 4.6746
    # agent
    alpha: float = 0.75
    gamma: float = 0.6
    epsilon: float = 0.1
    kappa: int = 10
    episodes: int = 10
    steps_per_episode: int = 1000
    reward_mode: str = "binary"
    stability_window: int = 0                # 0 disables the early stop
    # demand / prediction
    mobility_sigma_m: float = 50.0
    popularity_jitter: float = 0.02
    history_steps: int = 40
    mobility_window: int = 12
    popularity_window: int = 5
    predict: bool = True
    predictor_epochs: int = 100
    predictor_lr: float = 0.1
    # run
    slots: int = 1
    methods: tuple = ("laql", "eps_greedy_q", "non_cooperative", "random")
    seeds: tuple = (0,)
    heatmap_resolution: int = 25
    oracle_cap: int = baselines.ENUMERATION_CAP

    def __post_init__(self):
        self.methods = tuple(self.methods)
        self.seeds = tuple(int(s) for s in self.seeds)
        for m in self.methods:
            if m not in ALL_METHODS:
                raise ConfigError(f"unknown method {m!r}; choose from {ALL_METHODS}")
        if self.fading_mode not in ("expectation", "rayleigh"):
            raise ConfigError("fading_mode must be 'expectation' or 'rayleigh'")
        if self.slots < 1 or self.num_users < 1:
            raise ConfigError("slots and num_users must be positive")

    @property
    def tx_power_w(self) -> float:
        return dbm_to_watts(self.tx_power_dbm)

    @property
    def noise_w(self) -> float:
        return dbm_to_watts(self.noise_dbm)

    def qoe(self) -> QoeParams:
        return QoeParams(rtt=self.rtt_s, fs=self.page_size_bits, mss=self.mss_bits,
                         c1=self.c1, c2=self.c2)

    def agent_config(self) -> AgentConfig:
        return AgentConfig(
            learning_rate_alpha=self.alpha, discount_gamma=self.gamma,
            epsilon=self.epsilon, kappa=self.kappa, episodes=self.episodes,
            steps_per_episode=self.steps_per_episode, reward_mode=self.reward_mode,
            stability_window=self.stability_window or None)


@dataclass
class RunRecord:
    method: str
    sweep_axis: str
    sweep_value: float
    seed: int
    slot: int
    sum_mos: float
    feasible: bool
    iterations: int
    wall_time_s: float
    outcome: TrainOutcome | None = field(default=None, repr=False)


def _coerce(raw: str):
    raw = raw.strip()
    if "," in raw:
        return tuple(_coerce(tok) for tok in raw.split(",") if tok.strip())
    low = raw.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low in ("inf", "+inf"):
        return float("inf")
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        return raw


def parse_config_text(text: str) -> dict:
    """Parse `key = value` lines; '#' starts a comment, commas make lists."""
    out = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected 'key = value'")
        key, raw = line.split("=", 1)
        out[key.strip()] = _coerce(raw)
    return out


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        values = parse_config_text(fh.read())
    names = {f.name for f in fields(ExperimentConfig)}
    unknown = set(values) - names
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    # single-element fields that may arrive as scalars
    for key in ("methods", "seeds"):
        if key in values and not isinstance(values[key], tuple):
            values[key] = (values[key],)
    try:
        return ExperimentConfig(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def bs_positions(config: ExperimentConfig) -> list[tuple[float, float]]:
    """Deterministic BS layout: evenly spaced along the region's midline."""
    side, m = config.region_side_m, config.num_bs
    return [((k + 1) * side / (m + 1), side / 2.0) for k in range(m)]


def build_scenario(config: ExperimentConfig, user_positions) -> NetworkScenario:
    return NetworkScenario(
        bs_positions=bs_positions(config),
        user_positions=[tuple(p) for p in user_positions],
        tx_power_rho=config.tx_power_w,
        pathloss_alpha=config.pathloss_alpha,
        noise_sigma2=config.noise_w,
        bandwidth_b=config.bandwidth_hz,
        cache_capacity_s=config.cache_slots,
        num_contents_f=config.num_contents,
        fronthaul_max_rmax=config.fronthaul_max_bps,
        min_rate_rmin=config.min_rate_bps,
    )


def _random_users(config: ExperimentConfig, rng) -> np.ndarray:
    """Uniform user drops, re-drawn while any user sits within 1 m of a BS."""
    bss = np.asarray(bs_positions(config))
    side = config.region_side_m
    pts = rng.uniform(0.0, side, size=(config.num_users, 2))
    for i in range(len(pts)):
        while np.min(np.hypot(*(bss - pts[i]).T)) < 1.0:
            pts[i] = rng.uniform(0.0, side, size=2)
    return pts


def _fading(config: ExperimentConfig, rng) -> FadingRealization:
    if config.fading_mode == "rayleigh":
        return FadingRealization.rayleigh(config.num_bs, config.num_users, rng)
    return FadingRealization.expectation(config.num_bs, config.num_users)


def _invert_minmax(scaled: np.ndarray, stats) -> np.ndarray:
    lo, hi = stats
    span = hi - lo
    out = lo + scaled * span
    return np.where(span == 0, lo, out)


def _forecast_positions(histories: list[np.ndarray], config: ExperimentConfig,
                        seed: int) -> np.ndarray:
    """Train one pooled mobility net over all users' windows and forecast
    each user's next position (meters)."""
    window = config.mobility_window
    all_pos = np.vstack(histories)
    stats = demand.minmax_stats(all_pos)
    inputs, targets = [], []
    for h in histories:
        ds = demand.windowize(h, window, 1, stats=stats)
        inputs.append(ds.inputs)
        targets.append(ds.targets)

    class _DS:
        pass

    ds = _DS()
    ds.inputs = np.vstack(inputs)
    ds.targets = np.vstack(targets)
    net = predictor.init([2 * window, 16, 16, 2], seed)
    predictor.train(net, ds, predictor.TrainConfig(
        learning_rate=config.predictor_lr, epochs=config.predictor_epochs,
        rng_seed=seed))

    side = config.region_side_m
    preds = []
    for h in histories:
        last = demand._scale(h[-window:], stats).ravel()
        preds.append(_invert_minmax(predictor.forward(net, last), stats))
    return np.clip(np.asarray(preds), 0.0, side)


def _forecast_popularity(series: np.ndarray, config: ExperimentConfig,
                         seed: int) -> np.ndarray:
    """Train one pooled per-content scalar net and forecast the next
    popularity vector (renormalized onto the open simplex)."""
    window = config.popularity_window
    cols = [series[:, f] for f in range(series.shape[1])]
    stats = demand.minmax_stats(series.ravel()[:, None])
    inputs, targets = [], []
    for col in cols:
        ds = demand.windowize(col, window, 1, stats=stats)
        inputs.append(ds.inputs)
        targets.append(ds.targets)

    class _DS:
        pass

    ds = _DS()
    ds.inputs = np.vstack(inputs)
    ds.targets = np.vstack(targets)
    net = predictor.init([window, 16, 16, 16, 1], seed)
    predictor.train(net, ds, predictor.TrainConfig(
        learning_rate=config.predictor_lr, epochs=config.predictor_epochs,
        rng_seed=seed))

    pred = np.array([
        _invert_minmax(predictor.forward(
            net, demand._scale(col[-window:, None], stats).ravel()), stats).item()
        for col in cols
    ])
    pred = np.clip(pred, demand.POPULARITY_FLOOR, 1.0)
    return pred / pred.sum()


def _place(method: str, env: CacheEnv, config: ExperimentConfig, seed: int):
    """Run one method against the (forecast) environment; returns
    (placement, iterations, outcome-or-None)."""
    rng = np.random.default_rng(seed + 10_000)
    if method == "optimal":
        placement, _ = baselines.optimal_exhaustive(env, cap=config.oracle_cap)
        return placement, env.eval_count, None
    if method == "laql":
        outcome = train_laql(env, config.agent_config(), seed)
        return outcome.best_placement, len(outcome.reward_curve), outcome
    if method == "eps_greedy_q":
        outcome = train_qlearning(env, config.agent_config(), seed)
        return outcome.best_placement, len(outcome.reward_curve), outcome
    if method == "non_cooperative":
        return baselines.non_cooperative(env), 0, None
    if method == "random":
        return baselines.random_placement(env, rng), 0, None
    raise ConfigError(f"unknown method {method!r}")


def run_pipeline(config: ExperimentConfig, sweep_axis: str = "none",
                 sweep_value: float = 0.0) -> list[RunRecord]:
    """Per time slot: forecast next-slot demand, let every method place
    contents against the forecast, then score against the true next slot."""
    records = []
    dropped_optimal = False
    for seed in config.seeds:
        rng = np.random.default_rng(seed)
        bounds = (0.0, 0.0, config.region_side_m, config.region_side_m)
        start = _random_users(config, rng)
        histories = []
        for i in range(config.num_users):
            traj = demand.synthetic_trajectory(
                start[i], config.history_steps, config.mobility_sigma_m, bounds, rng)
            histories.append(traj.positions())
        pop_series = demand.popularity_series(
            config.num_contents, config.history_steps + 1,
            config.popularity_jitter, rng, config.zipf_exponent).matrix()

        for slot in range(config.slots):
            # ground truth for this slot = the last history entry
            true_pos = [h[-1] for h in histories]
            true_pop = pop_series[-1]
            if config.predict:
                fc_pos = _forecast_positions(
                    [h[:-1] for h in histories], config, seed)
                fc_pop = _forecast_popularity(pop_series[:-1], config, seed)
            else:
                fc_pos, fc_pop = [h[-2] for h in histories], pop_series[-2]

            fc_scenario = build_scenario(config, _nudge_off_bs(fc_pos, config))
            true_scenario = build_scenario(config, _nudge_off_bs(true_pos, config))
            fading = _fading(config, rng)
            fc_env = CacheEnv(fc_scenario, fc_pop, config.qoe(), fading)
            true_env = CacheEnv(true_scenario, true_pop, config.qoe(), fading)

            for method in config.methods:
                t0 = time.perf_counter()
                try:
                    placement, iters, outcome = _place(method, fc_env, config, seed)
                except EnumerationTooLargeError as exc:
                    dropped_optimal = True
                    continue
                score, feasible = true_env.evaluate(placement)
                records.append(RunRecord(
                    method=method, sweep_axis=sweep_axis, sweep_value=sweep_value,
                    seed=seed, slot=slot, sum_mos=score, feasible=feasible,
                    iterations=iters, wall_time_s=time.perf_counter() - t0,
                    outcome=outcome))

            # advance the world one slot
            for i in range(config.num_users):
                nxt = demand.random_walk_step(
                    tuple(histories[i][-1]), config.mobility_sigma_m, bounds, rng)
                histories[i] = np.vstack([histories[i], nxt])
            pop_series = np.vstack([
                pop_series,
                demand.popularity_step(pop_series[-1], config.popularity_jitter, rng)])
    if dropped_optimal:
        print("note: 'optimal' skipped (state space exceeds the enumeration cap)")
    return records


def _nudge_off_bs(positions, config: ExperimentConfig) -> list[tuple[float, float]]:
    """Push any user within 1 m of a BS just outside the singular radius."""
    bss = np.asarray(bs_positions(config))
    out = []
    for p in positions:
        p = np.asarray(p, dtype=float)
        d = np.hypot(*(bss - p).T)
        if np.min(d) < 1.0:
            p = p + np.array([1.5, 0.0])
        out.append((float(p[0]), float(p[1])))
    return out


SWEEP_AXES = {
    "tx_power": ("tx_power_dbm", "dBm"),
    "num_bs": ("num_bs", "count"),
    "num_users": ("num_users", "count"),
}


def sweep(config: ExperimentConfig, axis: str, values) -> list[RunRecord]:
    """Grid evaluation re-using run_pipeline per sweep point."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; choose from {sorted(SWEEP_AXES)}")
    field_name, _ = SWEEP_AXES[axis]
    records = []
    for v in values:
        point = replace(config, **{field_name: type(getattr(config, field_name))(v)})
        records.extend(run_pipeline(point, sweep_axis=axis, sweep_value=float(v)))
    return records


def mos_heatmap(config: ExperimentConfig, placement: CachePlacement,
                popularity) -> list[tuple[float, float, float]]:
    """MOS of a probe user on a regular grid over the region, under the
    given placement and popularity."""
    side, res = config.region_side_m, config.heatmap_resolution
    cells = [((i + 0.5) * side / res, (j + 0.5) * side / res)
             for j in range(res) for i in range(res)]
    scenario = build_scenario(config, _nudge_off_bs(cells, config))
    fading = FadingRealization.expectation(config.num_bs, len(cells))
    rates = netmodel.user_rates(scenario, placement, fading, np.asarray(popularity))
    qoe = config.qoe()
    return [(x, y, netmodel.mos(float(r), qoe))
            for (x, y), r in zip(cells, rates)]


def emit_outputs(records: list[RunRecord], out_dir, config: ExperimentConfig | None = None):
    """Write runs.csv, reward_curves.csv, la_convergence.csv and
    mos_heatmap.csv; deterministic byte-for-byte given identical inputs."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    paths = {}

    paths["runs"] = os.path.join(out_dir, "runs.csv")
    with open(paths["runs"], "w", newline="") as fh:
        fh.write("method,sweep_axis,sweep_value,seed,slot,sum_mos,feasible,iterations\n")
        for r in records:
            fh.write(f"{r.method},{r.sweep_axis},{r.sweep_value!r},{r.seed},"
                     f"{r.slot},{r.sum_mos!r},{int(r.feasible)},{r.iterations}\n")

    paths["reward_curves"] = os.path.join(out_dir, "reward_curves.csv")
    with open(paths["reward_curves"], "w", newline="") as fh:
        fh.write("method,seed,slot,iteration,reward,best_sum_mos\n")
        for r in records:
            if r.outcome is None:
                continue
            for it, (rew, best) in enumerate(
                    zip(r.outcome.reward_curve, r.outcome.best_mos_curve)):
                fh.write(f"{r.method},{r.seed},{r.slot},{it},{rew},{best!r}\n")

    paths["la_convergence"] = os.path.join(out_dir, "la_convergence.csv")
    with open(paths["la_convergence"], "w", newline="") as fh:
        fh.write("method,seed,slot,state_key,action,prob,u,v\n")
        for r in records:
            if r.outcome is None or r.method != "laql":
                continue
            for key in sorted(r.outcome.automata_map):
                la = r.outcome.automata_map[key]
                for a in range(la.n_actions):
                    fh.write(f"{r.method},{r.seed},{r.slot},{key},{a},"
                             f"{float(la.probs[a])!r},{float(la.reward_count_u[a])!r},"
                             f"{float(la.select_count_v[a])!r}\n")

    paths["mos_heatmap"] = os.path.join(out_dir, "mos_heatmap.csv")
    with open(paths["mos_heatmap"], "w", newline="") as fh:
        fh.write("x_m,y_m,mos\n")
        if config is not None:
            best = _best_laql_record(records)
            if best is not None and best.outcome is not None:
                pop = demand.zipf_popularity(config.num_contents, config.zipf_exponent)
                for x, y, m in mos_heatmap(config, best.outcome.best_placement, pop):
                    fh.write(f"{x!r},{y!r},{m!r}\n")
    return paths


def _best_laql_record(records):
    laql = [r for r in records if r.method == "laql" and r.outcome is not None]
    return max(laql, key=lambda r: r.sum_mos) if laql else None
