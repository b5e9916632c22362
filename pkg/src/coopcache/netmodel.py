"""Physical-layer and QoE model: SINR under cooperative transmission,
per-user rate, TCP page-delay, MOS, and the feasibility checks of the
placement optimization problem.

All functions here are pure; nothing holds mutable state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class ScenarioError(ValueError):
    """Raised for invalid network scenarios or placements."""


@dataclass
class NetworkScenario:
    """Geometry and radio parameters of one cooperative caching cell.

    Powers are linear watts, distances meters, rates bits/s.
    """

    bs_positions: list[tuple[float, float]]
    user_positions: list[tuple[float, float]]
    tx_power_rho: float
    pathloss_alpha: float
    noise_sigma2: float
    bandwidth_b: float
    cache_capacity_s: int
    num_contents_f: int
    fronthaul_max_rmax: float = math.inf
    min_rate_rmin: float = 0.0

    def __post_init__(self):
        if self.pathloss_alpha < 2:
            raise ScenarioError("pathloss exponent must be >= 2")
        if self.tx_power_rho <= 0 or self.noise_sigma2 <= 0:
            raise ScenarioError("powers must be positive")
        if self.bandwidth_b <= 0:
            raise ScenarioError("bandwidth must be positive")
        if not self.bs_positions or not self.user_positions:
            raise ScenarioError("need at least one BS and one user")
        if self.num_contents_f < 1 or self.cache_capacity_s < 1:
            raise ScenarioError("need at least one content and one cache slot")
        # total cache capacity must not cover the whole library (unit content size)
        if self.num_bs * self.cache_capacity_s > self.num_contents_f:
            raise ScenarioError(
                "total cache capacity M*S=%d exceeds library size F=%d"
                % (self.num_bs * self.cache_capacity_s, self.num_contents_f)
            )
        d = self.distances()
        if np.any(d < 1.0):
            raise ScenarioError(
                "a user sits closer than 1 m to a BS; pathloss is singular there"
            )

    @property
    def num_bs(self) -> int:
        return len(self.bs_positions)

    @property
    def num_users(self) -> int:
        return len(self.user_positions)

    def distances(self) -> np.ndarray:
        """M x N_u matrix of BS-user Euclidean distances (computed once)."""
        cached = getattr(self, "_distances", None)
        if cached is None:
            bs = np.asarray(self.bs_positions, dtype=float)
            us = np.asarray(self.user_positions, dtype=float)
            cached = np.hypot(bs[:, 0:1] - us[None, :, 0], bs[:, 1:2] - us[None, :, 1])
            object.__setattr__(self, "_distances", cached)
        return cached

    def nearest_bs(self) -> np.ndarray:
        """Index of the closest BS per user (ties -> lowest BS index)."""
        return np.argmin(self.distances(), axis=0)


@dataclass
class CachePlacement:
    """M x S matrix of cached content indices, stored 0-based."""

    entries: np.ndarray

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=np.int64)
        if self.entries.ndim != 2:
            raise ScenarioError("placement must be a 2-D matrix")

    def validate(self, num_contents: int) -> None:
        if np.any(self.entries < 0) or np.any(self.entries >= num_contents):
            raise ScenarioError("placement contains out-of-range content index")

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def copy(self) -> "CachePlacement":
        return CachePlacement(self.entries.copy())

    def __eq__(self, other) -> bool:
        return isinstance(other, CachePlacement) and np.array_equal(
            self.entries, other.entries
        )


@dataclass
class FadingRealization:
    """M x N_u matrix of |h| magnitudes; all ones in expectation mode."""

    magnitudes: np.ndarray

    def __post_init__(self):
        self.magnitudes = np.asarray(self.magnitudes, dtype=float)
        if np.any(self.magnitudes < 0):
            raise ScenarioError("fading magnitudes must be non-negative")

    @classmethod
    def expectation(cls, num_bs: int, num_users: int) -> "FadingRealization":
        return cls(np.ones((num_bs, num_users)))

    @classmethod
    def rayleigh(cls, num_bs: int, num_users: int, rng) -> "FadingRealization":
        return cls(rng.rayleigh(scale=1.0, size=(num_bs, num_users)))


@dataclass
class QoeParams:
    """Constants of the web-browsing delay/MOS model."""

    rtt: float = 0.1            # s
    fs: float = 1e6             # bits, page size
    mss: float = 11680.0        # bits (1460 bytes)
    c1: float = 1.120
    c2: float = 4.6746
    mos_min: float = 1.0
    mos_max: float = 5.0
    delay_floor: float = 1e-3   # s, keeps ln() defined

    def __post_init__(self):
        if min(self.rtt, self.fs, self.mss, self.delay_floor) <= 0:
            raise ScenarioError("rtt, fs, mss, delay_floor must be positive")
        if self.c1 <= 0 or self.mos_min >= self.mos_max:
            raise ScenarioError("bad QoE constants")


@dataclass
class DelayBreakdown:
    l1: float
    l2: float
    l_effective: float
    delay: float


@dataclass
class FeasibilityReport:
    per_bs_fronthaul_load: np.ndarray
    per_user_rate: np.ndarray
    fronthaul_ok: np.ndarray
    min_rate_ok: np.ndarray
    feasible: bool = field(init=False)

    def __post_init__(self):
        self.feasible = bool(np.all(self.fronthaul_ok) and np.all(self.min_rate_ok))


def indicator_matrix(placement: CachePlacement, num_contents: int) -> np.ndarray:
    """M x F binary matrix: entry (m, f) = 1 iff BS m caches content f.

    Duplicate slots within one row collapse to a single 1.
    """
    placement.validate(num_contents)
    m = placement.shape[0]
    ind = np.zeros((m, num_contents), dtype=np.int64)
    rows = np.repeat(np.arange(m), placement.shape[1])
    ind[rows, placement.entries.ravel()] = 1
    return ind


def _amplitude_and_power(scenario: NetworkScenario, fading: FadingRealization):
    """Per-(BS, user) signal amplitude sqrt(rho)*|h|*r^(-a/2) and its power."""
    d = scenario.distances()
    amp = math.sqrt(scenario.tx_power_rho) * fading.magnitudes * d ** (
        -scenario.pathloss_alpha / 2.0
    )
    return amp, amp**2


def sinr_matrix(
    scenario: NetworkScenario,
    placement: CachePlacement,
    fading: FadingRealization,
) -> np.ndarray:
    """F x N_u matrix of cooperative SINR per (content, user).

    The numerator coherently combines amplitudes over all BSs caching the
    content; the interference sums powers of the remaining BSs. Rows of
    contents cached nowhere are exactly 0.
    """
    ind = indicator_matrix(placement, scenario.num_contents_f)
    amp, pwr = _amplitude_and_power(scenario, fading)
    num = (ind.astype(float).T @ amp) ** 2              # F x N_u
    interf = (1.0 - ind.astype(float)).T @ pwr          # F x N_u
    s = num / (interf + scenario.noise_sigma2)
    s[ind.sum(axis=0) == 0, :] = 0.0
    return s


def sinr(
    scenario: NetworkScenario,
    placement: CachePlacement,
    fading: FadingRealization,
    user_i: int,
    content_f: int,
) -> float:
    """Cooperative SINR of user_i requesting content_f; 0 if uncached."""
    return float(sinr_matrix(scenario, placement, fading)[content_f, user_i])


def _validate_popularity(popularity: np.ndarray, num_contents: int) -> np.ndarray:
    p = np.asarray(popularity, dtype=float)
    if p.shape != (num_contents,):
        raise ScenarioError("popularity vector has wrong length")
    # open interval except the degenerate single-content library, where p = [1]
    if np.any(p <= 0) or np.any(p > 1) or abs(p.sum() - 1.0) > 1e-9:
        raise ScenarioError("popularity entries must lie in (0,1] and sum to 1")
    return p


def user_rates(
    scenario: NetworkScenario,
    placement: CachePlacement,
    fading: FadingRealization,
    popularity: np.ndarray,
) -> np.ndarray:
    """Achievable sum rate per user, bits/s.

    R_i = B * sum_f p_f * |M_f| * log2(1 + SINR_{f,i}); each BS caching f
    contributes one cooperative-SINR log term.
    """
    p = _validate_popularity(popularity, scenario.num_contents_f)
    ind = indicator_matrix(placement, scenario.num_contents_f)
    s = sinr_matrix(scenario, placement, fading)
    counts = ind.sum(axis=0).astype(float)              # |M_f|
    per_content = np.log2(1.0 + s) * counts[:, None]    # F x N_u
    return scenario.bandwidth_b * (p @ per_content)


def user_rate(
    scenario: NetworkScenario,
    placement: CachePlacement,
    fading: FadingRealization,
    popularity: np.ndarray,
    user_i: int,
) -> float:
    return float(user_rates(scenario, placement, fading, popularity)[user_i])


def page_delay(rate: float, qoe: QoeParams) -> DelayBreakdown:
    """TCP slow-start page-delivery delay for one user at a given rate."""
    if rate <= 0:
        raise ScenarioError("rate must be positive; user is unreachable")
    l1 = math.log2(rate * qoe.rtt / qoe.mss + 1.0) - 1.0
    l2 = math.log2(qoe.fs / (2.0 * qoe.mss) + 1.0) - 1.0
    l_eff = max(0.0, min(l1, l2))
    delay = (
        3.0 * qoe.rtt
        + qoe.fs / rate
        + l_eff * (qoe.mss / rate + qoe.rtt)
        - 2.0 * qoe.mss * (2.0**l_eff - 1.0) / rate
    )
    return DelayBreakdown(l1=l1, l2=l2, l_effective=l_eff, delay=max(qoe.delay_floor, delay))


def mos(rate: float, qoe: QoeParams) -> float:
    """Mean opinion score in [mos_min, mos_max]; rate 0 scores the floor."""
    if rate <= 0:
        return qoe.mos_min
    d = page_delay(rate, qoe).delay
    raw = -qoe.c1 * math.log(d) + qoe.c2
    return min(qoe.mos_max, max(qoe.mos_min, raw))


def mos_vector(rates: np.ndarray, qoe: QoeParams) -> np.ndarray:
    """Vectorized MOS over a rate array; non-positive rates score mos_min."""
    rates = np.asarray(rates, dtype=float)
    out = np.full(rates.shape, qoe.mos_min)
    pos = rates > 0
    if np.any(pos):
        r = rates[pos]
        l1 = np.log2(r * qoe.rtt / qoe.mss + 1.0) - 1.0
        l2 = math.log2(qoe.fs / (2.0 * qoe.mss) + 1.0) - 1.0
        l_eff = np.clip(np.minimum(l1, l2), 0.0, None)
        delay = (
            3.0 * qoe.rtt
            + qoe.fs / r
            + l_eff * (qoe.mss / r + qoe.rtt)
            - 2.0 * qoe.mss * (2.0**l_eff - 1.0) / r
        )
        delay = np.maximum(qoe.delay_floor, delay)
        out[pos] = np.clip(-qoe.c1 * np.log(delay) + qoe.c2, qoe.mos_min, qoe.mos_max)
    return out


def sum_mos(
    scenario: NetworkScenario,
    placement: CachePlacement,
    fading: FadingRealization,
    popularity: np.ndarray,
    qoe: QoeParams,
) -> float:
    """The optimization objective: total MOS over all users."""
    rates = user_rates(scenario, placement, fading, popularity)
    return float(mos_vector(rates, qoe).sum())


def check_constraints(
    scenario: NetworkScenario,
    placement: CachePlacement,
    fading: FadingRealization,
    popularity: np.ndarray,
) -> FeasibilityReport:
    """Fronthaul-load and minimum-rate feasibility of a placement.

    Users associate to their nearest BS; BS m's fronthaul load counts the
    popularity-weighted log terms of its own cached contents over its
    associated users.
    """
    p = _validate_popularity(popularity, scenario.num_contents_f)
    ind = indicator_matrix(placement, scenario.num_contents_f).astype(float)
    s = sinr_matrix(scenario, placement, fading)
    log_terms = np.log2(1.0 + s)                         # F x N_u
    weighted = p[:, None] * log_terms                    # F x N_u
    assoc = scenario.nearest_bs()

    loads = np.zeros(scenario.num_bs)
    for m in range(scenario.num_bs):
        users_m = assoc == m
        if np.any(users_m):
            loads[m] = scenario.bandwidth_b * float(
                (ind[m] @ weighted[:, users_m]).sum()
            )
    rates = user_rates(scenario, placement, fading, popularity)
    return FeasibilityReport(
        per_bs_fronthaul_load=loads,
        per_user_rate=rates,
        fronthaul_ok=loads <= scenario.fronthaul_max_rmax,
        min_rate_ok=rates >= scenario.min_rate_rmin,
    )


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0
