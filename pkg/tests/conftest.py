"""Shared fixtures: a small fixed two-BS scenario whose 256-state placement
space the exhaustive search can enumerate quickly."""

import numpy as np
import pytest

from coopcache import baselines, demand
from coopcache.agents import CacheEnv
from coopcache.netmodel import NetworkScenario

DESK_SIDE = 4000.0


def desk_scenario(num_users=12, seed=123, bandwidth=1e5):
    """Two BSs on the region midline, users dropped uniformly at random.

    The narrow bandwidth keeps per-user MOS off the 5.0 ceiling so that
    placements are actually distinguishable by the objective.
    """
    rng = np.random.default_rng(seed)
    users = rng.uniform(0.0, DESK_SIDE, size=(num_users, 2))
    return NetworkScenario(
        bs_positions=[(DESK_SIDE / 3, DESK_SIDE / 2), (2 * DESK_SIDE / 3, DESK_SIDE / 2)],
        user_positions=[tuple(u) for u in users],
        tx_power_rho=0.1,
        pathloss_alpha=3.0,
        noise_sigma2=10**-12.5,
        bandwidth_b=bandwidth,
        cache_capacity_s=2,
        num_contents_f=4,
    )


def desk_popularity():
    return demand.zipf_popularity(4, 0.8)


@pytest.fixture(scope="session")
def desk_env():
    return CacheEnv(desk_scenario(), desk_popularity())


@pytest.fixture(scope="session")
def desk_oracle(desk_env):
    """(placement, score) of the exhaustive search on the desk scenario."""
    return baselines.optimal_exhaustive(desk_env)
