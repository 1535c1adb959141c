import numpy as np
import pytest

from hiergrad import (
    CostScenario,
    DriftSpec,
    FeasibleSet,
    LocalData,
    ScenarioSpec,
    build_scenario,
)
from hiergrad.geometry import Ball, Box


@pytest.fixture(scope="session")
def drift_scenario():
    spec = ScenarioSpec(
        workers=2, block_dims=(3, 3), target_dim=4, horizon=60, mu=1.0,
        drift=DriftSpec("decaying-walk", 0.3, 0.5), a_max=0.8, b_scale=1.0,
        seed=3, feasible_kind="ball", feasible_size=6.0)
    return build_scenario(spec)


@pytest.fixture(scope="session")
def static_scenario():
    spec = ScenarioSpec(
        workers=2, block_dims=(3, 3), target_dim=4, horizon=160, mu=1.0,
        drift=DriftSpec("static"), a_max=0.6, b_scale=1.0,
        seed=5, feasible_kind="box", feasible_size=3.0)
    return build_scenario(spec)


def hand_scenario(mats, shares_by_slot, mu, feasible, seed=0):
    """Scenario with explicit data: mats[c] fixed, shares_by_slot[t-1][c] per slot."""
    horizon = len(shares_by_slot)
    dims = tuple(a.shape[1] for a in mats)
    spec = ScenarioSpec(
        workers=len(mats), block_dims=dims, target_dim=mats[0].shape[0],
        horizon=horizon, mu=mu, seed=seed)
    data = [
        [LocalData(mats[c], np.asarray(row[c], dtype=float)) for c in range(len(mats))]
        for row in shares_by_slot
    ]
    return CostScenario(spec, data, feasible)


def single_block_set(kind, dim, size):
    if kind == "ball":
        return FeasibleSet((Ball(np.zeros(dim), size),))
    return FeasibleSet((Box(-size * np.ones(dim), size * np.ones(dim)),))
