import json
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coupled_market.dgp import simulate_market
from coupled_market.market import (
    Ar1Params,
    NoiseSpec,
    ScenarioConfig,
    ScenarioError,
    ShockSpec,
    SupplyParams,
    apply_ceiling,
    matching_efficiency,
    scenario_problems,
    validate_scenario,
)


@pytest.mark.parametrize(
    "D, S, m, expected",
    [([50], [60], 1.0, [50]), ([50], [40], 1.0, [40]), ([50], [60], 0.9, [45])],
)
def test_apply_ceiling_examples(D, S, m, expected):
    np.testing.assert_allclose(apply_ceiling(D, S, m), expected)


def test_apply_ceiling_errors():
    with pytest.raises(ValueError, match="length"):
        apply_ceiling([1, 2], [1])
    with pytest.raises(ValueError, match="matching"):
        apply_ceiling([1], [1], 0.0)
    with pytest.raises(ValueError, match="non-finite"):
        apply_ceiling([np.nan], [1])


def test_matching_efficiency_examples():
    np.testing.assert_allclose(matching_efficiency([40], [50], [40]), [1.0])
    np.testing.assert_allclose(matching_efficiency([36], [50], [40]), [0.9])
    with pytest.raises(ZeroDivisionError, match="index 0"):
        matching_efficiency([10], [0], [5])


finite = st.floats(min_value=0.01, max_value=1e4, allow_nan=False)


@given(st.lists(st.tuples(finite, finite), min_size=1, max_size=50), st.floats(0.05, 1.0))
def test_ceiling_dominance_and_round_trip(pairs, m):
    D, S = map(np.array, zip(*pairs))
    B = apply_ceiling(D, S, m)
    assert np.all(B <= np.minimum(D, S) + 1e-9)
    np.testing.assert_allclose(matching_efficiency(apply_ceiling(D, S, 1.0), D, S), 1.0, atol=1e-9)


def test_ceiling_dominance_over_random_configs():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        cfg = ScenarioConfig(
            horizon=30, train_end=20,
            demand=Ar1Params(rng.uniform(10, 100), rng.uniform(-0.95, 0.95), rng.uniform(0, 10)),
            supply=SupplyParams(rng.uniform(0, 80), rng.uniform(-1, 1), rng.uniform(0, 10)),
            shocks=(ShockSpec(int(rng.integers(1, 31)), "supply_intercept", rng.uniform(0, 50)),),
            matching_m=rng.uniform(0.1, 1.0), burn_in=5, seed=int(rng.integers(2**63)),
        )
        path = simulate_market(cfg)
        assert np.all(path.B <= np.minimum(path.D, path.S) + 1e-9)
        np.testing.assert_array_equal(path.binding, path.S < path.D)


def test_benchmark_default_is_valid(benchmark_config):
    assert validate_scenario(benchmark_config) is benchmark_config
    assert benchmark_config.shocks == (ShockSpec(151, "supply_intercept", 25.0, "supply"),)


def test_validation_reports_every_problem():
    cfg = replace(ScenarioConfig(), demand=Ar1Params(50, 1.0, 5), matching_m=0.0, train_end=300)
    with pytest.raises(ScenarioError) as err:
        validate_scenario(cfg)
    text = "\n".join(err.value.problems)
    assert "persistence not stationary" in text
    assert "matching efficiency out of range" in text
    assert "train_end" in text
    assert len(err.value.problems) == 3


def test_shock_rules():
    bad = replace(ScenarioConfig(), shocks=(
        ShockSpec(0, "supply_intercept", 1.0),
        ShockSpec(10, "demand_mean", 1.0, kind="supply"),
        ShockSpec(10, "demand_mean", 2.0),
        ShockSpec(5, "price", 1.0),
    ))
    problems = scenario_problems(bad)
    assert any("shocks[0].time" in p for p in problems)
    assert any("inconsistent" in p for p in problems)
    assert any("duplicate" in p for p in problems)
    assert any("unknown target" in p for p in problems)


anything = st.one_of(st.none(), st.booleans(), st.integers(-10**20, 10**20), st.floats(allow_nan=True),
                     st.text(max_size=5))


@given(anything, anything, anything, anything, anything, anything, anything)
def test_validation_is_total(T, te, phi, sd, m, burn, seed):
    cfg = ScenarioConfig(horizon=T, train_end=te, demand=Ar1Params(50, phi, sd), matching_m=m,
                         burn_in=burn, seed=seed, supply_noise=NoiseSpec("additive", sd))
    problems = scenario_problems(cfg)
    assert isinstance(problems, list)


def test_json_round_trip(benchmark_config):
    text = benchmark_config.to_json()
    assert ScenarioConfig.from_json(text) == benchmark_config
    data = json.loads(text)
    assert set(data) == {"horizon", "train_end", "demand", "supply", "shocks", "matching_m",
                         "supply_noise", "burn_in", "seed"}
    assert set(data["demand"]) == {"mean", "persistence", "sd"}
    assert set(data["shocks"][0]) == {"time", "target", "new_value", "kind"}


def test_json_strict_schema(benchmark_config):
    data = benchmark_config.to_dict()
    data["extra"] = 1
    data["supply"]["elasticity"] = 2
    del data["demand"]["sd"]
    with pytest.raises(ScenarioError) as err:
        ScenarioConfig.from_dict(data)
    assert set(err.value.problems) == {"extra: unknown field", "supply.elasticity: unknown field",
                                       "demand.sd: missing field"}


def test_noise_parse():
    assert NoiseSpec.parse("additive:2") == NoiseSpec("additive", 2.0)
    assert NoiseSpec.parse("none") == NoiseSpec()
    with pytest.raises(ScenarioError):
        NoiseSpec.parse("gamma:1")
