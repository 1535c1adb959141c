import numpy as np
import pytest

from hiergrad import (
    DelayConfig,
    EngineParams,
    GaussianNoise,
    dynamic_regret,
    run_baseline,
)
from hiergrad.baselines import baseline_params


def _base(scenario, **kw):
    defaults = dict(alpha=scenario.constants().smoothness, master_steps=2, worker_steps=2,
                    init_seed=1)
    defaults.update(kw)
    return EngineParams(**defaults)


def test_baseline_parameter_mappings(drift_scenario):
    base = _base(drift_scenario)
    assert baseline_params("master-only", base).master_steps == 4
    assert baseline_params("master-only", base).worker_steps == 0
    assert baseline_params("worker-only", base).master_steps == 0
    assert baseline_params("worker-only", base).worker_steps == 4
    single = baseline_params("single-step", base)
    assert (single.master_steps, single.worker_steps) == (0, 1)
    ogd = baseline_params("delayed-centralized-ogd", base)
    assert (ogd.master_steps, ogd.worker_steps) == (1, 0)
    assert ogd.compression.name == "identity"
    with pytest.raises(ValueError):
        baseline_params("mirror-descent", base)


def test_master_only_plateaus_on_static(static_scenario):
    trace = run_baseline("master-only", static_scenario, DelayConfig(1, 0, 0),
                         _base(static_scenario))
    assert float(np.sum(trace.regret_per_slot[-100:])) < 1e-8
    assert trace.meta["baseline"] == "master-only"


def test_worker_only_equals_master_only_on_static_single_worker():
    from hiergrad import DriftSpec, ScenarioSpec, build_scenario

    spec = ScenarioSpec(workers=1, block_dims=(3,), target_dim=4, horizon=50, mu=1.0,
                        drift=DriftSpec("static"), a_max=0.7, seed=13,
                        feasible_kind="ball", feasible_size=4.0)
    sc = build_scenario(spec)
    base = _base(sc)
    t_master = run_baseline("master-only", sc, DelayConfig(1, 0, 0), base)
    t_worker = run_baseline("worker-only", sc, DelayConfig(1, 0, 0), base)
    # static data makes the stale master gradient identical to the fresh one
    assert np.array_equal(t_master.executed, t_worker.executed)


def test_worker_only_diverges_from_master_only_under_drift(drift_scenario):
    base = _base(drift_scenario)
    t_master = run_baseline("master-only", drift_scenario, DelayConfig(1, 0, 0), base)
    t_worker = run_baseline("worker-only", drift_scenario, DelayConfig(1, 0, 0), base)
    assert not np.array_equal(t_master.executed, t_worker.executed)


def test_single_step_loses_to_bigger_budget(drift_scenario):
    from hiergrad import run_episode

    base = _base(drift_scenario)
    t_small = run_baseline("single-step", drift_scenario, DelayConfig(1, 0, 0), base)
    t_big = run_episode(drift_scenario, base, DelayConfig(1, 0, 0))
    assert dynamic_regret(t_big) < dynamic_regret(t_small)


def test_ogd_baseline_ignores_lossy_compression(drift_scenario):
    noisy = _base(drift_scenario, compression=GaussianNoise(std=0.5, seed=3))
    clean = _base(drift_scenario)
    t_noisy = run_baseline("delayed-centralized-ogd", drift_scenario, DelayConfig(1, 0, 0), noisy)
    t_clean = run_baseline("delayed-centralized-ogd", drift_scenario, DelayConfig(1, 0, 0), clean)
    assert np.array_equal(t_noisy.executed, t_clean.executed)


def test_master_only_satisfies_bounds(drift_scenario):
    from hiergrad import evaluate_bounds
    from hiergrad.baselines import baseline_params

    base = _base(drift_scenario)
    delay = DelayConfig(1, 0, 0)
    trace = run_baseline("master-only", drift_scenario, delay, base)
    report = evaluate_bounds(trace, drift_scenario, baseline_params("master-only", base), delay)
    assert report.violations() == {}


def test_baseline_traces_feasible_and_deterministic(drift_scenario):
    base = _base(drift_scenario)
    for kind in ("master-only", "worker-only", "single-step", "delayed-centralized-ogd"):
        a = run_baseline(kind, drift_scenario, DelayConfig(2, 1, 0), base)
        b = run_baseline(kind, drift_scenario, DelayConfig(2, 1, 0), base)
        assert np.array_equal(a.executed, b.executed)
        for row in a.executed:
            assert drift_scenario.feasible.contains(row, tol=1e-12)
