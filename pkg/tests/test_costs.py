import numpy as np
import pytest

from hiergrad import (
    ContractError,
    DriftSpec,
    ScenarioSpec,
    build_scenario,
    power_iteration,
)

from conftest import hand_scenario, single_block_set


def naive_cost(scenario, t, x):
    """Independent elementwise evaluation of the coupled quadratic."""
    blocks = scenario.feasible.split(x)
    m = scenario.target_dim
    resid = [0.0] * m
    for c in range(scenario.num_workers):
        d = scenario.data(t, c)
        for i in range(m):
            acc = 0.0
            for j in range(d.a.shape[1]):
                acc += d.a[i, j] * blocks[c][j]
            resid[i] += acc - d.b[i]
    total = sum(r * r for r in resid) / 2.0
    total += scenario.mu / 2.0 * sum(float(v) ** 2 for v in np.asarray(x))
    return total


def test_cost_single_worker_hand_value():
    sc = hand_scenario([np.array([[1.0]])], [[np.array([0.0])]], mu=1.0,
                       feasible=single_block_set("box", 1, 10.0))
    assert sc.cost(1, np.array([2.0])) == pytest.approx(4.0, rel=1e-12)


def test_cost_zero_point_of_homogeneous_quadratic():
    sc = hand_scenario([np.array([[1.0], [0.5]])], [[np.zeros(2)]], mu=1.0,
                       feasible=single_block_set("box", 1, 10.0))
    assert sc.cost(1, np.array([0.0])) == 0.0


def test_cost_two_worker_value_matches_naive_oracle():
    from hiergrad.geometry import Box, FeasibleSet

    feas = FeasibleSet((Box(-np.ones(1), np.ones(1)), Box(-np.ones(1), np.ones(1))))
    sc = hand_scenario(
        [np.array([[1.0]]), np.array([[1.0]])],
        [[np.array([0.6]), np.array([0.4])]],
        mu=0.5, feasible=feas)
    x = np.array([0.25, 0.25])
    got = sc.cost(1, x)
    # 0.5*(0.5-1)^2 + (0.5/2)*||x||^2 = 0.125 + 0.25*0.125
    assert got == pytest.approx(0.15625, rel=1e-12)
    assert got == pytest.approx(naive_cost(sc, 1, x), rel=1e-12)


def test_cost_agrees_with_naive_oracle_on_random_scenarios(drift_scenario):
    rng = np.random.default_rng(7)
    for t in (1, 17, 60):
        x = drift_scenario.feasible.sample(rng)
        assert drift_scenario.cost(t, x) == pytest.approx(naive_cost(drift_scenario, t, x), rel=1e-12)


def test_cost_slot_out_of_range(drift_scenario):
    with pytest.raises(ContractError):
        drift_scenario.cost(0, np.zeros(drift_scenario.dim))
    with pytest.raises(ContractError):
        drift_scenario.cost(61, np.zeros(drift_scenario.dim))


def test_local_gradient_single_worker_hand_value():
    sc = hand_scenario([np.array([[1.0]])], [[np.array([1.0])]], mu=1.0,
                       feasible=single_block_set("box", 1, 10.0))
    g = sc.local_gradient(1, 0, np.array([0.0]), np.zeros(1))
    assert np.allclose(g, [-1.0])


def test_local_gradient_matches_finite_differences(drift_scenario):
    rng = np.random.default_rng(11)
    sc = drift_scenario
    t = 9
    x = sc.feasible.sample(rng)
    blocks = sc.feasible.split(x)
    h = 1e-6
    for c in range(sc.num_workers):
        ginfo = sc.global_info(t, c, {l: blocks[l] for l in range(sc.num_workers) if l != c})
        grad = sc.local_gradient(t, c, blocks[c], ginfo)
        for j in range(blocks[c].shape[0]):
            bump = x.copy()
            k = sc.feasible.offsets[c] + j
            bump[k] += h
            down = x.copy()
            down[k] -= h
            fd = (sc.cost(t, bump) - sc.cost(t, down)) / (2 * h)
            assert grad[j] == pytest.approx(fd, abs=1e-5)


def test_partial_gradients_vanish_at_unconstrained_optimum(drift_scenario):
    sc = drift_scenario
    t = 25
    x_star, _ = sc.optimum(t)
    assert sc.optimum_is_interior(t)
    blocks = sc.feasible.split(x_star)
    for c in range(sc.num_workers):
        ginfo = sc.global_info(t, c, {l: blocks[l] for l in range(sc.num_workers) if l != c})
        assert np.linalg.norm(sc.local_gradient(t, c, blocks[c], ginfo)) <= 1e-8


def test_global_info_empty_for_single_worker():
    sc = hand_scenario([np.array([[1.0]])], [[np.array([0.3])]], mu=1.0,
                       feasible=single_block_set("box", 1, 1.0))
    assert np.array_equal(sc.global_info(1, 0, {}), np.zeros(1))


def test_global_info_hand_value():
    from hiergrad.geometry import Box, FeasibleSet

    feas = FeasibleSet((Box(-np.ones(1), np.ones(1)), Box(-np.ones(1), np.ones(1))))
    sc = hand_scenario(
        [np.array([[1.0]]), np.array([[2.0]])],
        [[np.array([0.1]), np.array([0.3])]],
        mu=1.0, feasible=feas)
    got = sc.global_info(1, 0, {1: np.array([0.5])})
    assert np.allclose(got, [0.7])  # 2*0.5 - 0.3


def test_global_info_membership_errors(drift_scenario):
    with pytest.raises(ContractError):
        drift_scenario.global_info(1, 0, {})
    with pytest.raises(ContractError):
        drift_scenario.global_info(1, 0, {0: np.zeros(3), 1: np.zeros(3)})


def test_concatenated_partials_match_full_gradient(drift_scenario):
    rng = np.random.default_rng(13)
    sc = drift_scenario
    for t in (2, 30):
        x = sc.feasible.sample(rng)
        blocks = sc.feasible.split(x)
        parts = []
        for c in range(sc.num_workers):
            ginfo = sc.global_info(t, c, {l: blocks[l] for l in range(sc.num_workers) if l != c})
            parts.append(sc.local_gradient(t, c, blocks[c], ginfo))
        full = sc.full_gradient(t, x)
        assert np.allclose(np.concatenate(parts), full, rtol=1e-12, atol=1e-12)


def test_optimum_static_scalar_at_origin():
    sc = hand_scenario([np.array([[1.0]])], [[np.array([0.0])]], mu=1.0,
                       feasible=single_block_set("box", 1, 1.0))
    x_star, f_star = sc.optimum(1)
    assert np.allclose(x_star, [0.0]) and f_star == pytest.approx(0.0, abs=1e-15)


def test_optimum_normal_equations_hand_value():
    sc = hand_scenario([np.array([[1.0]])], [[np.array([1.0])]], mu=1.0,
                       feasible=single_block_set("box", 1, 10.0))
    x_star, f_star = sc.optimum(1)
    assert np.allclose(x_star, [0.5])
    assert f_star == pytest.approx(0.25, rel=1e-12)


def test_iterative_optimum_matches_closed_form():
    for seed in range(20):
        spec = ScenarioSpec(
            workers=2, block_dims=(3, 3), target_dim=4, horizon=1, mu=1.0,
            drift=DriftSpec("static"), a_max=0.8, seed=seed,
            feasible_kind="ball", feasible_size=10.0)
        sc = build_scenario(spec)
        x_c, _ = sc.optimum(1)
        x_i, _ = sc.optimum(1, force_iterative=True)
        assert np.linalg.norm(x_c - x_i) <= 1e-8


def test_boundary_optimum_is_feasible_and_projected():
    # shrink the set until the unconstrained optimum is infeasible
    sc = hand_scenario([np.array([[1.0]])], [[np.array([5.0])]], mu=0.1,
                       feasible=single_block_set("box", 1, 1.0))
    x_star, _ = sc.optimum(1)
    assert np.allclose(x_star, [1.0], atol=1e-9)
    assert not sc.optimum_is_interior(1)


def test_projected_solver_iteration_cap_reports_diagnostics():
    from hiergrad import ConvergenceError

    sc = hand_scenario([np.array([[1.0]])], [[np.array([5.0])]], mu=0.1,
                       feasible=single_block_set("box", 1, 1.0))
    q, b = sc.coupling(1)
    with pytest.raises(ConvergenceError) as exc:
        sc._projected_solve(1, q, b, tol=-1.0, max_iter=3)  # unattainable tolerance
    assert exc.value.details["slot"] == 1
    assert exc.value.details["iterations"] == 3


def test_strong_convexity_and_smoothness_certificates(drift_scenario):
    sc = drift_scenario
    consts = sc.constants()
    rng = np.random.default_rng(17)
    for _ in range(60):
        t = int(rng.integers(1, sc.horizon + 1))
        x, y = sc.feasible.sample(rng), sc.feasible.sample(rng)
        fx, fy = sc.cost(t, x), sc.cost(t, y)
        gx = sc.full_gradient(t, x)
        gap = fy - fx - float(gx @ (y - x))
        dist2 = float(np.sum((y - x) ** 2))
        assert gap >= sc.mu / 2.0 * dist2 - 1e-9
        assert gap <= consts.smoothness / 2.0 * dist2 + 1e-9


def test_gradient_bound_certificate(drift_scenario):
    sc = drift_scenario
    d = sc.constants().grad_bound
    rng = np.random.default_rng(19)
    xs = sc.feasible.sample_many(rng, 10_000)
    ts = rng.integers(1, sc.horizon + 1, size=40)
    for t in ts:
        q, b = sc.coupling(int(t))
        grads = xs @ (q.T @ q).T - (q.T @ b) + sc.mu * xs
        assert np.linalg.norm(grads, axis=1).max() <= d + 1e-9


def test_interior_optimum_gradient_vanishes(drift_scenario):
    sc = drift_scenario
    for t in (1, 33, 60):
        if sc.optimum_is_interior(t):
            x_star, _ = sc.optimum(t)
            assert np.linalg.norm(sc.full_gradient(t, x_star)) <= 1e-8


def test_power_iteration_matches_dense_eigensolver():
    rng = np.random.default_rng(23)
    for _ in range(25):
        n = int(rng.integers(2, 9))
        m = rng.normal(size=(n, n))
        mat = m.T @ m
        lam, vec, resid = power_iteration(mat, seed=int(rng.integers(0, 1000)))
        top = float(np.linalg.eigvalsh(mat)[-1])
        assert lam <= top + 1e-12
        assert top <= lam + resid + 1e-9 * max(top, 1.0)
        assert abs(lam - top) <= 1e-8 * max(top, 1.0)


def test_scenario_json_roundtrip_regenerates_identical_data():
    spec = ScenarioSpec(
        workers=2, block_dims=(2, 3), target_dim=3, horizon=12, mu=0.7,
        drift=DriftSpec("decaying-walk", 0.4, 0.3), a_max=0.9, b_scale=1.2,
        seed=21, feasible_kind="ball", feasible_size=4.0)
    clone = ScenarioSpec.from_json(spec.to_json())
    assert clone == spec
    a, b = build_scenario(spec), build_scenario(clone)
    for t in (1, 6, 12):
        for c in range(2):
            assert np.array_equal(a.data(t, c).a, b.data(t, c).a)
            assert np.array_equal(a.data(t, c).b, b.data(t, c).b)


def test_drift_kinds():
    base = dict(workers=1, block_dims=(2,), target_dim=3, horizon=10, mu=1.0,
                a_max=0.5, seed=2, feasible_kind="box", feasible_size=5.0)
    static = build_scenario(ScenarioSpec(drift=DriftSpec("static"), **base))
    for t in range(2, 11):
        assert np.array_equal(static.data(t, 0).b, static.data(1, 0).b)
    decay = build_scenario(ScenarioSpec(drift=DriftSpec("decaying-walk", 0.5, 0.6), **base))
    for t in range(2, 11):
        step = np.linalg.norm(decay.data(t, 0).b - decay.data(t - 1, 0).b)
        assert step == pytest.approx(0.5 * t ** -0.6, rel=1e-12)
    walk = build_scenario(ScenarioSpec(drift=DriftSpec("random-walk", 0.2), **base))
    for t in range(2, 11):
        step = np.linalg.norm(walk.data(t, 0).b - walk.data(t - 1, 0).b)
        assert step == pytest.approx(0.2, rel=1e-12)


def test_spectral_norm_of_couplings_bounded(drift_scenario):
    for c in range(drift_scenario.num_workers):
        assert np.linalg.norm(drift_scenario.data(1, c).a, 2) <= drift_scenario.spec.a_max + 1e-12


def test_data_abs_max_covers_all_entries(drift_scenario):
    peak = drift_scenario.data_abs_max()
    for t in (1, 30, 60):
        for c in range(drift_scenario.num_workers):
            d = drift_scenario.data(t, c)
            assert np.max(np.abs(d.a)) <= peak and np.max(np.abs(d.b)) <= peak
