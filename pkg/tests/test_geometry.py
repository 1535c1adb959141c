import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hiergrad import ContractError, FeasibleSet, gradient_step
from hiergrad.geometry import Ball, Box

from conftest import single_block_set


def test_ball_projection_scales_to_boundary():
    ball = Ball(np.zeros(2), 1.0)
    got = ball.project(np.array([3.0, 4.0]))
    assert np.allclose(got, [0.6, 0.8])
    # grid-search oracle: no boundary point is closer than the projection
    theta = np.linspace(0, 2 * np.pi, 4000, endpoint=False)
    boundary = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    dists = np.linalg.norm(boundary - np.array([3.0, 4.0]), axis=1)
    assert np.linalg.norm(got - np.array([3.0, 4.0])) <= dists.min() + 1e-6


def test_projection_of_feasible_point_is_identity():
    ball = Ball(np.array([1.0, -1.0]), 2.0)
    p = np.array([1.5, -1.2])
    assert np.array_equal(ball.project(p), p)
    box = Box(np.array([-1.0, -1.0]), np.array([1.0, 1.0]))
    q = np.array([0.3, -0.9])
    assert np.array_equal(box.project(q), q)


def test_box_projection_clips_per_coordinate():
    box = Box(np.array([-1.0, -1.0]), np.array([1.0, 1.0]))
    point = np.array([2.0, -0.5])
    got = box.project(point)
    assert np.allclose(got, np.clip(point, -1.0, 1.0))
    assert np.allclose(got, [1.0, -0.5])


def test_projection_optimality_condition():
    rng = np.random.default_rng(0)
    sets = [Ball(rng.normal(size=3), 1.5), Box(-np.ones(3), 2 * np.ones(3))]
    for s in sets:
        for _ in range(200):
            p = rng.normal(scale=3.0, size=3)
            z = s.project(p)
            x = s.sample(rng)
            inner = float((p - z) @ (x - z))
            assert inner <= 1e-9 * (1.0 + np.linalg.norm(p) * np.linalg.norm(x))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_projection_nonexpansive(seed):
    rng = np.random.default_rng(seed)
    s = Ball(rng.normal(size=4), float(rng.uniform(0.5, 3.0))) if seed % 2 else \
        Box(-rng.uniform(0.5, 2, size=4), rng.uniform(0.5, 2, size=4))
    p, q = rng.normal(scale=4, size=4), rng.normal(scale=4, size=4)
    assert np.linalg.norm(s.project(p) - s.project(q)) <= np.linalg.norm(p - q) + 1e-12


def test_gradient_step_clips_to_interval():
    feas = single_block_set("box", 1, 1.0)  # X = [-1, 1]
    # f(x) = (x-3)^2 at y=0: exact gradient -6, alpha=2 -> clip(0 + 3) = 1
    got = gradient_step(feas, 0, np.array([0.0]), np.array([-6.0]), 2.0)
    assert np.allclose(got, [1.0])


def test_gradient_step_zero_gradient_fixed_point():
    feas = single_block_set("ball", 3, 2.0)
    y = np.array([0.5, -0.5, 1.0])
    assert np.allclose(gradient_step(feas, 0, y, np.zeros(3), 1.7), y)


def test_gradient_step_reaches_quadratic_minimizer_in_one_step():
    feas = single_block_set("box", 1, 1.0)
    # f(x) = (x-0.5)^2, L = 2; exact gradient at 0 is -1; alpha = L lands on 0.5
    got = gradient_step(feas, 0, np.array([0.0]), np.array([-1.0]), 2.0)
    assert np.allclose(got, [0.5])


def test_gradient_step_parameter_and_dimension_errors():
    feas = single_block_set("ball", 2, 1.0)
    with pytest.raises(ValueError):
        gradient_step(feas, 0, np.zeros(2), np.ones(2), 0.0)
    with pytest.raises(ContractError):
        gradient_step(feas, 0, np.zeros(2), np.ones(3), 1.0)


def test_exact_step_satisfies_contraction_for_all_gamma():
    # one exact projected step on a quadratic with alpha >= L contracts the
    # squared distance to the constrained minimizer by eta
    from hiergrad.bounds import contraction_eta, random_quadratic_instance

    rng = np.random.default_rng(42)
    for _ in range(100):
        mu = rng.uniform(0.5, 2.0)
        smooth = mu * rng.uniform(1.0, 8.0)
        alpha = smooth * rng.uniform(1.0, 1.5)
        inst = random_quadratic_instance(rng, 3, mu, smooth)
        feas = FeasibleSet((inst.feasible,))
        y = inst.feasible.project(rng.normal(scale=2.0, size=3))
        z = gradient_step(feas, 0, y, inst.gradient(y), alpha)
        x_star = inst.minimizer()
        for gamma in rng.uniform(1e-3, 2 * mu - 1e-3, size=3):
            eta = contraction_eta(alpha, mu, float(gamma))
            lhs = np.sum((z - x_star) ** 2)
            rhs = eta * np.sum((y - x_star) ** 2)
            assert lhs <= rhs + 1e-9


def test_product_diameter_and_norm_sup_dominate_samples():
    rng = np.random.default_rng(1)
    feas = FeasibleSet((Ball(np.array([1.0, 0.0]), 1.5), Box(-np.ones(3), 2 * np.ones(3))))
    pts = feas.sample_many(rng, 2000)
    pair_d = np.linalg.norm(pts[:1000] - pts[1000:], axis=1)
    assert pair_d.max() <= feas.diameter + 1e-12
    assert np.linalg.norm(pts, axis=1).max() <= feas.norm_sup + 1e-12


def test_split_concat_roundtrip_and_errors():
    feas = FeasibleSet((Ball(np.zeros(2), 1.0), Box(-np.ones(3), np.ones(3))))
    x = np.arange(5.0)
    parts = feas.split(x)
    assert [p.shape[0] for p in parts] == [2, 3]
    assert np.array_equal(feas.concat(parts), x)
    with pytest.raises(ContractError):
        feas.split(np.zeros(4))
    with pytest.raises(ContractError):
        feas.concat([np.zeros(2)])
    with pytest.raises(ContractError):
        feas.project_block(5, np.zeros(2))


def test_set_constructor_validation():
    with pytest.raises(ValueError):
        Ball(np.zeros(2), 0.0)
    with pytest.raises(ValueError):
        Box(np.ones(2), -np.ones(2))
