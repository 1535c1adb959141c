"""Contraction constants, the one-step contraction checker, and numeric
evaluation of the regret upper bounds with their validity conditions.

One projected step with an inexact gradient on a mu-strongly convex, L-smooth
function satisfies, for any step parameter alpha >= L and any gamma in
(0, 2 mu),

    ||z - x*||^2 <= eta ||y - x*||^2 + beta ||e||^2,
    eta = (alpha - mu) / (alpha + mu - gamma),
    beta = 1 / (gamma (alpha + mu - gamma)),

where e is the gradient error. Chaining this per-step inequality across both
tiers and the delay pipeline yields two families of horizon-level regret
bounds: one linear in the path length and accumulated error, one quadratic
(valid only while the chained contraction stays strict), plus a total-delay
variant with a stricter validity condition. All evaluators are pure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .costs import CostScenario
from .engine import EngineParams
from .errors import ContractError, ConvergenceError
from .geometry import Ball, Box
from .metrics import (
    dynamic_regret,
    grad_at_optima_sq,
    gradient_error_measures,
    path_length,
    squared_path_length,
)
from .network import DelayConfig
from .trace import RunTrace


def contraction_eta(alpha: float, mu: float, gamma: float) -> float:
    _check_contraction_domain(alpha, mu, gamma)
    return (alpha - mu) / (alpha + mu - gamma)


def contraction_beta(alpha: float, mu: float, gamma: float) -> float:
    _check_contraction_domain(alpha, mu, gamma)
    return 1.0 / (gamma * (alpha + mu - gamma))


def _check_contraction_domain(alpha: float, mu: float, gamma: float):
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if not alpha >= mu:
        raise ValueError(f"alpha must be at least mu, got alpha={alpha}, mu={mu}")
    if not 0.0 < gamma < 2.0 * mu:
        raise ValueError(f"gamma must lie in (0, 2*mu), got gamma={gamma}, mu={mu}")


# -- one-step contraction checking -------------------------------------------


@dataclass(frozen=True)
class QuadraticInstance:
    """A single-block quadratic test problem with exactly known moduli.

    The Hessian's spectrum is contained in [mu, smooth] with both endpoints
    attained, so mu and smooth are the tight convexity/smoothness constants.
    """

    hessian: np.ndarray
    center: np.ndarray       # unconstrained minimizer
    mu: float
    smooth: float
    feasible: object         # Ball or Box

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return self.hessian @ (np.asarray(x, dtype=float) - self.center)

    def value(self, x: np.ndarray) -> float:
        d = np.asarray(x, dtype=float) - self.center
        return 0.5 * float(d @ self.hessian @ d)

    def minimizer(self, tol: float = 1e-13, max_iter: int = 200_000) -> np.ndarray:
        if self.feasible.contains(self.center, tol=0.0):
            return self.center.copy()
        step = 2.0 / (self.smooth + self.mu)
        x = self.feasible.project(self.center)
        for _ in range(max_iter):
            x_new = self.feasible.project(x - step * self.gradient(x))
            if np.linalg.norm(x_new - x) <= tol * max(1.0, np.linalg.norm(x_new)):
                return x_new
            x = x_new
        raise ConvergenceError("constrained quadratic minimizer did not converge", tol=tol)


def random_quadratic_instance(
    rng: np.random.Generator,
    dim: int,
    mu: float,
    smooth: float,
    center_scale: float = 2.0,
) -> QuadraticInstance:
    """Random instance with exact moduli and a feasible set that may or may
    not contain the unconstrained minimizer."""
    if not 0 < mu <= smooth:
        raise ValueError("need 0 < mu <= smooth")
    if dim >= 2:
        eigs = np.concatenate([[mu, smooth], rng.uniform(mu, smooth, size=dim - 2)])
    else:
        eigs = np.array([mu])
    basis, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    hessian = basis @ np.diag(eigs) @ basis.T
    hessian = 0.5 * (hessian + hessian.T)
    center = rng.normal(scale=center_scale, size=dim)
    if rng.uniform() < 0.5:
        feasible = Ball(rng.normal(scale=0.5, size=dim), float(rng.uniform(0.5, 3.0)))
    else:
        half = rng.uniform(0.5, 3.0, size=dim)
        mid = rng.normal(scale=0.5, size=dim)
        feasible = Box(mid - half, mid + half)
    return QuadraticInstance(hessian, center, float(mu), float(smooth), feasible)


def one_step_contraction_slack(
    inst: QuadraticInstance,
    y: np.ndarray,
    gamma: float,
    alpha: float,
    error_vec: np.ndarray,
) -> float:
    """Slack of the one-step contraction inequality at y under a perturbed
    gradient; nonnegative (up to float noise) means the inequality holds."""
    if alpha < inst.smooth:
        raise ValueError(f"alpha={alpha} is below the smoothness modulus {inst.smooth}")
    eta = contraction_eta(alpha, inst.mu, gamma)
    beta = contraction_beta(alpha, inst.mu, gamma)
    yv = np.asarray(y, dtype=float)
    e = np.asarray(error_vec, dtype=float)
    z = inst.feasible.project(yv - (inst.gradient(yv) + e) / alpha)
    x_star = inst.minimizer()
    lhs = float(np.sum((z - x_star) ** 2))
    rhs = eta * float(np.sum((yv - x_star) ** 2)) + beta * float(e @ e)
    return rhs - lhs


# -- horizon-level bound evaluators -------------------------------------------


def path_measure_bound(
    tau_eff: int, grad_bound: float, diameter: float,
    eta: float, beta: float, j_l: int, j_r: int,
    path: float, delta: float,
) -> float:
    """Regret bound linear in the path length and accumulated error."""
    root_total = np.sqrt(eta ** (j_l + j_r))
    if root_total >= 1.0:
        raise ValueError("contraction must be strict (eta < 1 with at least one step)")
    err_gain = np.sqrt(beta) / (1.0 - np.sqrt(eta))
    inner = tau_eff * diameter + tau_eff * path + err_gain * delta
    return tau_eff * grad_bound * diameter + grad_bound / (1.0 - root_total) * inner


def path_measure_bound_sharp(
    tau_eff: int, grad_bound: float, diameter: float,
    eta: float, beta: float, j_l: int, j_r: int,
    path: float, delta: float,
) -> float:
    """Tighter diagnostic variant assembled from the per-step chain before any
    coefficient relaxation."""
    root = np.sqrt(eta)
    root_total = root ** (j_l + j_r)
    root_local = root**j_l
    err_coef = (1.0 - root_total) / (1.0 - root) if root < 1.0 else float(j_l + j_r)
    inner = root_total * tau_eff * diameter + root_local * tau_eff * path \
        + err_coef * np.sqrt(beta) * delta
    return tau_eff * grad_bound * diameter + grad_bound / (1.0 - root_total) * inner


def _squared_bound(
    tau_eff, smooth, diameter, eta, beta, j_l, j_r,
    path2, delta2, grad_opt_sq, *, chain_factor, drift_coef, err_coef,
):
    contraction = chain_factor * eta ** (j_l + j_r)
    if contraction >= 1.0:
        return None, None, f"condition violated: {chain_factor}*eta^(Jl+Jr) = {contraction:.6g} >= 1"
    r_sq = diameter**2
    bracket = tau_eff * r_sq + drift_coef * tau_eff**2 * path2 \
        + err_coef * beta / (1.0 - eta) * delta2
    multiplier = tau_eff * r_sq + bracket / (1.0 - contraction)
    if grad_opt_sq > 0.0:
        xi = float(np.sqrt(grad_opt_sq / multiplier))
    else:
        xi = smooth
    value = grad_opt_sq / (2.0 * xi) + (smooth + xi) / 2.0 * tau_eff * r_sq \
        + (smooth + xi) / (2.0 * (1.0 - contraction)) * bracket
    return float(value), xi, "ok"


def squared_measure_bound(
    tau_eff: int, smooth: float, diameter: float,
    eta: float, beta: float, j_l: int, j_r: int,
    path2: float, delta2: float, grad_opt_sq: float,
):
    """Regret bound quadratic in the variation measures; valid while the
    chained contraction stays below 1/2. Returns (value, xi, status)."""
    return _squared_bound(
        tau_eff, smooth, diameter, eta, beta, j_l, j_r, path2, delta2, grad_opt_sq,
        chain_factor=2.0, drift_coef=2.0, err_coef=2.0,
    )


def squared_measure_bound_total_delay(
    tau_eff: int, smooth: float, diameter: float,
    eta: float, beta: float, j_l: int, j_r: int,
    path2: float, delta2: float, grad_opt_sq: float,
):
    """Squared-measure bound covering data-acquisition delay as well; the
    chained contraction must stay below 1/4. Returns (value, xi, status)."""
    return _squared_bound(
        tau_eff, smooth, diameter, eta, beta, j_l, j_r, path2, delta2, grad_opt_sq,
        chain_factor=4.0, drift_coef=6.0, err_coef=4.0,
    )


@dataclass
class BoundReport:
    """Evaluated bounds, their validity, and everything needed to re-derive them."""

    constants: dict
    measures: dict
    regret: float
    bound_path: float
    bound_path_sharp: float
    bound_squared: float | None
    bound_squared_status: str
    bound_squared_total_delay: float | None
    bound_squared_total_delay_status: str
    notes: dict = field(default_factory=dict)

    def valid_bounds(self) -> dict:
        out = {"bound_path": self.bound_path}
        if self.bound_squared is not None:
            out["bound_squared"] = self.bound_squared
        if self.bound_squared_total_delay is not None:
            out["bound_squared_total_delay"] = self.bound_squared_total_delay
        return out

    def violations(self, rel_tol: float = 1e-9) -> dict:
        """Valid bounds the measured regret exceeds (should be empty)."""
        out = {}
        for name, value in self.valid_bounds().items():
            if self.regret > value * (1.0 + rel_tol) + rel_tol:
                out[name] = value
        return out

    def to_json(self) -> str:
        doc = {
            "constants": self.constants,
            "measures": self.measures,
            "regret": self.regret,
            "bound_path": self.bound_path,
            "bound_path_sharp": self.bound_path_sharp,
            "bound_squared": self.bound_squared,
            "bound_squared_status": self.bound_squared_status,
            "bound_squared_total_delay": self.bound_squared_total_delay,
            "bound_squared_total_delay_status": self.bound_squared_total_delay_status,
            "notes": self.notes,
        }
        return json.dumps(doc, sort_keys=True, indent=2)


def evaluate_bounds(
    trace: RunTrace,
    scenario: CostScenario,
    params: EngineParams,
    delay: DelayConfig,
    gamma: float | None = None,
) -> BoundReport:
    """Compute every applicable bound for a completed run.

    gamma defaults to mu, where the error condition of the one-step
    contraction is most permissive. The linear bound uses the round-trip
    delay on zero-local runs and the total delay otherwise; the plain
    squared bound only applies to zero-local runs.
    """
    if gamma is None:
        gamma = scenario.mu
    consts = scenario.constants()
    if params.alpha < consts.smoothness * (1.0 - 1e-12):
        raise ContractError("bounds require alpha >= the certified smoothness")
    eta = contraction_eta(params.alpha, scenario.mu, gamma)
    beta = contraction_beta(params.alpha, scenario.mu, gamma)
    j_l, j_r = params.worker_steps, params.master_steps
    tau_r = delay.round_trip
    tau = delay.total
    tau_eff = tau_r if delay.tau_l == 0 else tau

    delta, delta2 = gradient_error_measures(trace, scenario, params, delay)
    pi = path_length(trace)
    pi2 = squared_path_length(trace)
    s = grad_at_optima_sq(trace, scenario)
    regret = dynamic_regret(trace)

    bound_path = path_measure_bound(
        tau_eff, consts.grad_bound, consts.diameter, eta, beta, j_l, j_r, pi, delta)
    bound_path_sharp = path_measure_bound_sharp(
        tau_eff, consts.grad_bound, consts.diameter, eta, beta, j_l, j_r, pi, delta)

    if delay.tau_l == 0:
        bsq, xi_sq, sq_status = squared_measure_bound(
            tau_r, consts.smoothness, consts.diameter, eta, beta, j_l, j_r, pi2, delta2, s)
    else:
        bsq, xi_sq, sq_status = None, None, "not applicable: positive local delay"
    btd, xi_td, td_status = squared_measure_bound_total_delay(
        tau, consts.smoothness, consts.diameter, eta, beta, j_l, j_r, pi2, delta2, s)

    constants = {
        "mu": scenario.mu,
        "smoothness": consts.smoothness,
        "grad_bound": consts.grad_bound,
        "diameter": consts.diameter,
        "alpha": params.alpha,
        "gamma": gamma,
        "eta": eta,
        "beta": beta,
        "xi_squared": xi_sq,
        "xi_total_delay": xi_td,
        "tau_r": tau_r,
        "tau": tau,
        "master_steps": j_r,
        "worker_steps": j_l,
    }
    measures = {
        "path": pi,
        "path2": pi2,
        "delta": delta,
        "delta2": delta2,
        "delta_master": float(np.sum(trace.eps_master)),
        "delta_worker": float(np.sum(trace.eps_worker)),
        "grad_opt_sq": s,
    }
    notes = {
        "optimum_shift": "the t=0 reference optimum is taken equal to the t=1 optimum",
        "warmup": f"slots 1..{trace.warmup_slots} execute seed-pinned random decisions, counted in regret",
        "error_measure": "per-slot value is the larger of the master/worker certified envelopes",
    }
    return BoundReport(
        constants=constants,
        measures=measures,
        regret=regret,
        bound_path=bound_path,
        bound_path_sharp=bound_path_sharp,
        bound_squared=bsq,
        bound_squared_status=sq_status,
        bound_squared_total_delay=btd,
        bound_squared_total_delay_status=td_status,
        notes=notes,
    )
