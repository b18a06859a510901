"""Coupled system solver: Newton continuation in the coupling constant.

Unknowns are the potentials (f~, u) of the second-order system

    S1 = lap f~ + (1/2)(Phi - tau)(1 - lap u) + N~            = 0
    S2 = lap u + W exp(4 a tau f~ - 2 a Phi - 2 c~ u) - 1     = 0

with Phi = weight_t * e^{2 f~},  weight_t = |phi|^2 prod_k(|t_k|^2+eps)^a_k,
W = prod_j(|s_j|^2+eps)^(beta_j - 1),  c~ = chi~ - 2 a tau N~.

The alpha = 0 state decouples into a twisted-KE solve for u and a vortex
solve for f~ over the metric density 1 - lap u; continuation then walks a
fixed alpha grid with adaptive step halving, each step accepted only once
both residuals are below tolerance and the metric stays positive.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ConvergenceFailure, PathStalled
from .fields import build_divisor_fields, derive_params
from .solvers import solve_block_newton_step
from .vortex import solve_twisted_ke, solve_vortex_on_metric

__all__ = ["GVProblem", "SolveState", "make_problem", "residual",
           "jacobian_vp", "newton_step", "solve_at_alpha", "decoupled_state",
           "continue_alpha"]

RESIDUAL_TOL = 1e-9


@dataclass
class GVProblem:
    """Frozen problem data for one (surface, divisor, tau, eps) configuration."""

    surface: object
    fields: object                 # DivisorFields
    params: object                 # ModelParams at alpha = 0
    W: np.ndarray                  # e^{-F_xi}
    weight_t: np.ndarray           # |phi|^2 e^{-F_eta}
    F_xi: np.ndarray
    F_eta: np.ndarray

    @property
    def tau(self):
        return self.params.tau

    @property
    def eps(self):
        return self.params.epsilon

    def c_tilde(self, alpha):
        return self.params.chi_tilde - 2.0 * alpha * self.tau * self.params.N_tilde


@dataclass
class SolveState:
    """Accepted solution snapshot along the continuation path."""

    alpha: float
    c_tilde: float
    f_tilde: np.ndarray
    u: np.ndarray
    Phi: np.ndarray
    res1: np.ndarray
    res2: np.ndarray
    params: object
    newton_log: list = field(default_factory=list)

    @property
    def res_norm(self):
        return max(float(np.max(np.abs(self.res1))), float(np.max(np.abs(self.res2))))

    @property
    def metric_density(self):
        return None  # filled by callers that track 1 - lap u


def make_problem(surface, divisor, tau, eps, delta=0.5, lam=1.0):
    fields = build_divisor_fields(surface, divisor)
    params = derive_params(divisor, surface, tau, alpha=0.0, epsilon=eps,
                           delta=delta, lam=lam)
    return GVProblem(
        surface=surface,
        fields=fields,
        params=params,
        W=fields.weight_W(eps),
        weight_t=fields.higgs_weight(eps),
        F_xi=fields.F_xi(eps),
        F_eta=fields.F_eta(eps),
    )


def _phi(problem, f_tilde):
    return problem.weight_t * np.exp(2.0 * f_tilde)


def _exp_factor(problem, alpha, c_tilde, f_tilde, u, Phi):
    return problem.W * np.exp(
        4.0 * alpha * problem.tau * f_tilde - 2.0 * alpha * Phi - 2.0 * c_tilde * u
    )


def residual(problem, alpha, f_tilde, u, c_tilde=None):
    """(S1, S2) at the given alpha; c~ recomputed from its formula."""
    s = problem.surface
    if c_tilde is None:
        c_tilde = problem.c_tilde(alpha)
    Phi = _phi(problem, f_tilde)
    rho = 1.0 - s.laplacian(u)
    S1 = (
        s.laplacian(f_tilde)
        + 0.5 * (Phi - problem.tau) * rho
        + problem.params.N_tilde
    )
    S2 = s.laplacian(u) + _exp_factor(problem, alpha, c_tilde, f_tilde, u, Phi) - 1.0
    return S1, S2


def jacobian_vp(problem, alpha, f_tilde, u, df, du, c_tilde=None):
    """Directional derivative of (S1, S2) at (f~, u) in direction (df, du)."""
    s = problem.surface
    if c_tilde is None:
        c_tilde = problem.c_tilde(alpha)
    Phi = _phi(problem, f_tilde)
    rho = 1.0 - s.laplacian(u)
    E = _exp_factor(problem, alpha, c_tilde, f_tilde, u, Phi)
    dS1 = (
        s.laplacian(df)
        + Phi * rho * df
        - 0.5 * (Phi - problem.tau) * s.laplacian(du)
    )
    dS2 = s.laplacian(du) + E * (
        4.0 * alpha * (problem.tau - Phi) * df - 2.0 * c_tilde * du
    )
    return dS1, dS2


def newton_step(problem, alpha, f_tilde, u, c_tilde=None, max_backtrack=30,
                log=None):
    """One damped Newton step preserving 1 - lap u > 0.

    Returns (f~', u', residual_pair', step_size, krylov_iterations).
    """
    s = problem.surface
    if c_tilde is None:
        c_tilde = problem.c_tilde(alpha)
    S1, S2 = residual(problem, alpha, f_tilde, u, c_tilde)

    def apply_jac(df, du):
        return jacobian_vp(problem, alpha, f_tilde, u, df, du, c_tilde)

    Phi = _phi(problem, f_tilde)
    rho = 1.0 - s.laplacian(u)
    E = _exp_factor(problem, alpha, c_tilde, f_tilde, u, Phi)
    model = (
        float(np.mean(Phi * rho)),
        float(np.mean(0.5 * (problem.tau - Phi))),
        float(np.mean(4.0 * alpha * (problem.tau - Phi) * E)),
        float(np.mean(-2.0 * c_tilde * E)),
    )
    df, du, nk = solve_block_newton_step(s, apply_jac, -S1, -S2,
                                         model_coeffs=model)
    phi0 = float(s.integrate(S1 * S1 + S2 * S2))
    step = 1.0
    for _ in range(max_backtrack + 1):
        ft, ut = f_tilde + step * df, u + step * du
        if float(np.min(1.0 - s.laplacian(ut))) <= 0.0:
            step *= 0.5
            continue
        T1, T2 = residual(problem, alpha, ft, ut, c_tilde)
        phit = float(s.integrate(T1 * T1 + T2 * T2))
        if phit <= (1.0 - 1e-4 * step) * phi0 or phit < (RESIDUAL_TOL * 1e-2) ** 2:
            if log is not None:
                log.append({
                    "alpha": alpha, "step": step, "krylov": nk,
                    "residual_inf": max(float(np.max(np.abs(T1))),
                                        float(np.max(np.abs(T2)))),
                    "time": time.time(),
                })
            return ft, ut, (T1, T2), step, nk
        step *= 0.5
    raise ConvergenceFailure(
        "Newton step rejected: positivity or descent unrecoverable after "
        f"{max_backtrack} halvings"
    )


def solve_at_alpha(problem, alpha, f_init, u_init, tol=RESIDUAL_TOL,
                   max_newton=40, log=None):
    """Newton loop at fixed alpha from the given initial pair."""
    c_tilde = problem.c_tilde(alpha)
    f, u = f_init, u_init
    step_log = []
    for _ in range(max_newton):
        S1, S2 = residual(problem, alpha, f, u, c_tilde)
        rn = max(float(np.max(np.abs(S1))), float(np.max(np.abs(S2))))
        if rn < tol:
            Phi = _phi(problem, f)
            params = problem.params.with_alpha(alpha)
            if log is not None:
                log.extend(step_log)
            return SolveState(alpha=alpha, c_tilde=c_tilde, f_tilde=f, u=u,
                              Phi=Phi, res1=S1, res2=S2, params=params,
                              newton_log=step_log)
        f, u, _, _, _ = newton_step(problem, alpha, f, u, c_tilde, log=step_log)
    raise ConvergenceFailure(f"no convergence at alpha={alpha} "
                             f"after {max_newton} Newton iterations")


def decoupled_state(problem, tol=RESIDUAL_TOL, log=None):
    """alpha = 0 state from the two decoupled solves.

    u solves the twisted-KE equation with twist F_xi; f~ solves the vortex
    equation over the resulting metric density with source N~.
    """
    s = problem.surface
    if problem.params.chi_tilde >= 0.0:
        raise ConfigError(
            "decoupled endpoint needs chi_tilde < 0 "
            f"(got {problem.params.chi_tilde}); add cone weight"
        )
    ke_log = [] if log is None else log
    u = solve_twisted_ke(s, problem.params.chi_tilde, problem.F_xi, tol=tol * 0.1,
                         log=ke_log)
    rho = 1.0 - s.laplacian(u)
    f = solve_vortex_on_metric(s, problem.weight_t, problem.tau, rho,
                               problem.params.N_tilde, tol=tol * 0.1, log=ke_log)
    S1, S2 = residual(problem, 0.0, f, u)
    state = SolveState(alpha=0.0, c_tilde=problem.params.chi_tilde, f_tilde=f,
                       u=u, Phi=_phi(problem, f), res1=S1, res2=S2,
                       params=problem.params.with_alpha(0.0))
    if state.res_norm >= tol:
        raise ConvergenceFailure(
            f"decoupled endpoint residual {state.res_norm:.2e} above {tol:g}"
        )
    return state


def continue_alpha(problem, state0, alpha_target, n_steps=16, tol=RESIDUAL_TOL,
                   min_step_frac=1.0 / 1024.0, callback=None):
    """Continuation from the accepted alpha=0 state to alpha_target.

    Fixed alpha grid with adaptive halving; the minimum step is
    alpha_star/1024.  Returns the list of accepted states (including the
    start).  Raises PathStalled with the last good alpha on failure.
    """
    if alpha_target == 0.0:
        return [state0]
    astar = problem.params.alpha_star
    if not np.isfinite(astar) or alpha_target > astar + 1e-12:
        raise ConfigError(
            f"alpha_target {alpha_target} outside the certified range "
            f"(alpha_star = {astar})"
        )
    if state0.res_norm >= tol:
        raise ConfigError("starting state is not residual-accepted")
    states = [state0]
    log = []
    alpha = state0.alpha
    step = (alpha_target - alpha) / n_steps
    min_step = astar * min_step_frac
    f, u = state0.f_tilde, state0.u
    while alpha < alpha_target - 1e-14:
        a_next = min(alpha_target, alpha + step)
        try:
            st = solve_at_alpha(problem, a_next, f, u, tol=tol, log=log)
        except ConvergenceFailure:
            step *= 0.5
            if step < min_step:
                raise PathStalled(
                    f"continuation stalled at alpha={alpha:.6g}", alpha,
                    [s.res_norm for s in states],
                )
            continue
        states.append(st)
        if callback is not None:
            callback(st)
        alpha, f, u = a_next, st.f_tilde, st.u
    return states
