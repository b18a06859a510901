import numpy as np
import pytest

import vortexlab.coupled as coupled
from vortexlab.coupled import (
    continue_alpha,
    jacobian_vp,
    make_problem,
    newton_step,
    residual,
    solve_at_alpha,
)
from vortexlab.errors import ConfigError, ConvergenceFailure
from vortexlab.fields import DivisorData
from vortexlab.solvers import _dense_block_solve, solve_block_newton_step
from vortexlab.surface import VOL, build_surface
from vortexlab.verify import fd_jacobian_gap

from conftest import P_CONE, P_ZERO


def test_decoupled_endpoint_residual(gv_problem64, gv_state0):
    assert np.max(np.abs(gv_state0.res1)) < 1e-8
    assert np.max(np.abs(gv_state0.res2)) < 1e-8


def test_residual_mean_identity(gv_problem64, torus64):
    # int S2 = int W e^{...} - 2 pi for any state
    rng = np.random.default_rng(1)
    f, _ = torus64.random_bandlimited(rng, kmax=4, amp=0.2)
    u, _ = torus64.random_bandlimited(rng, kmax=4, amp=0.05)
    alpha = 0.03
    _, S2 = residual(gv_problem64, alpha, f, u)
    c = gv_problem64.c_tilde(alpha)
    Phi = gv_problem64.weight_t * np.exp(2 * f)
    mass = torus64.integrate(gv_problem64.W * np.exp(
        4 * alpha * 4.0 * f - 2 * alpha * Phi - 2 * c * u))
    assert abs(torus64.integrate(S2) - (mass - VOL)) < 1e-9 * max(1.0, mass)


def test_constant_shift_monotonicity(gv_problem64, gv_final, torus64):
    # u -> u + c with c~<0, c>0 multiplies the exponential by e^{-2 c~ c} > 1
    st = gv_final
    _, S2a = residual(gv_problem64, st.alpha, st.f_tilde, st.u)
    _, S2b = residual(gv_problem64, st.alpha, st.f_tilde, st.u + 0.3)
    assert torus64.integrate(S2b) > torus64.integrate(S2a)


def test_jacobian_fd_ten_states(gv_problem64, torus64):
    worst = 0.0
    for seed in range(10):
        rng = np.random.default_rng(100 + seed)
        f, _ = torus64.random_bandlimited(rng, kmax=4, amp=0.3)
        u, _ = torus64.random_bandlimited(rng, kmax=4, amp=0.05)
        gap = fd_jacobian_gap(gv_problem64, 0.04, f, u, seed=seed)
        worst = max(worst, gap)
    assert worst < 1e-6


def test_jacobian_zero_direction(gv_problem64, gv_final):
    z = np.zeros_like(gv_final.f_tilde)
    d1, d2 = jacobian_vp(gv_problem64, gv_final.alpha, gv_final.f_tilde,
                         gv_final.u, z, z)
    assert np.max(np.abs(d1)) == 0.0 and np.max(np.abs(d2)) == 0.0


def test_jacobian_decouples_at_alpha_zero(gv_problem64, gv_state0, torus64):
    rng = np.random.default_rng(5)
    df, _ = torus64.random_bandlimited(rng, kmax=4)
    z = np.zeros_like(df)
    _, dS2 = jacobian_vp(gv_problem64, 0.0, gv_state0.f_tilde, gv_state0.u,
                         df, z)
    assert np.max(np.abs(dS2)) < 1e-12  # no f-coupling at alpha = 0


def test_newton_fixed_point(gv_problem64, gv_final):
    f, u, _, step, _ = newton_step(gv_problem64, gv_final.alpha,
                                   gv_final.f_tilde, gv_final.u)
    assert np.max(np.abs(f - gv_final.f_tilde)) < 1e-10
    assert np.max(np.abs(u - gv_final.u)) < 1e-10


def test_quadratic_convergence(gv_problem64, gv_final, torus64):
    rng = np.random.default_rng(3)
    bump, _ = torus64.random_bandlimited(rng, kmax=3, amp=2e-3)
    f, u = gv_final.f_tilde + bump, gv_final.u
    norms = []
    for _ in range(3):
        S1, S2 = residual(gv_problem64, gv_final.alpha, f, u)
        norms.append(max(np.max(np.abs(S1)), np.max(np.abs(S2))))
        f, u, _, _, _ = newton_step(gv_problem64, gv_final.alpha, f, u)
    # r_{k+1} <= C r_k^2 with a uniform C (measured well below 1 here)
    assert norms[1] <= 1.0 * norms[0] ** 2
    assert norms[2] <= 1.0 * norms[1] ** 2 + 1e-12


def test_positivity_guard_damps(gv_problem64, gv_final, monkeypatch):
    # force a direction that kills metric positivity at full step
    surf = gv_problem64.surface
    bad_du = 0.2 * np.cos(2 * np.pi * surf.X)  # lap ~ 0.4 pi cos > 1 somewhere

    def fake_solve(surface, apply_jac, r1, r2, **kw):
        return np.zeros_like(r1), bad_du, 1

    monkeypatch.setattr(coupled, "solve_block_newton_step", fake_solve)
    with pytest.raises(ConvergenceFailure):
        # merit cannot decrease along a wrong direction: damping engages,
        # halves 30 times, then reports
        newton_step(gv_problem64, gv_final.alpha, gv_final.f_tilde, gv_final.u)
    rho_full = 1.0 - surf.laplacian(gv_final.u + bad_du)
    assert np.min(rho_full) <= 0.0  # the guard had a real violation to catch


def test_continue_alpha_paths(gv_problem64, gv_state0, gv_path):
    # alpha_target = 0 returns the input unchanged
    states = continue_alpha(gv_problem64, gv_state0, 0.0)
    assert states == [gv_state0]
    # c~ strictly decreasing along the path
    cts = [st.c_tilde for st in gv_path]
    assert all(b < a for a, b in zip(cts, cts[1:]))
    # residual-accepted everywhere and Phi <= tau
    for st in gv_path:
        assert st.res_norm < 1e-9
        assert np.max(st.Phi) <= gv_problem64.tau + 1e-8
    with pytest.raises(ConfigError):
        continue_alpha(gv_problem64, gv_state0,
                       gv_problem64.params.alpha_star * 1.5)


def test_path_stalled(gv_problem64, gv_state0, monkeypatch):
    from vortexlab.errors import PathStalled

    def always_fail(problem, alpha, f, u, **kw):
        raise ConvergenceFailure("synthetic")

    monkeypatch.setattr(coupled, "solve_at_alpha", always_fail)
    with pytest.raises(PathStalled) as exc:
        continue_alpha(gv_problem64, gv_state0,
                       gv_problem64.params.alpha_star, n_steps=4)
    assert exc.value.last_good_alpha == 0.0


def test_decoupled_needs_negative_chi(torus64):
    dd = DivisorData(zeros=((P_ZERO, 1),))  # no cone point: chi~ = 0
    prob = make_problem(torus64, dd, tau=5.0, eps=0.1)
    with pytest.raises(ConfigError):
        coupled.decoupled_state(prob)


def test_dense_block_fallback():
    rng = np.random.default_rng(0)
    n = 24
    M = rng.normal(size=(2 * n, 2 * n)) + 6.0 * np.eye(2 * n)
    b = rng.normal(size=2 * n)
    x = _dense_block_solve(n, lambda v: M @ v, b)
    assert np.max(np.abs(M @ x - b)) < 1e-9


def test_gmres_fallback_on_small_grid(torus32):
    # a stiff variable-coefficient block system under a starved Krylov
    # budget must fall back to the dense route on small grids
    rng = np.random.default_rng(7)
    V1 = 1.0 + 0.9 * np.cos(2 * np.pi * 5 * torus32.X) ** 2
    V2 = 2.0 + np.sin(2 * np.pi * 4 * torus32.Y) ** 2

    def apply_jac(df, du):
        return (torus32.laplacian(df) + V1 * df + 40.0 * du,
                torus32.laplacian(du) + V2 * du - 35.0 * df)

    r1, _ = torus32.random_bandlimited(rng, kmax=5)
    r2, _ = torus32.random_bandlimited(rng, kmax=5)
    df, du, _ = solve_block_newton_step(torus32, apply_jac, r1, r2,
                                        restart=3, max_krylov=6)
    a, b = apply_jac(df, du)
    assert np.max(np.abs(a - r1)) < 1e-8
    assert np.max(np.abs(b - r2)) < 1e-8
