"""The two decoupled problems: twisted vortices and the twisted
Kaehler-Einstein potential.

The vortex solver works at the level of the single semilinear equation

    lap f + (1/2) * coeff * e^{2f} + Q = 0

which covers both the base (constant-curvature-background) solve and the
re-centered twist path, as well as the vortex equation over a conformal
metric density rho = 1 - lap(u) used to seed the coupled continuation.
Solvability requires integral of coeff*e^{2f} to balance -2*integral(Q) > 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NoSolutionExpected
from .solvers import damped_newton_scalar
from .surface import VOL

__all__ = [
    "VortexProblem",
    "make_vortex_problem",
    "vortex_residual",
    "solve_vortex",
    "solve_exp_scalar",
    "solve_vortex_on_metric",
    "solve_twisted_ke",
]


def solve_exp_scalar(surface, coeff, Q, f0=None, tol=1e-10, log=None):
    """Damped Newton for lap f + (1/2) coeff e^{2f} + Q = 0 (coeff >= 0)."""
    if float(surface.integrate(Q)) >= 0.0:
        raise NoSolutionExpected(
            "no balancing mass: integral of the fixed part must be negative"
        )

    def residual(f):
        return surface.laplacian(f) + 0.5 * coeff * np.exp(2.0 * f) + Q

    def weight(f):
        return coeff * np.exp(2.0 * f)

    x0 = np.zeros(surface.shape) if f0 is None else f0
    return damped_newton_scalar(surface, residual, weight, x0, tol=tol, log=log)


def solve_vortex_on_metric(surface, weight, tau, rho, source, f0=None,
                           tol=1e-10, log=None):
    """Solve lap f + (1/2)(weight e^{2f} - tau) rho + source = 0.

    This is the vortex equation over the metric density rho (mean 1) with
    zeroth-order source; existence requires tau > 2*source.
    """
    if tau <= 2.0 * source:
        raise NoSolutionExpected(
            f"existence condition violated: tau={tau} must exceed 2*{source}"
        )
    Q = -0.5 * tau * rho + source
    return solve_exp_scalar(surface, weight * rho, Q, f0=f0, tol=tol, log=log)


@dataclass
class VortexProblem:
    """Twist-path data: base field Phi0 (the t=0 solution-normalized weight),
    tau, twist (b, F) with F mean-free, and the path parameter t."""

    surface: object
    phi0_sq: np.ndarray
    tau: float
    b: float = 0.0
    F: np.ndarray | None = None
    t: float = 1.0
    N: int = 0
    base_f0: np.ndarray | None = None
    log: list = field(default_factory=list)

    @property
    def existence_ok(self):
        return self.tau > 2.0 * (self.N - self.b)

    def twist_term(self, t=None):
        if self.F is None:
            return np.zeros(self.surface.shape)
        t = self.t if t is None else t
        return 0.5 * t * self.surface.laplacian(self.F)


def make_vortex_problem(surface, weight_raw, tau, N, b=0.0, F=None, t=1.0,
                        tol=1e-10):
    """Solve the base vortex equation (twist bw only) and re-center.

    weight_raw is |phi|^2 under the constant-curvature reference metric.
    The returned problem has residual identically zero at f = 0, t = 0.
    """
    if tau <= 2.0 * (N - b):
        raise NoSolutionExpected(
            f"existence condition violated: tau*Vol/2pi = {tau} "
            f"must exceed 2(N - b) = {2.0 * (N - b)}"
        )
    if F is not None:
        fbar = surface.integrate(F) / VOL
        if abs(fbar) > 1e-10 * max(1.0, float(np.max(np.abs(F)))):
            raise ConfigError("twist potential F must be mean-free")
    log = []
    f0 = solve_vortex_on_metric(
        surface, weight_raw, tau, np.ones(surface.shape), float(N - b),
        tol=tol, log=log,
    )
    phi0_sq = weight_raw * np.exp(2.0 * f0)
    return VortexProblem(surface=surface, phi0_sq=phi0_sq, tau=tau, b=b, F=F,
                         t=t, N=N, base_f0=f0, log=log)


def vortex_residual(problem, f, t=None):
    """lap f + (1/2) Phi0 (e^{2f} - 1) + (1/2) lap(t F)."""
    s = problem.surface
    return (
        s.laplacian(f)
        + 0.5 * problem.phi0_sq * (np.exp(2.0 * f) - 1.0)
        + problem.twist_term(t)
    )


def solve_vortex(problem, f_init=None, tol=1e-10, homotopy_step=0.25,
                 min_step=1.0 / 64.0):
    """Solve the twist path at t = problem.t.

    Direct damped Newton first; on stagnation, homotopy in t with step
    halving.  Returns f with ||residual||_inf < tol.
    """
    if not problem.existence_ok:
        raise NoSolutionExpected(
            f"existence condition violated: tau={problem.tau} must exceed "
            f"2(N-b)={2.0 * (problem.N - problem.b)}"
        )
    s = problem.surface

    def solve_at(t, f0):
        Q = -0.5 * problem.phi0_sq + problem.twist_term(t)
        return solve_exp_scalar(s, problem.phi0_sq, Q, f0=f0, tol=tol,
                                log=problem.log)

    from .errors import ConvergenceFailure

    f0 = np.zeros(s.shape) if f_init is None else f_init
    try:
        return solve_at(problem.t, f0)
    except ConvergenceFailure:
        pass
    t, f, step = 0.0, np.zeros(s.shape), homotopy_step
    while t < problem.t - 1e-14:
        t_next = min(problem.t, t + step)
        try:
            f = solve_at(t_next, f)
            t = t_next
        except ConvergenceFailure:
            step *= 0.5
            if step < min_step:
                raise
    return f


def solve_twisted_ke(surface, chi_tilde, F_xi, t=1.0, u_init=None, tol=1e-10,
                     log=None):
    """Solve the conformal-potential equation 1 - lap u = e^{-2 t chi~ u - t F}.

    Requires chi~ < 0 (strict, for a definite linearization); the solution
    keeps 1 - lap u > 0 (checked; damping rejects violating steps).
    """
    if chi_tilde >= 0.0:
        raise ConfigError(
            f"twisted KE solve requires chi_tilde < 0, got {chi_tilde}"
        )

    def residual(u):
        return (
            surface.laplacian(u)
            + np.exp(-2.0 * t * chi_tilde * u - t * F_xi)
            - 1.0
        )

    def weight(u):
        return -2.0 * t * chi_tilde * np.exp(-2.0 * t * chi_tilde * u - t * F_xi)

    def guard(u):
        return float(np.min(1.0 - surface.laplacian(u))) > 0.0

    u0 = np.zeros(surface.shape) if u_init is None else u_init
    u = damped_newton_scalar(surface, residual, weight, u0, tol=tol,
                             guard=guard, log=log)
    if float(np.min(1.0 - surface.laplacian(u))) <= 0.0:
        raise ConfigError("metric positivity lost at the twisted KE solution")
    return u
