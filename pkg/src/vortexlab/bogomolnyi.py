"""Bogomol'nyi phase: the combined c~ = 0 equation solved by monotone
iteration under a constructed supersolution.

With a*tau = chi~ / (2 N~) the coupled system collapses to one equation

    lap f + (1/2) lam e^{-v0^d} F(2 f + u0^d) = -N~,
    F(t) = e^{2 a tau t - 2 a e^t} (e^t - tau),

for the regularized potentials u0^d, v0^d.  The scheme: build a cutoff
supersolution w (quintic radial ramp around every marked point), search the
smallest admissible lam at the d = 1 endpoint (where the inequality is
tightest, by monotonicity of every factor in d), then iterate

    (lap + C_d) f_n = -(1/2) lam e^{-v0^d} F(2 f_{n-1} + u0^d) + C_d f_{n-1} - N~

downward from f_1 = (log tau - u0^d)/2, asserting the pointwise chain
f_1 > f_2 > ... > w at every step.  The admissibility checker evaluates the
per-singularity-class inequalities (the seven membership cases) that make
e^{-v0} p-integrable for some p > 1.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import AssumptionNotSatisfied, ConfigError, ConvergenceFailure
from .fields import build_divisor_fields, derive_params
from .singular import mask_away_from_points
from .surface import VOL

__all__ = [
    "EBProblem",
    "NAReport",
    "make_eb_problem",
    "F_nonlinearity",
    "F_prime",
    "F_prime_sup",
    "check_numerical_assumption",
    "build_supersolution",
    "supersolution_margin",
    "monotone_iterate",
    "eb_residual",
    "delta_ladder_and_assemble",
    "SingularField",
]


# --- the scalar nonlinearity -------------------------------------------------


def F_nonlinearity(t, alpha, tau):
    """F(t) = e^{2 a tau t - 2 a e^t} (e^t - tau), overflow-safe."""
    t = np.asarray(t, dtype=np.float64)
    with np.errstate(over="ignore"):
        et = np.exp(t)
        g = 2.0 * alpha * tau * t - 2.0 * alpha * et
        return np.exp(g + t) - tau * np.exp(g)


def F_prime(t, alpha, tau):
    """F'(t) = e^{g} [ -2 a e^{2t} + (4 a tau + 1) e^t - 2 a tau^2 ]."""
    t = np.asarray(t, dtype=np.float64)
    with np.errstate(over="ignore"):
        et = np.exp(t)
        g = 2.0 * alpha * tau * t - 2.0 * alpha * et
        return (
            -2.0 * alpha * np.exp(g + 2.0 * t)
            + (4.0 * alpha * tau + 1.0) * np.exp(g + t)
            - 2.0 * alpha * tau**2 * np.exp(g)
        )


def F_prime_sup(alpha, tau):
    """sup over the reals of F' by dense scan plus golden-section refinement."""
    ts = np.linspace(-50.0, 50.0, 4001)
    vals = F_prime(ts, alpha, tau)
    i = int(np.argmax(vals))
    lo = ts[max(0, i - 1)]
    hi = ts[min(len(ts) - 1, i + 1)]
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = float(F_prime(c, alpha, tau)), float(F_prime(d, alpha, tau))
    for _ in range(200):
        if b - a < 1e-14:
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = float(F_prime(c, alpha, tau))
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = float(F_prime(d, alpha, tau))
    return max(float(vals[i]), fc, fd)


# --- problem setup -----------------------------------------------------------


@dataclass
class EBProblem:
    surface: object
    fields: object          # DivisorFields
    params: object          # ModelParams with c_tilde = 0
    alpha: float
    tau: float
    lam: float | None
    sigma: float
    u0: np.ndarray          # log|phi|^2 + sum alpha_k log|t_k|^2 (delta = 0)

    def u0_delta(self, delta):
        f = self.fields
        out = np.logaddexp(f.log_phi_sq, np.log(delta))
        for (_, ak), lt in zip(f.divisor.parabolic, f.log_t_sq):
            out = out + ak * np.logaddexp(lt, np.log(delta))
        return out

    def v0_delta(self, delta):
        f = self.fields
        out = 2.0 * self.alpha * self.tau * self.u0_delta(delta)
        for (_, b), ls in zip(f.divisor.cone, f.log_s_sq):
            out = out + (1.0 - b) * np.logaddexp(ls, np.log(delta))
        return out

    def marked_points(self):
        return [tuple(p) for p in self.fields.divisor.all_points().keys()]


def make_eb_problem(surface, divisor, alpha=None, tau=None, lam=None,
                    sigma=None, delta=0.5):
    """Construct the c~ = 0 problem; one of alpha/tau fixes the other via
    a * tau = chi~ / (2 N~).

    Refuses configurations with chi~ <= 0 (in particular the torus with cone
    points, where the phase would force a*tau <= 0).
    """
    if not divisor.zeros and not divisor.parabolic:
        raise ConfigError("the phase needs positive parabolic degree N~ > 0")
    chi_tilde = surface.euler_char - divisor.sum_one_minus_beta
    N_tilde = divisor.N + divisor.sum_alpha
    if chi_tilde <= 0.0:
        raise ConfigError(
            "c~ = 0 requires chi~ > 0, got "
            f"chi~ = {chi_tilde} on backend {surface.backend!r}: "
            "a*tau = chi~/(2 N~) would not be positive "
            "(the torus with cone points cannot carry this phase)"
        )
    if (alpha is None) == (tau is None):
        raise ConfigError("specify exactly one of alpha, tau")
    if alpha is None:
        alpha = chi_tilde / (2.0 * tau * N_tilde)
    else:
        tau = chi_tilde / (2.0 * alpha * N_tilde)
    if alpha <= 0 or tau <= 0:
        raise ConfigError("alpha and tau must come out positive")
    fields = build_divisor_fields(surface, divisor)
    params = derive_params(divisor, surface, tau, alpha=alpha,
                           lam=lam if lam is not None else 1.0)
    params = params.with_alpha(alpha)
    if abs(params.c_tilde) > 1e-12:
        raise ConfigError(f"c~ = {params.c_tilde} not zero at the phase lock")
    if sigma is None:
        sigma = 16.0 * surface.h
    pts = [tuple(p) for p in divisor.all_points().keys()]
    for i, p in enumerate(pts):
        for q in pts[i + 1:]:
            sep = surface.distance_points(p, q)
            if 4.0 * sigma > sep:
                sigma = 0.24 * sep  # keep the 2*sigma supports disjoint
    if sigma < 3.0 * surface.h:
        raise ConfigError(
            f"cutoff radius sigma={sigma:.3g} is below the grid scale "
            f"{surface.h:.3g}; increase the resolution or separate the points"
        )
    u0 = fields.log_phi_sq.copy()
    for (_, ak), lt in zip(divisor.parabolic, fields.log_t_sq):
        u0 = u0 + ak * lt
    return EBProblem(surface=surface, fields=fields, params=params,
                     alpha=float(alpha), tau=float(tau), lam=lam,
                     sigma=float(sigma), u0=u0)


# --- admissibility -----------------------------------------------------------


@dataclass
class NAReport:
    entries: list = field(default_factory=list)
    all_passed: bool = True

    def to_dict(self):
        return {"all_passed": self.all_passed, "entries": self.entries}


def check_numerical_assumption(problem):
    """Evaluate the membership-class inequality at every marked point.

    A point carrying zero multiplicity n, cone weight beta, parabolic weight
    a_k (absent memberships contribute nothing) must satisfy

        4 a tau n + 4 a tau a_k + 2 (1 - beta) < 2   (strict).
    """
    at = problem.alpha * problem.tau
    report = NAReport()
    for point, data in problem.fields.divisor.all_points().items():
        n = data.get("n", 0)
        beta = data.get("beta")
        ak = data.get("alpha_k", 0.0)
        classes = "".join(
            c for c, present in (("Z", "n" in data), ("C", beta is not None),
                                 ("P", "alpha_k" in data)) if present
        )
        lhs = 4.0 * at * n + 4.0 * at * ak + (2.0 * (1.0 - beta) if beta is not None else 0.0)
        passed = lhs < 2.0
        report.entries.append({
            "point": list(point), "classes": classes, "lhs": float(lhs),
            "rhs": 2.0, "margin": float(2.0 - lhs), "passed": bool(passed),
        })
        report.all_passed &= passed
    return report


# --- supersolution -----------------------------------------------------------


def _quintic_bump(surface, points, sigma):
    """C^2 cutoff: 1 on the sigma-disks, 0 outside the 2*sigma-disks."""
    psi = np.zeros(surface.shape)
    for p in points:
        d = surface.distance_field(p)
        s = np.clip((d - sigma) / sigma, 0.0, 1.0)
        psi += 1.0 - (6.0 * s**5 - 15.0 * s**4 + 10.0 * s**3)
    return np.clip(psi, 0.0, 1.0)


def build_supersolution(problem, margin=0.5, lam_safety=1.5):
    """Construct (w, C_sigma, lam_min) with the strict supersolution
    inequality holding for every delta in (0, 1).

    w solves lap w = -(4 pi N~/Vol) Psi_sigma + C(sigma), shifted so that
    2 w + u0^(d=1) stays below log tau by 2*margin; lam_min is the pointwise
    bound at the d = 1 endpoint over the complement of the sigma-disks.
    """
    s = problem.surface
    pts = problem.marked_points()
    psi = _quintic_bump(s, pts, problem.sigma)
    N_tilde = problem.params.N_tilde
    C_sigma = (4.0 * np.pi * N_tilde / VOL**2) * s.integrate(psi)
    rhs = -(4.0 * np.pi * N_tilde / VOL) * psi + C_sigma
    w = s.solve_shifted(0.0, rhs)
    u0_1 = problem.u0_delta(1.0)
    shift = 0.5 * (np.log(problem.tau) - 2.0 * margin - float(np.max(2.0 * w + u0_1)))
    w = w + shift
    if C_sigma >= N_tilde:
        raise ConfigError(
            f"cutoff mass C(sigma)={C_sigma:.3g} too large; shrink sigma"
        )
    # lam bound on the complement of the sigma-disks at the d = 1 endpoint
    mask = mask_away_from_points(s, pts, problem.sigma)
    if not np.any(mask):
        raise ConfigError(
            "the sigma-disks cover the whole surface; shrink sigma"
        )
    v0_1 = problem.v0_delta(1.0)
    neg_F = -F_nonlinearity(2.0 * w + u0_1, problem.alpha, problem.tau)
    if float(np.min(neg_F[mask])) <= 0.0:
        raise ConfigError("supersolution shift failed: F not negative off the disks")
    need = (N_tilde + rhs)[mask]  # lap w = rhs exactly
    lam_min = float(np.max(2.0 * need / (np.exp(-v0_1) * neg_F)[mask]))
    lam = problem.lam if problem.lam is not None else lam_safety * max(lam_min, 0.0)
    if lam <= lam_min:
        raise ConfigError(
            f"lambda={lam} does not dominate the supersolution bound {lam_min:.6g}"
        )
    return w, float(C_sigma), float(lam_min), lam


def supersolution_margin(problem, w, lam, delta):
    """min over the grid of -(lap w + (1/2) lam e^{-v0^d} F(2w+u0^d) + N~);
    positive iff the strict supersolution inequality holds pointwise."""
    s = problem.surface
    lap_w = s.laplacian(w)
    v0 = problem.v0_delta(delta)
    Ft = F_nonlinearity(2.0 * w + problem.u0_delta(delta), problem.alpha,
                        problem.tau)
    expr = lap_w + 0.5 * lam * np.exp(-v0) * Ft + problem.params.N_tilde
    return -float(np.max(expr))


# --- monotone iteration -------------------------------------------------------


def eb_residual(problem, f, delta, lam):
    s = problem.surface
    v0 = problem.v0_delta(delta)
    Ft = F_nonlinearity(2.0 * f + problem.u0_delta(delta), problem.alpha,
                        problem.tau)
    return s.laplacian(f) + 0.5 * lam * np.exp(-v0) * Ft + problem.params.N_tilde


def monotone_iterate(problem, w, lam, delta, tol=1e-10, residual_target=None,
                     max_iter=100_000, chain_slack=1e-12, log=None):
    """Iterate downward from f_1 = (log tau - u0^d)/2; returns (f, info).

    The chain f_1 > f_2 > ... > w is asserted pointwise at every step with
    the given slack; a violation signals a discretization or shift-constant
    bug and raises.  Stops when the sup change falls below tol; when a
    residual_target is set, iteration continues until the masked equation
    residual reaches it or plateaus (the change criterion alone leaves an
    O(C_d * tol) residual behind).
    """
    s = problem.surface
    u0 = problem.u0_delta(delta)
    v0 = problem.v0_delta(delta)
    ev = np.exp(-v0)
    C_delta = 1.0 + lam * float(np.max(ev)) * F_prime_sup(problem.alpha,
                                                          problem.tau)
    N_tilde = problem.params.N_tilde
    mask = None
    if residual_target is not None:
        mask = mask_away_from_points(s, problem.marked_points(),
                                     2.0 * problem.sigma)
        if not np.any(mask):
            mask = np.ones(s.shape, dtype=bool)
    f = 0.5 * (np.log(problem.tau) - u0)
    f1 = f
    min_gap_chain = np.inf
    min_gap_floor = np.inf
    it = 0
    res_masked = np.inf
    while True:
        it += 1
        if it > max_iter:
            raise ConvergenceFailure(
                f"monotone iteration exceeded {max_iter} iterations "
                f"(last change {change:.3e})"
            )
        rhs = (-0.5 * lam * ev * F_nonlinearity(2.0 * f + u0, problem.alpha,
                                                problem.tau)
               + C_delta * f - N_tilde)
        f_next = s.solve_shifted(C_delta, rhs)
        gap_chain = float(np.min(f - f_next))
        gap_floor = float(np.min(f_next - w))
        min_gap_chain = min(min_gap_chain, gap_chain)
        min_gap_floor = min(min_gap_floor, gap_floor)
        if gap_chain < -chain_slack or gap_floor < -chain_slack:
            raise ConvergenceFailure(
                f"monotone chain violated at iteration {it}: "
                f"descent gap {gap_chain:.3e}, floor gap {gap_floor:.3e}"
            )
        change = float(np.max(np.abs(f_next - f)))
        f = f_next
        if log is not None and (it < 10 or it % 50 == 0):
            log.append({"iter": it, "change": change, "C_delta": C_delta,
                        "time": time.time()})
        if change < tol:
            if residual_target is None:
                break
            if it % 50 == 0 or res_masked == np.inf:
                res = eb_residual(problem, f, delta, lam)
                new_res = float(np.max(np.abs(res)[mask]))
                # plateau: spectral floor of the grid reached, stop honestly
                if new_res > 0.95 * res_masked and new_res > residual_target:
                    res_masked = min(res_masked, new_res)
                    break
                res_masked = new_res
            if res_masked <= residual_target:
                break
    info = {
        "iterations": it,
        "C_delta": C_delta,
        "final_change": change,
        "residual_masked": res_masked,
        "min_gap_chain": min_gap_chain,
        "min_gap_floor": min_gap_floor,
        "f1_minus_f_min": float(np.min(f1 - f)),
    }
    return f, info


# --- delta ladder and assembly -------------------------------------------------


@dataclass
class SingularField:
    """Grid sample plus symbolic singular factors (point, exponent on |s|^2).

    values = exp(smooth_log + sum_i e_i * log|s_i|^2); the factor list keeps
    the closed-form singular structure available to consumers.
    """

    values: np.ndarray
    smooth_log: np.ndarray
    factors: list  # (point, exponent, log_field)


def delta_ladder_and_assemble(problem, deltas=None, tol=1e-10, lam_safety=1.5,
                              margin=0.5, log=None):
    """Run the regularization ladder and assemble the singular pair.

    Refuses (with the report) when the admissibility checker fails.  One
    supersolution/lam pair serves every rung (the d = 1 bound dominates);
    each rung re-runs the monotone iteration from its own f_1 so the chain
    property stays intact, and Cauchy sup-distances away from the marked
    points are recorded.
    """
    na = check_numerical_assumption(problem)
    if not na.all_passed:
        raise AssumptionNotSatisfied(
            "admissibility inequalities fail; refusing the phase solve", na
        )
    if deltas is None:
        deltas = [0.1 * 0.5**k for k in range(7)]
    deltas = list(deltas)
    if any(d2 >= d1 for d1, d2 in zip(deltas, deltas[1:])):
        raise ConfigError("regularization rungs must be strictly decreasing")
    s = problem.surface
    w, C_sigma, lam_min, lam = build_supersolution(problem, margin=margin,
                                                   lam_safety=lam_safety)
    rungs = []
    infos = []
    sup_margins = []
    for d in deltas:
        m = supersolution_margin(problem, w, lam, d)
        if m <= 0:
            raise ConfigError(f"supersolution inequality fails at delta={d}")
        sup_margins.append(m)
        f, info = monotone_iterate(problem, w, lam, d, tol=tol, log=log)
        rungs.append(f)
        infos.append(info)
    pts = problem.marked_points()
    radius = max(8.0 * s.h, float(np.sqrt(deltas[-1])) * 0.5)
    mask = mask_away_from_points(s, pts, radius)
    d_sup = [float(np.max(np.abs(a - b)[mask])) for a, b in zip(rungs, rungs[1:])]

    f = rungs[-1]
    Phi_h = np.exp(2.0 * f + problem.u0)
    g_smooth = (np.log(lam) + 4.0 * problem.alpha * problem.tau * f
                - 2.0 * problem.alpha * Phi_h)
    g_factors = [(tuple(p), -(1.0 - b), ls) for (p, b), ls in
                 zip(problem.fields.divisor.cone, problem.fields.log_s_sq)]
    g_log = g_smooth + sum(e * ls for _, e, ls in g_factors) if g_factors else g_smooth
    g_density = SingularField(values=np.exp(g_log), smooth_log=g_smooth,
                              factors=g_factors)
    h_factors = [(tuple(p), ak, lt) for (p, ak), lt in
                 zip(problem.fields.divisor.parabolic, problem.fields.log_t_sq)]
    h_log = 2.0 * f + (sum(e * lt for _, e, lt in h_factors) if h_factors else 0.0)
    h_factor = SingularField(values=np.exp(h_log), smooth_log=2.0 * f,
                             factors=h_factors)
    report = {
        "deltas": deltas,
        "lam": lam,
        "lam_min": lam_min,
        "C_sigma": C_sigma,
        "sigma": problem.sigma,
        "sup_margins": sup_margins,
        "iterations": [i["iterations"] for i in infos],
        "d_sup": d_sup,
        "mask_radius": radius,
        "na_report": na.to_dict(),
    }
    return f, g_density, h_factor, w, report


def assembled_residual(problem, f, delta, lam, mask_radius=None):
    """Residual of the assembled pair against the phase equation, computed
    through the assembled exponent algebra (independent route from
    eb_residual's F-form); masked sup and weighted global norms."""
    s = problem.surface
    u0d = problem.u0_delta(delta)
    Phi_h = np.exp(2.0 * f + u0d)
    log_rho_g = (4.0 * problem.alpha * problem.tau * f
                 - 2.0 * problem.alpha * Phi_h)
    for (_, b), ls in zip(problem.fields.divisor.cone, problem.fields.log_s_sq):
        log_rho_g = log_rho_g + (b - 1.0) * np.logaddexp(ls, np.log(delta))
    rho_g = lam * np.exp(log_rho_g)
    R = (s.laplacian(f) + 0.5 * (Phi_h - problem.tau) * rho_g
         + problem.params.N_tilde)
    pts = problem.marked_points()
    if mask_radius is None:
        mask_radius = 2.0 * problem.sigma
    mask = mask_away_from_points(s, pts, mask_radius)
    v0 = problem.v0_delta(delta)
    weighted = np.abs(R) / (1.0 + lam * np.exp(-v0))
    return {
        "sup_masked": float(np.max(np.abs(R)[mask])),
        "weighted_global": float(np.max(weighted)),
        "mask_radius": mask_radius,
    }
