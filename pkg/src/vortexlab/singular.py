"""Smoothing ladder toward singular gravitating vortices.

Runs the coupled solve over a decreasing list of smoothing parameters,
monitors Cauchy behaviour in sup norm on a compact set K away from the
marked points, and fits the predicted local exponents at cone/parabolic
points.

Exponent fits regress the state against the matched smoothed section
coordinate log(|s|^2 + eps) (equal to 2*log dist + const up to the
smoothing scale), with known coincident log factors subtracted first;
this measures exactly the exponent the limit metric/Hermitian factor is
supposed to carry while staying finite at every smoothing level.  The
fit annulus adapts to the measured smoothing radius sqrt(eps/A), where
A is the local quadratic coefficient of |s|^2; fits whose annulus cannot
be resolved against the grid or the neighbour separation are flagged.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .coupled import continue_alpha, decoupled_state, make_problem, solve_at_alpha
from .errors import ConvergenceFailure
from .fieldio import worker_count
from .verify import holder_quotient

__all__ = ["FitRecord", "LadderReport", "run_ladder", "mask_away_from_points",
           "conical_fit", "parabolic_fit", "regular_point_slope"]


@dataclass
class FitRecord:
    point: tuple
    kind: str                 # "cone" | "parabolic"
    weight: float
    slope: float              # fitted d log(field) / d log dist
    target: float
    deviation: float
    r_in: float
    r_out: float
    npoints: int
    resolved: bool
    oscillation: float        # osc of the Hoelder-factor combination
    note: str = ""


@dataclass
class LadderReport:
    eps_list: list
    states: list
    d_f: list = field(default_factory=list)     # sup |f_m - f_{m+1}| on K
    d_u: list = field(default_factory=list)
    rho_K: list = field(default_factory=list)
    holder_f: list = field(default_factory=list)
    holder_u: list = field(default_factory=list)
    wp_integrals: list = field(default_factory=list)
    lp_exponent: float = 2.0
    newton_counts: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    fits: list = field(default_factory=list)

    @property
    def d_sup(self):
        return [max(a, b) for a, b in zip(self.d_f, self.d_u)]


def _marked_points(divisor):
    return [tuple(p) for p in divisor.all_points().keys()]


def mask_away_from_points(surface, points, radius):
    mask = np.ones(surface.shape, dtype=bool)
    for p in points:
        mask &= surface.distance_field(p) > radius
    return mask


def _local_quadratic_coeff(surface, log_s, point):
    """A with |s|^2 ~ A d^2 near the point, from a thin probe annulus."""
    d = surface.distance_field(point)
    h = surface.h
    sel = (d > 2 * h) & (d < 8 * h)
    if not np.any(sel):
        return 1.0
    return float(np.exp(np.median(log_s[sel] - 2.0 * np.log(d[sel]))))


def _fit_annulus(surface, point, other_points, eps, A):
    # stay close to the smoothing radius: the inner part would regress the
    # saturated coordinate, the far zone picks up the neighbours' smooth
    # response (calibrated on the default torus configuration)
    h = surface.h
    d_smooth = np.sqrt(eps / A)
    r_in = max(4.0 * h, 0.6 * d_smooth)
    guard = 0.35 * (np.pi * surface.r if surface.backend == "sphere" else 1.0)
    for q in other_points:
        guard = min(guard, 0.45 * surface.distance_points(point, q))
    r_out = min(max(2.0 * d_smooth, 2.5 * r_in), guard)
    return r_in, r_out


def _slope_fit(surface, values, coord, point, r_in, r_out, d_resolve=None):
    d = surface.distance_field(point)
    sel = (d >= r_in) & (d <= r_out)
    n = int(np.count_nonzero(sel))
    ok = n >= 40 and r_out > 1.3 * r_in
    if d_resolve is not None:
        # the annulus must contain the smoothing transition zone, else the
        # regression sees only the saturated coordinate
        ok = ok and r_out >= 0.999 * d_resolve
    if not ok:
        return np.nan, n, False
    x = coord[sel]
    y = values[sel]
    vx = np.var(x)
    if vx <= 1e-12:
        return np.nan, n, False
    slope = float(np.cov(x, y, bias=True)[0, 1] / vx)
    return slope, n, True


def conical_fit(surface, state, divisor_fields, j, eps, annulus=None):
    """Exponent fit of log(1 - lap u) at cone point j; target 2*beta - 2."""
    point, beta = divisor_fields.divisor.cone[j]
    log_s = divisor_fields.log_s_sq[j]
    rho = 1.0 - surface.laplacian(state.u)
    y = np.log(np.maximum(rho, 1e-300))
    coord = np.logaddexp(log_s, np.log(eps))
    others = [q for q in _marked_points(divisor_fields.divisor)
              if q != tuple(point)]
    A = _local_quadratic_coeff(surface, log_s, point)
    if annulus is None:
        r_in, r_out = _fit_annulus(surface, point, others, eps, A)
    else:
        r_in, r_out = annulus
    raw, n, ok = _slope_fit(surface, y, coord, point, r_in, r_out,
                            d_resolve=2.0 * np.sqrt(eps / A))
    slope = 2.0 * raw if ok else np.nan
    target = 2.0 * beta - 2.0
    # Hoelder-factor oscillation: log rho + (1 - beta) log|s|^2 on the annulus
    d = surface.distance_field(point)
    sel = (d >= r_in) & (d <= r_out)
    osc = float(np.ptp((y + (1.0 - beta) * log_s)[sel])) if np.any(sel) else np.nan
    return FitRecord(point=tuple(point), kind="cone", weight=beta, slope=slope,
                     target=target,
                     deviation=abs(slope - target) if ok else np.inf,
                     r_in=r_in, r_out=r_out, npoints=n, resolved=ok,
                     oscillation=osc)


def parabolic_fit(surface, state, divisor_fields, k, eps, annulus=None):
    """Exponent fit of log Phi at parabolic point k.

    Isolated point: target 2*alpha_k.  Coincident with a Higgs zero of
    multiplicity n: the zero's (exactly known) log factor is subtracted
    before the regression and 2n is added back, so the target is
    2*alpha_k + 2n.
    """
    point, ak = divisor_fields.divisor.parabolic[k]
    log_t = divisor_fields.log_t_sq[k]
    n_coincident = 0
    for p, n in divisor_fields.divisor.zeros:
        if tuple(p) == tuple(point):
            n_coincident = n
    y = np.log(np.maximum(state.Phi, 1e-300))
    if n_coincident:
        y = y - n_coincident * log_t
    coord = np.logaddexp(log_t, np.log(eps))
    others = [q for q in _marked_points(divisor_fields.divisor)
              if q != tuple(point)]
    A = _local_quadratic_coeff(surface, log_t, point)
    if annulus is None:
        r_in, r_out = _fit_annulus(surface, point, others, eps, A)
    else:
        r_in, r_out = annulus
    raw, n, ok = _slope_fit(surface, y, coord, point, r_in, r_out,
                            d_resolve=2.0 * np.sqrt(eps / A))
    slope = 2.0 * raw + 2.0 * n_coincident if ok else np.nan
    target = 2.0 * ak + 2.0 * n_coincident
    return FitRecord(point=tuple(point), kind="parabolic", weight=ak,
                     slope=slope, target=target,
                     deviation=abs(slope - target) if ok else np.inf,
                     r_in=r_in, r_out=r_out, npoints=n, resolved=ok,
                     oscillation=np.nan,
                     note=f"coincident_zero_n={n_coincident}")


def regular_point_slope(surface, state, point, r_in=None, r_out=None):
    """Radial log-log slope of the metric density at a smooth point
    (control: should vanish)."""
    h = surface.h
    r_in = 4.0 * h if r_in is None else r_in
    r_out = 16.0 * h if r_out is None else r_out
    rho = 1.0 - surface.laplacian(state.u)
    y = np.log(np.maximum(rho, 1e-300))
    d = surface.distance_field(point)
    coord = np.log(np.maximum(d, 1e-300))
    slope, n, ok = _slope_fit(surface, y, coord, point, r_in, r_out)
    return slope if ok else np.nan


def run_ladder(surface, divisor, tau, alpha, eps_list, n_steps=16,
               rho_K="auto", tol=1e-9, gamma=0.25, seed=0, fit=True):
    """Drive the smoothing ladder; warm-start each rung from the previous.

    Rung 0 runs the full continuation from the decoupled endpoint; later
    rungs reuse the previous rung's solution as the Newton initial guess at
    the target coupling (falling back to a full path on failure).  Failures
    truncate the ladder and are recorded.
    """
    eps_list = list(eps_list)
    if any(e2 >= e1 for e1, e2 in zip(eps_list, eps_list[1:])):
        raise ConvergenceFailure("smoothing rungs must be strictly decreasing")
    report = LadderReport(eps_list=eps_list, states=[])
    rng = np.random.default_rng(seed)
    points = [tuple(p) for p in divisor.all_points().keys()]
    prev_state = None
    problems = []
    for m, eps in enumerate(eps_list):
        problem = make_problem(surface, divisor, tau=tau, eps=eps)
        problems.append(problem)
        try:
            if prev_state is None:
                st0 = decoupled_state(problem, tol=tol)
                states = continue_alpha(problem, st0, alpha, n_steps=n_steps,
                                        tol=tol)
                state = states[-1]
                count = sum(len(s.newton_log) for s in states)
            else:
                try:
                    state = solve_at_alpha(problem, alpha, prev_state.f_tilde,
                                           prev_state.u, tol=tol)
                    count = len(state.newton_log)
                except ConvergenceFailure:
                    st0 = decoupled_state(problem, tol=tol)
                    states = continue_alpha(problem, st0, alpha,
                                            n_steps=n_steps, tol=tol)
                    state = states[-1]
                    count = sum(len(s.newton_log) for s in states)
        except ConvergenceFailure as exc:
            report.failures.append({"eps": eps, "error": str(exc)})
            break
        report.states.append(state)
        report.newton_counts.append(count)
        report.holder_f.append(holder_quotient(surface, state.f_tilde, gamma,
                                               1000, np.random.default_rng(seed)))
        report.holder_u.append(holder_quotient(surface, state.u, gamma,
                                               1000, np.random.default_rng(seed)))
        p = _lp_exp(divisor)
        report.lp_exponent = p
        report.wp_integrals.append(
            float(surface.integrate(problem.fields.weight_W(eps) ** p)))
        prev_state = state

    # Cauchy distances between consecutive rungs on K
    for m in range(len(report.states) - 1):
        eps_fine = eps_list[m + 1]
        if rho_K == "auto":
            A = 1.0
            if problems[m + 1].fields.log_s_sq:
                A = _local_quadratic_coeff(
                    surface, problems[m + 1].fields.log_s_sq[0],
                    divisor.cone[0][0])
            radius = max(8.0 * surface.h, float(np.sqrt(eps_fine / A)))
        else:
            radius = float(rho_K)
        mask = mask_away_from_points(surface, points, radius)
        if not np.any(mask):
            radius = 8.0 * surface.h
            mask = mask_away_from_points(surface, points, radius)
        report.rho_K.append(radius)
        a, b = report.states[m], report.states[m + 1]
        report.d_f.append(float(np.max(np.abs(a.f_tilde - b.f_tilde)[mask])))
        report.d_u.append(float(np.max(np.abs(a.u - b.u)[mask])))

    if fit and report.states:
        fin = report.states[-1]
        eps_fin = eps_list[len(report.states) - 1]
        fields = problems[len(report.states) - 1].fields
        jobs = [lambda j=j: conical_fit(surface, fin, fields, j, eps_fin)
                for j in range(len(divisor.cone))]
        jobs += [lambda k=k: parabolic_fit(surface, fin, fields, k, eps_fin)
                 for k in range(len(divisor.parabolic))]
        if jobs:
            # fits at distinct points are independent; VORTEXLAB_THREADS
            # caps the workers
            with ThreadPoolExecutor(min(worker_count(), len(jobs))) as pool:
                report.fits = [f.result()
                               for f in [pool.submit(j) for j in jobs]]
    return report


def _lp_exp(divisor):
    betas = [b for _, b in divisor.cone]
    if not betas:
        return 2.0
    return 0.5 * (1.0 + min(1.0 / (1.0 - b) for b in betas))
