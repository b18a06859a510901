"""Newton/Krylov building blocks shared by the scalar and coupled solves.

All linearized operators here have the form  lap + diag(V)  with V >= 0
(pointwise), solved matrix-free by preconditioned CG with the spectral
inverse (lap + mean V)^-1 as preconditioner.  The coupled 2x2 system is
nonsymmetric and goes through restarted GMRES with a blockwise
(lap + 1)^-1 preconditioner; small grids fall back to a dense solve.
"""

from __future__ import annotations

import time

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .errors import ConvergenceFailure

__all__ = ["solve_helmholtz", "solve_block_newton_step", "damped_newton_scalar"]


def solve_helmholtz(surface, V, rhs, rtol=1e-13, atol=1e-13, maxiter=400):
    """Solve (lap + V) x = rhs with pointwise V >= 0 (not identically 0).

    The absolute floor keeps CG from grinding past the floating-point floor
    on near-zero right-hand sides (where the recursion coefficients turn
    NaN); it sits orders of magnitude below every nonlinear accept
    tolerance in the package.
    """
    shape = surface.shape
    size = rhs.size
    V = np.broadcast_to(V, shape)
    vbar = float(np.mean(V))
    if vbar < 0:
        raise ValueError("helmholtz solve needs a nonnegative zeroth-order term")
    if vbar < 1e-300:
        # weight underflowed to zero: pseudo-inverse on the mean mode
        mean = surface.integrate(rhs) / (2.0 * np.pi)
        return surface.solve_shifted(0.0, rhs - mean)

    def apply_op(x):
        f = x.reshape(shape)
        return (surface.laplacian(f) + V * f).ravel()

    def apply_pre(x):
        return surface.solve_shifted(vbar, x.reshape(shape)).ravel()

    A = LinearOperator((size, size), matvec=apply_op)
    M = LinearOperator((size, size), matvec=apply_pre)
    x, info = cg(A, rhs.ravel(), rtol=rtol, atol=atol, maxiter=maxiter, M=M)
    if info != 0:
        raise ConvergenceFailure(f"CG failed to converge (info={info})")
    return x.reshape(shape)


def damped_newton_scalar(surface, residual_fn, lin_weight_fn, x0, tol=1e-10,
                         max_iter=60, max_backtrack=30, guard=None, log=None,
                         norm="inf"):
    """Damped Newton for scalar problems with residual r(x) and linearization
    lap + diag(lin_weight(x)).

    Armijo backtracking on ||r||_2^2 with factor 1/2; optional state guard
    (e.g. metric positivity) rejects trial steps before evaluation.
    Returns the solution; appends per-iteration dicts to ``log`` if given.
    """
    x = x0.copy()
    r = residual_fn(x)
    history = []
    for it in range(max_iter):
        rn_inf = float(np.max(np.abs(r)))
        rn_l2 = float(np.sqrt(surface.integrate(r * r)))
        history.append(rn_inf)
        if log is not None:
            log.append({"iter": it, "residual_inf": rn_inf, "residual_l2": rn_l2,
                        "time": time.time()})
        if rn_inf < tol:
            return x
        V = lin_weight_fn(x)
        d = solve_helmholtz(surface, V, -r)
        phi0 = rn_l2**2
        s = 1.0
        accepted = False
        for _ in range(max_backtrack + 1):
            xt = x + s * d
            if guard is not None and not guard(xt):
                s *= 0.5
                continue
            rt = residual_fn(xt)
            phit = float(surface.integrate(rt * rt))
            if phit <= (1.0 - 1e-4 * s) * phi0 or phit < tol**2:
                x, r = xt, rt
                accepted = True
                if log is not None:
                    log[-1]["step"] = s
                break
            s *= 0.5
        if not accepted:
            raise ConvergenceFailure(
                f"Newton stagnated at residual {rn_inf:.3e}", history
            )
    raise ConvergenceFailure(
        f"Newton did not reach tol={tol:g} in {max_iter} iterations "
        f"(residual {history[-1]:.3e})",
        history,
    )


def solve_block_newton_step(surface, apply_jac, rhs1, rhs2, rtol=1e-12,
                            atol=1e-13, restart=50, max_krylov=500,
                            dense_threshold=64, model_coeffs=None):
    """Solve the linearized 2x2 system J (df, du) = (rhs1, rhs2).

    apply_jac maps a pair of fields to a pair of fields.  GMRES,
    preconditioned by the exact spectral inverse of the frozen-coefficient
    model system when ``model_coeffs`` (m1, m2, m3, m4) is supplied and
    stays definite, else by blockwise (lap+1)^-1.  Dense direct fallback on
    small grids when Krylov stalls.
    """
    shape = surface.shape
    size = rhs1.size

    def matvec(x):
        a, b = apply_jac(x[:size].reshape(shape), x[size:].reshape(shape))
        return np.concatenate([a.ravel(), b.ravel()])

    use_model = False
    if model_coeffs is not None:
        m1, m2, m3, m4 = model_coeffs
        # det(lam) = lam^2 + (m1 + m4 - m2 m3) lam + m1 m4 must stay positive
        if m1 * m4 > 0 and (m1 + m4 - m2 * m3) > -2.0 * np.sqrt(m1 * m4) * 0.9:
            use_model = True

    if use_model:

        def prevec(x):
            a, b = surface.solve_block_model(
                model_coeffs, x[:size].reshape(shape), x[size:].reshape(shape)
            )
            return np.concatenate([a.ravel(), b.ravel()])

    else:

        def prevec(x):
            a = surface.solve_shifted(1.0, x[:size].reshape(shape))
            b = surface.solve_shifted(1.0, x[size:].reshape(shape))
            return np.concatenate([a.ravel(), b.ravel()])

    b = np.concatenate([rhs1.ravel(), rhs2.ravel()])
    x, niter, converged = _gmres_left(matvec, prevec, b, rtol=rtol, atol=atol,
                                      restart=restart, max_krylov=max_krylov)
    if not converged:
        n_side = int(np.sqrt(size)) if surface.backend == "torus" else None
        if n_side is not None and n_side <= dense_threshold:
            x = _dense_block_solve(size, matvec, b)
        else:
            raise ConvergenceFailure(
                f"GMRES failed after {niter} iterations"
            )
    return x[:size].reshape(shape), x[size:].reshape(shape), niter


def _gmres_left(matvec, prevec, b, rtol, atol, restart, max_krylov):
    """Restarted GMRES with left preconditioning; convergence is tested on
    the preconditioned residual, whose floating-point floor is O(eps) for a
    well-preconditioned system (the unpreconditioned norm bottoms out at
    eps * lambda_max and cannot certify tight relative tolerances)."""
    x = np.zeros_like(b)
    mb = prevec(b)
    target = max(rtol * np.linalg.norm(mb), atol)
    total = 0
    for _ in range(max(1, int(np.ceil(max_krylov / restart)))):
        r = prevec(b - matvec(x))
        beta = np.linalg.norm(r)
        if beta <= target:
            return x, total, True
        m = min(restart, max_krylov - total)
        if m <= 0:
            break
        V = np.empty((m + 1, b.size))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        V[0] = r / beta
        j_used = 0
        for j in range(m):
            total += 1
            w = prevec(matvec(V[j]))
            for i in range(j + 1):
                H[i, j] = w @ V[i]
                w -= H[i, j] * V[i]
            H[j + 1, j] = np.linalg.norm(w)
            breakdown = H[j + 1, j] < 1e-300
            if not breakdown:
                V[j + 1] = w / H[j + 1, j]
            for i in range(j):
                t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
                H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = t
            denom = np.hypot(H[j, j], H[j + 1, j])
            cs[j] = H[j, j] / denom if denom else 1.0
            sn[j] = H[j + 1, j] / denom if denom else 0.0
            H[j, j] = denom
            H[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            j_used = j + 1
            if abs(g[j + 1]) <= target or breakdown or total >= max_krylov:
                break
        y = np.linalg.solve(np.triu(H[:j_used, :j_used]), g[:j_used])
        x = x + y @ V[:j_used]
        if abs(g[j_used]) <= target:
            return x, total, True
        if total >= max_krylov:
            break
    r = prevec(b - matvec(x))
    return x, total, bool(np.linalg.norm(r) <= max(10.0 * target, atol))


def _dense_block_solve(size, matvec, b):
    n = 2 * size
    cols = np.empty((n, n))
    e = np.zeros(n)
    for j in range(n):
        e[j] = 1.0
        cols[:, j] = matvec(e)
        e[j] = 0.0
    return np.linalg.solve(cols, b)
