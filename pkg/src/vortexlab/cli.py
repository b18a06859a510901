"""Command-line interface: config ingestion, run orchestration, artifact
persistence, verification, and heatmap export.

Subcommands: solve-vortex, solve-tke, solve-gv, sweep-eps, solve-eb,
verify, export.  Exit codes: 0 ok, 2 config/validation, 3 convergence or
verification failure, 4 admissibility refusal.
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
import time

import numpy as np

from . import __version__
from .bogomolnyi import (
    assembled_residual,
    check_numerical_assumption,
    delta_ladder_and_assemble,
    eb_residual,
    make_eb_problem,
    supersolution_margin,
)
from .coupled import SolveState, continue_alpha, decoupled_state, make_problem, residual
from .errors import (
    AssumptionNotSatisfied,
    ConfigError,
    ConvergenceFailure,
    VortexlabError,
)
from .fieldio import read_field, sha256_file, write_field, write_jsonl, write_pgm
from .fields import DivisorData, build_divisor_fields
from .singular import run_ladder
from .surface import build_surface, check_field
from .verify import Certificate, certify_state, certify_tke, certify_vortex
from .vortex import make_vortex_problem, solve_twisted_ke, solve_vortex

_COMMON_KEYS = {"backend", "resolution", "divisor", "seed", "label", "tolerances"}
_ALLOWED_KEYS = {
    "solve-vortex": _COMMON_KEYS | {"tau", "twist", "t"},
    "solve-tke": _COMMON_KEYS | {"epsilon", "t"},
    "solve-gv": _COMMON_KEYS | {"tau", "alpha", "epsilon"},
    "sweep-eps": _COMMON_KEYS | {"tau", "alpha", "epsilon", "fit"},
    "solve-eb": _COMMON_KEYS | {"tau", "alpha", "delta", "lambda", "sigma",
                                "margin", "lambda_pair"},
}
_DIVISOR_KEYS = {"zeros", "cone", "parabolic"}
_POINT_KEYS = {"zeros": {"point", "n"}, "cone": {"point", "beta"},
               "parabolic": {"point", "alpha_k"}}
_TWIST_KEYS = {"b", "modes"}
_TOL_KEYS = {"residual", "multistart", "assembled_residual"}

_COVERAGE = {
    "solve-vortex": "covered: twisted-vortex existence/uniqueness "
                    "(no genus restriction)",
    "solve-tke": "covered: twisted Kaehler-Einstein, negative constant",
    "solve-gv": "experimental: continuation existence is proven for genus >= 2;"
                " model backends are genus 0/1",
    "sweep-eps": "experimental: continuation existence is proven for genus >= 2;"
                 " model backends are genus 0/1",
    "solve-eb": "covered (sphere): Bogomol'nyi-phase existence under the "
                "admissibility inequalities",
}


def load_config(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc


def validate_config(cfg, command):
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    allowed = _ALLOWED_KEYS[command]
    for key in cfg:
        if key not in allowed:
            raise ConfigError(f"unknown config key {key!r} for {command}")
    for key in ("backend", "resolution"):
        if key not in cfg:
            raise ConfigError(f"missing config key {key!r}")
    div = cfg.get("divisor", {})
    if not isinstance(div, dict):
        raise ConfigError("divisor must be an object")
    for key in div:
        if key not in _DIVISOR_KEYS:
            raise ConfigError(f"unknown divisor key {key!r}")
    for group, entries in div.items():
        for e in entries:
            for key in e:
                if key not in _POINT_KEYS[group]:
                    raise ConfigError(f"unknown key {key!r} in divisor {group!r}")
    twist = cfg.get("twist")
    if twist is not None:
        for key in twist:
            if key not in _TWIST_KEYS:
                raise ConfigError(f"unknown twist key {key!r}")
    tol = cfg.get("tolerances")
    if tol is not None:
        for key in tol:
            if key not in _TOL_KEYS:
                raise ConfigError(f"unknown tolerances key {key!r}")
    return cfg


def build_divisor(cfg):
    div = cfg.get("divisor", {})
    zeros = tuple((tuple(e["point"]), int(e["n"])) for e in div.get("zeros", []))
    cone = tuple((tuple(e["point"]), float(e["beta"])) for e in div.get("cone", []))
    parab = tuple((tuple(e["point"]), float(e["alpha_k"]))
                  for e in div.get("parabolic", []))
    return DivisorData(zeros=zeros, cone=cone, parabolic=parab)


def build_setup(cfg):
    surface = build_surface(cfg["backend"], int(cfg["resolution"]))
    divisor = build_divisor(cfg)
    for p in divisor.all_points():
        if not surface.point_off_grid(p):
            raise ConfigError(
                f"marked point {list(p)} coincides with a grid node; "
                "perturb it off-grid"
            )
    return surface, divisor


def synthesize_twist(surface, twist_cfg):
    """Mean-free twist potential from the mode list in the config."""
    if twist_cfg is None:
        return 0.0, None
    b = float(twist_cfg.get("b", 0.0))
    modes = twist_cfg.get("modes", [])
    if not modes:
        return b, None
    norm = []
    for m in modes:
        if len(m) != 4:
            raise ConfigError("twist modes must be 4-element lists")
        if surface.backend == "torus":
            kx, ky, a, c = m
            if (int(kx), int(ky)) == (0, 0):
                raise ConfigError("twist mode (0,0) is not mean-free")
            norm.append((int(kx), int(ky), float(a), float(c)))
        else:
            l, mm, a, c = m
            if int(l) == 0:
                raise ConfigError("twist mode l=0 is not mean-free")
            norm.append((int(l), int(mm), float(a), float(c)))
    if surface.backend == "torus":
        F = surface.eval_modes(norm, surface.X, surface.Y)
    else:
        F = surface.eval_modes_grid(norm)
    return b, F


def run_sequence(cfg):
    """Alpha target and step count for continuation commands."""
    a = cfg.get("alpha", {"target": "alpha_star", "steps": 16})
    if isinstance(a, dict):
        extra = set(a) - {"target", "steps"}
        if extra:
            raise ConfigError(f"unknown alpha key {extra.pop()!r}")
        return a.get("target", "alpha_star"), int(a.get("steps", 16))
    return float(a), 16


class ArtifactWriter:
    def __init__(self, outdir, command, cfg, seed, quiet=False, started=None):
        self.outdir = outdir
        self.command = command
        self.cfg = cfg
        self.seed = seed
        self.quiet = quiet
        self.t0 = time.time() if started is None else started
        self.files = {}
        os.makedirs(outdir, exist_ok=True)
        os.makedirs(os.path.join(outdir, "fields"), exist_ok=True)
        self.write_json("config.json", cfg)

    def _register(self, relpath):
        self.files[relpath] = sha256_file(os.path.join(self.outdir, relpath))

    def write_json(self, relpath, obj):
        path = os.path.join(self.outdir, relpath)
        with open(path, "w") as fh:
            json.dump(obj, fh, sort_keys=True, indent=1, default=float)
        self._register(relpath)

    def write_jsonl(self, relpath, records):
        write_jsonl(os.path.join(self.outdir, relpath), records)
        self._register(relpath)

    def field(self, name, values, surface, extra=None):
        rel = os.path.join("fields", name + ".vfield")
        write_field(os.path.join(self.outdir, rel), values, surface.backend,
                    surface.n if surface.backend == "torus" else surface.L,
                    name, extra)
        self._register(rel)

    def finalize(self, extra=None):
        meta = {
            "command": self.command,
            "files": self.files,
            "label": self.cfg.get("label", ""),
            "seed": self.seed,
            "theorem_coverage": _COVERAGE.get(self.command, ""),
            "runtime_seconds": time.time() - self.t0,
            "versions": {
                "vortexlab": __version__,
                "numpy": np.__version__,
                "python": platform.python_version(),
            },
        }
        if extra:
            meta.update(extra)
        path = os.path.join(self.outdir, "metadata.json")
        with open(path, "w") as fh:
            json.dump(meta, fh, sort_keys=True, indent=1, default=float)
        if not self.quiet:
            print(f"[vortexlab] artifact written to {self.outdir}")
        return meta


# --- runners -------------------------------------------------------------


def run_solve_vortex(cfg, outdir, seed, quiet):
    t_start = time.time()
    surface, divisor = build_setup(cfg)
    tau = float(cfg["tau"])
    b, F = synthesize_twist(surface, cfg.get("twist"))
    t = float(cfg.get("t", 1.0))
    tol = float(cfg.get("tolerances", {}).get("residual", 1e-9))
    multistart = int(cfg.get("tolerances", {}).get("multistart", 3))
    fields = build_divisor_fields(surface, divisor)
    weight = np.exp(fields.log_phi_sq)
    problem = make_vortex_problem(surface, weight, tau, divisor.N, b=b, F=F, t=t)
    f = solve_vortex(problem, tol=tol * 0.1)
    cert = certify_vortex(surface, problem, f, seed=seed, multistart=multistart,
                          tol=tol)
    art = ArtifactWriter(outdir, "solve-vortex", cfg, seed, quiet, started=t_start)
    art.field("f_tilde", f, surface)
    art.field("Phi", problem.phi0_sq * np.exp(2.0 * f), surface)
    art.write_json("certificate.json", cert.to_dict())
    art.write_jsonl("iterations.jsonl", problem.log)
    art.finalize()
    if not cert.all_passed:
        raise ConvergenceFailure("certificate checks failed")
    return 0


def run_solve_tke(cfg, outdir, seed, quiet):
    t_start = time.time()
    surface, divisor = build_setup(cfg)
    eps = float(cfg.get("epsilon", 0.1))
    t = float(cfg.get("t", 1.0))
    tol = float(cfg.get("tolerances", {}).get("residual", 1e-9))
    fields = build_divisor_fields(surface, divisor)
    chi_tilde = surface.euler_char - divisor.sum_one_minus_beta
    F_xi = fields.F_xi(eps)
    log = []
    u = solve_twisted_ke(surface, chi_tilde, F_xi, t=t, tol=tol * 0.1, log=log)
    cert = certify_tke(surface, chi_tilde, F_xi, u, t=t, tol=tol)
    art = ArtifactWriter(outdir, "solve-tke", cfg, seed, quiet, started=t_start)
    art.field("u", u, surface)
    art.field("metric_density", 1.0 - surface.laplacian(u), surface)
    art.write_json("certificate.json", cert.to_dict())
    art.write_jsonl("iterations.jsonl", log)
    art.finalize(extra={"chi_tilde": chi_tilde})
    if not cert.all_passed:
        raise ConvergenceFailure("certificate checks failed")
    return 0


def run_solve_gv(cfg, outdir, seed, quiet):
    t_start = time.time()
    surface, divisor = build_setup(cfg)
    tau = float(cfg["tau"])
    eps = float(cfg.get("epsilon", 0.1))
    tol = float(cfg.get("tolerances", {}).get("residual", 1e-9))
    target, steps = run_sequence(cfg)
    problem = make_problem(surface, divisor, tau=tau, eps=eps)
    if target == "alpha_star":
        target = problem.params.alpha_star
    state0 = decoupled_state(problem, tol=tol)
    states = continue_alpha(problem, state0, float(target), n_steps=steps,
                            tol=tol)
    final = states[-1]
    cert = certify_state(problem, final, seed=seed)
    art = ArtifactWriter(outdir, "solve-gv", cfg, seed, quiet, started=t_start)
    art.field("f_tilde", final.f_tilde, surface)
    art.field("u", final.u, surface)
    art.field("Phi", final.Phi, surface)
    art.write_json("certificate.json", cert.to_dict())
    path_log = [{"alpha": st.alpha, "c_tilde": st.c_tilde,
                 "residual": st.res_norm, "newton_steps": len(st.newton_log)}
                for st in states]
    art.write_jsonl("iterations.jsonl",
                    path_log + [e for st in states for e in st.newton_log])
    art.finalize(extra={"alpha": final.alpha, "alpha_star":
                        problem.params.alpha_star})
    if not cert.all_passed:
        raise ConvergenceFailure("certificate checks failed")
    return 0


def run_sweep_eps(cfg, outdir, seed, quiet):
    t_start = time.time()
    surface, divisor = build_setup(cfg)
    tau = float(cfg["tau"])
    eps = cfg.get("epsilon", [0.1, 0.05, 0.025, 0.0125])
    eps_list = [float(e) for e in (eps if isinstance(eps, list) else [eps])]
    tol = float(cfg.get("tolerances", {}).get("residual", 1e-9))
    target, steps = run_sequence(cfg)
    probe = make_problem(surface, divisor, tau=tau, eps=eps_list[0])
    if target == "alpha_star":
        target = probe.params.alpha_star
    report = run_ladder(surface, divisor, tau, float(target), eps_list,
                        n_steps=steps, tol=tol, seed=seed,
                        fit=bool(cfg.get("fit", True)))
    if report.failures and not report.states:
        raise ConvergenceFailure(f"ladder failed: {report.failures}")
    final = report.states[-1]
    problem = make_problem(surface, divisor, tau=tau,
                           eps=eps_list[len(report.states) - 1])
    cert = certify_state(problem, final, seed=seed)
    art = ArtifactWriter(outdir, "sweep-eps", cfg, seed, quiet, started=t_start)
    art.field("f_tilde", final.f_tilde, surface)
    art.field("u", final.u, surface)
    art.write_json("certificate.json", cert.to_dict())
    art.write_json("ladder.json", {
        "eps": report.eps_list[: len(report.states)],
        "d_f": report.d_f,
        "d_u": report.d_u,
        "rho_K": report.rho_K,
        "holder_f": report.holder_f,
        "holder_u": report.holder_u,
        "wp_integrals": report.wp_integrals,
        "lp_exponent": report.lp_exponent,
        "newton_counts": report.newton_counts,
        "failures": report.failures,
        "fits": [vars(f) for f in report.fits],
    })
    art.write_jsonl("iterations.jsonl",
                    [{"eps": e, "newton_steps": c}
                     for e, c in zip(report.eps_list, report.newton_counts)])
    art.finalize(extra={"alpha": float(target)})
    if not cert.all_passed:
        raise ConvergenceFailure("certificate checks failed")
    return 0


def run_solve_eb(cfg, outdir, seed, quiet):
    t_start = time.time()
    surface, divisor = build_setup(cfg)
    alpha = cfg.get("alpha")
    tau = cfg.get("tau")
    deltas = cfg.get("delta", [0.1 * 0.5**k for k in range(7)])
    if not isinstance(deltas, list):
        deltas = [float(deltas)]
    tol = float(cfg.get("tolerances", {}).get("residual", 1e-10))
    problem = make_eb_problem(
        surface, divisor,
        alpha=float(alpha) if alpha is not None else None,
        tau=float(tau) if tau is not None else None,
        lam=cfg.get("lambda"), sigma=cfg.get("sigma"),
    )
    na = check_numerical_assumption(problem)
    art = ArtifactWriter(outdir, "solve-eb", cfg, seed, quiet, started=t_start)
    art.write_json("na_report.json", na.to_dict())
    if not na.all_passed:
        art.finalize(extra={"refused": True})
        raise AssumptionNotSatisfied(
            "admissibility inequalities fail; see na_report.json", na)
    log = []
    f, g_density, h_factor, w, report = delta_ladder_and_assemble(
        problem, deltas=[float(d) for d in deltas], tol=tol,
        margin=float(cfg.get("margin", 0.5)), log=log,
    )
    res = assembled_residual(problem, f, float(deltas[-1]), report["lam"])
    art.field("f_tilde", f, surface)
    art.field("supersolution_w", w, surface)
    art.field("metric_density", g_density.values, surface)
    art.field("hermitian_factor", h_factor.values, surface)
    # 1e-6 is the default-resolution figure; coarse grids have a larger
    # spectral floor and may override through tolerances
    res_bound = float(cfg.get("tolerances", {}).get("assembled_residual", 1e-6))
    cert = Certificate(seed=seed)
    cert.add("supersolution_margin_min", 0.0, min(report["sup_margins"]),
             tol=0.0, note="strict inequality pointwise, every rung")
    cert.add("assembled_residual_masked", res["sup_masked"], res_bound,
             tol=0.0)
    cert.constants.update({"lam": report["lam"], "lam_min": report["lam_min"],
                           "C_sigma": report["C_sigma"],
                           "alpha": problem.alpha, "tau": problem.tau})
    art.write_json("certificate.json", cert.to_dict())
    art.write_json("ladder.json", report)
    art.write_jsonl("iterations.jsonl", log)
    if bool(cfg.get("lambda_pair", False)):
        lam2 = 2.0 * report["lam"]
        prob2 = make_eb_problem(surface, divisor,
                                alpha=problem.alpha, lam=lam2,
                                sigma=problem.sigma)
        f2, _, _, _, rep2 = delta_ladder_and_assemble(
            prob2, deltas=[float(deltas[-1])], tol=tol,
            margin=float(cfg.get("margin", 0.5)))
        art.field("f_tilde_lam2", f2, surface)
        art.write_json("lambda_dependence.json", {
            "lam_pair": [report["lam"], lam2],
            "sup_difference": float(np.max(np.abs(f - f2))),
        })
    art.finalize(extra={"alpha": problem.alpha, "tau": problem.tau})
    if not cert.all_passed:
        raise ConvergenceFailure("certificate checks failed")
    return 0


_RUNNERS = {
    "solve-vortex": run_solve_vortex,
    "solve-tke": run_solve_tke,
    "solve-gv": run_solve_gv,
    "sweep-eps": run_sweep_eps,
    "solve-eb": run_solve_eb,
}


# --- verification of stored artifacts -----------------------------------


def run_verify(outdir, quiet=False):
    meta_path = os.path.join(outdir, "metadata.json")
    if not os.path.exists(meta_path):
        raise ConfigError(f"no artifact metadata in {outdir}")
    with open(meta_path) as fh:
        meta = json.load(fh)
    for rel, digest in meta.get("files", {}).items():
        actual = sha256_file(os.path.join(outdir, rel))
        if actual != digest:
            raise ConvergenceFailure(f"artifact file {rel} hash mismatch")
    command = meta["command"]
    with open(os.path.join(outdir, "config.json")) as fh:
        cfg = json.load(fh)
    with open(os.path.join(outdir, "certificate.json")) as fh:
        stored = json.load(fh)
    cert = _recompute_certificate(command, cfg, outdir, meta)
    fresh = cert.to_dict()
    mism = _compare_certificates(stored, fresh)
    if mism:
        raise ConvergenceFailure(
            "re-certification differs from the stored certificate: "
            + "; ".join(mism))
    if not cert.all_passed:
        raise ConvergenceFailure("certificate checks fail on re-verification")
    if not quiet:
        print(f"[vortexlab] verified {outdir}: "
              f"{len(fresh['checks'])} checks reproduced, all passed")
    return 0


def _load_field(outdir, name, surface=None):
    values, _ = read_field(os.path.join(outdir, "fields", name + ".vfield"))
    if surface is not None:
        check_field(surface, values)
    return values


def _recompute_certificate(command, cfg, outdir, meta):
    surface, divisor = build_setup(cfg)
    seed = int(meta.get("seed", 0))
    if command == "solve-vortex":
        tau = float(cfg["tau"])
        b, F = synthesize_twist(surface, cfg.get("twist"))
        fields = build_divisor_fields(surface, divisor)
        weight = np.exp(fields.log_phi_sq)
        problem = make_vortex_problem(surface, weight, tau, divisor.N, b=b,
                                      F=F, t=float(cfg.get("t", 1.0)))
        f = _load_field(outdir, "f_tilde", surface)
        tol = float(cfg.get("tolerances", {}).get("residual", 1e-9))
        multistart = int(cfg.get("tolerances", {}).get("multistart", 3))
        return certify_vortex(surface, problem, f, seed=seed,
                              multistart=multistart, tol=tol)
    if command == "solve-tke":
        eps = float(cfg.get("epsilon", 0.1))
        fields = build_divisor_fields(surface, divisor)
        chi_tilde = surface.euler_char - divisor.sum_one_minus_beta
        u = _load_field(outdir, "u", surface)
        tol = float(cfg.get("tolerances", {}).get("residual", 1e-9))
        return certify_tke(surface, chi_tilde, fields.F_xi(eps), u,
                           t=float(cfg.get("t", 1.0)), tol=tol)
    if command in ("solve-gv", "sweep-eps"):
        tau = float(cfg["tau"])
        if command == "solve-gv":
            eps = float(cfg.get("epsilon", 0.1))
        else:
            eps_cfg = cfg.get("epsilon", [0.1, 0.05, 0.025, 0.0125])
            eps_list = eps_cfg if isinstance(eps_cfg, list) else [eps_cfg]
            eps = float(eps_list[-1])
        problem = make_problem(surface, divisor, tau=tau, eps=eps)
        f = _load_field(outdir, "f_tilde", surface)
        u = _load_field(outdir, "u", surface)
        alpha = float(meta["alpha"])
        S1, S2 = residual(problem, alpha, f, u)
        state = SolveState(alpha=alpha, c_tilde=problem.c_tilde(alpha),
                           f_tilde=f, u=u,
                           Phi=problem.weight_t * np.exp(2.0 * f),
                           res1=S1, res2=S2,
                           params=problem.params.with_alpha(alpha))
        return certify_state(problem, state, seed=seed)
    if command == "solve-eb":
        problem = make_eb_problem(
            surface, divisor,
            alpha=float(meta["alpha"]),
            lam=cfg.get("lambda"), sigma=cfg.get("sigma"),
        )
        with open(os.path.join(outdir, "ladder.json")) as fh:
            ladder = json.load(fh)
        f = _load_field(outdir, "f_tilde", surface)
        w = _load_field(outdir, "supersolution_w", surface)
        lam = float(ladder["lam"])
        deltas = [float(d) for d in ladder["deltas"]]
        res = assembled_residual(problem, f, deltas[-1], lam)
        res_bound = float(cfg.get("tolerances", {}).get("assembled_residual",
                                                        1e-6))
        cert = Certificate(seed=int(meta.get("seed", 0)))
        margins = [supersolution_margin(problem, w, lam, d) for d in deltas]
        cert.add("supersolution_margin_min", 0.0, min(margins), tol=0.0,
                 note="strict inequality pointwise, every rung")
        cert.add("assembled_residual_masked", res["sup_masked"], res_bound,
                 tol=0.0)
        cert.constants.update({"lam": lam, "lam_min": ladder["lam_min"],
                               "C_sigma": ladder["C_sigma"],
                               "alpha": problem.alpha, "tau": problem.tau})
        return cert
    raise ConfigError(f"cannot verify artifacts of command {command!r}")


def _compare_certificates(stored, fresh):
    mism = []
    a = {c["name"]: c for c in stored.get("checks", [])}
    b = {c["name"]: c for c in fresh.get("checks", [])}
    if set(a) != set(b):
        mism.append(f"check sets differ: {sorted(set(a) ^ set(b))}")
        return mism
    for name in a:
        for key in ("lhs", "rhs", "passed"):
            if a[name][key] != b[name][key]:
                mism.append(f"{name}.{key}: {a[name][key]} != {b[name][key]}")
    return mism


def run_export(field_path, out_path, quiet=False):
    values, header = read_field(field_path)
    if out_path is None:
        out_path = os.path.splitext(field_path)[0] + ".pgm"
    meta = write_pgm(out_path, values)
    if not quiet:
        print(f"[vortexlab] wrote {out_path} "
              f"(min={meta['min']:.6g}, max={meta['max']:.6g})")
    return 0


# --- entry point ----------------------------------------------------------


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="vortexlab",
        description="gravitating-vortex and Bogomol'nyi-phase solvers on "
                    "compact model surfaces",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _RUNNERS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--verify-only", action="store_true")
        p.add_argument("--quiet", action="store_true")
    pv = sub.add_parser("verify")
    pv.add_argument("--out", required=True)
    pv.add_argument("--quiet", action="store_true")
    pe = sub.add_parser("export")
    pe.add_argument("--field", required=True)
    pe.add_argument("--out", default=None)
    pe.add_argument("--quiet", action="store_true")

    args = parser.parse_args(argv)
    try:
        if args.command == "verify":
            return run_verify(args.out, quiet=args.quiet)
        if args.command == "export":
            return run_export(args.field, args.out, quiet=args.quiet)
        if args.verify_only:
            return run_verify(args.out, quiet=args.quiet)
        cfg = validate_config(load_config(args.config), args.command)
        seed = int(args.seed if args.seed is not None else cfg.get("seed", 0))
        np.random.default_rng(seed)
        return _RUNNERS[args.command](cfg, args.out, seed, args.quiet)
    except AssumptionNotSatisfied as exc:
        print(f"[vortexlab] refused: {exc}", file=sys.stderr)
        return 4
    except ConvergenceFailure as exc:
        print(f"[vortexlab] solver failure: {exc}", file=sys.stderr)
        return 3
    except ConfigError as exc:
        print(f"[vortexlab] config error: {exc}", file=sys.stderr)
        return 2
    except VortexlabError as exc:
        print(f"[vortexlab] error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
