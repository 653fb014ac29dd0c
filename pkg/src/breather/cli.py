"""Command-line front end.

Exit codes: 0 success, 1 failed condition or solver/artifact error,
2 unreadable or malformed configuration / bad usage.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import io as bio
from .config import (ProblemSpec, derive_coefficients, load_spec, spec_from_dict,
                     spec_to_dict, validate)
from .energy import EnergyFunctional
from .exceptions import AuditFailed, BreatherError, MissingArtifact
from .fundsol import FundamentalSolutionTable, audit_assumptions
from .kernel import check_admissible, periodize
from .minimize import MinimizeOptions, minimize
from .reconstruction import diagnose, extend_profile, sweep_d

EXIT_OK, EXIT_FAIL, EXIT_PARSE = 0, 1, 2
SPEC_FILE = "spec.json"
SOLVE_FILE = "solve.json"


class ConfigError(Exception):
    pass


def _load(path) -> tuple:
    try:
        with open(path) as fh:
            doc = json.load(fh)
        return spec_from_dict(doc, base_dir=Path(path).parent), doc
    except BreatherError:
        raise
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from exc


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _effective_spec(args):
    """Spec written by ``solve`` if present, else the configuration file."""
    out = Path(args.out)
    if (out / SPEC_FILE).exists():
        return spec_from_dict(bio.read_json(out / SPEC_FILE)), bio.read_json(out / SPEC_FILE)
    return _load(args.config)


def _functional(spec, out):
    solve = bio.read_json(out / SOLVE_FILE) if (out / SOLVE_FILE).exists() else {}
    table = FundamentalSolutionTable.from_spec(spec)
    return EnergyFunctional(spec, table, subspace_k0=solve.get("subspace_k0"))


def _print(doc):
    print(json.dumps(bio._jsonable(doc), indent=2, sort_keys=True))


# ------------------------------------------------------------------ commands

def validation_report(spec: ProblemSpec) -> dict:
    co = derive_coefficients(spec)
    v = validate(spec)
    rep = {"coefficients": {k: str(getattr(co, k)) for k in
                            ("V_core", "alpha", "beta", "delta", "lam", "omega")},
           "validation": {k: (str(x) if not isinstance(x, (int, float, tuple)) else x)
                          for k, x in v.__dict__.items()}}
    ok = True
    if spec.nonlinearity == "averaged":
        kap = periodize(spec.kernel, spec.T, spec.discretization.M)
        kr = check_admissible(kap, spec.discretization.K)
        rep["kernel"] = {"admissible": kr.admissible, "route": kr.convexity_route,
                         "min": kr.min_val, "max": kr.max_val,
                         "hessian_spotcheck_min": kr.hessian_spotcheck_min}
        ok &= kr.admissible
    table = FundamentalSolutionTable.from_spec(spec)
    au = audit_assumptions(table)
    rep["audit"] = {"passed": au.passed, "a5_lower": au.a5_lower, "a5_upper": au.a5_upper,
                    "a6_witnesses": au.a6_witnesses, "a6_prime": au.a6_prime,
                    "a6_prime_bound": au.a6_prime_bound, "a6_prime_holds": au.a6_prime_holds,
                    "window": list(au.window)}
    ok &= au.passed
    rep["passed"] = bool(ok)
    return rep


def cmd_validate(args):
    spec, _ = _load(args.config)
    rep = validation_report(spec)
    if args.out:
        bio.write_json(_out(args) / "validation.json", rep)
    _print(rep)
    return EXIT_OK if rep["passed"] else EXIT_FAIL


def cmd_fundsol(args):
    spec, doc = _load(args.config)
    out = _out(args)
    man = bio.RunManifest.start(doc)
    with man.timed("fundsol"):
        table = FundamentalSolutionTable.from_spec(spec, k_max=args.k_max)
    man.record(bio.save_fundsol(out / bio.FUNDSOL_FILE, table))
    man.write(out)
    return EXIT_OK


def cmd_solve(args):
    spec, doc = _load(args.config)
    disc = {k: getattr(args, k) for k in ("K", "N", "M") if getattr(args, k) is not None}
    if disc:
        spec = spec.with_(**disc)
    if not args.force:
        validate(spec)
    out = _out(args)
    sdoc = spec_to_dict(spec)
    man = bio.RunManifest.start(sdoc, {"rng_seed": args.rng_seed, "seed": args.seed})
    with man.timed("fundsol"):
        table = FundamentalSolutionTable.from_spec(spec)
    fn = EnergyFunctional(spec, table, subspace_k0=args.subspace_k0)
    opts = MinimizeOptions(max_iters=args.max_iters, grad_tol=args.grad_tol, seed=args.seed,
                           k0=args.k0,
                           rng_seed=args.rng_seed, restarts=args.restarts,
                           strict=not args.force)
    p0 = bio.load_profile(args.init) if args.init else None
    with man.timed("solve"):
        res = minimize(fn, opts, p0=p0)
    man.record(bio.write_json(out / SPEC_FILE, sdoc))
    man.record(bio.write_json(out / SOLVE_FILE, {
        "subspace_k0": args.subspace_k0, "seed": args.seed, "k0": res.k0, "eps": res.eps,
        "seed_energy": res.seed_energy, "restarts": args.restarts, "rng_seed": args.rng_seed,
        "converged": res.converged, "run_energies": res.energies}))
    man.record(bio.save_profile(out / bio.PROFILE_FILE, res.profile))
    man.record(bio.write_json(out / bio.ENERGY_FILE, res.report.as_dict()))
    man.record(bio.save_trace(out / bio.TRACE_FILE, res.trace))
    man.record(bio.save_fundsol(out / bio.FUNDSOL_FILE, table))
    man.write(out)
    _print({"E": res.report.E_total, "grad_norm": res.report.grad_norm,
            "converged": res.converged, "seed_energy": res.seed_energy, "k0": res.k0})
    return EXIT_OK if res.converged else EXIT_FAIL


def cmd_reconstruct(args):
    out = Path(args.out)
    bio.require([out / bio.PROFILE_FILE])
    spec, sdoc = _effective_spec(args)
    fn = _functional(spec, out)
    prof = fn.conform(bio.load_profile(out / bio.PROFILE_FILE))
    man = bio.RunManifest.start(sdoc)
    with man.timed("reconstruct"):
        fld = extend_profile(prof, fn, r_max=args.r_max, n_ext=args.n_ext, periods=args.periods)
    man.record(bio.save_field(out / bio.FIELD_FILE, fld))
    man.write(out)
    return EXIT_OK


def verify_checks(rep, grad_tol, averaged):
    tol = grad_tol * max(1.0, abs(rep.energy_value))
    checks = {
        "el_residual": bool(np.all(rep.el_residual_per_mode <= tol)),
        "continuity": rep.continuity_mismatch <= 1e-12,
        "segment_energy_bounded": bool(np.all(np.isfinite(rep.segment_energy))),
        "energy_nonpositive": rep.energy_value <= 0,
    }
    if averaged:
        checks["f_monotone"] = rep.f_monotone
    return checks


def cmd_verify(args):
    out = Path(args.out)
    bio.require([out / bio.PROFILE_FILE])
    spec, sdoc = _effective_spec(args)
    fn = _functional(spec, out)
    prof = fn.conform(bio.load_profile(out / bio.PROFILE_FILE))
    man = bio.RunManifest.start(sdoc)
    with man.timed("verify"):
        rep = diagnose(prof, fn)
    doc = rep.as_dict()
    checks = verify_checks(rep, args.grad_tol, fn.averaged)
    doc["checks"] = checks
    doc["passed"] = all(checks.values())
    man.record(bio.write_json(out / bio.DIAG_FILE, doc))
    man.write(out)
    _print({"spectrum_class": doc["spectrum_class"], "checks": checks})
    if not doc["passed"]:
        raise AuditFailed("verification failed: " +
                          ", ".join(k for k, v in checks.items() if not v))
    return EXIT_OK


def cmd_sweep(args):
    spec, doc = _load(args.config)
    disc = {k: getattr(args, k) for k in ("K", "N") if getattr(args, k) is not None}
    if disc:
        spec = spec.with_(**disc)
    out = _out(args)
    if args.d_values:
        ds = [float(x) for x in args.d_values.split(",")]
    else:
        ds = list(np.linspace(args.d_min, args.d_max, args.count))
    man = bio.RunManifest.start(spec_to_dict(spec), {"rng_seed": args.rng_seed})
    with man.timed("sweep"):
        res = sweep_d(spec, ds, opts=MinimizeOptions(restarts=args.restarts,
                                                     rng_seed=args.rng_seed))
    man.record(bio.write_csv(out / bio.SWEEP_FILE, ["d", "E", "norm"],
                             [(r.d, r.E, r.norm) for r in res.rows]))
    summary = {"d_star": res.d_star, "d_star_linear": res.d_star_linear,
               "exponent": None if math.isnan(res.exponent) else res.exponent,
               "exponent_linear": (None if math.isnan(res.exponent_linear)
                                   else res.exponent_linear),
               "fit_points": len(res.fit_rows)}
    man.record(bio.write_json(out / "sweep.json", summary))
    man.write(out)
    _print(summary)
    return EXIT_OK


# ------------------------------------------------------------------ parser

def build_parser():
    p = argparse.ArgumentParser(prog="breather", description="Traveling breather solver")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("config", help="JSON configuration file")
        sp.set_defaults(func=fn)
        return sp

    v = add("validate", cmd_validate, "check admissibility conditions")
    v.add_argument("--out", default=None)

    f = add("fundsol", cmd_fundsol, "tabulate fundamental solutions")
    f.add_argument("--out", default="run")
    f.add_argument("--k-max", type=int, default=None)

    s = add("solve", cmd_solve, "minimize the discrete energy")
    s.add_argument("--out", default="run")
    s.add_argument("--K", type=int)
    s.add_argument("--N", type=int)
    s.add_argument("--M", type=int)
    s.add_argument("--subspace-k0", type=int, default=None)
    s.add_argument("--k0", type=int, default=None)
    s.add_argument("--seed", choices=["ansatz", "random", "provided"], default="ansatz")
    s.add_argument("--init", default=None, help="starting profile JSON")
    s.add_argument("--restarts", type=int, default=3)
    s.add_argument("--rng-seed", type=int, default=0)
    s.add_argument("--grad-tol", type=float, default=1e-8)
    s.add_argument("--max-iters", type=int, default=20000)
    s.add_argument("--force", action="store_true", help="skip validation")

    r = add("reconstruct", cmd_reconstruct, "extend the profile and export field grids")
    r.add_argument("--out", default="run")
    r.add_argument("--r-max", type=float, default=None)
    r.add_argument("--n-ext", type=int, default=400)
    r.add_argument("--periods", type=float, default=2.0)

    y = add("verify", cmd_verify, "run diagnostics on a solved profile")
    y.add_argument("--out", default="run")
    y.add_argument("--grad-tol", type=float, default=1e-8)

    w = add("sweep", cmd_sweep, "minimal energy and norm over core values d")
    w.add_argument("--out", default="run")
    w.add_argument("--d-values", default=None, help="comma-separated list")
    w.add_argument("--d-min", type=float, default=0.5)
    w.add_argument("--d-max", type=float, default=1.2)
    w.add_argument("--count", type=int, default=8)
    w.add_argument("--K", type=int)
    w.add_argument("--N", type=int)
    w.add_argument("--restarts", type=int, default=1)
    w.add_argument("--rng-seed", type=int, default=0)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except MissingArtifact as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except BreatherError as exc:
        cond = f" [{exc.condition}]" if exc.condition else ""
        print(f"error: {exc}{cond}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
