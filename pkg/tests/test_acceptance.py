"""End-to-end acceptance checks. Each test prints one ``CRITERION n: PASS/FAIL`` line."""

import math
import time
from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest

from breather import BreatherSolver
from breather.config import validate_periodic, validate_step
from breather.discretization import DiscreteProfile
from breather.fundsol import comparison_ratio, fundsol, monodromy_slab, propagation_matrix
from breather.minimize import seed_ansatz
from breather.reconstruction import (classify_spectrum, f_monotonicity, linear_threshold,
                                     profile_norm, sweep_d)
from breather.special import BesselKind, eval_bessel, ik01_scaled, jy01

from conftest import EXAMPLES, functional, spec
from test_fundsol import ctx_of, fd_residual, region_midpoints

DESK = dict(K=16, N=64)


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, detail
    return emit


def test_criterion_01_parameter_arithmetic(report):
    t0 = time.perf_counter()
    vp = validate_periodic(spec("fig1_cylindrical"))
    vs = validate_step(spec("fig2_cylindrical"))
    dt = time.perf_counter() - t0
    ok = ((vp.m, vp.n) == (1, 1) and vp.T_required == 4
          and isinstance(vp.T_required, (int, Fraction))
          and abs(vs.xi - math.pi / 4) <= 1e-12
          and abs(vs.xi_bound - math.atan(math.sqrt(10))) <= 1e-12
          and vs.T_required == 4 and dt < 1)
    report(1, ok, f"(m,n)={vp.m, vp.n} T={vp.T_required}; xi={vs.xi:.15f} "
                  f"bound={vs.xi_bound:.6f} T={vs.T_required}; {dt:.3f}s")


def test_criterion_02_special_functions(report):
    t0 = time.perf_counter()
    xs = np.logspace(-2, 3, 200)
    j0, j1, y0, y1 = jy01(xs)
    w1 = np.max(np.abs((j1 * y0 - j0 * y1) * (np.pi * xs / 2) - 1))
    i0e, i1e, k0e, k1e = ik01_scaled(xs)
    w2 = np.max(np.abs((i0e * k1e + i1e * k0e) * xs - 1))
    ref = mp.nsum(lambda m: mp.mpf(1) / 2 ** (2 * m + 1) / (mp.factorial(m) * mp.factorial(m + 1)),
                  [0, mp.inf])
    e = abs(eval_bessel(BesselKind("I", 1), 1.0) / float(ref) - 1)
    dt = time.perf_counter() - t0
    report(2, w1 <= 1e-9 and w2 <= 1e-9 and e <= 1e-10 and dt < 1,
           f"wronskian JY {w1:.1e}, IK {w2:.1e}; I1(1) rel {e:.1e}; {dt:.3f}s")


def test_criterion_03_fundamental_solutions(report):
    t0 = time.perf_counter()
    worst, ratios = 0.0, []
    for name in EXAMPLES:
        ctx = ctx_of(name)
        for k in (1, 5, 33):
            e = fundsol(k, ctx)
            kap = k * ctx.omega * math.sqrt(max(ctx.alpha, ctx.beta))
            for r in region_midpoints(ctx):
                h = 0.004 / kap
                r1, r2 = fd_residual(e, ctx, r, h, k), fd_residual(e, ctx, r, h / 2, k)
                worst = max(worst, r1, r2)
                if r1 > 1e-10:
                    ratios.append(r1 / r2)
    rng = np.random.default_rng(0)
    det_err = 0.0
    for _ in range(20):
        kap, r0 = rng.uniform(0.5, 40), rng.uniform(1, 20)
        r = r0 + rng.uniform(0.01, 3)
        det_err = max(det_err, abs(np.linalg.det(propagation_matrix(kap, r, r0)) * r / r0 - 1))
    ctx = ctx_of("fig1_slab")
    flo_det, mult_err = 0.0, 0.0
    for k in (1, 3, 5, 33):
        M = monodromy_slab(k, ctx)
        flo_det = max(flo_det, abs(np.linalg.det(M) - 1))
        m = sorted(np.abs(np.linalg.eigvals(M)))
        mult_err = max(mult_err, abs(m[0] - 2 / 3), abs(m[1] - 3 / 2))
    dt = time.perf_counter() - t0
    ok = (worst <= 1e-6 and all(3 < q < 5 for q in ratios) and det_err <= 1e-10
          and flo_det <= 1e-10 and mult_err <= 1e-10 and dt < 30)
    report(3, ok, f"FD residual max {worst:.1e}, h-halving ratios "
                  f"[{min(ratios):.2f}, {max(ratios):.2f}]; radial det {det_err:.1e}; "
                  f"Floquet det {flo_det:.1e}; |multipliers| vs {{2/3, 3/2}} {mult_err:.1e}; "
                  f"{dt:.1f}s")


def test_criterion_04_gradient_check(report):
    t0 = time.perf_counter()
    worst = {}
    for name in ("fig1_cylindrical", "fig1_cylindrical_averaged", "fig1_slab",
                 "fig1_slab_averaged"):
        fn = functional(name, K=8, N=32)
        rng = np.random.default_rng(1)
        x = 0.3 * rng.standard_normal(fn.n_free)
        _, g = fn.value_and_grad(x)
        h = 1e-6 * (1 + np.linalg.norm(x))
        err = 0.0
        for _ in range(50):
            d = rng.standard_normal(x.size)
            d /= np.linalg.norm(d)
            fd = (fn.value(x + h * d) - fn.value(x - h * d)) / (2 * h)
            err = max(err, abs(fd - g @ d) / max(abs(g @ d), 1e-3 * np.linalg.norm(g)))
        worst[name] = err
    dt = time.perf_counter() - t0
    report(4, max(worst.values()) <= 1e-6 and dt < 60,
           "; ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f"; {dt:.1f}s")


def test_criterion_05_nontriviality(report):
    t0 = time.perf_counter()
    ok, parts = True, []
    for name in EXAMPLES:
        est = BreatherSolver(spec(name), M=136, **DESK).fit()
        E, g = est.energy_, est.result_.report.grad_norm
        seed_E = est.result_.seed_energy
        good = E <= -1e-6 and g <= 1e-8 * max(1, abs(E)) and seed_E < 0
        ok &= good
        parts.append(f"{name} E*={E:.6f} seed={seed_E:.6f} |g|={g:.1e}")
    dt = time.perf_counter() - t0
    report(5, ok and dt <= 600, "; ".join(parts) + f"; {dt:.1f}s")


def test_criterion_06_homogeneity(report):
    t0 = time.perf_counter()
    s = spec("fig1_cylindrical")
    a = BreatherSolver(s, **DESK).fit()
    b = BreatherSolver(s.with_(gamma=4 * s.gamma), **DESK).fit()
    eratio = b.energy_ / a.energy_
    nratio = np.linalg.norm(b.profile_.coeffs) / np.linalg.norm(a.profile_.coeffs)
    dt = time.perf_counter() - t0
    ok = abs(eratio / 0.25 - 1) <= 1e-4 and abs(nratio / 0.5 - 1) <= 1e-4 and dt <= 300
    report(6, ok, f"E ratio {eratio:.10f}, norm ratio {nratio:.10f}; {dt:.1f}s")


def test_criterion_07_nested_spaces(report):
    t0 = time.perf_counter()
    E = [BreatherSolver(spec("fig1_cylindrical"), K=K, N=64).fit().energy_ for K in (8, 16, 32)]
    dt = time.perf_counter() - t0
    ok = E[0] >= E[1] - 1e-8 and E[1] >= E[2] - 1e-8 and dt <= 600
    report(7, ok, f"E*(K=8,16,32) = {E[0]:.12f}, {E[1]:.12f}, {E[2]:.12f}; {dt:.1f}s")


def test_criterion_08_transverse_monotonicity(report):
    ok, parts = True, []
    for name in ("fig1_slab_averaged", "fig2_slab_averaged", "fig1_cylindrical_averaged",
                 "fig2_cylindrical_averaged"):
        est = BreatherSolver(spec(name), **DESK).fit()
        m = f_monotonicity(est.profile_, est.functional_)
        good = m["max_violation"] <= 1e-8 * float(m["f"].max())
        ok &= good
        parts.append(f"{name} violation {m['max_violation']:.1e}")
    report(8, ok, "; ".join(parts))


def test_criterion_09_spectrum_classes(report):
    mono = BreatherSolver(spec("fig1_slab_averaged"), **DESK).fit()
    sc = classify_spectrum(mono.profile_, mono.functional_)
    ok = str(sc) == "Monochromatic(1)"
    parts = [f"fig1_slab_averaged {sc} (p1={sc.fractions[1]:.9f})"]
    for name in ("fig1_cylindrical", "fig1_slab"):
        est = BreatherSolver(spec(name), **DESK).fit()
        c = classify_spectrum(est.profile_, est.functional_)
        ok &= c.kind == "Polychromatic" and c.n_above_floor >= 3
        parts.append(f"{name} {c} with {c.n_above_floor} modes above 1e-6")
    report(9, ok, "; ".join(parts))


def test_criterion_10_subspace_multiplicity(report):
    est = BreatherSolver(spec("fig2_cylindrical"), subspace_k0=3, **DESK).fit()
    fn, p = est.functional_, est.profile_
    witness = fn.table[3].q > comparison_ratio(fn.table.ctx, 3)
    live = [k for k, row in zip(p.modes, p.coeffs) if np.any(row != 0)]
    expected = [k for k in p.modes if k % 3 == 0 and (k // 3) % 2 == 1]
    E, g = est.energy_, est.result_.report.grad_norm
    converged = g <= 1e-8 * max(1, abs(E))
    ok = witness and live == expected and E < 0 and converged
    report(10, ok, f"k0=3 witness={witness}; live modes {live}; E*={E:.6f}; |g|={g:.1e}")


def test_criterion_11_bifurcation_exponent(report):
    t0 = time.perf_counter()
    s = spec("fig2_cylindrical", **DESK)
    d_lin = linear_threshold(functional("fig2_cylindrical", **DESK))
    ds = [d_lin + 1e-4 * 4 ** j for j in range(6)] + [d_lin - 0.005]
    res = sweep_d(s, ds)
    dt = time.perf_counter() - t0
    ok = (len(res.fit_rows) >= 6 and 0.15 <= res.exponent <= 0.45 and dt <= 1200)
    rows = ", ".join(f"({r.d - res.d_star:.1e}, {r.norm:.3e})" for r in res.fit_rows)
    report(11, ok, f"d_star={res.d_star:.8f} (linear {res.d_star_linear:.8f}); exponent "
                   f"{res.exponent:.3f} over {len(res.fit_rows)} points (vs linear threshold: "
                   f"{res.exponent_linear:.3f}) [(d-d_star, |u*|): "
                   f"{rows}]; {dt:.1f}s")
