from fractions import Fraction

import numpy as np
import pytest

from breather import BreatherSolver
from breather.energy import EnergyFunctional
from breather.exceptions import NoWitness
from breather.minimize import MinimizeOptions, golden_section, lbfgs, minimize

from conftest import functional, spec, table


def test_options_validation():
    with pytest.raises(ValueError):
        MinimizeOptions(grad_tol=0)
    with pytest.raises(ValueError):
        MinimizeOptions(k0=4)
    with pytest.raises(ValueError):
        MinimizeOptions(seed="bogus")


def test_golden_section_parabola():
    x, f = golden_section(lambda s: (s - 0.3) ** 2 + 1, -2, 2)
    assert x == pytest.approx(0.3, abs=1e-6) and f == pytest.approx(1.0)


def test_lbfgs_quadratic():
    rng = np.random.default_rng(0)
    B = rng.standard_normal((12, 12))
    H = B @ B.T + 12 * np.eye(12)
    b = rng.standard_normal(12)
    x, f, g, trace, ok = lbfgs(lambda x: (0.5 * x @ H @ x - b @ x, H @ x - b), np.zeros(12),
                               grad_tol=1e-12)
    assert ok
    assert np.allclose(x, np.linalg.solve(H, b), atol=1e-10)
    energies = [row[1] for row in trace]
    assert all(e1 <= e0 + 1e-15 for e0, e1 in zip(energies, energies[1:]))


def test_converged_minimizer_is_negative():
    fn = functional("fig1_cylindrical", K=8, N=32)
    res = minimize(fn)
    assert res.converged
    assert res.report.E_total < res.seed_energy < 0
    assert res.report.grad_norm <= 1e-8 * max(1.0, abs(res.report.E_total))
    assert len(res.energies) == 3


def test_provided_seed_and_determinism():
    fn = functional("fig2_slab", K=8, N=32)
    a = minimize(fn, MinimizeOptions(rng_seed=11))
    b = minimize(fn, MinimizeOptions(rng_seed=11))
    assert np.array_equal(a.profile.coeffs, b.profile.coeffs)
    c = minimize(fn, MinimizeOptions(seed="provided", restarts=1), p0=a.profile)
    assert c.report.E_total == pytest.approx(a.report.E_total, rel=1e-10)
    with pytest.raises(ValueError):
        minimize(fn, MinimizeOptions(seed="provided"))


def test_random_seed_only():
    fn = functional("fig2_slab", K=8, N=32)
    res = minimize(fn, MinimizeOptions(seed="random", restarts=2))
    assert res.report.E_total < 0 and all(r.start.startswith("random") for r in res.runs)


def test_strict_ansatz_needs_witness():
    fn = functional("fig1_cylindrical", K=8, N=32)
    with pytest.raises(NoWitness):
        minimize(fn, MinimizeOptions(k0=3))
    res = minimize(fn, MinimizeOptions(k0=3, strict=False, restarts=1))
    assert res.k0 == 3


def test_subspace_matches_reindexed_problem():
    s = spec("fig2_cylindrical")
    sub = BreatherSolver(s, K=15, N=32, subspace_k0=3).fit()
    M = sub.spec_.discretization.M
    # modes 3, 9, 15 at frequency w are modes 1, 3, 5 at frequency 3w
    re = BreatherSolver(s.with_(T=Fraction(4, 3)), K=5, N=32, M=M // 3, validate=False).fit()
    assert sub.energy_ == pytest.approx(re.energy_, rel=1e-8)
    live = [k for k, row in zip(sub.profile_.modes, sub.profile_.coeffs) if np.any(row != 0)]
    assert live == [3, 9, 15]


def test_gamma_scaling_small():
    s = spec("fig2_slab")
    a = BreatherSolver(s, K=8, N=32).fit()
    b = BreatherSolver(s.with_(gamma=Fraction(4)), K=8, N=32).fit()
    assert b.energy_ / a.energy_ == pytest.approx(0.25, rel=1e-6)
    ratio = np.linalg.norm(b.profile_.coeffs) / np.linalg.norm(a.profile_.coeffs)
    assert ratio == pytest.approx(0.5, rel=1e-6)


def test_nested_spaces_small():
    E = [BreatherSolver(spec("fig2_slab"), K=K, N=32).fit().energy_ for K in (4, 8)]
    assert E[0] >= E[1] - 1e-8


def test_table_too_short():
    s = spec("fig1_slab", K=16, N=16)
    with pytest.raises(ValueError):
        EnergyFunctional(s, table("fig1_slab", 8, 16, k_max=7))
