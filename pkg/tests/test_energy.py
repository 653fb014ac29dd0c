import numpy as np
import pytest

from breather.discretization import DiscreteProfile
from breather.energy import EnergyFunctional
from breather.exceptions import ExcludedViolation, NoWitness
from breather.kernel import KernelSpec
from breather.minimize import ansatz_shape, seed_ansatz

from conftest import functional, spec, table

COMBOS = [("fig1_cylindrical", "instantaneous"), ("fig1_cylindrical_averaged", "averaged"),
          ("fig2_slab", "instantaneous"), ("fig2_slab_averaged", "averaged")]


def random_point(fn, rng, scale=0.3):
    x = rng.standard_normal(fn.n_free) * scale
    return x


def test_zero_profile():
    fn = functional("fig1_cylindrical")
    rep = fn.energy(fn.zeros())
    assert rep.E_total == rep.E_I_quadratic == rep.E_N == rep.E_B == 0.0
    assert rep.grad_norm == 0.0


@pytest.mark.parametrize("name,_", COMBOS)
def test_gradient_matches_central_differences(name, _):
    fn = functional(name)
    rng = np.random.default_rng(7)
    x = random_point(fn, rng)
    _, g = fn.value_and_grad(x)
    h = 1e-6 * (1 + np.linalg.norm(x))
    worst = 0.0
    for _ in range(50):
        d = rng.standard_normal(x.size)
        d /= np.linalg.norm(d)
        fd = (fn.value(x + h * d) - fn.value(x - h * d)) / (2 * h)
        worst = max(worst, abs(fd - g @ d) / max(abs(g @ d), 1e-3 * np.linalg.norm(g)))
    assert worst <= 1e-6


@pytest.mark.parametrize("name,_", COMBOS)
def test_ray_decomposition(name, _):
    fn = functional(name)
    p = fn.unpack(random_point(fn, np.random.default_rng(3)))
    rep = fn.energy(p)
    assert rep.E_total == pytest.approx(rep.E_I_quadratic + rep.E_N - rep.E_B, rel=1e-12)
    # E(s u) = s^2 (Q - B) + s^4 N: recover the parts from s in {1, 2, 3}
    Es = [fn.energy(DiscreteProfile(p.geometry, p.R, p.modes, s * p.coeffs)).E_total
          for s in (1, 2, 3)]
    A = np.array([[s ** 2, s ** 4] for s in (1, 2, 3)], float)
    (quad, quart), *_ = np.linalg.lstsq(A, np.array(Es), rcond=None)
    assert quad == pytest.approx(rep.E_I_quadratic - rep.E_B, rel=1e-9, abs=1e-9)
    assert quart == pytest.approx(rep.E_N, rel=1e-9)


def test_gradient_homogeneity():
    fn = functional("fig1_cylindrical")
    p = fn.unpack(random_point(fn, np.random.default_rng(4)))
    two = DiscreteProfile(p.geometry, p.R, p.modes, 2 * p.coeffs)
    # quartic part from a copy with Gamma = 0
    lin = functional("fig1_cylindrical")
    lin.Gamma = 0.0
    g1, g2 = lin.gradient_profile(p), lin.gradient_profile(two)
    assert np.allclose(g2, 2 * g1, rtol=1e-12, atol=1e-13)
    n1 = fn.gradient_profile(p) - g1
    n2 = fn.gradient_profile(two) - g2
    assert np.allclose(n2, 8 * n1, rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("name", ["fig1_cylindrical", "fig2_slab_averaged"])
def test_time_shift_invariance(name):
    fn = functional(name)
    p = fn.unpack(random_point(fn, np.random.default_rng(5)))
    E0 = fn.energy(p).E_total
    for j in (1, 5, 17):
        tau = j * fn.grid.T / fn.grid.M
        ph = np.exp(1j * np.array(p.modes) * fn.omega * tau)[:, None]
        q = DiscreteProfile(p.geometry, p.R, p.modes, p.coeffs * ph)
        assert fn.energy(q).E_total == pytest.approx(E0, rel=1e-12)


def test_constant_kernel_direct_formula():
    fn = functional("fig2_slab_averaged")
    p = fn.unpack(random_point(fn, np.random.default_rng(6)))
    Eq, En, Eb, _ = fn.parts(p.coeffs, need_grad=False)
    ks = np.array(p.modes)
    mean_ut2 = 2 * (fn.omega ** 2) * (ks ** 2) @ np.abs(p.coeffs) ** 2
    kap0 = np.mean(fn.kappa)
    direct = 0.25 * fn.Gamma * kap0 * float(fn.w @ mean_ut2 ** 2)
    assert En == pytest.approx(direct, rel=1e-12)


def test_monochromatic_reduction():
    # single mode with kappa = 1: (kappa * v^2) v^2 averages to 4|a|^4 w^4 k^4
    fn = functional("fig2_slab_averaged")
    p = fn.zeros()
    p.coeffs[1] = np.linspace(0.1, 0.4, fn.N + 1) * (1 + 0.5j)
    En = fn.parts(p.coeffs, need_grad=False)[1]
    amp = np.abs(p.coeffs[1]) * fn.omega * 3
    assert En == pytest.approx(0.25 * fn.Gamma * float(fn.w @ (4 * amp ** 4)), rel=1e-12)


def test_excluded_constraint():
    s = spec("fig2_slab", K=8, N=32)
    ex = np.zeros(4, bool)
    ex[1] = True
    fn = EnergyFunctional(s, table("fig2_slab", 8), excluded=ex)
    p = fn.zeros()
    p.coeffs[1, -1] = 1e-6
    with pytest.raises(ExcludedViolation):
        fn.energy(p)
    assert not fn.mask[1, -1]
    x = random_point(fn, np.random.default_rng(0))
    assert fn.unpack(x).coeffs[1, -1] == 0


@pytest.mark.parametrize("name,k0", [("fig1_cylindrical", 1), ("fig2_slab", 1)])
def test_seed_ray_negative_and_quadratic(name, k0):
    fn = functional(name, K=16, N=64)
    shape = ansatz_shape(fn, k0)
    Es = []
    for eps in (1e-2, 1e-3):
        p = fn.zeros()
        p.coeffs[fn.modes.index(k0)] = eps * shape
        Es.append(fn.energy(p).E_total)
    assert Es[0] < 0 and Es[1] < 0
    assert Es[0] / Es[1] == pytest.approx(100, rel=1e-3)
    _, eps, E = seed_ansatz(fn, k0)
    assert E < Es[0] and 1e-4 <= eps <= 10


def test_seed_rejects_non_witness():
    fn = functional("fig1_cylindrical", K=8)
    with pytest.raises(NoWitness):
        seed_ansatz(fn, 3)
    with pytest.raises(ValueError):
        seed_ansatz(fn, 2)


def test_kernel_override_shape():
    s = spec("fig2_slab_averaged", K=8, N=16)
    fn = EnergyFunctional(s, table("fig2_slab_averaged", 8, 16), kappa=np.ones(s.discretization.M))
    assert fn.averaged and fn.kappa.shape == (s.discretization.M,)
    assert isinstance(s.kernel, KernelSpec)
