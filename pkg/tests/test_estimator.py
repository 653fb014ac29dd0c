import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from breather import BreatherSolver

from conftest import CONFIGS, spec


def test_params_and_clone():
    est = BreatherSolver(str(CONFIGS / "fig1_slab.json"), K=8, N=16, restarts=2)
    params = est.get_params()
    assert params["K"] == 8 and params["restarts"] == 2
    twin = clone(est)
    assert twin.get_params() == params and twin is not est
    est.set_params(N=32)
    assert est.N == 32


def test_unfitted():
    with pytest.raises(NotFittedError):
        BreatherSolver(spec("fig1_slab")).predict([0.0], [0.0])


def test_fit_predict_score():
    est = BreatherSolver(spec("fig1_slab"), K=8, N=32).fit()
    assert est.score() == -est.energy_ > 0
    r = np.array([0.0, 1.0, 2.0, 3.5])
    t = np.linspace(0, 4, 9)
    w = est.predict(r, t)
    assert w.shape == (4, 9)
    assert np.allclose(w[:, 0], w[:, -1], atol=1e-12)  # one period apart
    nodes = est.profile_.nodes
    direct = 2 * np.real(est.profile_.coeffs[:, -1] @ np.exp(
        1j * est.functional_.omega * np.outer(est.profile_.modes, t)))
    assert np.allclose(w[2], direct, atol=1e-12) and nodes[-1] == 2.0
    with pytest.raises(ValueError):
        est.predict([-1.0], [0.0])


def test_fit_accepts_config_and_init():
    base = BreatherSolver(K=8, N=32).fit(spec("fig2_slab"))
    again = BreatherSolver(K=8, N=32, restarts=1).fit(spec("fig2_slab"), init=base.profile_)
    assert again.energy_ <= base.energy_ + 1e-12
    with pytest.raises(TypeError):
        BreatherSolver(config=3.0).fit()


def test_diagnostics_and_field():
    est = BreatherSolver(spec("fig2_slab_averaged"), K=8, N=32).fit()
    rep = est.diagnostics()
    assert rep.spectrum_class == "Monochromatic(1)" and rep.f_monotone
    fld = est.field(n_ext=20)
    assert fld.w.shape == (fld.r.size, fld.t.size)
