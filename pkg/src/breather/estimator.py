"""Estimator-style wrapper: ``fit`` computes a breather, ``predict`` samples it."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .config import ProblemSpec, load_spec, spec_from_dict, validate
from .energy import EnergyFunctional
from .fundsol import FundamentalSolutionTable
from .minimize import MinimizeOptions, minimize
from .reconstruction import ModeExtension, _synth, diagnose, extend_profile


def _as_spec(config) -> ProblemSpec:
    if isinstance(config, ProblemSpec):
        return config
    if isinstance(config, dict):
        return spec_from_dict(config)
    if isinstance(config, (str, Path)):
        return load_spec(config)
    raise TypeError("config must be a ProblemSpec, a dict or a path to a JSON file")


class BreatherSolver(BaseEstimator):
    """Minimize the discrete breather energy for one waveguide configuration.

    Parameters left as ``None`` keep the value from the configuration.

    Attributes after ``fit``: ``spec_``, ``table_``, ``functional_``,
    ``result_``, ``profile_``, ``energy_`` (the minimal energy) and
    ``validation_``.
    """

    def __init__(self, config=None, K=None, N=None, M=None, subspace_k0=None, seed="ansatz",
                 k0=None, restarts=3, random_state=0, grad_tol=1e-8, max_iters=20000,
                 validate=True):
        self.config = config
        self.K = K
        self.N = N
        self.M = M
        self.subspace_k0 = subspace_k0
        self.seed = seed
        self.k0 = k0
        self.restarts = restarts
        self.random_state = random_state
        self.grad_tol = grad_tol
        self.max_iters = max_iters
        self.validate = validate

    def _resolved_spec(self, config):
        spec = _as_spec(config if config is not None else self.config)
        disc = {k: v for k, v in (("K", self.K), ("N", self.N), ("M", self.M)) if v is not None}
        return spec.with_(**disc) if disc else spec

    def fit(self, X=None, y=None, init=None):
        """``X`` may carry the configuration; otherwise ``config`` is used.
        ``init`` is an optional starting profile (used in addition to the seed)."""
        spec = self._resolved_spec(X)
        self.validation_ = validate(spec) if self.validate else None
        self.spec_ = spec
        self.table_ = FundamentalSolutionTable.from_spec(spec)
        fn = EnergyFunctional(spec, self.table_, subspace_k0=self.subspace_k0)
        self.functional_ = fn
        opts = MinimizeOptions(max_iters=self.max_iters, grad_tol=self.grad_tol,
                               seed=self.seed,
                               k0=self.k0,
                               rng_seed=self.random_state, restarts=self.restarts)
        res = minimize(fn, opts)
        if init is not None:
            alt = minimize(fn, MinimizeOptions(max_iters=self.max_iters, grad_tol=self.grad_tol,
                                               seed="provided", restarts=1), p0=init)
            if alt.report.E_total < res.report.E_total:
                alt.runs = res.runs + alt.runs
                res = alt
        self.result_ = res
        self.profile_ = res.profile
        self.energy_ = res.report.E_total
        return self

    def predict(self, r, t):
        """Field ``w(r, t)`` on the tensor grid ``r x t``."""
        check_is_fitted(self, "profile_")
        r = np.asarray(r, dtype=float)
        t = np.asarray(t, dtype=float)
        if np.any(r < 0):
            raise ValueError("r must be nonnegative")
        c, _ = ModeExtension(self.profile_, self.functional_)(r.ravel())
        w = _synth(c, self.profile_.modes, self.functional_.omega, t.ravel())
        return w.reshape(r.shape + t.shape)

    def score(self, X=None, y=None):
        """Negative minimal energy (larger is better)."""
        check_is_fitted(self, "profile_")
        return -self.energy_

    def field(self, **kw):
        check_is_fitted(self, "profile_")
        return extend_profile(self.profile_, self.functional_, **kw)

    def diagnostics(self):
        check_is_fitted(self, "profile_")
        return diagnose(self.profile_, self.functional_)
