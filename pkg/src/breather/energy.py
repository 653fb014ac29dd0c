"""Discrete energy ``E = E_I - E_B`` and its exact gradient.

Per mode ``k > 0`` with real and imaginary nodal vectors ``g``:

    quadratic  sum_k g^T (A + B + V k^2 w^2 Mr) g       (radial; slab drops B)
    boundary   R sum_k q_k |f_k(R)|^2                    (slab: no factor R)
    quartic    (Gamma/4) sum_j w_j rho_j

where ``rho_j`` is the time integral of ``N(u_t) u_t`` at node ``j`` and
``w_j`` are the lumped weights of the piecewise-linear interpolant of
``rho`` (with weight ``r`` in the radial case).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import ProblemSpec, derive_coefficients
from .discretization import DiscreteProfile, TimeGrid, assemble, lumped_weights, synthesize
from .exceptions import ExcludedViolation
from .fundsol import FundamentalSolutionTable
from .kernel import periodize

EXCL_TOL = 1e-12


@dataclass
class EnergyReport:
    E_total: float
    E_I_quadratic: float
    E_N: float
    E_B: float
    grad_norm: float
    per_mode_energy: np.ndarray = field(repr=False)
    modes: tuple = field(default=(), repr=False)

    def as_dict(self):
        return {"E_total": self.E_total, "E_I_quadratic": self.E_I_quadratic,
                "E_N": self.E_N, "E_B": self.E_B, "grad_norm": self.grad_norm,
                "per_mode_energy": {int(k): float(e) for k, e in
                                    zip(self.modes, self.per_mode_energy)}}


class EnergyFunctional:
    """Energy on the discrete space defined by a spec and a boundary table.

    ``subspace_k0`` pins every mode that is not an odd multiple of ``k0``.
    ``kappa`` overrides the sampled kernel (averaged nonlinearity only).
    """

    def __init__(self, spec: ProblemSpec, table: FundamentalSolutionTable,
                 subspace_k0: Optional[int] = None, kappa=None, excluded=None):
        disc = spec.discretization
        self.spec = spec
        self.geometry = spec.geometry
        self.radial = spec.geometry == "cylindrical"
        self.R = float(spec.R)
        self.N = disc.N
        self.modes = disc.modes
        self.grid = TimeGrid(disc.M, float(spec.T))
        self.omega = self.grid.omega
        co = derive_coefficients(spec)
        self.V = float(co.V_core)
        self.Gamma = float(co.Gamma_core)
        self.nodes = np.linspace(0.0, self.R, self.N + 1)
        if self.radial:
            self.A = assemble("Stiffness_r", self.nodes) + assemble("InverseR", self.nodes)
            self.Mm = assemble("Mass_r", self.nodes)
        else:
            self.A = assemble("Stiffness_1", self.nodes)
            self.Mm = assemble("Mass_1", self.nodes)
        self.w = lumped_weights(self.geometry, self.nodes)
        self.bfac = self.R if self.radial else 1.0
        if max(self.modes) > table.k_max:
            raise ValueError("fundamental-solution table does not cover all modes")
        self.table = table
        self.q = table.q(self.modes)
        self.excluded = table.excluded(self.modes) if excluded is None \
            else np.asarray(excluded, bool)
        self.averaged = spec.nonlinearity == "averaged"
        if self.averaged:
            self.kappa = periodize(spec.kernel, spec.T, disc.M) if kappa is None \
                else np.asarray(kappa, float)
            self.kappa_rhat = np.fft.rfft(self.kappa) / disc.M
        else:
            self.kappa = None
        self.subspace_k0 = subspace_k0
        active = np.array([subspace_k0 is None or (k % subspace_k0 == 0
                           and (k // subspace_k0) % 2 == 1) for k in self.modes])
        self.active = active
        mask = np.repeat(active[:, None], self.N + 1, axis=1)
        if self.radial:
            mask[:, 0] = False
        mask[self.excluded, -1] = False
        self.mask = mask
        self.k2w2 = (np.array(self.modes, float) * self.omega) ** 2
        self.Q = self.A[None] + self.V * self.k2w2[:, None, None] * self.Mm[None]
        self._hinv = None  # per-mode inverse of the quadratic part

    # ---------------------------------------------------------------- packing

    @property
    def n_free(self):
        return 2 * int(self.mask.sum())

    def zeros(self):
        return DiscreteProfile(self.geometry, self.R, self.modes,
                               np.zeros((len(self.modes), self.N + 1), complex))

    def pack(self, p: DiscreteProfile):
        c = p.coeffs[self.mask]
        return np.concatenate([c.real, c.imag])

    def unpack(self, x):
        n = x.size // 2
        c = np.zeros((len(self.modes), self.N + 1), complex)
        c[self.mask] = x[:n] + 1j * x[n:]
        return DiscreteProfile(self.geometry, self.R, self.modes, c)

    def conform(self, p: DiscreteProfile):
        """Embed a profile with other modes into this space (missing -> 0)."""
        if p.N != self.N:
            raise ValueError("node count differs")
        c = np.zeros((len(self.modes), self.N + 1), complex)
        for i, k in enumerate(self.modes):
            if k in p.modes:
                c[i] = p.coeffs[p.modes.index(k)]
        return DiscreteProfile(self.geometry, self.R, self.modes, c * self.mask)

    # ---------------------------------------------------------------- energy

    def _nonlinear(self, ut):
        """Samples of ``N(u_t)`` at each node."""
        if not self.averaged:
            return ut ** 3
        g = ut * ut
        conv = np.fft.irfft(self.kappa_rhat * np.fft.rfft(g, axis=-1), n=g.shape[-1], axis=-1)
        return conv * ut

    def parts(self, coeffs, need_grad=True):
        c = coeffs
        gr, gi = c.real, c.imag
        Qr = np.einsum("kij,kj->ki", self.Q, gr)
        Qi = np.einsum("kij,kj->ki", self.Q, gi)
        E_quad = float(np.sum(gr * Qr) + np.sum(gi * Qi))
        trace2 = np.abs(c[:, -1]) ** 2
        bmask = ~self.excluded
        E_B = float(self.bfac * np.sum(self.q[bmask] * trace2[bmask]))
        ut = synthesize(c, self.modes, self.grid, derivative=True)
        nl = self._nonlinear(ut)
        rho = np.mean(nl * ut, axis=-1)
        E_N = 0.25 * self.Gamma * float(self.w @ rho)
        if not need_grad:
            return E_quad, E_N, E_B, None
        grad = 2 * (Qr + 1j * Qi)
        grad[bmask, -1] -= 2 * self.bfac * self.q[bmask] * c[bmask, -1]
        spec = np.fft.rfft(nl, axis=-1) / self.grid.M  # (nodes, M/2+1)
        ks = np.array(self.modes)
        grad += (-2j * self.omega * ks[:, None] * self.Gamma * self.w[None, :]
                 * spec[:, ks].T)
        return E_quad, E_N, E_B, grad

    def check_constraints(self, p: DiscreteProfile):
        if np.any(self.excluded):
            tr = np.abs(p.coeffs[self.excluded, -1])
            if np.any(tr > EXCL_TOL):
                raise ExcludedViolation("excluded mode has a nonzero boundary trace")

    def energy(self, p: DiscreteProfile) -> EnergyReport:
        self.check_constraints(p)
        Eq, En, Eb, grad = self.parts(p.coeffs)
        gvec = np.concatenate([grad[self.mask].real, grad[self.mask].imag])
        pme = 2 * self.k2w2 * (np.einsum("ki,ij,kj->k", p.coeffs.real, self.Mm, p.coeffs.real)
                               + np.einsum("ki,ij,kj->k", p.coeffs.imag, self.Mm,
                                           p.coeffs.imag))
        return EnergyReport(Eq + En - Eb, Eq, En, Eb, float(np.linalg.norm(gvec)), pme,
                            self.modes)

    def value(self, x):
        Eq, En, Eb, _ = self.parts(self.unpack(x).coeffs, need_grad=False)
        return Eq + En - Eb

    def value_and_grad(self, x):
        c = self.unpack(x).coeffs
        Eq, En, Eb, grad = self.parts(c)
        g = grad[self.mask]
        return Eq + En - Eb, np.concatenate([g.real, g.imag])

    def gradient_profile(self, p: DiscreteProfile):
        """Complex gradient ``dE/dRe f + i dE/dIm f`` at every stored entry."""
        return self.parts(p.coeffs)[3] * self.mask

    # ---------------------------------------------------------------- precond

    def precondition(self, g):
        """Apply the inverse of the positive-definite quadratic part (no boundary term)."""
        if self._hinv is None:
            self._hinv = []
            for i in range(len(self.modes)):
                idx = np.flatnonzero(self.mask[i])
                H = 2 * self.Q[i][np.ix_(idx, idx)]
                self._hinv.append((idx, np.linalg.inv(H) if idx.size else None))
        n = g.size // 2
        G = np.zeros((len(self.modes), self.N + 1, 2))
        G[self.mask, 0] = g[:n]
        G[self.mask, 1] = g[n:]
        X = np.zeros_like(G)
        for i, (idx, Hinv) in enumerate(self._hinv):
            if Hinv is not None:
                X[i, idx] = Hinv @ G[i, idx]
        return np.concatenate([X[self.mask, 0], X[self.mask, 1]])


def eval_energy(p: DiscreteProfile, functional: EnergyFunctional) -> EnergyReport:
    return functional.energy(p)


def eval_gradient(p: DiscreteProfile, functional: EnergyFunctional):
    """Gradient in packed real coordinates (real parts first, then imaginary)."""
    return functional.value_and_grad(functional.pack(p))[1]
