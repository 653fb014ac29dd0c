"""Decaying solutions of the cladding mode equations.

For each odd ``k`` the exterior mode equation

    phi'' + (1/r) phi' - phi/r**2 + k**2 w**2 (chi1 + 1 - c**-2) phi = 0   (radial)
    phi'' + k**2 w**2 (chi1 + 1 - c**-2) phi = 0                           (slab)

is solved on ``[R, inf)`` with a piecewise-constant cladding, and the
decaying solution is summarized by its boundary data at ``R`` and its
L2 norm (weight ``r`` in the radial case).

Stored normalization: ``max(|phi(R)|, |phi'(R)|/(k w)) = 1``. Only the
ratio ``q_k = phi'(R)/phi(R)`` enters the energy.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List

import numpy as np

from .config import PeriodicStep, ProblemSpec, derive_coefficients
from .exceptions import MatchingSingular, NoDecayingMultiplier, ProductDiverged
from .special import ik01_scaled, jy01

TAU_EXCL = 1e-8
PRODUCT_TOL = 1e-13
N_MAX_CELLS = 10 ** 4
SUP_SAMPLES = 257


@dataclass(frozen=True)
class CladdingContext:
    """Float parameters needed by the mode solvers."""
    geometry: str
    periodic: bool
    R: float
    omega: float
    alpha: float
    beta: float
    delta: float
    lam: float
    theta: float = 0.0
    P: float = 0.0
    rho: float = 0.0
    a6_prime_bound: float = 0.0

    @classmethod
    def from_spec(cls, spec: ProblemSpec):
        co = derive_coefficients(spec)
        cl = spec.potential.cladding
        ess_inf = min(spec.potential.d, cl.a, cl.b)
        extra = dict(theta=float(cl.theta), P=float(cl.P)) if isinstance(cl, PeriodicStep) \
            else dict(rho=float(cl.rho))
        return cls(geometry=spec.geometry, periodic=isinstance(cl, PeriodicStep),
                   R=float(spec.R), omega=co.omega, alpha=float(co.alpha),
                   beta=float(co.beta), delta=float(co.delta), lam=co.lam,
                   a6_prime_bound=co.omega * math.sqrt(float(co.c_inv2_minus1 - ess_inf)),
                   **extra)

    @property
    def first_cell(self):
        return self.P if self.periodic else self.rho

    @property
    def r_max(self):
        if self.periodic:
            return self.R + 4 * self.P
        return self.R + self.rho + 8 / (self.omega * math.sqrt(self.beta))


@dataclass
class FundamentalSolutionEntry:
    k: int
    value_at_R: float
    deriv_at_R: float
    tail_norm: float
    excluded: bool = False
    info: dict = field(default_factory=dict, repr=False)
    evaluator: Callable = field(default=None, repr=False, compare=False)

    @property
    def q(self):
        return self.deriv_at_R / self.value_at_R

    def evaluate(self, r):
        """``(phi, phi')`` at ``r >= R`` in the stored normalization."""
        r = np.asarray(r, dtype=float)
        phi, dphi = self.evaluator(r)
        return phi, dphi


def _normalize(k, omega, v, d):
    s = max(abs(v), abs(d) / (k * omega))
    return v / s, d / s, s


# ------------------------------------------------------------ trig blocks

def _trig_transfer(kap, w):
    c, s = math.cos(kap * w), math.sin(kap * w)
    return np.array([[c, s / kap], [-kap * s, c]])


def _trig_eval(p, q, kap, y):
    c, s = np.cos(kap * y), np.sin(kap * y)
    return p * c + q / kap * s, -p * kap * s + q * c


def _trig_sq_integral(p, q, kap, w):
    """Exact ``int_0^w (p cos(kap y) + q/kap sin(kap y))**2 dy``."""
    s2 = math.sin(2 * kap * w) / (4 * kap)
    qq = q / kap
    return (p * p * (w / 2 + s2) + qq * qq * (w / 2 - s2)
            + p * qq * (1 - math.cos(2 * kap * w)) / (2 * kap))


# ------------------------------------------------------------ Bessel blocks

def _cyl_state(kap, r):
    """Basis matrix [[J1, Y1], [kap J1', kap Y1']] at ``kap r``."""
    z = kap * np.asarray(r, dtype=float)
    j0, j1, y0, y1 = jy01(z)
    return np.array([[j1, y1], [kap * (j0 - j1 / z), kap * (y0 - y1 / z)]])


def propagation_matrix(kap, r, r0):
    """Map ``(phi, phi')`` at ``r0`` to ``r`` for the radial equation with
    constant wavenumber ``kap``. Determinant equals ``r0 / r``."""
    B = _cyl_state(kap, r)
    B0 = _cyl_state(kap, r0)
    det0 = kap * 2.0 / (math.pi * kap * r0)
    inv0 = np.array([[B0[1, 1], -B0[0, 1]], [-B0[1, 0], B0[0, 0]]]) / det0
    return B @ inv0


def _lommel_cyl(kap, r, phi, dphi):
    """Antiderivative of ``phi**2 r`` for a cylinder function of order 1."""
    return 0.5 * r * r * (dphi * dphi / kap ** 2 + (1 - 1 / (kap * r) ** 2) * phi * phi)


def _lommel_mod(kap, r, phi, dphi):
    """``int_r^inf phi**2 r dr`` for a decaying modified Bessel function of order 1."""
    return 0.5 * r * r * (dphi * dphi / kap ** 2 - (1 + 1 / (kap * r) ** 2) * phi * phi)


def _k1_logderiv(kap, r):
    z = kap * r
    _, _, k0e, k1e = ik01_scaled(z)
    return kap * (-k0e / k1e - 1 / z)


# ------------------------------------------------------------ step cladding

def fundsol_step_slab(k, ctx: CladdingContext) -> FundamentalSolutionEntry:
    ak = k * ctx.omega * math.sqrt(ctx.alpha)
    bk = k * ctx.omega * math.sqrt(ctx.beta)
    rho, R = ctx.rho, ctx.R
    vartheta = math.atan(math.sqrt(ctx.alpha / ctx.beta))
    amp = math.sqrt(1 + ctx.beta / ctx.alpha)
    # e^{-bk (R+rho)} is divided out
    v = amp * math.sin(ak * rho + vartheta)
    d = -ak * amp * math.cos(ak * rho + vartheta)
    v, d, s = _normalize(k, ctx.omega, v, d)
    inner = _trig_sq_integral(v, d, ak, rho)
    edge = 1.0 / s  # phi(R+rho) before normalization is 1
    outer = edge * edge / (2 * bk)
    tail = math.sqrt(inner + outer) / abs(v)

    def evaluator(r):
        y = r - R
        pi, di = _trig_eval(v, d, ak, np.minimum(y, rho))
        ex = np.exp(-bk * np.maximum(y - rho, 0.0))
        inside = y <= rho
        return (np.where(inside, pi, edge * ex), np.where(inside, di, -bk * edge * ex))

    return FundamentalSolutionEntry(k, v, d, tail, info={"vartheta": vartheta},
                                    evaluator=evaluator)


def fundsol_step_radial(k, ctx: CladdingContext) -> FundamentalSolutionEntry:
    ak = k * ctx.omega * math.sqrt(ctx.alpha)
    bk = k * ctx.omega * math.sqrt(ctx.beta)
    R, s = ctx.R, ctx.R + ctx.rho
    ds = float(_k1_logderiv(bk, s))  # phi(s) = 1
    B = _cyl_state(ak, s)
    det = B[0, 0] * B[1, 1] - B[0, 1] * B[1, 0]
    scale = np.linalg.norm(B[0]) * np.linalg.norm(B[1])
    if abs(det) < 1e-14 * scale:
        raise MatchingSingular(f"matching matrix singular for k={k}")
    A = (B[1, 1] - B[0, 1] * ds) / det
    Bc = (-B[1, 0] + B[0, 0] * ds) / det
    BR = _cyl_state(ak, R)
    v = BR[0, 0] * A + BR[0, 1] * Bc
    d = BR[1, 0] * A + BR[1, 1] * Bc
    v, d, sc = _normalize(k, ctx.omega, v, d)
    A, Bc = A / sc, Bc / sc
    edge, dedge = 1.0 / sc, ds / sc
    inner = _lommel_cyl(ak, s, edge, dedge) - _lommel_cyl(ak, R, v, d)
    outer = _lommel_mod(bk, s, edge, dedge)
    tail = math.sqrt(inner + outer) / abs(v)
    k1s = ik01_scaled(bk * s)[3]

    def evaluator(r):
        r = np.asarray(r, dtype=float)
        inside = r <= s
        ri = np.where(inside, r, s)
        St = _cyl_state(ak, ri)
        pi = St[0, 0] * A + St[0, 1] * Bc
        di = St[1, 0] * A + St[1, 1] * Bc
        ro = np.where(inside, s, r)
        _, _, _, k1e = ik01_scaled(bk * ro)
        po = edge * k1e / k1s * np.exp(-bk * (ro - s))
        do = po * _k1_logderiv(bk, ro)
        return np.where(inside, pi, po), np.where(inside, di, do)

    return FundamentalSolutionEntry(k, v, d, tail, info={"A": A, "B": Bc},
                                    evaluator=evaluator)


# ------------------------------------------------------------ periodic cladding

def _periodic_layout(ctx: CladdingContext, n_regions):
    """Region boundaries and wavenumber labels (0 -> a, 1 -> b)."""
    R, P, th = ctx.R, ctx.P, ctx.theta
    bounds = [R]
    for i in range(n_regions):
        if i == 0:
            bounds.append(R + th * P / 2)
        elif i % 2 == 1:
            bounds.append(R + (i // 2) * P + (1 - th / 2) * P)
        else:
            bounds.append(R + (i // 2) * P + th * P / 2)
    labels = [i % 2 for i in range(n_regions)]
    return np.array(bounds), labels


def monodromy_slab(k, ctx: CladdingContext):
    ka = k * ctx.omega * math.sqrt(ctx.alpha)
    kb = k * ctx.omega * math.sqrt(ctx.beta)
    half = ctx.theta * ctx.P / 2
    return _trig_transfer(ka, half) @ _trig_transfer(kb, (1 - ctx.theta) * ctx.P) \
        @ _trig_transfer(ka, half)


def fundsol_periodic_slab(k, ctx: CladdingContext) -> FundamentalSolutionEntry:
    ka = k * ctx.omega * math.sqrt(ctx.alpha)
    kb = k * ctx.omega * math.sqrt(ctx.beta)
    Mon = monodromy_slab(k, ctx)
    ev, vec = np.linalg.eig(Mon)
    if np.any(np.abs(ev.imag) > 1e-12 * np.abs(ev).max()):
        raise NoDecayingMultiplier(f"complex multipliers for k={k}")
    ev, vec = ev.real, vec.real
    i = int(np.argmin(np.abs(ev)))
    rho_k = ev[i]
    if abs(rho_k) >= 1:
        raise NoDecayingMultiplier(f"no multiplier of modulus < 1 for k={k}")
    v, d, _ = _normalize(k, ctx.omega, vec[0, i], vec[1, i])
    half, wb = ctx.theta * ctx.P / 2, (1 - ctx.theta) * ctx.P
    regions = [(ka, half), (kb, wb), (ka, half)]
    cell = 0.0
    p, q = v, d
    starts = []
    for kap, w in regions:
        starts.append((p, q))
        cell += _trig_sq_integral(p, q, kap, w)
        p, q = _trig_transfer(kap, w) @ np.array([p, q])
    tail = math.sqrt(cell / (1 - rho_k ** 2)) / abs(v)
    offsets = np.array([0.0, half, half + wb])
    kaps = np.array([ka, kb, ka])
    R, P = ctx.R, ctx.P

    def evaluator(r):
        r = np.asarray(r, dtype=float)
        n = np.floor((r - R) / P)
        y = r - R - n * P
        j = np.clip(np.searchsorted(offsets, y, side="right") - 1, 0, 2)
        p0 = np.array([s[0] for s in starts])[j]
        q0 = np.array([s[1] for s in starts])[j]
        phi, dphi = _trig_eval(p0, q0, kaps[j], y - offsets[j])
        f = rho_k ** n
        return phi * f, dphi * f

    return FundamentalSolutionEntry(k, v, d, tail,
                                    info={"multipliers": tuple(sorted(ev, key=abs)),
                                          "rho": rho_k, "monodromy": Mon},
                                    evaluator=evaluator)


def _region_propagators(kaps, lo, hi):
    """Stacked matrices mapping data at ``hi[i]`` to ``lo[i]`` (shape (n, 2, 2))."""
    kaps = np.asarray(kaps, dtype=float)
    B = _cyl_state(kaps, lo)
    B0 = _cyl_state(kaps, hi)
    det0 = 2.0 / (np.pi * np.asarray(hi, dtype=float))
    inv0 = np.array([[B0[1, 1], -B0[0, 1]], [-B0[1, 0], B0[0, 0]]]) / det0
    return np.einsum("ijn,jkn->nik", B, inv0)


def _rescaled_regions(k, omega, kaps, bounds):
    """Rescaled propagators ``S(b_i) M(b_i, b_{i+1}) S(b_{i+1})^-1``."""
    lo, hi = bounds[:-1], bounds[1:]
    M = _region_propagators(kaps, lo, hi)
    f = np.sqrt(lo / hi)
    ok = omega * k
    M[:, 0, 0] *= f
    M[:, 0, 1] *= f * ok
    M[:, 1, 0] *= f / ok
    M[:, 1, 1] *= f
    return M


def _layout_kaps(ctx, n_regions, ka, kb):
    bounds, labels = _periodic_layout(ctx, n_regions)
    return bounds, np.where(np.array(labels) == 0, ka, kb)


def fundsol_periodic_radial(k, ctx: CladdingContext, n_max=N_MAX_CELLS,
                            tol=PRODUCT_TOL) -> FundamentalSolutionEntry:
    ka = k * ctx.omega * math.sqrt(ctx.alpha)
    kb = k * ctx.omega * math.sqrt(ctx.beta)

    # Forward product of rescaled inward propagators: its columns are inward
    # propagations of unit data at r_n and align with the decaying solution.
    chunk = 64
    n_conv = None
    Pm = None
    prev = None
    n = 0
    while n < n_max and n_conv is None:
        n_cells = min(chunk, n_max - n)
        bounds, kaps = _layout_kaps(ctx, 2 * (n + n_cells) + 1, ka, kb)
        mats = _rescaled_regions(k, ctx.omega, kaps, bounds)
        if Pm is None:
            Pm = mats[0]
        for j in range(n, n + n_cells):
            Pm = Pm @ mats[2 * j + 1] @ mats[2 * j + 2]
            n = j + 1
            c1 = Pm[:, 0]
            nrm = math.hypot(c1[0], c1[1])
            dirn = c1 / nrm * (1 if c1[np.argmax(np.abs(c1))] > 0 else -1)
            second = abs(Pm[0, 0] * Pm[1, 1] - Pm[0, 1] * Pm[1, 0]) / nrm ** 2
            Pm = Pm / nrm
            if prev is not None and second < tol and np.linalg.norm(dirn - prev) < tol:
                n_conv = n
                break
            prev = dirn
    if n_conv is None:
        raise ProductDiverged(f"cell product not converged after {n_max} cells (k={k})")

    # Backward sweep from far out: cells up to n_conv carry contamination
    # below (beta/alpha)**n_conv relative to the decaying solution.
    n_reg = 2 * (2 * n_conv + 2) + 1
    bounds, kaps = _layout_kaps(ctx, n_reg, ka, kb)
    mats = _region_propagators(kaps, bounds[:-1], bounds[1:])
    states = np.zeros((n_reg + 1, 2))
    states[-1] = (1.0 / math.sqrt(bounds[-1]), 0.0)
    for i in range(n_reg - 1, -1, -1):
        states[i] = mats[i] @ states[i + 1]
        big = np.abs(states[i]).max()
        if big > 1e200:
            states[i:] /= big
    v, d, sc = _normalize(k, ctx.omega, states[0, 0], states[0, 1])
    states = states / sc

    n_keep = 2 * n_conv + 1  # regions up to r_{n_conv}
    kk = kaps[:n_keep]
    reg_int = (_lommel_cyl(kk, bounds[1:n_keep + 1], states[1:n_keep + 1, 0],
                           states[1:n_keep + 1, 1])
               - _lommel_cyl(kk, bounds[:n_keep], states[:n_keep, 0], states[:n_keep, 1]))
    cells = np.concatenate([[reg_int[0]], reg_int[1::2] + reg_int[2::2]])
    ratio = cells[-1] / cells[-2] if len(cells) > 2 and cells[-2] > 0 else 0.0
    ratio = min(max(ratio, 0.0), 0.999999)
    total = float(np.sum(cells)) + cells[-1] * ratio / (1 - ratio)
    tail = math.sqrt(total) / abs(v)

    tb = bounds[: n_keep + 1]
    tstates = states[: n_keep + 1]
    tkaps = kaps[:n_keep]

    def evaluator(r):
        r = np.asarray(r, dtype=float)
        shape = r.shape
        r = r.ravel()
        idx = np.clip(np.searchsorted(tb, r, side="right") - 1, 0, n_keep - 1)
        M = _region_propagators(tkaps[idx], r, tb[idx])
        st = np.einsum("nij,nj->ni", M, tstates[idx])
        return st[:, 0].reshape(shape), st[:, 1].reshape(shape)

    return FundamentalSolutionEntry(k, v, d, tail,
                                    info={"cells": n_conv, "cell_ratio": ratio},
                                    evaluator=evaluator)


def periodic_radial_product(k, ctx: CladdingContext, n_cells):
    """Truncated product ``S(R) M(R, r_n) S(r_n)^-1`` with the per-cell factor
    ``sigma^-1 sqrt(beta/alpha)`` (requires ``alpha > beta``).

    Its first column approaches ``(sqrt(R) phi(R), sqrt(R) phi'(R)/(k w))`` in
    the normalization of the infinite-product limit; the second column tends
    to zero.
    """
    if ctx.alpha <= ctx.beta:
        raise ValueError("the product normalization is defined for alpha > beta")
    ka = k * ctx.omega * math.sqrt(ctx.alpha)
    kb = k * ctx.omega * math.sqrt(ctx.beta)
    sigma = -math.sin(k * ctx.omega * ctx.theta * ctx.P * math.sqrt(ctx.alpha)) \
        * math.sin(k * ctx.omega * (1 - ctx.theta) * ctx.P * math.sqrt(ctx.beta))
    fac = math.sqrt(ctx.beta / ctx.alpha) / sigma
    bounds, kaps = _layout_kaps(ctx, 2 * n_cells + 1, ka, kb)
    mats = _rescaled_regions(k, ctx.omega, kaps, bounds)
    Pm = mats[0]
    for n in range(n_cells):
        Pm = Pm @ (fac * mats[2 * n + 1] @ mats[2 * n + 2])
    return Pm


# ------------------------------------------------------------ table + audit

SOLVERS = {
    ("cylindrical", True): fundsol_periodic_radial,
    ("slab", True): fundsol_periodic_slab,
    ("cylindrical", False): fundsol_step_radial,
    ("slab", False): fundsol_step_slab,
}


def fundsol(k, ctx: CladdingContext) -> FundamentalSolutionEntry:
    """Entry for odd ``k`` (negative ``k`` mirrors the positive one)."""
    k = abs(int(k))
    if k % 2 == 0:
        raise ValueError("k must be odd")
    e = SOLVERS[(ctx.geometry, ctx.periodic)](k, ctx)
    e.excluded = _is_excluded(e, ctx)
    return e


def _is_excluded(e, ctx):
    r = np.linspace(ctx.R, ctx.R + ctx.first_cell, SUP_SAMPLES)
    sup = np.max(np.abs(e.evaluate(r)[0]))
    return abs(e.value_at_R) < TAU_EXCL * sup


def worker_count():
    try:
        return max(1, int(os.environ.get("BREATHER_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class AssumptionAudit:
    a5_lower: float
    a5_upper: float
    a6_witnesses: List[int]
    a6_prime: float
    a6_prime_bound: float
    window: tuple

    @property
    def a6_prime_holds(self):
        return self.a6_prime > self.a6_prime_bound

    @property
    def passed(self):
        return self.a5_lower > 0 and math.isfinite(self.a5_upper) and bool(self.a6_witnesses)


@dataclass
class FundamentalSolutionTable:
    ctx: CladdingContext
    entries: Dict[int, FundamentalSolutionEntry]

    @classmethod
    def build(cls, ctx: CladdingContext, k_max: int, workers=None):
        ks = list(range(1, k_max + 1, 2))
        workers = workers or worker_count()
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as ex:
                ents = list(ex.map(lambda k: fundsol(k, ctx), ks))
        else:
            ents = [fundsol(k, ctx) for k in ks]
        return cls(ctx, dict(zip(ks, ents)))

    @classmethod
    def from_spec(cls, spec: ProblemSpec, k_max=None, workers=None):
        if k_max is None:
            k_max = 4 * spec.discretization.K
        return cls.build(CladdingContext.from_spec(spec), k_max, workers)

    def __getitem__(self, k):
        return self.entries[abs(int(k))]

    @property
    def k_max(self):
        return max(self.entries)

    def q(self, ks):
        return np.array([self[k].q for k in ks])

    def excluded(self, ks):
        return np.array([self[k].excluded for k in ks])

    def rows(self):
        for k in sorted(self.entries):
            e = self.entries[k]
            yield (k, e.value_at_R, e.deriv_at_R, e.q, e.tail_norm, e.excluded)


def comparison_ratio(ctx: CladdingContext, k):
    """Core comparison ratio: lam k I1'(lam k R)/I1(lam k R) or lam k tanh(lam k R)."""
    z = ctx.lam * k * ctx.R
    if ctx.geometry == "slab":
        return ctx.lam * k * math.tanh(z)
    i0e, i1e, _, _ = ik01_scaled(z)
    return ctx.lam * k * (float(i0e / i1e) - 1 / z)


def witnesses(table: FundamentalSolutionTable, k_limit=None):
    out = []
    for k in sorted(table.entries):
        if k_limit is not None and k > k_limit:
            break
        e = table.entries[k]
        if not e.excluded and e.q > comparison_ratio(table.ctx, k):
            out.append(k)
    return out


def audit_assumptions(table: FundamentalSolutionTable) -> AssumptionAudit:
    ks = sorted(table.entries)
    top = ks[(3 * len(ks)) // 4:] or ks
    ents = table.entries
    a5_lower = min(1.0 / ents[k].tail_norm for k in top)
    a5_upper = max(abs(ents[k].q) / (k * ents[k].tail_norm) for k in ks)
    a6p = max(ents[k].q / k for k in top)
    return AssumptionAudit(a5_lower, a5_upper, witnesses(table), a6p,
                           table.ctx.a6_prime_bound, (top[0], top[-1]))
