"""Extension of the core profile to the whole cross-section, and diagnostics."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
import scipy.linalg

from .config import ProblemSpec
from .discretization import DiscreteProfile
from .energy import EnergyFunctional
from .exceptions import ExclusionDerivativeUnstable, NoWitness, TruncationWarning
from .minimize import MinimizeOptions, minimize

MONO_TOL = 1e-6
FRACTION_FLOOR = 1e-6
MONOTONE_RTOL = 1e-8
D_STAR_THRESHOLD = -1e-10
TAIL_RTOL = 1e-6


# ---------------------------------------------------------------- field

@dataclass
class BreatherField:
    geometry: str
    r: np.ndarray
    t: np.ndarray
    w: np.ndarray
    w_t: np.ndarray
    alpha_k: np.ndarray
    modes: tuple
    energy_density: np.ndarray = field(repr=False)
    R: float = 0.0

    @property
    def intensity(self):
        return self.w_t ** 2


class ModeExtension:
    """Per-mode coefficient functions ``c_k(r)`` on ``[0, inf)``."""

    def __init__(self, profile: DiscreteProfile, functional: EnergyFunctional):
        self.profile = profile
        self.fn = functional
        self.table = functional.table
        self.modes = profile.modes
        R, N = profile.R, profile.N
        h = R / N
        alpha = np.zeros(len(self.modes), complex)
        for i, k in enumerate(self.modes):
            e = self.table[k]
            if e.excluded:
                if abs(e.deriv_at_R) < 1e-10:
                    raise ExclusionDerivativeUnstable(f"phi_{k}'(R) vanishes")
                slope = (profile.coeffs[i, -1] - profile.coeffs[i, -2]) / h
                alpha[i] = slope / e.deriv_at_R
            else:
                alpha[i] = profile.coeffs[i, -1] / e.value_at_R
        self.alpha = alpha

    def __call__(self, r):
        """Return ``(c, c_r)`` with shape ``(modes, len(r))``."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        p = self.profile
        nodes = p.nodes
        c = np.zeros((len(self.modes), r.size), complex)
        dc = np.zeros_like(c)
        core = r <= p.R
        if core.any():
            rc = r[core]
            e = np.clip(np.searchsorted(nodes, rc, side="right") - 1, 0, p.N - 1)
            h = nodes[1] - nodes[0]
            lam = (rc - nodes[e]) / h
            c[:, core] = p.coeffs[:, e] * (1 - lam) + p.coeffs[:, e + 1] * lam
            dc[:, core] = (p.coeffs[:, e + 1] - p.coeffs[:, e]) / h
        ext = ~core
        if ext.any():
            for i, k in enumerate(self.modes):
                phi, dphi = self.table[k].evaluate(r[ext])
                c[i, ext] = self.alpha[i] * phi
                dc[i, ext] = self.alpha[i] * dphi
        return c, dc


def _synth(c, modes, omega, t, derivative=False):
    ks = np.asarray(modes, float)
    E = np.exp(1j * omega * np.outer(t, ks))  # (nt, modes)
    fac = 1j * omega * ks if derivative else np.ones_like(ks)
    return 2 * np.real(c.T @ (E * fac).T)


def potential_profile(spec_fn: EnergyFunctional, r):
    """``V(r)`` and ``Gamma(r)`` on the whole half-line."""
    ctx = spec_fn.table.ctx
    r = np.asarray(r, dtype=float)
    V = np.full(r.shape, spec_fn.V)
    G = np.where(r < ctx.R, spec_fn.Gamma, 0.0)
    if ctx.periodic:
        y = np.mod(r - ctx.R, ctx.P)
        in_a = (y < ctx.theta * ctx.P / 2) | (y >= (1 - ctx.theta / 2) * ctx.P)
        Vc = np.where(in_a, -ctx.alpha, -ctx.beta)
    else:
        Vc = np.where(r < ctx.R + ctx.rho, -ctx.alpha, ctx.beta)
    return np.where(r < ctx.R, V, Vc), G


def extend_profile(profile: DiscreteProfile, functional: EnergyFunctional,
                   r_max=None, n_ext=400, periods=2.0, n_t=None) -> BreatherField:
    """Grid samples of the extended field over ``periods`` time periods."""
    ext = ModeExtension(profile, functional)
    ctx = functional.table.ctx
    r_max = ctx.r_max if r_max is None else r_max
    r = np.concatenate([profile.nodes, np.linspace(profile.R, r_max, n_ext + 1)[1:]])
    T = functional.grid.T
    n_t = n_t or max(64, 8 * max(profile.modes) + 8)
    t = np.linspace(0.0, periods * T, int(periods * n_t), endpoint=False)
    c, dc = ext(r)
    w = _synth(c, profile.modes, functional.omega, t)
    wt = _synth(c, profile.modes, functional.omega, t, derivative=True)
    wr = _synth(dc, profile.modes, functional.omega, t)
    nl, _ = _nonlinear_on_times(functional, c, t)
    dens = _density(functional, r, wt, wr, w, nl)
    return BreatherField(profile.geometry, r, t, w, wt, ext.alpha, profile.modes, dens,
                         profile.R)


def _density(fn, r, wt, wr, w, nl):
    V, G = potential_profile(fn, r)
    c2 = 1.0 / float(fn.spec.c) ** 2
    if fn.radial:
        safe = np.where(r > 0, r, 1.0)[:, None]
        mag = np.where(r[:, None] > 0, w / safe + wr, 2 * wr)
    else:
        mag = wr
    return (-V[:, None] + 2 * c2) * wt ** 2 - G[:, None] * nl + mag ** 2


# ---------------------------------------------------------------- diagnostics

def el_residual(profile: DiscreteProfile, functional: EnergyFunctional):
    """Per-mode sup of the discrete weak residual, normalized by ``max(1, |u|)``."""
    g = functional.gradient_profile(profile)
    unorm = float(np.linalg.norm(functional.pack(profile)))
    return np.abs(g).max(axis=1) / max(1.0, unorm)


def transverse_intensity(profile: DiscreteProfile, functional: EnergyFunctional):
    """``f(x_j) = (1/2) int w_t^2 dt`` at every node."""
    return functional.k2w2 @ np.abs(profile.coeffs) ** 2


def f_monotonicity(profile: DiscreteProfile, functional: EnergyFunctional):
    f = transverse_intensity(profile, functional)
    fmax = float(f.max())
    if fmax == 0:
        return {"monotone": True, "max_violation": 0.0, "f": f}
    viol = float(max(0.0, -np.diff(f).min()))
    return {"monotone": viol <= MONOTONE_RTOL * fmax, "max_violation": viol, "f": f}


@dataclass
class SpectrumClass:
    kind: str  # "Monochromatic" | "Polychromatic" | "Zero"
    k: Optional[int]
    fractions: dict
    n_above_floor: int
    kernel_compatible: Optional[bool]

    def __str__(self):
        return f"Monochromatic({self.k})" if self.kind == "Monochromatic" else self.kind


def classify_spectrum(profile: DiscreteProfile, functional: EnergyFunctional) -> SpectrumClass:
    pme = functional.energy(profile).per_mode_energy
    total = float(pme.sum())
    if total == 0:
        return SpectrumClass("Zero", None, {}, 0, None)
    frac = {int(k): float(e / total) for k, e in zip(profile.modes, pme)}
    kbest = max(frac, key=frac.get)
    n_above = sum(v > FRACTION_FLOOR for v in frac.values())
    compat = None
    if functional.averaged:
        kh = np.fft.fft(functional.kappa) / functional.kappa.size
        idx = (2 * kbest) % kh.size
        compat = bool(abs(kh[idx]) <= 1e-12 * abs(kh[0]))
    if frac[kbest] >= 1 - MONO_TOL:
        return SpectrumClass("Monochromatic", kbest, frac, n_above, compat)
    return SpectrumClass("Polychromatic", None, frac, n_above, compat)


def _panels(ctx, a, b, kmax, omega):
    """Gauss-Legendre nodes/weights on [a, b], split at material interfaces."""
    cuts = [a, b]
    if ctx.periodic:
        n0 = 0
        while True:
            for off in (ctx.theta * ctx.P / 2, (1 - ctx.theta / 2) * ctx.P):
                x = ctx.R + n0 * ctx.P + off
                if a < x < b:
                    cuts.append(x)
            if ctx.R + n0 * ctx.P > b:
                break
            n0 += 1
    else:
        x = ctx.R + ctx.rho
        if a < x < b:
            cuts.append(x)
    cuts = np.unique(cuts)
    kap = kmax * omega * math.sqrt(max(ctx.alpha, ctx.beta))
    width = min(0.1, math.pi / (2 * kap))
    xg, wg = np.polynomial.legendre.leggauss(6)
    xs, ws = [], []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        n = max(1, int(math.ceil((hi - lo) / width)))
        edges = np.linspace(lo, hi, n + 1)
        for e0, e1 in zip(edges[:-1], edges[1:]):
            xs.append(0.5 * (e0 + e1) + 0.5 * (e1 - e0) * xg)
            ws.append(0.5 * (e1 - e0) * wg)
    return np.concatenate(xs), np.concatenate(ws)


def decay_radius(table, modes, rtol=1e-9):
    """Radius beyond which every mode's squared amplitude has dropped by ``rtol``."""
    ctx = table.ctx
    if ctx.periodic:
        ratio = 0.0
        for k in modes:
            info = table[k].info
            ratio = max(ratio, info["cell_ratio"] if "cell_ratio" in info else info["rho"] ** 2)
        ratio = min(ratio, 1 - 1e-12)
        n = int(math.ceil(math.log(rtol) / math.log(ratio))) + 1 if ratio > 0 else 1
        return ctx.R + max(n, 4) * ctx.P
    s = math.log(1 / rtol) / (2 * ctx.omega * math.sqrt(ctx.beta) * min(modes))
    return ctx.R + ctx.rho + max(s, 8 / (ctx.omega * math.sqrt(ctx.beta)))


class SegmentEnergy:
    """Electromagnetic energy per unit length (radial) or unit area (slab)
    of the travelling field over the time window ``[t0 - 1/c, t0]``."""

    def __init__(self, profile: DiscreteProfile, functional: EnergyFunctional, r_max=None):
        self.fn = functional
        self.ext = ModeExtension(profile, functional)
        ctx = functional.table.ctx
        self.r_max = decay_radius(functional.table, profile.modes) if r_max is None else r_max
        kmax = max(profile.modes)
        # core: element-wise Gauss on the piecewise-linear interpolant
        xg, wg = np.polynomial.legendre.leggauss(4)
        nodes = profile.nodes
        h = nodes[1] - nodes[0]
        rc = (0.5 * (nodes[:-1] + nodes[1:])[:, None] + 0.5 * h * xg[None]).ravel()
        wc = np.tile(0.5 * h * wg, profile.N)
        re, we = _panels(ctx, profile.R, self.r_max, kmax, functional.omega)
        self.r = np.concatenate([rc, re])
        self.wr = np.concatenate([wc, we])
        self.n_core = rc.size
        span = (self.r_max - profile.R) / 4
        self.r_tail, self.w_tail = _panels(ctx, self.r_max, self.r_max + span, kmax,
                                           functional.omega)
        self._cache = {}
        self.c2 = 1.0 / float(functional.spec.c) ** 2
        self.window = 1.0 / float(functional.spec.c)
        nt = int(math.ceil(4 * kmax * functional.omega * self.window / 2)) + 48
        self.tg, self.twg = np.polynomial.legendre.leggauss(nt)

    def _integrate(self, r, wr, t0):
        fn = self.fn
        a, b = t0 - self.window, t0
        t = 0.5 * (a + b) + 0.5 * (b - a) * self.tg
        wt_w = 0.5 * (b - a) * self.twg
        key = id(r)
        if key not in self._cache:
            self._cache[key] = self.ext(r)
        c, dc = self._cache[key]
        nl, wt = _nonlinear_on_times(fn, c, t)
        w = _synth(c, fn.modes, fn.omega, t)
        wrr = _synth(dc, fn.modes, fn.omega, t)
        V, G = potential_profile(fn, r)
        if fn.radial:
            mag = w / r[:, None] + wrr
            rw = r
            pref = 2 * math.pi * float(fn.spec.c)
        else:
            mag = wrr
            rw = np.ones_like(r)
            pref = 2 * float(fn.spec.c)  # even profile: both half-lines
        dens = (-V[:, None] + 2 * self.c2) * wt ** 2 - G[:, None] * nl + mag ** 2
        return pref * float((wr * rw) @ (dens @ wt_w))

    def __call__(self, t0):
        return self._integrate(self.r, self.wr, t0)

    def tail(self, t0):
        return self._integrate(self.r_tail, self.w_tail, t0)


def _nonlinear_on_times(fn, c, t):
    """``N(w_t) w_t`` and ``w_t`` at arbitrary times; ``c`` has one row per mode."""
    wt = _synth(c, fn.modes, fn.omega, t, derivative=True)
    if not fn.averaged:
        return wt ** 4, wt
    from .discretization import synthesize
    M = fn.grid.M
    g = synthesize(c, fn.modes, fn.grid, derivative=True) ** 2
    gh = np.fft.rfft(g, axis=-1) / M * fn.kappa_rhat
    m = np.arange(gh.shape[-1])
    E = np.exp(1j * fn.omega * np.outer(t, m))
    wts = np.where(m == 0, 1.0, 2.0)
    conv = np.real(gh @ (E * wts).T)
    return conv * wt ** 2, wt


def segment_energy(profile: DiscreteProfile, functional: EnergyFunctional,
                   t0_samples: Sequence[float], r_max=None):
    """Energy per unit segment for each window end ``t0``."""
    se = SegmentEnergy(profile, functional, r_max)
    vals = np.array([se(t0) for t0 in t0_samples])
    tails = np.array([se.tail(t0) for t0 in t0_samples])
    ref = np.max(np.abs(vals)) if vals.size else 0.0
    if ref > 0 and np.max(np.abs(tails)) > TAIL_RTOL * ref:
        warnings.warn(f"field beyond r_max={se.r_max:g} carries "
                      f"{np.max(np.abs(tails)) / ref:.2e} of the segment energy",
                      TruncationWarning, stacklevel=2)
    return vals


@dataclass
class DiagnosticsReport:
    el_residual_per_mode: np.ndarray
    energy_negative: bool
    energy_value: float
    f_monotone: bool
    f_max_violation: float
    spectrum_class: str
    mode_fractions: dict
    segment_energy: np.ndarray
    segment_max: float
    segment_min: float
    continuity_mismatch: float
    kernel_compatible: Optional[bool] = None

    def as_dict(self):
        return {
            "el_residual_per_mode": [float(v) for v in self.el_residual_per_mode],
            "energy_negative": self.energy_negative,
            "energy_value": self.energy_value,
            "f_monotone": self.f_monotone,
            "f_max_violation": self.f_max_violation,
            "spectrum_class": self.spectrum_class,
            "mode_fractions": {str(k): v for k, v in self.mode_fractions.items()},
            "kernel_compatible": self.kernel_compatible,
            "segment_energy": [float(v) for v in self.segment_energy],
            "segment_max": self.segment_max,
            "segment_min": self.segment_min,
            "continuity_mismatch": self.continuity_mismatch,
        }


def diagnose(profile: DiscreteProfile, functional: EnergyFunctional, n_t0=16) -> DiagnosticsReport:
    rep = functional.energy(profile)
    mono = f_monotonicity(profile, functional)
    spec = classify_spectrum(profile, functional)
    T = functional.grid.T
    t0 = T * np.arange(n_t0) / n_t0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        seg = segment_energy(profile, functional, t0)
    ext = ModeExtension(profile, functional)
    c_ext = np.array([ext.alpha[i] * functional.table[k].value_at_R
                      for i, k in enumerate(profile.modes)])
    regular = ~functional.excluded
    mismatch = float(np.max(np.abs(c_ext - profile.coeffs[:, -1])[regular], initial=0.0))
    return DiagnosticsReport(el_residual(profile, functional), rep.E_total < 0, rep.E_total,
                             mono["monotone"], mono["max_violation"], str(spec),
                             spec.fractions, seg, float(seg.max()), float(seg.min()),
                             mismatch, spec.kernel_compatible)


# ---------------------------------------------------------------- bifurcation

def linear_mode(functional: EnergyFunctional):
    """Lowest generalized eigenpair of the quadratic part over all active modes.

    Returns ``(d_lin, k, profile)``: the core value at which the quadratic
    energy first becomes indefinite, the mode carrying it, and the
    eigenvector as a single-mode profile.
    """
    c2 = 1.0 / float(functional.spec.c) ** 2 - 1.0
    best = (math.inf, None, None)
    for i, k in enumerate(functional.modes):
        if not functional.active[i]:
            continue
        idx = np.flatnonzero(functional.mask[i])
        A = functional.A[np.ix_(idx, idx)].copy()
        if not functional.excluded[i] and idx[-1] == functional.N:
            A[-1, -1] -= functional.bfac * functional.q[i]
        Mk = functional.k2w2[i] * functional.Mm[np.ix_(idx, idx)]
        mu, vec = scipy.linalg.eigh(A, Mk, subset_by_index=[0, 0])
        if mu[0] < best[0]:
            best = (mu[0], i, (idx, vec[:, 0]))
    mu, i, (idx, vec) = best
    p = functional.zeros()
    p.coeffs[i, idx] = vec / np.abs(vec).max()
    return c2 + mu, functional.modes[i], p


def linear_threshold(functional: EnergyFunctional):
    """Smallest core value ``d`` at which the quadratic part becomes indefinite."""
    return linear_mode(functional)[0]


def profile_norm(profile: DiscreteProfile, functional: EnergyFunctional):
    """``(int u_r^2 + (u/r)^2 + u_t^2)^(1/2)`` (slab: without the 1/r term)."""
    c = profile.coeffs
    K2 = functional.k2w2[:, None, None]
    Q = functional.A[None] + K2 * functional.Mm[None]
    val = np.einsum("ki,kij,kj->", c.real, Q, c.real) + np.einsum("ki,kij,kj->", c.imag, Q,
                                                                   c.imag)
    return math.sqrt(2 * val)


@dataclass
class SweepRow:
    d: float
    E: float
    norm: float


@dataclass
class SweepResult:
    rows: List[SweepRow]
    d_star: float
    d_star_linear: float
    exponent: float
    fit_rows: List[SweepRow]
    exponent_linear: float = math.nan


def _solve_at(spec, d, table, opts, previous=None):
    """Best of: the linear eigenvector ray, the previous minimizer, the ansatz."""
    from .minimize import golden_section
    fn = EnergyFunctional(spec.with_(d=d), table)
    _, _, shape = linear_mode(fn)
    x0 = fn.pack(shape)
    le, _ = golden_section(lambda s_: fn.value(math.exp(s_) * x0), math.log(1e-6), math.log(10.0))
    starts = [shape.copy(math.exp(le) * shape.coeffs)]
    if previous is not None:
        starts.append(fn.conform(previous))
    base = {**opts.__dict__, "strict": False, "seed": "provided", "restarts": 1}
    results = [minimize(fn, MinimizeOptions(**base), p0=p) for p in starts]
    try:
        results.append(minimize(fn, MinimizeOptions(**{**opts.__dict__, "strict": False})))
    except NoWitness:
        pass
    return fn, min(results, key=lambda r: r.report.E_total)


def sweep_d(spec: ProblemSpec, d_values: Sequence[float], table=None,
            opts: Optional[MinimizeOptions] = None, locate=True) -> SweepResult:
    """Minimize at each ``d`` and fit ``|u*| ~ (d - d_star)^p``.

    ``d_star`` is located by bisection on the sign test ``E* < -1e-10``
    between the largest ``d`` with ``E* >= -1e-10`` and the smallest with
    ``E* < -1e-10``.
    """
    from .fundsol import FundamentalSolutionTable
    opts = opts or MinimizeOptions(restarts=1)
    table = table or FundamentalSolutionTable.from_spec(spec)
    d_values = sorted((float(d) for d in d_values), reverse=True)
    rows = []
    prev = None
    for d in d_values:
        fn, res = _solve_at(spec, d, table, opts, prev)
        prev = res.profile if res.report.E_total < D_STAR_THRESHOLD else None
        rows.append(SweepRow(d, res.report.E_total, profile_norm(res.profile, fn)))
    fn0 = EnergyFunctional(spec.with_(d=d_values[0]), table)
    d_lin = linear_threshold(fn0)
    neg = [r for r in rows if r.E < D_STAR_THRESHOLD]
    d_star = min((r.d for r in neg), default=math.nan)
    if locate and neg:
        lo_cands = [r.d for r in rows if r.E >= D_STAR_THRESHOLD]
        # admissible core values satisfy delta < alpha, i.e. d > c^-2 - 1 - alpha
        alpha = float(table.ctx.alpha)
        d_floor = max(1.0 / float(spec.c) ** 2 - 1.0 - alpha, 0.0) + 1e-12
        lo = max(lo_cands) if lo_cands else max(d_lin - 1e-3, d_floor)
        hi = d_star
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            _, res = _solve_at(spec, mid, table, opts)
            if res.report.E_total < D_STAR_THRESHOLD:
                hi = mid
            else:
                lo = mid
            if hi - lo < 1e-9:
                break
        d_star = hi
    fit = [r for r in neg if r.d > d_star and r.norm > 0]
    exponent = _loglog_slope(fit, d_star)
    exponent_lin = _loglog_slope([r for r in neg if r.d > d_lin and r.norm > 0], d_lin)
    return SweepResult(rows, d_star, d_lin, exponent, fit, exponent_lin)


def _loglog_slope(rows, d0):
    if len(rows) < 2:
        return math.nan
    x = np.log([r.d - d0 for r in rows])
    y = np.log([r.norm for r in rows])
    return float(np.polyfit(x, y, 1)[0])
