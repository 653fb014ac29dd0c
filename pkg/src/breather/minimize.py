"""Seeding and quasi-Newton minimization of the discrete energy."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .discretization import DiscreteProfile
from .energy import EnergyFunctional, EnergyReport
from .exceptions import Diverged, NoWitness
from .fundsol import comparison_ratio, witnesses
from .special import ik01_scaled

DIVERGED_BELOW = -1e12
EPS_BRACKET = (1e-4, 10.0)


@dataclass
class MinimizeOptions:
    max_iters: int = 20000
    grad_tol: float = 1e-8
    seed: str = "ansatz"  # "ansatz" | "random" | "provided"
    k0: Optional[int] = None
    eps: Optional[float] = None
    rng_seed: int = 0
    restarts: int = 3
    memory: int = 10
    backtrack: float = 0.5
    c1: float = 1e-4
    strict: bool = True

    def __post_init__(self):
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be positive")
        if self.k0 is not None and self.k0 % 2 == 0:
            raise ValueError("k0 must be odd")
        if self.seed not in ("ansatz", "random", "provided"):
            raise ValueError(f"unknown seed kind {self.seed!r}")


@dataclass
class RunResult:
    profile: DiscreteProfile
    report: EnergyReport
    trace: List[tuple]
    converged: bool
    start: str


@dataclass
class MinimizeResult:
    profile: DiscreteProfile
    report: EnergyReport
    trace: List[tuple]
    converged: bool
    runs: List[RunResult] = field(repr=False)
    seed_energy: float = float("nan")
    k0: Optional[int] = None
    eps: Optional[float] = None

    @property
    def energies(self):
        return [r.report.E_total for r in self.runs]


# ---------------------------------------------------------------- L-BFGS

def lbfgs(fun_grad, x0, precond=None, max_iters=20000, grad_tol=1e-8, memory=10,
          c1=1e-4, backtrack=0.5):
    """Limited-memory BFGS with an optional inverse-Hessian seed ``precond``.

    Stops when ``|g| <= grad_tol * max(1, |f|)``. Backtracking uses the
    sufficient-decrease test; near round-off level a step is also accepted
    when the energy does not rise measurably and the gradient shrinks.
    Returns ``(x, f, g, trace, converged)``.
    """
    apply_h0 = precond if precond is not None else (lambda v: v)
    x = np.array(x0, dtype=float)
    f, g = fun_grad(x)
    gn = float(np.linalg.norm(g))
    trace = [(0, f, gn, 0.0)]
    S, Y, RHO = [], [], []
    fails = 0
    for it in range(1, max_iters + 1):
        if gn <= grad_tol * max(1.0, abs(f)):
            return x, f, g, trace, True
        q = g.copy()
        alphas = []
        for s, y, rho in zip(reversed(S), reversed(Y), reversed(RHO)):
            a = rho * (s @ q)
            alphas.append(a)
            q -= a * y
        r = apply_h0(q)
        if S:
            y = Y[-1]
            r *= (S[-1] @ y) / (y @ apply_h0(y))
        for (s, y, rho), a in zip(zip(S, Y, RHO), reversed(alphas)):
            b = rho * (y @ r)
            r += (a - b) * s
        d = -r
        slope = g @ d
        if not slope < 0:
            S, Y, RHO = [], [], []
            d = -apply_h0(g)
            slope = g @ d
        t = 1.0
        accepted = False
        while t > 1e-20:
            xn = x + t * d
            fn, gnew = fun_grad(xn)
            if fn < DIVERGED_BELOW:
                raise Diverged(f"energy fell below {DIVERGED_BELOW:g}")
            if fn <= f + c1 * t * slope:
                accepted = True
                break
            noise = 1e-13 * max(1.0, abs(f))
            if fn <= f + noise and np.linalg.norm(gnew) < gn:
                accepted = True
                break
            t *= backtrack
        if not accepted:
            fails += 1
            S, Y, RHO = [], [], []
            trace.append((it, f, gn, 0.0))
            if fails >= 2:
                return x, f, g, trace, gn <= grad_tol * max(1.0, abs(f))
            continue
        fails = 0
        s = xn - x
        y = gnew - g
        sy = s @ y
        if sy > 1e-14 * np.linalg.norm(s) * np.linalg.norm(y):
            S.append(s)
            Y.append(y)
            RHO.append(1.0 / sy)
            if len(S) > memory:
                S.pop(0)
                Y.pop(0)
                RHO.pop(0)
        x, f, g = xn, fn, gnew
        gn = float(np.linalg.norm(g))
        trace.append((it, f, gn, t))
    return x, f, g, trace, gn <= grad_tol * max(1.0, abs(f))


# ---------------------------------------------------------------- seeding

def ansatz_shape(functional: EnergyFunctional, k0):
    """Core profile ``I1(lam k0 r)`` or ``cosh(lam k0 x)``, scaled to 1 at ``R``."""
    lam = functional.table.ctx.lam
    x = functional.nodes
    R = functional.R
    a = lam * k0
    if functional.radial:
        xs = np.where(x > 0, x, 1.0)
        i1 = ik01_scaled(a * xs)[1]
        i1R = ik01_scaled(a * R)[1]
        return np.where(x > 0, i1 / i1R * np.exp(a * (x - R)), 0.0)
    return np.exp(a * (x - R)) * (1 + np.exp(-2 * a * x)) / (1 + np.exp(-2 * a * R))


def _ray_profile(functional, k0, shape, eps):
    p = functional.zeros()
    p.coeffs[functional.modes.index(k0)] = eps * shape
    return p


def golden_section(fun, lo, hi, tol=1e-10, max_iter=200):
    """Minimize a unimodal function on ``[lo, hi]``."""
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(max_iter):
        if abs(b - a) <= tol * (abs(a) + abs(b)):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    x = 0.5 * (a + b)
    return x, fun(x)


def seed_ansatz(functional: EnergyFunctional, k0, eps=None, strict=True):
    """Single-mode ansatz at ``k0``; ``eps`` from a golden-section line search
    (in ``log eps``) over ``[1e-4, 10]`` when not given.

    Returns ``(profile, eps, energy)``.
    """
    if k0 not in functional.modes or not functional.active[functional.modes.index(k0)]:
        raise ValueError(f"k0={k0} is not an active mode")
    i = functional.modes.index(k0)
    if functional.excluded[i]:
        raise NoWitness(f"k0={k0} is an excluded mode")
    if strict and not functional.table[k0].q > comparison_ratio(functional.table.ctx, k0):
        raise NoWitness(f"k0={k0} does not satisfy the witness inequality")
    shape = ansatz_shape(functional, k0)

    def energy(e):
        return functional.value(functional.pack(_ray_profile(functional, k0, shape, e)))

    if eps is None:
        le, E = golden_section(lambda s: energy(math.exp(s)),
                               math.log(EPS_BRACKET[0]), math.log(EPS_BRACKET[1]))
        eps = math.exp(le)
    else:
        E = energy(eps)
    return _ray_profile(functional, k0, shape, eps), eps, E


def best_witness_seed(functional: EnergyFunctional, strict=True):
    """Ansatz over all active witnesses; keep the lowest ray energy."""
    cands = [k for k in witnesses(functional.table, max(functional.modes))
             if functional.active[functional.modes.index(k)]]
    if not cands:
        if strict:
            raise NoWitness("no active mode satisfies the witness inequality")
        cands = [k for k, a in zip(functional.modes, functional.active) if a][:1]
    best = None
    for k in cands:
        p, eps, E = seed_ansatz(functional, k, strict=False)
        if best is None or E < best[3]:
            best = (p, k, eps, E)
    return best


def random_start(functional: EnergyFunctional, rng, scale):
    p = functional.zeros()
    shape = (functional.nodes / functional.R) if functional.radial \
        else np.ones_like(functional.nodes)
    for i, k in enumerate(functional.modes):
        if functional.active[i]:
            z = rng.standard_normal(2)
            p.coeffs[i] = scale / k * (z[0] + 1j * z[1]) * shape * (1 + 0.1 * rng.standard_normal(
                shape.size))
    p.coeffs *= functional.mask
    return p


# ---------------------------------------------------------------- driver

def minimize(functional: EnergyFunctional, opts: Optional[MinimizeOptions] = None,
             p0: Optional[DiscreteProfile] = None) -> MinimizeResult:
    """Descent from the seed plus ``restarts - 1`` random starts; best run wins."""
    opts = opts or MinimizeOptions()
    rng = np.random.default_rng(opts.rng_seed)
    starts = []
    seed_E, k0, eps = float("nan"), None, None
    if opts.seed == "provided":
        if p0 is None:
            raise ValueError("seed='provided' needs a starting profile")
        starts.append(("provided", functional.conform(p0)))
    elif opts.seed == "ansatz":
        if opts.k0 is not None:
            p, eps, seed_E = seed_ansatz(functional, opts.k0, opts.eps, strict=opts.strict)
            k0 = opts.k0
        else:
            p, k0, eps, seed_E = best_witness_seed(functional, strict=opts.strict)
        starts.append((f"ansatz(k0={k0})", p))
    elif p0 is not None:
        starts.append(("provided", functional.conform(p0)))
    scale = max(np.abs(starts[0][1].coeffs).max(), 1e-2) if starts else 0.1
    while len(starts) < max(1, opts.restarts):
        starts.append((f"random({len(starts)})", random_start(functional, rng, 0.5 * scale)))

    runs = []
    for label, p in starts:
        x, f, g, trace, ok = lbfgs(functional.value_and_grad, functional.pack(p),
                                   precond=functional.precondition,
                                   max_iters=opts.max_iters, grad_tol=opts.grad_tol,
                                   memory=opts.memory, c1=opts.c1, backtrack=opts.backtrack)
        prof = functional.unpack(x)
        runs.append(RunResult(prof, functional.energy(prof), trace, ok, label))
    best = min(runs, key=lambda r: r.report.E_total)
    return MinimizeResult(best.profile, best.report, best.trace, best.converged, runs,
                          seed_E, k0, eps)
