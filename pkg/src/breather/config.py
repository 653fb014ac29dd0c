"""Problem specification, derived coefficients and admissibility arithmetic.

Inputs given as integers or fraction strings (``"45/16"``) are kept as exact
``Fraction`` values so that the odd/odd rationality test and the period check
run in exact arithmetic. Floats are converted by continued-fraction
reconstruction (denominator at most 10**6, relative tolerance 1e-12) and kept
as floats when no such fraction exists.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Optional, Tuple, Union

from .exceptions import (NotOddRational, PeriodMismatch, SignViolation,
                         XiOutOfRange)
from .kernel import KernelSpec, load_sampled_csv

Number = Union[Fraction, float]

DENOM_CAP = 10 ** 6
RATIONAL_RTOL = 1e-12
MN_SEARCH_MAX = 64


# ----------------------------------------------------------------- numbers

def to_number(v) -> Number:
    """Parse an int, float or ``"p/q"`` string; exact where possible."""
    if isinstance(v, Fraction):
        return v
    if isinstance(v, bool):
        raise TypeError("boolean is not a number")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, str):
        return Fraction(v.strip())
    if isinstance(v, float):
        return rationalize(v)
    raise TypeError(f"cannot interpret {v!r} as a number")


def rationalize(x: float) -> Number:
    """Continued-fraction reconstruction of a float, or the float itself."""
    if not math.isfinite(x):
        raise ValueError("non-finite number")
    q = Fraction(x).limit_denominator(DENOM_CAP)
    if abs(float(q) - x) <= RATIONAL_RTOL * max(abs(x), 1e-300):
        return q
    return x


def exact_sqrt(q: Number) -> Number:
    """Square root, exact when ``q`` is the square of a fraction."""
    if isinstance(q, Fraction) and q >= 0:
        rn, rd = math.isqrt(q.numerator), math.isqrt(q.denominator)
        if rn * rn == q.numerator and rd * rd == q.denominator:
            return Fraction(rn, rd)
    return math.sqrt(q)


def numbers_equal(x: Number, y: Number) -> bool:
    if isinstance(x, Fraction) and isinstance(y, Fraction):
        return x == y
    return abs(float(x) - float(y)) <= RATIONAL_RTOL * max(abs(float(x)), abs(float(y)))


def _fmt(v: Number):
    return str(v) if isinstance(v, Fraction) else v


# ----------------------------------------------------------------- types

@dataclass(frozen=True)
class PeriodicStep:
    a: Number
    b: Number
    theta: Number
    P: Number

    def __post_init__(self):
        if not 0 < self.theta < 1:
            raise ValueError("theta must lie in (0, 1)")
        if self.P <= 0:
            raise ValueError("P must be positive")


@dataclass(frozen=True)
class PureStep:
    a: Number
    b: Number
    rho: Number

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError("rho must be positive")


@dataclass(frozen=True)
class PotentialSpec:
    d: Number
    cladding: Union[PeriodicStep, PureStep]


@dataclass(frozen=True)
class Discretization:
    K: int = 64
    N: int = 128
    M: Optional[int] = None

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.N < 2:
            raise ValueError("N must be >= 2")
        M = self.M if self.M is not None else 8 * (self.K + 1)
        if M <= 4 * self.K or M % 2:
            raise ValueError("M must be even and exceed 4K")
        object.__setattr__(self, "M", M)

    @property
    def modes(self):
        return tuple(range(1, self.K + 1, 2))


@dataclass(frozen=True)
class ProblemSpec:
    geometry: str
    potential: PotentialSpec
    c: Number
    T: Number
    R: Number
    gamma: Number = Fraction(1)
    nonlinearity: str = "instantaneous"
    kernel: Optional[KernelSpec] = None
    discretization: Discretization = field(default_factory=Discretization)
    step_mn: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        if self.geometry not in ("cylindrical", "slab"):
            raise ValueError("geometry must be 'cylindrical' or 'slab'")
        if not 0 < self.c < 1:
            raise ValueError("c must lie in (0, 1)")
        for name in ("T", "R", "gamma"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.nonlinearity not in ("instantaneous", "averaged"):
            raise ValueError("nonlinearity must be 'instantaneous' or 'averaged'")
        if self.nonlinearity == "averaged" and self.kernel is None:
            object.__setattr__(self, "kernel", KernelSpec())

    @property
    def omega(self) -> float:
        return 2 * math.pi / float(self.T)

    @property
    def periodic(self) -> bool:
        return isinstance(self.potential.cladding, PeriodicStep)

    def with_(self, **changes):
        """Copy with top-level fields replaced; ``d`` and discretization keys allowed."""
        disc = {k: changes.pop(k) for k in ("K", "N", "M") if k in changes}
        if disc:
            cur = self.discretization
            if "K" in disc and "M" not in disc:
                disc["M"] = None
            changes["discretization"] = Discretization(
                disc.get("K", cur.K), disc.get("N", cur.N),
                disc.get("M", cur.M))
        if "d" in changes:
            changes["potential"] = replace(self.potential, d=to_number(changes.pop("d")))
        return replace(self, **changes)


@dataclass(frozen=True)
class DerivedCoefficients:
    V_core: Number
    Gamma_core: Number
    alpha: Number
    beta: Number
    delta: Number
    lam: float
    omega: float
    c_inv2_minus1: Number


# ----------------------------------------------------------------- checks

def _chain(cond: str, ok: bool):
    if not ok:
        raise SignViolation(f"admissibility inequality violated: {cond}", condition=cond)


def check_inequalities(spec: ProblemSpec):
    """Raise ``SignViolation`` naming the first broken admissibility inequality."""
    c2 = 1 / (Fraction(spec.c) ** 2 if isinstance(spec.c, Fraction) else spec.c ** 2) - 1
    d = spec.potential.d
    cl = spec.potential.cladding
    if isinstance(cl, PeriodicStep):
        _chain("0<d<c⁻²−1", 0 < d < c2)
        _chain("c⁻²−1<min{a,b,(a+d)/2}", c2 < min(cl.a, cl.b, (cl.a + d) / 2))
    else:
        _chain("0<min{b,d}", 0 < min(cl.b, d))
        _chain("max{b,d}<c⁻²−1", max(cl.b, d) < c2)
        _chain("c⁻²−1<a", c2 < cl.a)
    return c2


def derive_coefficients(spec: ProblemSpec) -> DerivedCoefficients:
    """Coefficients of the reduced mode equations in core and cladding."""
    c2 = check_inequalities(spec)
    cl = spec.potential.cladding
    delta = c2 - spec.potential.d
    alpha = cl.a - c2
    beta = cl.b - c2 if isinstance(cl, PeriodicStep) else c2 - cl.b
    for name, v in (("δ>0", delta), ("α>0", alpha), ("β>0", beta)):
        _chain(name, v > 0)
    _chain("δ<α", delta < alpha)
    lam = spec.omega * math.sqrt(delta)
    return DerivedCoefficients(V_core=delta, Gamma_core=spec.gamma, alpha=alpha,
                               beta=beta, delta=delta, lam=lam, omega=spec.omega,
                               c_inv2_minus1=c2)


@dataclass(frozen=True)
class PeriodicValidation:
    m: int
    n: int
    ratio: Number
    T_required: Number


@dataclass(frozen=True)
class StepValidation:
    m: int
    n: int
    xi: float
    xi_bound: float
    T_required: Number
    matches: Tuple[Tuple[int, int], ...] = ()


def validate_periodic(spec: ProblemSpec) -> PeriodicValidation:
    cl = spec.potential.cladding
    if not isinstance(cl, PeriodicStep):
        raise TypeError("validate_periodic needs a periodic cladding")
    co = derive_coefficients(spec)
    ratio_sq = co.alpha * cl.theta ** 2 / (co.beta * (1 - cl.theta) ** 2)
    ratio = exact_sqrt(ratio_sq)
    q = ratio if isinstance(ratio, Fraction) else rationalize(float(ratio))
    if not isinstance(q, Fraction):
        raise NotOddRational(f"ratio {ratio!r} is not rational",
                             condition="√α·θ/(√β·(1−θ)) ∈ ℕodd/ℕodd")
    m, n = q.numerator, q.denominator
    if m % 2 == 0 or n % 2 == 0:
        raise NotOddRational(f"ratio {m}/{n} is not a ratio of odd integers",
                             condition="√α·θ/(√β·(1−θ)) ∈ ℕodd/ℕodd")
    T_req = 4 * exact_sqrt(co.alpha) * cl.theta * cl.P / m
    if not numbers_equal(T_req, spec.T):
        raise PeriodMismatch(f"T={_fmt(spec.T)} but the cladding requires T={_fmt(T_req)}",
                             condition="T = 4√α·θ·P/m")
    return PeriodicValidation(m, n, q, T_req)


def _xi(p, m, n):
    base = m * math.pi / (2 * n)
    step = math.pi / n
    s = (p - base) / step
    j = round(s) if abs(s - round(s)) < 1e-12 else math.ceil(s)
    return base + j * step - p


def validate_step(spec: ProblemSpec, mn: Optional[Tuple[int, int]] = None) -> StepValidation:
    cl = spec.potential.cladding
    if not isinstance(cl, PureStep):
        raise TypeError("validate_step needs a step cladding")
    co = derive_coefficients(spec)
    p = math.atan(math.sqrt(co.alpha / co.beta))
    bound = math.atan(math.sqrt(co.alpha / co.delta))
    sqa = exact_sqrt(co.alpha)
    mn = mn or spec.step_mn

    def t_req(m, n):
        return 4 * sqa * cl.rho * Fraction(n, m) if isinstance(sqa, Fraction) \
            else 4 * sqa * float(cl.rho) * n / m

    if mn is not None:
        m, n = mn
        if math.gcd(m, n) != 1:
            raise ValueError("m and n must be coprime")
        xi = _xi(p, m, n)
        if not 0 < xi < bound:
            raise XiOutOfRange(f"xi={xi:.15g} not in (0, {bound:.15g})",
                               condition="0<ξ<arctan√(α/δ)")
        T_req = t_req(m, n)
        if not numbers_equal(T_req, spec.T):
            raise PeriodMismatch(f"T={_fmt(spec.T)} but (m,n)=({m},{n}) requires "
                                 f"T={_fmt(T_req)}", condition="T = 4√α·ρ·n/m")
        return StepValidation(m, n, xi, bound, T_req, ((m, n),))

    matches, xi_ok = [], False
    for m in range(1, MN_SEARCH_MAX + 1):
        for n in range(1, MN_SEARCH_MAX + 1):
            if math.gcd(m, n) != 1:
                continue
            xi = _xi(p, m, n)
            if 0 < xi < bound:
                xi_ok = True
                if numbers_equal(t_req(m, n), spec.T):
                    matches.append((m, n))
    if not matches:
        if not xi_ok:
            raise XiOutOfRange("no coprime (m,n) <= 64 gives 0<xi<arctan√(α/δ)",
                               condition="0<ξ<arctan√(α/δ)")
        raise PeriodMismatch("no admissible (m,n) <= 64 reproduces T",
                             condition="T = 4√α·ρ·n/m")
    m, n = matches[0]
    return StepValidation(m, n, _xi(p, m, n), bound, t_req(m, n), tuple(matches))


def validate(spec: ProblemSpec):
    """Run the arithmetic admissibility test appropriate to the cladding."""
    if spec.periodic:
        return validate_periodic(spec)
    return validate_step(spec)


# ----------------------------------------------------------------- JSON

def spec_from_dict(doc: dict, base_dir: Optional[Path] = None) -> ProblemSpec:
    pot = doc["potential"]
    cl = pot["cladding"]
    ctype = cl["type"]
    if ctype == "periodic":
        cladding = PeriodicStep(*(to_number(cl[k]) for k in ("a", "b", "theta", "P")))
    elif ctype == "step":
        cladding = PureStep(*(to_number(cl[k]) for k in ("a", "b", "rho")))
    else:
        raise ValueError(f"unknown cladding type {ctype!r}")
    nl = doc.get("nonlinearity", {"type": "instantaneous"})
    if isinstance(nl, str):
        nl = {"type": nl}
    kernel = None
    if nl["type"] == "averaged":
        kd = dict(nl.get("kernel", {"form": "constant_one"}))
        if kd.get("form") == "sampled" and "path" in kd:
            path = Path(kd.pop("path"))
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            kd["values"] = tuple(load_sampled_csv(path))
        if "weights" in kd:
            kd["weights"] = tuple(float(to_number(w)) for w in kd["weights"])
        if "values" in kd:
            kd["values"] = tuple(float(v) for v in kd["values"])
        kernel = KernelSpec(**kd)
    disc = doc.get("discretization", {})
    mn = doc.get("step_mn")
    return ProblemSpec(
        geometry=doc["geometry"],
        potential=PotentialSpec(to_number(pot["d"]), cladding),
        c=to_number(doc["c"]), T=to_number(doc["T"]), R=to_number(doc["R"]),
        gamma=to_number(doc.get("gamma", 1)),
        nonlinearity=nl["type"], kernel=kernel,
        discretization=Discretization(disc.get("K", 64), disc.get("N", 128), disc.get("M")),
        step_mn=tuple(mn) if mn else None,
    )


def spec_to_dict(spec: ProblemSpec) -> dict:
    cl = spec.potential.cladding
    if isinstance(cl, PeriodicStep):
        cd = {"type": "periodic", "a": _fmt(cl.a), "b": _fmt(cl.b),
              "theta": _fmt(cl.theta), "P": _fmt(cl.P)}
    else:
        cd = {"type": "step", "a": _fmt(cl.a), "b": _fmt(cl.b), "rho": _fmt(cl.rho)}
    nl = {"type": spec.nonlinearity}
    if spec.kernel is not None and spec.nonlinearity == "averaged":
        k = {"form": spec.kernel.form, "alpha_holder": spec.kernel.alpha_holder}
        if spec.kernel.weights is not None:
            k["weights"] = list(spec.kernel.weights)
        if spec.kernel.values is not None:
            k["values"] = list(spec.kernel.values)
        nl["kernel"] = k
    d = spec.discretization
    out = {"geometry": spec.geometry, "c": _fmt(spec.c), "T": _fmt(spec.T),
           "R": _fmt(spec.R), "gamma": _fmt(spec.gamma),
           "potential": {"d": _fmt(spec.potential.d), "cladding": cd},
           "nonlinearity": nl,
           "discretization": {"K": d.K, "N": d.N, "M": d.M}}
    if spec.step_mn:
        out["step_mn"] = list(spec.step_mn)
    return out


def load_spec(path) -> ProblemSpec:
    path = Path(path)
    with open(path) as fh:
        doc = json.load(fh)
    return spec_from_dict(doc, base_dir=path.parent)
