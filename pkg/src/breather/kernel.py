"""Periodized convolution kernels for the time-averaged nonlinearity.

Samples live on the grid ``t_j = j T / M``. Fourier coefficients use the
normalized time measure, ``kappa_hat_k = (1/M) sum_j kappa(t_j) e^{-i w k t_j}``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import IndexOutOfRange, NonPositive

FORMS = ("constant_one", "periodized_lorentz", "step_series", "sampled")
ROUTES = ("MaxLe2Min", "NonnegativeFourier", "SumDecomposition", "Failed")


@dataclass(frozen=True)
class KernelSpec:
    form: str = "constant_one"
    weights: Optional[Sequence[float]] = None
    values: Optional[Sequence[float]] = None
    alpha_holder: float = 1.0

    def __post_init__(self):
        if self.form == "debye":
            raise ValueError("continuous exponential (Debye) kernels are not admissible; "
                             "use a step_series discretization instead")
        if self.form not in FORMS:
            raise ValueError(f"unknown kernel form {self.form!r}")
        if self.form == "step_series" and not self.weights:
            raise ValueError("step_series kernel needs weights")
        if self.form == "sampled" and self.values is None:
            raise ValueError("sampled kernel needs values")
        if self.alpha_holder <= 0:
            raise ValueError("Hölder exponent must be positive")


@dataclass
class KernelAdmissibilityReport:
    even_positive: bool
    convexity_route: str
    min_val: float
    max_val: float
    fourier_coeffs: np.ndarray = field(repr=False)
    hessian_spotcheck_min: float = float("nan")

    @property
    def admissible(self):
        return self.even_positive and self.convexity_route != "Failed"


def load_sampled_csv(path):
    """Read a single-column CSV of kernel samples."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and r[0].strip()]
    vals = []
    for r in rows:
        try:
            vals.append(float(r[0]))
        except ValueError:
            if vals:
                raise
            # header line
    return np.array(vals)


def periodize(spec: KernelSpec, T, M):
    """Sample the periodized kernel on ``M`` equispaced times in ``[0, T)``."""
    T = float(T)
    t = T * np.arange(M) / M
    if spec.form == "constant_one":
        kappa = np.ones(M)
    elif spec.form == "periodized_lorentz":
        kappa = 1.0 / (2 * T * (T ** 2 + (2 * t - T) ** 2))
    elif spec.form == "step_series":
        w = np.asarray(spec.weights, dtype=float)
        if np.any(w < 0):
            raise NonPositive("step_series weights must be nonnegative")
        if abs(w.sum() * T - 1.0) > 1e-12:
            raise ValueError("step_series weights must sum to 1/T")
        kappa = np.full(M, T * w.sum())
    else:
        kappa = np.asarray(spec.values, dtype=float)
        if kappa.shape != (M,):
            raise ValueError(f"sampled kernel has {kappa.size} values, grid has {M}")
    if np.any(kappa <= 0):
        raise NonPositive("kernel samples must be positive")
    return kappa


def kernel_fourier(kappa, k):
    """Discrete Fourier coefficient ``kappa_hat_k``; requires ``|k| <= M/2``."""
    kappa = np.asarray(kappa, dtype=float)
    M = kappa.size
    if abs(k) > M // 2:
        raise IndexOutOfRange(f"|k|={abs(k)} exceeds M/2={M // 2}")
    j = np.arange(M)
    return complex(np.sum(kappa * np.exp(-2j * np.pi * k * j / M)) / M)


def kernel_spectrum(kappa):
    """All coefficients ``kappa_hat_k`` for ``k = 0..M-1`` (FFT ordering)."""
    kappa = np.asarray(kappa, dtype=float)
    return np.fft.fft(kappa) / kappa.size


def quartic_form(kappa, v):
    """Discrete ``int (kappa * v^2) v^2 dt`` for samples ``v`` (last axis time)."""
    g = np.asarray(v) ** 2
    conv = np.fft.irfft(np.fft.rfft(kappa) / kappa.size * np.fft.rfft(g, axis=-1),
                        n=g.shape[-1], axis=-1)
    return np.mean(conv * g, axis=-1)


def check_admissible(kappa, K=None, rng=0, n_directions=64):
    """Test evenness/positivity and the sufficient convexity conditions."""
    kappa = np.asarray(kappa, dtype=float)
    M = kappa.size
    kmax, kmin = float(kappa.max()), float(kappa.min())
    mirror = kappa[(-np.arange(M)) % M]
    even = bool(np.max(np.abs(kappa - mirror)) <= 1e-12 * kmax) and kmin > 0

    coeffs = kernel_spectrum(kappa)
    c = coeffs.real
    if kmax <= 2 * kmin:
        route = "MaxLe2Min"
    elif np.all(c >= -1e-10 * c[0]):
        route = "NonnegativeFourier"
    else:
        # kappa = (c0 + g_neg) + (positive-coefficient part); the first summand
        # satisfies max <= 2 min for the best constant split iff this holds.
        neg = np.where(c < 0, c, 0.0)
        g = np.fft.ifft(neg * M).real
        route = "SumDecomposition" if c[0] >= g.max() - 2 * g.min() else "Failed"

    if K is None:
        K = max(1, (M - 1) // 4)
    hmin = _hessian_spotcheck(kappa, K, np.random.default_rng(rng), n_directions)
    two_k = min(2 * K, M // 2)
    idx = np.arange(-two_k, two_k + 1)
    return KernelAdmissibilityReport(even, route, kmin, kmax, coeffs[idx % M].real, hmin)


def _hessian_spotcheck(kappa, K, rng, n):
    # second difference of the quartic form along random bandlimited directions
    M = kappa.size
    t = np.arange(M) / M
    modes = np.arange(1, K + 1, 2)
    out = np.inf
    h = 1e-3
    for _ in range(n):
        cu, cd = rng.standard_normal((2, modes.size, 2))
        u = (cu[:, :1] * np.cos(2 * np.pi * np.outer(modes, t))
             + cu[:, 1:] * np.sin(2 * np.pi * np.outer(modes, t))).sum(0)
        d = (cd[:, :1] * np.cos(2 * np.pi * np.outer(modes, t))
             + cd[:, 1:] * np.sin(2 * np.pi * np.outer(modes, t))).sum(0)
        q = [quartic_form(kappa, u + s * h * d) for s in (-1, 0, 1)]
        out = min(out, (q[0] - 2 * q[1] + q[2]) / h ** 2)
    return float(out)
