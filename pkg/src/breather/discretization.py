"""Piecewise-linear elements in space times odd Fourier modes in time.

A profile stores complex nodal values ``f_k(x_j)`` for odd ``k > 0`` only;
``f_{-k} = conj(f_k)`` is implied, so every synthesized field is real:

    u(x, t) = 2 Re sum_k f_k(x) exp(i k w t).

Time integrals use the normalized measure (``int_T 1 dt = 1``).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .exceptions import DegenerateElement

KINDS = ("Mass_r", "Stiffness_r", "InverseR", "Mass_1", "Stiffness_1")

_G2 = np.polynomial.legendre.leggauss(2)
_G3 = np.polynomial.legendre.leggauss(3)
_G24 = np.polynomial.legendre.leggauss(24)


@dataclass
class DiscreteProfile:
    geometry: str
    R: float
    modes: tuple
    coeffs: np.ndarray  # complex, shape (len(modes), N + 1)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        self.modes = tuple(int(k) for k in self.modes)
        if any(k <= 0 or k % 2 == 0 for k in self.modes):
            raise ValueError("modes must be positive odd integers")
        if self.coeffs.shape[0] != len(self.modes):
            raise ValueError("one coefficient row per mode is required")

    @classmethod
    def zeros(cls, geometry, R, K, N):
        modes = tuple(range(1, K + 1, 2))
        return cls(geometry, float(R), modes, np.zeros((len(modes), N + 1), complex))

    @property
    def N(self):
        return self.coeffs.shape[1] - 1

    @property
    def nodes(self):
        return np.linspace(0.0, self.R, self.N + 1)

    def copy(self, coeffs=None):
        return replace(self, coeffs=self.coeffs.copy() if coeffs is None else coeffs)

    def mode_row(self, k):
        return self.coeffs[self.modes.index(k)]


@dataclass(frozen=True)
class TimeGrid:
    M: int
    T: float

    def __post_init__(self):
        if self.M % 2:
            raise ValueError("M must be even")

    @property
    def omega(self):
        return 2 * np.pi / self.T

    @property
    def times(self):
        return self.T * np.arange(self.M) / self.M


def _spectrum(coeffs, modes, M, factor):
    spec = np.zeros(coeffs.shape[1:] + (M // 2 + 1,), dtype=complex)
    for i, k in enumerate(modes):
        if k > M // 2 - 1:
            raise ValueError(f"mode {k} aliases on a grid of {M} samples")
        spec[..., k] = factor(k) * coeffs[i]
    return spec


def synthesize(coeffs, modes, grid: TimeGrid, derivative=False):
    """Samples of ``u`` (or ``u_t``) at every node: array ``(nodes, M)``."""
    coeffs = np.asarray(coeffs)
    w = grid.omega
    fac = (lambda k: 1j * w * k) if derivative else (lambda k: 1.0)
    return grid.M * np.fft.irfft(_spectrum(coeffs, modes, grid.M, fac), n=grid.M, axis=-1)


def synthesize_time_derivative(p: DiscreteProfile, j, grid: TimeGrid):
    """Real samples of ``u_t(x_j, .)`` on the time grid."""
    return synthesize(p.coeffs[:, j:j + 1], p.modes, grid, derivative=True)[0]


def analyze(samples):
    """Coefficients ``v_hat_k = (1/M) sum_j v(t_j) e^{-i w k t_j}``, ``k = 0..M/2``."""
    samples = np.asarray(samples, dtype=float)
    return np.fft.rfft(samples, axis=-1) / samples.shape[-1]


def project_SK(p: DiscreteProfile, K_prime):
    """Zero all modes above ``K_prime``."""
    keep = np.array([k <= K_prime for k in p.modes])
    return p.copy(np.where(keep[:, None], p.coeffs, 0))


# ------------------------------------------------------------ element integrals

def _hat_values(a, b, x):
    h = b - a
    return np.stack([(b - x) / h, (x - a) / h])


def element_matrix(kind, a, b):
    """Local 2x2 matrix of the bilinear form on the element ``[a, b]``.

    ``Mass_r``: int phi_i phi_j r, ``Stiffness_r``: int phi_i' phi_j' r,
    ``InverseR``: int phi_i phi_j / r, ``Mass_1``, ``Stiffness_1``: unweighted.
    On the element touching ``r = 0`` the ``InverseR`` entries involving the
    left hat diverge; they are returned as 0 because that node is pinned.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown quadrature kind {kind!r}")
    h = b - a
    if not h > 0:
        raise DegenerateElement(f"element [{a}, {b}] has nonpositive length")
    mid = 0.5 * (a + b)
    if kind in ("Mass_r", "Stiffness_r"):
        xg, wg = _G3
    elif kind in ("Mass_1", "Stiffness_1"):
        xg, wg = _G2
    else:
        if a == 0:
            return np.array([[0.0, 0.0], [0.0, 0.5]])
        # integrate in y = r/a - 1 on [0, h/a]; the pole at y = -1 is at least
        # one element length away, so 24 Gauss points give machine precision
        s = h / a
        yg, wy = _G24
        y = 0.5 * s * (yg + 1)
        wy = 0.5 * s * wy
        phi = np.stack([(s - y) / s, y / s])
        return (phi * (wy / (1 + y))) @ phi.T
    x = mid + 0.5 * h * xg
    w = 0.5 * h * wg
    if kind.startswith("Mass"):
        phi = _hat_values(a, b, x)
        weight = w * x if kind == "Mass_r" else w
        return (phi * weight) @ phi.T
    dphi = np.array([[-1.0 / h], [1.0 / h]])
    weight = np.sum(w * x) if kind == "Stiffness_r" else h
    return dphi @ dphi.T * weight


def element_quadrature(kind, a, b, local):
    """Value of the quadratic integrand on ``[a, b]`` for nodal values ``local``."""
    local = np.asarray(local)
    E = element_matrix(kind, a, b)
    return float(np.real(np.conj(local) @ E @ local))


def assemble(kind, nodes):
    """Global (dense, tridiagonal) matrix of a bilinear form."""
    n = len(nodes)
    A = np.zeros((n, n))
    for e in range(n - 1):
        A[e:e + 2, e:e + 2] += element_matrix(kind, nodes[e], nodes[e + 1])
    return A


def lumped_weights(geometry, nodes):
    """``int phi_j r dr`` (radial) or ``int phi_j dx`` (slab) for each node."""
    kind = "Mass_r" if geometry == "cylindrical" else "Mass_1"
    return assemble(kind, nodes).sum(axis=1)
