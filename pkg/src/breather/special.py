"""Bessel functions J, Y, I, K of orders 0 and 1, with derivatives.

Three argument regimes are used:

* ``x < 2``: power series (with logarithmic terms for Y and K);
* ``2 <= x <= 25``: trapezoid rule for the periodic integral representations
  of J_n and I_n (spectrally accurate, evaluated with one FFT per argument),
  Neumann series in even-order J for Y, and a trapezoid rule for the
  ``cosh`` integral of K;
* ``x > 25``: Hankel asymptotic expansions, truncated well before the
  smallest term (which is of size ``exp(-2x)``).

I is available scaled by ``exp(-x)`` and K scaled by ``exp(x)``; the
unscaled values overflow/underflow for ``x`` of a few hundred.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError

__all__ = [
    "BesselKind",
    "eval_bessel",
    "eval_bessel_derivative",
    "jy01",
    "ik01_scaled",
]

_EULER_GAMMA = 0.57721566490153286061
_SMALL = 2.0
_LARGE = 25.0
_N_THETA = 192
_N_ORDERS = 65
_N_SERIES = 30
_N_ASYM = 30
_K_STEP = 0.05


@dataclass(frozen=True)
class BesselKind:
    kind: str
    order: int
    scaled: bool = False

    def __post_init__(self):
        if self.kind not in ("J", "Y", "I", "K"):
            raise ValueError(f"unknown Bessel kind {self.kind!r}")
        if self.order not in (0, 1):
            raise ValueError("only orders 0 and 1 are implemented")
        if self.scaled and self.kind not in ("I", "K"):
            raise ValueError("scaling is defined only for I and K")


# ---------------------------------------------------------------- small x

def _harmonic(n):
    h = np.zeros(n + 2)
    h[1:] = np.cumsum(1.0 / np.arange(1, n + 2))
    return h


_H = _harmonic(_N_SERIES + 1)


def _series_terms(x):
    z = 0.25 * x * x
    t = np.ones_like(x)  # z^m / (m!)^2
    s = np.ones_like(x)  # z^m / (m! (m+1)!)
    ts, ss = [t], [s]
    for m in range(1, _N_SERIES):
        t = t * z / (m * m)
        s = s * z / (m * (m + 1))
        ts.append(t)
        ss.append(s)
    return np.array(ts), np.array(ss)


def _jy_small(x):
    ts, ss = _series_terms(x)
    m = np.arange(_N_SERIES)[:, None]
    sign = (-1.0) ** m
    j0 = np.sum(sign * ts, axis=0)
    j1 = 0.5 * x * np.sum(sign * ss, axis=0)
    lg = np.log(0.5 * x)
    y0 = (2 / np.pi) * ((lg + _EULER_GAMMA) * j0
                        - np.sum(sign * _H[: _N_SERIES, None] * ts, axis=0))
    psi = -2 * _EULER_GAMMA + _H[: _N_SERIES, None] + _H[1: _N_SERIES + 1, None]
    y1 = (-2 / (np.pi * x) + (2 / np.pi) * lg * j1
          - x / (2 * np.pi) * np.sum(sign * psi * ss, axis=0))
    return j0, j1, y0, y1


def _ik_small(x):
    ts, ss = _series_terms(x)
    i0 = np.sum(ts, axis=0)
    i1 = 0.5 * x * np.sum(ss, axis=0)
    lg = np.log(0.5 * x)
    k0 = -(lg + _EULER_GAMMA) * i0 + np.sum(_H[: _N_SERIES, None] * ts, axis=0)
    psi = -2 * _EULER_GAMMA + _H[: _N_SERIES, None] + _H[1: _N_SERIES + 1, None]
    k1 = 1 / x + lg * i1 - 0.25 * x * np.sum(psi * ss, axis=0)
    ex = np.exp(x)
    return i0 / ex, i1 / ex, k0 * ex, k1 * ex


# ---------------------------------------------------------------- mid x

_THETA = 2 * np.pi * np.arange(_N_THETA) / _N_THETA


def _jn_table(x):
    # J_n(x), n = 0.._N_ORDERS-1, from the periodic integral over one period.
    g = np.exp(-1j * x[:, None] * np.sin(_THETA)[None, :])
    return np.fft.ifft(g, axis=1).real[:, :_N_ORDERS].T


def _jy_mid(x):
    jn = _jn_table(x)
    j0, j1 = jn[0], jn[1]
    lg = np.log(0.5 * x) + _EULER_GAMMA
    k = np.arange(1, (_N_ORDERS - 1) // 2 + 1)[:, None]
    sign = (-1.0) ** k
    y0 = (2 / np.pi) * (lg * j0 - 2 * np.sum(sign * jn[2::2] / k, axis=0))
    kk = k[:-1]
    odd_lo = jn[1:-2:2]
    odd_hi = jn[3::2]
    y1 = (2 / np.pi) * (-j0 / x + lg * j1
                        + np.sum(sign[:-1] * (odd_lo - odd_hi) / kk, axis=0))
    return j0, j1, y0, y1


def _ik_mid(x):
    g = np.exp(x[:, None] * (np.cos(_THETA)[None, :] - 1.0))
    c = np.fft.fft(g, axis=1).real / _N_THETA
    i0e, i1e = c[:, 0], c[:, 1]
    # e^x K_nu(x) = int_0^inf exp(-x (cosh t - 1)) cosh(nu t) dt
    tmax = np.arccosh(1.0 + 45.0 / x.min()) if x.size else 0.0
    t = np.arange(0.0, tmax + _K_STEP, _K_STEP)
    w = np.full(t.shape, _K_STEP)
    w[0] = 0.5 * _K_STEP
    e = np.exp(-x[:, None] * (np.cosh(t)[None, :] - 1.0))
    k0e = e @ w
    k1e = e @ (w * np.cosh(t))
    return i0e, i1e, k0e, k1e


# ---------------------------------------------------------------- large x

def _asym_coeffs(nu):
    mu = 4.0 * nu * nu
    a = [1.0]
    for k in range(1, _N_ASYM):
        a.append(a[-1] * (mu - (2 * k - 1) ** 2) / (8.0 * k))
    return np.array(a)


_A0 = _asym_coeffs(0)
_A1 = _asym_coeffs(1)


def _hankel_pq(a, x):
    inv = 1.0 / x
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    pw = np.ones_like(x)
    for k in range(_N_ASYM):
        term = a[k] * pw
        if k % 2 == 0:
            p += (-1) ** (k // 2) * term
        else:
            q += (-1) ** ((k - 1) // 2) * term
        pw = pw * inv
    return p, q


def _jy_large(x):
    amp = np.sqrt(2.0 / (np.pi * x))
    out = []
    for a, nu in ((_A0, 0), (_A1, 1)):
        p, q = _hankel_pq(a, x)
        chi = x - (0.5 * nu + 0.25) * np.pi
        c, s = np.cos(chi), np.sin(chi)
        out.append((amp * (p * c - q * s), amp * (p * s + q * c)))
    (j0, y0), (j1, y1) = out
    return j0, j1, y0, y1


def _ik_large(x):
    inv = 1.0 / x
    res = []
    for a in (_A0, _A1):
        si = np.zeros_like(x)
        sk = np.zeros_like(x)
        pw = np.ones_like(x)
        for k in range(_N_ASYM):
            si += (-1) ** k * a[k] * pw
            sk += a[k] * pw
            pw = pw * inv
        res.append((si / np.sqrt(2 * np.pi * x), sk * np.sqrt(np.pi / (2 * x))))
    (i0e, k0e), (i1e, k1e) = res
    return i0e, i1e, k0e, k1e


# ---------------------------------------------------------------- dispatch

def _by_region(x, small, mid, large):
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    out = np.empty((4, flat.size))
    for mask, fn in ((flat < _SMALL, small),
                     ((flat >= _SMALL) & (flat <= _LARGE), mid),
                     (flat > _LARGE, large)):
        if mask.any():
            out[:, mask] = np.array(fn(flat[mask]))
    return tuple(o.reshape(x.shape) for o in out)


def jy01(x):
    """Return ``(J0, J1, Y0, Y1)`` at ``x > 0`` (arrays broadcast)."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("Y requires x > 0")
    return _by_region(x, _jy_small, _jy_mid, _jy_large)


def ik01_scaled(x):
    """Return ``(e^-x I0, e^-x I1, e^x K0, e^x K1)`` at ``x > 0``."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("K requires x > 0")
    return _by_region(x, _ik_small, _ik_mid, _ik_large)


def _values(kind, x):
    """Order-0 and order-1 values (scaled for I, K), handling x = 0 for J, I."""
    x = np.asarray(x, dtype=float)
    if kind in ("Y", "K"):
        if np.any(x <= 0):
            raise DomainError(f"{kind} requires x > 0")
    elif np.any(x < 0):
        raise DomainError(f"{kind} requires x >= 0")
    pos = x > 0
    xs = np.where(pos, x, 1.0)
    if kind in ("J", "Y"):
        j0, j1, y0, y1 = jy01(xs)
        v0, v1 = (j0, j1) if kind == "J" else (y0, y1)
    else:
        i0e, i1e, k0e, k1e = ik01_scaled(xs)
        v0, v1 = (i0e, i1e) if kind == "I" else (k0e, k1e)
    v0 = np.where(pos, v0, 1.0)
    v1 = np.where(pos, v1, 0.0)
    return x, v0, v1


def _unscale(kind, x, v):
    if kind == "I":
        return v * np.exp(x)
    if kind == "K":
        return v * np.exp(-x)
    return v


def _as_output(v, like):
    return float(v) if np.ndim(like) == 0 else v


def eval_bessel(b: BesselKind, x):
    """Evaluate the Bessel function described by ``b`` at ``x``."""
    x, v0, v1 = _values(b.kind, x)
    v = v0 if b.order == 0 else v1
    if not b.scaled:
        v = _unscale(b.kind, x, v)
    return _as_output(v, x)


def eval_bessel_derivative(b: BesselKind, x):
    """Derivative with respect to ``x``; scaled kinds return the scaled derivative.

    Uses C0' = -C1 (J, Y, K), I0' = I1, C1' = C0 - C1/x (J, Y, I) and
    K1' = -K0 - K1/x.
    """
    x, v0, v1 = _values(b.kind, x)
    if b.order == 0:
        d = v1 if b.kind == "I" else -v1
    else:
        safe = np.where(x > 0, x, 1.0)
        ratio = np.where(x > 0, v1 / safe, 0.5)  # C1(x)/x -> 1/2 for J, I
        if b.kind == "K":
            d = -v0 - ratio
        else:
            d = np.where(x > 0, v0 - ratio, 0.5)
    if not b.scaled:
        d = _unscale(b.kind, x, d)
    return _as_output(d, x)
