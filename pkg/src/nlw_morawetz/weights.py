"""Radial multiplier weights with their derivatives, Laplacians and bilaplacians.

Every weight carries closed-form derivatives; the only tabulated pieces are the
primitives of the smooth step used by the cutoff family, integrated once on a
fine mesh with Hermite-corrected quadrature.
"""
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np


class HypothesisError(ValueError):
    """A weight violates the boundedness conditions required by an identity."""


@dataclass
class RadialWeight:
    """A radial weight psi(r) with derivatives up to the bilaplacian.

    ``kind`` is "morawetz" (used with the multiplier grad psi . grad u + Lap psi u / 2)
    or "virial" (multiplier phi u).
    """

    name: str
    n_dim: int
    kind: str
    eval: Callable
    d1: Callable
    d2: Callable
    laplacian: Callable
    bilaplacian: Callable
    d1_at_infinity: float = math.nan
    params: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)

    def tangential(self, r):
        """psi'(r)/r, the Hessian eigenvalue on directions orthogonal to x."""
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self.d1(r) / r
        small = r == 0
        if np.any(small):
            out = np.where(small, self.d2(np.zeros_like(r)), out)
        return out


# ---------------------------------------------------------------- <x> and |x|

def _bracket_derivs(s, n):
    q = 1.0 + s * s
    d1 = s / np.sqrt(q)
    d2 = q ** -1.5
    lap = q ** -1.5 + (n - 1) * q ** -0.5
    num = (n - 1) * (n - 3) * s ** 4 + (2 * n * n - 2 * n - 12) * s ** 2 + n * n + 2 * n
    bilap = -num * q ** -3.5
    return np.sqrt(q), d1, d2, lap, bilap


def weight_bracket(n_dim, eps=1.0):
    """psi(r) = sqrt(eps^2 + r^2); eps = 1 is the Japanese bracket <x>."""
    if eps <= 0:
        raise ValueError("smoothing length must be positive")
    n = n_dim

    def part(i):
        scale = (eps, 1.0, 1.0 / eps, 1.0 / eps, eps ** -3)[i]

        def fn(r):
            return scale * _bracket_derivs(np.asarray(r, dtype=float) / eps, n)[i]
        return fn

    name = "bracket" if eps == 1.0 else "smoothed_abs"
    return RadialWeight(name, n_dim, "morawetz", part(0), part(1), part(2), part(3), part(4),
                        d1_at_infinity=1.0, params={"eps": eps})


def weight_smoothed_abs(n_dim, eps=1e-3):
    """The classical weight |x|, regularized as sqrt(eps^2 + r^2)."""
    return weight_bracket(n_dim, eps)


# --------------------------------------------------------------- smooth step

def _expit(z):
    """1/(1+exp(-z)) without overflow or loss of relative precision in the tails."""
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def step_derivatives(x, order=4):
    """D(x) and its derivatives up to ``order`` (<= 4).

    D is the C-infinity step equal to 1 for x <= 0 and 0 for x >= 1, built from
    exp(-1/x): D = 1/(1 + exp(1/(1-x) - 1/x)), with D(x) + D(1-x) = 1.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = [np.zeros_like(x) for _ in range(order + 1)]
    out[0][x <= 0] = 1.0
    m = (x > 0) & (x < 1)
    if not np.any(m):
        return out
    y = x[m]
    a, b = 1.0 / y, 1.0 / (1.0 - y)
    z = b - a
    z1 = b ** 2 + a ** 2
    z2 = 2 * b ** 3 - 2 * a ** 3
    z3 = 6 * b ** 4 + 6 * a ** 4
    z4 = 24 * b ** 5 - 24 * a ** 5
    L0 = _expit(-z)
    L1 = -L0 * _expit(z)
    L2 = L1 * (2 * L0 - 1)
    L3 = L2 * (2 * L0 - 1) + 2 * L1 * L1
    L4 = L3 * (2 * L0 - 1) + 6 * L1 * L2
    vals = [
        L0,
        L1 * z1,
        L2 * z1 ** 2 + L1 * z2,
        L3 * z1 ** 3 + 3 * L2 * z1 * z2 + L1 * z3,
        L4 * z1 ** 4 + 6 * L3 * z1 ** 2 * z2 + 3 * L2 * z2 ** 2 + 4 * L2 * z1 * z3 + L1 * z4,
    ]
    for i in range(order + 1):
        out[i][m] = vals[i]
    return out


_TABLE_INTERVALS = 4096


@lru_cache(maxsize=1)
def _step_tables():
    """Nodes, D, I1 = int_0^x D, I2 = int_0^x I1 on [0, 1]."""
    x = np.linspace(0.0, 1.0, _TABLE_INTERVALS + 1)
    h = x[1] - x[0]
    d0, d1 = step_derivatives(x, order=1)
    # Hermite-corrected trapezoid: exact for cubics, O(h^4) overall
    cell1 = 0.5 * h * (d0[:-1] + d0[1:]) + h * h / 12.0 * (d1[:-1] - d1[1:])
    i1 = np.concatenate([[0.0], np.cumsum(cell1)])
    cell2 = 0.5 * h * (i1[:-1] + i1[1:]) + h * h / 12.0 * (d0[:-1] - d0[1:])
    i2 = np.concatenate([[0.0], np.cumsum(cell2)])
    return x, d0, i1, i2


def _hermite(xq, x, y, dy):
    """Piecewise cubic Hermite interpolation on the uniform table ``x``."""
    h = x[1] - x[0]
    j = np.clip((xq / h).astype(int), 0, len(x) - 2)
    t = xq / h - j
    t2, t3 = t * t, t * t * t
    h00 = 2 * t3 - 3 * t2 + 1
    h10 = t3 - 2 * t2 + t
    h01 = -2 * t3 + 3 * t2
    h11 = t3 - t2
    return h00 * y[j] + h * h10 * dy[j] + h01 * y[j + 1] + h * h11 * dy[j + 1]


def _step_primitives(xq):
    x, d0, i1, i2 = _step_tables()
    xq = np.clip(xq, 0.0, 1.0)
    return _hermite(xq, x, i1, d0), _hermite(xq, x, i2, i1)


# ------------------------------------------------------------- cutoff family

@dataclass(frozen=True)
class CutoffFamily:
    """h_k = 1 on |r| < 1, 0 on |r| > (k+1)/k, with primitives H_k and psi_k.

    ``dh(r, m)`` returns the m-th derivative of h_k.
    """

    k: int
    mass: float

    def _x(self, r):
        return self.k * (np.abs(r) - 1.0)

    def h(self, r):
        r = np.asarray(r, dtype=float)
        return step_derivatives(self._x(r), order=0)[0].reshape(r.shape)

    def dh(self, r, m):
        r = np.asarray(r, dtype=float)
        d = step_derivatives(self._x(r), order=m)[m].reshape(r.shape)
        return d * self.k ** m * np.sign(r) ** m

    def H(self, r):
        r = np.asarray(r, dtype=float)
        a = np.abs(r)
        x = self._x(r)
        i1, _ = _step_primitives(np.atleast_1d(x).ravel())
        i1 = i1.reshape(np.shape(x))
        val = np.where(a <= 1.0, a, 1.0 + i1 / self.k)
        return np.sign(r) * val

    def psi(self, r):
        r = np.asarray(r, dtype=float)
        a = np.abs(r)
        k = self.k
        x = self._x(r)
        xc = np.atleast_1d(x).ravel()
        i1, i2 = _step_primitives(xc)
        i2 = i2.reshape(np.shape(x))
        _, i2_end = _step_primitives(np.array([1.0]))
        edge = 1.0 + 1.0 / k
        inside = 0.5 + np.clip(x, 0, 1) / k + i2 / k ** 2
        beyond = 0.5 + 1.0 / k + i2_end[0] / k ** 2 + self.mass * (a - edge)
        return np.where(a <= 1.0, 0.5 * a * a, np.where(a < edge, inside, beyond))


def cutoff_family(k):
    if int(k) != k or k < 1:
        raise ValueError(f"cutoff index must be a positive integer, got {k}")
    k = int(k)
    i1_end, _ = _step_primitives(np.array([1.0]))
    return CutoffFamily(k, 1.0 + float(i1_end[0]) / k)


def _radial_lap(n, d1, d2, r, at_origin):
    with np.errstate(divide="ignore", invalid="ignore"):
        lap = d2 + (n - 1) * d1 / r
    return np.where(r == 0, at_origin, lap)


def rescale_morawetz(fam, R, n_dim):
    """psi_{k,R}(r) = R psi_k(r/R); psi' -> mass(k) at infinity."""
    if not R > 0:
        raise ValueError(f"scale R must be positive, got {R}")
    n = n_dim

    def ev(r):
        return R * fam.psi(np.asarray(r, dtype=float) / R)

    def d1(r):
        return fam.H(np.asarray(r, dtype=float) / R)

    def d2(r):
        return fam.h(np.asarray(r, dtype=float) / R) / R

    def lap(r):
        r = np.asarray(r, dtype=float)
        s = r / R
        return _radial_lap(n, fam.H(s), fam.h(s) / R, r, n / R)

    def bilap(r):
        r = np.asarray(r, dtype=float)
        s = r / R
        p1, p2 = fam.H(s), fam.h(s) / R
        p3, p4 = fam.dh(s, 1) / R ** 2, fam.dh(s, 2) / R ** 3
        with np.errstate(divide="ignore", invalid="ignore"):
            val = p4 + 2 * (n - 1) * p3 / r + (n - 1) * (n - 3) * (p2 / r ** 2 - p1 / r ** 3)
        # on the plateau psi = r^2/(2R) exactly, whose bilaplacian vanishes
        return np.where(np.abs(s) <= 1.0, 0.0, val)

    return RadialWeight(f"psi_{fam.k},{R:g}", n_dim, "morawetz", ev, d1, d2, lap, bilap,
                        d1_at_infinity=fam.mass, params={"k": fam.k, "R": R})


def rescale_virial(fam, R, n_dim):
    """phi_{k,R}(r) = h_k(r/R)/R."""
    if not R > 0:
        raise ValueError(f"scale R must be positive, got {R}")
    n = n_dim

    def ev(r):
        return fam.h(np.asarray(r, dtype=float) / R) / R

    def d1(r):
        return fam.dh(np.asarray(r, dtype=float) / R, 1) / R ** 2

    def d2(r):
        return fam.dh(np.asarray(r, dtype=float) / R, 2) / R ** 3

    def lap(r):
        r = np.asarray(r, dtype=float)
        return _radial_lap(n, d1(r), d2(r), r, 0.0)

    def bilap(r):
        r = np.asarray(r, dtype=float)
        s = r / R
        p1, p2 = d1(r), d2(r)
        p3, p4 = fam.dh(s, 3) / R ** 4, fam.dh(s, 4) / R ** 5
        with np.errstate(divide="ignore", invalid="ignore"):
            val = p4 + 2 * (n - 1) * p3 / r + (n - 1) * (n - 3) * (p2 / r ** 2 - p1 / r ** 3)
        return np.where(np.abs(s) <= 1.0, 0.0, val)

    return RadialWeight(f"phi_{fam.k},{R:g}", n_dim, "virial", ev, d1, d2, lap, bilap,
                        d1_at_infinity=0.0, params={"k": fam.k, "R": R})


# ------------------------------------------------------------ hypothesis audit

_PROBE = np.concatenate([[0.0], np.logspace(-8, 8, 1601)])
_HEAD = (_PROBE >= 1e-4) & (_PROBE <= 1e4)


def _sup_checked(label, values, growth):
    values = np.abs(np.asarray(values, dtype=float))
    if not np.all(np.isfinite(values)):
        raise HypothesisError(f"{label} is not finite on the probe set")
    head = values[_HEAD].max()
    tail = values[~_HEAD].max()
    if tail > growth * head + 1e-300:
        raise HypothesisError(
            f"{label} is unbounded: sup near 0/infinity {tail:.3g} vs {head:.3g} on [1e-4, 1e4]")
    return float(max(head, tail))


def audit_weight(weight, growth=10.0):
    """Check the boundedness hypotheses for ``weight`` and record the measured sups.

    Morawetz weights need <r> Lap psi, Lap^2 psi and the Hessian bounded with
    psi'(r) converging; virial weights need Lap phi and <r> phi bounded. A
    quantity counts as unbounded when its sup over r < 1e-4 or r > 1e4 exceeds
    ``growth`` times its sup on [1e-4, 1e4].
    """
    r = _PROBE
    bracket = np.sqrt(1.0 + r * r)
    with np.errstate(all="ignore"):
        if weight.kind == "morawetz":
            bounds = {
                "bracket_laplacian": _sup_checked("<r> Lap psi", bracket * weight.laplacian(r), growth),
                "bilaplacian": _sup_checked("Lap^2 psi", weight.bilaplacian(r), growth),
                "hessian_radial": _sup_checked("psi''", weight.d2(r), growth),
                "hessian_tangential": _sup_checked("psi'/r", weight.tangential(r), growth),
            }
            lim = weight.d1_at_infinity
            far = float(weight.d1(np.array([1e8]))[0])
            if not np.isfinite(lim) or not np.isfinite(far) or abs(far - lim) > 1e-3 * max(1.0, abs(lim)):
                raise HypothesisError(
                    f"psi'(r) does not converge to psi'(inf) = {lim}: psi'(1e8) = {far}")
        elif weight.kind == "virial":
            bounds = {
                "laplacian": _sup_checked("Lap phi", weight.laplacian(r), growth),
                "bracket_eval": _sup_checked("<r> phi", bracket * weight.eval(r), growth),
            }
        else:
            raise HypothesisError(f"unknown weight kind {weight.kind!r}")
    weight.bounds = bounds
    return bounds
