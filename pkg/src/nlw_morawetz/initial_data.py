"""Initial pairs (f, g), the ground state W and the Kenig-Merle threshold test."""
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .radial_grid import FieldState, integrate_ball, radial_derivative


@dataclass(frozen=True)
class RadialProfile:
    """Analytic f, f', g, g' as functions of r >= 0 (used by the exact propagator)."""

    f: Callable
    df: Callable
    g: Callable
    dg: Callable


def _zero(r):
    return np.zeros_like(np.asarray(r, dtype=float))


@dataclass
class InitialData:
    f: np.ndarray
    g: np.ndarray
    grid: object = field(repr=False)
    support_radius: float = math.inf
    name: str = "custom"
    params: dict = field(default_factory=dict)
    profile: Optional[RadialProfile] = field(default=None, repr=False)

    def state(self):
        """The t = 0 state; carries the exact f' when an analytic profile is known."""
        ur = None if self.profile is None else np.asarray(self.profile.df(self.grid.r), dtype=float)
        return FieldState(self.f.copy(), self.g.copy(), 0.0, self.grid, ur)

    def time_reversed(self):
        """Data (f, -g), whose forward solution is u(-t; f, g)."""
        prof = p = self.profile
        if p is not None:
            prof = RadialProfile(p.f, p.df, lambda r: -p.g(r), lambda r: -p.dg(r))
        return InitialData(self.f.copy(), -self.g, self.grid, self.support_radius,
                           self.name, dict(self.params), prof)

    def scaled(self, alpha):
        """Plain multiple (alpha f, alpha g)."""
        prof = self.profile
        if prof is not None:
            p = prof
            prof = RadialProfile(lambda r: alpha * p.f(r), lambda r: alpha * p.df(r),
                                 lambda r: alpha * p.g(r), lambda r: alpha * p.dg(r))
        params = dict(self.params, alpha=alpha * self.params.get("alpha", 1.0))
        return InitialData(alpha * self.f, alpha * self.g, self.grid, self.support_radius,
                           self.name, params, prof)


def _from_profile(name, params, grid, f, df, g, dg, support=math.inf):
    prof = RadialProfile(f, df, g, dg)
    r = grid.r
    return InitialData(f(r), g(r), grid, support, name, params, prof)


def _place(mode, fn, dfn):
    if mode == "displacement":
        return fn, dfn, _zero, _zero
    if mode == "velocity":
        return _zero, _zero, fn, dfn
    raise ValueError(f"mode must be 'displacement' or 'velocity', got {mode!r}")


def gaussian_bump(amplitude, width, mode, grid):
    """amplitude * exp(-(r/width)^2) in f (displacement) or g (velocity)."""
    if not width > 0:
        raise ValueError(f"width must be positive, got {width}")

    def fn(r):
        r = np.asarray(r, dtype=float)
        return amplitude * np.exp(-(r / width) ** 2)

    def dfn(r):
        r = np.asarray(r, dtype=float)
        return -2.0 * r / width ** 2 * fn(r)

    params = {"amplitude": amplitude, "width": width, "mode": mode}
    return _from_profile("gaussian", params, grid, *_place(mode, fn, dfn))


def bump(s):
    """exp(1 - 1/(1 - s^2)) on |s| < 1, zero elsewhere."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    m = np.abs(s) < 1.0
    out[m] = np.exp(1.0 - 1.0 / (1.0 - s[m] ** 2))
    return out


def bump_derivative(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    m = np.abs(s) < 1.0
    q = 1.0 - s[m] ** 2
    out[m] = np.exp(1.0 - 1.0 / q) * (-2.0 * s[m] / q ** 2)
    return out


def compact_bump(rho, mode, grid, amplitude=1.0):
    """Smooth bump of radius rho, amplitude * exp(1 - 1/(1 - (r/rho)^2))."""
    if not 0 < rho < grid.r_max / 4:
        raise ValueError(f"bump radius must lie in (0, r_max/4), got {rho}")

    def fn(r):
        return amplitude * bump(np.asarray(r, dtype=float) / rho)

    def dfn(r):
        return amplitude * bump_derivative(np.asarray(r, dtype=float) / rho) / rho

    params = {"rho": rho, "mode": mode, "amplitude": amplitude}
    return _from_profile("compact", params, grid, *_place(mode, fn, dfn), support=rho)


def _w_fn(n):
    c = n * (n - 2.0)

    def w(r):
        r = np.asarray(r, dtype=float)
        return (1.0 + r * r / c) ** (-(n - 2) / 2.0)

    def dw(r):
        r = np.asarray(r, dtype=float)
        return -(r / n) * (1.0 + r * r / c) ** (-n / 2.0)

    return w, dw


def ground_state_W(grid):
    """W(r) = (1 + r^2/(n(n-2)))^(-(n-2)/2), the static solution of -Lap W = W^(2*-1)."""
    return _w_fn(grid.n_dim)[0](grid.r)


def ground_state_data(grid, alpha=1.0):
    """(alpha W, 0)."""
    w, dw = _w_fn(grid.n_dim)
    data = _from_profile("ground_state", {"alpha": 1.0}, grid, w, dw, _zero, _zero)
    return data.scaled(alpha) if alpha != 1.0 else data


def critical_exponent(n_dim):
    return 2.0 * n_dim / (n_dim - 2.0)


def hdot1_rescale(data, eps):
    """(eps^(n/2-1) f(eps r), eps^(n/2) g(eps r)): leaves the energy norms invariant."""
    grid = data.grid
    n = grid.n_dim
    a, b = eps ** (n / 2 - 1), eps ** (n / 2)
    if data.profile is not None:
        p = data.profile
        prof = RadialProfile(lambda r: a * p.f(eps * np.asarray(r)),
                             lambda r: a * eps * p.df(eps * np.asarray(r)),
                             lambda r: b * p.g(eps * np.asarray(r)),
                             lambda r: b * eps * p.dg(eps * np.asarray(r)))
        f, g = prof.f(grid.r), prof.g(grid.r)
    else:
        prof = None
        f = a * np.interp(eps * grid.r, grid.r, data.f, right=0.0)
        g = b * np.interp(eps * grid.r, grid.r, data.g, right=0.0)
    support = data.support_radius / eps
    params = dict(data.params, hdot1_scale=eps)
    return InitialData(f, g, grid, support, data.name, params, prof)


def ground_state_tails(grid):
    """Leading-order integrals of |grad W|^2 and W^2* over |x| > r_max.

    Far out W ~ (c/r^2)^((n-2)/2) and |W'| ~ c^(n/2) r^(1-n)/n with c = n(n-2).
    """
    n, R, s = grid.n_dim, grid.r_max, grid.sphere_area
    c = n * (n - 2.0)
    grad = s * c ** n / n ** 2 * R ** (2 - n) / (n - 2.0)
    pot = s * c ** n * R ** (-n) / n
    return grad, pot


def pohozaev_defect(grid):
    """|int |grad W|^2 - int W^2*| / int |grad W|^2 over R^n.

    Grid quadrature (midpoint gradients) plus the analytic exterior tails.
    """
    from .functionals import gradient_energy

    w = ground_state_W(grid)
    grad = gradient_energy(FieldState(w, np.zeros_like(w), 0.0, grid), grid)
    pot = integrate_ball(np.abs(w) ** critical_exponent(grid.n_dim), grid)
    tg, tp = ground_state_tails(grid)
    return abs((grad + tg) - (pot + tp)) / (grad + tg)


class Verdict:
    SUBTHRESHOLD_GLOBAL = "subthreshold_global"
    SUPERTHRESHOLD_BLOWUP = "superthreshold_blowup"
    INDETERMINATE = "indeterminate"


@dataclass
class ThresholdReport:
    energy_lhs: float
    energy_rhs: float
    grad_f: float
    grad_W: float
    condition_energy: bool
    condition_gradient: bool
    verdict: str
    grad_W_tail: float = 0.0

    def as_dict(self):
        return dict(self.__dict__)


def _static_energy(f, g, grid):
    n = grid.n_dim
    grad = integrate_ball(radial_derivative(f, grid.dr) ** 2, grid)
    kin = integrate_ball(g * g, grid)
    pot = integrate_ball(np.abs(f) ** critical_exponent(n), grid)
    return grad + kin - (n - 2.0) / n * pot, grad


def kenig_merle_check(data, grid=None):
    """Compare (f, g) with (W, 0) for the focusing problem (lambda = -1).

    Both sides use the same truncated quadrature; ``grad_W_tail`` is the
    analytic size of the part of the integral of |grad W|^2 beyond r_max.
    """
    grid = grid or data.grid
    n = grid.n_dim
    lhs, grad_f = _static_energy(data.f, data.g, grid)
    w = ground_state_W(grid)
    rhs, grad_w = _static_energy(w, np.zeros_like(w), grid)
    tail = ground_state_tails(grid)[0]
    cond_e = lhs < rhs
    cond_g = grad_f < grad_w
    if cond_e and cond_g:
        verdict = Verdict.SUBTHRESHOLD_GLOBAL
    elif cond_e and grad_f > grad_w:
        verdict = Verdict.SUPERTHRESHOLD_BLOWUP
    else:
        verdict = Verdict.INDETERMINATE
    return ThresholdReport(float(lhs), float(rhs), float(grad_f), float(grad_w),
                           bool(cond_e), bool(cond_g), verdict, float(tail))
