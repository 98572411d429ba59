"""Linear propagators: the exact 3D radial d'Alembert solution and spherical-harmonic modes.

For n = 3 the radial free wave satisfies (r u)_tt = (r u)_rr, so with
phi(s) = s f(|s|) and gamma(s) = s g(|s|) (both odd)

    r u(t, r) = [phi(r+t) + phi(r-t)]/2 + [Gamma(r+t) - Gamma(r-t)]/2,

where Gamma is the even primitive of gamma. phi is evaluated from the
analytic profile of the data; Gamma is tabulated once with Hermite-corrected
cumulative quadrature and read back by cubic Hermite interpolation.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .initial_data import InitialData, RadialProfile, bump
from .radial_grid import FieldState, integrate_ball, radial_derivative
from .solver import BlowUp, DomainError, Trajectory

_TABLE_STEP = 2.5e-3
_FD_STEP = 1e-5


def _even_derivative(y, h):
    """Fourth-order centered d/dr of an even radial profile sampled at j*h.

    The two nodes left of the origin come from the even reflection; the last
    two nodes fall back to second-order differences.
    """
    y = np.asarray(y, dtype=float)
    if len(y) < 5:
        return radial_derivative(y, h)
    ext = np.concatenate([y[2:0:-1], y])
    d = (ext[:-4] - 8 * ext[1:-3] + 8 * ext[3:-1] - ext[4:]) / (12 * h)
    out = np.empty_like(y)
    out[:-2] = d
    out[-2:] = radial_derivative(y, h)[-2:]
    return out


def _odd_derivative(y, h):
    """Same stencil for an odd profile (the derivative of an even one)."""
    y = np.asarray(y, dtype=float)
    if len(y) < 5:
        return radial_derivative(y, h)
    ext = np.concatenate([-y[2:0:-1], y])
    d = (ext[:-4] - 8 * ext[1:-3] + 8 * ext[3:-1] - ext[4:]) / (12 * h)
    out = np.empty_like(y)
    out[:-2] = d
    out[-2:] = radial_derivative(y, h)[-2:]
    return out


def _sampled_profile(data):
    """Cubic Hermite profile built from grid samples (for data without a closed form)."""
    dr = data.grid.dr
    f, g = data.f, data.g
    df, dg = _even_derivative(f, dr), _even_derivative(g, dr)

    def interp(y, dy):
        def fn(s):
            s = np.abs(np.asarray(s, dtype=float))
            return _hermite_uniform(s, dr, y, dy, outside=0.0)
        return fn

    d2f = _odd_derivative(df, dr)
    d2g = _odd_derivative(dg, dr)
    return RadialProfile(interp(f, df), interp(df, d2f), interp(g, dg), interp(dg, d2g))


def _hermite_uniform(x, h, y, dy, outside=math.nan):
    """Cubic Hermite interpolation of (y, dy) sampled at j*h, j = 0..len-1."""
    n = len(y) - 1
    j = np.clip(np.floor(x / h).astype(np.int64), 0, n - 1)
    s = x / h - j
    s2, s3 = s * s, s * s * s
    h00 = 2 * s3 - 3 * s2 + 1
    h10 = s3 - 2 * s2 + s
    h01 = -2 * s3 + 3 * s2
    h11 = s3 - s2
    out = h00 * y[j] + h10 * h * dy[j] + h01 * y[j + 1] + h11 * h * dy[j + 1]
    return np.where(x > n * h * (1 + 1e-12), outside, out)


class DalembertOracle:
    """Exact radial free evolution in three dimensions for one datum.

    ``extent`` is the largest |r +- t| that can be evaluated; requests beyond it
    raise ``ValueError``.
    """

    def __init__(self, data, t_max=None, grid=None):
        grid = grid or data.grid
        if grid.n_dim != 3:
            raise ValueError(f"the d'Alembert oracle needs n = 3, got n = {grid.n_dim}")
        self.grid = grid
        self.data = data
        self.profile = data.profile if data.profile is not None else _sampled_profile(data)
        self.t_max = grid.r_max if t_max is None else float(t_max)
        self.extent = grid.r_max + self.t_max
        p = self.profile
        h = min(_TABLE_STEP, grid.dr / 4.0)
        s = np.arange(int(math.ceil(self.extent / h)) + 1) * h
        gam = s * p.g(s)
        dgam = p.g(s) + s * p.dg(s)
        inc = 0.5 * h * (gam[1:] + gam[:-1]) + h * h / 12.0 * (dgam[:-1] - dgam[1:])
        self._h = h
        self._Gam = np.concatenate([[0.0], np.cumsum(inc)])
        self._gam = gam

    # odd/even extensions -------------------------------------------------
    def phi(self, s):
        a = np.abs(s)
        return s * self.profile.f(a)

    def dphi(self, s):
        a = np.abs(s)
        return self.profile.f(a) + a * self.profile.df(a)

    def d2phi(self, s):
        return (self.dphi(s + _FD_STEP) - self.dphi(s - _FD_STEP)) / (2 * _FD_STEP)

    def gamma(self, s):
        return s * self.profile.g(np.abs(s))

    def dgamma(self, s):
        a = np.abs(s)
        return self.profile.g(a) + a * self.profile.dg(a)

    def Gamma(self, s):
        return _hermite_uniform(np.abs(s), self._h, self._Gam, self._gam)

    # ---------------------------------------------------------------------
    def _check(self, t):
        if abs(t) > self.t_max * (1 + 1e-12):
            raise ValueError(f"time {t} is beyond the oracle table (|t| <= {self.t_max})")

    def state(self, t, r=None):
        """FieldState at time t (any sign), with the exact radial derivative in ``ur``."""
        t = float(t)
        self._check(t)
        r = self.grid.r if r is None else np.asarray(r, dtype=float)
        p, m = r + t, r - t
        v = 0.5 * (self.phi(p) + self.phi(m)) + 0.5 * (self.Gamma(p) - self.Gamma(m))
        vt = 0.5 * (self.dphi(p) - self.dphi(m)) + 0.5 * (self.gamma(p) + self.gamma(m))
        vr = 0.5 * (self.dphi(p) + self.dphi(m)) + 0.5 * (self.gamma(p) - self.gamma(m))
        pos = r > 0
        rs = np.where(pos, r, 1.0)
        u = np.where(pos, v / rs, 0.0)
        ut = np.where(pos, vt / rs, 0.0)
        ur = np.where(pos, vr / rs - v / rs ** 2, 0.0)
        if not np.all(pos):
            # r -> 0 limits: u = v_r(t, 0), u_t = v_rt(t, 0)
            tt = np.array([t])
            u = np.where(pos, u, float((self.dphi(tt) + self.gamma(tt))[0]))
            ut = np.where(pos, ut, float((self.d2phi(tt) + self.dgamma(tt))[0]))
        return FieldState(u, ut, t, self.grid, ur)

    def trajectory(self, T, dt, observers=(), two_sided=True):
        """Feed observers the states on [-T, T] (or [0, T]) with trapezoid weights."""
        steps = int(round(T / dt))
        if abs(steps * dt - T) > 1e-9 * max(1.0, T):
            raise ValueError(f"T = {T} is not a multiple of dt = {dt}")
        k0 = -steps if two_sided else 0
        for k in range(k0, steps + 1):
            w = 0.5 * dt if k in (k0, steps) else dt
            st = self.state(k * dt)
            for obs in observers:
                obs(st, w)
        return self.state(T), self.state(-T if two_sided else 0.0)


def dalembert_3d(data, t, grid=None):
    """Exact free solution at time t for radial data in R^3."""
    grid = grid or data.grid
    return DalembertOracle(data, max(abs(t), grid.dr), grid).state(t)


# ----------------------------------------------------------------- modes

@dataclass
class ModeState:
    """Coefficient a(t, r) of u = a Y_l with Y_l normalized in L^2 of the unit sphere."""

    ell: int
    a: np.ndarray
    at: np.ndarray
    t: float = 0.0
    grid: object = field(default=None, repr=False)

    @property
    def angular_factor(self):
        return self.ell * (self.ell + self.grid.n_dim - 2.0)

    def as_field(self):
        return FieldState(self.a, self.at, self.t, self.grid)

    def copy(self):
        return ModeState(self.ell, self.a.copy(), self.at.copy(), self.t, self.grid)


def mode_data(ell, grid, rho=1.0, amplitude=1.0, mode="displacement"):
    """(r/rho)^l times the compact bump of radius rho, in a or in a_t."""
    if int(ell) != ell or ell < 1:
        raise ValueError(f"angular momentum must be an integer >= 1, got {ell}")
    prof = amplitude * (grid.r / rho) ** ell * bump(grid.r / rho)
    zero = np.zeros_like(prof)
    if mode == "displacement":
        return ModeState(int(ell), prof, zero, 0.0, grid)
    if mode == "velocity":
        return ModeState(int(ell), zero, prof, 0.0, grid)
    raise ValueError(f"mode must be 'displacement' or 'velocity', got {mode!r}")


def mode_energy(mode):
    """(1/sigma) int (a_t^2 + a_r^2 + l(l+n-2) a^2/r^2) dx, split as a dict.

    The radial part uses midpoint differences with weights (r_i r_{i+1})^((n-1)/2),
    the form the mode stencil conserves.
    """
    grid = mode.grid
    s = grid.sphere_area
    r = grid.r
    da = np.diff(mode.a) / grid.dr
    wm = grid.dr * (r[:-1] * r[1:]) ** (0.5 * (grid.n_dim - 1))
    rs = np.where(r > 0, r, 1.0)
    tang = np.where(r > 0, mode.angular_factor * mode.a ** 2 / rs ** 2, 0.0)
    parts = {
        "kinetic": integrate_ball(mode.at ** 2, grid) / s,
        "radial": float(np.dot(wm, da * da)),
        "tangential": integrate_ball(tang, grid) / s,
    }
    parts["total"] = parts["kinetic"] + parts["radial"] + parts["tangential"]
    return parts


def evolve_mode(mode, t, cfg, observers=(), _reflect=False):
    """Verlet evolution of a_tt = a_rr + (n-1)/r a_r - l(l+n-2) a/r^2 up to time t.

    Returns (final ModeState, Trajectory). ``cfg`` supplies dr, dt, lam and the
    boundary margin; lam must vanish since modes only decouple for the free equation.
    """
    if cfg.lam != 0:
        raise ValueError("mode evolution is only defined for the free equation (lam = 0)")
    if mode.ell < 1:
        raise ValueError("mode evolution needs l >= 1")
    grid = mode.grid
    if abs(grid.dr - cfg.dr) > 1e-15 * cfg.dr or grid.n_dim != cfg.n_dim:
        raise ValueError("solver config does not match the mode grid")
    nz = np.nonzero((np.abs(mode.a) > 0) | (np.abs(mode.at) > 0))[0]
    support = grid.r[nz[-1]] if len(nz) else 0.0
    if support + t + cfg.boundary_margin > grid.r_max:
        raise DomainError(f"r_max = {grid.r_max} too small for mode support {support:.3g} "
                          f"and horizon {t}")
    steps = int(round(t / cfg.dt))
    if abs(steps * cfg.dt - t) > 1e-9 * max(1.0, t):
        raise ValueError(f"t = {t} is not a multiple of dt = {cfg.dt}")
    ang = mode.angular_factor
    a = mode.a.astype(float).copy()
    at = (-mode.at if _reflect else mode.at).astype(float).copy()
    a[0] = a[-1] = 0.0
    acc = np.empty_like(a)
    kernels.mode_accel(a, acc, grid.n_dim, grid.dr, ang)
    sign = -1.0 if _reflect else 1.0
    traj = Trajectory(max_amplitude=float(np.max(np.abs(a))))

    def emit(k, w):
        st = FieldState(a, sign * at, sign * k * cfg.dt, grid)
        for obs in observers:
            obs(st, w)

    half = 0.5 * cfg.dt
    emit(0, half if steps else 0.0)
    for k in range(1, steps + 1):
        kernels.mode_verlet_step(a, at, acc, grid.n_dim, grid.dr, cfg.dt, ang)
        if not np.isfinite(a[1:-1]).all():
            traj.blowup = BlowUp(sign * k * cfg.dt, "nan", math.nan)
            break
        traj.steps = k
        emit(k, half if k == steps else cfg.dt)
    final = ModeState(mode.ell, a.copy(), sign * at.copy(), sign * traj.steps * cfg.dt, grid)
    traj.final = final.as_field()
    return final, traj


def evolve_mode_two_sided(mode, T, cfg, observers=()):
    """Mode evolution over [-T, T]; observers see physical states on both halves."""
    plus, _ = evolve_mode(mode, T, cfg, observers)
    minus, _ = evolve_mode(mode, T, cfg, observers, _reflect=True)
    return plus, minus


# -------------------------------------------------------------- rescaling

def rescale_data(g, eps, grid):
    """eps^(n/2) g(eps r) on the grid; ``g`` is a callable or an array of grid samples.

    The L^2 norm is preserved. Samples of g beyond eps*r_max would be lost, so
    data not negligible there is rejected.
    """
    if not 0 < eps <= 1:
        raise ValueError(f"scale must lie in (0, 1], got {eps}")
    n = grid.n_dim
    if callable(g):
        vals = np.asarray(g(eps * grid.r), dtype=float)
        tail = np.abs(np.asarray(g(grid.r[grid.r > eps * grid.r_max]), dtype=float))
        peak = np.max(np.abs(g(grid.r)))
    else:
        g = np.asarray(g, dtype=float)
        vals = np.interp(eps * grid.r, grid.r, g)
        tail = np.abs(g[grid.r > eps * grid.r_max])
        peak = np.max(np.abs(g))
    if tail.size and tail.max() > 1e-12 * max(peak, 1e-300):
        raise ValueError(f"data is not negligible beyond eps*r_max = {eps * grid.r_max:g}; "
                         "increase r_max")
    return eps ** (n / 2.0) * vals


def velocity_data(h, dh, grid, name="velocity", params=None):
    """InitialData (0, h) with an analytic profile, for use with the oracle."""
    zero = lambda r: np.zeros_like(np.asarray(r, dtype=float))  # noqa: E731
    prof = RadialProfile(zero, zero, h, dh)
    return InitialData(np.zeros(grid.size), np.asarray(h(grid.r), dtype=float), grid,
                       math.inf, name, dict(params or {}), prof)


__all__ = [
    "DalembertOracle", "dalembert_3d", "ModeState", "mode_data", "mode_energy", "evolve_mode",
    "evolve_mode_two_sided", "rescale_data", "velocity_data",
]
