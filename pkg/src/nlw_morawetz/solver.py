"""Explicit velocity-Verlet evolution of the radial critical NLW.

    u_tt = u_rr + (n-1)/r u_r - lam u |u|^(2*-2)

Observers are called as ``obs(state, w)`` at every time level, where ``w`` is
the trapezoid weight of that level in the time integral. The state passed in
shares memory with the integrator and must not be kept or modified.
"""
import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .functionals import energy
from .initial_data import critical_exponent
from .radial_grid import FieldState

log = logging.getLogger(__name__)

CFL_MAX = 0.9


class DomainError(ValueError):
    """The outer boundary could be reached by the solution within the horizon."""


@dataclass
class SolverConfig:
    lam: float
    n_dim: int
    dr: float
    dt: float
    t_max: float
    blowup_factor: float = 1e3
    blowup_threshold: Optional[float] = None
    boundary_margin: float = 5.0
    drift_bound: float = 1e-2
    energy_stride: int = 50
    stride: int = 0

    def __post_init__(self):
        if not self.dt > 0 or not self.dr > 0:
            raise ValueError("dt and dr must be positive")
        if self.cfl > CFL_MAX:
            raise ValueError(f"dt = {self.dt} violates the CFL bound dt/dr <= {CFL_MAX} "
                             f"(dt/dr = {self.cfl:.3g})")
        if self.t_max < 0:
            raise ValueError("t_max must be non-negative")

    @property
    def cfl(self):
        return self.dt / self.dr

    @property
    def nl_exp(self):
        return critical_exponent(self.n_dim) - 2.0

    @property
    def n_steps(self):
        n = int(round(self.t_max / self.dt))
        if abs(n * self.dt - self.t_max) > 1e-9 * max(1.0, self.t_max):
            raise ValueError(f"t_max = {self.t_max} is not a multiple of dt = {self.dt}")
        return n


@dataclass
class BlowUp:
    time: float
    reason: str
    value: float


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    final: Optional[FieldState] = None
    blowup: Optional[BlowUp] = None
    steps: int = 0
    max_amplitude: float = 0.0
    max_drift: float = 0.0

    @property
    def completed(self):
        return self.blowup is None


def step(state, cfg, grid=None):
    """One kick-drift-kick step; returns a new state."""
    u, ut = state.u.copy(), state.ut.copy()
    acc = np.empty_like(u)
    kernels.radial_accel(u, acc, cfg.n_dim, cfg.dr, cfg.lam, cfg.nl_exp)
    kernels.verlet_step(u, ut, acc, cfg.n_dim, cfg.dr, cfg.dt, cfg.lam, cfg.nl_exp)
    return FieldState(u, ut, state.t + cfg.dt, grid or state.grid)


def domain_leak(data, cfg):
    """Largest |f|, |g| in the shell that can reach r_max before t_max, relative to the peak."""
    grid = data.grid
    reach = grid.r_max - cfg.t_max - cfg.boundary_margin
    if math.isfinite(data.support_radius):
        return 0.0 if data.support_radius <= reach else math.inf
    peak = max(np.max(np.abs(data.f)), np.max(np.abs(data.g)), 1e-300)
    outer = grid.r > reach
    if not np.any(outer):
        return 0.0
    return float(max(np.max(np.abs(data.f[outer])), np.max(np.abs(data.g[outer]))) / peak)


def check_domain(data, cfg, tol=1e-12):
    leak = domain_leak(data, cfg)
    if leak > tol:
        raise DomainError(
            f"r_max = {data.grid.r_max} too small: data reaches the boundary within t_max = "
            f"{cfg.t_max} (relative leak {leak:.3g})")


def evolve(data, cfg, observers=(), strict_domain=True, _reflect=False):
    """Evolve ``data`` to ``cfg.t_max`` or until a blow-up signal."""
    grid = data.grid
    if grid.n_dim != cfg.n_dim or abs(grid.dr - cfg.dr) > 1e-15 * cfg.dr:
        raise ValueError("solver config does not match the data grid")
    if strict_domain:
        check_domain(data, cfg)
    nsteps = cfg.n_steps
    u = np.ascontiguousarray(data.f, dtype=float).copy()
    ut = np.ascontiguousarray(data.g, dtype=float).copy()
    u[-1] = 0.0
    ut[-1] = 0.0
    acc = np.empty_like(u)
    kernels.radial_accel(u, acc, cfg.n_dim, cfg.dr, cfg.lam, cfg.nl_exp)

    e0 = energy(FieldState(u, ut, 0.0, grid), cfg.lam, grid)
    e_scale = e0.kinetic + e0.gradient + abs(e0.potential)
    peak0 = float(np.max(np.abs(u)))
    threshold = cfg.blowup_threshold or cfg.blowup_factor * max(peak0, float(np.max(np.abs(ut))), 1e-300)
    traj = Trajectory(max_amplitude=peak0)
    sign = -1.0 if _reflect else 1.0

    def emit(k, w):
        t = k * cfg.dt
        st = FieldState(u, -ut, -t, grid) if _reflect else FieldState(u, ut, t, grid)
        for obs in observers:
            obs(st, w)
        if cfg.stride and k % cfg.stride == 0:
            traj.times.append(sign * t)
            traj.states.append(FieldState(u.copy(), sign * ut.copy(), sign * t, grid))

    half = 0.5 * cfg.dt
    emit(0, half if nsteps else 0.0)
    for k in range(1, nsteps + 1):
        peak = kernels.verlet_step(u, ut, acc, cfg.n_dim, cfg.dr, cfg.dt, cfg.lam, cfg.nl_exp)
        traj.steps = k
        t = k * cfg.dt
        if not peak <= threshold:  # catches nan
            traj.blowup = BlowUp(sign * t, "amplitude", float(peak))
            break
        traj.max_amplitude = max(traj.max_amplitude, peak)
        if e_scale > 0 and k % cfg.energy_stride == 0:
            ek = energy(FieldState(u, ut, t, grid), cfg.lam, grid)
            drift = abs(ek.total - e0.total) / e_scale
            traj.max_drift = max(traj.max_drift, drift)
            if drift > 10.0 * cfg.drift_bound:
                traj.blowup = BlowUp(sign * t, "energy_drift", float(drift))
                break
        emit(k, half if k == nsteps else cfg.dt)
    if traj.blowup is not None:
        log.info("blow-up signal at t = %.4g (%s)", traj.blowup.time, traj.blowup.reason)
    traj.final = FieldState(u, sign * ut, sign * traj.steps * cfg.dt, grid)
    return traj


def evolve_two_sided(data, cfg, observers=(), strict_domain=True):
    """Forward run of (f, g) and forward run of (f, -g) read as the solution on [-T, 0].

    Observers see physical states on both halves (negative times, u_t sign
    restored), so trapezoid weights add up to the integral over [-T, T].
    """
    fwd = evolve(data, cfg, observers, strict_domain)
    bwd = evolve(data.time_reversed(), cfg, observers, strict_domain, _reflect=True)
    return fwd, bwd


# ------------------------------------------------------------------ checkpoints

STATE_HEADER = "# nlw-morawetz state t={t!r} n_dim={n} dr={dr!r}"


def write_state_csv(state, grid, path):
    """Dump a state as CSV: a metadata comment line, a header ``r,u,ut``, one row per node."""
    with open(path, "w", newline="") as fh:
        fh.write(STATE_HEADER.format(t=float(state.t), n=grid.n_dim, dr=grid.dr) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["r", "u", "ut"])
        for row in zip(grid.r, state.u, state.ut):
            writer.writerow([repr(float(x)) for x in row])


def read_state_csv(path, grid=None):
    with open(path) as fh:
        meta = fh.readline().split()
        t = float(next(m for m in meta if m.startswith("t=")).split("=", 1)[1])
        data = np.loadtxt(fh, delimiter=",", skiprows=1, ndmin=2)
    return FieldState(data[:, 1].copy(), data[:, 2].copy(), t, grid)
