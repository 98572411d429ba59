"""Integral quantities of a radial solution.

All space integrals are trapezoid sums of sigma_{n-1} q(r) r^(n-1); time
integrals are accumulated by observers with the solver's trapezoid weights.
The energy is normalized as

    E = int (u_t^2 + |grad u|^2 + (2 lam / 2*) |u|^2*) dx.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .radial_grid import ball_cumulative, integrate_ball, radial_derivative
from .weights import HypothesisError, audit_weight


def _p(grid):
    return 2.0 * grid.n_dim / (grid.n_dim - 2.0)


def _ur(state, grid):
    if state.ur is not None:
        return state.ur
    return radial_derivative(state.u, grid.dr)


def _integral(q, grid):
    return float(np.dot(grid.measure, q))


def _abs_pow(u, p):
    if p == 6.0:
        u2 = u * u
        return u2 * u2 * u2
    return np.abs(u) ** p


@dataclass
class EnergyReport:
    kinetic: float
    gradient: float
    potential: float
    total: float
    t: float = 0.0


def gradient_energy(state, grid):
    """int |grad u|^2 dx.

    With an exact ``ur`` this is the nodal trapezoid sum. Otherwise the
    difference quotients sit at cell midpoints with weights (r_i r_{i+1})^((n-1)/2),
    which is the flux form of the solver's Laplacian; the energy the scheme
    conserves is then measured without the O(dr^2) bias of nodal differences.
    """
    if state.ur is not None:
        return _integral(state.ur * state.ur, grid)
    du = np.diff(state.u) / grid.dr
    r = grid.r
    wm = grid.sphere_area * grid.dr * (r[:-1] * r[1:]) ** (0.5 * (grid.n_dim - 1))
    return float(np.dot(wm, du * du))


def energy(state, lam, grid):
    kin = _integral(state.ut * state.ut, grid)
    grad = gradient_energy(state, grid)
    pot = 2.0 * lam / _p(grid) * _integral(_abs_pow(state.u, _p(grid)), grid) if lam else 0.0
    return EnergyReport(kin, grad, pot, kin + grad + pot, state.t)


def lp_norm(state, grid, q):
    if math.isinf(q):
        return float(np.max(np.abs(state.u)))
    return _integral(_abs_pow(state.u, q), grid) ** (1.0 / q)


# ------------------------------------------------------------- weight samples

def sample_weight(weight, grid):
    """Weight arrays on the grid nodes, cached on the weight object."""
    cache = weight.__dict__.setdefault("_samples", {})
    key = (grid.n_dim, grid.dr, grid.node_count)
    if key not in cache:
        r = grid.r
        cache[key] = {
            "eval": np.asarray(weight.eval(r), dtype=float),
            "d1": np.asarray(weight.d1(r), dtype=float),
            "d2": np.asarray(weight.d2(r), dtype=float),
            "lap": np.asarray(weight.laplacian(r), dtype=float),
            "bilap": np.asarray(weight.bilaplacian(r), dtype=float),
        }
    return cache[key]


def _require(weight, kind):
    if weight.kind != kind:
        raise HypothesisError(f"weight {weight.name} is of kind {weight.kind!r}, need {kind!r}")
    if not weight.bounds:
        audit_weight(weight)


def hessian_quadratic_form(weight, x, grad):
    """grad . D^2 psi(x) . grad with the full n x n Hessian of the radial weight."""
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    d2 = float(weight.d2(np.array([r]))[0])
    tang = float(weight.tangential(np.array([r]))[0])
    e = x / r
    hess = d2 * np.outer(e, e) + tang * (np.eye(len(x)) - np.outer(e, e))
    return float(grad @ hess @ grad)


# ------------------------------------------------------------------ Morawetz

def morawetz_density(state, weight, lam, grid):
    """psi'' u_r^2 - Lap^2 psi u^2 / 4 + (lam/n) Lap psi |u|^2*  (radial u)."""
    w = sample_weight(weight, grid)
    ur = _ur(state, grid)
    u = state.u
    dens = w["d2"] * ur * ur - 0.25 * w["bilap"] * u * u
    if lam:
        dens = dens + lam / grid.n_dim * w["lap"] * _abs_pow(u, _p(grid))
    return dens


@dataclass
class MorawetzLedger:
    weight: object
    lam: float
    grid: object = field(repr=False)
    lhs_accumulated: float = 0.0
    boundary_plus: float = 0.0
    boundary_minus: float = 0.0
    T: float = 0.0
    target: float = math.nan

    def __post_init__(self):
        _require(self.weight, "morawetz")

    def __call__(self, state, w):
        morawetz_observe(self, state, self.weight, self.lam, self.grid, w)

    def close(self, state_plus, state_minus, energy0=None):
        self.boundary_plus = morawetz_boundary(state_plus, self.weight, self.grid, +1)
        self.boundary_minus = morawetz_boundary(state_minus, self.weight, self.grid, -1)
        self.T = float(state_plus.t)
        if energy0 is not None:
            self.target = self.weight.d1_at_infinity * energy0
        return self

    @property
    def boundary_sum(self):
        return self.boundary_plus + self.boundary_minus

    @property
    def residual(self):
        return self.lhs_accumulated - self.boundary_sum


def morawetz_observe(ledger, state, weight, lam, grid, dt_weight):
    _require(weight, "morawetz")
    if dt_weight:
        ledger.lhs_accumulated += dt_weight * _integral(morawetz_density(state, weight, lam, grid), grid)
    return ledger


def morawetz_boundary(state, weight, grid, sign):
    """-sign * int u_t (u_r psi' + u Lap psi / 2) dx, the boundary term at time sign*T."""
    w = sample_weight(weight, grid)
    ur = _ur(state, grid)
    dens = state.ut * (ur * w["d1"] + 0.5 * state.u * w["lap"])
    return -float(sign) * _integral(dens, grid)


def flux(state, weight, grid):
    """int u_t grad u . grad psi dx."""
    w = sample_weight(weight, grid)
    return _integral(state.ut * _ur(state, grid) * w["d1"], grid)


# -------------------------------------------------------------------- virial

def virial_density(state, weight, lam, grid):
    """(u_t^2 - u_r^2 - lam |u|^2*) phi + u^2 Lap phi / 2."""
    w = sample_weight(weight, grid)
    ur = _ur(state, grid)
    u = state.u
    core = state.ut * state.ut - ur * ur
    if lam:
        core = core - lam * _abs_pow(u, _p(grid))
    return core * w["eval"] + 0.5 * u * u * w["lap"]


@dataclass
class VirialLedger:
    weight: object
    lam: float
    grid: object = field(repr=False)
    lhs_accumulated: float = 0.0
    boundary_plus: float = 0.0
    boundary_minus: float = 0.0
    T: float = 0.0

    def __post_init__(self):
        _require(self.weight, "virial")

    def __call__(self, state, w):
        virial_observe(self, state, self.weight, self.lam, self.grid, w)

    def close(self, state_plus, state_minus):
        self.boundary_plus = virial_boundary(state_plus, self.weight, self.grid, +1)
        self.boundary_minus = virial_boundary(state_minus, self.weight, self.grid, -1)
        self.T = float(state_plus.t)
        return self

    @property
    def boundary_sum(self):
        return self.boundary_plus + self.boundary_minus

    @property
    def residual(self):
        return self.lhs_accumulated - self.boundary_sum


def virial_observe(ledger, state, weight, lam, grid, dt_weight):
    _require(weight, "virial")
    if dt_weight:
        ledger.lhs_accumulated += dt_weight * _integral(virial_density(state, weight, lam, grid), grid)
    return ledger


def virial_boundary(state, weight, grid, sign):
    """sign * int u_t u phi dx at time sign*T."""
    return float(sign) * pairing(state, weight, grid)


def pairing(state, weight, grid):
    """int u_t u phi dx."""
    _require(weight, "virial")
    w = sample_weight(weight, grid)
    return _integral(state.ut * state.u * w["eval"], grid)


# ------------------------------------------------------- localized energies

KINDS = ("radial_grad", "tangential_grad", "full_grad", "kinetic", "spacetime_full",
         "lagrangian", "l2star", "mass")


class LocalizedAccumulator:
    """Time integrals of the energy-type densities, kept node by node.

    Ball integrals commute with the time integral, so any radius can be
    queried afterwards with :func:`localized_energy`.
    """

    def __init__(self, grid, lam=0.0):
        self.grid = grid
        self.lam = lam
        self.p = _p(grid)
        self.dens = {k: np.zeros(grid.size) for k in KINDS}
        self.l2star_bracket = 0.0
        self._inv_bracket = 1.0 / np.sqrt(1.0 + grid.r ** 2)
        self.t_min = math.inf
        self.t_max = -math.inf

    def __call__(self, state, w):
        self.t_min = min(self.t_min, state.t)
        self.t_max = max(self.t_max, state.t)
        if not w:
            return
        ur = _ur(state, self.grid)
        u, ut = state.u, state.ut
        g2 = ur * ur
        k2 = ut * ut
        up = _abs_pow(u, self.p)
        d = self.dens
        d["radial_grad"] += w * g2
        d["full_grad"] += w * g2
        d["kinetic"] += w * k2
        d["spacetime_full"] += w * (k2 + g2 + (2.0 * self.lam / self.p) * up)
        d["lagrangian"] += w * (k2 - g2)
        d["l2star"] += w * up
        d["mass"] += w * u * u
        self.l2star_bracket += w * _integral(up * self._inv_bracket, self.grid)


class ModeAccumulator(LocalizedAccumulator):
    """Same bookkeeping for u = a(t, r) Y_l with Y_l normalized in L^2 of the sphere."""

    def __init__(self, grid, ell):
        super().__init__(grid, 0.0)
        self.ang = ell * (ell + grid.n_dim - 2.0)
        r = grid.r.copy()
        r[0] = 1.0
        self._inv_r2 = np.where(grid.r > 0, 1.0 / r ** 2, 0.0)

    def __call__(self, state, w):
        self.t_min = min(self.t_min, state.t)
        self.t_max = max(self.t_max, state.t)
        if not w:
            return
        s = self.grid.sphere_area
        a, at = state.u, state.ut
        ar = _ur(state, self.grid)
        g2 = ar * ar / s
        tg = self.ang * a * a * self._inv_r2 / s
        k2 = at * at / s
        d = self.dens
        d["radial_grad"] += w * g2
        d["tangential_grad"] += w * tg
        d["full_grad"] += w * (g2 + tg)
        d["kinetic"] += w * k2
        d["spacetime_full"] += w * (k2 + g2 + tg)
        d["lagrangian"] += w * (k2 - g2 - tg)
        d["mass"] += w * a * a / s


def localized_energy(acc, R, kind):
    """(1/R) int int_{B_R} density dx dt; kind "mass" uses 1/R^3."""
    if kind not in KINDS:
        raise ValueError(f"unknown localized kind {kind!r}; expected one of {KINDS}")
    grid = acc.grid
    if R > grid.r_max or R <= 0:
        raise ValueError(f"radius {R} must lie in (0, r_max = {grid.r_max}]")
    val = integrate_ball(acc.dens[kind], grid, R)
    return val / R ** 3 if kind == "mass" else val / R


def localized_profile(acc, kind):
    """(r_m, cumulative ball integral) for every node, un-normalized."""
    return acc.grid.r, ball_cumulative(acc.dens[kind], acc.grid)


# ---------------------------------------------------------------- conformal

@dataclass
class ConformalReport:
    T: float
    Q: float
    rhs_cap: float
    plus_wave: float
    minus_wave: float
    interior: float

    def chain(self):
        """The three inequalities as (label, lhs, bound)."""
        return [
            ("Q <= rhs_cap", self.Q, self.rhs_cap),
            ("plus+minus <= 4 rhs_cap", self.plus_wave + self.minus_wave, 4.0 * self.rhs_cap),
            ("interior <= 16 rhs_cap/T^2", self.interior,
             16.0 * self.rhs_cap / self.T ** 2 if self.T else math.inf),
        ]


def conformal(state, data, grid):
    T = float(state.t)
    r = grid.r
    ur = _ur(state, grid)
    ut = state.ut
    e = ut * ut + ur * ur
    Q = _integral((T * T + r * r) * e + 4.0 * T * r * ur * ut, grid)
    if data.profile is not None:
        df = data.profile.df(r)
    else:
        df = radial_derivative(data.f, grid.dr)
    cap = _integral(r * r * (df * df + data.g * data.g), grid)
    plus = _integral((T + r) ** 2 * (ut + ur) ** 2, grid)
    minus = _integral((T - r) ** 2 * (ut - ur) ** 2, grid)
    interior = integrate_ball(e, grid, 0.5 * abs(T)) if T else 0.0
    return ConformalReport(T, Q, cap, plus, minus, interior)


def equipartition_defect(state, grid):
    """int (u_t^2 - |grad u|^2) dx."""
    ur = _ur(state, grid)
    return _integral(state.ut * state.ut - ur * ur, grid)


def outgoing_defect(state, grid, sign=+1):
    """int |u_t + sign u_r|^2 dx."""
    ur = _ur(state, grid)
    return _integral((state.ut + sign * ur) ** 2, grid)


# -------------------------------------------------------------- mixed norms

def mixed_norm(states, p, q, grid):
    """(int (int |u|^q dx)^(p/q) dt)^(1/p) over sampled states (trapezoid in t).

    q = inf uses sup |u|.
    """
    if p < 1 or q < 1:
        raise ValueError("mixed norm exponents must be >= 1")
    states = getattr(states, "states", states)
    states = sorted(states, key=lambda s: s.t)
    if not states:
        return 0.0
    t = np.array([s.t for s in states])
    vals = np.array([lp_norm(s, grid, q) for s in states]) ** p
    if len(t) == 1:
        return 0.0
    return float(np.sum(0.5 * (vals[1:] + vals[:-1]) * np.diff(t)) ** (1.0 / p))


class MixedNormAccumulator:
    """Streaming version of :func:`mixed_norm` fed by solver observers."""

    def __init__(self, grid, p, q):
        if p < 1 or q < 1:
            raise ValueError("mixed norm exponents must be >= 1")
        self.grid, self.p, self.q = grid, p, q
        self.total = 0.0

    def __call__(self, state, w):
        if w:
            self.total += w * lp_norm(state, self.grid, self.q) ** self.p

    @property
    def value(self):
        return self.total ** (1.0 / self.p)


def sup_sphere_norm(state, grid, p=math.inf):
    """sup_r (int_{S^{n-1}} |u(r w)|^p dw)^(1/p) for radial u."""
    peak = float(np.max(np.abs(state.u)))
    if math.isinf(p):
        return peak
    return grid.sphere_area ** (1.0 / p) * peak
