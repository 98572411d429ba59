"""Uniform radial meshes, fields on them, and n-dimensional radial quadrature."""
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

Field = np.ndarray


def sphere_area(n_dim):
    """Surface measure of the unit (n-1)-sphere in R^n."""
    return 2.0 * math.pi ** (0.5 * n_dim) / math.gamma(0.5 * n_dim)


@dataclass(frozen=True)
class RadialGrid:
    """Nodes r_i = i*dr for i = 0..node_count, so node_count*dr == r_max."""

    n_dim: int
    dr: float
    r_max: float
    node_count: int
    sphere_area: float

    @cached_property
    def r(self):
        r = np.arange(self.node_count + 1, dtype=float) * self.dr
        r.flags.writeable = False
        return r

    @cached_property
    def measure(self):
        """Trapezoid weights for the integral of q(|x|) over R^n: sum(measure*q)."""
        w = self.sphere_area * self.dr * self.r ** (self.n_dim - 1)
        w[-1] *= 0.5  # w[0] already vanishes
        w.flags.writeable = False
        return w

    @property
    def size(self):
        return self.node_count + 1

    def zeros(self):
        return np.zeros(self.size)

    def node_index(self, R):
        """Index of the node nearest to radius R (R = inf means the last node)."""
        if R < 0:
            raise ValueError(f"ball radius must be non-negative, got {R}")
        if math.isinf(R):
            return self.node_count
        if R > self.r_max * (1 + 1e-12):
            raise ValueError(f"ball radius {R} exceeds r_max = {self.r_max}")
        return min(int(round(R / self.dr)), self.node_count)

    def snap_distance(self, R):
        if math.isinf(R):
            return 0.0
        return abs(self.node_index(R) * self.dr - R)


def make_grid(n_dim, dr, r_max):
    if int(n_dim) != n_dim or n_dim < 3:
        raise ValueError(f"dimension must be an integer >= 3, got {n_dim}")
    if not dr > 0:
        raise ValueError(f"mesh spacing must be positive, got {dr}")
    if not r_max >= 10 * dr:
        raise ValueError(f"r_max = {r_max} must be at least 10*dr = {10 * dr}")
    count = int(round(r_max / dr))
    return RadialGrid(int(n_dim), float(dr), count * float(dr), count, sphere_area(int(n_dim)))


@dataclass
class FieldState:
    """(u, u_t) on a grid at time t.

    ``ur`` optionally carries an exact radial derivative (set by the exact
    propagator); functionals fall back to centered differences without it.
    """

    u: Field
    ut: Field
    t: float = 0.0
    grid: RadialGrid = field(default=None, repr=False, compare=False)
    ur: Field = field(default=None, repr=False, compare=False)

    def copy(self):
        ur = None if self.ur is None else self.ur.copy()
        return FieldState(self.u.copy(), self.ut.copy(), self.t, self.grid, ur)

    def reflected(self):
        """The same configuration seen at time -t: u unchanged, u_t negated."""
        return FieldState(self.u.copy(), -self.ut, -self.t, self.grid, self.ur)

    def is_finite(self):
        return bool(np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.ut)))


def integrate_ball(q, grid, R=math.inf):
    """Trapezoid approximation of the integral of q(|x|) over the ball B_R.

    R is snapped to the nearest node; R = inf integrates over the whole mesh.
    """
    m = grid.node_index(R)
    f = np.asarray(q, dtype=float)[: m + 1] * grid.r[: m + 1] ** (grid.n_dim - 1)
    if m == 0:
        return 0.0
    return grid.sphere_area * grid.dr * (f.sum() - 0.5 * (f[0] + f[m]))


def ball_cumulative(q, grid):
    """Array C with C[m] = integrate_ball(q, grid, r_m) for every node m."""
    f = np.asarray(q, dtype=float) * grid.r ** (grid.n_dim - 1)
    c = np.cumsum(f)
    return grid.sphere_area * grid.dr * (c - 0.5 * (f[0] + f))


def radial_derivative(u, dr):
    """Centered d/dr; zero at the origin (even symmetry), one-sided at r_max."""
    du = np.empty_like(u)
    du[1:-1] = (u[2:] - u[:-2]) / (2.0 * dr)
    du[0] = 0.0
    du[-1] = (3.0 * u[-1] - 4.0 * u[-2] + u[-3]) / (2.0 * dr)
    return du
