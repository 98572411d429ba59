"""Pure numpy implementation of the stencil kernels.

Mirrors ``_kernels.pyx`` operation for operation. Arrays are modified in place.
"""
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=32)
def _stencil(size, n_dim):
    i = np.arange(1, size - 1, dtype=float)
    c = 0.5 * (n_dim - 1) / i
    return 1.0 + c, 1.0 - c


def _nonlinear(u, nl_exp):
    if nl_exp == 4.0:
        u2 = u * u
        return u * (u2 * u2)
    return u * np.abs(u) ** nl_exp


def radial_accel(u, out, n_dim, dr, lam, nl_exp):
    """a(u) = u_rr + (n-1)/r u_r - lam u|u|^nl_exp, Dirichlet at the last node."""
    cp, cm = _stencil(u.shape[0], n_dim)
    inv = 1.0 / (dr * dr)
    out[1:-1] = (cp * u[2:] - 2.0 * u[1:-1] + cm * u[:-2]) * inv
    out[0] = 2.0 * n_dim * (u[1] - u[0]) * inv
    if lam != 0.0:
        out -= lam * _nonlinear(u, nl_exp)
    out[-1] = 0.0


def verlet_step(u, ut, acc, n_dim, dr, dt, lam, nl_exp):
    """Kick-drift-kick step; ``acc`` must hold a(u) on entry and holds a(u_new) on exit."""
    half = 0.5 * dt
    ut += half * acc
    u += dt * ut
    u[-1] = 0.0
    radial_accel(u, acc, n_dim, dr, lam, nl_exp)
    ut += half * acc
    ut[-1] = 0.0
    return float(np.max(np.abs(u)))


def mode_accel(a, out, n_dim, dr, ang):
    """a_rr + (n-1)/r a_r - ang a / r^2 with a(0) = a(r_max) = 0."""
    cp, cm = _stencil(a.shape[0], n_dim)
    inv = 1.0 / (dr * dr)
    i = np.arange(1, a.shape[0] - 1, dtype=float)
    out[1:-1] = (cp * a[2:] - 2.0 * a[1:-1] + cm * a[:-2] - ang * a[1:-1] / (i * i)) * inv
    out[0] = 0.0
    out[-1] = 0.0


def mode_verlet_step(a, at, acc, n_dim, dr, dt, ang):
    half = 0.5 * dt
    at += half * acc
    a += dt * at
    a[0] = 0.0
    a[-1] = 0.0
    mode_accel(a, acc, n_dim, dr, ang)
    at += half * acc
