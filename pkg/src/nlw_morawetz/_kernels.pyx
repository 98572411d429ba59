# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled stencil kernels (same contract as ``_kernels_py``)."""
from libc.math cimport fabs, pow


cdef inline double _nonlinear(double u, double nl_exp) noexcept nogil:
    cdef double u2
    if nl_exp == 4.0:
        u2 = u * u
        return u * (u2 * u2)
    return u * pow(fabs(u), nl_exp)


cdef void _radial_accel(double[::1] u, double[::1] out, int n_dim, double dr,
                        double lam, double nl_exp) noexcept nogil:
    cdef Py_ssize_t i, size = u.shape[0]
    cdef double inv = 1.0 / (dr * dr)
    cdef double half_n = 0.5 * (n_dim - 1)
    cdef double c
    out[0] = 2.0 * n_dim * (u[1] - u[0]) * inv
    for i in range(1, size - 1):
        c = half_n / <double>i
        out[i] = ((1.0 + c) * u[i + 1] - 2.0 * u[i] + (1.0 - c) * u[i - 1]) * inv
    if lam != 0.0:
        for i in range(size):
            out[i] = out[i] - lam * _nonlinear(u[i], nl_exp)
    out[size - 1] = 0.0


def radial_accel(double[::1] u, double[::1] out, int n_dim, double dr, double lam,
                 double nl_exp):
    with nogil:
        _radial_accel(u, out, n_dim, dr, lam, nl_exp)


def verlet_step(double[::1] u, double[::1] ut, double[::1] acc, int n_dim, double dr,
                double dt, double lam, double nl_exp):
    cdef Py_ssize_t i, size = u.shape[0]
    cdef double half = 0.5 * dt
    cdef double peak = 0.0
    with nogil:
        for i in range(size):
            ut[i] = ut[i] + half * acc[i]
            u[i] = u[i] + dt * ut[i]
        u[size - 1] = 0.0
        _radial_accel(u, acc, n_dim, dr, lam, nl_exp)
        for i in range(size):
            ut[i] = ut[i] + half * acc[i]
            if fabs(u[i]) > peak or u[i] != u[i]:
                peak = fabs(u[i])
        ut[size - 1] = 0.0
    return peak


cdef void _mode_accel(double[::1] a, double[::1] out, int n_dim, double dr,
                      double ang) noexcept nogil:
    cdef Py_ssize_t i, size = a.shape[0]
    cdef double inv = 1.0 / (dr * dr)
    cdef double half_n = 0.5 * (n_dim - 1)
    cdef double c, fi
    out[0] = 0.0
    for i in range(1, size - 1):
        fi = <double>i
        c = half_n / fi
        out[i] = ((1.0 + c) * a[i + 1] - 2.0 * a[i] + (1.0 - c) * a[i - 1]
                  - ang * a[i] / (fi * fi)) * inv
    out[size - 1] = 0.0


def mode_accel(double[::1] a, double[::1] out, int n_dim, double dr, double ang):
    with nogil:
        _mode_accel(a, out, n_dim, dr, ang)


def mode_verlet_step(double[::1] a, double[::1] at, double[::1] acc, int n_dim, double dr,
                     double dt, double ang):
    cdef Py_ssize_t i, size = a.shape[0]
    cdef double half = 0.5 * dt
    with nogil:
        for i in range(size):
            at[i] = at[i] + half * acc[i]
            a[i] = a[i] + dt * at[i]
        a[0] = 0.0
        a[size - 1] = 0.0
        _mode_accel(a, acc, n_dim, dr, ang)
        for i in range(size):
            at[i] = at[i] + half * acc[i]
