import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlw_morawetz.weights import (HypothesisError, RadialWeight, audit_weight, cutoff_family,
                                  rescale_morawetz, rescale_virial, step_derivatives,
                                  weight_bracket, weight_smoothed_abs)


def radial_laplacian_fd(f, r, n, h=1e-4):
    return (f(r + h) - 2 * f(r) + f(r - h)) / h ** 2 + (n - 1) / r * (f(r + h) - f(r - h)) / (2 * h)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_bracket_derivatives_against_finite_differences(n):
    w = weight_bracket(n)
    r = np.linspace(0.3, 20, 50)
    h = 1e-5
    assert np.allclose(w.d1(r), (w.eval(r + h) - w.eval(r - h)) / (2 * h), atol=1e-8)
    assert np.allclose(w.d2(r), (w.d1(r + h) - w.d1(r - h)) / (2 * h), atol=1e-8)
    assert np.allclose(w.laplacian(r), radial_laplacian_fd(w.eval, r, n), atol=1e-5)
    assert np.allclose(w.bilaplacian(r), radial_laplacian_fd(w.laplacian, r, n, 1e-3), atol=1e-4)


def test_bracket_values_at_origin_are_finite_limits():
    w = weight_bracket(3)
    zero = np.array([0.0])
    # Lap <x> = (n + (n-1) r^2)/<x>^3 -> n, Lap^2 <x> -> -(n^2 + 2n)
    assert w.laplacian(zero)[0] == pytest.approx(3.0)
    assert w.bilaplacian(zero)[0] == pytest.approx(-15.0)
    assert w.d1_at_infinity == 1.0


def test_smoothed_abs_tends_to_abs():
    w = weight_smoothed_abs(3, 1e-6)
    r = np.array([0.5, 1.0, 7.0])
    assert np.allclose(w.eval(r), r, atol=1e-9)
    assert np.allclose(w.d1(r), 1.0, atol=1e-9)
    with pytest.raises(ValueError):
        weight_bracket(3, 0.0)


def test_step_is_smooth_and_monotone():
    x = np.linspace(-0.5, 1.5, 4001)
    d = step_derivatives(x, order=4)
    assert np.all(d[0][x <= 0] == 1.0) and np.all(d[0][x >= 1] == 0.0)
    assert np.all(np.diff(d[0]) <= 1e-15)
    h = x[1] - x[0]
    for m in range(1, 4):
        fd = np.gradient(d[m - 1], h)
        assert np.max(np.abs(fd - d[m])[5:-5]) < 1e-2 * max(1.0, np.max(np.abs(d[m])))


@pytest.mark.parametrize("k", [1, 2, 4])
def test_cutoff_family_primitives(k):
    fam = cutoff_family(k)
    edge = (k + 1) / k
    r = np.linspace(0, edge + 2, 3001)
    assert np.all(fam.h(r[r < 1]) == 1.0) and np.all(fam.h(r[r > edge]) == 0.0)
    h = r[1] - r[0]
    assert np.allclose(np.gradient(fam.H(r), h)[2:-2], fam.h(r)[2:-2], atol=2e-3 * k)
    assert np.allclose(np.gradient(fam.psi(r), h)[2:-2], fam.H(r)[2:-2], atol=1e-4)
    assert fam.H(np.array([edge + 5]))[0] == pytest.approx(fam.mass, rel=1e-12)
    assert 1.0 < fam.mass < edge


def test_cutoff_family_rejects_bad_index():
    for k in (0, 1.5, -2):
        with pytest.raises(ValueError):
            cutoff_family(k)


def test_rescaled_morawetz_weight():
    w = rescale_morawetz(cutoff_family(4), 10.0, 3)
    r = np.linspace(0.5, 30.0, 300)
    assert np.allclose(w.eval(r[r < 10]), r[r < 10] ** 2 / 20)
    assert np.allclose(w.laplacian(r[r < 10]), 3 / 10)
    assert np.allclose(w.laplacian(r), radial_laplacian_fd(w.eval, r, 3), atol=1e-4)
    assert np.allclose(w.bilaplacian(r), radial_laplacian_fd(w.laplacian, r, 3, 1e-3), atol=1e-3)
    assert w.d1(np.array([1e6]))[0] == pytest.approx(w.d1_at_infinity)


def test_rescaled_virial_weight():
    w = rescale_virial(cutoff_family(1), 10.0, 3)
    r = np.linspace(0.5, 30.0, 300)
    assert np.allclose(w.eval(r[r < 10]), 0.1)
    assert np.all(w.eval(r[r > 20]) == 0.0)
    assert np.allclose(w.laplacian(r), radial_laplacian_fd(w.eval, r, 3), atol=1e-5)
    with pytest.raises(ValueError):
        rescale_virial(cutoff_family(1), 0.0, 3)


@pytest.mark.parametrize("make", [lambda: weight_bracket(3), lambda: rescale_morawetz(cutoff_family(4), 10.0, 3),
                                  lambda: rescale_virial(cutoff_family(1), 10.0, 3)])
def test_audit_accepts_admissible_weights(make):
    w = make()
    bounds = audit_weight(w)
    assert bounds and all(math.isfinite(v) for v in bounds.values())
    assert w.bounds == bounds


def _power_weight(p):
    return RadialWeight(f"r^{p}", 3, "morawetz", lambda r: r ** p, lambda r: p * r ** (p - 1),
                        lambda r: p * (p - 1) * r ** (p - 2),
                        lambda r: p * (p + 1) * r ** (p - 2) + 0 * r,
                        lambda r: p * (p + 1) * (p - 2) * (p - 1) * r ** (p - 4) + 0 * r,
                        d1_at_infinity=math.inf)


def test_audit_rejects_quadratic_weight():
    with pytest.raises(HypothesisError):
        audit_weight(_power_weight(2.0))


def test_audit_rejects_unsmoothed_abs():
    # psi = |x|: psi' -> 1, but <r> Lap psi = 2 <r>/r is unbounded at the origin
    w = RadialWeight("abs", 3, "morawetz", lambda r: r, lambda r: np.ones_like(r),
                     lambda r: np.zeros_like(r), lambda r: 2 / r, lambda r: np.zeros_like(r),
                     d1_at_infinity=1.0)
    with np.errstate(divide="ignore"):
        with pytest.raises(HypothesisError, match="Lap psi"):
            audit_weight(w)


def test_audit_rejects_virial_weight_without_decay():
    w = RadialWeight("const", 3, "virial", lambda r: np.ones_like(r), lambda r: np.zeros_like(r),
                     lambda r: np.zeros_like(r), lambda r: np.zeros_like(r), lambda r: np.zeros_like(r),
                     d1_at_infinity=0.0)
    with pytest.raises(HypothesisError):
        audit_weight(w)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(3, 7), r=st.floats(0.05, 50.0), eps=st.floats(0.2, 5.0))
def test_bracket_bilaplacian_is_laplacian_of_laplacian(n, r, eps):
    w = weight_bracket(n, eps)
    h = 1e-3 * max(r, eps)
    x = np.array([r])
    fd = radial_laplacian_fd(w.laplacian, x, n, h)[0]
    assert fd == pytest.approx(w.bilaplacian(x)[0], rel=1e-3, abs=1e-6 / eps ** 3)


def _laplacian_fd4(f, r, n, h):
    d1 = (f(r - 2 * h) - 8 * f(r - h) + 8 * f(r + h) - f(r + 2 * h)) / (12 * h)
    d2 = (-f(r - 2 * h) + 16 * f(r - h) - 30 * f(r) + 16 * f(r + h) - f(r + 2 * h)) / (12 * h * h)
    return d2 + (n - 1) / r * d1


@pytest.mark.parametrize("n", [3, 4, 5])
def test_bracket_bilaplacian_within_1e6_of_fourth_order_differences(n):
    w = weight_bracket(n)
    r = np.linspace(0.5, 50.0, 500)
    assert np.max(np.abs(_laplacian_fd4(w.laplacian, r, n, 1e-3) - w.bilaplacian(r))) <= 1e-6


@pytest.mark.parametrize("k", [1, 2, 4])
def test_cutoff_primitives_match_fine_quadrature(k):
    fam = cutoff_family(k)
    x = np.linspace(0.0, 3.0, 300001)
    hv, Hv = fam.h(x), fam.H(x)
    H_ref = np.concatenate([[0.0], np.cumsum(0.5 * (hv[1:] + hv[:-1]) * np.diff(x))])
    psi_ref = np.concatenate([[0.0], np.cumsum(0.5 * (Hv[1:] + Hv[:-1]) * np.diff(x))])
    idx = np.arange(0, x.size, 997)
    assert np.max(np.abs(Hv[idx] - H_ref[idx])) <= 1e-8
    assert np.max(np.abs(fam.psi(x[idx]) - psi_ref[idx])) <= 1e-8
    assert np.allclose(fam.h(-x[idx]), fam.h(x[idx]))


def test_three_dimensional_bilaplacian_vanishes_beyond_the_transition():
    w = rescale_morawetz(cutoff_family(4), 10.0, 3)
    r = np.linspace(20.5, 100.0, 100)
    assert np.max(np.abs(w.bilaplacian(r))) <= 1e-12
    assert np.allclose(w.d2(np.linspace(0, 9.9, 50)), 1 / 10.0)
