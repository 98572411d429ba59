import math

import numpy as np
import pytest

from nlw_morawetz.functionals import energy
from nlw_morawetz.initial_data import (Verdict, bump, compact_bump, critical_exponent,
                                       gaussian_bump, ground_state_data, ground_state_tails,
                                       ground_state_W, hdot1_rescale, kenig_merle_check,
                                       pohozaev_defect)
from nlw_morawetz.radial_grid import make_grid


def test_critical_exponent():
    assert critical_exponent(3) == 6.0
    assert critical_exponent(4) == 4.0
    assert critical_exponent(5) == pytest.approx(10 / 3)


def test_gaussian_energy_matches_closed_form(grid3):
    # int_{R^3} |grad(A e^{-r^2/w^2})|^2 = (3 / (2 sqrt 2)) pi^(3/2) A^2 w
    a, w = 0.5, 2.0
    data = gaussian_bump(a, w, "displacement", grid3)
    exact = 3 / (2 * math.sqrt(2)) * math.pi ** 1.5 * a * a * w
    assert energy(data.state(), 0.0, grid3).total == pytest.approx(exact, rel=1e-10)
    vel = gaussian_bump(a, w, "velocity", grid3)
    # int A^2 e^{-2 r^2/w^2} = A^2 (pi w^2 / 2)^(3/2)
    assert energy(vel.state(), 0.0, grid3).kinetic == pytest.approx(a * a * (math.pi * w * w / 2) ** 1.5,
                                                                    rel=1e-10)


def test_compact_bump_support_and_smoothness(grid3):
    data = compact_bump(2.0, "displacement", grid3)
    assert data.support_radius == 2.0
    assert np.all(data.f[grid3.r >= 2.0] == 0.0)
    assert data.f[0] == pytest.approx(1.0)
    assert np.all(data.g == 0.0)
    assert bump(np.array([0.999]))[0] < 1e-200
    with pytest.raises(ValueError):
        compact_bump(20.0, "displacement", grid3)
    with pytest.raises(ValueError):
        compact_bump(1.0, "sideways", grid3)


def test_ground_state_solves_static_equation():
    g = make_grid(3, 0.01, 20.0)
    w = ground_state_W(g)
    r, h = g.r[1:-1], g.dr
    lap = (w[2:] - 2 * w[1:-1] + w[:-2]) / h ** 2 + 2 / r * (w[2:] - w[:-2]) / (2 * h)
    assert np.max(np.abs(-lap - w[1:-1] ** 5)) < 1e-4
    assert w[0] == 1.0


@pytest.mark.parametrize("n", [3, 4, 5])
def test_pohozaev_identity_with_tails(n):
    g = make_grid(n, 0.02, 150.0)
    assert pohozaev_defect(g) <= 1e-2


def test_ground_state_tails_are_small_and_positive():
    g = make_grid(3, 0.02, 150.0)
    grad, pot = ground_state_tails(g)
    assert 0 < pot < grad < 1.0


def test_hdot1_rescale_preserves_energy(grid3):
    data = gaussian_bump(1.0, 1.0, "displacement", grid3)
    e0 = energy(data.state(), 0.0, grid3).total
    for eps in (0.5, 0.25):
        e = energy(hdot1_rescale(data, eps).state(), 0.0, grid3).total
        assert e == pytest.approx(e0, rel=1e-8)


def test_time_reversal_and_scaling(grid3):
    data = gaussian_bump(1.0, 1.0, "velocity", grid3)
    rev = data.time_reversed()
    assert np.all(rev.g == -data.g)
    assert rev.profile.g(np.array([0.0]))[0] == -1.0
    half = data.scaled(0.5)
    assert np.allclose(half.g, 0.5 * data.g)
    assert half.params["alpha"] == 0.5


def test_threshold_verdicts():
    g = make_grid(3, 0.02, 150.0)
    assert kenig_merle_check(ground_state_data(g, 0.9)).verdict == Verdict.SUBTHRESHOLD_GLOBAL
    assert kenig_merle_check(ground_state_data(g, 1.1)).verdict == Verdict.SUPERTHRESHOLD_BLOWUP
    rep = kenig_merle_check(ground_state_data(g, 1.0))
    assert rep.verdict == Verdict.INDETERMINATE
    assert rep.grad_W_tail > 0
