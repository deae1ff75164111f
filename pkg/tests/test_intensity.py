"""Path-loss point process intensity against direct radial integration."""

import math

import numpy as np
import pytest
from scipy import integrate

from mmwcache.analytic.intensity import (
    intensity_density,
    intensity_inverse,
    intensity_measure,
    joint_pathloss_pdf,
    nth_pathloss_pdf,
)
from mmwcache.model import default_params, los_probability, path_loss


def radial_reference(x, params):
    """Quadrature over distance of the thinned two-state annulus density."""
    r_los = (x / params.kappa_los) ** (1.0 / params.alpha_los)
    r_nlos = (x / params.kappa_nlos) ** (1.0 / params.alpha_nlos)

    def integrand(r):
        p = los_probability(r, params.blockage)
        in_los = r > 0 and path_loss(r, params, True) < x
        in_nlos = r > 0 and path_loss(r, params, False) < x
        return 2.0 * math.pi * params.bs_density * r * (
            p * in_los + (1.0 - p) * in_nlos)

    val, _ = integrate.quad(integrand, 0.0, max(r_los, r_nlos),
                            points=sorted((r_los, r_nlos)), limit=300)
    return val


@pytest.mark.parametrize("blockage", [0.0, 1e-4, 0.01, 0.2])
def test_measure_matches_radial_quadrature(blockage):
    params = default_params(blockage=blockage)
    for x in (1e5, 1e7, 1e9, 1e11, 1e13):
        expected = radial_reference(x, params)
        got = float(intensity_measure(x, params))
        assert got == pytest.approx(expected, rel=1e-8), x


def test_measure_basic_properties():
    params = default_params()
    assert intensity_measure(0.0, params) == 0.0
    grid = np.geomspace(1e4, 1e14, 60)
    vals = intensity_measure(grid, params)
    assert np.all(np.diff(vals) > 0)
    with pytest.raises(ValueError):
        intensity_measure(-1.0, params)


def test_density_is_measure_derivative():
    params = default_params()
    for x in (1e6, 1e8, 1e10, 1e12):
        h = x * 1e-6
        numeric = (intensity_measure(x + h, params)
                   - intensity_measure(x - h, params)) / (2.0 * h)
        assert float(intensity_density(x, params)) == pytest.approx(
            numeric, rel=1e-7)


def test_density_integrates_back_to_measure():
    params = default_params()
    x = 1e10
    val, _ = integrate.quad(lambda t: intensity_density(t, params), 0.0, x,
                            limit=300)
    assert val == pytest.approx(intensity_measure(x, params), rel=1e-8)


def test_inverse_round_trip():
    params = default_params()
    xs = np.geomspace(1e5, 1e13, 25)
    us = intensity_measure(xs, params)
    back = intensity_inverse(us, params)
    np.testing.assert_allclose(back, xs, rtol=1e-9)
    assert intensity_inverse(0.0, params) == 0.0
    assert intensity_inverse(float(us[3]), params) == pytest.approx(
        xs[3], rel=1e-9)


def _mass_knots(params, levels=(0.05, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 25.0)):
    """Path-loss breakpoints where the order statistics carry their mass."""
    return [float(intensity_inverse(u, params)) for u in levels]


def test_nth_pdf_normalizes():
    params = default_params()
    upper = float(intensity_inverse(60.0, params))
    knots = _mass_knots(params)
    for n in (1, 2, 3):
        mass, _ = integrate.quad(lambda x: nth_pathloss_pdf(x, n, params),
                                 0.0, upper, points=knots, limit=400)
        assert mass == pytest.approx(1.0, abs=1e-6), n
    with pytest.raises(ValueError):
        nth_pathloss_pdf(1e8, 0, params)


def test_nth_pdf_means_increase_with_order():
    # deeper order statistics sit at larger losses
    params = default_params()
    upper = float(intensity_inverse(60.0, params))
    knots = _mass_knots(params)
    means = []
    for n in (1, 2, 3):
        m, _ = integrate.quad(lambda x: x * nth_pathloss_pdf(x, n, params),
                              0.0, upper, points=knots, limit=400)
        means.append(m)
    assert means[0] < means[1] < means[2]


def test_joint_pdf_reduces_to_marginal():
    # integrating the two-point joint density over the second coordinate
    # recovers the first-order marginal
    params = default_params()
    x1 = float(intensity_inverse(1.0, params))
    upper = float(intensity_inverse(40.0, params))
    knots = [k for k in _mass_knots(params) if x1 < k < upper]
    marginal, _ = integrate.quad(
        lambda x2: joint_pathloss_pdf(np.array([x1, x2]), params),
        x1, upper, points=knots, limit=400, epsabs=0.0, epsrel=1e-10)
    assert marginal == pytest.approx(nth_pathloss_pdf(x1, 1, params), rel=1e-6)
    with pytest.raises(ValueError):
        joint_pathloss_pdf(np.array([2.0, 1.0]), params)


def test_zero_blockage_is_pure_los_law():
    params = default_params(blockage=0.0)
    for x in (1e6, 1e9):
        expected = math.pi * params.bs_density * (
            x / params.kappa_los) ** (2.0 / params.alpha_los)
        assert intensity_measure(x, params) == pytest.approx(expected, rel=1e-12)
