import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from homothetic.errors import ConfigurationError
from homothetic.grid import build_interval_grid, build_radial_grid, build_square_grid
from homothetic.scale import (
    CircleSurface,
    CutoffProfile,
    PointSurface,
    SphereSurface,
    branch_vanishing_orders,
    distance_field,
    epsilon_sequence,
    indicial_residual,
    indicial_roots,
    lambda_coefficients,
    profile_eval,
    scale_field,
)

P = CutoffProfile(a=1.0, eps=0.1, eta=0.5)


def test_profile_inner_zone():
    assert profile_eval(P, 0.03) == (0.03, 1.0, 0.0)


def test_profile_outer_zone():
    assert profile_eval(P, 0.2) == (1.0, 0.0, 0.0)


@pytest.mark.parametrize("blend", ["smooth", "quintic"])
def test_profile_blend_zone(blend):
    p = CutoffProfile(1.0, 0.1, 0.5, blend)
    f, fp, fpp = profile_eval(p, 0.07)
    assert 0.05 < f < 1 and fp >= 0
    assert abs(profile_eval(p, 0.05 + 1e-13)[0] - 0.05) < 1e-12


@pytest.mark.parametrize("blend", ["smooth", "quintic"])
def test_profile_seams_continuous(blend):
    p = CutoffProfile(0.7, 0.1, 0.5, blend)
    for seam in (0.05, 0.1):
        lo = np.array(profile_eval(p, seam * (1 - 1e-11)))
        hi = np.array(profile_eval(p, seam * (1 + 1e-11)))
        # f'' of the quintic changes at rate ~1/L^2 so allow for the offset
        assert np.max(np.abs(hi - lo)) < 1e-10 * max(1.0, 1 / (0.05) ** 3)


@pytest.mark.parametrize("blend", ["smooth", "quintic"])
def test_profile_monotone_positive(blend):
    p = CutoffProfile(1.0, 0.3, 0.2, blend)
    xi = np.linspace(1e-6, 0.5, 5001)
    f, fp, _ = profile_eval(p, xi)
    assert np.all(f > 0) and np.all(f <= 1) and np.all(fp >= 0)
    assert np.all(np.diff(f) >= -1e-15)


def test_profile_derivatives_match_finite_differences():
    xi = np.linspace(0.051, 0.099, 9)
    f, fp, fpp = profile_eval(P, xi)
    d = 1e-6
    fpl, _, _ = profile_eval(P, xi + d)
    fmi, _, _ = profile_eval(P, xi - d)
    np.testing.assert_allclose(fp, (fpl - fmi) / (2 * d), rtol=1e-6, atol=1e-6)
    np.testing.assert_allclose(fpp, (fpl - 2 * f + fmi) / d**2, rtol=1e-3, atol=1e-2)


@pytest.mark.parametrize("kw", [dict(eps=0.0), dict(eps=-1.0), dict(eta=0.0), dict(eta=1.0), dict(eta=1.5),
                                dict(blend="cubic")])
def test_profile_rejects_bad_parameters(kw):
    base = dict(a=1.0, eps=0.1, eta=0.5)
    base.update(kw)
    with pytest.raises(ConfigurationError):
        CutoffProfile(**base)


def test_profile_rejects_negative_xi():
    with pytest.raises(ConfigurationError):
        profile_eval(P, -0.01)


def test_coefficients_outer_zone_exact_zero():
    assert lambda_coefficients(CutoffProfile(1.7, 0.1), 1.3, 0.2) == (0.0, 0.0, 0.0)


def test_coefficients_inner_a1():
    lam, drift, pot = lambda_coefficients(CutoffProfile(1.0, 0.1), 1.0, 0.01)
    assert lam == pytest.approx(math.log(0.01))
    assert drift == pytest.approx(200.0)
    assert pot == 0.0


def test_coefficients_inner_a2():
    _, _, pot = lambda_coefficients(CutoffProfile(2.0, 0.3, 0.5), 1.0, 0.1)
    assert pot == pytest.approx(200.0)


def test_coefficients_reduce_to_log_f_at_a_w_one():
    # at a = w = 1: grad(lambda) = f'/f and potential = f''/f
    xi = np.linspace(0.001, 0.2, 400)
    f, fp, fpp = profile_eval(P, xi)
    _, drift, pot = lambda_coefficients(P, 1.0, xi)
    np.testing.assert_allclose(drift, 2 * fp / f, rtol=1e-14)
    np.testing.assert_allclose(pot, fpp / f, rtol=1e-12, atol=1e-12)


def test_coefficients_match_chain_rule_numerically():
    p = CutoffProfile(1.3, 0.1, 0.5)
    w = 0.7
    xi = np.linspace(0.052, 0.098, 7)
    d = 1e-5
    lam = lambda x: lambda_coefficients(p, w, x)[0]
    l0, drift, pot = lambda_coefficients(p, w, xi)
    g = (lam(xi + d) - lam(xi - d)) / (2 * d)
    lap = (lam(xi + d) - 2 * l0 + lam(xi - d)) / d**2
    np.testing.assert_allclose(drift, 2 * w * g, rtol=1e-5, atol=1e-4)
    np.testing.assert_allclose(pot, w * lap + w * w * g * g, rtol=1e-4, atol=1e-2)


def test_zero_twist_reduction():
    g = build_interval_grid(-1, 1, 200)
    sf = scale_field(CutoffProfile(0.0, 0.1), 1.0, PointSurface(0.0), g)
    for arr in (sf.lam, sf.drift, sf.potential):
        assert np.all(arr == 0.0)


def test_support_outside_tube_is_exact_zero():
    g = build_interval_grid(-1, 1, 1000)
    sf = scale_field(CutoffProfile(1.5, 0.1), 2.0, PointSurface(0.0), g)
    out = np.abs(g.nodes) >= 0.1
    for arr in (sf.lam, sf.drift, sf.potential):
        assert np.all(arr[out] == 0.0)


@pytest.mark.parametrize("a,w", [(1.0, 1.0), (0.5, 2.0), (-1.5, 1.0), (2.0, 0.3)])
def test_fuchsian_asymptotics(a, w):
    p = CutoffProfile(a, 0.1, 0.5)
    xi = 1e-3 * p.eps
    _, drift, pot = lambda_coefficients(p, w, xi)
    assert xi * drift == pytest.approx(2 * w * a, rel=1e-8)
    target = w * w * a * a - w * a
    assert xi * xi * pot == pytest.approx(target, rel=1e-8, abs=1e-12)


def test_distance_1d():
    d = distance_field(PointSurface(0.0), build_interval_grid(-0.3, 1.0, 14))
    assert d.xi[0] == pytest.approx(0.3) and d.side[0] == -1


def test_distance_radial():
    g = build_radial_grid(1.0, 11, r_min=0.0 + 0.1)
    d = distance_field(SphereSurface(0.5), g)
    r = g.nodes
    np.testing.assert_allclose(d.xi, np.abs(r - 0.5), atol=1e-15)
    out = r > 0.5
    assert np.all(d.side[out] == 1) and np.all(d.side[~out] == -1)
    np.testing.assert_allclose(d.lap_xi, d.side * 2 / r)


def test_distance_circle_on_surface():
    g = build_square_grid(-2, 2, 21)  # h = 0.2, so (0.6, 0.8) is a node
    d = distance_field(CircleSurface(1.0), g)
    x, y = g.coords
    k = int(np.argmin(np.hypot(x - 0.6, y - 0.8)))
    assert d.xi[k] < 1e-12 and d.side[k] == 0


@pytest.mark.parametrize("surface,grid", [
    (PointSurface(2.0), build_interval_grid(-1, 1, 10)),
    (SphereSurface(3.0), build_radial_grid(2.0, 10)),
    (CircleSurface(2.0), build_square_grid(-2, 2, 10)),
    (SphereSurface(0.5), build_interval_grid(-1, 1, 10)),
])
def test_distance_rejects_incompatible(surface, grid):
    with pytest.raises(ConfigurationError):
        distance_field(surface, grid)


def test_scale_field_clamps_at_half_spacing():
    g = build_interval_grid(-1, 1, 10)
    sf = scale_field(CutoffProfile(1.0, 0.5, 0.5), 1.0, PointSurface(-1 + 4 * g.h), g)
    assert np.min(sf.xi) == pytest.approx(0.5 * g.h)
    assert np.all(np.isfinite(sf.potential))


@pytest.mark.parametrize("a,roots", [(1.0, (-1.0, 0.0)), (0.0, (0.0, 1.0)), (-2.0, (2.0, 3.0))])
def test_indicial_roots(a, roots):
    assert indicial_roots(a) == roots


@settings(max_examples=200, deadline=None)
@given(st.floats(-3, 3))
def test_indicial_consistency(a):
    for m in indicial_roots(a):
        assert abs(indicial_residual(a, m)) < 1e-12


@pytest.mark.parametrize("a,orders", [(-0.5, (0, 1)), (0.5, (-1, 0)), (-2.5, (2, 3)), (-2.0, (1, 2)),
                                      (1.0, (-1, -1)), (0.0, (-1, 0)), (-1.0, (0, 1))])
def test_branch_vanishing_orders(a, orders):
    assert branch_vanishing_orders(a) == orders


@pytest.mark.parametrize("m", [0.5, 1.5, 2.5, 3.5, 2.0, 3.0])
def test_vanishing_orders_match_derivative_count(m):
    # x^m: the k-th derivative is c_k x^(m-k); count how many stay zero at 0+
    k, c = -1, 1.0
    while k < 6:
        expo = m - (k + 1)
        coef = c
        if coef != 0 and expo <= 0:
            break
        c *= m - (k + 1)
        k += 1
        if c == 0:
            break
    assert branch_vanishing_orders(1 - m)[1] == k


def test_epsilon_sequence():
    np.testing.assert_allclose(epsilon_sequence(0.1, 4), [0.1, 0.05, 0.025, 0.0125])
    with pytest.raises(ConfigurationError):
        epsilon_sequence(0.1, 0)
