import numpy as np
import pytest
import scipy.sparse as sp

from homothetic.errors import ConfigurationError
from homothetic.experiments import PointSourceSpec, dirichlet_family, fit_order, neumann_family, point_source_run
from homothetic.grid import build_interval_grid, build_radial_grid, build_square_grid
from homothetic.scale import (
    CircleSurface,
    CutoffProfile,
    PointSurface,
    SphereSurface,
    scale_field,
    scale_field_from_function,
)
from homothetic.solver import (
    GluedField,
    PenalizedProblem,
    assemble_operator,
    backward_error,
    classical_system,
    classify_layer,
    distributional_identity_check,
    dressing_split,
    glued_field,
    harmonic_extension,
    homothetic_operator,
    jump_diagnostics,
    solve,
)

ORIGIN = PointSurface(0.0)


def _grid(n=2002):
    return build_interval_grid(-1.0, 1.0, n)


def test_plain_linear_solution_exact():
    g = build_interval_grid(-1, 1, 100)  # even count keeps x = 0 off the nodes
    r = solve(PenalizedProblem(g, ORIGIN, "plain", far_field=(0.0, 1.0)))
    assert np.max(np.abs(r.phi - 0.5 * (g.nodes + 1))) < 1e-12
    assert abs(r.jump_value) < 1e-12 and abs(r.jump_flux) < 1e-10


def test_plain_2d_linear_solution_exact():
    g = build_square_grid(-1, 1, 42)
    f = lambda x, y: 2 * x - 3 * y + 1
    r = solve(PenalizedProblem(g, CircleSurface(0.5), "plain", far_field=f))
    assert np.max(np.abs(r.phi - f(*g.coords))) < 1e-11


def test_plain_tridiagonal_sign():
    A, _ = classical_system(build_interval_grid(-1, 1, 101), (0.0, 1.0))
    h = 0.02
    assert A[50, 50] == pytest.approx(-2 / h**2)
    assert A[50, 49] == pytest.approx(1 / h**2)
    assert A.nnz == 3 * 99 + 2


@pytest.mark.parametrize("mode", ["dirichlet", "neumann", "cauchy"])
def test_zero_strength_reduces_to_classical(mode):
    g = _grid(202)
    far = (0.0, 1.0)
    prob = PenalizedProblem(g, ORIGIN, mode, CutoffProfile(0.0, 0.1), g=0.3, h=0.5, far_field=far)
    sysm = assemble_operator(prob)
    A, b = classical_system(g, far)
    assert (sysm.A != A).nnz == 0
    np.testing.assert_array_equal(sysm.b, b)


def test_outer_zone_only_is_plain():
    g = build_interval_grid(-1, 1, 102)
    prob = PenalizedProblem(g, PointSurface(-0.999), "dirichlet", CutoffProfile(1.0, 1.0, 0.5),
                            g=0.3, far_field=(0.0, 1.0), check_resolution=False)
    # the whole tube straddles the left end so far-away rows stay classical
    sysm = assemble_operator(prob)
    A, _ = classical_system(g, (0.0, 1.0))
    far_rows = np.abs(g.nodes + 0.999) > 1.0
    assert (sysm.A[far_rows] != A[far_rows]).nnz == 0


def test_cauchy_inner_row_coefficients():
    # a = w = 1: drift 2/xi and zero potential in the inner zone
    g = _grid(4002)
    sf = scale_field(CutoffProfile(1.0, 0.1), 1.0, ORIGIN, g)
    k = int(np.argmin(np.abs(g.nodes - 0.02)))
    assert sf.drift[k] == pytest.approx(2 / sf.xi[k])
    assert sf.potential[k] == 0.0


def test_harmonic_extension_1d_is_linear():
    g = _grid(100)
    phi = harmonic_extension(ORIGIN, 1.0, 2.0, g)
    np.testing.assert_allclose(phi, 1 + 2 * g.nodes, atol=1e-15)


def test_harmonic_extension_interior_constant():
    grid = build_radial_grid(2.0, 41, r_min=0.45)
    phi = harmonic_extension(SphereSurface(1.0), 2.0, 0.0, grid)
    np.testing.assert_array_equal(phi, 2.0)


def test_harmonic_extension_coulomb():
    grid = build_radial_grid(2.0, 201, r_min=0.1)
    C, R = 1.5, 0.7
    phi = harmonic_extension(SphereSurface(R), C / R, -C / R**2, grid)
    np.testing.assert_allclose(phi, C / grid.nodes, rtol=1e-13)


def test_harmonic_extension_circle_is_discretely_harmonic():
    g = build_square_grid(-1, 1, 402)
    phi = harmonic_extension(CircleSurface(0.5), 1.0, 2.0, g).reshape(g.n, g.n)
    lap = (phi[1:-1, 2:] + phi[1:-1, :-2] + phi[2:, 1:-1] + phi[:-2, 1:-1] - 4 * phi[1:-1, 1:-1]) / g.h**2
    x, y = g.coords
    rho = np.hypot(x, y).reshape(g.n, g.n)[1:-1, 1:-1]
    band = np.abs(rho - 0.5) < 0.1
    assert np.max(np.abs(lap[band])) < 1e-3


def test_harmonic_extension_capped_outside_tube():
    g = _grid(400)
    phi = harmonic_extension(ORIGIN, 0.0, 1.0, g, tube=0.1)
    assert phi[-1] == phi[-2] == pytest.approx(0.1 + 2 * g.h)


def test_harmonic_extension_rejects_nonfinite():
    with pytest.raises(ConfigurationError):
        harmonic_extension(ORIGIN, np.nan, 0.0, _grid(10))


def test_dirichlet_traces_approach_g():
    fam = dirichlet_family()
    errs = [fam.record(solve(fam.build(eps)))["trace_error"] for eps in (0.05, 0.025, 0.0125)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[-1] < 1e-2


def test_dirichlet_single_layer():
    fam = dirichlet_family()
    r = solve(fam.build(0.0125))
    rep = jump_diagnostics(r)
    assert rep.classification == "single-layer"
    assert rep.jump_flux == pytest.approx(-0.4, rel=0.03)


def test_neumann_double_layer():
    fam = neumann_family()
    r = solve(fam.build(0.0125))
    rep = jump_diagnostics(r)
    assert rep.classification == "double-layer"
    assert rep.jump_value == pytest.approx(-2.0, rel=0.02)
    assert r.flux_interior == pytest.approx(1.0, abs=0.02)
    assert r.flux_exterior == pytest.approx(1.0, abs=0.02)


def test_consistent_cauchy_linear_is_exact():
    g = _grid(2002)
    r = solve(PenalizedProblem(g, ORIGIN, "cauchy", CutoffProfile(1.0, 0.05), g=1.0, h=2.0,
                               far_field=(-1.0, 3.0)))
    bulk = np.abs(g.nodes) > 0.05
    assert np.max(np.abs(r.phi - (1 + 2 * g.nodes))[bulk]) < 1e-9
    assert jump_diagnostics(r).classification == "removable"


@pytest.mark.parametrize("jv,jf,name", [
    (0.0, 0.0, "removable"), (0.0, 0.5, "single-layer"), (0.5, 0.0, "double-layer"),
    (0.5, -0.5, "combined"), (0.009, -0.009, "removable"),
])
def test_classify_layer(jv, jf, name):
    assert classify_layer(jv, jf) == name


def _bump(x, width=0.8):
    x = np.asarray(x, float)
    out = np.zeros_like(x)
    m = np.abs(x) < width
    out[m] = np.exp(1 - 1 / (1 - (x[m] / width) ** 2))
    return out


def _dbump(x, width=0.8):
    x = np.asarray(x, float)
    out = np.zeros_like(x)
    m = np.abs(x) < width
    t = x[m] / width
    out[m] = np.exp(1 - 1 / (1 - t**2)) * (-2 * t / (1 - t**2) ** 2) / width
    return out


def _plateau(x):
    return _bump(np.where(np.abs(x) < 0.2, 0.0, np.sign(x) * (np.abs(x) - 0.2)), 0.6)


def test_identity_exact_for_slope_jump_with_plateau():
    g = build_interval_grid(-1, 1, 200)
    fld = GluedField.from_functions(g, 0.013, lambda x: 0 * x, lambda x: 0.7 * (x - 0.013),
                                    lambda x: 0 * x, lambda x: 0.7 + 0 * x)
    zero = lambda x: 0 * np.asarray(x, float)
    assert distributional_identity_check(fld, _plateau, zero) < 1e-12


def test_identity_smooth_harmonic_zero():
    g = build_interval_grid(-1, 1, 200)
    lin = lambda x: 3 * x + 1
    fld = GluedField.from_functions(g, 0.01, lin, lin, lambda x: 3 + 0 * x, lambda x: 3 + 0 * x)
    assert fld.jump_value == 0 and fld.jump_flux == 0
    assert distributional_identity_check(fld, _bump, _dbump) < 1e-12


@pytest.mark.parametrize("case", ["value", "slope"])
def test_identity_residual_converges(case):
    psi = lambda x: (1 + x) * _bump(x)
    dpsi = lambda x: _bump(x) + (1 + x) * _dbump(x)
    hs, res = [], []
    for k in range(5):
        n = 40 * 2**k
        g = build_interval_grid(-1, 1, n + 1)
        x0 = -1 + (n // 2 + 0.25) * g.h  # fixed sub-cell offset
        if case == "value":
            fi, fo, di, do = (lambda x: 0 * x, lambda x: 1 + 0 * x, lambda x: 0 * x, lambda x: 0 * x)
        else:
            fi, fo, di, do = (lambda x: 0 * x, lambda x: x - x0, lambda x: 0 * x, lambda x: 1 + 0 * x)
        fld = GluedField.from_functions(g, x0, fi, fo, di, do)
        hs.append(g.h)
        res.append(distributional_identity_check(fld, psi, dpsi))
    assert fit_order(hs, res).order >= 1.0


def test_identity_on_penalized_solution():
    fam = dirichlet_family()
    r = solve(fam.build(0.0125))
    fld = glued_field(r)
    assert fld.jump_flux == pytest.approx(r.jump_flux)
    assert distributional_identity_check(r, _plateau, lambda x: 0 * x) < 1e-2


def test_dressing_split_rows_sum_to_zero():
    g = _grid(300)
    A, _ = classical_system(g, (0.0, 0.0))
    lam = np.sin(3 * g.nodes)
    drift, pot = dressing_split(A, lam, 0.8)
    np.testing.assert_allclose(np.asarray(drift.sum(axis=1)).ravel(), 0.0, atol=1e-6)
    F = np.exp(0.8 * lam)
    np.testing.assert_allclose(pot[1:-1], ((A @ F) / F)[1:-1], rtol=1e-10, atol=1e-6)


def test_consistent_operator_is_exact_conjugation():
    g = _grid(500)
    sf = scale_field_from_function(g, lambda x: np.cos(2 * x), lambda x: -2 * np.sin(2 * x),
                                   lambda x: -4 * np.cos(2 * x), 1.0)
    L = homothetic_operator(g, sf, potential_scheme="consistent")
    A, _ = classical_system(g, (0.0, 0.0))
    F = np.exp(sf.lam)
    u = np.random.default_rng(0).normal(size=g.n)
    ref = (A @ (F * u)) / F
    np.testing.assert_allclose((L @ u)[1:-1], ref[1:-1], rtol=1e-9, atol=1e-9 * np.max(np.abs(ref)))


def test_dressing_equivalence_second_order():
    lam = lambda x: 0.5 * np.sin(np.pi * x)
    errs, hs = [], []
    for n in (101, 201, 401, 801):
        g = build_interval_grid(-1, 1, n)
        sf = scale_field_from_function(g, lam, lambda x: 0.5 * np.pi * np.cos(np.pi * x),
                                       lambda x: -0.5 * np.pi**2 * np.sin(np.pi * x), 1.0)
        L = homothetic_operator(g, sf)
        b = np.zeros(n)
        b[0], b[-1] = 1.0, 2.0
        u = sp.linalg.spsolve(L.tocsc(), b)
        F = np.exp(lam(g.nodes))
        v = F * u
        res = np.max(np.abs(v[2:] - 2 * v[1:-1] + v[:-2])) / g.h**2
        errs.append(res)
        hs.append(g.h)
    assert fit_order(hs, errs).order > 1.8


def test_side_decoupling():
    fam = dirichlet_family()
    p = fam.build(0.00625)
    r1 = solve(p)
    r2 = solve(p.with_(far_field=(0.5, 1.0)))
    ext = p.grid.nodes > p.profile.eps
    change = np.max(np.abs(r1.phi[ext] - r2.phi[ext])) / np.max(np.abs(r1.phi[ext]))
    assert change < 1e-6


def test_maximum_principle_1d():
    fam = dirichlet_family()
    p = fam.build(0.00625).with_(far_field=(0.7, 1.0))
    phi = solve(p).phi
    inside = p.grid.nodes < -p.profile.eps
    assert np.ptp(phi[inside]) < 1e-8


def test_maximum_principle_hollow_sphere():
    res = point_source_run(PointSourceSpec())
    inside = res.r < 0.5 - 0.025
    assert np.ptp(res.phi[inside]) < 1e-8


def test_2d_hollow_circle_dirichlet():
    g = build_square_grid(-1, 1, 202)
    eps = 8 * g.h / 0.5
    far = lambda x, y: 1 + np.log(np.hypot(x, y) / 0.5)
    p = PenalizedProblem(g, CircleSurface(0.5), "dirichlet", CutoffProfile(0.75, eps, 0.5),
                         g=1.0, h=(0.0, 2.0), far_field=far)
    r = solve(p)
    x, y = g.coords
    rho = np.hypot(x, y)
    exact = np.where(rho > 0.5, 1 + np.log(rho / 0.5), 1.0)
    away = np.abs(rho - 0.5) > eps
    assert np.max(np.abs(r.phi - exact)[away]) < 5e-3
    assert r.angles.shape == (16,)
    assert np.mean(r.jump_flux) == pytest.approx(2.0, rel=0.1)
    assert jump_diagnostics(r).classification == "single-layer"


def test_2d_consistent_cauchy_removable():
    g = build_square_grid(-1, 1, 202)
    q = lambda x, y: x * x - y * y
    r = solve(PenalizedProblem(g, CircleSurface(0.5), "cauchy", CutoffProfile(1.0, 0.1, 0.5),
                               far_field=q, center=q))
    assert np.max(np.abs(r.phi - q(*g.coords))) < 1e-8
    assert jump_diagnostics(r).classification == "removable"


def test_residual_reported_small():
    r = solve(dirichlet_family().build(0.025))
    assert r.residual < 1e-10
    assert r.stats["n"] == r.problem.grid.n


def test_backward_error_zero_for_exact():
    A = sp.identity(4, format="csr")
    assert backward_error(A, np.ones(4), np.ones(4)) == 0.0
    assert backward_error(A, np.zeros(4), np.zeros(4)) == 0.0


def test_node_on_interface_rejected():
    g = build_interval_grid(-1, 1, 101)  # x = 0 is a node
    with pytest.raises(ConfigurationError, match="interface"):
        assemble_operator(PenalizedProblem(g, ORIGIN, "plain", far_field=(0.0, 1.0)))


def test_unresolved_layer_rejected():
    with pytest.raises(ConfigurationError, match="unresolved"):
        assemble_operator(PenalizedProblem(_grid(100), ORIGIN, "dirichlet", CutoffProfile(1.0, 0.05),
                                           far_field=(0.0, 1.0)))


def test_missing_far_field_rejected():
    with pytest.raises(ConfigurationError, match="far-field"):
        assemble_operator(PenalizedProblem(_grid(100), ORIGIN, "plain", far_field=(None, None)))


def test_neumann_compatibility_rejected():
    g = build_radial_grid(2.0, 2000)
    p = PenalizedProblem(g, SphereSurface(1.0), "neumann", CutoffProfile(1.5, 0.1), h=(0.5, 0.0),
                         far_field=(None, 0.0), gauge=0.0)
    with pytest.raises(ConfigurationError, match="compatibility"):
        assemble_operator(p)


def test_neumann_requires_gauge():
    g = build_radial_grid(2.0, 2000)
    p = PenalizedProblem(g, SphereSurface(1.0), "neumann", CutoffProfile(1.5, 0.1), h=(0.0, -1.0),
                         far_field=(None, 0.5))
    with pytest.raises(ConfigurationError, match="gauge"):
        assemble_operator(p)
    r = solve(p.with_(gauge=0.25))
    assert r.phi[0] == pytest.approx(0.25)
    assert r.flux_exterior == pytest.approx(-1.0, rel=0.05)


@pytest.mark.parametrize("kw", [dict(mode="robin"), dict(drift_scheme="upwind"),
                                dict(potential_scheme="exact"), dict(mode="dirichlet"),
                                dict(g=np.inf), dict(g=(1.0, 2.0, 3.0))])
def test_problem_validation(kw):
    base = dict(grid=_grid(100), surface=ORIGIN, mode="plain", far_field=(0.0, 1.0))
    base.update(kw)
    with pytest.raises(ConfigurationError):
        PenalizedProblem(**base)


def test_centered_drift_option_runs():
    p = neumann_family(a=0.4).build(0.025).with_(drift_scheme="centered")
    r = solve(p)
    assert np.isfinite(r.jump_value)
