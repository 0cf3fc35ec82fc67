"""Potential, heteroclinic profile, layer constructions, and the solver."""

import numpy as np
import pytest
import scipy.integrate

from aclab import (Grid, LayerSpec, ScalarField, SolverError, ZERO_FLUX,
                   build_layer_stack, build_radial_layer, constants,
                   double_well, double_well_prime, heteroclinic, make_state,
                   manufactured_forcing, solve_stationary)


# ---------------------------------------------------------------- potential

def test_double_well_values():
    assert double_well(0.0) == pytest.approx(0.5)
    assert double_well(1.0) == 0.0
    assert double_well(-1.0) == 0.0
    assert double_well_prime(1.0) == 0.0
    assert double_well_prime(-1.0) == 0.0
    assert double_well_prime(0.0) == 0.0


def test_inflection_of_w_prime():
    # W'' vanishes at 1/sqrt(3); checked by central difference of W'
    t0 = constants().t0
    d = 1e-5
    second = (double_well_prime(t0 + d) - double_well_prime(t0 - d)) / (2 * d)
    assert abs(second) <= 1e-8
    assert t0 == pytest.approx(1.0 / np.sqrt(3.0))


def test_heteroclinic_profile():
    q, dq = heteroclinic(0.0)
    assert q == 0.0 and dq == 1.0
    t = np.linspace(-20, 20, 1000)
    qs, dqs = heteroclinic(t)
    assert np.max(np.abs(dqs - np.sqrt(2.0 * double_well(qs)))) <= 1e-12


def test_heteroclinic_energy_by_quadrature():
    val, err = scipy.integrate.quad(lambda t: heteroclinic(t)[1] ** 2,
                                    -40, 40, limit=200)
    assert err < 1e-8
    assert abs(val - 4.0 / 3.0) <= 1e-8


def test_constants_against_antiderivative_oracles():
    c = constants()
    # sigma: int_{-1}^{1} (1-s^2) ds = [s - s^3/3]
    sigma_oracle = (1 - 1 / 3) - (-1 + 1 / 3)
    # alpha: int sech^4 = [tanh - tanh^3/3] over the line
    alpha_oracle = (1 - 1 / 3) - (-1 + 1 / 3)
    assert abs(c.sigma - sigma_oracle) <= 1e-8
    assert abs(c.alpha - alpha_oracle) <= 1e-8
    assert c.alpha == pytest.approx(c.sigma, abs=1e-8)


# ---------------------------------------------------------------- layers

def grid1d(n=641, half=1.0):
    return Grid(extent=(2 * half,), points=(n,), boundary=ZERO_FLUX,
                origin=(-half,))


def test_layer_spec_validation():
    with pytest.raises(ValueError, match="increasing"):
        LayerSpec(positions=(0.1, 0.1))
    spec = LayerSpec(positions=(-0.2, 0.0, 0.2))
    assert spec.orientations == (1, -1, 1)


def test_single_layer_shape():
    g = grid1d()
    eps = 0.05
    u = build_layer_stack(g, eps, LayerSpec(positions=(0.0,)))
    mid = g.points[0] // 2
    assert u.values[mid] == pytest.approx(0.0, abs=1e-12)
    assert u.values[0] == pytest.approx(-1.0, abs=1e-12)
    assert u.values[-1] == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("positions", [(-0.3, 0.0, 0.3), (-0.25, 0.25)])
def test_stack_sign_changes_and_bound(positions):
    g = grid1d()
    eps = 0.02
    u = build_layer_stack(g, eps, LayerSpec(positions=positions))
    signs = np.sign(u.values[np.abs(u.values) > 1e-9])
    changes = int(np.sum(np.abs(np.diff(signs)) > 0))
    assert changes == len(positions)
    assert np.max(np.abs(u.values)) <= 1.0 + 1e-9


def test_stack_overlap_and_margin_errors():
    g = grid1d()
    with pytest.raises(ValueError, match="overlap"):
        build_layer_stack(g, 0.05, LayerSpec(positions=(0.0, 0.1)))
    with pytest.raises(ValueError, match="margin"):
        build_layer_stack(g, 0.05, LayerSpec(positions=(0.9,)))


def test_two_layer_energy_matches_single_layer_quadrature():
    # 2-d stack: total energy ~ 2 alpha per unit cross length
    eps = 0.02
    g = Grid(extent=(1.0, 1.0), points=(401, 401), boundary=ZERO_FLUX,
             origin=(-0.5, -0.5))
    u = build_layer_stack(g, eps, LayerSpec(positions=(-0.1, 0.1), axis=1))
    from aclab import density_fields, integrate, Region
    st = make_state(u, manufactured_forcing(u, eps), eps)
    total = integrate(density_fields(st).mu, Region.whole())
    # oracle: per-layer 1-d energy by quadrature, decoupling error exp(-gap/eps)
    per_layer, _ = scipy.integrate.quad(
        lambda t: (1 - np.tanh(t / eps) ** 2) ** 2 / eps, -0.5, 0.5)
    oracle = 2.0 * per_layer * 1.0  # cross-sectional length 1
    assert abs(total - oracle) <= 0.01 * oracle


# ---------------------------------------------------------------- forcing

def test_manufactured_forcing_trivial_states():
    g = grid1d(129)
    for val in (1.0, 0.0):
        u = ScalarField(g, np.full(g.shape, val))
        f = manufactured_forcing(u, 0.1)
        assert np.max(np.abs(f.values)) == 0.0


def test_manufactured_forcing_circle_curvature(circle_state):
    # on the interface f ~ q'(0) * (1/R) = 2 for R = 0.5
    g = circle_state.grid
    i = int(round((0.5 - g.lo[0]) / g.h))
    j = int(round((0.0 - g.lo[1]) / g.h))
    assert circle_state.f.values[i, j] == pytest.approx(2.0, rel=0.10)
    assert circle_state.residual_norm == 0.0


def test_epsilon_floor_enforced():
    g = grid1d(64, half=0.5)
    u = ScalarField(g, np.zeros(g.shape))
    with pytest.raises(ValueError, match="eps >= 2h"):
        make_state(u, u, epsilon=g.h)


# ---------------------------------------------------------------- solver

def test_solver_recovers_manufactured_solution():
    eps = 0.1
    g = Grid(extent=(2.0, 2.0), points=(129, 129), boundary=ZERO_FLUX,
             origin=(-1.0, -1.0))
    u_star = build_radial_layer(g, eps, (0.0, 0.0), 0.5)
    f = manufactured_forcing(u_star, eps)
    rng = np.random.default_rng(11)
    init = ScalarField(g, u_star.values + 0.01 * rng.standard_normal(g.shape))
    st = solve_stationary(g, eps, f, init, tol=1e-10, max_iter=40)
    assert np.max(np.abs(st.u.values - u_star.values)) <= 1e-6
    assert st.residual_norm <= 1e-10


def test_solver_exact_init_is_a_fixed_point():
    eps = 0.1
    g = grid1d(129)
    u_star = build_layer_stack(g, eps, LayerSpec(positions=(0.0,)))
    f = manufactured_forcing(u_star, eps)
    st = solve_stationary(g, eps, f, u_star, tol=1e-10)
    assert np.array_equal(st.u.values, u_star.values)


def test_solver_flow_basin_from_uniform_guess():
    # du/dt = -W'(u)/eps sends u0 = 0.3 to +1, not to the unstable root 0
    g = Grid(extent=(1.0,), points=(32,), boundary=ZERO_FLUX)
    f = ScalarField(g, np.zeros(g.shape))
    st = solve_stationary(g, 0.1, f, ScalarField(g, np.full(g.shape, 0.3)),
                          tol=1e-8, max_iter=60)
    assert st.u.values == pytest.approx(1.0, abs=1e-6)


def test_solver_reports_failure_with_best_residual():
    g = Grid(extent=(1.0,), points=(32,), boundary=ZERO_FLUX)
    f = ScalarField(g, np.zeros(g.shape))
    with pytest.raises(SolverError) as info:
        solve_stationary(g, 0.1, f, ScalarField(g, np.full(g.shape, 0.3)),
                         tol=1e-14, max_iter=1)
    assert np.isfinite(info.value.best_residual)
    assert info.value.best_residual > 1e-14


def test_solver_deterministic():
    eps = 0.1
    g = Grid(extent=(2.0, 2.0), points=(65, 65), boundary=ZERO_FLUX,
             origin=(-1.0, -1.0))
    u_star = build_radial_layer(g, eps, (0.0, 0.0), 0.5)
    f = manufactured_forcing(u_star, eps)
    rng = np.random.default_rng(3)
    init = ScalarField(g, u_star.values + 0.01 * rng.standard_normal(g.shape))
    a = solve_stationary(g, eps, f, init, tol=1e-10)
    b = solve_stationary(g, eps, f, init, tol=1e-10)
    assert np.array_equal(a.u.values, b.u.values)
