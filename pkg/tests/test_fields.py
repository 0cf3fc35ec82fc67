"""Grid, stencil, quadrature, and interpolation primitives."""

import numpy as np
import pytest

from aclab import (Grid, PERIODIC, Region, RegionError, ScalarField,
                   ZERO_FLUX, boundary_profile, cumulative_ball_profile,
                   gradient, integrate, laplacian, line_sample)
from aclab.fields import disc_integral, plane_slice_integral, restrict_to_plane


def grid2d(n=65, boundary=ZERO_FLUX):
    return Grid(extent=(2.0, 2.0), points=(n, n), boundary=boundary,
                origin=(-1.0, -1.0))


# ---------------------------------------------------------------- grid

def test_spacing_conventions():
    gz = Grid(extent=(1.0,), points=(11,), boundary=ZERO_FLUX)
    assert gz.h == pytest.approx(0.1)
    gp = Grid(extent=(1.0,), points=(10,), boundary=PERIODIC)
    assert gp.h == pytest.approx(0.1)


def test_grid_rejects_anisotropy_and_small_axes():
    with pytest.raises(ValueError, match="anisotropic"):
        Grid(extent=(1.0, 2.0), points=(11, 11))
    with pytest.raises(ValueError, match="at least 8"):
        Grid(extent=(1.0,), points=(4,))
    with pytest.raises(ValueError):
        Grid(extent=(1.0, 1.0, 1.0, 1.0), points=(9, 9, 9, 9))


def test_field_validation():
    g = grid2d(9)
    with pytest.raises(ValueError, match="shape"):
        ScalarField(g, np.zeros((3, 3)))
    bad = np.zeros(g.shape)
    bad[0, 0] = np.inf
    with pytest.raises(ValueError, match="finite"):
        ScalarField(g, bad)
    frozen = ScalarField(g, np.zeros(g.shape))
    with pytest.raises(ValueError):
        frozen.values[0, 0] = 1.0


# ---------------------------------------------------------------- stencils

def test_gradient_of_constant_is_zero():
    g = grid2d()
    gr = gradient(ScalarField(g, np.full(g.shape, 3.7)))
    assert np.max(np.abs(gr.values)) == 0.0


def test_gradient_exact_on_linear_zero_flux():
    g = grid2d()
    x = g.meshgrid()[0]
    gr = gradient(ScalarField(g, x)).values
    interior = (slice(1, -1), slice(1, -1))
    assert gr[0][interior] == pytest.approx(1.0, abs=1e-13)
    assert np.max(np.abs(gr[1])) < 1e-13


def test_gradient_second_order_periodic():
    errs = []
    for n in (64, 128):
        g = Grid(extent=(1.0, 1.0), points=(n, n), boundary=PERIODIC)
        x = g.meshgrid()[0]
        gr = gradient(ScalarField(g, np.sin(2 * np.pi * x))).values
        errs.append(np.max(np.abs(gr[0] - 2 * np.pi * np.cos(2 * np.pi * x))))
    assert errs[0] / errs[1] >= 3.5


def test_laplacian_constant_and_quadratic():
    g = grid2d()
    assert np.max(np.abs(laplacian(
        ScalarField(g, np.full(g.shape, 2.0))).values)) == 0.0
    x, y = g.meshgrid()
    lap = laplacian(ScalarField(g, x ** 2 + y ** 2)).values
    interior = (slice(1, -1), slice(1, -1))
    assert lap[interior] == pytest.approx(2.0 * g.ndim, abs=1e-10)


def test_laplacian_second_order_periodic():
    errs = []
    for n in (64, 128):
        g = Grid(extent=(1.0,), points=(n,), boundary=PERIODIC)
        x = g.axis_coords(0)
        lap = laplacian(ScalarField(g, np.sin(2 * np.pi * x))).values
        errs.append(np.max(np.abs(lap + 4 * np.pi ** 2 * np.sin(2 * np.pi * x))))
    order = np.log2(errs[0] / errs[1])
    assert order >= 1.9


# ---------------------------------------------------------------- integrate

def test_ball_area():
    g = Grid(extent=(2.0, 2.0), points=(129, 129), boundary=ZERO_FLUX,
             origin=(-1.0, -1.0))
    one = ScalarField(g, np.ones(g.shape))
    r = 32 * g.h
    area = integrate(one, Region.ball((0.0, 0.0), r), supersample=4)
    assert abs(area - np.pi * r * r) <= 0.005 * np.pi * r * r


def test_ball_margin_violation_names_margin():
    g = grid2d(65)
    one = ScalarField(g, np.ones(g.shape))
    with pytest.raises(RegionError, match="2h domain margin"):
        integrate(one, Region.ball((0.0, 0.0), 0.999))


def test_quadratic_over_ball():
    g = Grid(extent=(2.0, 2.0), points=(161, 161), boundary=ZERO_FLUX,
             origin=(-1.0, -1.0))
    x, y = g.meshgrid()
    f = ScalarField(g, x ** 2 + y ** 2)
    r = 0.4
    val = integrate(f, Region.ball((0.0, 0.0), r), supersample=4)
    exact = np.pi * r ** 4 / 2.0
    assert abs(val - exact) <= 0.01 * exact


def test_integrate_linearity():
    g = grid2d(33)
    rng = np.random.default_rng(3)
    a = rng.standard_normal(g.shape)
    b = rng.standard_normal(g.shape)
    reg = Region.ball((0.1, -0.2), 0.4)
    for region in (Region.whole(), reg):
        lhs = integrate(ScalarField(g, a + b), region)
        rhs = integrate(ScalarField(g, a), region) + integrate(
            ScalarField(g, b), region)
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-14)


def test_ball_quadrature_converges_in_supersample_and_h():
    r = 0.37
    exact = np.pi * r * r
    errs_s = []
    g = Grid(extent=(2.0, 2.0), points=(65, 65), boundary=ZERO_FLUX,
             origin=(-1.0, -1.0))
    one = ScalarField(g, np.ones(g.shape))
    for s in (1, 2, 4, 8):
        errs_s.append(abs(integrate(one, Region.ball((0, 0), r), s) - exact))
    assert errs_s[-1] < errs_s[0]
    errs_h = []
    for n in (65, 129, 257):
        gh = Grid(extent=(2.0, 2.0), points=(n, n), boundary=ZERO_FLUX,
                  origin=(-1.0, -1.0))
        errs_h.append(abs(integrate(ScalarField(gh, np.ones(gh.shape)),
                                    Region.ball((0, 0), r), 2) - exact))
    assert errs_h[2] < errs_h[0]


def test_line_region_not_integrable():
    g = grid2d(33)
    one = ScalarField(g, np.ones(g.shape))
    with pytest.raises(RegionError, match="line_sample"):
        integrate(one, Region.line((0.0, 0.0), (1.0, 0.0)))


def test_slab_ball_region():
    g = Grid(extent=(2.0, 2.0), points=(161, 161), boundary=ZERO_FLUX,
             origin=(-1.0, -1.0))
    one = ScalarField(g, np.ones(g.shape))
    r = 0.4
    # half-disc: slab covering y <= 0 exactly through the center
    half = integrate(one, Region.slab_ball((0.0, 0.0), r, -1.0, 0.0), 4)
    assert abs(half - np.pi * r * r / 2) <= 0.005 * np.pi * r * r
    with pytest.raises(RegionError, match="degenerate"):
        Region.slab_ball((0.0, 0.0), r, 0.2, 0.2)


# ---------------------------------------------------------------- profiles

def test_cumulative_profile_monotone_for_nonnegative():
    g = grid2d(65)
    rng = np.random.default_rng(1)
    f = ScalarField(g, np.abs(rng.standard_normal(g.shape)))
    prof = cumulative_ball_profile(f, (0.0, 0.0), np.linspace(0.1, 0.5, 9))
    assert np.all(np.diff(prof[:, 1]) >= 0)


def test_cumulative_profile_zero_field():
    g = grid2d(65)
    prof = cumulative_ball_profile(ScalarField(g, np.zeros(g.shape)),
                                   (0.0, 0.0), [0.1, 0.2, 0.3])
    assert np.all(prof[:, 1] == 0.0)


def test_cumulative_profile_areas():
    g = Grid(extent=(2.0, 2.0), points=(257, 257), boundary=ZERO_FLUX,
             origin=(-1.0, -1.0))
    prof = cumulative_ball_profile(ScalarField(g, np.ones(g.shape)),
                                   (0.0, 0.0), [0.1, 0.2])
    for r, v in prof:
        assert abs(v - np.pi * r * r) <= 0.01 * np.pi * r * r


def test_boundary_profile_matches_sphere_area():
    g = Grid(extent=(2.0, 2.0), points=(257, 257), boundary=ZERO_FLUX,
             origin=(-1.0, -1.0))
    radii = np.linspace(8 * g.h, 0.5, 17)
    prof = cumulative_ball_profile(ScalarField(g, np.ones(g.shape)),
                                   (0.0, 0.0), radii, supersample=4)
    deriv = boundary_profile(prof)
    rel = np.abs(deriv[:, 1] - 2 * np.pi * deriv[:, 0]) / (2 * np.pi * deriv[:, 0])
    assert np.max(rel) <= 0.02


def test_boundary_profile_needs_three_radii():
    with pytest.raises(ValueError, match="3 radii"):
        boundary_profile(np.array([[0.1, 1.0], [0.2, 2.0]]))


def test_boundary_profile_zero():
    prof = np.column_stack([np.linspace(0.1, 0.3, 5), np.zeros(5)])
    assert np.all(boundary_profile(prof)[:, 1] == 0.0)


# ---------------------------------------------------------------- lines/planes

def test_line_sample_constant_and_linear():
    g = grid2d(65)
    const = line_sample(ScalarField(g, np.full(g.shape, 2.5)),
                        (0.0, 0.0), (1.0, 1.0), 21, -0.5, 0.5)
    assert const[:, 1] == pytest.approx(2.5, abs=1e-14)
    x = g.meshgrid()[0]
    lin = line_sample(ScalarField(g, x), (0.0, 0.0), (1.0, 0.0), 21, -0.5, 0.5)
    assert lin[:, 1] == pytest.approx(lin[:, 0], abs=1e-13)


def test_line_sample_tanh_layer():
    # off-node base and samples, so multilinear interpolation is exercised;
    # the (h/2)^2 max|q''|/(2 eps^2) interpolation bound needs h <= eps/12
    # to sit under 1e-3
    eps = 0.05
    h = eps / 12
    n = int(round(2.0 / h)) + 1
    g = Grid(extent=(2.0, 2.0), points=(n, n), boundary=ZERO_FLUX,
             origin=(-1.0, -1.0))
    x, y = g.meshgrid()
    f = ScalarField(g, np.tanh(y / eps))
    base = (0.1234567, 0.0003)
    ls = line_sample(f, base, (0.0, 1.0), 977, -0.5, 0.4993)
    err = np.max(np.abs(ls[:, 1] - np.tanh((ls[:, 0] + base[1]) / eps)))
    assert err <= 1e-3


def test_line_sample_rejects_exit():
    g = grid2d(65)
    with pytest.raises(RegionError, match="outside"):
        line_sample(ScalarField(g, np.zeros(g.shape)),
                    (0.0, 0.0), (1.0, 0.0), 11, 0.0, 2.0)


def test_plane_restriction_and_disc():
    g = Grid(extent=(2.0, 2.0), points=(129, 129), boundary=ZERO_FLUX,
             origin=(-1.0, -1.0))
    x, y = g.meshgrid()
    f = ScalarField(g, y)
    plane = restrict_to_plane(f, 0.3)
    assert plane == pytest.approx(0.3, abs=1e-12)
    val = disc_integral(g, plane, (0.0,), 0.4)
    assert val == pytest.approx(0.3 * 0.8, rel=1e-2)
    whole = plane_slice_integral(ScalarField(g, np.ones(g.shape)), 0.25)
    assert whole == pytest.approx(2.0, rel=1e-12)
