"""Energy and discrepancy densities, tilt excess, the L^q0 diffuse
mean-curvature norm, scalar norm reports, and the stress-energy first
variation identity.

Density conventions (all per unit volume):

    mu   = eps*|grad u|^2/2 + W(u)/eps     energy density
    xi   = eps*|grad u|^2/2 - W(u)/eps     discrepancy density
    tilt = eps*|grad u|^2 * sqrt(1 - nu_e^2)

The unit normal nu = grad u/|grad u| is only used where the gradient is
above a threshold; every nu-dependent integrand carries an eps*|grad u|^2
or |grad u| factor, so setting it to zero on the discrete critical set is
measure-correct.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import Region, ScalarField, VectorField, gradient, integrate
from .phasefield import PhaseFieldState, double_well


@dataclass(frozen=True)
class AnalysisParams:
    """Tunable exponents and thresholds shared by the measure diagnostics.

    q0 defaults to the ambient dimension n+1, which satisfies the q0 > n
    requirement in every supported dimension.
    """

    q0: float = None
    grad_threshold: float = 1e-8
    supersample: int = 4
    tau: float = 0.1

    def __post_init__(self):
        if not 0 < self.tau < 1:
            raise ValueError("tau must lie in (0, 1)")
        if self.grad_threshold < 0:
            raise ValueError("grad_threshold must be nonnegative")
        if self.supersample < 1:
            raise ValueError("supersample must be >= 1")

    def resolve_q0(self, ndim: int) -> float:
        q0 = float(self.q0) if self.q0 is not None else float(ndim)
        if not q0 > ndim - 1:
            raise ValueError(f"q0={q0} must exceed n={ndim - 1}")
        return q0


@dataclass(frozen=True)
class DensityFields:
    """Pointwise densities derived from one state (tilt is per axis)."""

    mu: ScalarField
    xi: ScalarField
    xi_plus: ScalarField
    tilt_e: ScalarField
    grad_mag: ScalarField
    axis: int


@dataclass(frozen=True)
class NormReport:
    """Scalar diagnostics for the three compactness conditions plus the
    gradient sup bound and bookkeeping masses."""

    total_energy: float
    sup_u: float
    lambda_hat: float
    sup_eps_grad: float
    xi_plus_mass: float
    xi_abs_mass: float
    f_l2_over_eps: float
    excluded_mass_fraction: float


def density_fields(state: PhaseFieldState, axis: int = -1) -> DensityFields:
    """Evaluate mu, xi, xi_plus, the tilt integrand for one axis, and |grad u|."""
    g = state.grid
    axis = axis % g.ndim
    eps = state.epsilon
    grad = gradient(state.u).values
    grad_sq = np.sum(grad * grad, axis=0)
    w = double_well(state.u.values)
    mu = 0.5 * eps * grad_sq + w / eps
    xi = 0.5 * eps * grad_sq - w / eps
    tangential = np.clip(grad_sq - grad[axis] ** 2, 0.0, None)
    with np.errstate(invalid="ignore", divide="ignore"):
        tilt = eps * np.sqrt(grad_sq) * np.sqrt(tangential)
    tilt = np.where(grad_sq > 0, tilt, 0.0)
    return DensityFields(
        mu=ScalarField(g, mu),
        xi=ScalarField(g, xi),
        xi_plus=ScalarField(g, np.maximum(xi, 0.0)),
        tilt_e=ScalarField(g, tilt),
        grad_mag=ScalarField(g, np.sqrt(grad_sq)),
        axis=axis,
    )


def tilt_excess(fields: DensityFields, region: Region,
                supersample: int = 4) -> float:
    """Integral of the tilt integrand over a region (zero wherever the
    measure eps*|grad u|^2 vanishes)."""
    return integrate(fields.tilt_e, region, supersample=supersample)


def _curvature_integrands(state: PhaseFieldState, q0: float, threshold: float):
    """Included-cell quotient integrand and the gradient-mass split."""
    eps = state.epsilon
    grad_mag = density_fields(state).grad_mag.values
    eps_grad = eps * grad_mag
    mass = eps * grad_mag ** 2
    included = eps_grad >= threshold
    with np.errstate(divide="ignore", invalid="ignore"):
        quotient = np.where(included, np.abs(state.f.values) / eps_grad, 0.0)
    quotient = np.where(np.isfinite(quotient), quotient, 0.0)
    return quotient ** q0 * mass, mass, included


def diffuse_mean_curvature_norm(state: PhaseFieldState, params: AnalysisParams,
                                region: Region = None):
    """L^q0 norm integral of |f|/(eps|grad u|) against eps|grad u|^2 dx.

    The quotient is evaluated only on cells with eps|grad u| above the
    threshold; the eps|grad u|^2 mass carried by excluded cells is reported
    as a fraction of the total so silent truncation is visible.
    """
    region = region if region is not None else Region.whole()
    q0 = params.resolve_q0(state.grid.ndim)
    integrand, mass, included = _curvature_integrands(
        state, q0, params.grad_threshold)
    g = state.grid
    lam = integrate(ScalarField(g, integrand), region, params.supersample)
    total_mass = integrate(ScalarField(g, mass), region, params.supersample)
    excl = integrate(ScalarField(g, np.where(included, 0.0, mass)), region,
                     params.supersample)
    fraction = excl / total_mass if total_mass > 0 else 0.0
    return float(lam), float(fraction)


def norm_report(state: PhaseFieldState,
                params: AnalysisParams = AnalysisParams()) -> NormReport:
    """Assemble all scalar diagnostics of a state in one pass."""
    g = state.grid
    eps = state.epsilon
    dens = density_fields(state)
    whole = Region.whole()
    lam, fraction = diffuse_mean_curvature_norm(state, params, whole)
    return NormReport(
        total_energy=integrate(dens.mu, whole),
        sup_u=float(np.max(np.abs(state.u.values))),
        lambda_hat=lam,
        sup_eps_grad=float(eps * np.max(dens.grad_mag.values)),
        xi_plus_mass=integrate(dens.xi_plus, whole),
        xi_abs_mass=integrate(ScalarField(g, np.abs(dens.xi.values)), whole),
        f_l2_over_eps=integrate(
            ScalarField(g, state.f.values ** 2), whole) / eps,
        excluded_mass_fraction=fraction,
    )


@dataclass(frozen=True)
class HolderCheck:
    lhs: float
    rhs: float
    holds: bool
    q0: float
    c1: float
    c2: float


def corollary_holder_check(state: PhaseFieldState, s: float, t: float,
                           params: AnalysisParams = AnalysisParams()) -> HolderCheck:
    """Check the Hoelder chain bounding the curvature norm by split norms of f.

    With q0 = t(s-2)/s + 2, the chain reads

        Lambda_hat <= C1^2 * C2^(q0-2),
        C1 = eps^{-1/2} ||f||_{L^s},   C2 = ||f/(eps|grad u|)||_{L^t},

    where C2 is restricted to cells above the gradient threshold, exactly
    like Lambda_hat itself. The inequality is exact for the shared cell
    quadrature, so any violation indicates a quadrature bug.
    """
    if not s > 2:
        raise ValueError("s must exceed 2")
    if not t > 0:
        raise ValueError("t must be positive")
    g = state.grid
    q0 = t * (s - 2.0) / s + 2.0
    n = g.ndim - 1
    if not q0 > n:
        raise ValueError(f"resulting q0={q0} must exceed n={n}")
    eps = state.epsilon
    check_params = AnalysisParams(q0=q0, grad_threshold=params.grad_threshold,
                                  supersample=params.supersample, tau=params.tau)
    lhs, _ = diffuse_mean_curvature_norm(state, check_params)
    w = g.node_weights()
    c1 = (np.sum(np.abs(state.f.values) ** s * w)) ** (1.0 / s) / np.sqrt(eps)
    grad_mag = density_fields(state).grad_mag.values
    eps_grad = eps * grad_mag
    included = eps_grad >= params.grad_threshold
    with np.errstate(divide="ignore", invalid="ignore"):
        quotient = np.where(included, np.abs(state.f.values) / eps_grad, 0.0)
    c2 = (np.sum(quotient ** t * w)) ** (1.0 / t)
    rhs = c1 ** 2 * c2 ** (q0 - 2.0)
    return HolderCheck(lhs=float(lhs), rhs=float(rhs),
                       holds=bool(lhs <= rhs * (1.0 + 1e-9)),
                       q0=q0, c1=float(c1), c2=float(c2))


@dataclass(frozen=True)
class FirstVariationResult:
    lhs: float
    rhs: float
    residual: float
    forcing_term: float
    discrepancy_term: float


def first_variation_identity(state: PhaseFieldState, eta: VectorField,
                             params: AnalysisParams = AnalysisParams()
                             ) -> FirstVariationResult:
    """Both sides of the first-variation identity by independent quadratures.

    lhs integrates the tangential-divergence integrand of the associated
    varifold over the above-threshold set,

        lhs = int (div eta - grad_eta(nu, nu)) dmu,

    and the right side comes from the stress-energy tensor of the equation,

        rhs = int f <grad u, eta> dx + int grad_eta(nu, nu) dxi.

    Both sides vanish together in the continuum; the reported residual
    |lhs - rhs| / (1 + |lhs| + |rhs|) is pure discretization error.
    """
    g = state.grid
    if eta.grid != g:
        raise ValueError("eta must live on the state's grid")
    _require_compact_support(eta)
    eps = state.epsilon
    dens = density_fields(state)
    grad_u = gradient(state.u).values
    w = g.node_weights()

    comps = [gradient(ScalarField(g, eta.values[j])).values
             for j in range(g.ndim)]  # comps[j][i] = d_i eta_j
    div_eta = sum(comps[j][j] for j in range(g.ndim))
    grad_mag = dens.grad_mag.values
    included = eps * grad_mag >= params.grad_threshold
    with np.errstate(divide="ignore", invalid="ignore"):
        nu = np.where(included, grad_u / grad_mag, 0.0)
    grad_eta_nunu = sum(comps[j][i] * nu[i] * nu[j]
                        for i in range(g.ndim) for j in range(g.ndim))

    mu, xi = dens.mu.values, dens.xi.values
    lhs = float(np.sum(np.where(included, (div_eta - grad_eta_nunu) * mu, 0.0) * w))
    pairing = sum(grad_u[i] * eta.values[i] for i in range(g.ndim))
    forcing = float(np.sum(state.f.values * pairing * w))
    disc = float(np.sum(np.where(included, grad_eta_nunu * xi, 0.0) * w))
    rhs = forcing + disc
    residual = abs(lhs - rhs) / (1.0 + abs(lhs) + abs(rhs))
    return FirstVariationResult(lhs=lhs, rhs=rhs, residual=residual,
                                forcing_term=forcing, discrepancy_term=disc)


def _require_compact_support(eta: VectorField, margin_cells: float = 4.0):
    g = eta.grid
    if g.boundary == "periodic":
        return
    margin = margin_cells * g.h
    mesh = g.meshgrid()
    near = np.zeros(g.shape, dtype=bool)
    for ax in range(g.ndim):
        near |= (mesh[ax] - g.lo[ax] < margin - 1e-12 * g.h)
        near |= (g.hi[ax] - mesh[ax] < margin - 1e-12 * g.h)
    mags = np.max(np.abs(eta.values), axis=0)
    peak = float(np.max(mags)) if mags.size else 0.0
    if peak > 0 and float(np.max(mags[near])) > 1e-12 * peak:
        raise ValueError("eta must vanish within 4h of the domain boundary")


def eta_lq_norm(state: PhaseFieldState, eta: VectorField, q: float) -> float:
    """||eta||_{L^q(mu)} with |eta| the Euclidean norm, used by the duality
    bound on the first variation."""
    dens = density_fields(state)
    mag = np.sqrt(np.sum(eta.values ** 2, axis=0))
    w = state.grid.node_weights()
    return float(np.sum(mag ** q * dens.mu.values * w) ** (1.0 / q))


def smooth_test_field(grid, seed: int, margin_cells: float = 5.0) -> VectorField:
    """A pseudo-random smooth vector field vanishing near the boundary.

    Each component is a C-infinity bump times a low-order trigonometric
    polynomial with seeded coefficients, so repeated calls are reproducible
    and the 4h compact-support precondition holds by construction.
    """
    rng = np.random.default_rng(seed)
    mesh = grid.meshgrid()
    centers = [0.5 * (lo + hi) for lo, hi in zip(grid.lo, grid.hi)]
    halves = [0.5 * ext - margin_cells * grid.h for ext in grid.extent]
    if any(hw <= 0 for hw in halves):
        raise ValueError("grid too small for a compactly supported test field")
    bump = np.ones(grid.shape)
    scaled = []
    for m, c, hw in zip(mesh, centers, halves):
        s = (m - c) / hw
        scaled.append(s)
        inside = np.abs(s) < 1.0
        with np.errstate(divide="ignore", over="ignore"):
            b = np.where(inside, np.exp(1.0 - 1.0 / np.maximum(1.0 - s * s, 1e-300)),
                         0.0)
        bump = bump * b
    comps = []
    for _ in range(grid.ndim):
        poly = np.full(grid.shape, rng.uniform(-1.0, 1.0))
        for s in scaled:
            poly = poly + rng.uniform(-1.0, 1.0) * np.sin(np.pi * s)
            poly = poly + rng.uniform(-1.0, 1.0) * np.cos(np.pi * s)
        comps.append(bump * poly)
    return VectorField(grid, np.stack(comps))


def transition_region_split(state: PhaseFieldState,
                            params: AnalysisParams = AnalysisParams()):
    """Split the total energy mass by the transition-band threshold.

    Returns (energy where |u| < 1 - tau, energy where |u| >= 1 - tau).
    """
    dens = density_fields(state)
    w = state.grid.node_weights()
    in_band = np.abs(state.u.values) < 1.0 - params.tau
    mu = dens.mu.values
    return (float(np.sum(np.where(in_band, mu, 0.0) * w)),
            float(np.sum(np.where(in_band, 0.0, mu) * w)))
