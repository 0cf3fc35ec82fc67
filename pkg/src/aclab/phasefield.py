"""Double-well potential, heteroclinic profile, layer constructions, and a
stationary solver for the forced interface equation

    eps * lap(u) - W'(u)/eps = f,      W(t) = (1 - t^2)^2 / 2.

States are either manufactured (f defined as the discrete residual of an
exact profile, so the pair satisfies the discrete equation identically) or
solved by damped Newton with a gradient-flow warmup.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .fields import PERIODIC, Grid, ScalarField, laplacian


class SolverError(RuntimeError):
    """Stationary solve failed; carries the best residual reached."""

    def __init__(self, message, best_residual):
        super().__init__(message)
        self.best_residual = float(best_residual)


def double_well(t):
    """W(t) = (1 - t^2)^2 / 2, minimized at the pure phases +-1."""
    t = np.asarray(t, dtype=float)
    w = (1.0 - t * t) ** 2 / 2.0
    return w if w.ndim else float(w)


def double_well_prime(t):
    """W'(t) = -2 t (1 - t^2)."""
    t = np.asarray(t, dtype=float)
    w = -2.0 * t * (1.0 - t * t)
    return w if w.ndim else float(w)


def double_well_second(t):
    """W''(t) = 6 t^2 - 2 (vanishes at t = 1/sqrt(3))."""
    t = np.asarray(t, dtype=float)
    w = 6.0 * t * t - 2.0
    return w if w.ndim else float(w)


def heteroclinic(t):
    """The 1-d transition profile q(t) = tanh t and its derivative sech^2 t.

    Satisfies q' = sqrt(2 W(q)) identically; its energy integral
    int (q')^2 dt = 4/3 is the quantization unit.
    """
    t = np.asarray(t, dtype=float)
    q = np.tanh(t)
    dq = 1.0 - q * q
    if q.ndim:
        return q, dq
    return float(q), float(dq)


@dataclass(frozen=True)
class Constants:
    """Scalar constants of the 1-d problem.

    sigma: int_{-1}^{1} sqrt(2 W)  -- surface tension of the profile
    alpha: int (tanh')^2           -- energy of one transition layer
    t0:    1/sqrt(3)               -- inflection point of W'
    """

    sigma: float
    alpha: float
    t0: float


@functools.lru_cache(maxsize=1)
def constants() -> Constants:
    """Compute sigma and alpha by adaptive quadrature, cross-checked against
    the closed antiderivatives (both equal 4/3 for this potential)."""
    sigma, sig_err = scipy.integrate.quad(
        lambda s: np.sqrt(2.0 * double_well(s)), -1.0, 1.0)
    alpha, alp_err = scipy.integrate.quad(
        lambda s: (1.0 - np.tanh(s) ** 2) ** 2, -40.0, 40.0, limit=200)
    if sig_err > 1e-8 or alp_err > 1e-8:
        raise RuntimeError("quadrature for the layer constants did not converge")
    exact = 4.0 / 3.0
    if abs(sigma - exact) > 1e-8 or abs(alpha - exact) > 1e-8:
        raise RuntimeError(
            f"layer constants disagree with closed forms: sigma={sigma}, alpha={alpha}")
    return Constants(sigma=sigma, alpha=alpha, t0=1.0 / np.sqrt(3.0))


@dataclass(frozen=True)
class LayerSpec:
    """A stack of parallel transition layers along one axis.

    positions must be strictly increasing; orientations alternate starting
    from first_sign, so the profile has exactly len(positions) sign changes.
    """

    positions: tuple[float, ...]
    axis: int = -1
    first_sign: int = 1

    def __post_init__(self):
        pos = tuple(float(p) for p in self.positions)
        if len(pos) < 1:
            raise ValueError("need at least one layer position")
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise ValueError("layer positions must be strictly increasing")
        if self.first_sign not in (1, -1):
            raise ValueError("first_sign must be +1 or -1")
        object.__setattr__(self, "positions", pos)

    @property
    def orientations(self) -> tuple[int, ...]:
        return tuple(self.first_sign * (-1) ** k for k in range(len(self.positions)))


@dataclass(frozen=True)
class PhaseFieldState:
    """A triple (u, f, eps) with the max-norm residual of the discrete
    equation recorded at construction."""

    u: ScalarField
    f: ScalarField
    epsilon: float
    residual_norm: float

    def __post_init__(self):
        if self.u.grid != self.f.grid:
            raise ValueError("u and f must share a grid")
        _check_epsilon(self.u.grid, self.epsilon)
        if not np.isfinite(self.residual_norm):
            raise ValueError("residual_norm must be finite")

    @property
    def grid(self) -> Grid:
        return self.u.grid


def _check_epsilon(grid: Grid, epsilon: float):
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if epsilon < 2.0 * grid.h:
        raise ValueError(
            f"epsilon={epsilon} under-resolves the layer: need eps >= 2h = {2 * grid.h}")


def residual_field(u: ScalarField, f: ScalarField, epsilon: float) -> np.ndarray:
    return (epsilon * laplacian(u).values
            - double_well_prime(u.values) / epsilon - f.values)


def make_state(u: ScalarField, f: ScalarField, epsilon: float) -> PhaseFieldState:
    """Assemble a state, recording the discrete residual max-norm."""
    rn = float(np.max(np.abs(residual_field(u, f, epsilon))))
    return PhaseFieldState(u=u, f=f, epsilon=float(epsilon), residual_norm=rn)


def build_layer_stack(grid: Grid, epsilon: float, spec: LayerSpec) -> ScalarField:
    """Clamped superposition of tanh transitions with alternating orientation.

    u = c + sum_k s_k tanh((x_a - p_k)/eps), with c fixing the far field at
    -first_sign, then clamped to [-1, 1] (the unclamped overlap excess is
    exp(-gap/eps) small).
    """
    _check_epsilon(grid, epsilon)
    axis = spec.axis % grid.ndim
    pos = spec.positions
    gaps = [b - a for a, b in zip(pos, pos[1:])]
    if any(g < 4.0 * epsilon for g in gaps):
        raise ValueError(f"overlapping layers: min gap {min(gaps)} < 4 eps")
    lo, hi = grid.lo[axis], grid.hi[axis]
    if pos[0] - lo < 6.0 * epsilon or hi - pos[-1] < 6.0 * epsilon:
        raise ValueError("layer positions need a 6 eps margin to the domain faces")
    x = grid.meshgrid()[axis]
    signs = spec.orientations
    u = np.full(grid.shape, float(sum(signs) - spec.first_sign))
    for p, s in zip(pos, signs):
        u = u + s * np.tanh((x - p) / epsilon)
    return ScalarField(grid, np.clip(u, -1.0, 1.0))


def signed_distance_ball(grid: Grid, center, radius: float) -> np.ndarray:
    """Analytic signed distance to a sphere (negative inside)."""
    mesh = grid.meshgrid()
    c = np.atleast_1d(np.asarray(center, dtype=float))
    return np.sqrt(sum((m - ci) ** 2 for m, ci in zip(mesh, c))) - radius


def build_radial_layer(grid: Grid, epsilon: float, center, radius: float) -> ScalarField:
    """tanh profile across a circular/spherical interface, -1 inside."""
    _check_epsilon(grid, epsilon)
    return ScalarField(grid, np.tanh(signed_distance_ball(grid, center, radius) / epsilon))


def manufactured_forcing(u_exact: ScalarField, epsilon: float) -> ScalarField:
    """f := eps*lap_h(u) - W'(u)/eps, so (u_exact, f) solves the discrete
    equation with residual exactly zero."""
    _check_epsilon(u_exact.grid, epsilon)
    f = (epsilon * laplacian(u_exact).values
         - double_well_prime(u_exact.values) / epsilon)
    return ScalarField(u_exact.grid, f)


@functools.lru_cache(maxsize=8)
def _laplacian_matrix(points: tuple, h: float, boundary: str) -> sp.csr_matrix:
    """Sparse matrix of the discrete Laplacian used by Newton."""
    ones = [None] * len(points)
    blocks = []
    for ax, n in enumerate(points):
        main = np.full(n, -2.0)
        off = np.ones(n - 1)
        a = sp.diags([off, main, off], [-1, 0, 1], format="lil")
        if boundary == PERIODIC:
            a[0, n - 1] = 1.0
            a[n - 1, 0] = 1.0
        else:
            a[0, 1] = 2.0
            a[n - 1, n - 2] = 2.0
        blocks.append(sp.csr_matrix(a) / h ** 2)
        ones[ax] = sp.identity(n, format="csr")
    total = None
    for ax in range(len(points)):
        factors = [blocks[ax] if k == ax else ones[k] for k in range(len(points))]
        term = factors[0]
        for fct in factors[1:]:
            term = sp.kron(term, fct, format="csr")
        total = term if total is None else total + term
    return total.tocsr()


def solve_stationary(grid: Grid, epsilon: float, f: ScalarField,
                     u_init: ScalarField, tol: float = 1e-10,
                     max_iter: int = 50) -> PhaseFieldState:
    """Damped Newton via pseudo-transient continuation on the discrete
    residual R(u) = eps*lap_h(u) - W'(u)/eps - f.

    Every step solves the sparse stencil system (I/dtau - J) du = R, which
    is a semi-implicit gradient-flow step for finite dtau and the exact
    Newton step as dtau -> infinity. Steps are accepted when either the
    residual max-norm or the discrete energy

        F(u) = sum_w [ -(eps/2) u lap_h(u) + W(u)/eps + f u ]

    (whose weighted gradient is -R) decreases; the energy clause lets far
    initial guesses follow the flow through residual humps into the right
    basin, as in the 1-d picture du/dt = -W'(u)/eps. dtau grows on accepted
    steps and collapses to pure Newton once the residual contracts strongly,
    giving the usual quadratic tail. Deterministic throughout (direct sparse
    solves, fixed ordering). Raises SolverError with the best residual when
    max_iter accepted steps cannot reach tol.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    _check_epsilon(grid, epsilon)
    if u_init.grid != grid or f.grid != grid:
        raise ValueError("fields must live on the target grid")

    fv = f.values
    weights = grid.node_weights()
    lap_mat = _laplacian_matrix(grid.points, grid.h, grid.boundary)

    def resid(uv):
        return (epsilon * laplacian(ScalarField(grid, uv)).values
                - double_well_prime(uv) / epsilon - fv)

    def energy(uv, lap_uv):
        dens = (-0.5 * epsilon * uv * lap_uv
                + double_well(uv) / epsilon + fv * uv)
        return float(np.sum(dens * weights))

    u = u_init.values.copy()
    r = resid(u)
    rnorm = float(np.max(np.abs(r)))
    best = rnorm
    if rnorm <= tol:
        return make_state(ScalarField(grid, u), f, epsilon)
    fu = energy(u, laplacian(ScalarField(grid, u)).values)

    ident = sp.identity(lap_mat.shape[0], format="csr")
    dtau = epsilon / 4.0
    pure_newton = False
    for _ in range(max_iter):
        jac = (epsilon * lap_mat
               - sp.diags(double_well_second(u).ravel() / epsilon)).tocsr()
        while True:
            mat = jac if pure_newton else (jac - ident / dtau)
            du = spsolve(mat.tocsc(), -r.ravel()).reshape(grid.shape)
            trial = u + du
            rt_field = resid(trial)
            rt = float(np.max(np.abs(rt_field)))
            ft = energy(trial, laplacian(ScalarField(grid, trial)).values)
            if np.isfinite(rt) and (rt < rnorm or (
                    not pure_newton and ft <= fu + 1e-12 * (1.0 + abs(fu)))):
                break
            if pure_newton:
                pure_newton = False
            else:
                dtau /= 10.0
                if dtau < 1e-14:
                    raise SolverError(
                        f"pseudo-timestep underflow at residual {best:.3e}", best)
        contraction = rt / rnorm if rnorm > 0 else 0.0
        u, r, rnorm, fu = trial, rt_field, rt, ft
        best = min(best, rnorm)
        if rnorm <= tol:
            return make_state(ScalarField(grid, u), f, epsilon)
        if contraction <= 0.3:
            pure_newton = True
        elif not pure_newton:
            dtau *= 3.0
    raise SolverError(
        f"stationary solve did not reach tol={tol}: best residual {best:.3e}", best)
