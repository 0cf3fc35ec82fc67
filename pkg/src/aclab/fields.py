"""Uniform tensor-product grids, finite-difference operators, and region quadrature.

Everything downstream (energy measures, monotonicity profiles, quantization
line integrals) is built from the primitives in this module: second-order
central stencils respecting the boundary tag, cell-indicator quadrature over
balls and slabs with subcell supersampling, and multilinear interpolation for
line and hyperplane restrictions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

PERIODIC = "periodic"
ZERO_FLUX = "zero-flux"

_BOUNDARIES = (PERIODIC, ZERO_FLUX)

# Nodes are cell centers of side h; a cell is fully inside a ball when the
# node is deeper than half the cell diagonal, fully outside when farther.
_CELL_DIAG = {1: 0.5, 2: 0.5 * np.sqrt(2.0), 3: 0.5 * np.sqrt(3.0)}


class RegionError(ValueError):
    """A region violates its placement preconditions (margins, degeneracy)."""


def _as_tuple(x, n, kind=float):
    if np.isscalar(x):
        return tuple(kind(x) for _ in range(n))
    t = tuple(kind(v) for v in x)
    if len(t) != n:
        raise ValueError(f"expected {n} entries, got {len(t)}")
    return t


@dataclass(frozen=True)
class Grid:
    """Isotropic uniform grid on a box, tagged periodic or zero-flux.

    Spacing is extent/points on periodic axes (nodes tile the torus) and
    extent/(points-1) on zero-flux axes (nodes include both box faces).
    Only isotropic grids are supported: all axes must share one h.
    """

    extent: tuple[float, ...]
    points: tuple[int, ...]
    boundary: str = ZERO_FLUX
    origin: tuple[float, ...] = None

    def __post_init__(self):
        ndim = len(self.extent)
        if ndim not in (1, 2, 3):
            raise ValueError(f"ambient dimension must be 1, 2 or 3, got {ndim}")
        if len(self.points) != ndim:
            raise ValueError("extent and points must have equal length")
        if self.boundary not in _BOUNDARIES:
            raise ValueError(f"boundary must be one of {_BOUNDARIES}")
        object.__setattr__(self, "extent", _as_tuple(self.extent, ndim))
        object.__setattr__(self, "points", _as_tuple(self.points, ndim, int))
        origin = self.origin if self.origin is not None else (0.0,) * ndim
        object.__setattr__(self, "origin", _as_tuple(origin, ndim))
        for n in self.points:
            if n < 8:
                raise ValueError("each axis needs at least 8 points")
        for ext in self.extent:
            if not ext > 0:
                raise ValueError("extent must be positive")
        spacings = [self._spacing(ax) for ax in range(ndim)]
        h0 = spacings[0]
        if any(abs(h - h0) > 1e-12 * h0 for h in spacings):
            raise ValueError(f"grid is anisotropic: spacings {spacings}")

    def _spacing(self, axis):
        if self.boundary == PERIODIC:
            return self.extent[axis] / self.points[axis]
        return self.extent[axis] / (self.points[axis] - 1)

    @property
    def ndim(self) -> int:
        return len(self.extent)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points

    @property
    def h(self) -> float:
        return self._spacing(0)

    @property
    def lo(self) -> tuple[float, ...]:
        return self.origin

    @property
    def hi(self) -> tuple[float, ...]:
        return tuple(o + e for o, e in zip(self.origin, self.extent))

    def axis_coords(self, axis) -> np.ndarray:
        return self.origin[axis] + self.h * np.arange(self.points[axis])

    def meshgrid(self) -> list[np.ndarray]:
        return np.meshgrid(*[self.axis_coords(ax) for ax in range(self.ndim)],
                           indexing="ij")

    def node_weights(self) -> np.ndarray:
        """Quadrature weights for whole-domain integrals (volume h^d).

        Zero-flux axes get trapezoid end-weights (boundary cells are half
        cells); periodic axes are plain midpoint cells.
        """
        w = np.ones(()).reshape((1,) * self.ndim)
        for ax in range(self.ndim):
            wax = np.ones(self.points[ax])
            if self.boundary == ZERO_FLUX:
                wax[0] = wax[-1] = 0.5
            shape = [1] * self.ndim
            shape[ax] = self.points[ax]
            w = w * wax.reshape(shape)
        return w * self.h ** self.ndim


@dataclass(frozen=True)
class ScalarField:
    """One real value per grid node; immutable after construction."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class VectorField:
    """One (n+1)-tuple per grid node, stored component-major."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.ndim,) + self.grid.shape:
            raise ValueError(
                f"values shape {v.shape} != {(self.grid.ndim,) + self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class Region:
    """Integration region: whole box, ball, ball-slab intersection, plane, or line."""

    kind: str
    center: tuple[float, ...] = None
    radius: float = None
    t_lo: float = None
    t_hi: float = None
    base: tuple[float, ...] = None
    direction: tuple[float, ...] = None

    @staticmethod
    def whole() -> "Region":
        return Region(kind="whole")

    @staticmethod
    def ball(center, radius) -> "Region":
        return Region(kind="ball", center=tuple(float(c) for c in np.atleast_1d(center)),
                      radius=float(radius))

    @staticmethod
    def slab_ball(center, radius, t_lo, t_hi) -> "Region":
        if not t_lo < t_hi:
            raise RegionError(f"degenerate slab: t_lo={t_lo} >= t_hi={t_hi}")
        return Region(kind="slab_ball",
                      center=tuple(float(c) for c in np.atleast_1d(center)),
                      radius=float(radius), t_lo=float(t_lo), t_hi=float(t_hi))

    @staticmethod
    def plane_slice(t) -> "Region":
        return Region(kind="plane_slice", t_lo=float(t))

    @staticmethod
    def line(base, direction) -> "Region":
        return Region(kind="line", base=tuple(float(b) for b in np.atleast_1d(base)),
                      direction=tuple(float(d) for d in np.atleast_1d(direction)))


def _shift(grid: Grid, values: np.ndarray, axis: int, step: int) -> np.ndarray:
    """values[..., i+step, ...] with the grid's ghost convention.

    Periodic wraps; zero-flux mirrors across the boundary node (ghost(-1) =
    u[1]), which makes the central first derivative vanish at the boundary.
    """
    out = np.roll(values, -step, axis=axis)
    if grid.boundary == ZERO_FLUX:
        idx = [slice(None)] * values.ndim
        src = [slice(None)] * values.ndim
        if step == 1:
            idx[axis], src[axis] = -1, -2
        else:
            idx[axis], src[axis] = 0, 1
        out[tuple(idx)] = values[tuple(src)]
    return out


def gradient(f: ScalarField) -> VectorField:
    """Second-order central-difference gradient respecting the boundary tag."""
    g = f.grid
    comps = [( _shift(g, f.values, ax, 1) - _shift(g, f.values, ax, -1)) / (2.0 * g.h)
             for ax in range(g.ndim)]
    return VectorField(g, np.stack(comps))


def laplacian(f: ScalarField) -> ScalarField:
    """Standard (2*dim+1)-point second-order Laplacian."""
    g = f.grid
    out = np.zeros(g.shape)
    for ax in range(g.ndim):
        out += (_shift(g, f.values, ax, 1) - 2.0 * f.values
                + _shift(g, f.values, ax, -1)) / g.h ** 2
    return ScalarField(g, out)


def _check_ball_margin(grid: Grid, center, radius, what="ball"):
    h = grid.h
    for ax in range(grid.ndim):
        lo_gap = (center[ax] - radius) - grid.lo[ax]
        hi_gap = grid.hi[ax] - (center[ax] + radius)
        if lo_gap < 2.0 * h - 1e-12 * h or hi_gap < 2.0 * h - 1e-12 * h:
            raise RegionError(
                f"{what} region violates the 2h domain margin on axis {ax}: "
                f"needs >= {2.0 * h:.6g}, has {min(lo_gap, hi_gap):.6g}")


def _subcell_offsets(h: float, ndim: int, supersample: int) -> np.ndarray:
    """Centers of supersample^ndim subcells of one cell, relative to the node."""
    one = (np.arange(supersample) + 0.5) / supersample * h - 0.5 * h
    return np.array(list(itertools.product(one, repeat=ndim)))


class _BallQuadrature:
    """Shared machinery for ball / slab-ball cell-indicator quadrature.

    Classifies every node cell as fully inside, fully outside, or boundary;
    boundary cells get an indicator fraction from subcell-center sampling.
    """

    def __init__(self, grid: Grid, center, supersample: int, t_lo=None, t_hi=None):
        if supersample < 1:
            raise ValueError("supersample must be >= 1")
        self.grid = grid
        self.center = np.asarray(center, dtype=float)
        if self.center.shape != (grid.ndim,):
            raise ValueError("ball center dimension mismatch")
        self.supersample = int(supersample)
        self.t_lo = t_lo
        self.t_hi = t_hi
        mesh = grid.meshgrid()
        rel = [m - c for m, c in zip(mesh, self.center)]
        self.dist = np.sqrt(sum(r * r for r in rel))
        self.coords = mesh
        self.half_diag = _CELL_DIAG[grid.ndim] * grid.h
        self._offsets = _subcell_offsets(grid.h, grid.ndim, self.supersample)
        if t_lo is not None:
            tcoord = mesh[-1]
            half = 0.5 * grid.h
            self._slab_in = (tcoord - half >= t_lo) & (tcoord + half <= t_hi)
            self._slab_out = (tcoord + half <= t_lo) | (tcoord - half >= t_hi)

    def integral_many(self, values_list, radius: float) -> list[float]:
        g = self.grid
        ball_in = self.dist <= radius - self.half_diag
        ball_out = self.dist >= radius + self.half_diag
        if self.t_lo is None:
            full, empty = ball_in, ball_out
        else:
            full = ball_in & self._slab_in
            empty = ball_out | self._slab_out
        band = ~(full | empty)
        frac = None
        if band.any():
            pts = np.stack([c[band] for c in self.coords], axis=-1)
            sub = pts[:, None, :] + self._offsets[None, :, :]
            inside = (np.sum((sub - self.center) ** 2, axis=-1)
                      <= radius * radius)
            if self.t_lo is not None:
                tc = sub[..., -1]
                inside &= (tc >= self.t_lo) & (tc <= self.t_hi)
            frac = inside.mean(axis=1)
        out = []
        for values in values_list:
            total = float(np.sum(values[full])) if full.any() else 0.0
            if frac is not None:
                total += float(np.sum(values[band] * frac))
            out.append(total * g.h ** g.ndim)
        return out

    def integral(self, values: np.ndarray, radius: float) -> float:
        return self.integral_many([values], radius)[0]


def integrate(f: ScalarField, region: Region, supersample: int = 4) -> float:
    """Cell-based quadrature of a field over a region.

    Boundary cells of ball-like regions are resolved by subcell sampling of
    the region indicator; results are deterministic functions of the inputs.
    """
    g = f.grid
    if region.kind == "whole":
        return float(np.sum(f.values * g.node_weights()))
    if region.kind == "ball":
        _check_ball_margin(g, region.center, region.radius)
        quad = _BallQuadrature(g, region.center, supersample)
        return quad.integral(f.values, region.radius)
    if region.kind == "slab_ball":
        _check_ball_margin(g, region.center, region.radius)
        quad = _BallQuadrature(g, region.center, supersample,
                               t_lo=region.t_lo, t_hi=region.t_hi)
        return quad.integral(f.values, region.radius)
    if region.kind == "plane_slice":
        return plane_slice_integral(f, region.t_lo, supersample=supersample)
    raise RegionError(f"cannot integrate over region kind {region.kind!r}; "
                      "sample lines with line_sample")


def cumulative_ball_profile(f: ScalarField, center, radii,
                            supersample: int = 4) -> np.ndarray:
    """Integral of the field over concentric balls, one pass over cells.

    Returns an array of rows (r, integral over B_r). Radii must be ascending
    and the largest ball must respect the 2h domain margin.
    """
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or len(radii) < 1:
        raise ValueError("radii must be a nonempty 1-d sequence")
    if np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be strictly ascending")
    _check_ball_margin(f.grid, tuple(np.atleast_1d(center)), radii[-1])
    quad = _BallQuadrature(f.grid, np.atleast_1d(center), supersample)
    vals = np.array([quad.integral(f.values, r) for r in radii])
    return np.column_stack([radii, vals])


def _uniform_spacing(radii: np.ndarray) -> float:
    dr = np.diff(radii)
    if np.any(np.abs(dr - dr[0]) > 1e-9 * dr[0]):
        raise ValueError("radii must be uniformly spaced")
    return float(dr[0])


def radial_derivative(profile: np.ndarray) -> np.ndarray:
    """d/dr of a radial profile: central differences inside, one-sided (second
    order) at the ends. Needs at least 3 uniformly spaced radii."""
    prof = np.asarray(profile, dtype=float)
    if prof.ndim != 2 or prof.shape[0] < 3:
        raise ValueError("need a profile with at least 3 radii")
    r, v = prof[:, 0], prof[:, 1]
    dr = _uniform_spacing(r)
    d = np.empty_like(v)
    d[1:-1] = (v[2:] - v[:-2]) / (2.0 * dr)
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dr)
    d[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * dr)
    return np.column_stack([r, d])


def boundary_profile(cumulative: np.ndarray) -> np.ndarray:
    """Sphere integrals as the radial derivative of cumulative ball integrals."""
    return radial_derivative(cumulative)


def _locate(grid: Grid, pts: np.ndarray):
    """Cell indices and weights for multilinear interpolation at pts (m, d)."""
    rel = (pts - np.asarray(grid.lo)) / grid.h
    if grid.boundary == PERIODIC:
        i0 = np.floor(rel).astype(int)
        w = rel - i0
        i0 = np.mod(i0, grid.points)
        i1 = np.mod(i0 + 1, grid.points)
    else:
        eps = 1e-9
        n = np.asarray(grid.points)
        if np.any(rel < -eps) or np.any(rel > (n - 1) + eps):
            raise RegionError("interpolation point outside the domain")
        i0 = np.clip(np.floor(rel).astype(int), 0, n - 2)
        w = rel - i0
        i1 = i0 + 1
    return i0, i1, w


def interpolate(f: ScalarField, pts) -> np.ndarray:
    """Multilinear interpolation of a field at points of shape (m, ndim)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    g = f.grid
    i0, i1, w = _locate(g, pts)
    out = np.zeros(len(pts))
    for corner in itertools.product((0, 1), repeat=g.ndim):
        idx = tuple(np.where(c, i1[:, ax], i0[:, ax])
                    for ax, c in enumerate(corner))
        wt = np.ones(len(pts))
        for ax, c in enumerate(corner):
            wt = wt * (w[:, ax] if c else 1.0 - w[:, ax])
        out += wt * f.values[idx]
    return out


def line_sample(f: ScalarField, base, direction, samples: int,
                t_lo: float, t_hi: float) -> np.ndarray:
    """Field values along the segment base + t*direction/|direction|.

    Returns rows (t, value) at `samples` equispaced parameters in
    [t_lo, t_hi]. The whole segment must lie inside the domain.
    """
    if samples < 2:
        raise ValueError("need at least 2 samples")
    base = np.asarray(base, dtype=float)
    direction = np.asarray(direction, dtype=float)
    norm = np.linalg.norm(direction)
    if norm == 0:
        raise ValueError("direction must be nonzero")
    t = np.linspace(t_lo, t_hi, int(samples))
    pts = base[None, :] + t[:, None] * (direction / norm)[None, :]
    vals = interpolate(f, pts)
    return np.column_stack([t, vals])


def restrict_to_plane(f: ScalarField, t: float) -> np.ndarray:
    """Field on the hyperplane {x_last = t}: linear interpolation between the
    two adjacent grid planes. Returns the transverse-shaped array."""
    g = f.grid
    last = g.ndim - 1
    rel = (t - g.lo[last]) / g.h
    n = g.points[last]
    if g.boundary == PERIODIC:
        k0 = int(np.floor(rel)) % n
        k1 = (k0 + 1) % n
        lam = rel - np.floor(rel)
    else:
        if rel < -1e-9 or rel > (n - 1) + 1e-9:
            raise RegionError(f"plane t={t} outside the domain")
        k0 = min(max(int(np.floor(rel)), 0), n - 2)
        k1 = k0 + 1
        lam = rel - k0
    sl0 = [slice(None)] * g.ndim
    sl1 = [slice(None)] * g.ndim
    sl0[last], sl1[last] = k0, k1
    return (1.0 - lam) * f.values[tuple(sl0)] + lam * f.values[tuple(sl1)]


def disc_integral(grid: Grid, plane_values: np.ndarray, center_transverse,
                  radius: float, supersample: int = 4) -> float:
    """H^n integral of plane-restricted values over a transverse disc.

    In ambient dimension 1 the "disc" is a point and the integral is the
    plane value itself (counting measure).
    """
    nd = grid.ndim - 1
    if radius < 0:
        return 0.0
    if nd == 0:
        return float(plane_values)
    ct = np.atleast_1d(np.asarray(center_transverse, dtype=float))
    h = grid.h
    axes = [grid.axis_coords(ax) for ax in range(nd)]
    for ax in range(nd):
        lo_gap = (ct[ax] - radius) - grid.lo[ax]
        hi_gap = grid.hi[ax] - (ct[ax] + radius)
        if lo_gap < 2.0 * h - 1e-12 * h or hi_gap < 2.0 * h - 1e-12 * h:
            raise RegionError(
                f"plane disc violates the 2h domain margin on transverse axis {ax}")
    mesh = np.meshgrid(*axes, indexing="ij")
    rel = [m - c for m, c in zip(mesh, ct)]
    dist = np.sqrt(sum(r * r for r in rel))
    half_diag = _CELL_DIAG[nd] * h
    full = dist <= radius - half_diag
    empty = dist >= radius + half_diag
    band = ~(full | empty)
    total = float(np.sum(plane_values[full])) if full.any() else 0.0
    if band.any():
        pts = np.stack([m[band] for m in mesh], axis=-1)
        offs = _subcell_offsets(h, nd, supersample)
        sub = pts[:, None, :] + offs[None, :, :]
        inside = np.sum((sub - ct) ** 2, axis=-1) <= radius * radius
        frac = inside.mean(axis=1)
        total += float(np.sum(plane_values[band] * frac))
    return total * h ** nd


def plane_slice_integral(f: ScalarField, t: float, supersample: int = 4) -> float:
    """H^n integral of a field over the whole hyperplane {x_last = t}."""
    g = f.grid
    plane = restrict_to_plane(f, t)
    if g.ndim == 1:
        return float(plane)
    w = np.ones(()).reshape((1,) * (g.ndim - 1))
    for ax in range(g.ndim - 1):
        wax = np.ones(g.points[ax])
        if g.boundary == ZERO_FLUX:
            wax[0] = wax[-1] = 0.5
        shape = [1] * (g.ndim - 1)
        shape[ax] = g.points[ax]
        w = w * wax.reshape(shape)
    return float(np.sum(plane * w) * g.h ** (g.ndim - 1))
