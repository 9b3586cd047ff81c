"""The restricted X-ray transform X, its adjoint X*, and the functional Phi.

X integrates a source field along the lines s -> (s, y + s gamma(t)):

    Xf(t, y) = int f(s, y + s gamma(t)) ds
    X*g(s, x) = int g(t, x - s gamma(t)) dt

Both are discretized with midpoint quadrature along the integration axis
(over the corresponding grid's extent) and multilinear interpolation of the
integrand, zero outside the field's box.  X* is built directly from the
incidence relation x = y + s gamma(t), not by transposing a discrete matrix
for X, so the adjoint identity <Xf, g> = <f, X*g> is a genuine check.

When the quadrature count equals the grid count the quadrature nodes
coincide with the grid levels, and for fixed (t, s) the interpolation
points form a translated copy of the output grid's cross-section; a fast
path exploits this when the two grids share their cross-section spacings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exponents import triple_for_theta
from .field import Grid, SampledField, gamma_eval, lp_norm, mixed_norm


@dataclass(frozen=True)
class TransformPlan:
    """Grids plus quadrature counts for X (s-integral) and X* (t-integral)."""

    source_grid: Grid
    target_grid: Grid
    s_quad: int = 0
    t_quad: int = 0

    def __post_init__(self):
        if self.source_grid.side != "source":
            raise ValueError("source_grid must be source-side")
        if self.target_grid.side != "target":
            raise ValueError("target_grid must be target-side")
        if self.source_grid.d != self.target_grid.d:
            raise ValueError("plan grids must share the dimension d")
        if self.s_quad == 0:
            object.__setattr__(self, "s_quad", self.source_grid.counts[0])
        if self.t_quad == 0:
            object.__setattr__(self, "t_quad", self.target_grid.counts[0])
        if self.s_quad < 2 or self.t_quad < 2:
            raise ValueError("quadrature counts must be >= 2")

    @property
    def d(self):
        return self.source_grid.d


def _quad_nodes(grid: Grid, n: int):
    """Midpoint nodes over the grid's axis-0 extent; grid levels if n matches."""
    if n == grid.counts[0]:
        return grid.axis_nodes(0), grid.spacing[0]
    lo, hi = grid.box()
    step = (hi[0] - lo[0]) / n
    return lo[0] + (np.arange(n) + 0.5) * step, step


def _axis_slice(values: np.ndarray, coord: float, origin: float, spacing: float):
    """Interpolate along axis 0 at a single coordinate; None if out of range."""
    n = values.shape[0]
    u = (coord - origin) / spacing
    i0 = int(np.floor(u))
    fr = u - i0
    out = None
    if 0 <= i0 < n:
        out = (1.0 - fr) * values[i0]
    if 0 <= i0 + 1 < n and fr != 0.0:
        part = fr * values[i0 + 1]
        out = part if out is None else out + part
    return out


def _shift_blend(arr: np.ndarray, axis: int, m0: int, fr: float, n_out: int):
    """out[i] = (1-fr) arr[i+m0] + fr arr[i+m0+1] along ``axis``, zero-padded."""
    def taken(shift):
        out_shape = list(arr.shape)
        out_shape[axis] = n_out
        out = np.zeros(out_shape)
        lo = max(0, -shift)
        hi = min(n_out, arr.shape[axis] - shift)
        if lo >= hi:
            return out
        src = [slice(None)] * arr.ndim
        dst = [slice(None)] * arr.ndim
        src[axis] = slice(lo + shift, hi + shift)
        dst[axis] = slice(lo, hi)
        out[tuple(dst)] = arr[tuple(src)]
        return out

    res = (1.0 - fr) * taken(m0)
    if fr != 0.0:
        res += fr * taken(m0 + 1)
    return res


def _axis_matrix(targets: np.ndarray, origin: float, spacing: float, n: int):
    """Dense interpolation matrix: row i holds hat weights for targets[i]."""
    u = (targets - origin) / spacing
    i0 = np.floor(u).astype(np.int64)
    fr = u - i0
    W = np.zeros((targets.size, n))
    rows = np.arange(targets.size)
    ok0 = (i0 >= 0) & (i0 < n)
    W[rows[ok0], i0[ok0]] = 1.0 - fr[ok0]
    ok1 = (i0 + 1 >= 0) & (i0 + 1 < n)
    W[rows[ok1], i0[ok1] + 1] += fr[ok1]
    return W


def _cross_section(slice_vals: np.ndarray, offsets: np.ndarray,
                   in_grid: Grid, out_grid: Grid):
    """Resample a cross-section slice onto out_grid's section shifted by offsets.

    Returns the array of values of the (zero-extended, multilinearly
    interpolated) slice at points (out-axis nodes + offset) per axis.
    """
    d = in_grid.d
    res = slice_vals
    for m in range(1, d):
        h_in = in_grid.spacing[m]
        same = abs(out_grid.spacing[m] - h_in) <= 1e-12 * h_in
        axis = m - 1
        n_out = out_grid.counts[m]
        if same:
            u0 = (out_grid.origin[m] + offsets[m - 1] - in_grid.origin[m]) / h_in
            m0 = int(np.floor(u0))
            res = _shift_blend(res, axis, m0, u0 - m0, n_out)
        else:
            W = _axis_matrix(out_grid.axis_nodes(m) + offsets[m - 1],
                             in_grid.origin[m], h_in, in_grid.counts[m])
            res = np.moveaxis(np.tensordot(W, np.moveaxis(res, axis, 0),
                                           axes=(1, 0)), 0, axis)
    return res


def apply_X(f: SampledField, plan: TransformPlan) -> SampledField:
    """Forward transform onto the plan's target grid."""
    if f.grid != plan.source_grid:
        raise ValueError("field grid does not match the plan's source grid")
    d = plan.d
    src = plan.source_grid
    tgt = plan.target_grid
    s_nodes, ds = _quad_nodes(src, plan.s_quad)
    t_levels = tgt.axis_nodes(0)
    out = np.zeros(tgt.shape)
    for k, s_k in enumerate(s_nodes):
        f_slice = _axis_slice(f.values, s_k, src.origin[0], src.spacing[0])
        if f_slice is None or not f_slice.any():
            continue
        gam = gamma_eval(d, t_levels)  # (n_t, d-1)
        for j in range(t_levels.size):
            out[j] += _cross_section(f_slice, s_k * gam[j], src, tgt)
    return SampledField(grid=tgt, values=out * ds)


def apply_X_star(g: SampledField, plan: TransformPlan) -> SampledField:
    """Adjoint transform onto the plan's source grid."""
    if g.grid != plan.target_grid:
        raise ValueError("field grid does not match the plan's target grid")
    d = plan.d
    src = plan.source_grid
    tgt = plan.target_grid
    t_nodes, dt = _quad_nodes(tgt, plan.t_quad)
    s_levels = src.axis_nodes(0)
    out = np.zeros(src.shape)
    for k, t_k in enumerate(t_nodes):
        g_slice = _axis_slice(g.values, t_k, tgt.origin[0], tgt.spacing[0])
        if g_slice is None or not g_slice.any():
            continue
        gam = gamma_eval(d, t_k)  # (d-1,)
        for i in range(s_levels.size):
            out[i] += _cross_section(g_slice, -s_levels[i] * gam, tgt, src)
    return SampledField(grid=src, values=out * dt)


def bilinear(f: SampledField, g: SampledField, plan: TransformPlan) -> float:
    """The pairing integral of Xf against g over the target grid."""
    if f.side != "source" or g.side != "target":
        raise ValueError("bilinear expects (source f, target g)")
    Xf = apply_X(f, plan)
    return float((Xf.values * g.values).sum() * plan.target_grid.cell_volume)


def phi_functional(f: SampledField, theta, plan: TransformPlan) -> float:
    """Rayleigh quotient: mixed norm of Xf over the L^p norm of f."""
    trip = triple_for_theta(plan.d, theta)
    denom = lp_norm(f, trip.p)
    if denom == 0:
        raise ZeroDivisionError("phi_functional is undefined for the zero field")
    Xf = apply_X(f, plan)
    return mixed_norm(Xf, trip.q, trip.r) / denom
