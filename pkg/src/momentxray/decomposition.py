"""Dyadic level-set and slab decompositions of sampled fields.

A nonnegative source function splits into level pieces E_j on which
2^j <= f < 2^{j+1}; a target function splits into t-slabs classified by the
size of the inner integral of g^r per slice; combining value pieces with
slab data gives the (k, l, m) pieces.  Values below 2^{J_FLOOR} are treated
as zero so the piece count stays bounded on finite grids.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np

from .exponents import Infinity
from .field import SampledField

J_FLOOR = -40


def _as_float(p) -> float:
    if isinstance(p, Infinity):
        return np.inf
    return float(Fraction(p)) if not isinstance(p, float) else p


@dataclass(frozen=True)
class DyadicPiece:
    j: int
    mask: np.ndarray = dc_field(repr=False)
    measure: float = 0.0


@dataclass(frozen=True)
class SlabPiece:
    l: int
    t_mask: np.ndarray = dc_field(repr=False)


@dataclass(frozen=True)
class CombinedPiece:
    k: int
    l: int
    m: int
    mask: np.ndarray = dc_field(repr=False)


def _level_indices(values: np.ndarray, j_min: int) -> np.ndarray:
    """floor(log2) per entry; entries below 2^{j_min} get j_min - 1 (ignored)."""
    out = np.full(values.shape, j_min - 1, dtype=np.int64)
    alive = values >= 2.0 ** j_min
    if np.any(alive):
        out[alive] = np.floor(np.log2(values[alive])).astype(np.int64)
    return out


def dyadic_decompose(f: SampledField, j_min: int = J_FLOOR):
    """Level pieces of f, sorted by j ascending."""
    if np.any(f.values < 0):
        raise ValueError("dyadic_decompose requires nonnegative values")
    levels = _level_indices(f.values, j_min)
    cellvol = f.grid.cell_volume
    pieces = []
    for j in np.unique(levels):
        if j < j_min:
            continue
        mask = levels == j
        pieces.append(DyadicPiece(j=int(j), mask=mask,
                                  measure=float(mask.sum()) * cellvol))
    return pieces


def slab_decompose(g: SampledField, r, j_min: int = J_FLOOR):
    """t-slab pieces of g classified by the slice integral of g^r."""
    if g.side != "target":
        raise ValueError("slab_decompose expects a target-side field")
    if np.any(g.values < 0):
        raise ValueError("slab_decompose requires nonnegative values")
    rf = _as_float(r)
    if rf < 1:
        raise ValueError("r must be >= 1")
    dy = float(np.prod(g.grid.spacing[1:]))
    slice_int = (g.values ** rf).sum(axis=tuple(range(1, g.d))) * dy
    levels = _level_indices(slice_int, j_min)
    pieces = []
    for l in np.unique(levels):
        if l < j_min:
            continue
        pieces.append(SlabPiece(l=int(l), t_mask=levels == l))
    return pieces


def combined_decompose(g: SampledField, q, r, j_min: int = J_FLOOR):
    """(k, l, m) pieces: value level k, g-slab l, and slice-measure level m.

    The value pieces F_k of g are intersected with the t-slices whose g^r
    integral sits in slab l and whose F_k cross-section measure sits in
    dyadic class m.  q is accepted alongside r for callers that report norm
    contributions; the masks depend on r only.
    """
    if g.side != "target":
        raise ValueError("combined_decompose expects a target-side field")
    value_pieces = dyadic_decompose(g, j_min=j_min)
    slabs = slab_decompose(g, r, j_min=j_min)
    slab_of_t = np.full(g.grid.counts[0], j_min - 1, dtype=np.int64)
    for slab in slabs:
        slab_of_t[slab.t_mask] = slab.l
    dy = float(np.prod(g.grid.spacing[1:]))
    yaxes = tuple(range(1, g.d))
    out = []
    for piece in value_pieces:
        sec = piece.mask.sum(axis=yaxes) * dy
        m_of_t = _level_indices(sec, j_min)
        keys = np.stack([slab_of_t, m_of_t], axis=1)
        for l, m in np.unique(keys, axis=0):
            if l < j_min or m < j_min:
                continue
            t_sel = (slab_of_t == l) & (m_of_t == m)
            mask = piece.mask & t_sel.reshape((-1,) + (1,) * (g.d - 1))
            if mask.any():
                out.append(CombinedPiece(k=piece.j, l=int(l), m=int(m), mask=mask))
    return out


def reconstruct(pieces, f: SampledField) -> SampledField:
    """The dyadic minorant sum of 2^j over the given pieces, on f's grid."""
    vals = np.zeros(f.grid.shape)
    for pc in pieces:
        vals += (2.0 ** pc.j) * pc.mask
    return f.with_values(vals)


def trim_frequency(f: SampledField, W: int, p=2):
    """Keep the dyadic pieces within W of the dominant index.

    j0 maximizes 2^{jp} |E_j| (ties to the smaller j); the returned field is
    the minorant sum of 2^j chi_{E_j} over |j - j0| < W, so it is <= f.
    """
    if W < 1:
        raise ValueError("W must be >= 1")
    pieces = dyadic_decompose(f)
    if not pieces:
        raise ValueError("trim_frequency needs a nonzero field")
    pf = _as_float(p)
    best_j, best_w = None, -np.inf
    for pc in pieces:  # ascending j, strict > keeps the smaller index on ties
        weight = 2.0 ** (pc.j * pf) * pc.measure
        if weight > best_w:
            best_j, best_w = pc.j, weight
    kept = [pc for pc in pieces if abs(pc.j - best_j) < W]
    return reconstruct(kept, f), best_j
