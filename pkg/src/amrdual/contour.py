"""Marching Cubes over (possibly degenerate) dual hexahedra.

Corners use the dual-cell order ``n = dz*4 + dy*2 + dx``. A corner is
"above" when its value is strictly greater than the iso-value, and bit ``n``
of the case index is set for above corners.

Edge vertices are interpolated with endpoints put in cell-id order first, so
two duals sharing an edge between the same two cells compute bit-identical
positions. Collapsed edges (both ends on one cell) carry one value and can
never cross the surface.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._mc_table import BOURKE_EDGES, BOURKE_TRIANGLES
from .core import AmrDataset, ContractViolation, WorldPoint

# table vertex v sits at our corner _FROM_TABLE[v]
_FROM_TABLE = (0, 1, 3, 2, 4, 5, 7, 6)

EDGE_CORNERS = np.array([(_FROM_TABLE[a], _FROM_TABLE[b]) for a, b in BOURKE_EDGES], dtype=np.int64)


def _table_case(case: int) -> int:
    return sum(1 << v for v in range(8) if case >> _FROM_TABLE[v] & 1)


TRIANGLE_TABLE: tuple[tuple[tuple[int, int, int], ...], ...] = tuple(
    tuple(zip(*[iter(BOURKE_TRIANGLES[_table_case(c)])] * 3)) for c in range(256)
)
TRI_COUNT = np.array([len(t) for t in TRIANGLE_TABLE], dtype=np.int64)
TRI_EDGES = np.full((256, 5, 3), -1, dtype=np.int64)
for _c, _tris in enumerate(TRIANGLE_TABLE):
    if _tris:
        TRI_EDGES[_c, : len(_tris)] = _tris

_BITS = np.left_shift(1, np.arange(8))


class CollapsedEdgeError(RuntimeError):
    """The case table selected an edge whose endpoints are the same cell."""


@dataclass(frozen=True)
class HexInput:
    corner_cell: tuple[int, ...]
    corner_pos: tuple[WorldPoint, ...]
    corner_val: tuple[float, ...]

    @classmethod
    def from_dataset(cls, dataset: AmrDataset, corners: Sequence[int]) -> HexInput:
        centers = dataset.centers()
        return cls(
            tuple(int(c) for c in corners),
            tuple(WorldPoint(*centers[c].tolist()) for c in corners),
            tuple(float(dataset.scalars[c]) for c in corners),
        )


@dataclass(frozen=True)
class FatTriangle:
    v0: WorldPoint
    v1: WorldPoint
    v2: WorldPoint


def mc_case_index(values: Sequence[float], iso: float, *, above: bool = True) -> int:
    """Case index with bit ``n`` set iff ``values[n] > iso``.

    ``above=False`` flips the convention to ``values[n] < iso``.
    """
    if above:
        return sum(1 << n for n, v in enumerate(values) if v > iso)
    return sum(1 << n for n, v in enumerate(values) if v < iso)


def interpolate_edge(
    a_cell: int,
    b_cell: int,
    a_pos: Sequence[float],
    b_pos: Sequence[float],
    a_val: float,
    b_val: float,
    iso: float,
) -> WorldPoint:
    if a_cell == b_cell:
        raise ContractViolation(f"edge endpoints are the same cell {a_cell}")
    if (a_val > iso) == (b_val > iso):
        raise ContractViolation(f"edge ({a_val}, {b_val}) does not cross iso {iso}")
    if b_cell < a_cell:
        a_cell, b_cell = b_cell, a_cell
        a_pos, b_pos = b_pos, a_pos
        a_val, b_val = b_val, a_val
    t = (iso - a_val) / (b_val - a_val)
    return WorldPoint(*(pa + t * (pb - pa) for pa, pb in zip(a_pos, b_pos)))


def contour_hex(h: HexInput, iso: float, *, above: bool = True) -> list[FatTriangle]:
    case = mc_case_index(h.corner_val, iso, above=above)
    out = []
    for tri in TRIANGLE_TABLE[case]:
        verts = []
        for e in tri:
            a, b = EDGE_CORNERS[e]
            if h.corner_cell[a] == h.corner_cell[b]:
                raise CollapsedEdgeError(f"case {case} selected collapsed edge {e}")
            verts.append(
                interpolate_edge(
                    h.corner_cell[a], h.corner_cell[b],
                    h.corner_pos[a], h.corner_pos[b],
                    h.corner_val[a], h.corner_val[b],
                    iso,
                )
            )
        if verts[0] != verts[1] and verts[1] != verts[2] and verts[0] != verts[2]:
            out.append(FatTriangle(*verts))
    return out


def contour_batch(
    corners: np.ndarray,
    centers: np.ndarray,
    scalars: np.ndarray,
    iso: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`contour_hex` over ``(m, 8)`` corner-id rows.

    Returns fat triangles ``(t, 3, 3)`` and, per triangle, the row it came
    from. Triangles appear in row order, then table order.
    """
    vals = scalars[corners]
    case = ((vals > iso) * _BITS).sum(axis=1)
    edges = TRI_EDGES[case]  # (m, 5, 3)
    row, slot = np.nonzero(edges[:, :, 0] >= 0)
    e = edges[row, slot]  # (p, 3)
    ca = corners[row[:, None], EDGE_CORNERS[e, 0]]
    cb = corners[row[:, None], EDGE_CORNERS[e, 1]]
    if (ca == cb).any():
        raise CollapsedEdgeError("case table selected a collapsed edge")
    swap = cb < ca
    ca, cb = np.where(swap, cb, ca), np.where(swap, ca, cb)
    va, vb = scalars[ca], scalars[cb]
    pa, pb = centers[ca], centers[cb]
    t = (iso - va) / (vb - va)
    pos = pa + t[..., None] * (pb - pa)
    p0, p1, p2 = pos[:, 0], pos[:, 1], pos[:, 2]
    distinct = (p0 != p1).any(axis=1) & (p1 != p2).any(axis=1) & (p0 != p2).any(axis=1)
    return pos[distinct], row[distinct]
