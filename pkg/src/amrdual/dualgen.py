"""Dual-cell construction by snapping.

Every actual cell proposes the eight same-level logical duals that have one
of its vertices at their center. Each proposal snaps its eight corners to
actual cells and is kept only if it passes three ownership rules:

1. every corner snaps to some cell;
2. no corner snaps to a cell finer than the dual's level;
3. no same-level corner has a smaller cell key than the proposing cell.

The survivors are exactly the dual mesh, each element emitted once. Only
cell geometry is read here, never scalars.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from itertools import product

import numpy as np

from .core import CellCoord, cell_width
from .locator import CellIndex

ACCEPTED, MISSING, FINER, SMALLER = 0, 1, 2, 3
RULE_NAMES = {MISSING: "rule1", FINER: "rule2", SMALLER: "rule3"}

# (dx, dy, dz) for corner/delta index n = dz*4 + dy*2 + dx
UNIT_OFFSETS = np.array([(n & 1, (n >> 1) & 1, (n >> 2) & 1) for n in range(8)], dtype=np.int64)

# 27 neighbour offsets in {-1,0,1}^3; the corner d of dual delta lies at delta + d - 1
_NEIGHBOURS = np.array([(x, y, z) for z, y, x in product((-1, 0, 1), repeat=3)], dtype=np.int64)
_NB_OF = (
    (UNIT_OFFSETS[:, None, :] + UNIT_OFFSETS[None, :, :] - 1 + 1) * np.array([1, 3, 9])
).sum(axis=2)  # [delta, corner] -> neighbour slot


@dataclass(frozen=True)
class DualCell:
    corners: tuple[int, ...]  # 8 cell ids, index dz*4 + dy*2 + dx
    base: tuple[int, int, int]
    level: int
    owner: int


def dual_bases_of_cell(c: CellCoord) -> list[tuple[int, int, int]]:
    w = cell_width(c.level)
    return [
        (c.i + (dx - 1) * w, c.j + (dy - 1) * w, c.k + (dz - 1) * w)
        for dx, dy, dz in UNIT_OFFSETS.tolist()
    ]


def try_build_dual(
    index: CellIndex,
    base: tuple[int, int, int],
    level: int,
    self_id: int,
    stats: Counter | None = None,
) -> DualCell | None:
    w = cell_width(level)
    pts = np.asarray(base, dtype=np.int64) + UNIT_OFFSETS * w
    ds = index.dataset
    corners = []
    for p in pts:
        v = int(index.snap_many(p[None, :], level)[0])
        if v < 0:
            rule = MISSING
        elif ds.levels[v] < level:
            rule = FINER
        elif ds.levels[v] == level and v < self_id:
            # cell ids follow canonical key order, so id order is key order
            rule = SMALLER
        else:
            corners.append(v)
            continue
        if stats is not None:
            stats[RULE_NAMES[rule]] += 1
        return None
    if stats is not None:
        stats["accepted"] += 1
    return DualCell(tuple(corners), tuple(int(v) for v in base), level, self_id)


def duals_of_cell(index: CellIndex, self_id: int, stats: Counter | None = None) -> list[DualCell]:
    c = index.dataset.cell(self_id)
    out = []
    for base in dual_bases_of_cell(c):
        d = try_build_dual(index, base, c.level, self_id, stats)
        if d is not None:
            out.append(d)
    return out


def snap_neighbourhood(index: CellIndex, cell_ids: np.ndarray) -> np.ndarray:
    """Snap the 27 lattice points ``anchor + o*width``, ``o`` in {-1,0,1}^3.

    Returns ``(n, 27)`` cell ids (-1 for misses). Queries are issued one
    offset at a time so each batch follows the sorted cell order.
    """
    ds = index.dataset
    anchors = ds.coords[cell_ids]
    levels = ds.levels[cell_ids]
    width = np.left_shift(np.int64(1), levels)
    pts = anchors[None, :, :] + _NEIGHBOURS[:, None, :] * width[None, :, None]
    hint = np.broadcast_to(levels, (27, len(cell_ids))).reshape(-1)
    hits = index.snap_many(pts.reshape(-1, 3), hint)
    return hits.reshape(27, len(cell_ids)).T


def build_duals_batch(index: CellIndex, cell_ids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """All 8 proposals of each cell in ``cell_ids``.

    Returns ``corners`` of shape ``(n, 8, 8)`` and ``rule`` of shape ``(n, 8)``;
    ``rule`` is 0 for accepted duals, otherwise the first rule that fired
    scanning corners in order.
    """
    cell_ids = np.asarray(cell_ids, dtype=np.int64)
    ds = index.dataset
    nb = snap_neighbourhood(index, cell_ids)
    corners = nb[:, _NB_OF]
    self_level = ds.levels[cell_ids][:, None, None]
    safe = np.maximum(corners, 0)
    clevel = ds.levels[safe]
    code = np.where(
        corners < 0,
        MISSING,
        np.where(
            clevel < self_level,
            FINER,
            np.where((clevel == self_level) & (corners < cell_ids[:, None, None]), SMALLER, ACCEPTED),
        ),
    ).astype(np.int8)
    first = (code > 0).argmax(axis=2)
    rule = np.take_along_axis(code, first[..., None], axis=2)[..., 0]
    return corners, rule


def dual_bases_batch(index: CellIndex, cell_ids: np.ndarray) -> np.ndarray:
    """``(n, 8, 3)`` base anchors matching :func:`build_duals_batch`'s layout."""
    ds = index.dataset
    width = np.left_shift(np.int64(1), ds.levels[cell_ids])
    return ds.coords[cell_ids][:, None, :] + (UNIT_OFFSETS[None, :, :] - 1) * width[:, None, None]
