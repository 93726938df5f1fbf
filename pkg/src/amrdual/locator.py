"""Cell location over a sorted cell array.

A point is located by masking its coordinates down to a candidate anchor on
each level present in the dataset and binary-searching the sorted cells for
that exact ``(i, j, k, level)`` key. No trees, no floating point.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import AmrDataset, CellCoord, _check_level

_LEVEL_BITS = 5
_PACKED_AXIS_BITS = (63 - _LEVEL_BITS) // 3


class CellIndex:
    """Search structure over an :class:`AmrDataset`.

    Keys are packed into a single ``int64`` when the dataset's extent fits in
    19 bits per axis; wider domains fall back to a vectorised lexicographic
    bisection over the four key columns. Both give identical answers.
    """

    def __init__(self, dataset: AmrDataset, *, packed: bool | None = None):
        self.dataset = dataset
        self.level_set = dataset.level_set
        self._lo = np.asarray(dataset.bbox[0], dtype=np.int64)
        self._hi = np.asarray(dataset.bbox[1], dtype=np.int64)
        extent = int((self._hi - self._lo).max())
        self._bits = max(1, extent.bit_length())
        fits = self._bits <= _PACKED_AXIS_BITS
        if packed is None:
            packed = fits
        elif packed and not fits:
            raise ValueError(f"extent {extent} too wide for packed keys")
        self.packed = packed
        if packed:
            self._keys = self._pack(dataset.coords, dataset.levels)
            if len(self._keys) > 1 and not (np.diff(self._keys) >= 0).all():
                raise AssertionError("dataset is not in canonical order")

    def __len__(self) -> int:
        return len(self.dataset)

    def _pack(self, anchors: np.ndarray, levels) -> np.ndarray:
        off = anchors - self._lo
        b = self._bits
        return (
            (off[:, 0] << (2 * b + _LEVEL_BITS))
            | (off[:, 1] << (b + _LEVEL_BITS))
            | (off[:, 2] << _LEVEL_BITS)
            | levels
        )

    def lookup(self, anchors: np.ndarray, levels: np.ndarray | int) -> np.ndarray:
        """Ids of cells whose key equals ``(anchor, level)`` exactly, else -1."""
        anchors = np.asarray(anchors, dtype=np.int64).reshape(-1, 3)
        levels = np.broadcast_to(np.asarray(levels, dtype=np.int64), (len(anchors),))
        out = np.full(len(anchors), -1, dtype=np.int64)
        inside = ((anchors >= self._lo) & (anchors < self._hi)).all(axis=1)
        if not inside.all():
            sel = np.flatnonzero(inside)
            out[sel] = self._lookup_inside(anchors[sel], levels[sel])
        else:
            out[:] = self._lookup_inside(anchors, levels)
        return out

    def _lookup_inside(self, anchors: np.ndarray, levels: np.ndarray) -> np.ndarray:
        n = len(self.dataset)
        if self.packed:
            q = self._pack(anchors, levels)
            pos = np.searchsorted(self._keys, q)
            pos_c = np.minimum(pos, n - 1)
            return np.where((pos < n) & (self._keys[pos_c] == q), pos_c, -1)
        pos = self._lower_bound(anchors, levels)
        pos_c = np.minimum(pos, n - 1)
        ds = self.dataset
        hit = (
            (pos < n)
            & (ds.coords[pos_c] == anchors).all(axis=1)
            & (ds.levels[pos_c] == levels)
        )
        return np.where(hit, pos_c, -1)

    def _lower_bound(self, anchors: np.ndarray, levels: np.ndarray) -> np.ndarray:
        ds = self.dataset
        cols = (ds.coords[:, 0], ds.coords[:, 1], ds.coords[:, 2], ds.levels)
        qcols = (anchors[:, 0], anchors[:, 1], anchors[:, 2], levels)
        lo = np.zeros(len(levels), dtype=np.int64)
        hi = np.full(len(levels), len(ds), dtype=np.int64)
        active = lo < hi
        while active.any():
            idx = np.flatnonzero(active)
            mid = (lo[idx] + hi[idx]) // 2
            # lexicographic key[mid] < query
            less = np.zeros(len(idx), dtype=bool)
            equal = np.ones(len(idx), dtype=bool)
            for c, q in zip(cols, qcols):
                a, b = c[mid], q[idx]
                less |= equal & (a < b)
                equal &= a == b
            lo[idx] = np.where(less, mid + 1, lo[idx])
            hi[idx] = np.where(less, hi[idx], mid)
            active = lo < hi
        return lo

    def snap_many(self, points: np.ndarray, hint: np.ndarray | int | None = None) -> np.ndarray:
        """Vectorised :func:`snap`: id of the containing cell per point, -1 if none.

        ``hint`` (scalar or per-point) names a level probed first; the other
        levels are then probed finest to coarsest, and the first hit wins.
        """
        points = np.asarray(points, dtype=np.int64).reshape(-1, 3)
        out = np.full(len(points), -1, dtype=np.int64)
        if hint is not None:
            hint = np.broadcast_to(np.asarray(hint, dtype=np.int64), (len(points),))
            for lvl in self.level_set:
                sel = np.flatnonzero(hint == lvl)
                if len(sel):
                    out[sel] = self._probe(points[sel], lvl)
        for lvl in self.level_set:
            pending = out < 0
            if hint is not None:
                pending &= hint != lvl
            sel = np.flatnonzero(pending)
            if len(sel) == 0:
                continue
            out[sel] = self._probe(points[sel], lvl)
        return out

    def _probe(self, points: np.ndarray, level: int) -> np.ndarray:
        return self.lookup(points & ~np.int64((1 << level) - 1), level)


def build_index(cells: Sequence[CellCoord] | np.ndarray, scalars) -> CellIndex:
    return CellIndex(AmrDataset.from_cells(cells, scalars))


def find_exact(index: CellIndex, c: CellCoord) -> int | None:
    hit = int(index.lookup(np.array([c[:3]]), c[3])[0])
    return None if hit < 0 else hit


def snap(index: CellIndex, p: Sequence[int], hint_level: int | None = None) -> int | None:
    """Id of the actual cell whose extent contains integer point ``p``."""
    if hint_level is not None:
        _check_level(hint_level)
    hit = int(index.snap_many(np.array([p]), hint_level)[0])
    return None if hit < 0 else hit


@dataclass
class ValidationReport:
    misaligned: list[int] = field(default_factory=list)
    duplicates: list[tuple[int, int]] = field(default_factory=list)
    overlaps: list[tuple[int, int]] = field(default_factory=list)  # (finer, coarser)

    @property
    def clean(self) -> bool:
        return not (self.misaligned or self.duplicates or self.overlaps)

    def format(self, dataset: AmrDataset | None = None) -> str:
        def name(cid: int) -> str:
            if dataset is None:
                return f"#{cid}"
            c = dataset.cell(cid)
            return f"#{cid} ({c.i},{c.j},{c.k};{c.level})"

        if self.clean:
            return "dataset is valid"
        lines = [f"misaligned anchor: {name(c)}" for c in self.misaligned]
        lines += [f"duplicate cell: {name(a)} == {name(b)}" for a, b in self.duplicates]
        lines += [f"overlap: {name(a)} inside {name(b)}" for a, b in self.overlaps]
        return "\n".join(lines)


def validate_dataset(index: CellIndex) -> ValidationReport:
    """Report misaligned anchors, duplicate cells, and nested (overlapping) cells.

    Overlaps are found by masking each cell's anchor to every coarser level
    present and looking for an actual cell with that key.
    """
    ds = index.dataset
    report = ValidationReport()
    width = np.left_shift(np.int64(1), ds.levels)
    report.misaligned = np.flatnonzero((ds.coords % width[:, None] != 0).any(axis=1)).tolist()

    same = np.flatnonzero(
        (ds.coords[1:] == ds.coords[:-1]).all(axis=1) & (ds.levels[1:] == ds.levels[:-1])
    )
    report.duplicates = [(int(a), int(a) + 1) for a in same]

    for lvl in index.level_set:
        finer = np.flatnonzero(ds.levels < lvl)
        if len(finer) == 0:
            continue
        masked = ds.coords[finer] & ~np.int64((1 << lvl) - 1)
        hit = index.lookup(masked, lvl)
        for f, c in zip(finer[hit >= 0].tolist(), hit[hit >= 0].tolist()):
            report.overlaps.append((f, c))
    report.overlaps.sort()
    return report
