"""Integer cell coordinates, levels, and the AMR dataset container.

Level 0 is the finest level with unit-sized cells; a level-``l`` cell has
width ``2**l`` and an anchor (lower corner) that is a multiple of ``2**l``
on every axis. World coordinates are expressed in level-0 cell units.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

MAX_LEVEL = 30
INT32_MIN = -(2**31)
INT32_MAX = 2**31 - 1


class ContractViolation(ValueError):
    """An operation was called with arguments outside its precondition."""


class AmrLoadError(ValueError):
    """Input cells violate the dataset invariants.

    ``record`` is the zero-based index of the offending input record, when
    one can be named.
    """

    def __init__(self, message: str, record: int | None = None):
        if record is not None:
            message = f"record {record}: {message}"
        super().__init__(message)
        self.record = record


class CellCoord(NamedTuple):
    i: int
    j: int
    k: int
    level: int


class WorldPoint(NamedTuple):
    x: float
    y: float
    z: float


def _check_level(level: int) -> None:
    if not 0 <= level <= MAX_LEVEL:
        raise ContractViolation(f"level {level} outside [0, {MAX_LEVEL}]")


def cell_width(level: int) -> int:
    _check_level(level)
    return 1 << level


def cell_center(c: CellCoord) -> WorldPoint:
    half = cell_width(c.level) / 2
    return WorldPoint(c.i + half, c.j + half, c.k + half)


def anchor_mask(x: int, level: int) -> int:
    """Largest multiple of ``2**level`` that is <= ``x``.

    Two's-complement masking gives floor semantics for negative ``x`` too.
    """
    _check_level(level)
    return x & ~((1 << level) - 1)


def cell_key(c: CellCoord) -> tuple[int, int, int, int]:
    return (c.i, c.j, c.k, c.level)


def cell_key_compare(a: CellCoord, b: CellCoord) -> int:
    """Three-way compare on (i, j, k, level); returns -1, 0 or 1."""
    ka, kb = cell_key(a), cell_key(b)
    return (ka > kb) - (ka < kb)


def is_aligned(c: CellCoord) -> bool:
    w = 1 << c.level
    return c.i % w == 0 and c.j % w == 0 and c.k % w == 0


def centers_of(coords: np.ndarray, levels: np.ndarray) -> np.ndarray:
    """Vectorised :func:`cell_center` for ``(n, 3)`` anchors."""
    half = np.left_shift(np.int64(1), levels.astype(np.int64)).astype(np.float64) / 2
    return coords.astype(np.float64) + half[:, None]


@dataclass(frozen=True, eq=False)
class AmrDataset:
    """Cells sorted by ``(i, j, k, level)`` with one scalar per cell.

    Build instances with :meth:`from_cells`, which sorts and checks the
    per-cell invariants. Overlap between cells is not checked here; see
    :func:`amrdual.locator.validate_dataset`.
    """

    coords: np.ndarray  # (n, 3) int64 anchors
    levels: np.ndarray  # (n,) int64
    scalars: np.ndarray  # (n,) float64
    max_level: int
    bbox: tuple[tuple[int, int, int], tuple[int, int, int]]
    level_set: tuple[int, ...] = field(default=())

    def __len__(self) -> int:
        return len(self.levels)

    def cell(self, cell_id: int) -> CellCoord:
        i, j, k = (int(v) for v in self.coords[cell_id])
        return CellCoord(i, j, k, int(self.levels[cell_id]))

    def cells(self) -> list[CellCoord]:
        return [CellCoord(*row) for row in np.column_stack([self.coords, self.levels]).tolist()]

    def centers(self) -> np.ndarray:
        return centers_of(self.coords, self.levels)

    @classmethod
    def from_cells(
        cls,
        cells: Sequence[CellCoord] | np.ndarray,
        scalars: Sequence[float] | np.ndarray,
    ) -> AmrDataset:
        """Sort ``cells`` canonically, permuting ``scalars`` alongside.

        Raises :class:`AmrLoadError` naming the first offending record on an
        empty input, length mismatch, level out of range, misaligned anchor,
        out-of-range coordinate or non-finite scalar.
        """
        arr = np.asarray(cells, dtype=np.int64)
        if arr.size == 0:
            raise AmrLoadError("dataset contains no cells")
        arr = arr.reshape(-1, 4)
        vals = np.asarray(scalars, dtype=np.float64).reshape(-1)
        if len(vals) != len(arr):
            raise AmrLoadError(f"{len(arr)} cells but {len(vals)} scalars")

        coords, levels = arr[:, :3], arr[:, 3]
        bad = np.flatnonzero((levels < 0) | (levels > MAX_LEVEL))
        if len(bad):
            raise AmrLoadError(f"level {levels[bad[0]]} outside [0, {MAX_LEVEL}]", int(bad[0]))
        bad = np.flatnonzero(((coords < INT32_MIN) | (coords > INT32_MAX)).any(axis=1))
        if len(bad):
            raise AmrLoadError("anchor outside signed 32-bit range", int(bad[0]))
        width = np.left_shift(np.int64(1), levels)
        bad = np.flatnonzero((coords % width[:, None] != 0).any(axis=1))
        if len(bad):
            b = int(bad[0])
            raise AmrLoadError(
                f"anchor {tuple(coords[b].tolist())} is not a multiple of {width[b]} (level {levels[b]})",
                b,
            )
        bad = np.flatnonzero(~np.isfinite(vals))
        if len(bad):
            raise AmrLoadError(f"non-finite scalar {vals[bad[0]]}", int(bad[0]))

        order = np.lexsort((levels, coords[:, 2], coords[:, 1], coords[:, 0]))
        coords = np.ascontiguousarray(coords[order])
        levels = np.ascontiguousarray(levels[order])
        vals = np.ascontiguousarray(vals[order])
        width = width[order]
        lo = coords.min(axis=0)
        hi = (coords + width[:, None]).max(axis=0)
        level_set = tuple(int(v) for v in np.unique(levels))
        for a in (coords, levels, vals):
            a.setflags(write=False)
        return cls(
            coords=coords,
            levels=levels,
            scalars=vals,
            max_level=level_set[-1],
            bbox=(tuple(int(v) for v in lo), tuple(int(v) for v in hi)),
            level_set=level_set,
        )
