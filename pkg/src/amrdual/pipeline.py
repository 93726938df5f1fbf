"""End-to-end iso-surface extraction.

The work is ``8 * N`` independent tasks, one per (cell, dual slot). Pass 1
runs every task and only counts its surviving triangles; an exclusive prefix
sum over the counts gives each task its output offset; pass 2 runs the same
tasks again and writes into a buffer of exactly the counted size. The fat
triangles are then welded. Task order fixes output order, so results are
identical for any thread count.
"""
from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Literal, TypeVar, Union

import numpy as np

from .contour import contour_batch
from .core import AmrDataset
from .dualgen import ACCEPTED, FINER, MISSING, SMALLER, DualCell, build_duals_batch, dual_bases_batch
from .locator import CellIndex
from .weld import IndexedMesh, weld

log = logging.getLogger(__name__)

THREADS_ENV = "AMRDUAL_THREADS"
CHUNK_CELLS = 1 << 15
MAX_TRIANGLES = 2**31 - 1

T = TypeVar("T")


class ExtractionError(RuntimeError):
    pass


@dataclass(frozen=True)
class IsoParams:
    iso: float
    emit_dual_mesh: bool = False
    thread_count: Union[int, Literal["auto"]] = "auto"

    def __post_init__(self):
        if not math.isfinite(self.iso):
            raise ValueError(f"iso must be finite, got {self.iso}")
        if self.thread_count != "auto" and (
            not isinstance(self.thread_count, int) or self.thread_count < 1
        ):
            raise ValueError(f"thread_count must be a positive int or 'auto', got {self.thread_count!r}")


@dataclass
class DualMesh:
    """Accepted duals as arrays, in (cell, slot) task order."""

    corners: np.ndarray  # (m, 8) cell ids
    base: np.ndarray  # (m, 3)
    level: np.ndarray  # (m,)
    owner: np.ndarray  # (m,)

    def __len__(self) -> int:
        return len(self.owner)

    def to_cells(self) -> list[DualCell]:
        return [
            DualCell(tuple(c), tuple(b), lvl, o)
            for c, b, lvl, o in zip(
                self.corners.tolist(), self.base.tolist(), self.level.tolist(), self.owner.tolist()
            )
        ]


@dataclass
class ExtractionStats:
    cell_count: int = 0
    duals_accepted: int = 0
    duals_rejected_rule1: int = 0
    duals_rejected_rule2: int = 0
    duals_rejected_rule3: int = 0
    fat_triangle_count: int = 0
    pass2_triangle_count: int = 0
    welded_vertex_count: int = 0
    welded_triangle_count: int = 0
    time_sort: float = 0.0
    time_pass1: float = 0.0
    time_pass2: float = 0.0
    time_weld: float = 0.0
    duals: DualMesh | None = field(default=None, repr=False)

    def as_lines(self) -> list[str]:
        keys = [
            "cell_count", "duals_accepted", "duals_rejected_rule1", "duals_rejected_rule2",
            "duals_rejected_rule3", "fat_triangle_count", "pass2_triangle_count", "welded_vertex_count",
            "welded_triangle_count", "time_sort", "time_pass1", "time_pass2", "time_weld",
        ]
        out = []
        for k in keys:
            v = getattr(self, k)
            out.append(f"{k}={v:.6f}" if isinstance(v, float) else f"{k}={v}")
        return out


def resolve_threads(thread_count: int | str = "auto") -> int:
    if thread_count == "auto":
        env = os.environ.get(THREADS_ENV)
        if env:
            return max(1, int(env))
        return os.cpu_count() or 1
    return int(thread_count)


def _map(fn: Callable[..., T], items: Iterable, threads: int) -> list[T]:
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(*it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda it: fn(*it), items))


def _chunks(n: int) -> list[tuple[int, int]]:
    return [(s, min(s + CHUNK_CELLS, n)) for s in range(0, n, CHUNK_CELLS)]


class _Extractor:
    """Per-chunk task runner shared by both passes."""

    def __init__(self, index: CellIndex, iso: float):
        self.index = index
        self.iso = iso
        self.centers = index.dataset.centers()
        self.scalars = index.dataset.scalars

    def run(self, start: int, stop: int):
        """Returns per-task triangle counts, the triangles, and rule tallies."""
        cells = np.arange(start, stop, dtype=np.int64)
        corners, rule = build_duals_batch(self.index, cells)
        tally = np.bincount(rule.reshape(-1), minlength=4)
        acc_task = np.flatnonzero(rule.reshape(-1) == ACCEPTED)
        acc = corners.reshape(-1, 8)[acc_task]
        # cases 0 and 255 emit nothing; skip them before contouring
        above = self.scalars[acc] > self.iso
        mixed = above.any(axis=1) & ~above.all(axis=1)
        tris, row = contour_batch(acc[mixed], self.centers, self.scalars, self.iso)
        counts = np.bincount(acc_task[mixed][row], minlength=8 * len(cells))
        return counts, tris, tally


def extract_isosurface(
    dataset: AmrDataset | CellIndex, params: IsoParams
) -> tuple[IndexedMesh, ExtractionStats]:
    stats = ExtractionStats()
    threads = resolve_threads(params.thread_count)

    t0 = time.perf_counter()
    index = dataset if isinstance(dataset, CellIndex) else CellIndex(dataset)
    n = len(index)
    if n == 0:
        raise ExtractionError("dataset is empty")
    stats.cell_count = n
    ex = _Extractor(index, params.iso)
    spans = _chunks(n)
    stats.time_sort = time.perf_counter() - t0

    t0 = time.perf_counter()
    pass1 = _map(lambda a, b: ex.run(a, b)[0], spans, threads)
    counts = np.concatenate(pass1)
    offsets = np.zeros(len(counts) + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    total = int(offsets[-1])
    if total > MAX_TRIANGLES:
        raise ExtractionError(f"{total} triangles exceed the output limit {MAX_TRIANGLES}")
    stats.time_pass1 = time.perf_counter() - t0

    t0 = time.perf_counter()
    fat = np.empty((total, 3, 3), dtype=np.float64)
    tally = np.zeros(4, dtype=np.int64)

    def emit(start: int, stop: int) -> tuple[np.ndarray, int]:
        _, tris, chunk_tally = ex.run(start, stop)
        lo, hi = offsets[8 * start], offsets[8 * stop]
        if len(tris) != hi - lo:
            raise ExtractionError(
                f"cells {start}:{stop} emitted {len(tris)} triangles, pass 1 counted {hi - lo}"
            )
        fat[lo:hi] = tris
        return chunk_tally, len(tris)

    written = 0
    for chunk_tally, n_tris in _map(emit, spans, threads):
        tally += chunk_tally
        written += n_tris
    stats.pass2_triangle_count = written
    stats.time_pass2 = time.perf_counter() - t0

    stats.duals_accepted = int(tally[ACCEPTED])
    stats.duals_rejected_rule1 = int(tally[MISSING])
    stats.duals_rejected_rule2 = int(tally[FINER])
    stats.duals_rejected_rule3 = int(tally[SMALLER])
    stats.fat_triangle_count = total
    if int(tally.sum()) != 8 * n or written != total:
        raise ExtractionError(f"task accounting mismatch: {tally.tolist()} for {n} cells, {written}/{total} triangles")

    t0 = time.perf_counter()
    mesh = weld(fat)
    stats.time_weld = time.perf_counter() - t0
    stats.welded_vertex_count = len(mesh.vertices)
    stats.welded_triangle_count = len(mesh.triangles)

    if params.emit_dual_mesh:
        stats.duals = dual_mesh_arrays(index, threads)
    log.debug("extraction stats: %s", " ".join(stats.as_lines()))
    return mesh, stats


def dual_mesh_arrays(dataset: AmrDataset | CellIndex, threads: int | str = 1) -> DualMesh:
    index = dataset if isinstance(dataset, CellIndex) else CellIndex(dataset)
    n = len(index)
    if n == 0:
        raise ExtractionError("dataset is empty")
    levels = index.dataset.levels

    def run(start: int, stop: int) -> DualMesh:
        cells = np.arange(start, stop, dtype=np.int64)
        corners, rule = build_duals_batch(index, cells)
        ok = rule.reshape(-1) == ACCEPTED
        owner = np.repeat(cells, 8)[ok]
        return DualMesh(
            corners.reshape(-1, 8)[ok],
            dual_bases_batch(index, cells).reshape(-1, 3)[ok],
            levels[owner],
            owner,
        )

    parts = _map(run, _chunks(n), resolve_threads(threads))
    return DualMesh(*(np.concatenate([getattr(p, f) for p in parts]) for f in ("corners", "base", "level", "owner")))


def extract_dual_mesh(dataset: AmrDataset | CellIndex, threads: int | str = 1) -> list[DualCell]:
    return dual_mesh_arrays(dataset, threads).to_cells()
