"""Synthetic AMR datasets and independent reference constructions.

The generators cover uniform grids, octrees, and block-structured layouts
with holes and arbitrary level jumps. The two references share no code with
the snapping pipeline: :func:`exhaustive_duals` paints the cells into a dense
finest-level grid and snaps every unit dual, and
:func:`uniform_mc_reference` runs plain Marching Cubes on a dense grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from ._mc_table import BOURKE_EDGES, BOURKE_TRIANGLES
from .core import AmrDataset
from .weld import IndexedMesh, weld

_CORNERS = np.array([(n & 1, (n >> 1) & 1, (n >> 2) & 1) for n in range(8)], dtype=np.int64)

FIELD_KINDS = {"sphere": 4, "linear": 4, "radial-sine": 4}


@dataclass(frozen=True)
class FieldSpec:
    """Analytic scalar field evaluated at world points.

    * ``sphere``: params ``(cx, cy, cz, radius)``, distance to center minus radius
    * ``linear``: params ``(gx, gy, gz, offset)``, ``g . p + offset``
    * ``radial-sine``: params ``(cx, cy, cz, frequency)``, ``sin(frequency * |p - c|)``
    """

    kind: str
    params: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in FIELD_KINDS:
            raise ValueError(f"unknown field kind {self.kind!r}; expected one of {sorted(FIELD_KINDS)}")
        if len(self.params) != FIELD_KINDS[self.kind]:
            raise ValueError(f"{self.kind} takes {FIELD_KINDS[self.kind]} parameters, got {len(self.params)}")
        if not all(math.isfinite(p) for p in self.params):
            raise ValueError(f"non-finite field parameter in {self.params}")

    @classmethod
    def parse(cls, text: str) -> FieldSpec:
        """Parse ``kind:p1,p2,...``, e.g. ``sphere:8,8,8,5``."""
        kind, _, rest = text.partition(":")
        try:
            params = tuple(float(v) for v in rest.split(",")) if rest else ()
        except ValueError:
            raise ValueError(f"bad field parameters in {text!r}") from None
        return cls(kind.strip(), params)

    @classmethod
    def sphere(cls, center: Sequence[float], radius: float) -> FieldSpec:
        return cls("sphere", (*map(float, center), float(radius)))

    @classmethod
    def linear(cls, gradient: Sequence[float], offset: float = 0.0) -> FieldSpec:
        return cls("linear", (*map(float, gradient), float(offset)))

    @classmethod
    def radial_sine(cls, center: Sequence[float], frequency: float) -> FieldSpec:
        return cls("radial-sine", (*map(float, center), float(frequency)))

    def __call__(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        a, b, c, s = self.params
        if self.kind == "linear":
            return a * p[:, 0] + b * p[:, 1] + c * p[:, 2] + s
        dx, dy, dz = p[:, 0] - a, p[:, 1] - b, p[:, 2] - c
        r = np.sqrt(dx * dx + dy * dy + dz * dz)
        if self.kind == "sphere":
            return r - s
        return np.sin(s * r)


def _dataset(coords: np.ndarray, levels: np.ndarray, field: FieldSpec) -> AmrDataset:
    half = np.left_shift(np.int64(1), levels).astype(np.float64) / 2
    values = field(coords.astype(np.float64) + half[:, None])
    return AmrDataset.from_cells(np.column_stack([coords, levels]), values)


def gen_uniform(n: int, field: FieldSpec) -> AmrDataset:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    ax = np.arange(n, dtype=np.int64)
    coords = np.stack(np.meshgrid(ax, ax, ax, indexing="ij"), axis=-1).reshape(-1, 3)
    return _dataset(coords, np.zeros(len(coords), dtype=np.int64), field)


def gen_octree(
    depth: int,
    field: FieldSpec,
    threshold: float,
    iso: float | None = None,
    origin: Sequence[int] = (0, 0, 0),
    margin: float = 0.25,
) -> AmrDataset:
    """Recursively refine a level-``depth`` root cell down to level 0.

    A cell splits when the field range over its 8 corners exceeds
    ``threshold``. With ``iso`` given it must also be near the surface: the
    iso-value has to fall inside the interval spanned by the corner and
    center samples, widened on both sides by ``margin`` times its length.
    This refines toward the surface only and leaves multi-level jumps
    between neighbours. Leaves partition the root by construction.
    """
    if depth < 0:
        raise ValueError(f"depth must be >= 0, got {depth}")
    root = np.asarray(origin, dtype=np.int64).reshape(1, 3)
    if (root % (1 << depth)).any():
        raise ValueError(f"origin {tuple(origin)} not aligned to level {depth}")
    active = root
    leaves, leaf_levels = [], []
    for level in range(depth, 0, -1):
        w = 1 << level
        corner_vals = field((active[:, None, :] + _CORNERS * w).reshape(-1, 3)).reshape(-1, 8)
        lo, hi = corner_vals.min(axis=1), corner_vals.max(axis=1)
        split = hi - lo > threshold
        if iso is not None:
            center_vals = field(active + w / 2)
            lo, hi = np.minimum(lo, center_vals), np.maximum(hi, center_vals)
            pad = margin * (hi - lo)
            split &= (lo - pad <= iso) & (iso <= hi + pad)
        leaves.append(active[~split])
        leaf_levels.append(np.full((~split).sum(), level, dtype=np.int64))
        parents = active[split]
        active = (parents[:, None, :] + _CORNERS * (w // 2)).reshape(-1, 3)
    leaves.append(active)
    leaf_levels.append(np.zeros(len(active), dtype=np.int64))
    return _dataset(np.concatenate(leaves), np.concatenate(leaf_levels), field)


def _box_overlap(a_lo, a_hi, b_lo, b_hi) -> bool:
    return all(al < bh and bl < ah for al, ah, bl, bh in zip(a_lo, a_hi, b_lo, b_hi))


def gen_blocks(
    blocks: Iterable[tuple[Sequence[int], Sequence[int], int]],
    field: FieldSpec,
    holes: Iterable[tuple[Sequence[int], Sequence[int]]] = (),
) -> AmrDataset:
    """Cells of rectangular blocks, minus the cells whose center lies in a hole.

    Each block is ``(anchor, size, level)`` with ``size`` counted in cells of
    that level. Holes are half-open ``(lo, hi)`` boxes in level-0 units.
    Overlapping blocks are rejected.
    """
    blocks = [(tuple(map(int, a)), tuple(map(int, s)), int(lvl)) for a, s, lvl in blocks]
    extents = []
    for anchor, size, level in blocks:
        w = 1 << level
        if any(v % w for v in anchor):
            raise ValueError(f"block anchor {anchor} not aligned to level {level}")
        if any(s < 1 for s in size):
            raise ValueError(f"block size {size} must be positive")
        extents.append((anchor, tuple(a + s * w for a, s in zip(anchor, size))))
    for (a, b), (c, d) in combinations(extents, 2):
        if _box_overlap(a, b, c, d):
            raise ValueError(f"blocks {a}-{b} and {c}-{d} overlap")

    coords, levels = [], []
    for anchor, size, level in blocks:
        w = 1 << level
        axes = [a + w * np.arange(s, dtype=np.int64) for a, s in zip(anchor, size)]
        cells = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
        coords.append(cells)
        levels.append(np.full(len(cells), level, dtype=np.int64))
    coords, levels = np.concatenate(coords), np.concatenate(levels)
    if holes:
        centers = coords + (np.left_shift(np.int64(1), levels) / 2)[:, None]
        keep = np.ones(len(coords), dtype=bool)
        for lo, hi in holes:
            keep &= ~((centers >= np.asarray(lo)) & (centers < np.asarray(hi))).all(axis=1)
        coords, levels = coords[keep], levels[keep]
    return _dataset(coords, levels, field)


def paint_grid(dataset: AmrDataset, bbox=None) -> tuple[np.ndarray, np.ndarray]:
    """Dense level-0 grid of containing cell ids (-1 where empty) and its origin."""
    lo, hi = (np.asarray(b, dtype=np.int64) for b in (bbox or dataset.bbox))
    extent = hi - lo
    if (extent <= 0).any() or int(np.prod(extent)) > 128**3:
        raise ValueError(f"bbox extent {tuple(extent)} unsupported for dense painting")
    grid = np.full(tuple(extent), -1, dtype=np.int64)
    width = np.left_shift(np.int64(1), dataset.levels)
    for cid, (anchor, w) in enumerate(zip(dataset.coords - lo, width)):
        a = np.maximum(anchor, 0)
        b = np.minimum(anchor + w, extent)
        if (a < b).all():
            grid[a[0]:b[0], a[1]:b[1], a[2]:b[2]] = cid
    return grid, lo


def dual_key(corners: Iterable[int]) -> tuple[int, ...]:
    """Canonical identity of a dual shape: its sorted distinct corner cells."""
    return tuple(sorted(set(int(c) for c in corners)))


_GAUSS = (0.5 - 0.5 / math.sqrt(3.0), 0.5 + 0.5 / math.sqrt(3.0))


def hex_volume(corner_pos: np.ndarray) -> np.ndarray:
    """Signed volume of trilinear hexahedra, corners ``(m, 8, 3)`` in ``dz*4+dy*2+dx`` order.

    The Jacobian determinant has degree <= 2 per parametric axis, so 2-point
    Gauss quadrature integrates it exactly. Hexes collapsed onto a point, a
    line, or any (possibly curved) surface have zero volume.
    """
    p = np.asarray(corner_pos, dtype=np.float64).reshape(-1, 2, 2, 2, 3)
    diff = np.array([-1.0, 1.0])
    total = np.zeros(len(p))
    for u in _GAUSS:
        for v in _GAUSS:
            for w in _GAUSS:
                wx, wy, wz = np.array([1 - u, u]), np.array([1 - v, v]), np.array([1 - w, w])
                ju = np.einsum("z,y,x,mzyxc->mc", wz, wy, diff, p)
                jv = np.einsum("z,y,x,mzyxc->mc", wz, diff, wx, p)
                jw = np.einsum("z,y,x,mzyxc->mc", diff, wy, wx, p)
                total += np.einsum("mc,mc->m", ju, np.cross(jv, jw)) / 8
    return total


def exhaustive_duals(dataset: AmrDataset, bbox=None, tol: float = 1e-6) -> dict[tuple[int, ...], tuple[int, ...]]:
    """Snap every level-0 dual in ``bbox`` and keep the shapes with volume.

    Returns ``{dual_key: corner ids}`` with corners in ``dz*4 + dy*2 + dx``
    order. Shapes whose trilinear volume is at most ``tol`` (points, lines,
    flat or curved sheets) are discarded as degenerate.
    """
    grid, _ = paint_grid(dataset, bbox)
    nx, ny, nz = grid.shape
    if min(nx, ny, nz) < 2:
        return {}
    rows = np.stack(
        [grid[dx:nx - 1 + dx, dy:ny - 1 + dy, dz:nz - 1 + dz] for dx, dy, dz in _CORNERS.tolist()],
        axis=-1,
    ).reshape(-1, 8)
    rows = rows[(rows >= 0).all(axis=1)]
    rows = np.unique(rows, axis=0)
    if len(rows) == 0:
        return {}
    rows = rows[np.abs(hex_volume(dataset.centers()[rows])) > tol]
    out: dict[tuple[int, ...], tuple[int, ...]] = {}
    for row in rows.tolist():
        out.setdefault(dual_key(row), tuple(row))
    return out


# Table vertex v of a unit cube sits at this offset.
_TABLE_VERTICES = np.array(
    [(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0), (0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1)],
    dtype=np.int64,
)


def uniform_mc_reference(dataset: AmrDataset, iso: float) -> IndexedMesh:
    """Classic Marching Cubes over the cell centers of an all-level-0 dataset.

    Cubes with a missing corner cell are skipped. Edge endpoints are ordered
    by lattice position before interpolating, and degenerate triangles are
    dropped, mirroring the pipeline's vertex conventions.
    """
    if (dataset.levels != 0).any():
        raise ValueError("uniform reference needs an all-level-0 dataset")
    lo = np.asarray(dataset.bbox[0], dtype=np.int64)
    extent = np.asarray(dataset.bbox[1], dtype=np.int64) - lo
    values = np.full(tuple(extent), np.nan)
    present = np.zeros(tuple(extent), dtype=bool)
    rel = dataset.coords - lo
    values[rel[:, 0], rel[:, 1], rel[:, 2]] = dataset.scalars
    present[rel[:, 0], rel[:, 1], rel[:, 2]] = True

    cube = np.stack(np.meshgrid(*(np.arange(max(e - 1, 0)) for e in extent), indexing="ij"), axis=-1).reshape(-1, 3)
    if len(cube) == 0:
        return IndexedMesh.empty()
    corner_pos = cube[:, None, :] + _TABLE_VERTICES  # (m, 8, 3) lattice positions
    ok = present[corner_pos[..., 0], corner_pos[..., 1], corner_pos[..., 2]].all(axis=1)
    cube, corner_pos = cube[ok], corner_pos[ok]
    vals = values[corner_pos[..., 0], corner_pos[..., 1], corner_pos[..., 2]]
    case = ((vals > iso) << np.arange(8)).sum(axis=1)

    tris = []
    for c in np.unique(case):
        table = BOURKE_TRIANGLES[c]
        if not table:
            continue
        sel = np.flatnonzero(case == c)
        for t in range(0, len(table), 3):
            verts = []
            for e in table[t:t + 3]:
                va, vb = BOURKE_EDGES[e]
                pa, pb = corner_pos[sel, va], corner_pos[sel, vb]
                fa, fb = vals[sel, va], vals[sel, vb]
                # lower lattice position first: the cell-key order on level 0
                swap = (_TABLE_VERTICES[vb] < _TABLE_VERTICES[va]).any()
                if swap:
                    pa, pb, fa, fb = pb, pa, fb, fa
                ca = (pa + lo).astype(np.float64) + 0.5
                cb = (pb + lo).astype(np.float64) + 0.5
                s = (iso - fa) / (fb - fa)
                verts.append(ca + s[:, None] * (cb - ca))
            tris.append(np.stack(verts, axis=1))
    if not tris:
        return IndexedMesh.empty()
    fat = np.concatenate(tris)
    p0, p1, p2 = fat[:, 0], fat[:, 1], fat[:, 2]
    distinct = (p0 != p1).any(axis=1) & (p1 != p2).any(axis=1) & (p0 != p2).any(axis=1)
    return weld(fat[distinct])
