"""Turn a fat triangle soup into an indexed face set."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .contour import FatTriangle


@dataclass(eq=False)
class IndexedMesh:
    vertices: np.ndarray  # (v, 3) float64
    triangles: np.ndarray  # (t, 3) int64, 0-based

    @classmethod
    def empty(cls) -> IndexedMesh:
        return cls(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))

    def expand(self) -> np.ndarray:
        return self.vertices[self.triangles]


def as_fat_array(fat: np.ndarray | Sequence[FatTriangle]) -> np.ndarray:
    if isinstance(fat, np.ndarray):
        return fat.reshape(-1, 3, 3).astype(np.float64, copy=False)
    return np.array([[t.v0, t.v1, t.v2] for t in fat], dtype=np.float64).reshape(-1, 3, 3)


def weld(fat: np.ndarray | Sequence[FatTriangle]) -> IndexedMesh:
    """Merge bit-identical vertex positions.

    The ``3T`` vertices are sorted by ``(x, y, z)``; a vertex equal to its
    sorted predecessor reuses that index, any other gets the next fresh one.
    Vertex numbering therefore follows sorted position and does not depend
    on triangle order.
    """
    fat = as_fat_array(fat)
    if len(fat) == 0:
        return IndexedMesh.empty()
    # + 0.0 folds -0.0 into 0.0 so equal-comparing values share bits
    flat = fat.reshape(-1, 3) + 0.0
    order = np.lexsort((flat[:, 2], flat[:, 1], flat[:, 0]))
    ordered = flat[order]
    bits = ordered.view(np.uint64)
    fresh = np.ones(len(ordered), dtype=bool)
    fresh[1:] = (bits[1:] != bits[:-1]).any(axis=1)
    ids = np.empty(len(ordered), dtype=np.int64)
    ids[order] = np.cumsum(fresh) - 1
    return IndexedMesh(np.ascontiguousarray(ordered[fresh]), ids.reshape(-1, 3))
