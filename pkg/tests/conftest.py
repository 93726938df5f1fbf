from __future__ import annotations

import collections
from pathlib import Path

import numpy as np
import pytest

from amrdual import AmrDataset, FieldSpec, HexInput, WorldPoint, gen_blocks, gen_octree, gen_uniform
from amrdual.contour import EDGE_CORNERS

DATA = Path(__file__).parent / "data"
SPHERE16 = FieldSpec.sphere((8, 8, 8), 5)

_ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    _ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_octree(rng: np.random.Generator, depth: int, p_split: float, origin=(0, 0, 0)) -> list[tuple]:
    """Cells of a random octree; a partition of the root, so valid by construction."""
    out = []

    def rec(i, j, k, level):
        if level > 0 and rng.random() < p_split:
            h = 1 << (level - 1)
            for dz in (0, h):
                for dy in (0, h):
                    for dx in (0, h):
                        rec(i + dx, j + dy, k + dz, level - 1)
        else:
            out.append((i, j, k, level))

    rec(*origin, depth)
    return out


def random_dataset(rng: np.random.Generator, depth: int = 3, p_split: float = 0.6, drop: float = 0.1) -> AmrDataset:
    cells = random_octree(rng, depth, p_split)
    keep = rng.random(len(cells)) >= drop
    if not keep.any():
        keep[0] = True
    cells = [c for c, k in zip(cells, keep) if k]
    return AmrDataset.from_cells(cells, rng.normal(size=len(cells)))


def macro_blocks(rng: np.random.Generator, n_macro: int = 4, size: int = 4, hole_p: float = 0.1):
    """Block-structured layout: a grid of macro blocks, each at a random level in {0,1,2}."""
    blocks = []
    for mx in range(n_macro):
        for my in range(n_macro):
            for mz in range(n_macro):
                if rng.random() < hole_p:
                    continue
                level = int(rng.integers(0, 3))
                cells_per_axis = size >> level
                blocks.append(((mx * size, my * size, mz * size), (cells_per_axis,) * 3, level))
    if not blocks:
        blocks.append(((0, 0, 0), (size,) * 3, 0))
    return blocks


def edge_incidence(triangles: np.ndarray) -> collections.Counter:
    """Histogram: number of triangles incident to each undirected edge."""
    t = np.asarray(triangles)
    if len(t) == 0:
        return collections.Counter()
    e = np.sort(np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
    _, counts = np.unique(e, axis=0, return_counts=True)
    return collections.Counter(counts.tolist())


def sorted_rows(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a).reshape(len(a), -1)
    if len(a) == 0:
        return a
    return a[np.lexsort(a.T[::-1])]


def degenerate_hex(rng):
    """Unit hex whose corners are merged into groups sharing one cell, value and position."""
    pattern = rng.integers(0, 5)
    label = np.arange(8)
    if pattern == 0:  # collapse along one axis: corner pairs differing in that bit
        axis = rng.integers(0, 3)
        label = label & ~(1 << axis)
    elif pattern == 1:  # collapse two axes onto an edge
        drop = rng.choice(3, 2, replace=False)
        label = label & ~((1 << drop[0]) | (1 << drop[1]))
    elif pattern == 2:  # one face onto a single cell (a coarse neighbour)
        axis, side = rng.integers(0, 3), rng.integers(0, 2)
        on_face = ((label >> axis) & 1) == side
        label = np.where(on_face, label[on_face].min(), label)
    elif pattern == 3:  # one edge onto a single cell
        a = int(rng.integers(0, 12))
        ca, cb = EDGE_CORNERS[a]
        label = label.copy()
        label[cb] = label[ca]
    else:  # random partition
        label = rng.integers(0, rng.integers(1, 8), size=8)
    groups = np.unique(label, return_inverse=True)[1]
    cell_of_group = rng.permutation(100)[: groups.max() + 1]
    pos = rng.normal(size=(groups.max() + 1, 3)) * 2
    if rng.random() < 0.3:
        val = rng.integers(-2, 3, size=groups.max() + 1).astype(float)
    else:
        val = rng.normal(size=groups.max() + 1)
    return HexInput(
        tuple(int(cell_of_group[g]) for g in groups),
        tuple(WorldPoint(*pos[g]) for g in groups),
        tuple(float(val[g]) for g in groups),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def sphere16():
    return gen_uniform(16, SPHERE16)


@pytest.fixture(scope="session")
def octree_sphere():
    return gen_octree(4, FieldSpec.sphere((8.3, 7.9, 8.2), 5.0), 0.0, iso=0.0)


@pytest.fixture(scope="session")
def block_fixture():
    return gen_blocks(
        [((0, 0, 0), (8, 8, 4), 0), ((0, 0, 4), (2, 2, 1), 2), ((8, 0, 0), (2, 4, 4), 1)],
        FieldSpec.radial_sine((4, 4, 4), 0.9),
        holes=[((2, 2, 1), (4, 4, 3))],
    )
