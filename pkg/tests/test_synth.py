import math

import numpy as np
import pytest

from amrdual import FieldSpec, gen_blocks, gen_octree, gen_uniform, validate_dataset
from amrdual.locator import CellIndex
from amrdual.synth import exhaustive_duals, hex_volume, uniform_mc_reference

from conftest import macro_blocks


def face_level_jumps(ds) -> int:
    """Largest level difference between face-adjacent cells, by probing just outside each face."""
    idx = CellIndex(ds)
    w = np.left_shift(1, ds.levels)
    best = 0
    for axis in range(3):
        for side in (-1, 1):
            probe = ds.coords.copy()
            probe[:, axis] += np.where(side > 0, w, -1)
            hit = idx.snap_many(probe)
            ok = hit >= 0
            if ok.any():
                best = max(best, int(np.abs(ds.levels[ok] - ds.levels[hit[ok]]).max()))
    return best


@pytest.mark.parametrize(
    "text,kind",
    [("sphere:8,8,8,5", "sphere"), ("linear:1,0,0,2", "linear"), ("radial-sine:4,4,4,0.5", "radial-sine")],
)
def test_field_parse(text, kind):
    f = FieldSpec.parse(text)
    assert f.kind == kind
    assert f(np.zeros((2, 3))).shape == (2,)


def test_field_values():
    assert FieldSpec.sphere((0, 0, 0), 1)(np.array([[3.0, 4.0, 0.0]]))[0] == 4.0
    assert FieldSpec.linear((1, 2, 3), 1)(np.array([[1.0, 1.0, 1.0]]))[0] == 7.0
    assert FieldSpec.radial_sine((0, 0, 0), 2)(np.array([[0.0, 0.0, 1.0]]))[0] == math.sin(2.0)


@pytest.mark.parametrize("text", ["cube:1,2", "sphere:1,2", "sphere:1,2,3,nan", "linear:a,b,c,d"])
def test_field_parse_rejects(text):
    with pytest.raises(ValueError):
        FieldSpec.parse(text)


def test_uniform_examples():
    f = FieldSpec.linear((1, 0, 0))
    assert len(gen_uniform(1, f)) == 1
    ds = gen_uniform(2, f)
    assert len(ds) == 8
    assert set(ds.centers().reshape(-1).tolist()) == {0.5, 1.5}
    assert validate_dataset(CellIndex(gen_uniform(16, FieldSpec.sphere((8, 8, 8), 5)))).clean


def test_octree_examples():
    f = FieldSpec.sphere((8, 8, 8), 5)
    assert len(gen_octree(4, f, math.inf)) == 1
    assert len(gen_octree(3, FieldSpec.linear((1, 1, 1)), 0.0)) == 8**3


@pytest.mark.parametrize(
    "depth,center,radius",
    [(3, (2.3, 2.2, 2.1), 1.5), (4, (8.3, 7.8, 8.1), 5.3), (5, (16.3, 15.8, 16.1), 10.7)],
)
def test_octree_partition_and_jumps(depth, center, radius):
    ds = gen_octree(depth, FieldSpec.sphere(center, radius), 0.0, iso=0.0)
    assert validate_dataset(CellIndex(ds)).clean
    assert int((np.left_shift(1, ds.levels) ** 3).sum()) == 8**depth
    assert len(set(ds.levels.tolist())) > 1
    assert face_level_jumps(ds) >= 2


def test_octree_pure_range_criterion_partitions():
    ds = gen_octree(4, FieldSpec.radial_sine((3, 5, 7), 0.7), 1.0)
    assert int((np.left_shift(1, ds.levels) ** 3).sum()) == 16**3
    assert validate_dataset(CellIndex(ds)).clean


def test_blocks_examples():
    f = FieldSpec.linear((1, 0, 0))
    assert len(gen_blocks([((0, 0, 0), (2, 2, 2), 0)], f)) == 8
    ds = gen_blocks([((0, 0, 0), (4, 4, 4), 0), ((4, 0, 0), (1, 1, 1), 2)], f)
    assert validate_dataset(CellIndex(ds)).clean
    assert face_level_jumps(ds) == 2
    assert len(exhaustive_duals(ds)) > 0


@pytest.mark.parametrize(
    "blocks",
    [
        [((0, 0, 0), (2, 2, 2), 0), ((1, 1, 1), (2, 2, 2), 0)],
        [((0, 0, 0), (2, 2, 2), 1), ((2, 2, 2), (1, 1, 1), 0)],
        [((1, 0, 0), (1, 1, 1), 1)],
    ],
)
def test_blocks_rejects(blocks):
    with pytest.raises(ValueError):
        gen_blocks(blocks, FieldSpec.linear((1, 0, 0)))


def test_blocks_hole():
    ds = gen_blocks([((0, 0, 0), (4, 4, 4), 0)], FieldSpec.linear((1, 0, 0)), holes=[((1, 1, 1), (3, 3, 3))])
    assert len(ds) == 64 - 8
    assert validate_dataset(CellIndex(ds)).clean


def test_macro_blocks_valid(rng):
    for _ in range(10):
        ds = gen_blocks(macro_blocks(rng), FieldSpec.sphere((8, 8, 8), 5))
        assert validate_dataset(CellIndex(ds)).clean


def test_exhaustive_examples():
    f = FieldSpec.linear((1, 0, 0))
    assert len(exhaustive_duals(gen_uniform(2, f))) == 1
    assert exhaustive_duals(gen_uniform(1, f)) == {}


def test_hex_volume():
    unit = np.array([[(x, y, z) for z in (0, 1) for y in (0, 1) for x in (0, 1)]], dtype=float)
    assert hex_volume(unit)[0] == pytest.approx(1.0)
    assert hex_volume(unit * 2)[0] == pytest.approx(8.0)
    flat = unit.copy()
    flat[0, :, 2] = 0
    assert hex_volume(flat)[0] == pytest.approx(0.0)


def test_reference_examples():
    f = FieldSpec.linear((1, 0, 0))
    ds = gen_uniform(2, f)
    assert len(uniform_mc_reference(ds, -10.0).triangles) == 0
    scalars = np.zeros(8)
    scalars[0] = 1.0
    one = type(ds).from_cells(ds.cells(), scalars)
    assert len(uniform_mc_reference(one, 0.5).triangles) == 1
