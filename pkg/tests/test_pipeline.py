import numpy as np
import pytest

from amrdual.core import AmrDataset
from amrdual import FieldSpec, IsoParams, extract_dual_mesh, extract_isosurface, gen_blocks, gen_octree, gen_uniform
from amrdual.pipeline import ExtractionError, resolve_threads, THREADS_ENV
from amrdual.synth import dual_key, exhaustive_duals, uniform_mc_reference

from conftest import SPHERE16, edge_incidence, random_dataset


def test_iso_params_validation():
    with pytest.raises(ValueError):
        IsoParams(float("nan"))
    with pytest.raises(ValueError):
        IsoParams(0.0, thread_count=0)
    with pytest.raises(ValueError):
        IsoParams(0.0, thread_count="many")


def test_resolve_threads(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "3")
    assert resolve_threads("auto") == 3
    assert resolve_threads(5) == 5
    monkeypatch.delenv(THREADS_ENV)
    assert resolve_threads("auto") >= 1


def test_sphere16_matches_reference(sphere16):
    mesh, stats = extract_isosurface(sphere16, IsoParams(0.0))
    ref = uniform_mc_reference(sphere16, 0.0)
    assert len(mesh.triangles) == len(ref.triangles) and len(mesh.vertices) == len(ref.vertices)
    assert mesh.vertices.tobytes() == ref.vertices.tobytes()
    assert edge_incidence(mesh.triangles) == {2: len(mesh.triangles) * 3 // 2}


def test_iso_below_minimum_is_empty(octree_sphere):
    mesh, stats = extract_isosurface(octree_sphere, IsoParams(float(octree_sphere.scalars.min()) - 1))
    assert len(mesh.triangles) == 0 and len(mesh.vertices) == 0
    assert stats.fat_triangle_count == 0


def test_octree_watertight(octree_sphere):
    mesh, stats = extract_isosurface(octree_sphere, IsoParams(0.0))
    assert len(mesh.triangles) > 0
    assert set(edge_incidence(mesh.triangles)) == {2}


@pytest.mark.parametrize("iso", [-0.6, 0.0, 0.35])
def test_blocks_with_holes_counts(block_fixture, iso):
    mesh, stats = extract_isosurface(block_fixture, IsoParams(iso))
    assert stats.duals_rejected_rule1 > 0
    total = stats.duals_accepted + stats.duals_rejected_rule1 + stats.duals_rejected_rule2 + stats.duals_rejected_rule3
    assert total == 8 * len(block_fixture) == 8 * stats.cell_count
    assert stats.fat_triangle_count == stats.pass2_triangle_count
    assert stats.welded_triangle_count == len(mesh.triangles) == stats.fat_triangle_count
    assert (mesh.triangles[:, 0] != mesh.triangles[:, 1]).all()


def test_emit_dual_mesh(block_fixture):
    mesh, stats = extract_isosurface(block_fixture, IsoParams(0.0, emit_dual_mesh=True))
    assert stats.duals is not None and len(stats.duals) == stats.duals_accepted


def test_dual_mesh_examples():
    assert len(extract_dual_mesh(gen_uniform(3, SPHERE16))) == 8
    assert extract_dual_mesh(gen_uniform(1, SPHERE16)) == []


def test_dual_mesh_order_and_oracle():
    ds = gen_blocks([((0, 0, 0), (4, 4, 2), 0), ((4, 0, 0), (2, 2, 1), 1)], FieldSpec.linear((0, 0, 1)))
    duals = extract_dual_mesh(ds)
    owners = [d.owner for d in duals]
    assert owners == sorted(owners)
    assert {dual_key(d.corners) for d in duals} == set(exhaustive_duals(ds))


def test_single_cell_all_rule1():
    ds = AmrDataset.from_cells([(0, 0, 0, 0)], [1.0])
    mesh, stats = extract_isosurface(ds, IsoParams(0.5))
    assert stats.duals_rejected_rule1 == 8 and len(mesh.triangles) == 0


@pytest.mark.parametrize("threads", [1, 2, 4])
def test_thread_count_invariance(threads, rng):
    ds = random_dataset(np.random.default_rng(99), depth=5, drop=0.05)
    base, _ = extract_isosurface(ds, IsoParams(0.1, thread_count=1))
    mesh, _ = extract_isosurface(ds, IsoParams(0.1, thread_count=threads))
    assert mesh.vertices.tobytes() == base.vertices.tobytes()
    assert mesh.triangles.tobytes() == base.triangles.tobytes()


def test_chunking_invariance(monkeypatch):
    import amrdual.pipeline as pipeline

    ds = gen_octree(5, FieldSpec.sphere((15.2, 16.1, 16.7), 9.0), 0.0, iso=0.0)
    base, _ = extract_isosurface(ds, IsoParams(0.0))
    monkeypatch.setattr(pipeline, "CHUNK_CELLS", 37)
    mesh, stats = extract_isosurface(ds, IsoParams(0.0, thread_count=3))
    assert mesh.vertices.tobytes() == base.vertices.tobytes()
    assert mesh.triangles.tobytes() == base.triangles.tobytes()
    assert stats.fat_triangle_count == stats.pass2_triangle_count


def test_output_limit(monkeypatch, sphere16):
    import amrdual.pipeline as pipeline

    monkeypatch.setattr(pipeline, "MAX_TRIANGLES", 10)
    with pytest.raises(ExtractionError):
        extract_isosurface(sphere16, IsoParams(0.0))


def test_stats_lines(sphere16):
    _, stats = extract_isosurface(sphere16, IsoParams(0.0))
    lines = dict(line.split("=") for line in stats.as_lines())
    assert int(lines["welded_triangle_count"]) == 956
    assert int(lines["welded_vertex_count"]) == 480
    assert float(lines["time_weld"]) >= 0
