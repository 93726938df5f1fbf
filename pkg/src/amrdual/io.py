"""Cell-list input and mesh output formats.

Binary cell list (``.amr``), all little-endian::

    magic        8 bytes  b"AMRCELL1"
    version      uint32   1
    cell_count   uint64   >= 1
    field_count  uint32   1
    cell_count x {i, j, k, level: int32; scalar: float64}

The text twin (any other extension, e.g. ``.txt``) holds one
``i j k level scalar`` line per cell; blank lines and ``#`` comments are
ignored.
"""
from __future__ import annotations

import os
import struct
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import AmrDataset, AmrLoadError
from .dualgen import DualCell
from .pipeline import DualMesh
from .weld import IndexedMesh

MAGIC = b"AMRCELL1"
VERSION = 1
TOOL_NAME = "amrdual"

_HEADER = struct.Struct("<8sIQI")
_RECORD = np.dtype(
    [("i", "<i4"), ("j", "<i4"), ("k", "<i4"), ("level", "<i4"), ("scalar", "<f8")]
)


def is_binary_path(path: str | os.PathLike) -> bool:
    return Path(path).suffix.lower() == ".amr"


def read_amr(path: str | os.PathLike) -> AmrDataset:
    if is_binary_path(path):
        cells, scalars = _read_binary(Path(path))
    else:
        cells, scalars = _read_text(Path(path))
    return AmrDataset.from_cells(cells, scalars)


def _read_binary(path: Path) -> tuple[np.ndarray, np.ndarray]:
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise AmrLoadError(f"{path}: truncated header ({len(data)} bytes)")
    magic, version, count, nfields = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise AmrLoadError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise AmrLoadError(f"{path}: unsupported version {version}")
    if nfields != 1:
        raise AmrLoadError(f"{path}: field_count {nfields} unsupported (expected 1)")
    if count < 1:
        raise AmrLoadError(f"{path}: cell_count is 0")
    body = len(data) - _HEADER.size
    have = body // _RECORD.itemsize
    if have < count:
        raise AmrLoadError(f"{path}: truncated after {have} of {count} records", have)
    if body != count * _RECORD.itemsize:
        raise AmrLoadError(f"{path}: {body - count * _RECORD.itemsize} trailing bytes")
    rec = np.frombuffer(data, dtype=_RECORD, count=count, offset=_HEADER.size)
    cells = np.column_stack([rec["i"], rec["j"], rec["k"], rec["level"]]).astype(np.int64)
    return cells, rec["scalar"].astype(np.float64)


def _read_text(path: Path) -> tuple[np.ndarray, np.ndarray]:
    cells, scalars = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            record = len(cells)
            if len(parts) != 5:
                raise AmrLoadError(f"{path}:{lineno}: expected 'i j k level scalar'", record)
            try:
                cells.append([int(p) for p in parts[:4]])
                scalars.append(float(parts[4]))
            except ValueError:
                raise AmrLoadError(f"{path}:{lineno}: unparsable value in {line!r}", record) from None
    if not cells:
        raise AmrLoadError(f"{path}: no cells")
    return np.array(cells, dtype=np.int64), np.array(scalars, dtype=np.float64)


def write_amr(dataset: AmrDataset, path: str | os.PathLike) -> None:
    """Write ``dataset`` in the format chosen by the extension of ``path``."""
    path = Path(path)
    if is_binary_path(path):
        rec = np.empty(len(dataset), dtype=_RECORD)
        for name, col in zip("ijk", dataset.coords.T):
            rec[name] = col
        rec["level"] = dataset.levels
        rec["scalar"] = dataset.scalars
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, VERSION, len(dataset), 1))
            fh.write(rec.tobytes())
        return
    rows = np.column_stack([dataset.coords, dataset.levels]).tolist()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# i j k level scalar\n")
        for (i, j, k, lvl), v in zip(rows, dataset.scalars.tolist()):
            fh.write(f"{i} {j} {k} {lvl} {v!r}\n")


def write_obj(mesh: IndexedMesh, path: str | os.PathLike) -> None:
    nv, nt = len(mesh.vertices), len(mesh.triangles)
    lines = [f"# {TOOL_NAME} vertices={nv} triangles={nt}"]
    lines += [f"v {x!r} {y!r} {z!r}" for x, y, z in mesh.vertices.tolist()]
    lines += [f"f {a} {b} {c}" for a, b, c in (mesh.triangles + 1).tolist()]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


_PLY_FACE = np.dtype([("n", "u1"), ("idx", "<u4", (3,))])


def write_ply(mesh: IndexedMesh, path: str | os.PathLike) -> None:
    nv, nt = len(mesh.vertices), len(mesh.triangles)
    header = (
        "ply\n"
        "format binary_little_endian 1.0\n"
        f"comment {TOOL_NAME}\n"
        f"element vertex {nv}\n"
        "property float x\n"
        "property float y\n"
        "property float z\n"
        f"element face {nt}\n"
        "property list uchar uint vertex_indices\n"
        "end_header\n"
    )
    faces = np.empty(nt, dtype=_PLY_FACE)
    faces["n"] = 3
    faces["idx"] = mesh.triangles
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(mesh.vertices.astype("<f4").tobytes())
        fh.write(faces.tobytes())


def write_dual_mesh(
    duals: DualMesh | Sequence[DualCell], dataset: AmrDataset, path: str | os.PathLike
) -> None:
    """One line per dual: 8 corner centers (x y z each) then the 8 scalars.

    Corners follow the ``dz*4 + dy*2 + dx`` order.
    """
    if isinstance(duals, DualMesh):
        corners = duals.corners
    else:
        corners = np.array([d.corners for d in duals], dtype=np.int64).reshape(-1, 8)
    centers = dataset.centers()
    pos = centers[corners].reshape(len(corners), 24).tolist()
    vals = dataset.scalars[corners].tolist()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {TOOL_NAME} dual mesh: 8 corner positions (dz,dy,dx order), then 8 scalars\n")
        fh.write(f"duals {len(corners)}\n")
        for p, v in zip(pos, vals):
            fh.write(" ".join(repr(x) for x in p + v))
            fh.write("\n")


def read_dual_mesh(path: str | os.PathLike) -> tuple[np.ndarray, np.ndarray]:
    """Parse :func:`write_dual_mesh` output into ``(m, 8, 3)`` positions and ``(m, 8)`` scalars."""
    rows = []
    count = None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            if count is None:
                tag, n = line.split()
                if tag != "duals":
                    raise ValueError(f"{path}: missing 'duals' count line")
                count = int(n)
                continue
            rows.append([float(x) for x in line.split()])
    data = np.array(rows, dtype=np.float64).reshape(-1, 32)
    if count is None or len(data) != count:
        raise ValueError(f"{path}: header count {count} != {len(data)} rows")
    return data[:, :24].reshape(-1, 8, 3), data[:, 24:]

