"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 load or validation error, 3 runtime
error. Diagnostics go to stderr; data only to the named output files, which
are written through a temporary file so a failed run leaves nothing behind.
"""
from __future__ import annotations

import argparse
import os
import sys
import tempfile
from pathlib import Path
from typing import Callable, Sequence

from . import io
from .core import AmrLoadError
from .locator import CellIndex, validate_dataset
from .pipeline import THREADS_ENV, IsoParams, dual_mesh_arrays, extract_isosurface
from .synth import FieldSpec, gen_blocks, gen_octree, gen_uniform

EXIT_OK, EXIT_USAGE, EXIT_LOAD, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _threads(text: str) -> int | str:
    if text == "auto":
        return text
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer or 'auto', got {text!r}")
    if n < 1:
        raise argparse.ArgumentTypeError(f"thread count must be >= 1, got {n}")
    return n


def _field(text: str) -> FieldSpec:
    try:
        return FieldSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _ints(text: str, n: int) -> tuple[int, ...]:
    vals = tuple(int(v) for v in text.split(","))
    if len(vals) != n:
        raise ValueError
    return vals


def _block(text: str):
    """``i,j,k:nx,ny,nz:level``"""
    try:
        anchor, size, level = text.split(":")
        return _ints(anchor, 3), _ints(size, 3), int(level)
    except ValueError:
        raise argparse.ArgumentTypeError(f"block must look like i,j,k:nx,ny,nz:level, got {text!r}")


def _box(text: str):
    """``x0,y0,z0:x1,y1,z1``"""
    try:
        lo, hi = text.split(":")
        return _ints(lo, 3), _ints(hi, 3)
    except ValueError:
        raise argparse.ArgumentTypeError(f"hole must look like x0,y0,z0:x1,y1,z1, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="amrdual", description="Dual meshes and iso-surfaces of cell-centered AMR data.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ex = sub.add_parser("extract", help="extract an iso-surface mesh")
    ex.add_argument("--input", required=True)
    ex.add_argument("--iso", required=True, type=float)
    ex.add_argument("--output", required=True)
    ex.add_argument("--format", choices=("obj", "ply"))
    ex.add_argument("--threads", type=_threads, default="auto",
                    help=f"worker threads (default: ${THREADS_ENV} or CPU count)")
    ex.add_argument("--stats", action="store_true", help="print key=value statistics to stderr")
    ex.add_argument("--validate", action="store_true", help="validate the dataset first")

    du = sub.add_parser("dual", help="export the dual mesh")
    du.add_argument("--input", required=True)
    du.add_argument("--output", required=True)
    du.add_argument("--threads", type=_threads, default="auto")

    va = sub.add_parser("validate", help="check a dataset for misaligned, duplicate or overlapping cells")
    va.add_argument("--input", required=True)

    sy = sub.add_parser("synth", help="write a synthetic dataset")
    gens = sy.add_subparsers(dest="generator", required=True, parser_class=_Parser)
    un = gens.add_parser("uniform")
    un.add_argument("--n", type=int, required=True)
    oc = gens.add_parser("octree")
    oc.add_argument("--depth", type=int, required=True)
    oc.add_argument("--threshold", type=float, default=0.0)
    oc.add_argument("--iso", type=float, help="refine only near this iso-value")
    bl = gens.add_parser("blocks")
    bl.add_argument("--block", type=_block, action="append", required=True, metavar="I,J,K:NX,NY,NZ:LEVEL")
    bl.add_argument("--hole", type=_box, action="append", default=[], metavar="X0,Y0,Z0:X1,Y1,Z1")
    for g in (un, oc, bl):
        g.add_argument("--field", type=_field, required=True, help="e.g. sphere:8,8,8,5")
        g.add_argument("--output", required=True, help=".amr for binary, anything else for text")
    return p


def _write_atomic(path: str, writer: Callable[[str], None]) -> None:
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.parent or ".", prefix=f".{target.name}.", suffix=target.suffix)
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _err(msg: str) -> None:
    print(f"amrdual: {msg}", file=sys.stderr)


def _load(path: str):
    try:
        return io.read_amr(path)
    except OSError as exc:
        raise AmrLoadError(f"cannot read {path}: {exc.strerror or exc}") from None


def _cmd_extract(args) -> int:
    dataset = _load(args.input)
    index = CellIndex(dataset)
    if args.validate:
        report = validate_dataset(index)
        if not report.clean:
            _err("validation failed:\n" + report.format(dataset))
            return EXIT_LOAD
    fmt = args.format or ("ply" if args.output.lower().endswith(".ply") else "obj")
    mesh, stats = extract_isosurface(index, IsoParams(args.iso, thread_count=args.threads))
    writer = io.write_ply if fmt == "ply" else io.write_obj
    _write_atomic(args.output, lambda p: writer(mesh, p))
    if args.stats:
        print("\n".join(stats.as_lines()), file=sys.stderr)
    return EXIT_OK


def _cmd_dual(args) -> int:
    dataset = _load(args.input)
    duals = dual_mesh_arrays(dataset, args.threads)
    _write_atomic(args.output, lambda p: io.write_dual_mesh(duals, dataset, p))
    return EXIT_OK


def _cmd_validate(args) -> int:
    dataset = _load(args.input)
    report = validate_dataset(CellIndex(dataset))
    print(report.format(dataset), file=sys.stderr)
    return EXIT_OK if report.clean else EXIT_LOAD


def _cmd_synth(args) -> int:
    try:
        if args.generator == "uniform":
            ds = gen_uniform(args.n, args.field)
        elif args.generator == "octree":
            ds = gen_octree(args.depth, args.field, args.threshold, iso=args.iso)
        else:
            ds = gen_blocks(args.block, args.field, args.hole)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _write_atomic(args.output, lambda p: io.write_amr(ds, p))
    return EXIT_OK


_COMMANDS = {"extract": _cmd_extract, "dual": _cmd_dual, "validate": _cmd_validate, "synth": _cmd_synth}


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        _err(str(exc))
        return EXIT_USAGE
    except AmrLoadError as exc:
        _err(str(exc))
        return EXIT_LOAD
    except Exception as exc:  # noqa: BLE001 - map everything else to the runtime exit code
        _err(f"{type(exc).__name__}: {exc}")
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
