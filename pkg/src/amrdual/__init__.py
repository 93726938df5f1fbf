"""Dual meshes and crack-free iso-surfaces for cell-centered AMR data."""
from .core import (
    AmrDataset,
    AmrLoadError,
    CellCoord,
    ContractViolation,
    WorldPoint,
    anchor_mask,
    cell_center,
    cell_key_compare,
    cell_width,
)
from .locator import CellIndex, ValidationReport, build_index, find_exact, snap, validate_dataset
from .dualgen import DualCell, dual_bases_of_cell, duals_of_cell, try_build_dual
from .contour import FatTriangle, HexInput, contour_hex, interpolate_edge, mc_case_index
from .weld import IndexedMesh, weld
from .pipeline import ExtractionStats, IsoParams, extract_dual_mesh, extract_isosurface
from .synth import FieldSpec, exhaustive_duals, gen_blocks, gen_octree, gen_uniform, uniform_mc_reference

__version__ = "0.1.0"
