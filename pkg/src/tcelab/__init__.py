"""Translated cone exchanges: simulation, invariant caps and interval exchanges."""

from .errors import TCEError, RuntimeGuard
from .geometry import Isometry, PlanarPoint, Polygon
from .iet import IET, build_iet, classify_2iet, first_return, keane_check
from .tce import TCEParams, build_tce, cap_tce, flat_tce, run_batch, step
from .flat import FlatParams, y_star, m_contains, slice_iet, absorb
from .caps import (CapParams, cap_params, capacity, cap_vertices, classify_cap_dynamics, induced_iet,
                   pyramid, verify_cap_invariance)
from .returns import boundary_edge_iets, first_return_map, refine

__all__ = [
    "TCEError", "RuntimeGuard", "Isometry", "PlanarPoint", "Polygon",
    "IET", "build_iet", "classify_2iet", "first_return", "keane_check",
    "TCEParams", "build_tce", "cap_tce", "flat_tce", "run_batch", "step",
    "FlatParams", "y_star", "m_contains", "slice_iet", "absorb",
    "CapParams", "cap_params", "capacity", "cap_vertices", "classify_cap_dynamics", "induced_iet",
    "pyramid", "verify_cap_invariance",
    "boundary_edge_iets", "first_return_map", "refine",
]
