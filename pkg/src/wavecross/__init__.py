"""Semiclassical wave packet propagation through eigenvalue crossings.

Thawed Gaussian wave packets on one band, Landau-Zener type transfer to the
other band at a codimension-one crossing, a split-step spectral reference
solver and a Herman-Kluk (frozen Gaussian) propagator.
"""
from .crossing import CrossingEvent, detect_crossing, transfer_gaussian, transfer_polygaussian
from .dynamics import IntegratorControls, initial_bundle, integrate_batch, integrate_to
from .gaussian import (PolyGaussian, SymplecticBlocks, WeylPolyOp, evaluate_on_grid, fourier, inner_product,
                       metaplectic_apply, norm, unit_gaussian, weyl_apply)
from .grid import Grid, auto_grid
from .hk import hk_decompose, hk_propagate
from .models import ModelSpec, builtin_model, make_bloch, make_scalar, make_schrodinger, make_two_level
from .propagator import (SemiclassicalSolution, WavePacketBranch, adiabatic_propagate, make_initial_branch,
                         propagate, reconstruct)
from .reference import GridState, evolve, initial_state, l2_error, project_band

__version__ = "0.1.0"

__all__ = [
    "CrossingEvent", "detect_crossing", "transfer_gaussian", "transfer_polygaussian",
    "IntegratorControls", "initial_bundle", "integrate_batch", "integrate_to",
    "PolyGaussian", "SymplecticBlocks", "WeylPolyOp", "evaluate_on_grid", "fourier", "inner_product",
    "metaplectic_apply", "norm", "unit_gaussian", "weyl_apply", "Grid", "auto_grid",
    "hk_decompose", "hk_propagate", "ModelSpec", "builtin_model", "make_bloch", "make_scalar",
    "make_schrodinger", "make_two_level", "SemiclassicalSolution", "WavePacketBranch",
    "adiabatic_propagate", "make_initial_branch", "propagate", "reconstruct", "GridState", "evolve",
    "initial_state", "l2_error", "project_band",
]
