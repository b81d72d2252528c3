"""Physics-based one-dimensional blood-flow model."""

from hemo_gnn.hemo1d.boundary import BcMode, RcrParams, outlet_pressure, poiseuille_resistance, rcr_update
from hemo_gnn.hemo1d.geometry import Geometry1D, Junction1D, Segment1D
from hemo_gnn.hemo1d.solver import OneDSolver, SolverState, assemble_residual, simulate
from hemo_gnn.hemo1d.wall import WallModel, wall_area, wall_pressure

__all__ = [
    "BcMode",
    "RcrParams",
    "outlet_pressure",
    "poiseuille_resistance",
    "rcr_update",
    "Geometry1D",
    "Junction1D",
    "Segment1D",
    "OneDSolver",
    "SolverState",
    "assemble_residual",
    "simulate",
    "WallModel",
    "wall_area",
    "wall_pressure",
]
