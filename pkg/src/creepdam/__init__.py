"""Creep damage of plane-stress solids: Kachanov-Rabotnov damage, Norton creep, P1 FEM."""
from .driver import Problem, RunResult, SimConfig, State, Termination, lifetime_sweep, run
from .errors import (ConfigError, CreepDamError, DomainError, GeometryError, MeshFormatError,
                     PicardDiverged, RuptureImminent, SingularityError, SolverError)
from .geometry import Mesh, Polyline, notched_rect_mesh, read_mesh, structured_rect_mesh, write_mesh
from .material import Coupling, MaterialParams
from .scenario import Scenario, build_band_damage

__version__ = "0.1.0"

__all__ = [
    "Problem", "RunResult", "SimConfig", "State", "Termination", "lifetime_sweep", "run",
    "ConfigError", "CreepDamError", "DomainError", "GeometryError", "MeshFormatError",
    "PicardDiverged", "RuptureImminent", "SingularityError", "SolverError",
    "Mesh", "Polyline", "notched_rect_mesh", "read_mesh", "structured_rect_mesh", "write_mesh",
    "Coupling", "MaterialParams", "Scenario", "build_band_damage",
]
