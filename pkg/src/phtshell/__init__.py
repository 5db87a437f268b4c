"""Adaptive isogeometric topology optimisation of shells with PHT-splines."""
from .errors import (ConfigurationError, ConsistencyError, DegenerateGeometryError, PhtShellError,
                     SolverError, UsageError)
from .tmesh import HierTMesh
from .phtspace import Field, PhtSpace, inherit, interpolate, refine
from .shellgeom import MidSurface, builtin_surface
from .shellfea import LoadCase, MaterialParams, assemble, compliance, solve
from .driver import RunConfig, RunResult, optimize

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError", "ConsistencyError", "DegenerateGeometryError", "PhtShellError", "SolverError",
    "UsageError", "HierTMesh", "Field", "PhtSpace", "inherit", "interpolate", "refine", "MidSurface",
    "builtin_surface", "LoadCase", "MaterialParams", "assemble", "compliance", "solve", "RunConfig",
    "RunResult", "optimize",
]
