"""Biofilm growth with a density constraint (P1 finite elements, semismooth Newton)."""

import os as _os

_meshes = _os.path.join(_os.path.dirname(__file__), "meshes")
if _os.path.isdir(_meshes):
    _os.environ.setdefault("PVI_DATA_DIR", _meshes)

from ._core import (  # noqa: E402
    Capture,
    ConfigError,
    Experiment,
    Mesh,
    MeshError,
    ModelError,
    RunFailure,
    SolverError,
    Trajectory,
    convergence,
    evans_projection,
    experiment_names,
    observed_order,
    oracle_check,
    run,
    total_biomass,
    write_vtk,
)

__all__ = [
    "Capture",
    "ConfigError",
    "Experiment",
    "Mesh",
    "MeshError",
    "ModelError",
    "RunFailure",
    "SolverError",
    "Trajectory",
    "convergence",
    "evans_projection",
    "experiment_names",
    "observed_order",
    "oracle_check",
    "run",
    "total_biomass",
    "write_vtk",
]
