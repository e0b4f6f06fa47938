"""proxgist: GIST proximal solver over interchangeable smooth losses and
convex/nonconvex sparse regularizers, with classification and sparse
linear-unmixing experiment harnesses."""

from ._kernels import BACKEND
from .losses import LabeledDataset, LossKind, LossSpec, Problem, UnmixObservation
from .model import Model, zero_model
from .regularizers import (
    KKTReport,
    ProxQuery,
    RegKind,
    RegularizerSpec,
    prox_oracle_scalar,
    prox_scalar,
    prox_vector,
    reg_value,
    subdifferential_check,
)
from .solver import (
    PathRecord,
    PathResult,
    PathSelectionError,
    SolverConfig,
    SolverDivergenceError,
    SolverReport,
    Termination,
    gist_solve,
    path_select_by_error,
    path_select_by_sparsity,
    reg_path,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "KKTReport",
    "LabeledDataset",
    "LossKind",
    "LossSpec",
    "Model",
    "PathRecord",
    "PathResult",
    "PathSelectionError",
    "Problem",
    "ProxQuery",
    "RegKind",
    "RegularizerSpec",
    "SolverConfig",
    "SolverDivergenceError",
    "SolverReport",
    "Termination",
    "UnmixObservation",
    "gist_solve",
    "path_select_by_error",
    "path_select_by_sparsity",
    "prox_oracle_scalar",
    "prox_scalar",
    "prox_vector",
    "reg_value",
    "reg_path",
    "subdifferential_check",
    "zero_model",
]
