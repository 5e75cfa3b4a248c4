"""Joint clustering and graph recovery for heat-diffusion signal mixtures."""

from graphheat.errors import (
    AllRestartsFailed,
    EmptyCluster,
    GraphHeatError,
    InvalidFloor,
    NonFinite,
)
from graphheat.model import (
    FistaConfig,
    FitConfig,
    HeatMixtureModel,
    ResponsibilityMatrix,
    SignalSet,
    WeightedGraph,
    laplacian,
    log_likelihood,
)
from graphheat.em import FitResult, fit, run_em

__all__ = [
    "AllRestartsFailed",
    "EmptyCluster",
    "FistaConfig",
    "FitConfig",
    "FitResult",
    "GraphHeatError",
    "HeatMixtureModel",
    "InvalidFloor",
    "NonFinite",
    "ResponsibilityMatrix",
    "SignalSet",
    "WeightedGraph",
    "fit",
    "laplacian",
    "log_likelihood",
    "run_em",
]

__version__ = "0.1.0"
