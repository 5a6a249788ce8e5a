"""Sparse optimizers of random standard quadratic programs with GOE data."""

__version__ = "0.1.0"

from .goe import GoeMatrix, OrderedInstance, order_instance, read_matrix_csv, sample_goe, write_matrix_csv
from .montecarlo import EstimateReport, ExperimentConfig, confidence_interval, merge, run_census
from .quadrature import QuadResult, QuadSpec, integrate_1d
from .rng import SeedSpec, derive_stream
from .solver import SolveResult, grid_oracle, kkt_candidate, solve_enumerate

__all__ = [
    "GoeMatrix", "OrderedInstance", "order_instance", "sample_goe", "read_matrix_csv",
    "write_matrix_csv", "SeedSpec", "derive_stream", "SolveResult", "solve_enumerate",
    "kkt_candidate", "grid_oracle", "QuadSpec", "QuadResult", "integrate_1d",
    "ExperimentConfig", "EstimateReport", "run_census", "merge", "confidence_interval",
    "StQPSolver", "EdgeEventTransformer",
]


def __getattr__(name):
    # sklearn is slow to import; keep it off the CLI path
    if name in ("StQPSolver", "EdgeEventTransformer"):
        from . import estimators
        return getattr(estimators, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
