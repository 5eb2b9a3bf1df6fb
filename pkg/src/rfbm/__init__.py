"""Simulation and asymptotics for the storage process fed by fractional Brownian motion."""

__version__ = "0.1.0"

from .asymptotics import (CriterionReport, ModelConstants, ThresholdFamily, criterion_integral,
                          derive_constants, family, limsup_constant, log_psi, piterbarg_tail,
                          psi, v_of_level)
from .errors import (DomainError, EmbeddingNotNonnegative, ExtrapolationUnstable,
                     FactorizationFailure, InfeasibleLevel, InvalidCorrelation, NotMonotone,
                     OverflowGuard, RegimeWarning, RfbmError, SearchBudgetExceeded, SizeTooLarge,
                     WindowTooSmall)
from .fbm import (FbmPath, fbm_covariance, fbm_paths, fgn_autocovariance,
                  sample_fbm_circulant, sample_fbm_dense_oracle)
from .field import (berman_gap, correlation_decay_envelope, field_correlation, mvn_orthant, nu,
                    sigma_z, transformation_check)
from .grid import DiscretizationGrid, build_grid, grid_vs_continuum_experiment
from .kernels import BACKEND
from .mc import McEstimate
from .pickands import PickandsEstimate, estimate_pickands, estimate_pickands_theta
from .storage import (CrossingRecord, QueuePath, extract_crossings, lil_experiment,
                      simulate_reflected, simulate_stationary, sup_tail_probability)

__all__ = [
    "BACKEND", "CriterionReport", "CrossingRecord", "DiscretizationGrid", "DomainError",
    "EmbeddingNotNonnegative", "ExtrapolationUnstable", "FactorizationFailure", "FbmPath",
    "InfeasibleLevel", "InvalidCorrelation", "McEstimate", "ModelConstants", "NotMonotone",
    "OverflowGuard", "PickandsEstimate", "QueuePath", "RegimeWarning", "RfbmError",
    "SearchBudgetExceeded", "SizeTooLarge", "ThresholdFamily", "WindowTooSmall", "__version__",
    "berman_gap", "build_grid", "correlation_decay_envelope", "criterion_integral",
    "derive_constants", "estimate_pickands", "estimate_pickands_theta", "extract_crossings",
    "family", "fbm_covariance", "fbm_paths", "fgn_autocovariance", "field_correlation",
    "grid_vs_continuum_experiment", "lil_experiment", "limsup_constant", "log_psi",
    "mvn_orthant", "nu", "piterbarg_tail", "psi", "sample_fbm_circulant",
    "sample_fbm_dense_oracle", "sigma_z", "simulate_reflected", "simulate_stationary",
    "sup_tail_probability", "transformation_check", "v_of_level",
]
