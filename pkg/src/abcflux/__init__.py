"""Three-species weakly asymmetric exchange model on a ring.

Simulator, normal-mode fluctuation fields, mode-coupling algebra,
Monte Carlo estimators and reference solvers for the limiting equations.
"""
from .fields import (BlockAverageSpec, DynkinLedger, TestFunction, accumulate_dynkin,
                     fourier_field_series, normal_field)
from .mode_coupling import (DensityPoint, NormalModeSpec, classify_modes, coupling_report,
                            normal_mode_spec, theorem_coefficients)
from .model_core import (Configuration, EngineState, EventLog, ModelParams, Observer, make_rng,
                         read_snapshot, sample_canonical, sample_product_measure, simulate,
                         write_snapshot)

__version__ = "0.1.0"

__all__ = [
    "BlockAverageSpec", "Configuration", "DensityPoint", "DynkinLedger", "EngineState", "EventLog",
    "ModelParams", "NormalModeSpec", "Observer", "TestFunction", "accumulate_dynkin",
    "classify_modes", "coupling_report", "fourier_field_series", "make_rng", "normal_field",
    "normal_mode_spec", "read_snapshot", "sample_canonical", "sample_product_measure", "simulate",
    "theorem_coefficients", "write_snapshot",
]
