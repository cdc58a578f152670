"""Syndrome simulation, analysis and noise inference for the heavy-hex subsystem code."""

from .analysis import (
    ChangeRateTable,
    CorrelationMatrix,
    bootstrap_class_means,
    change_rates,
    class_means,
    classify_entries,
    correlation_matrix,
    define_detectors,
    detection_events,
)
from .circuit import (
    Circuit,
    InputState,
    build_cycle_circuit,
    build_gauge_circuit,
    build_ghz_circuit,
    build_stabilizer_circuit,
    characterization_circuits,
)
from .code import CodeLayout, build_layout, verify_layout
from .dataset import SyndromeDataset
from .dense import exact_distribution, run_trajectories
from .engine import (
    analyze,
    change_rate_polynomial,
    exact_detector_rates,
    fault_sensitivity,
    predict_correlations,
    sample_shots,
)
from .fitting import ExactPredictor, FitResult, SampledPredictor, fit_global, fit_inhomogeneous, invert_rate
from .noise import NoiseModel, attach_noise

__version__ = "0.1.0"

__all__ = [
    "ChangeRateTable",
    "Circuit",
    "CodeLayout",
    "CorrelationMatrix",
    "ExactPredictor",
    "FitResult",
    "InputState",
    "NoiseModel",
    "SampledPredictor",
    "SyndromeDataset",
    "analyze",
    "attach_noise",
    "bootstrap_class_means",
    "build_cycle_circuit",
    "build_gauge_circuit",
    "build_ghz_circuit",
    "build_layout",
    "build_stabilizer_circuit",
    "change_rate_polynomial",
    "change_rates",
    "characterization_circuits",
    "class_means",
    "classify_entries",
    "correlation_matrix",
    "define_detectors",
    "detection_events",
    "exact_detector_rates",
    "exact_distribution",
    "fault_sensitivity",
    "fit_global",
    "fit_inhomogeneous",
    "invert_rate",
    "predict_correlations",
    "run_trajectories",
    "sample_shots",
    "verify_layout",
]
