"""Pulse-level simulation and calibration of resonator-coupled transmon CNOTs.

The package propagates the lab-frame Schrodinger equation for fixed-frequency
transmons sharing a single resonator bus, scores cross-resonance CNOT designs
by Monte-Carlo average fidelity, and calibrates their pulse parameters with a
derivative-free optimizer. See the command-line entry point ``crsim`` for the
workbench front end.
"""

__version__ = "0.1.0"

from .device import (BasisIndexer, CouplingSpec, DeviceError, DeviceSpec,
                     EigenSolution, ResonatorSpec, SystemOperators,
                     TransmonSpec, anharmonicity, build_system,
                     convergence_check, diagonalize_transmon, device_from_dict,
                     device_to_dict, load_device, qubit_frequency, save_device)
from .pulses import (CnotAsymParams, DragModifier, EcrParams, FlatTopEnvelope,
                     GaussianEnvelope, PARAM_NAMES, PulseError, PulseProgram,
                     Tone, build_asym_cnot, build_ecr_cnot,
                     load_pulse_records, record_to_params)
from .evolve import (EvolutionConfig, EvolveError, Propagator,
                     TrajectoryRecord, bloch_trajectory, evolve,
                     evolve_exact_step, reduced_transmon_rho, unitarity_probe)
from .metrics import (FidelityReport, MetricsError, apply_vz,
                      average_fidelity, gate_report, ideal_cnot, ideal_swap,
                      leakage_diagnostics, squared_overlap_fidelity,
                      success_probabilities, vz_diagonal)
from .optimize import (GateCalibration, NmConfig, OptimizationTrace,
                       OptimizeConfig, OptimizeError, ParamSpace,
                       SeedSearchReport, aux_and_vz_fit, cnot_param_space,
                       nelder_mead, optimize_gate, sweet_spot_search,
                       sweep_metric, vz_fit)

__all__ = [
    "__version__",
    # device
    "BasisIndexer", "CouplingSpec", "DeviceError", "DeviceSpec",
    "EigenSolution", "ResonatorSpec", "SystemOperators", "TransmonSpec",
    "anharmonicity", "build_system", "convergence_check",
    "diagonalize_transmon", "device_from_dict", "device_to_dict",
    "load_device", "qubit_frequency", "save_device",
    # pulses
    "CnotAsymParams", "DragModifier", "EcrParams", "FlatTopEnvelope",
    "GaussianEnvelope", "PARAM_NAMES", "PulseError", "PulseProgram", "Tone",
    "build_asym_cnot", "build_ecr_cnot", "load_pulse_records",
    "record_to_params",
    # evolve
    "EvolutionConfig", "EvolveError", "Propagator", "TrajectoryRecord",
    "bloch_trajectory", "evolve", "evolve_exact_step", "reduced_transmon_rho",
    "unitarity_probe",
    # metrics
    "FidelityReport", "MetricsError", "apply_vz", "average_fidelity",
    "gate_report", "ideal_cnot", "ideal_swap", "leakage_diagnostics",
    "squared_overlap_fidelity", "success_probabilities", "vz_diagonal",
    # optimize
    "GateCalibration", "NmConfig", "OptimizationTrace", "OptimizeConfig",
    "OptimizeError", "ParamSpace", "SeedSearchReport", "aux_and_vz_fit",
    "cnot_param_space", "nelder_mead", "optimize_gate", "sweet_spot_search",
    "sweep_metric", "vz_fit",
]
