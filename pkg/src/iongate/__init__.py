"""Conditional-phase gate design for two ions inside a long linear crystal.

Everything is expressed in trap units: hbar = M = omega = 1, lengths in
units of (e^2 / 4 pi eps0 M omega^2)^(1/3), times in units of 1/omega.
One trap period is TAU0 = 2 pi.
"""

from iongate.crystal import (
    Crystal,
    CrystalConfig,
    ModeSet,
    build_coupling,
    local_frequency,
    restricted_modes,
    solve_equilibrium,
    solve_modes,
    thermal_betas,
)
from iongate.pulses import PulseSchedule, all_moments, phase_kernel, segment_moment
from iongate.gate import (
    GateModel,
    GateOutcome,
    GatePair,
    conditional_phase,
    fidelity,
    fidelity_exact,
    mode_displacements,
    normalize_phase,
    spectator_fraction,
)
from iongate.optimize import (
    OptimizeResult,
    OptimizeSpec,
    exact_null,
    optimize,
    refine,
    surrogate_optimize,
)
from iongate.oracle import OracleConfig, OracleReport, evolve_branch, thermal_fidelity
from iongate.scan import ScanRecord, SweepSpec, locate_optima, reproduce, sweep

TAU0 = 2.0 * 3.141592653589793

__all__ = [
    "TAU0",
    "Crystal",
    "CrystalConfig",
    "ModeSet",
    "build_coupling",
    "local_frequency",
    "restricted_modes",
    "solve_equilibrium",
    "solve_modes",
    "thermal_betas",
    "PulseSchedule",
    "all_moments",
    "phase_kernel",
    "segment_moment",
    "GateModel",
    "GateOutcome",
    "GatePair",
    "conditional_phase",
    "fidelity",
    "fidelity_exact",
    "mode_displacements",
    "normalize_phase",
    "spectator_fraction",
    "OptimizeResult",
    "OptimizeSpec",
    "exact_null",
    "optimize",
    "refine",
    "surrogate_optimize",
    "OracleConfig",
    "OracleReport",
    "evolve_branch",
    "thermal_fidelity",
    "ScanRecord",
    "SweepSpec",
    "locate_optima",
    "reproduce",
    "sweep",
]
