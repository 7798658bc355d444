"""Geodesic flows and billiards on surfaces of revolution.

Period and rotation functions, resonance classification, displacement jets,
Liouville-measure estimates and Carleman-sequence quasianalyticity checks.
"""
from .billiard import (HalfSurface, billiard_flow, general_reflection,
                       hamiltonian_curvature, reflection_checks, unfold)
from .analysis import (displacement, estimate_measure, jet_norms, return_time,
                       sample_liouville)
from .carleman import (CarlemanSequence, check_regularity, classify,
                       quasianalyticity_partial_sums)
from .errors import (FiniteDifferenceError, InsufficientEventsError,
                     InvalidProfileError, InvalidSequenceError,
                     NoInteriorMinimumError, NumericalError, RevflowError)
from .geodesic import (EquatorData, PhasePoint, Trajectory, empirical_period,
                       empirical_rotation, equator_to_phase, flow, flow_to,
                       phase_to_equator)
from .period import classify_resonance, period_T, rotation_R, scan
from .surface import (ProfileFunction, SurfaceOfRevolution, build_surface, embed,
                      even_part, load_surface, sphere)

__version__ = "0.1.0"

__all__ = [
    "CarlemanSequence", "EquatorData", "FiniteDifferenceError", "HalfSurface",
    "InsufficientEventsError", "InvalidProfileError", "InvalidSequenceError",
    "NoInteriorMinimumError", "NumericalError", "PhasePoint", "ProfileFunction",
    "RevflowError", "SurfaceOfRevolution", "Trajectory", "billiard_flow",
    "build_surface", "check_regularity", "classify", "classify_resonance",
    "displacement", "embed", "empirical_period", "empirical_rotation",
    "equator_to_phase", "estimate_measure", "even_part", "flow", "flow_to",
    "general_reflection", "hamiltonian_curvature", "jet_norms", "load_surface",
    "period_T", "phase_to_equator", "quasianalyticity_partial_sums",
    "reflection_checks", "return_time", "rotation_R", "sample_liouville", "scan",
    "sphere", "unfold",
]
