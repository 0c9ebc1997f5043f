"""Frequency-domain body-of-revolution solver."""
from .bor import (
    SOLVER_REVISION, Basis, ModalCurrentSolution, SolverError, assemble_and_solve, far_field,
    far_field_component, make_basis, monostatic, probe_current, rcs_from_H, required_modes,
)
from .impedance import ImpedancePoleError, layer_surface_impedance
from .kernels import modal_kernel
from .mie import mie_rcs_oracle
from .response import (
    SOLVER_INVOCATIONS, FrequencyResponse, Observation, probe_current_response, solve_point, sweep,
    sweep_many,
)

__all__ = [
    "Basis", "FrequencyResponse", "ImpedancePoleError", "ModalCurrentSolution", "Observation",
    "SOLVER_INVOCATIONS", "SOLVER_REVISION", "SolverError", "assemble_and_solve", "far_field", "far_field_component",
    "layer_surface_impedance", "make_basis", "mie_rcs_oracle", "modal_kernel", "monostatic",
    "probe_current", "probe_current_response", "rcs_from_H", "required_modes", "solve_point",
    "sweep", "sweep_many",
]
