"""Distributed averaging voltage control for multi-terminal HVDC grids."""

from .certificate import CertificateResult, check_certificate, quadratic_form_coefficients
from .closed_loop import (
    ClosedLoopSystem,
    StabilityReport,
    SteadyState,
    assemble,
    predict_steady_state,
    stability_test,
    voltage_spread_bound,
)
from .controller import (
    ControllerParams,
    ControllerState,
    control_output,
    controller_derivative,
    controller_derivative_delayed,
)
from .dispatch import DispatchSolution, qp_oracle, solve_dispatch_closed_form
from .errors import ModelError, NumericalError, SimConfigError, UnstableSystemError
from .graph import NetworkModel, build_laplacian, laplacian_spectrum
from .plant import InjectionProfile, PlantState, plant_derivative
from .sim import SimConfig, SimTrace, settling_time, simulate, sweep_delay

__all__ = [
    "CertificateResult",
    "ClosedLoopSystem",
    "ControllerParams",
    "ControllerState",
    "DispatchSolution",
    "InjectionProfile",
    "ModelError",
    "NetworkModel",
    "NumericalError",
    "PlantState",
    "SimConfig",
    "SimConfigError",
    "SimTrace",
    "StabilityReport",
    "SteadyState",
    "UnstableSystemError",
    "assemble",
    "build_laplacian",
    "check_certificate",
    "control_output",
    "controller_derivative",
    "controller_derivative_delayed",
    "laplacian_spectrum",
    "plant_derivative",
    "predict_steady_state",
    "qp_oracle",
    "quadratic_form_coefficients",
    "settling_time",
    "simulate",
    "solve_dispatch_closed_form",
    "stability_test",
    "sweep_delay",
    "voltage_spread_bound",
]
