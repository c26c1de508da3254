"""Loss-landscape analysis of variational quantum circuits through Hessian spectra."""

from .qsim import Circuit, Gate, StateVector, run_circuit
from .shiftcalc import CircuitObjective, loss_gradient, loss_hessian, shift_gradient, shift_hessian_raw
from .spectral import Spectrum, classify_stationary, eigendecompose

__version__ = "0.1.0"

__all__ = [
    "Circuit",
    "CircuitObjective",
    "Gate",
    "Spectrum",
    "StateVector",
    "classify_stationary",
    "eigendecompose",
    "loss_gradient",
    "loss_hessian",
    "run_circuit",
    "shift_gradient",
    "shift_hessian_raw",
]
