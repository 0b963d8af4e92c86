"""Exception hierarchy.

Two top-level families, matching the two CLI exit codes:

* ValidationError (exit 1): the caller asked for something the model cannot
  honor as stated (bad config keys, out-of-window wavelengths, evaluation
  inside a resonance exclusion zone, over-clipped grids).
* NumericalError (exit 2): the inputs were legal but a numerical procedure
  failed (root bracketing, fixed-point iteration, derivative stencils).
"""

from __future__ import annotations


class HcfwmError(Exception):
    """Base class for all package errors."""


class ValidationError(HcfwmError):
    """Invalid input, configuration, or precondition."""


class RangeError(ValidationError):
    """Wavelength or frequency outside a stated validity window."""


class DivergenceZoneError(RangeError):
    """Evaluation requested inside a resonance exclusion zone.

    Carries the offending resonance wavelength so callers can report or
    step around it.
    """

    def __init__(self, message: str, lambda_j_nm: float):
        super().__init__(message)
        self.lambda_j_nm = lambda_j_nm


class ClippedGridError(ValidationError):
    """Joint spectral grid lost too large a fraction to band-edge clipping."""


class NumericalError(HcfwmError):
    """A numerical procedure failed to converge or produced no usable result."""


class ConvergenceError(NumericalError):
    """Iteration exceeded its step limit before reaching tolerance."""


class StencilError(NumericalError):
    """Finite-difference stencil could not be placed inside a valid band."""
