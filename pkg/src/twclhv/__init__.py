"""Quantum statistics of the single-photon homodyne setup and an explicit
local hidden-variable model that reproduces them."""

__version__ = "0.1.0"

from .errors import (
    DegenerateCorrelation,
    InvalidInput,
    ModelInvalid,
    QuadratureError,
    TruncationError,
    TwcError,
    UndefinedVisibility,
)
from .events import Event, OscillatorStrength, Settings
