"""Simulation toolkit for reading out the motional state of a dark ion through a co-trapped bright ion."""

from .errors import (
    ContractError,
    CutoffError,
    DarkIonError,
    InvalidInputError,
    InvalidStateError,
    InversionError,
    ResolutionError,
    TruncationWarning,
    UnsupportedRegimeError,
)
from .grid import WignerGrid, alpha_axes
from .trapmodes import IonPair, NormalModes, normal_modes

__all__ = [
    "ContractError",
    "CutoffError",
    "DarkIonError",
    "InvalidInputError",
    "InvalidStateError",
    "InversionError",
    "IonPair",
    "NormalModes",
    "ResolutionError",
    "TruncationWarning",
    "UnsupportedRegimeError",
    "WignerGrid",
    "alpha_axes",
    "normal_modes",
]
