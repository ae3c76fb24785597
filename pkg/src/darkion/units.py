"""Unit-tagged scalars for configuration files.

A value is a product of terms joined by ``*``; each term is a number with an
optional unit, or one of the symbols ``pi`` and ``omega2``.  Examples:
``"27u"``, ``"9.012u"``, ``"2pi*1MHz"``, ``"0.01*omega2"``, ``"6.3e6rad/s"``.
Hz means 1/s with no hidden factor: an angular frequency for a cyclic
frequency ``f`` is written ``"2pi*f"``, as in ``"2pi*1MHz"``.
"""

from __future__ import annotations

import math
import re
from typing import Optional, Union

from .constants import ATOMIC_MASS
from .errors import InvalidInputError

MASS = "mass"
ANGULAR = "angular frequency"
DIMENSIONLESS = "dimensionless"

_UNITS = {
    "u": (ATOMIC_MASS, MASS),
    "amu": (ATOMIC_MASS, MASS),
    "Da": (ATOMIC_MASS, MASS),
    "kg": (1.0, MASS),
    "g": (1e-3, MASS),
    "Hz": (1.0, ANGULAR),
    "kHz": (1e3, ANGULAR),
    "MHz": (1e6, ANGULAR),
    "GHz": (1e9, ANGULAR),
    "rad/s": (1.0, ANGULAR),
    "krad/s": (1e3, ANGULAR),
    "Mrad/s": (1e6, ANGULAR),
    "pi": (math.pi, DIMENSIONLESS),
}

_TERM = re.compile(r"^(?P<num>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*(?P<unit>[A-Za-z][A-Za-z0-9/]*)?$")


class UnitError(InvalidInputError):
    pass


def parse_quantity(text: Union[str, int, float], expected: str, omega2: Optional[float] = None) -> float:
    """Parse ``text`` and return its SI value, checking the dimension.

    Bare numbers are taken as SI.  ``omega2`` supplies the value of the
    ``omega2`` symbol when the expression uses it.
    """
    if isinstance(text, bool):
        raise UnitError(f"expected {expected}, got a boolean")
    if isinstance(text, (int, float)):
        value = float(text)
        if not math.isfinite(value):
            raise UnitError(f"non-finite value {text!r}")
        return value
    if not isinstance(text, str) or not text.strip():
        raise UnitError(f"expected {expected} string, got {text!r}")
    value, dim = 1.0, DIMENSIONLESS
    for term in text.replace(" ", "").split("*"):
        m = _TERM.match(term)
        if not term or not m or (m.group("num") is None and m.group("unit") is None):
            raise UnitError(f"cannot parse {term!r} in {text!r}")
        num = float(m.group("num")) if m.group("num") is not None else 1.0
        unit = m.group("unit")
        if unit is None:
            scale, udim = 1.0, DIMENSIONLESS
        elif unit == "omega2":
            if omega2 is None:
                raise UnitError(f"'omega2' is not available in {text!r}")
            scale, udim = omega2, ANGULAR
        elif unit in _UNITS:
            scale, udim = _UNITS[unit]
        else:
            raise UnitError(f"unknown unit {unit!r} in {text!r}")
        if udim != DIMENSIONLESS:
            if dim != DIMENSIONLESS:
                raise UnitError(f"more than one dimensioned term in {text!r}")
            dim = udim
        value *= num * scale
    # unitless strings such as "1.5e-26" or "2pi*1e6" are SI values
    if dim not in (expected, DIMENSIONLESS):
        raise UnitError(f"{text!r} is a {dim}, expected {expected}")
    if not math.isfinite(value):
        raise UnitError(f"non-finite value {text!r}")
    return value
