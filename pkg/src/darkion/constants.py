"""Physical constants (CODATA 2018 values as shipped with scipy)."""

from scipy import constants as _c

HBAR = _c.hbar  # J s
ELEMENTARY_CHARGE = _c.e  # C
EPSILON_0 = _c.epsilon_0  # F / m
ATOMIC_MASS = _c.physical_constants["atomic mass constant"][0]  # kg

COULOMB_CONSTANT = 1.0 / (4.0 * _c.pi * EPSILON_0)

# species used in the worked examples, in unified atomic mass units
BE9_MASS_U = 9.012
