"""Static normal-mode analysis of a two-ion chain (dark ion 1, bright ion 2).

All matrices use the coordinate ordering (q1, q2, p1, p2).  The chain is
treated in the harmonic approximation along the trap axis; both species feel
the same spring constant ``k = m1 * omega1**2 = m2 * omega2**2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .constants import ATOMIC_MASS, COULOMB_CONSTANT, ELEMENTARY_CHARGE, HBAR
from .errors import InvalidInputError, UnsupportedRegimeError


@dataclass(frozen=True)
class IonPair:
    """Masses (kg), lone-ion-2 angular trap frequency (rad/s) and charge (C)."""

    m1: float
    m2: float
    omega2: float
    charge: float = ELEMENTARY_CHARGE

    def __post_init__(self):
        for name in ("m1", "m2", "omega2", "charge"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidInputError(f"{name} must be positive and finite, got {value!r}")

    @classmethod
    def from_amu(cls, m1_u: float, m2_u: float, omega2: float, charge: float = ELEMENTARY_CHARGE):
        return cls(m1_u * ATOMIC_MASS, m2_u * ATOMIC_MASS, omega2, charge)

    @classmethod
    def from_ratio(cls, ratio: float, m2: float = 1.0, omega2: float = 1.0):
        """Pair with ``m1 = ratio * m2``; handy for dimensionless scans."""
        return cls(ratio * m2, m2, omega2)

    @property
    def ratio(self) -> float:
        return self.m1 / self.m2

    @property
    def k(self) -> float:
        return self.m2 * self.omega2**2

    @property
    def omega1(self) -> float:
        return self.omega2 * math.sqrt(self.m2 / self.m1)

    @property
    def mu(self) -> float:
        return math.sqrt(self.m1 * self.m2)


@dataclass(frozen=True)
class NormalModes:
    """Everything derived from an :class:`IonPair` by the diagonalisation.

    Rows express the eigenmode positions in particle positions,
    ``q_minus = qrow_minus @ (q1, q2)``; ``prow_*`` are the matching momentum rows.
    Lamb-Dicke ratios are in units of the lone-ion-2 parameter.
    """

    s: float
    phi: float
    omega_minus: float
    omega_plus: float
    omega2: float
    mu: float
    qrow_minus: np.ndarray
    qrow_plus: np.ndarray
    prow_minus: np.ndarray
    prow_plus: np.ndarray
    qrow_minus_normalized: np.ndarray
    qrow_plus_normalized: np.ndarray
    eta_minus_ratio: float
    eta_plus_ratio: float

    @property
    def ratio(self) -> float:
        return self.s**4


def _require_heavier_dark(pair: IonPair):
    if pair.m1 < pair.m2:
        raise UnsupportedRegimeError(
            f"dark ion must be at least as heavy as the bright ion (m1/m2 = {pair.ratio:.6g} < 1)"
        )


def equilibrium_distance(pair: IonPair) -> float:
    """Ion separation ``d0 = (2 q^2 / (4 pi eps0 k))**(1/3)`` in metres."""
    return (2.0 * COULOMB_CONSTANT * pair.charge**2 / pair.k) ** (1.0 / 3.0)


def scale_and_angle(pair: IonPair) -> tuple[float, float]:
    """Return the squeeze parameter ``s`` and mixing angle ``phi`` in (0, pi/4]."""
    _require_heavier_dark(pair)
    r = pair.ratio
    s = r**0.25
    denom = math.sqrt(r) - 1.0 / math.sqrt(r)
    if denom == 0.0:
        phi = math.pi / 4
    else:
        phi = 0.5 * math.atan(1.0 / denom)
    return s, phi


def eigenfrequencies(pair: IonPair) -> tuple[float, float]:
    """Return ``(omega_minus, omega_plus)`` in rad/s."""
    x = pair.m2 / pair.m1
    root = math.sqrt(1.0 + x * x - x)
    plus_sq = 1.0 + x + root
    # product identity avoids cancellation in 1 + x - root for heavy dark ions
    minus_sq = 3.0 * x / plus_sq
    return pair.omega2 * math.sqrt(minus_sq), pair.omega2 * math.sqrt(plus_sq)


def mode_vectors(pair: IonPair) -> dict[str, np.ndarray]:
    s, phi = scale_and_angle(pair)
    c, sn = math.cos(phi), math.sin(phi)
    rows = {
        "qrow_minus": np.array([s * c, sn / s]),
        "qrow_plus": np.array([-s * sn, c / s]),
        "prow_minus": np.array([c / s, s * sn]),
        "prow_plus": np.array([-sn / s, s * c]),
    }
    rows["qrow_minus_normalized"] = rows["qrow_minus"] / np.linalg.norm(rows["qrow_minus"])
    rows["qrow_plus_normalized"] = rows["qrow_plus"] / np.linalg.norm(rows["qrow_plus"])
    return rows


def lamb_dicke_ratios(pair: IonPair) -> tuple[float, float]:
    """Bright-ion Lamb-Dicke parameters of the two modes relative to a lone ion 2."""
    _, phi = scale_and_angle(pair)
    w_minus, w_plus = eigenfrequencies(pair)
    return (
        math.sin(phi) * math.sqrt(pair.omega2 / w_minus),
        math.cos(phi) * math.sqrt(pair.omega2 / w_plus),
    )


def hamiltonian_matrix(pair: IonPair) -> np.ndarray:
    """Coefficient matrix ``H`` of ``X.T @ H @ X`` for the quadratic Hamiltonian.

    The coupling ``k/2 (q2 - q1)**2`` is expanded, so the position diagonal is
    ``(m_i omega_i**2 + k) / 2`` rather than ``m_i omega_i**2``.
    """
    k = pair.k
    h = np.zeros((4, 4))
    h[0, 0] = 0.5 * (pair.m1 * pair.omega1**2 + k)
    h[1, 1] = 0.5 * (pair.m2 * pair.omega2**2 + k)
    h[0, 1] = h[1, 0] = -0.5 * k
    h[2, 2] = 1.0 / (2.0 * pair.m1)
    h[3, 3] = 1.0 / (2.0 * pair.m2)
    return h


def normal_modes(pair: IonPair) -> NormalModes:
    s, phi = scale_and_angle(pair)
    w_minus, w_plus = eigenfrequencies(pair)
    eta_minus, eta_plus = lamb_dicke_ratios(pair)
    return NormalModes(
        s=s,
        phi=phi,
        omega_minus=w_minus,
        omega_plus=w_plus,
        omega2=pair.omega2,
        mu=pair.mu,
        eta_minus_ratio=eta_minus,
        eta_plus_ratio=eta_plus,
        **mode_vectors(pair),
    )


def zero_point_length(mass: float, omega: float) -> float:
    """``sqrt(hbar / (2 m omega))``: rms position of the oscillator ground state."""
    return math.sqrt(HBAR / (2.0 * mass * omega))


def zero_point_momentum(mass: float, omega: float) -> float:
    return math.sqrt(HBAR * mass * omega / 2.0)


_QUANTITIES: dict[str, Callable[[IonPair], float]] = {
    "s": lambda p: scale_and_angle(p)[0],
    "phi": lambda p: scale_and_angle(p)[1],
    "omega_minus": lambda p: eigenfrequencies(p)[0] / p.omega2,
    "omega_plus": lambda p: eigenfrequencies(p)[1] / p.omega2,
    "eta_minus_ratio": lambda p: lamb_dicke_ratios(p)[0],
    "eta_plus_ratio": lambda p: lamb_dicke_ratios(p)[1],
}

Quantity = Union[str, Callable[[IonPair], object]]


def ratio_grid(ratio_min: float, ratio_max: float, steps: int, spacing: str = "geometric") -> np.ndarray:
    if not (1.0 <= ratio_min < ratio_max) or steps < 2:
        raise InvalidInputError(
            f"need 1 <= ratio_min < ratio_max and steps >= 2, got ({ratio_min}, {ratio_max}, {steps})"
        )
    if spacing == "geometric":
        return np.geomspace(ratio_min, ratio_max, steps)
    if spacing == "linear":
        return np.linspace(ratio_min, ratio_max, steps)
    raise InvalidInputError(f"unknown spacing {spacing!r}")


def scan_ratio(
    ratio_min: float,
    ratio_max: float,
    steps: int,
    quantity: Quantity,
    spacing: str = "geometric",
) -> list[tuple]:
    """Evaluate ``quantity`` on a grid of mass ratios ``m1/m2``.

    ``quantity`` is either one of the names in ``available_quantities()``
    (frequencies are reported in units of omega2) or a callable taking an
    :class:`IonPair` built with ``m2 = omega2 = 1``.  Rows are ``(ratio, value)``.
    """
    if isinstance(quantity, str):
        try:
            func = _QUANTITIES[quantity]
        except KeyError:
            raise InvalidInputError(f"unknown quantity {quantity!r}") from None
    else:
        func = quantity
    return [(float(r), func(IonPair.from_ratio(float(r)))) for r in ratio_grid(ratio_min, ratio_max, steps, spacing)]


def available_quantities() -> list[str]:
    return sorted(_QUANTITIES)
