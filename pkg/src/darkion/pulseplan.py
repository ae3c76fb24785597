"""Laser pulse schedules that implement the mapping on the bright ion.

Frequencies are angular and given relative to the bright-ion transition
``omega_eg``.  Durations are in seconds when ``rabi`` is in rad/s; the
``*_units`` helpers return durations in units of ``1/(eta2**2 * rabi)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Union

from .errors import InvalidInputError
from .symplectic import mapping_squeezes
from .trapmodes import IonPair, NormalModes, normal_modes

LAMB_DICKE_MAX = 0.3
DEFAULT_RESOLUTION_FACTOR = 10.0

# internal state of the bright ion that selects the sign of the effective Hamiltonian
SIGMA_X_PLUS = "(|g>+|e>)/sqrt2"
SIGMA_X_MINUS = "(|g>-|e>)/sqrt2"


@dataclass(frozen=True)
class PulseSpec:
    purpose: str  # "squeeze(-)", "squeeze(+)" or "mix"
    geometry: str  # "travelling" or "standing"
    frequency_I: float
    frequency_II: float
    frequency_I_expr: str
    frequency_II_expr: str
    phase_I: float
    phase_II: float
    phase_I_expr: str
    phase_II_expr: str
    theta_I: Optional[float]
    theta_II: Optional[float]
    rabi: float
    duration: float
    coupling: float  # rabi * eta products entering the effective Hamiltonian (1/s)
    internal_state: str
    target: float  # squeeze parameter r or mixing angle
    flags: tuple = ()

    def to_dict(self) -> dict:
        d = {
            "purpose": self.purpose,
            "geometry": self.geometry,
            "frequency_I": {"value": self.frequency_I, "unit": "rad/s", "expr": self.frequency_I_expr},
            "frequency_II": {"value": self.frequency_II, "unit": "rad/s", "expr": self.frequency_II_expr},
            "phase_I": {"value": self.phase_I, "unit": "rad", "expr": self.phase_I_expr},
            "phase_II": {"value": self.phase_II, "unit": "rad", "expr": self.phase_II_expr},
            "rabi": {"value": self.rabi, "unit": "rad/s"},
            "duration": {"value": self.duration, "unit": "s"},
            "coupling": {"value": self.coupling, "unit": "1/s"},
            "internal_state": self.internal_state,
            "flags": list(self.flags),
        }
        if self.geometry == "standing":
            d["theta_I"] = {"value": self.theta_I, "unit": "rad"}
            d["theta_II"] = {"value": self.theta_II, "unit": "rad"}
        if self.purpose == "mix":
            d["mixing_angle"] = {"value": self.target, "unit": "rad"}
        else:
            d["squeeze"] = {"value": self.target, "unit": "1", "convention": "x -> exp(-r) x"}
        return d


def _modes(modes: Union[NormalModes, IonPair]) -> NormalModes:
    return modes if isinstance(modes, NormalModes) else normal_modes(modes)


def _check_drive(modes: NormalModes, rabi: float, eta2: float) -> list[str]:
    if not (math.isfinite(rabi) and rabi > 0):
        raise InvalidInputError(f"rabi frequency must be positive, got {rabi}")
    if not (math.isfinite(eta2) and eta2 > 0):
        raise InvalidInputError(f"Lamb-Dicke parameter must be positive, got {eta2}")
    flags = []
    if eta2 > LAMB_DICKE_MAX:
        flags.append("lamb-dicke")
    if rabi >= modes.omega2:
        flags.append("rabi>=omega2")
    return flags


def _mode_eta(modes: NormalModes, mode: str) -> tuple[float, float]:
    if mode == "-":
        return modes.eta_minus_ratio, modes.omega_minus
    if mode == "+":
        return modes.eta_plus_ratio, modes.omega_plus
    raise InvalidInputError(f"unknown mode {mode!r}")


def squeeze_duration_units(modes: Union[NormalModes, IonPair], mode: str, r: Optional[float] = None) -> float:
    """``|r| / (2 (eta_alpha/eta)**2)``; ``r`` defaults to the mapping squeeze of ``mode``."""
    nm = _modes(modes)
    if r is None:
        r = mapping_squeezes(nm)[0 if mode == "-" else 1]
    ratio, _ = _mode_eta(nm, mode)
    return abs(r) / (2.0 * ratio**2)


def lns_squeeze_duration_units(modes: Union[NormalModes, IonPair], mode: str) -> float:
    """``ln s / (2 (eta_alpha/eta)**2)``: squeezing each mode by the factor ``s``."""
    nm = _modes(modes)
    return squeeze_duration_units(nm, mode, math.log(nm.s))


def mix_duration_units(modes: Union[NormalModes, IonPair], angle: Optional[float] = None) -> float:
    """``angle / (eta-/eta * eta+/eta)`` with ``angle`` defaulting to the mixing angle."""
    nm = _modes(modes)
    angle = nm.phi if angle is None else angle
    return angle / (nm.eta_minus_ratio * nm.eta_plus_ratio)


def squeeze_pulse(
    mode: str,
    modes: Union[NormalModes, IonPair],
    rabi: float,
    eta2: float,
    r: Optional[float] = None,
) -> PulseSpec:
    """Travelling-wave pair at ``omega_eg +- 2 omega_alpha`` with phases ``-pi/2, +pi/2``.

    The effective generator is ``xi (a^dag^2 - a^2)`` with
    ``xi = rabi eta_alpha**2 t sigma_x``; the sign of ``r`` picks the internal
    eigenstate, the duration is ``|r| / (2 rabi eta_alpha**2)``.
    """
    nm = _modes(modes)
    flags = _check_drive(nm, rabi, eta2)
    if r is None:
        r = mapping_squeezes(nm)[0 if mode == "-" else 1]
    ratio, omega = _mode_eta(nm, mode)
    eta = ratio * eta2
    coupling = rabi * eta**2
    sym = "omega_-" if mode == "-" else "omega_+"
    return PulseSpec(
        purpose=f"squeeze({mode})",
        geometry="travelling",
        frequency_I=2.0 * omega,
        frequency_II=-2.0 * omega,
        frequency_I_expr=f"omega_eg + 2*{sym}",
        frequency_II_expr=f"omega_eg - 2*{sym}",
        phase_I=-math.pi / 2,
        phase_II=math.pi / 2,
        phase_I_expr="-pi/2",
        phase_II_expr="pi/2",
        theta_I=None,
        theta_II=None,
        rabi=rabi,
        duration=abs(r) / (2.0 * coupling),
        coupling=coupling,
        # xi = -r/2 must equal rabi eta^2 t sigma_x
        internal_state=SIGMA_X_PLUS if r <= 0 else SIGMA_X_MINUS,
        target=float(r),
        flags=tuple(flags),
    )


def mix_pulse(modes: Union[NormalModes, IonPair], rabi: float, eta2: float, angle: Optional[float] = None) -> PulseSpec:
    """Standing-wave pair at ``omega_eg +- (omega+ - omega-)``, antinode, phases ``+pi/2, -pi/2``."""
    nm = _modes(modes)
    flags = _check_drive(nm, rabi, eta2)
    angle = nm.phi if angle is None else angle
    coupling = rabi * nm.eta_minus_ratio * nm.eta_plus_ratio * eta2**2
    split = nm.omega_plus - nm.omega_minus
    return PulseSpec(
        purpose="mix",
        geometry="standing",
        frequency_I=split,
        frequency_II=-split,
        frequency_I_expr="omega_eg + (omega_+ - omega_-)",
        frequency_II_expr="omega_eg - (omega_+ - omega_-)",
        phase_I=math.pi / 2,
        phase_II=-math.pi / 2,
        phase_I_expr="pi/2",
        phase_II_expr="-pi/2",
        theta_I=0.0,
        theta_II=0.0,
        rabi=rabi,
        duration=abs(angle) / coupling,
        coupling=coupling,
        internal_state=SIGMA_X_PLUS if angle >= 0 else SIGMA_X_MINUS,
        target=float(angle),
        flags=tuple(flags),
    )


@dataclass(frozen=True)
class Margin:
    pulse: str
    duration: float
    split: float  # duration * (omega+ - omega-)
    plus: float  # duration * omega+
    minus: float  # duration * omega-
    resolved: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _margins(pulses: list[PulseSpec], nm: NormalModes, factor: float) -> list[Margin]:
    out = []
    for p in pulses:
        if p.duration == 0:
            continue  # nothing to resolve
        split = p.duration * (nm.omega_plus - nm.omega_minus)
        plus = p.duration * nm.omega_plus
        minus = p.duration * nm.omega_minus
        out.append(Margin(p.purpose, p.duration, split, plus, minus, min(split, plus, minus) > factor))
    return out


def standard_pulses(modes: Union[NormalModes, IonPair], rabi: float, eta2: float) -> list[PulseSpec]:
    nm = _modes(modes)
    return [squeeze_pulse("-", nm, rabi, eta2), squeeze_pulse("+", nm, rabi, eta2), mix_pulse(nm, rabi, eta2)]


def resolution_report(
    pair: Union[IonPair, NormalModes], rabi: float, eta2: float, factor: float = DEFAULT_RESOLUTION_FACTOR
) -> list[Margin]:
    """Each pulse duration divided by ``1/(omega+ - omega-)``, ``1/omega+`` and ``1/omega-``.

    A pulse is resolved when all three ratios exceed ``factor``.
    """
    nm = _modes(pair)
    return _margins(standard_pulses(nm, rabi, eta2), nm, factor)


@dataclass(frozen=True)
class PulseSchedule:
    """Pulses in execution order: both squeezes, then the mixing pulse.

    The squeeze pulses run one after the other.  They address different
    sidebands, so running them together would also work but is not modelled.
    """

    pulses: tuple
    margins: tuple
    factor: float

    def __post_init__(self):
        kinds = [p.purpose for p in self.pulses]
        if "mix" in kinds and any(k.startswith("squeeze") for k in kinds[kinds.index("mix") :]):
            raise InvalidInputError("squeeze pulses must precede the mixing pulse")

    @property
    def total_duration(self) -> float:
        return sum(p.duration for p in self.pulses)

    @property
    def feasible(self) -> bool:
        return all(m.resolved for m in self.margins)

    def to_dict(self) -> dict:
        return {
            "pulses": [p.to_dict() for p in self.pulses],
            "total_duration": {"value": self.total_duration, "unit": "s"},
            "resolution": {
                "factor": self.factor,
                "margins": [m.to_dict() for m in self.margins],
                "all_resolved": self.feasible,
            },
        }


def build_schedule(
    pair: Union[IonPair, NormalModes], rabi: float, eta2: float, factor: float = DEFAULT_RESOLUTION_FACTOR
) -> PulseSchedule:
    nm = _modes(pair)
    pulses = standard_pulses(nm, rabi, eta2)
    return PulseSchedule(tuple(pulses), tuple(_margins(pulses, nm, factor)), factor)


@dataclass(frozen=True)
class DestinationAdvice:
    mode: str
    costs: dict
    mix_durations: dict  # units of 1/(eta2**2 rabi)
    susceptibility: dict
    weights: dict = field(default_factory=dict)


def destination_advice(
    pair: Union[IonPair, NormalModes], duration_weight: float = 1.0, heating_weight: float = 1.0
) -> DestinationAdvice:
    """Pick the collective mode that should receive the dark-ion state.

    Mapping onto ``(-)`` needs the rotation ``phi``, mapping onto ``(+)``
    needs ``pi/2 - phi``.  The cost of each choice is
    ``duration_weight * t_mix / max(t_mix) + heating_weight * max(0, omega2/omega_alpha - 1)``:
    the mixing time relative to the slower option, plus how much more a
    mode responds to low-frequency electric-field noise than a lone ion 2.
    Ties go to ``(-)``.
    """
    if duration_weight < 0 or heating_weight < 0:
        raise InvalidInputError("weights must be non-negative")
    nm = _modes(pair)
    t = {"-": mix_duration_units(nm, nm.phi), "+": mix_duration_units(nm, math.pi / 2 - nm.phi)}
    t_ref = max(t.values())
    h = {
        "-": max(0.0, nm.omega2 / nm.omega_minus - 1.0),
        "+": max(0.0, nm.omega2 / nm.omega_plus - 1.0),
    }
    costs = {m: duration_weight * t[m] / t_ref + heating_weight * h[m] for m in ("-", "+")}
    mode = "+" if costs["+"] < costs["-"] else "-"
    return DestinationAdvice(mode, costs, t, h, {"duration": duration_weight, "heating": heating_weight})


# -- figure data series --------------------------------------------------------------


def figure2_row(ratio: float) -> tuple:
    """``(ratio, eta-/eta, eta+/eta)``."""
    nm = normal_modes(IonPair.from_ratio(ratio))
    return (ratio, nm.eta_minus_ratio, nm.eta_plus_ratio)


FIGURE3_COLUMNS = (
    "ratio",
    "t_squeeze_minus_lns",
    "t_squeeze_plus_lns",
    "t_mix",
    "t_squeeze_minus",
    "t_squeeze_plus",
)


def figure3_row(ratio: float) -> tuple:
    """Durations in units of ``1/(eta2**2 rabi)``.

    The ``_lns`` columns squeeze each mode by ``ln s``; the unsuffixed ones
    are the squeezes the exact mapping needs.
    """
    nm = normal_modes(IonPair.from_ratio(ratio))
    return (
        ratio,
        lns_squeeze_duration_units(nm, "-"),
        lns_squeeze_duration_units(nm, "+"),
        mix_duration_units(nm),
        squeeze_duration_units(nm, "-"),
        squeeze_duration_units(nm, "+"),
    )


FIGURE4_COLUMNS = ("ratio", "t_mix_rabi", "omega2_over_split", "omega2_over_omega_minus", "omega2_over_omega_plus")


def figure4_row(ratio: float, eta2: float = 0.2) -> tuple:
    """Mixing time in units of ``1/rabi`` and the three inverse frequency scales in units of ``1/omega2``."""
    nm = normal_modes(IonPair.from_ratio(ratio))
    return (
        ratio,
        mix_duration_units(nm) / eta2**2,
        1.0 / (nm.omega_plus - nm.omega_minus),
        1.0 / nm.omega_minus,
        1.0 / nm.omega_plus,
    )
