import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from darkion import pulseplan as pp
from darkion.errors import InvalidInputError
from darkion.symplectic import mapping_squeezes
from darkion.trapmodes import IonPair, normal_modes, ratio_grid

OMEGA2 = 2 * math.pi * 1e6


def pair_of(ratio):
    return IonPair.from_ratio(ratio, omega2=OMEGA2)


def test_lns_durations_frozen():
    nm = normal_modes(pair_of(3))
    # ln(3^(1/4)) / (2 * 0.42619^2) and the (+) counterpart
    assert pp.lns_squeeze_duration_units(nm, "-") == pytest.approx(0.7561, abs=1e-4)
    assert pp.lns_squeeze_duration_units(nm, "+") == pytest.approx(0.2328, abs=1e-4)
    assert pp.mix_duration_units(nm) == pytest.approx(1.0902, abs=1e-4)
    assert pp.mix_duration_units(pair_of(1)) == pytest.approx((math.pi / 4) / (2**-0.5 * 0.537285), rel=1e-5)


@pytest.mark.parametrize(
    "ratio,t_minus,t_plus", [(1, 0.1373, 0.2379), (3, 0.5474, 0.1685), (20, 4.2313, 0.2984)]
)
def test_mapping_squeeze_durations(ratio, t_minus, t_plus):
    nm = normal_modes(pair_of(ratio))
    assert pp.squeeze_duration_units(nm, "-") == pytest.approx(t_minus, abs=1e-4)
    assert pp.squeeze_duration_units(nm, "+") == pytest.approx(t_plus, abs=1e-4)


@pytest.mark.parametrize("ratio", [1, 3, 20])
def test_squeeze_pulses_reach_the_mapping_squeezes(ratio):
    pair = pair_of(ratio)
    rabi, eta2 = 0.01 * OMEGA2, 0.2
    for mode, r in zip("-+", mapping_squeezes(pair)):
        p = pp.squeeze_pulse(mode, pair, rabi, eta2)
        sign = 1 if p.internal_state == pp.SIGMA_X_PLUS else -1
        # generator xi (a^dag^2 - a^2) with xi = coupling * t * sign equals S(r) with xi = -r/2
        assert -2 * p.coupling * p.duration * sign == pytest.approx(r, rel=1e-12)
        assert (p.phase_I, p.phase_II) == (-math.pi / 2, math.pi / 2)
        omega = normal_modes(pair).omega_minus if mode == "-" else normal_modes(pair).omega_plus
        assert p.frequency_I == pytest.approx(2 * omega)


def test_mix_pulse_reaches_the_mixing_angle():
    pair = pair_of(3)
    p = pp.mix_pulse(pair, 0.01 * OMEGA2, 0.2)
    nm = normal_modes(pair)
    assert p.coupling * p.duration == pytest.approx(nm.phi, rel=1e-12)
    assert p.geometry == "standing" and p.theta_I == 0.0
    assert p.frequency_I == pytest.approx(nm.omega_plus - nm.omega_minus)
    assert (p.phase_I, p.phase_II) == (math.pi / 2, -math.pi / 2)
    assert p.duration * 0.01 * OMEGA2 * 0.04 == pytest.approx(pp.mix_duration_units(nm), rel=1e-12)


def test_schedule_order_and_document():
    sched = pp.build_schedule(pair_of(3), 0.01 * OMEGA2, 0.2)
    purposes = [p.purpose for p in sched.pulses]
    assert purposes == ["squeeze(-)", "squeeze(+)", "mix"]
    doc = sched.to_dict()
    assert doc["pulses"][0]["duration"]["unit"] == "s"
    assert doc["total_duration"]["value"] == pytest.approx(sum(p.duration for p in sched.pulses))
    assert sched.feasible
    with pytest.raises(InvalidInputError):
        pp.PulseSchedule((sched.pulses[2], sched.pulses[0]), (), 10.0)


def test_margins_and_infeasible_drive():
    ratios = ratio_grid(1, 20, 60, "linear")
    worst = min(
        min(m.split, m.plus, m.minus) for r in ratios for m in pp.resolution_report(pair_of(r), 0.01 * OMEGA2, 0.2)
    )
    assert worst > 10
    for ratio in (1, 3, 20):
        sched = pp.build_schedule(pair_of(ratio), OMEGA2, 0.2)
        assert not sched.feasible
        assert "rabi>=omega2" in sched.pulses[0].flags


def test_lamb_dicke_flag_and_bad_drive():
    p = pp.mix_pulse(pair_of(3), 1.0, 0.5)
    assert "lamb-dicke" in p.flags
    with pytest.raises(InvalidInputError):
        pp.mix_pulse(pair_of(3), -1.0, 0.2)
    with pytest.raises(InvalidInputError):
        pp.squeeze_pulse("x", pair_of(3), 1.0, 0.2)


def test_mix_duration_decreasing():
    t = [pp.mix_duration_units(pair_of(r)) for r in ratio_grid(1, 20, 200, "linear")]
    assert np.all(np.diff(t) < 0)


def test_squeeze_durations_positive():
    for r in ratio_grid(1, 20, 50, "linear"):
        nm = normal_modes(pair_of(r))
        assert pp.squeeze_duration_units(nm, "-") > 0
        assert pp.squeeze_duration_units(nm, "+") > 0
    # the ln s variant does vanish at equal masses
    assert pp.lns_squeeze_duration_units(pair_of(1), "-") == 0.0


def test_destination_advice():
    assert pp.destination_advice(pair_of(1)).mode == "-"
    assert pp.destination_advice(pair_of(3)).mode == "-"
    assert pp.destination_advice(pair_of(20)).mode == "+"
    assert pp.destination_advice(pair_of(20), heating_weight=0).mode == "-"
    with pytest.raises(InvalidInputError):
        pp.destination_advice(pair_of(3), duration_weight=-1)


def test_figure_rows():
    assert pp.figure2_row(1.0) == pytest.approx((1, 0.70711, 0.53728), abs=1e-5)
    row = pp.figure4_row(1.0)
    assert row == pytest.approx((1, 51.68, 1 / (math.sqrt(3) - 1), 1.0, 1 / math.sqrt(3)), abs=1e-2)
    assert len(pp.figure3_row(3.0)) == len(pp.FIGURE3_COLUMNS)
    assert pp.figure3_row(1.0)[1:3] == (0.0, 0.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(1.0, 20.0), st.floats(1e-4, 0.5), st.floats(0.01, 0.3))
def test_durations_scale_inversely_with_drive(ratio, rabi_frac, eta2):
    pair = pair_of(ratio)
    rabi = rabi_frac * OMEGA2
    sched = pp.build_schedule(pair, rabi, eta2)
    for p in sched.pulses:
        units = p.duration * rabi * eta2**2
        if p.purpose == "mix":
            assert units == pytest.approx(pp.mix_duration_units(pair), rel=1e-10)
        else:
            assert units == pytest.approx(pp.squeeze_duration_units(pair, p.purpose[-2]), rel=1e-10)
        assert all(m.resolved == (min(m.split, m.plus, m.minus) > sched.factor) for m in sched.margins)
