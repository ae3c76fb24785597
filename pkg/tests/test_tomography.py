import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from darkion import fockengine as fe
from darkion.errors import ContractError, InvalidInputError, InversionError, TruncationWarning
from darkion.grid import FLAG_INVERSION, FLAG_TRUNCATION, alpha_axes
from darkion.tomography import (
    ReadoutConfig,
    auto_n_max,
    compare,
    default_periods,
    design_matrix,
    fock_wigner,
    invert_populations,
    parity_wigner,
    point_rng,
    reconstruct_grid,
    reconstruct_point,
    sideband_signal,
)


def test_single_level_signals():
    cfg = ReadoutConfig(coupling=2.0, n_max=3)
    t = cfg.sample_times()
    assert t.size == 16
    assert t[-1] == pytest.approx(default_periods(3) * math.pi)
    a = design_matrix(cfg, 4, t)
    assert np.all(a[:, 0] == 0)  # n = 0 is dark on the red sideband
    assert a[:, 1] == pytest.approx(np.sin(2 * t) ** 2)
    blue = design_matrix(ReadoutConfig(coupling=2.0, n_max=3, sideband="blue"), 4, t)
    assert blue[:, 0] == pytest.approx(np.sin(2 * t) ** 2)


@pytest.mark.parametrize("sideband", ["red", "blue"])
@pytest.mark.parametrize("gamma", [0.0, 0.05])
def test_noiseless_roundtrip(sideband, gamma):
    rng = np.random.default_rng(3)
    p = rng.dirichlet(np.ones(11))
    cfg = ReadoutConfig(coupling=1.0, n_max=10, gamma=gamma, sideband=sideband)
    inv = invert_populations(sideband_signal(p, cfg), cfg)
    assert np.max(np.abs(inv.populations - p)) < 1e-6
    assert not inv.truncated


def test_rank_deficient_design_raises():
    cfg = ReadoutConfig(coupling=1.0, n_max=10, times=(0.1, 0.2, 0.3))
    with pytest.raises(InversionError):
        invert_populations(np.zeros(3), cfg)
    cfg = ReadoutConfig(coupling=1.0, n_max=3)
    with pytest.raises(ContractError):
        invert_populations(np.zeros(5), cfg)


def test_truncation_warning_when_population_is_above_n_max():
    p = np.zeros(12)
    p[11] = 1.0
    cfg = ReadoutConfig(coupling=1.0, n_max=4)
    signal = sideband_signal(p, cfg, times=cfg.sample_times())
    with pytest.warns(TruncationWarning):
        invert_populations(signal, cfg)


def test_config_validation():
    for kwargs in [{"coupling": 0}, {"n_max": 0}, {"gamma": -1}, {"shots": 0}, {"sideband": "green"},
                   {"times": (0.2, 0.1)}]:
        with pytest.raises(InvalidInputError):
            ReadoutConfig(**kwargs)
    with pytest.raises(InvalidInputError):
        sideband_signal([1.0, 0.0], ReadoutConfig(shots=10, n_max=1))


def test_fock_one_origin():
    res = reconstruct_point(fe.fock_dm(1, 20), 0j, ReadoutConfig())
    assert res.wigner == pytest.approx(-2 / math.pi, abs=1e-6)
    assert res.flags == 0


@pytest.mark.parametrize("rho", [fe.fock_dm(2, 30), fe.coherent_dm(0.8 - 0.3j, 30), fe.cat_dm(1.0, 30)])
def test_noiseless_grid_matches_displaced_parity(rho):
    re, im = alpha_axes(2.0, 7)
    ref = fe.wigner_displaced_parity(rho, re, im)
    report = reconstruct_grid(rho, re, im, ReadoutConfig(), reference=ref)
    assert report.metrics["sup"] < 1e-5
    assert not np.any(report.grid.flags)
    assert report.to_dict()["grid"]["values"]


def test_analytic_fock_reference():
    re, im = alpha_axes(2.0, 9)
    report = reconstruct_grid(fe.fock_dm(1, 20), re, im, ReadoutConfig(), reference=fock_wigner(1, re, im))
    assert report.metrics["sup"] < 1e-5


def test_small_n_max_sets_flags():
    res = reconstruct_point(fe.coherent_dm(1.5, 30), 0j, ReadoutConfig(n_max=2))
    assert res.flags & FLAG_TRUNCATION
    assert res.flags & FLAG_INVERSION


def test_noisy_reconstruction_is_seeded():
    re, im = alpha_axes(1.0, 3)
    cfg = ReadoutConfig(shots=2000)
    a = reconstruct_grid(fe.vacuum_dm(10), re, im, cfg, seed=5)
    b = reconstruct_grid(fe.vacuum_dm(10), re, im, cfg, seed=5)
    c = reconstruct_grid(fe.vacuum_dm(10), re, im, cfg, seed=6)
    assert np.array_equal(a.grid.values, b.grid.values)
    assert not np.array_equal(a.grid.values, c.grid.values)
    with pytest.raises(InvalidInputError):
        reconstruct_grid(fe.vacuum_dm(10), re, im, cfg)


def test_point_streams_are_independent():
    x = point_rng(1, 0).random(4)
    y = point_rng(1, 1).random(4)
    assert not np.allclose(x, y)
    assert np.array_equal(x, point_rng(1, 0).random(4))


def test_compare_requires_same_axes():
    re, im = alpha_axes(1.0, 3)
    a = fock_wigner(0, re, im)
    b = fock_wigner(0, *alpha_axes(2.0, 3))
    with pytest.raises(ContractError):
        compare(a, b)
    vac = fock_wigner(0, *alpha_axes(4.0, 81))
    assert compare(vac, vac)["overlap"] == pytest.approx(1.0, abs=1e-6)


def test_auto_n_max():
    p = np.zeros(20)
    p[:4] = 0.25
    assert auto_n_max(p) == 3
    assert auto_n_max(np.array([1.0])) == 1


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 12))
def test_inversion_recovers_random_populations(seed, n_max):
    p = np.random.default_rng(seed).dirichlet(np.ones(n_max + 1))
    cfg = ReadoutConfig(coupling=1.3, n_max=n_max)
    with warnings.catch_warnings():
        warnings.simplefilter("error", TruncationWarning)
        inv = invert_populations(sideband_signal(p, cfg), cfg)
    assert np.max(np.abs(inv.populations - p)) < 1e-6
    assert parity_wigner(inv.populations) == pytest.approx(parity_wigner(p), abs=1e-5)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=2, max_size=15).filter(lambda v: sum(v) > 0))
def test_parity_wigner_bounded(values):
    p = np.array(values) / sum(values)
    assert abs(parity_wigner(p)) <= 2 / math.pi + 1e-12
