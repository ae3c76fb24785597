import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from darkion.constants import HBAR
from darkion.errors import ContractError, InvalidStateError
from darkion.grid import alpha_axes
from darkion.symplectic import (
    GaussianState,
    beamsplitter_matrix,
    coherent,
    compose,
    dark_coefficients,
    dark_product_state,
    dark_to_dimensionless,
    eigenmode_from_dimensionless,
    eigenmode_to_dimensionless,
    gaussian_transform,
    gaussian_wigner,
    invert,
    is_symplectic,
    local_squeeze_matrix,
    mapping_map,
    mapping_squeezes,
    mapping_theorem_check,
    mode_scales,
    normal_mode_map,
    particle1_marginal,
    random_gaussian_state,
    random_symplectic,
    rotation_map,
    select_mode,
    squeeze_map,
    squeezed_vacuum,
    thermal,
    vacuum,
)
from darkion.trapmodes import IonPair, normal_modes

RATIOS = [1, 3, 20, 137]

# (a, b, c, d) frozen from the independent row-inversion oracle below
DARK = {
    1: (0.8112, -0.6164, 0.6164, -0.8112),
    3: (1.1431, -0.2863, 0.7680, -0.4262),
    20: (1.5022, -0.0763, 0.6568, -0.1744),
}


def pair_of(ratio):
    return IonPair.from_amu(9.012 * ratio, 9.012, 2 * math.pi * 1e6)


def row_inversion_coefficients(pair):
    """Dark-ion quadratures from inverting the normalised mode rows directly."""
    nm = normal_modes(pair)
    qinv = np.linalg.inv(np.array([nm.qrow_minus, nm.qrow_plus]))
    pinv = np.linalg.inv(np.array([nm.prow_minus, nm.prow_plus]))
    wbar = math.sqrt(nm.omega_minus * nm.omega_plus)
    x_mode = [math.sqrt(HBAR / (2 * nm.mu * w)) for w in (nm.omega_minus, nm.omega_plus)]
    p_mode = [math.sqrt(HBAR * nm.mu * w / 2) for w in (nm.omega_minus, nm.omega_plus)]
    x_dark = math.sqrt(HBAR / (2 * pair.m1 * wbar))
    p_dark = math.sqrt(HBAR * pair.m1 * wbar / 2)
    return (
        qinv[0, 0] * x_mode[0] / x_dark,
        qinv[0, 1] * x_mode[1] / x_dark,
        pinv[0, 0] * p_mode[0] / p_dark,
        pinv[0, 1] * p_mode[1] / p_dark,
    )


def residual_for(pair, m_dimless, state_dimless):
    """Moment mismatch between the (-) output of an arbitrary dimensionless map and the dark ion."""
    si = eigenmode_from_dimensionless(state_dimless, pair)
    out = gaussian_transform(state_dimless, m_dimless)
    minus = select_mode(out, 0, "minus")
    dark = dark_to_dimensionless(particle1_marginal(si, pair), pair)
    return max(np.max(np.abs(minus.mean - dark.mean)), np.max(np.abs(minus.cov - dark.cov)))


@pytest.mark.parametrize("ratio", [1, 3, 20])
def test_dark_coefficients_against_oracle(ratio):
    pair = pair_of(ratio)
    got = dark_coefficients(pair)
    assert got == pytest.approx(row_inversion_coefficients(pair), abs=1e-12)
    assert got == pytest.approx(DARK[ratio], abs=1e-4)
    a, b, c, d = got
    assert a * c + b * d == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("ratio,r", [(1, 0.1373), (3, 0.1988), (20, 0.4137), (137, 0.651)])
def test_mapping_squeezes(ratio, r):
    r_minus, r_plus = mapping_squeezes(pair_of(ratio))
    assert r_plus == pytest.approx(r, abs=1e-3)
    assert r_minus == -r_plus


@pytest.mark.parametrize("ratio", RATIOS)
def test_mapping_theorem_random_states(ratio):
    pair = pair_of(ratio)
    rng = np.random.default_rng(ratio)
    worst = 0.0
    for _ in range(100):
        state = eigenmode_from_dimensionless(random_gaussian_state(rng), pair)
        worst = max(worst, mapping_theorem_check(state, pair))
    assert worst < 1e-10


@pytest.mark.parametrize("ratio", [3, 20])
def test_wrong_protocols_break_the_theorem(ratio):
    pair = pair_of(ratio)
    s, phi = normal_modes(pair).s, normal_modes(pair).phi
    state = random_gaussian_state(np.random.default_rng(7))
    good = beamsplitter_matrix(phi) @ local_squeeze_matrix(*mapping_squeezes(pair))
    assert residual_for(pair, good, state) < 1e-10
    # squeezing each mode by ln s, in either sign pattern
    for rm, rp in [(math.log(s), math.log(s)), (-math.log(s), math.log(s)), (math.log(s), -math.log(s))]:
        bad = beamsplitter_matrix(phi) @ local_squeeze_matrix(rm, rp)
        assert residual_for(pair, bad, state) > 1e-3
    reversed_order = local_squeeze_matrix(*mapping_squeezes(pair)) @ beamsplitter_matrix(phi)
    assert residual_for(pair, reversed_order, state) > 1e-3


def test_mapping_map_units_agree():
    pair = pair_of(3)
    si = mapping_map(pair).matrix
    dl = mapping_map(pair, dimensionless=True).matrix
    lam = np.diag(mode_scales(pair).eigenmode_diag())
    assert np.allclose(si, lam @ dl @ np.linalg.inv(lam), rtol=1e-12)
    assert is_symplectic(dl)


def test_beamsplitter_moves_minus_into_plus():
    # a- -> cos a- - sin a+, so x- picks up -sin(theta) x+
    m = beamsplitter_matrix(0.3)
    assert m[0, 0] == pytest.approx(math.cos(0.3))
    assert m[0, 1] == pytest.approx(-math.sin(0.3))
    assert m[2, 3] == pytest.approx(-math.sin(0.3))


def test_compose_and_invert():
    a = squeeze_map(1.7)
    b = rotation_map(0.4)
    ab = compose(b, a)
    assert ab.source == "particle" and ab.target == "eigenmode"
    assert np.allclose(compose(invert(ab), ab).matrix, np.eye(4))
    with pytest.raises(ContractError):
        compose(a, b)


def test_vacuum_wigner_peak_and_norm():
    re, im = alpha_axes(4.0, 81)
    g = gaussian_wigner(vacuum(1, "single"), re, im)
    assert g.values.max() == pytest.approx(2 / math.pi, rel=1e-12)
    assert g.integral() == pytest.approx(1.0, abs=1e-8)


def test_coherent_and_squeezed_wigner():
    re, im = alpha_axes(3.0, 61)
    g = gaussian_wigner(coherent(0.5 + 0.5j), re, im)
    i, j = np.unravel_index(np.argmax(g.values), g.values.shape)
    assert (re[i], im[j]) == pytest.approx((0.5, 0.5))
    sq = gaussian_wigner(squeezed_vacuum(0.4), re, im)
    assert sq.values.max() == pytest.approx(2 / math.pi, rel=1e-12)
    # narrower along x
    assert sq.values[35, 30] < sq.values[30, 35]


def test_dark_product_state_marginal_is_the_dark_state():
    pair = pair_of(20)
    dark = squeezed_vacuum(0.3, "dark")
    full = dark_product_state(dark, pair)
    back = dark_to_dimensionless(particle1_marginal(full, pair), pair)
    assert np.allclose(back.cov, dark.cov, atol=1e-12)
    assert mapping_theorem_check(full, pair) < 1e-10
    mapped = select_mode(eigenmode_to_dimensionless(gaussian_transform(full, mapping_map(pair)), pair), 0, "minus")
    assert np.allclose(mapped.cov, dark.cov, atol=1e-10)


def test_invalid_states():
    with pytest.raises(InvalidStateError):
        GaussianState(np.zeros(2), np.array([[1.0, 0.2], [0.0, 1.0]]), "single", 1.0)
    with pytest.raises(ContractError):
        GaussianState(np.zeros(3), np.eye(3))
    unphysical = GaussianState(np.zeros(2), 0.1 * np.eye(2), "single", 1.0)
    assert not unphysical.is_physical()
    with pytest.raises(ContractError):
        gaussian_transform(vacuum(2, "particle"), mapping_map(pair_of(3)))
    with pytest.raises(ContractError):
        gaussian_transform(vacuum(2), np.ones((4, 4)))


def test_normal_mode_map_requires_particle_coordinates():
    m = normal_mode_map(pair_of(3))
    assert (m.source, m.target) == ("particle", "eigenmode")


seeds = st.integers(min_value=0, max_value=2**32 - 1)


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_transform_preserves_symplectic_eigenvalues(seed):
    rng = np.random.default_rng(seed)
    state = random_gaussian_state(rng)
    s = random_symplectic(rng)
    out = gaussian_transform(state, s)
    assert np.allclose(out.symplectic_eigenvalues(), state.symplectic_eigenvalues(), atol=1e-10)
    assert out.is_physical()


@settings(max_examples=50, deadline=None)
@given(seeds, st.sampled_from(RATIOS))
def test_mapping_theorem_property(seed, ratio):
    pair = pair_of(ratio)
    state = eigenmode_from_dimensionless(random_gaussian_state(np.random.default_rng(seed)), pair)
    assert mapping_theorem_check(state, pair) < 1e-10


@given(st.lists(st.floats(0, 5), min_size=2, max_size=2))
def test_thermal_eigenvalues(nbar):
    ev = thermal(nbar).symplectic_eigenvalues()
    assert np.allclose(sorted(ev), sorted(np.array(nbar) + 0.5), atol=1e-10)
