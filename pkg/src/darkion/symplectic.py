"""Symplectic maps and the Gaussian-state engine.

Phase-space vectors are ordered ``(q_1, ..., q_n, p_1, ..., p_n)``.  For the
two-ion problem this is ``(q1, q2, p1, p2)`` in the particle basis and
``(q-, q+, p-, p+)`` in the eigenmode basis.  Moments follow the Schrodinger
picture: a map ``S`` sends ``mean -> S @ mean`` and ``cov -> S @ cov @ S.T``.

The protocol implemented by :func:`mapping_map` squeezes each eigenmode and
then applies the number-conserving beam splitter.  The squeeze amounts are
chosen so that after the map the ``(-)`` mode quadratures, in units of that
mode's zero-point scales, equal the dark-ion quadratures in units of the
readout scales: the zero-point scales of the dark mass oscillating at the
geometric mean ``sqrt(omega_minus * omega_plus)`` of the two mode frequencies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.linalg import block_diag

from .constants import HBAR
from .errors import ContractError, InvalidInputError, InvalidStateError
from .grid import WignerGrid
from .trapmodes import (
    IonPair,
    NormalModes,
    eigenfrequencies,
    scale_and_angle,
    zero_point_length,
    zero_point_momentum,
)


def symplectic_form(n_modes: int = 2) -> np.ndarray:
    eye = np.eye(n_modes)
    zero = np.zeros((n_modes, n_modes))
    return np.block([[zero, eye], [-eye, zero]])


def is_symplectic(matrix, tol: float = 1e-10) -> bool:
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2:
        return False
    j = symplectic_form(m.shape[0] // 2)
    return bool(np.max(np.abs(m.T @ j @ m - j)) < tol)


@dataclass(frozen=True)
class SymplecticMap:
    """A linear canonical map from ``source`` coordinates to ``target`` coordinates."""

    matrix: np.ndarray
    source: str = "particle"
    target: str = "eigenmode"

    def __post_init__(self):
        object.__setattr__(self, "matrix", np.asarray(self.matrix, dtype=float))


def squeeze_map(s: float, source: str = "particle", target: str = "scaled") -> SymplecticMap:
    """``diag(s, 1/s, 1/s, s)``: stretch q1, compress q2 (and the conjugate momenta)."""
    if not s > 0:
        raise InvalidInputError(f"squeeze factor must be positive, got {s}")
    return SymplecticMap(np.diag([s, 1.0 / s, 1.0 / s, s]), source, target)


def rotation_map(phi: float, source: str = "scaled", target: str = "eigenmode") -> SymplecticMap:
    c, s = math.cos(phi), math.sin(phi)
    r = np.array([[c, s], [-s, c]])
    return SymplecticMap(block_diag(r, r), source, target)


def compose(a: SymplecticMap, b: SymplecticMap) -> SymplecticMap:
    """``a`` after ``b``."""
    if b.target != a.source:
        raise ContractError(f"cannot compose: {b.source}->{b.target} followed by {a.source}->{a.target}")
    return SymplecticMap(a.matrix @ b.matrix, b.source, a.target)


def invert(a: SymplecticMap) -> SymplecticMap:
    return SymplecticMap(np.linalg.inv(a.matrix), a.target, a.source)


def normal_mode_map(pair: IonPair) -> SymplecticMap:
    """``M = M2 M1`` taking particle coordinates to eigenmode coordinates."""
    s, phi = scale_and_angle(pair)
    return compose(rotation_map(phi), squeeze_map(s))


# -- scales and the mapping protocol -----------------------------------------


@dataclass(frozen=True)
class ModeScales:
    """Zero-point length (m) and momentum (kg m/s) of the relevant oscillators.

    The eigenmodes have effective mass ``mu = sqrt(m1 m2)``.  The dark entries
    are the readout scales (mass ``m1`` at ``sqrt(omega_minus omega_plus)``);
    the bright entries refer to ion 2 alone in the trap.
    """

    x_minus: float
    x_plus: float
    p_minus: float
    p_plus: float
    x_dark: float
    p_dark: float
    x_bright: float
    p_bright: float

    def eigenmode_diag(self) -> np.ndarray:
        """SI value of one dimensionless unit (x or p as in the alpha convention)."""
        return math.sqrt(2.0) * np.array([self.x_minus, self.x_plus, self.p_minus, self.p_plus])


def mode_scales(pair: IonPair) -> ModeScales:
    w_minus, w_plus = eigenfrequencies(pair)
    mu = pair.mu
    return ModeScales(
        x_minus=zero_point_length(mu, w_minus),
        x_plus=zero_point_length(mu, w_plus),
        p_minus=zero_point_momentum(mu, w_minus),
        p_plus=zero_point_momentum(mu, w_plus),
        x_dark=zero_point_length(pair.m1, math.sqrt(w_minus * w_plus)),
        p_dark=zero_point_momentum(pair.m1, math.sqrt(w_minus * w_plus)),
        x_bright=zero_point_length(pair.m2, pair.omega2),
        p_bright=zero_point_momentum(pair.m2, pair.omega2),
    )


def mapping_squeezes(pair: Union[IonPair, NormalModes]) -> tuple[float, float]:
    """Squeeze parameters ``(r_minus, r_plus)`` of the mapping, ``x -> exp(-r) x``.

    ``r_plus = -r_minus = ln(omega_plus / omega_minus) / 4``.  Together with a
    beam splitter of angle ``phi`` this makes ``x_minus(T) = x_dark(0)`` and
    ``p_minus(T) = p_dark(0)`` as operator identities (readout units).  Only
    the difference ``r_plus - r_minus`` is fixed by the physics; splitting it
    symmetrically keeps the largest squeeze, and so the Fock-space spread,
    as small as possible.
    """
    if isinstance(pair, NormalModes):
        w_minus, w_plus = pair.omega_minus, pair.omega_plus
    else:
        w_minus, w_plus = eigenfrequencies(pair)
    r = 0.25 * math.log(w_plus / w_minus)
    return -r, r


def local_squeeze_matrix(r_minus: float, r_plus: float) -> np.ndarray:
    return np.diag([math.exp(-r_minus), math.exp(-r_plus), math.exp(r_minus), math.exp(r_plus)])


def beamsplitter_matrix(theta: float) -> np.ndarray:
    """Moment map of ``exp(theta (a- a+^dag - a-^dag a+))`` in dimensionless quadratures."""
    return rotation_map(-theta).matrix


def mapping_map(pair: IonPair, dimensionless: bool = False) -> SymplecticMap:
    """Moment map of the full state transfer (squeezes first, then beam splitter).

    By default the matrix acts on SI eigenmode quadratures.
    """
    r_minus, r_plus = mapping_squeezes(pair)
    _, phi = scale_and_angle(pair)
    m = beamsplitter_matrix(phi) @ local_squeeze_matrix(r_minus, r_plus)
    if not dimensionless:
        lam = np.diag(mode_scales(pair).eigenmode_diag())
        m = lam @ m @ np.linalg.inv(lam)
    return SymplecticMap(m, "eigenmode", "eigenmode")


def dark_coefficients(pair: IonPair) -> tuple[float, float, float, float]:
    """``(a, b, c, d)`` with ``x_dark = a x- + b x+`` and ``p_dark = c p- + d p+``.

    All quadratures dimensionless; the dark ion is measured in the readout
    units of :class:`ModeScales`.  Canonical closure forces ``a c + b d = 1``.
    """
    minv = invert(normal_mode_map(pair)).matrix
    sc = mode_scales(pair)
    if abs(minv[0, 2]) > 0 or abs(minv[0, 3]) > 0 or abs(minv[2, 0]) > 0 or abs(minv[2, 1]) > 0:
        raise ContractError("position and momentum blocks of M^-1 must decouple")
    return (
        minv[0, 0] * sc.x_minus / sc.x_dark,
        minv[0, 1] * sc.x_plus / sc.x_dark,
        minv[2, 2] * sc.p_minus / sc.p_dark,
        minv[2, 3] * sc.p_plus / sc.p_dark,
    )


# -- Gaussian states -----------------------------------------------------------


@dataclass(frozen=True)
class GaussianState:
    """First and second moments of an ``n``-mode Gaussian state.

    ``cov[i, j] = <{dX_i, dX_j}>/2``.  ``hbar`` fixes the unit system: the
    default SI value, or 1 for dimensionless quadratures (vacuum variance 1/2).
    """

    mean: np.ndarray
    cov: np.ndarray
    basis: str = "eigenmode"
    hbar: float = HBAR

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mean.ndim != 1 or mean.size % 2 or cov.shape != (mean.size, mean.size):
            raise ContractError(f"inconsistent shapes: mean {mean.shape}, cov {cov.shape}")
        scale = np.max(np.abs(cov)) or 1.0
        if np.max(np.abs(cov - cov.T)) > 1e-12 * scale:
            raise InvalidStateError("covariance matrix is not symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", 0.5 * (cov + cov.T))

    @property
    def n_modes(self) -> int:
        return self.mean.size // 2

    def _balanced_cov(self) -> np.ndarray:
        # local symplectic rescaling to O(1) entries, in units of hbar
        n = self.n_modes
        d = np.diag(self.cov)
        if np.any(d <= 0):
            raise InvalidStateError("non-positive quadrature variance")
        c = (d[:n] / d[n:]) ** 0.25
        t = np.diag(np.concatenate([1.0 / c, c]))
        return t @ self.cov @ t / self.hbar

    def symplectic_eigenvalues(self) -> np.ndarray:
        """Williamson eigenvalues in units of hbar (1/2 for a pure state)."""
        v = self._balanced_cov()
        ev = np.linalg.eigvals(1j * symplectic_form(self.n_modes) @ v)
        return np.sort(np.abs(ev.real))[:: 2]

    def is_physical(self, tol: float = 1e-10) -> bool:
        v = self._balanced_cov()
        m = v + 0.5j * symplectic_form(self.n_modes)
        return bool(np.min(np.linalg.eigvalsh(m)) > -tol)


def gaussian_transform(state: GaussianState, S: Union[SymplecticMap, np.ndarray]) -> GaussianState:
    if isinstance(S, SymplecticMap):
        if S.source != state.basis:
            raise ContractError(f"map expects {S.source!r} coordinates, state is {state.basis!r}")
        matrix, basis = S.matrix, S.target
    else:
        matrix, basis = np.asarray(S, dtype=float), state.basis
    if matrix.shape != state.cov.shape:
        raise ContractError(f"map shape {matrix.shape} does not match state dimension {state.cov.shape}")
    if not is_symplectic(matrix):
        raise ContractError("transformation is not symplectic")
    return GaussianState(matrix @ state.mean, matrix @ state.cov @ matrix.T, basis, state.hbar)


def select_mode(state: GaussianState, mode: int, basis: str) -> GaussianState:
    idx = [mode, mode + state.n_modes]
    return GaussianState(state.mean[idx], state.cov[np.ix_(idx, idx)], basis, state.hbar)


def rescale(state: GaussianState, factors: Sequence[float], hbar: float, basis: Optional[str] = None) -> GaussianState:
    """Divide every quadrature by the matching factor (a diagonal change of units)."""
    inv = np.diag(1.0 / np.asarray(factors, dtype=float))
    return GaussianState(inv @ state.mean, inv @ state.cov @ inv, basis or state.basis, hbar)


def eigenmode_to_dimensionless(state: GaussianState, pair: IonPair) -> GaussianState:
    return rescale(state, mode_scales(pair).eigenmode_diag(), 1.0)


def eigenmode_from_dimensionless(state: GaussianState, pair: IonPair) -> GaussianState:
    return rescale(state, 1.0 / mode_scales(pair).eigenmode_diag(), HBAR)


def dark_to_dimensionless(state: GaussianState, pair: IonPair) -> GaussianState:
    sc = mode_scales(pair)
    return rescale(state, [math.sqrt(2) * sc.x_dark, math.sqrt(2) * sc.p_dark], 1.0)


def particle1_marginal(state: GaussianState, pair: IonPair) -> GaussianState:
    """Moments of (q1, p1) in SI units, from an SI eigenmode-basis state."""
    if state.basis != "eigenmode":
        raise ContractError(f"expected an eigenmode-basis state, got {state.basis!r}")
    particle = gaussian_transform(state, invert(normal_mode_map(pair)))
    return select_mode(particle, 0, "dark")


def mapping_theorem_check(state: GaussianState, pair: IonPair) -> float:
    """Largest moment mismatch between the mapped (-) mode and the dark ion.

    Both sides are expressed in dimensionless units (the (-) mode in its own
    zero-point scales, the dark ion in the readout scales); the return value
    is the max-norm over the mean vector and covariance entries.
    """
    if state.basis != "eigenmode":
        raise ContractError(f"expected an eigenmode-basis state, got {state.basis!r}")
    mapped = gaussian_transform(state, mapping_map(pair))
    minus = select_mode(eigenmode_to_dimensionless(mapped, pair), 0, "minus")
    dark = dark_to_dimensionless(particle1_marginal(state, pair), pair)
    return float(max(np.max(np.abs(minus.mean - dark.mean)), np.max(np.abs(minus.cov - dark.cov))))


def gaussian_wigner(
    state: GaussianState,
    re: np.ndarray,
    im: np.ndarray,
    scales: Optional[tuple[float, float]] = None,
) -> WignerGrid:
    """Analytic Wigner function of a single-mode Gaussian state on an alpha grid.

    ``scales = (x0, p0)`` converts an SI state to dimensionless quadratures
    ``x = q / (sqrt2 x0)``; omit it for states already in ``hbar = 1`` units.
    """
    if state.n_modes != 1:
        raise ContractError("gaussian_wigner expects a single-mode state")
    if scales is not None:
        state = rescale(state, [math.sqrt(2) * scales[0], math.sqrt(2) * scales[1]], 1.0)
    elif state.hbar != 1.0:
        raise ContractError("SI state needs reference scales")
    det = float(np.linalg.det(state.cov))
    if not det > 0:
        raise InvalidStateError("singular covariance matrix")
    inv = np.linalg.inv(state.cov)
    re = np.asarray(re, dtype=float)
    im = np.asarray(im, dtype=float)
    dx = math.sqrt(2) * re[:, None] - state.mean[0]
    dp = math.sqrt(2) * im[None, :] - state.mean[1]
    quad = inv[0, 0] * dx**2 + 2 * inv[0, 1] * dx * dp + inv[1, 1] * dp**2
    # factor 2 converts the (x, p) density to the alpha-plane density
    values = 2.0 * np.exp(-0.5 * quad) / (2 * math.pi * math.sqrt(det))
    return WignerGrid(re, im, values, meta={"source": "gaussian"})


def auto_grid_extent(state: GaussianState, n_std: float = 6.0) -> float:
    """Half-width in alpha covering ``n_std`` standard deviations of a dimensionless single-mode state."""
    sd = math.sqrt(max(state.cov[0, 0], state.cov[1, 1]))
    return (float(np.max(np.abs(state.mean))) + n_std * sd) / math.sqrt(2)


# -- presets and random states (dimensionless, hbar = 1) -----------------------


def vacuum(n_modes: int = 1, basis: str = "eigenmode") -> GaussianState:
    return GaussianState(np.zeros(2 * n_modes), 0.5 * np.eye(2 * n_modes), basis, 1.0)


def thermal(nbar: Sequence[float], basis: str = "eigenmode") -> GaussianState:
    v = np.asarray(nbar, dtype=float) + 0.5
    return GaussianState(np.zeros(2 * v.size), np.diag(np.concatenate([v, v])), basis, 1.0)


def coherent(alpha: complex, basis: str = "single") -> GaussianState:
    mean = math.sqrt(2) * np.array([alpha.real, alpha.imag])
    return GaussianState(mean, 0.5 * np.eye(2), basis, 1.0)


def squeezed_vacuum(r: float, basis: str = "single") -> GaussianState:
    """``x -> exp(-r) x`` applied to vacuum."""
    return GaussianState(np.zeros(2), 0.5 * np.diag([math.exp(-2 * r), math.exp(2 * r)]), basis, 1.0)


def _phase_rotation(n_modes: int, mode: int, theta: float) -> np.ndarray:
    m = np.eye(2 * n_modes)
    c, s = math.cos(theta), math.sin(theta)
    i, j = mode, mode + n_modes
    m[i, i], m[i, j], m[j, i], m[j, j] = c, s, -s, c
    return m


def random_symplectic(rng: np.random.Generator, n_modes: int = 2, layers: int = 3, max_squeeze: float = 0.8) -> np.ndarray:
    """Product of random local squeezes, phase rotations and (for two modes) beam splitters."""
    m = np.eye(2 * n_modes)
    for _ in range(layers):
        for mode in range(n_modes):
            r = rng.uniform(-max_squeeze, max_squeeze)
            sq = np.eye(2 * n_modes)
            sq[mode, mode], sq[mode + n_modes, mode + n_modes] = math.exp(-r), math.exp(r)
            m = _phase_rotation(n_modes, mode, rng.uniform(0, 2 * math.pi)) @ sq @ m
        if n_modes == 2:
            m = rotation_map(rng.uniform(0, 2 * math.pi)).matrix @ m
    return m


def random_gaussian_state(
    rng: np.random.Generator,
    n_modes: int = 2,
    max_occupation: float = 3.0,
    displacement: float = 1.5,
    basis: str = "eigenmode",
) -> GaussianState:
    """Random physical state: thermal occupations <= ``max_occupation``, random symplectic, random mean."""
    base = thermal(rng.uniform(0.0, max_occupation, n_modes), basis)
    s = random_symplectic(rng, n_modes)
    mean = rng.normal(0.0, displacement, 2 * n_modes)
    return GaussianState(mean, s @ base.cov @ s.T, basis, 1.0)


def dark_product_state(dark: GaussianState, pair: IonPair) -> GaussianState:
    """SI eigenmode-basis state of ``dark (x) bright ground state`` in particle coordinates.

    ``dark`` is a dimensionless single-mode state in the readout units; the
    bright ion sits in the ground state of the lone-ion-2 trap.
    """
    if dark.n_modes != 1 or dark.hbar != 1.0:
        raise ContractError("dark state must be a dimensionless single-mode Gaussian state")
    sc = mode_scales(pair)
    f = math.sqrt(2) * np.array([sc.x_dark, sc.x_bright, sc.p_dark, sc.p_bright])
    mean = np.array([dark.mean[0], 0.0, dark.mean[1], 0.0])
    cov = np.diag([0.0, 0.5, 0.0, 0.5])
    cov[np.ix_([0, 2], [0, 2])] = dark.cov
    particle = GaussianState(f * mean, np.outer(f, f) * cov, "particle", HBAR)
    return gaussian_transform(particle, normal_mode_map(pair))
