"""Single-mode readout: displaced sideband Rabi signals and population inversion.

For each phase-space point the state is displaced by ``-alpha``, a sideband
pulse of variable length is applied and the flip probability is recorded.
The Fock populations are fitted by non-negative least squares and the
Wigner value follows from the displaced parity ``(2/pi) sum (-1)^n p_n``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import nnls
from scipy.special import eval_laguerre

from .errors import ContractError, InvalidInputError, InversionError, TruncationWarning
from .fockengine import displaced_populations
from .grid import FLAG_DISPLACEMENT, FLAG_INVERSION, FLAG_TRUNCATION, WignerGrid, same_axes

SIMPLEX_WEIGHT = 1e3
DISPLACEMENT_LEAK_TOL = 1e-12
POPULATION_TOL = 1e-10
MAX_AUTO_LEVEL = 60


def default_periods(n_max: int) -> int:
    return max(1, math.ceil(math.sqrt(n_max + 1) / 2))


@dataclass(frozen=True)
class ReadoutConfig:
    """Sideband readout model.

    ``coupling`` is the sideband Rabi rate ``rabi * eta`` in rad/s.  ``times``
    defaults to ``4 (n_max + 1)`` uniform points over
    ``max(1, ceil(sqrt(n_max + 1) / 2))`` periods ``2 pi / coupling``: the
    rates ``sqrt(n)`` crowd together at high ``n`` and a single period
    cannot tell them apart beyond ``n_max ~ 20``.  ``n_max=None`` lets each point pick the smallest
    level range that holds all but ``1e-10`` of its displaced population.
    """

    coupling: float = 1.0
    times: Optional[tuple] = None
    n_max: Optional[int] = None
    gamma: float = 0.0
    shots: Optional[int] = None
    sideband: str = "red"
    residual_tol: float = 1e-6

    def __post_init__(self):
        if not (math.isfinite(self.coupling) and self.coupling > 0):
            raise InvalidInputError("sideband coupling must be positive")
        if self.n_max is not None and self.n_max < 1:
            raise InvalidInputError("n_max must be at least 1")
        if self.gamma < 0:
            raise InvalidInputError("damping rate must be non-negative")
        if self.shots is not None and self.shots < 1:
            raise InvalidInputError("shots must be a positive integer")
        if self.sideband not in ("red", "blue"):
            raise InvalidInputError("sideband must be 'red' or 'blue'")
        if self.times is not None:
            t = np.asarray(self.times, dtype=float)
            if t.ndim != 1 or t.size < 2 or np.any(np.diff(t) <= 0) or t[0] < 0:
                raise InvalidInputError("sample times must be non-negative and strictly increasing")
            object.__setattr__(self, "times", tuple(float(x) for x in t))

    def sample_times(self, n_max: Optional[int] = None) -> np.ndarray:
        if self.times is not None:
            return np.asarray(self.times)
        n_max = n_max if n_max is not None else self.n_max
        if n_max is None:
            raise InvalidInputError("need n_max to build the default time grid")
        return np.linspace(0.0, default_periods(n_max) * 2 * math.pi / self.coupling, 4 * (n_max + 1))

    def with_n_max(self, n_max: int) -> "ReadoutConfig":
        return ReadoutConfig(self.coupling, self.times, n_max, self.gamma, self.shots, self.sideband, self.residual_tol)


def design_matrix(config: ReadoutConfig, n_levels: int, times: Optional[np.ndarray] = None) -> np.ndarray:
    """``A[t, n]`` = flip probability at time ``t`` for Fock state ``n``."""
    t = config.sample_times(n_levels - 1) if times is None else np.asarray(times)
    n = np.arange(n_levels)
    rate = np.sqrt(n if config.sideband == "red" else n + 1) * config.coupling
    return np.exp(-config.gamma * t)[:, None] * np.sin(np.outer(t, rate)) ** 2


def sideband_signal(
    populations: Sequence[float],
    config: ReadoutConfig,
    rng: Optional[np.random.Generator] = None,
    times: Optional[np.ndarray] = None,
) -> np.ndarray:
    """``P(t) = exp(-gamma t) sum_n p_n sin^2(coupling sqrt(n) t)`` (red sideband).

    With ``config.shots`` set, each time point is replaced by a binomial
    frequency drawn from ``rng``.
    """
    p = np.asarray(populations, dtype=float)
    if times is None:
        times = config.sample_times(config.n_max if config.n_max is not None else p.size - 1)
    signal = design_matrix(config, p.size, times) @ p
    signal = np.clip(signal, 0.0, 1.0)
    if config.shots:
        if rng is None:
            raise InvalidInputError("shot noise needs a random generator")
        signal = rng.binomial(config.shots, signal) / config.shots
    return signal


@dataclass(frozen=True)
class Inversion:
    populations: np.ndarray
    residual: float  # rms misfit per time point
    singular_ratio: float
    truncated: bool


def invert_populations(signal: Sequence[float], config: ReadoutConfig, times: Optional[np.ndarray] = None) -> Inversion:
    """Fit ``p_0 .. p_nmax`` to a sideband signal, ``p >= 0`` and ``sum p = 1``.

    On the red sideband ``p_0`` produces no signal; it absorbs whatever the
    other levels leave, so ``sum_{n>=1} p_n <= 1`` is enforced too.  Raises
    :class:`InversionError` for a rank-deficient design and warns with
    :class:`TruncationWarning` when the misfit points at population beyond
    ``n_max``.
    """
    if config.n_max is None:
        raise InvalidInputError("inversion needs n_max")
    y = np.asarray(signal, dtype=float)
    t = config.sample_times() if times is None else np.asarray(times)
    if y.shape != t.shape:
        raise ContractError(f"signal has {y.size} points, time grid has {t.size}")
    a = design_matrix(config, config.n_max + 1, t)
    informative = a[:, 1:] if config.sideband == "red" else a
    sv = np.linalg.svd(informative, compute_uv=False)
    ratio = float(sv[-1] / sv[0]) if sv[0] > 0 else 0.0
    if informative.shape[0] < informative.shape[1] or ratio < 1e-12:
        raise InversionError(f"design matrix is rank deficient (singular value ratio {ratio:.2e})")
    lhs = np.vstack([a, SIMPLEX_WEIGHT * np.ones(config.n_max + 1)])
    rhs = np.concatenate([y, [SIMPLEX_WEIGHT]])
    p, _ = nnls(lhs, rhs, maxiter=50 * lhs.shape[1])
    residual = float(np.sqrt(np.mean((a @ p - y) ** 2)))
    tol = config.residual_tol
    if config.shots:
        tol += 3.0 * 0.5 / math.sqrt(config.shots)
    truncated = residual > tol
    if truncated:
        warnings.warn(
            f"sideband fit misfit {residual:.2e} exceeds {tol:.2e}; population above n_max={config.n_max}?",
            TruncationWarning,
            stacklevel=2,
        )
    return Inversion(p, residual, ratio, truncated)


def parity_wigner(populations: Sequence[float]) -> float:
    p = np.asarray(populations, dtype=float)
    return float(2.0 / math.pi * np.sum(p * (-1.0) ** np.arange(p.size)))


def auto_n_max(populations: np.ndarray, tol: float = POPULATION_TOL) -> int:
    """Smallest ``n_max >= 1`` with at most ``tol`` population above it."""
    tail = np.cumsum(populations[::-1])[::-1]  # tail[n] = sum_{m >= n}
    above = np.flatnonzero(tail > tol)
    n_max = int(above[-1]) if above.size else 0
    return int(min(max(n_max, 1), MAX_AUTO_LEVEL))


@dataclass(frozen=True)
class PointResult:
    alpha: complex
    wigner: float
    populations: np.ndarray
    true_populations: np.ndarray
    residual: float
    flags: int


def _padded_size(rho: np.ndarray, alpha: complex) -> int:
    a = abs(alpha)
    return int(rho.shape[0] + math.ceil(a * a + 8 * a + 10))


def reconstruct_point(
    rho_minus: np.ndarray,
    alpha: complex,
    config: ReadoutConfig,
    rng: Optional[np.random.Generator] = None,
) -> PointResult:
    """Displace by ``-alpha``, synthesise the sideband signal, invert, take the parity."""
    rho = np.asarray(rho_minus, dtype=complex)
    pops, leak = displaced_populations(rho, alpha, _padded_size(rho, alpha))
    flags = FLAG_DISPLACEMENT if leak > DISPLACEMENT_LEAK_TOL else 0
    n_max = config.n_max if config.n_max is not None else auto_n_max(pops)
    cfg = config.with_n_max(n_max)
    times = cfg.sample_times()
    signal = sideband_signal(pops, cfg, rng, times)
    if pops[n_max + 1 :].sum() > POPULATION_TOL:
        flags |= FLAG_TRUNCATION
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", TruncationWarning)
        inv = invert_populations(signal, cfg, times)
    if any(issubclass(w.category, TruncationWarning) for w in caught):
        flags |= FLAG_INVERSION
    return PointResult(complex(alpha), parity_wigner(inv.populations), inv.populations, pops, inv.residual, flags)


@dataclass
class ReconstructionReport:
    grid: WignerGrid
    populations: list  # per point, row-major over (re, im)
    residuals: np.ndarray
    metrics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.to_dict(),
            "residuals": self.residuals.tolist(),
            "populations": [p.tolist() for p in self.populations],
            "metrics": self.metrics,
        }


def point_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for grid point ``index`` derived from the master seed."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def reconstruct_grid(
    rho_minus: np.ndarray,
    re: Sequence[float],
    im: Sequence[float],
    config: ReadoutConfig,
    seed: Optional[int] = None,
    reference: Optional[WignerGrid] = None,
) -> ReconstructionReport:
    """Run :func:`reconstruct_point` on every node of the ``re x im`` grid."""
    re = np.asarray(re, dtype=float)
    im = np.asarray(im, dtype=float)
    if config.shots and seed is None:
        raise InvalidInputError("shot-noise reconstruction needs a seed")
    values = np.zeros((re.size, im.size))
    flags = np.zeros((re.size, im.size), dtype=np.int64)
    residuals = np.zeros((re.size, im.size))
    pops = []
    for i, x in enumerate(re):
        for j, y in enumerate(im):
            idx = i * im.size + j
            rng = point_rng(seed, idx) if seed is not None else None
            res = reconstruct_point(rho_minus, complex(x, y), config, rng)
            values[i, j] = res.wigner
            flags[i, j] = res.flags
            residuals[i, j] = res.residual
            pops.append(res.populations)
    meta = {"source": "sideband reconstruction", "shots": config.shots, "seed": seed, "sideband": config.sideband}
    grid = WignerGrid(re, im, values, flags, meta=meta)
    report = ReconstructionReport(grid, pops, residuals)
    if reference is not None:
        report.metrics = compare(grid, reference)
    return report


def compare(a: WignerGrid, b: WignerGrid) -> dict:
    """Sup-norm, cell-weighted L2 norm of the difference, and the overlap ``pi sum W_a W_b dA``.

    The overlap equals ``Tr[rho_a rho_b]`` for Wigner functions normalised
    to one over the alpha plane.
    """
    if not same_axes(a, b):
        raise ContractError("grids have different axes")
    diff = a.values - b.values
    cell = a.cell_area
    return {
        "sup": float(np.max(np.abs(diff))),
        "l2": float(math.sqrt(np.sum(diff**2) * cell)),
        "overlap": float(math.pi * np.sum(a.values * b.values) * cell),
    }


def fock_wigner(n: int, re: Sequence[float], im: Sequence[float]) -> WignerGrid:
    """Analytic ``W_n(alpha) = (2/pi) (-1)^n exp(-2|alpha|^2) L_n(4|alpha|^2)``."""
    re = np.asarray(re, dtype=float)
    im = np.asarray(im, dtype=float)
    r2 = re[:, None] ** 2 + im[None, :] ** 2
    values = 2.0 / math.pi * (-1) ** n * np.exp(-2 * r2) * eval_laguerre(n, 4 * r2)
    return WignerGrid(re, im, values, meta={"source": f"analytic fock {n}"})
