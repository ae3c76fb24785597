"""Truncated two-mode Fock-space simulation of the mapping and its readout.

Basis states ``|n-, n+>`` are stored with flat index ``n- * N+ + n+``.  Mode
labels are ``"-"`` (low frequency) and ``"+"``.  Gate conventions:

* displacement ``D(beta) = exp(beta a^dag - beta* a)``
* squeeze ``S(r) = exp(r/2 (a^2 - a^dag^2))``, so ``x -> exp(-r) x``
* beam splitter ``B(theta) = exp(theta (a- a+^dag - a-^dag a+))``, so
  ``a- -> cos(theta) a- - sin(theta) a+`` in the Heisenberg picture

Wigner functions use the alpha-plane convention of :mod:`darkion.grid`.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy import sparse
from scipy.special import gammaln

from .errors import ContractError, CutoffError, InvalidInputError, InvalidStateError, ResolutionError
from .grid import FLAG_DISPLACEMENT, FLAG_TRUNCATION, WignerGrid
from .symplectic import dark_coefficients, mapping_squeezes
from .trapmodes import IonPair, NormalModes, normal_modes

DEFAULT_CUTOFF = 50
TAIL_THRESHOLD = 1e-8
TAIL_FRACTION = 0.2

_MODE_ALIASES = {"-": 0, "minus": 0, "+": 1, "plus": 1}


def mode_index(mode: Union[str, int]) -> int:
    if mode in (0, 1):
        return int(mode)
    try:
        return _MODE_ALIASES[mode]
    except (KeyError, TypeError):
        raise InvalidInputError(f"unknown mode {mode!r}; use '-' or '+'") from None


def tail_levels(cutoff: int) -> int:
    """Number of top levels counted as the tail of a mode with ``cutoff`` levels."""
    return max(1, math.ceil(TAIL_FRACTION * cutoff))


def single_mode_tail(rho: np.ndarray) -> float:
    pops = np.real(np.diag(rho))
    return float(max(0.0, pops[-tail_levels(pops.size):].sum()))


# -- ladder operators and single-mode presets ----------------------------------


def annihilation(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), 1)


def _ket_to_dm(ket: np.ndarray) -> np.ndarray:
    ket = ket / np.linalg.norm(ket)
    return np.outer(ket, ket.conj())


def coherent_ket(beta: complex, cutoff: int) -> np.ndarray:
    """Exact coherent amplitudes ``exp(-|beta|^2/2) beta^n / sqrt(n!)`` (not renormalised)."""
    n = np.arange(cutoff)
    if beta == 0:
        ket = np.zeros(cutoff, dtype=complex)
        ket[0] = 1.0
        return ket
    logmag = n * math.log(abs(beta)) - 0.5 * abs(beta) ** 2 - 0.5 * gammaln(n + 1)
    return np.exp(logmag) * np.exp(1j * n * cmath.phase(beta))


def squeezed_ket(r: float, cutoff: int) -> np.ndarray:
    """``S(r)|0>``: ``<2k| = (-tanh r)^k sqrt((2k)!) / (2^k k!) / sqrt(cosh r)``."""
    ket = np.zeros(cutoff, dtype=complex)
    t = math.tanh(r)
    for k in range((cutoff + 1) // 2):
        if t == 0 and k > 0:
            break
        logc = 0.5 * gammaln(2 * k + 1) - k * math.log(2) - gammaln(k + 1)
        ket[2 * k] = (-t) ** k * math.exp(logc) / math.sqrt(math.cosh(r))
    return ket


def fock_dm(n: int, cutoff: int) -> np.ndarray:
    if not 0 <= n < cutoff:
        raise CutoffError(f"Fock level {n} does not fit below cutoff {cutoff}")
    rho = np.zeros((cutoff, cutoff), dtype=complex)
    rho[n, n] = 1.0
    return rho


def vacuum_dm(cutoff: int) -> np.ndarray:
    return fock_dm(0, cutoff)


def coherent_dm(beta: complex, cutoff: int) -> np.ndarray:
    return _ket_to_dm(coherent_ket(beta, cutoff))


def squeezed_dm(r: float, cutoff: int) -> np.ndarray:
    return _ket_to_dm(squeezed_ket(r, cutoff))


def cat_dm(beta: complex, cutoff: int, parity: int = 1) -> np.ndarray:
    """Normalised ``|beta> + parity |-beta>``."""
    if parity not in (1, -1):
        raise InvalidInputError("cat parity must be +1 or -1")
    if beta == 0 and parity == -1:
        raise InvalidInputError("odd cat with beta = 0 is the null vector")
    return _ket_to_dm(coherent_ket(beta, cutoff) + parity * coherent_ket(-beta, cutoff))


def thermal_dm(nbar: float, cutoff: int) -> np.ndarray:
    if nbar < 0:
        raise InvalidInputError("mean occupation must be non-negative")
    n = np.arange(cutoff)
    pops = (nbar / (1 + nbar)) ** n / (1 + nbar) if nbar > 0 else (n == 0).astype(float)
    return np.diag(pops / pops.sum()).astype(complex)


# -- two-mode states -------------------------------------------------------------


@dataclass(frozen=True)
class TwoModeFockState:
    """Density operator on the truncated ``N- x N+`` two-mode Fock space."""

    rho: np.ndarray
    cutoffs: tuple[int, int]
    tail_threshold: float = TAIL_THRESHOLD

    def __post_init__(self):
        n_minus, n_plus = (int(c) for c in self.cutoffs)
        if n_minus < 1 or n_plus < 1:
            raise InvalidInputError(f"cutoffs must be positive, got {self.cutoffs}")
        rho = np.asarray(self.rho, dtype=complex)
        dim = n_minus * n_plus
        if rho.shape != (dim, dim):
            raise ContractError(f"rho shape {rho.shape} does not match cutoffs {self.cutoffs}")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "cutoffs", (n_minus, n_plus))

    @classmethod
    def from_product(cls, rho_minus, rho_plus, tail_threshold: float = TAIL_THRESHOLD) -> "TwoModeFockState":
        rho_minus = np.asarray(rho_minus, dtype=complex)
        rho_plus = np.asarray(rho_plus, dtype=complex)
        return cls(np.kron(rho_minus, rho_plus), (rho_minus.shape[0], rho_plus.shape[0]), tail_threshold)

    @classmethod
    def from_ket(cls, psi, tail_threshold: float = TAIL_THRESHOLD) -> "TwoModeFockState":
        """``psi[n-, n+]`` amplitudes; normalised on the way in."""
        psi = np.asarray(psi, dtype=complex)
        if psi.ndim != 2:
            raise ContractError("ket must be a 2-D array indexed [n-, n+]")
        flat = psi.ravel() / np.linalg.norm(psi)
        return cls(np.outer(flat, flat.conj()), psi.shape, tail_threshold)

    @property
    def dim(self) -> int:
        return self.cutoffs[0] * self.cutoffs[1]

    @property
    def tensor(self) -> np.ndarray:
        n_minus, n_plus = self.cutoffs
        return self.rho.reshape(n_minus, n_plus, n_minus, n_plus)

    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.rho)).reshape(self.cutoffs)

    def marginal_populations(self, mode) -> np.ndarray:
        return self.populations().sum(axis=1 - mode_index(mode))

    @property
    def tail_mass(self) -> float:
        """Population with either mode in the top 20% of its levels."""
        pops = self.populations()
        t_minus, t_plus = (tail_levels(c) for c in self.cutoffs)
        inner = pops[: self.cutoffs[0] - t_minus, : self.cutoffs[1] - t_plus].sum()
        return float(max(0.0, pops.sum() - inner))

    @property
    def certified(self) -> bool:
        return self.tail_mass < self.tail_threshold

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.rho)))

    def validate(self, herm_tol: float = 1e-12, trace_tol: float = 1e-10, psd_tol: float = 1e-10) -> None:
        if np.max(np.abs(self.rho - self.rho.conj().T)) > herm_tol:
            raise InvalidStateError("density operator is not Hermitian")
        if abs(self.trace - 1.0) > trace_tol:
            raise InvalidStateError(f"trace {self.trace!r} differs from 1")
        if np.min(np.linalg.eigvalsh(self.rho)) < -psd_tol:
            raise InvalidStateError("density operator has a negative eigenvalue")

    def with_rho(self, rho: np.ndarray) -> "TwoModeFockState":
        return TwoModeFockState(rho, self.cutoffs, self.tail_threshold)


def product_state(rho_minus, rho_plus, tail_threshold: float = TAIL_THRESHOLD) -> TwoModeFockState:
    return TwoModeFockState.from_product(rho_minus, rho_plus, tail_threshold)


# -- gates ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GateSpec:
    """``kind`` in {displacement, squeeze, beamsplitter}; ``target`` a mode or the pair."""

    kind: str
    parameter: complex
    target: Union[str, tuple] = "-"

    def __post_init__(self):
        if self.kind not in ("displacement", "squeeze", "beamsplitter"):
            raise InvalidInputError(f"unknown gate kind {self.kind!r}")
        value = complex(self.parameter)
        if not (math.isfinite(value.real) and math.isfinite(value.imag)):
            raise InvalidInputError("gate parameter must be finite")
        if self.kind in ("squeeze", "beamsplitter") and value.imag != 0:
            raise InvalidInputError(f"{self.kind} parameter must be real")
        if self.kind == "beamsplitter":
            object.__setattr__(self, "target", ("-", "+"))
        else:
            mode_index(self.target)


@dataclass(frozen=True)
class Gate:
    """A built gate: a single-mode unitary ``local`` or a sparse two-mode ``coupling``."""

    spec: GateSpec
    cutoffs: tuple[int, int]
    local: Optional[np.ndarray] = None
    coupling: Optional[sparse.csr_matrix] = None

    def matrix(self) -> np.ndarray:
        """Dense unitary on the full two-mode space."""
        if self.coupling is not None:
            return self.coupling.toarray()
        eye_minus = np.eye(self.cutoffs[0])
        eye_plus = np.eye(self.cutoffs[1])
        if mode_index(self.spec.target) == 0:
            return np.kron(self.local, eye_plus)
        return np.kron(eye_minus, self.local)

    def unitarity_error(self, exclude_top: int = 4) -> float:
        """``max |U^dag U - 1|`` on states with both modes below the top ``exclude_top`` levels."""
        if self.local is not None:
            u = self.local
            keep = np.arange(u.shape[0] - exclude_top)
            g = u.conj().T @ u
            return float(np.max(np.abs(g[np.ix_(keep, keep)] - np.eye(keep.size))))
        n_minus, n_plus = self.cutoffs
        u = self.coupling
        g = (u.conj().T @ u).toarray()
        nm, np_ = np.divmod(np.arange(n_minus * n_plus), n_plus)
        keep = np.flatnonzero((nm < n_minus - exclude_top) & (np_ < n_plus - exclude_top))
        return float(np.max(np.abs(g[np.ix_(keep, keep)] - np.eye(keep.size))))


def _expm_antihermitian(generator: np.ndarray) -> np.ndarray:
    # exp(G) with G anti-Hermitian: diagonalise the Hermitian matrix iG
    w, v = np.linalg.eigh(1j * generator)
    return (v * np.exp(-1j * w)) @ v.conj().T


def _local_generator(spec: GateSpec, cutoff: int) -> np.ndarray:
    a = annihilation(cutoff).astype(complex)
    ad = a.conj().T
    if spec.kind == "displacement":
        beta = complex(spec.parameter)
        return beta * ad - np.conj(beta) * a
    r = float(complex(spec.parameter).real)
    return 0.5 * r * (a @ a - ad @ ad)


def _beamsplitter(theta: float, cutoffs: tuple[int, int]) -> sparse.csr_matrix:
    n_minus, n_plus = cutoffs
    rows, cols, vals = [], [], []
    for total in range(n_minus + n_plus - 1):
        lo, hi = max(0, total - n_plus + 1), min(total, n_minus - 1)
        nms = np.arange(lo, hi + 1)
        nps = total - nms
        size = nms.size
        g = np.zeros((size, size))
        for i in range(size - 1):
            # <nm+1, np-1| G |nm, np> = -theta sqrt(nm+1) sqrt(np)
            c = theta * math.sqrt((nms[i] + 1) * nps[i])
            g[i + 1, i] = -c
            g[i, i + 1] = c
        block = _expm_antihermitian(g.astype(complex)) if size > 1 else np.ones((1, 1), dtype=complex)
        idx = nms * n_plus + nps
        rr, cc = np.meshgrid(idx, idx, indexing="ij")
        rows.append(rr.ravel())
        cols.append(cc.ravel())
        vals.append(block.ravel())
    dim = n_minus * n_plus
    return sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    )


def build_gate(spec: GateSpec, cutoffs: Sequence[int], tail_threshold: float = TAIL_THRESHOLD) -> Gate:
    """Exponentiate the truncated generator of ``spec``.

    Local gates are checked by their action on vacuum: if that image already
    puts more than ``tail_threshold`` into the top 20% of levels, the cutoff
    cannot hold certified results and :class:`CutoffError` is raised.
    """
    cutoffs = tuple(int(c) for c in cutoffs)
    if len(cutoffs) != 2 or min(cutoffs) < 4:
        raise InvalidInputError(f"gates need two cutoffs >= 4, got {cutoffs}")
    if spec.kind == "beamsplitter":
        return Gate(spec, cutoffs, coupling=_beamsplitter(float(complex(spec.parameter).real), cutoffs))
    cutoff = cutoffs[mode_index(spec.target)]
    u = _expm_antihermitian(_local_generator(spec, cutoff))
    leak = float(np.sum(np.abs(u[-tail_levels(cutoff):, 0]) ** 2))
    if leak > tail_threshold:
        raise CutoffError(
            f"{spec.kind}({spec.parameter}) puts {leak:.2e} of vacuum into the top levels of cutoff {cutoff}"
        )
    return Gate(spec, cutoffs, local=u)


def _apply_local(tensor: np.ndarray, u: np.ndarray, mode: int) -> np.ndarray:
    if mode == 0:
        t = np.tensordot(u, tensor, axes=(1, 0))  # i b c d
        t = np.tensordot(t, u.conj(), axes=(2, 1))  # i b d j
        return t.transpose(0, 1, 3, 2)
    t = np.tensordot(u, tensor, axes=(1, 1))  # i a c d
    t = np.tensordot(t, u.conj(), axes=(3, 1))  # i a c j
    return t.transpose(1, 0, 2, 3)


def apply(state: TwoModeFockState, gate: Gate) -> TwoModeFockState:
    """``rho -> U rho U^dag``; certification follows from the tail mass of the result."""
    if tuple(gate.cutoffs) != state.cutoffs:
        raise ContractError(f"gate built for cutoffs {gate.cutoffs}, state has {state.cutoffs}")
    if gate.coupling is not None:
        u = gate.coupling
        left = u @ state.rho
        rho = (u.conj() @ left.T).T
    else:
        tensor = _apply_local(state.tensor, gate.local, mode_index(gate.spec.target))
        rho = tensor.reshape(state.dim, state.dim)
    rho = 0.5 * (rho + rho.conj().T)
    return state.with_rho(rho)


def partial_trace(state: TwoModeFockState, keep) -> np.ndarray:
    """Reduced density operator of mode ``keep``."""
    if mode_index(keep) == 0:
        return np.einsum("abcb->ac", state.tensor)
    return np.einsum("abad->bd", state.tensor)


# -- the mapping ------------------------------------------------------------------


def _resolve_modes(modes: Union[NormalModes, IonPair]) -> NormalModes:
    return modes if isinstance(modes, NormalModes) else normal_modes(modes)


def mapping_gates(modes: Union[NormalModes, IonPair]) -> list[GateSpec]:
    """Squeeze each mode, then the beam splitter at the mixing angle."""
    nm = _resolve_modes(modes)
    r_minus, r_plus = mapping_squeezes(nm)
    return [
        GateSpec("squeeze", r_minus, "-"),
        GateSpec("squeeze", r_plus, "+"),
        GateSpec("beamsplitter", nm.phi),
    ]


def run_gates(state: TwoModeFockState, specs: Sequence[GateSpec]) -> TwoModeFockState:
    for spec in specs:
        if spec.kind != "beamsplitter" and complex(spec.parameter) == 0:
            continue
        state = apply(state, build_gate(spec, state.cutoffs, state.tail_threshold))
    return state


def map_state(state: TwoModeFockState, modes: Union[NormalModes, IonPair]) -> TwoModeFockState:
    """Evolve an eigenmode-basis state through the mapping.

    Afterwards the ``(-)`` mode carries the dark-ion motional state in the
    readout units of :class:`darkion.symplectic.ModeScales`.
    """
    return run_gates(state, mapping_gates(modes))


def unmap_state(state: TwoModeFockState, modes: Union[NormalModes, IonPair]) -> TwoModeFockState:
    """Inverse of :func:`map_state`: beam splitter back, then undo the squeezes."""
    inverse = [GateSpec(g.kind, -complex(g.parameter).real, g.target) for g in reversed(mapping_gates(modes))]
    return run_gates(state, inverse)


def dark_state(rho_dark: np.ndarray, modes: Union[NormalModes, IonPair], cutoffs: Sequence[int]) -> TwoModeFockState:
    """Eigenmode-basis state whose dark-ion marginal is ``rho_dark``.

    Built as the preimage of ``rho_dark (x) |0><0|`` under the mapping, so it
    works for non-Gaussian dark states too.
    """
    cutoffs = tuple(int(c) for c in cutoffs)
    rho_dark = np.asarray(rho_dark, dtype=complex)
    if rho_dark.shape[0] > cutoffs[0]:
        raise CutoffError("dark state does not fit the (-) cutoff")
    padded = np.zeros((cutoffs[0], cutoffs[0]), dtype=complex)
    padded[: rho_dark.shape[0], : rho_dark.shape[0]] = rho_dark
    return unmap_state(product_state(padded, vacuum_dm(cutoffs[1])), modes)


# -- displacement matrix elements -------------------------------------------------

_ALTERNATING = (-1.0) ** np.arange(1, 4097)  # (-1)^k for k = 1, 2, ...


def _displacement_columns(betas: np.ndarray, size: int):
    """Yield ``(j, values)`` with ``values[k, i] = <j+k| D(beta_i) |j>`` for ``k < size - j``.

    Each sub-diagonal ``k`` follows a normalised associated-Laguerre
    recurrence in ``j``, seeded by the Poisson amplitude; this stays accurate
    where the plain column recurrence blows up.  All sub-diagonals advance
    together.
    """
    x = np.abs(betas) ** 2
    k = np.arange(size, dtype=float)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        logb = np.log(np.abs(betas))
        g = np.exp(k * logb - 0.5 * x - 0.5 * gammaln(k + 1))
    g = np.where(k == 0, np.exp(-0.5 * x), np.where(x > 0, g, 0.0))
    ph = np.exp(1j * k * np.angle(betas))
    g_prev = np.zeros_like(g)
    with np.errstate(over="ignore", invalid="ignore"):
        for j in range(size):
            yield j, g[: size - j] * ph[: size - j]
            g_next = ((2 * j + 1 + k - x) * g - np.sqrt(j * (j + k)) * g_prev) / np.sqrt((j + 1) * (j + k + 1))
            g_prev, g = g, g_next


def displacement_matrix(beta: complex, rows: int, cols: Optional[int] = None) -> np.ndarray:
    """``<m| D(beta) |n>`` for ``m < rows``, ``n < cols``, exact (no truncated generator)."""
    cols = rows if cols is None else cols
    size = max(rows, cols)
    d = np.zeros((size, size), dtype=complex)
    for j, val in _displacement_columns(np.array([complex(beta)]), size):
        v = val[:, 0]
        d[j:, j] = v
        d[j, j + 1 :] = _ALTERNATING[: v.size - 1] * np.conj(v[1:])
    return d[:rows, :cols]


def displacement_traces(ops: np.ndarray, betas: np.ndarray) -> np.ndarray:
    """``Tr[A_r D(beta_i)]`` for a stack ``ops[r]`` of square matrices.

    Returns an array of shape ``(len(ops),) + betas.shape``.
    """
    ops = np.asarray(ops, dtype=complex)
    if ops.ndim == 2:
        return displacement_traces(ops[None], betas)[0]
    betas = np.asarray(betas, dtype=complex)
    flat = betas.ravel()
    size = ops.shape[1]
    out = np.zeros((ops.shape[0], flat.size), dtype=complex)
    for j, val in _displacement_columns(flat, size):
        # lower entries D[j+k, j] pair with A[j, j+k]; upper D[j, j+k] = (-1)^k conj(D[j+k, j])
        out += ops[:, j, j:] @ val
        if val.shape[0] > 1:
            out += (ops[:, j + 1 :, j] * _ALTERNATING[: val.shape[0] - 1]) @ np.conj(val[1:])
    return out.reshape((ops.shape[0],) + betas.shape)


# -- Wigner functions ----------------------------------------------------------------


def _axes_from(grid_or_re, im=None):
    if isinstance(grid_or_re, WignerGrid):
        return grid_or_re.re, grid_or_re.im
    if im is None:
        raise InvalidInputError("pass a WignerGrid or both axes")
    return np.asarray(grid_or_re, dtype=float), np.asarray(im, dtype=float)


def displaced_populations(rho: np.ndarray, alpha: complex, size: Optional[int] = None) -> tuple[np.ndarray, float]:
    """Populations of ``D(-alpha) rho D(-alpha)^dag`` on ``size`` levels, and the mass beyond them."""
    rho = np.asarray(rho, dtype=complex)
    n = rho.shape[0]
    size = size or n
    d = displacement_matrix(-alpha, size, n)
    pops = np.real(np.einsum("mi,ij,mj->m", d, rho, d.conj()))
    pops = np.clip(pops, 0.0, None)
    return pops, float(max(0.0, np.real(np.trace(rho)) - pops.sum()))


def wigner_displaced_parity(rho: np.ndarray, grid_or_re, im=None) -> WignerGrid:
    """``W(alpha) = (2/pi) sum_n (-1)^n <n| D(-alpha) rho D(-alpha)^dag |n>``.

    The parity of the displaced copy equals ``Tr[rho D(2 alpha) Pi]``, which
    needs only matrix elements inside the cutoff, so every grid point is exact
    for the truncated operator.  Points beyond the phase-space reach
    ``sqrt(cutoff)`` of the truncated space carry the displacement flag.
    """
    re, im = _axes_from(grid_or_re, im)
    rho = np.asarray(rho, dtype=complex)
    n = rho.shape[0]
    parity = (-1.0) ** np.arange(n)
    alphas = re[:, None] + 1j * im[None, :]
    values = (2.0 / math.pi) * np.real(displacement_traces(parity[:, None] * rho, 2.0 * alphas))
    flags = np.where(np.abs(alphas) > math.sqrt(n), FLAG_DISPLACEMENT, 0)
    if single_mode_tail(rho) >= TAIL_THRESHOLD:
        flags = flags | FLAG_TRUNCATION
    return WignerGrid(re, im, values, flags, meta={"source": "displaced parity", "cutoff": n})


def _occupied(pops: np.ndarray, tol: float = 1e-14) -> int:
    idx = np.flatnonzero(pops > tol)
    return int(idx[-1]) + 1 if idx.size else 1


def _schmidt_terms(state: TwoModeFockState, sizes: tuple[int, int], tol: float = 1e-13):
    """Operator-Schmidt decomposition ``rho = sum_r A_r (x) B_r`` on the occupied block."""
    s_minus, s_plus = sizes
    t = state.tensor[:s_minus, :s_plus, :s_minus, :s_plus]
    rho_minus = np.einsum("abcb->ac", t)
    rho_plus = np.einsum("abad->bd", t)
    if np.max(np.abs(t - np.einsum("ac,bd->abcd", rho_minus, rho_plus))) < 1e-13:
        return rho_minus[None], rho_plus[None]
    realigned = t.transpose(0, 2, 1, 3).reshape(s_minus * s_minus, s_plus * s_plus)
    u, sv, vh = np.linalg.svd(realigned, full_matrices=False)
    keep = sv > tol * sv[0]
    a = (u[:, keep] * sv[keep]).T.reshape(-1, s_minus, s_minus)
    b = vh[keep].reshape(-1, s_plus, s_plus)
    return a, b


@dataclass
class OracleSettings:
    """Characteristic-function quadrature controls (defaults are automatic)."""

    edge_tol: float = 1e-10
    drift_tol: float = 1e-3
    max_refinements: int = 4
    chunk: int = 8192
    extra: dict = field(default_factory=dict)


def particle1_characteristic(state: TwoModeFockState, pair: IonPair, u, v, sizes=None) -> np.ndarray:
    """``chi(u, v) = Tr[rho exp(i (u x1 + v p1))]`` on the outer product grid ``u x v``.

    ``x1 = a x- + b x+`` and ``p1 = c p- + d p+`` are the dark-ion quadratures
    (readout units); the exponential splits into ``D(beta-) (x) D(beta+)``
    with ``beta- = (i u a - v c)/sqrt2`` and ``beta+ = (i u b - v d)/sqrt2``.
    """
    a, b, c, d = dark_coefficients(pair)
    if sizes is None:
        sizes = (_occupied(state.marginal_populations("-")), _occupied(state.marginal_populations("+")))
    ops_minus, ops_plus = _schmidt_terms(state, sizes)
    uu, vv = np.meshgrid(np.asarray(u, float), np.asarray(v, float), indexing="ij")
    beta_minus = (1j * uu * a - vv * c) / math.sqrt(2)
    beta_plus = (1j * uu * b - vv * d) / math.sqrt(2)
    f = displacement_traces(ops_minus, beta_minus)
    g = displacement_traces(ops_plus, beta_plus)
    return np.einsum("r...,r...->...", f, g)


def particle1_wigner_oracle(
    state: TwoModeFockState,
    pair: IonPair,
    grid_or_re,
    im=None,
    settings: Optional[OracleSettings] = None,
) -> WignerGrid:
    """Dark-ion Wigner function straight from the eigenmode-basis state.

    No mapping is simulated: ``chi`` is sampled on a uniform ``(u, v)`` grid
    sized from the occupied Fock range, then Fourier-summed onto the
    requested alpha points.  Raises :class:`ResolutionError` when the sampled
    ``chi`` does not decay at the grid edge or the mass inside the estimated
    support drifts from 1.
    """
    settings = settings or OracleSettings()
    re, im = _axes_from(grid_or_re, im)
    a, b, c, d = dark_coefficients(pair)
    sizes = (_occupied(state.marginal_populations("-")), _occupied(state.marginal_populations("+")))
    reach = [math.sqrt(2 * s + 1) + 6.0 for s in sizes]
    # support of W1 along x1 and p1 (dimensionless quadratures)
    x_support = abs(a) * reach[0] + abs(b) * reach[1]
    p_support = abs(c) * reach[0] + abs(d) * reach[1]
    x_eval = math.sqrt(2) * float(np.max(np.abs(re)))
    p_eval = math.sqrt(2) * float(np.max(np.abs(im)))
    # chi is negligible once either displacement exceeds its mode's reach
    beta_reach = [math.sqrt(4 * s + 2) + 6.0 for s in sizes]
    u_max = math.sqrt(2) * min(beta_reach[0] / max(abs(a), 1e-300), beta_reach[1] / max(abs(b), 1e-300))
    v_max = math.sqrt(2) * min(beta_reach[0] / max(abs(c), 1e-300), beta_reach[1] / max(abs(d), 1e-300))

    for attempt in range(settings.max_refinements + 1):
        period_x = x_support + max(x_support, x_eval) + 1.0
        period_p = p_support + max(p_support, p_eval) + 1.0
        du, dv = 2 * math.pi / period_x, 2 * math.pi / period_p
        u = du * np.arange(-math.ceil(u_max / du), math.ceil(u_max / du) + 1)
        v = dv * np.arange(-math.ceil(v_max / dv), math.ceil(v_max / dv) + 1)
        chi = particle1_characteristic(state, pair, u, v, sizes)
        edge = float(max(np.abs(chi[[0, -1], :]).max(), np.abs(chi[:, [0, -1]]).max()))
        weight = du * dv / (4 * math.pi**2)
        sx = 2 * np.where(u == 0, x_support, np.sin(u * x_support) / np.where(u == 0, 1, u))
        sp = 2 * np.where(v == 0, p_support, np.sin(v * p_support) / np.where(v == 0, 1, v))
        drift = abs(1.0 - float(np.real(weight * sx @ chi @ sp)))
        if edge <= settings.edge_tol and drift <= settings.drift_tol:
            break
        if edge > settings.edge_tol:
            u_max *= 1.4
            v_max *= 1.4
        if drift > settings.drift_tol:
            x_support *= 1.4
            p_support *= 1.4
    else:
        raise ResolutionError(f"characteristic-function grid unresolved: edge {edge:.2e}, drift {drift:.2e}")

    ex = np.exp(-1j * np.outer(math.sqrt(2) * re, u))
    ep = np.exp(-1j * np.outer(math.sqrt(2) * im, v))
    w_xp = weight * np.real(ex @ chi @ ep.T)
    flags = np.zeros(w_xp.shape, dtype=np.int64) if state.certified else np.full(w_xp.shape, FLAG_TRUNCATION)
    meta = {
        "source": "characteristic function",
        "chi_shape": [int(u.size), int(v.size)],
        "edge": edge,
        "drift": drift,
        "certified": state.certified,
    }
    return WignerGrid(re, im, 2.0 * w_xp, flags, meta=meta)


def mapped_wigner(
    state: TwoModeFockState, modes: Union[NormalModes, IonPair], grid_or_re, im=None
) -> tuple[WignerGrid, TwoModeFockState]:
    """Map, trace out ``(+)`` and evaluate the ``(-)`` Wigner function by displaced parity."""
    mapped = map_state(state, modes)
    grid = wigner_displaced_parity(partial_trace(mapped, "-"), grid_or_re, im)
    if not mapped.certified:
        grid.flags |= FLAG_TRUNCATION
    grid.meta["certified"] = mapped.certified
    grid.meta["tail_mass"] = mapped.tail_mass
    return grid, mapped


# -- state-spec documents ----------------------------------------------------------


def _complex_param(value, name: str) -> complex:
    if isinstance(value, dict):
        extra = set(value) - {"re", "im"}
        if extra:
            raise InvalidInputError(f"{name}: unknown keys {sorted(extra)}")
        return complex(float(value.get("re", 0.0)), float(value.get("im", 0.0)))
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(float(value))
    raise InvalidInputError(f"{name} must be a number, [re, im] or {{re, im}}")


_PRESET_KEYS = {
    "vacuum": set(),
    "fock": {"n"},
    "coherent": {"beta"},
    "squeezed": {"r"},
    "cat": {"beta", "parity"},
    "thermal": {"nbar"},
}


def single_mode_from_spec(doc: dict, cutoff: int) -> np.ndarray:
    """Density operator for a preset document such as ``{"kind": "fock", "n": 1}``."""
    if not isinstance(doc, dict) or "kind" not in doc:
        raise InvalidInputError(f"state preset needs a 'kind': {doc!r}")
    kind = doc["kind"]
    if kind not in _PRESET_KEYS:
        raise InvalidInputError(f"unknown state kind {kind!r}; choose from {sorted(_PRESET_KEYS)}")
    extra = set(doc) - {"kind"} - _PRESET_KEYS[kind]
    if extra:
        raise InvalidInputError(f"{kind} state: unknown keys {sorted(extra)}")
    try:
        if kind == "vacuum":
            return vacuum_dm(cutoff)
        if kind == "fock":
            n = doc["n"]
            if not isinstance(n, int) or isinstance(n, bool) or n < 0:
                raise InvalidInputError("fock level n must be a non-negative integer")
            return fock_dm(n, cutoff)
        if kind == "coherent":
            return coherent_dm(_complex_param(doc["beta"], "beta"), cutoff)
        if kind == "squeezed":
            return squeezed_dm(float(doc["r"]), cutoff)
        if kind == "cat":
            return cat_dm(_complex_param(doc["beta"], "beta"), cutoff, int(doc.get("parity", 1)))
        return thermal_dm(float(doc["nbar"]), cutoff)
    except KeyError as exc:
        raise InvalidInputError(f"{kind} state: missing parameter {exc.args[0]!r}") from None


def state_from_spec(
    doc: dict,
    cutoffs: Sequence[int] = (DEFAULT_CUTOFF, DEFAULT_CUTOFF),
    modes: Union[NormalModes, IonPair, None] = None,
    tail_threshold: float = TAIL_THRESHOLD,
) -> TwoModeFockState:
    """Eigenmode-basis state from a state-spec document.

    Accepted shapes: ``{"-": preset, "+": preset}`` (missing modes are
    vacuum), a single preset with ``"mode"`` naming where it goes, or
    ``{"dark": preset}`` for the state whose dark-ion marginal is ``preset``
    (needs ``modes``).
    """
    if not isinstance(doc, dict):
        raise InvalidInputError("state spec must be a JSON object")
    cutoffs = tuple(int(c) for c in cutoffs)
    if "dark" in doc:
        if set(doc) != {"dark"}:
            raise InvalidInputError("a 'dark' state spec takes no other keys")
        if modes is None:
            raise InvalidInputError("the 'dark' preset needs the ion pair")
        state = dark_state(single_mode_from_spec(doc["dark"], cutoffs[0]), modes, cutoffs)
        return TwoModeFockState(state.rho, cutoffs, tail_threshold)
    if "kind" in doc:
        preset = dict(doc)
        target = preset.pop("mode", "-")
        doc = {"-" if mode_index(target) == 0 else "+": preset}
    unknown = set(doc) - {"-", "+"}
    if unknown:
        raise InvalidInputError(f"unknown state-spec keys {sorted(unknown)}")
    rho_minus = single_mode_from_spec(doc.get("-", {"kind": "vacuum"}), cutoffs[0])
    rho_plus = single_mode_from_spec(doc.get("+", {"kind": "vacuum"}), cutoffs[1])
    return product_state(rho_minus, rho_plus, tail_threshold)
