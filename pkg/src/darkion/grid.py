"""Phase-space grids in the dimensionless alpha plane.

Convention used everywhere: ``x = (a + a^dag)/sqrt2``, ``p = (a - a^dag)/(i sqrt2)``,
``alpha = (x + i p)/sqrt2``; the Wigner function is normalised so that
``integral W d^2alpha = 1`` and the vacuum peaks at ``2/pi``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidInputError

CONVENTION = "integral W d^2alpha = 1, alpha = (x+ip)/sqrt2, x = (a+a^dag)/sqrt2"

# bit flags attached to individual grid points
FLAG_DISPLACEMENT = 1  # displaced state leaks past the padded Fock range
FLAG_TRUNCATION = 2  # population above the fitted n_max
FLAG_INVERSION = 4  # population fit residual above tolerance


@dataclass
class WignerGrid:
    """Wigner samples ``values[i, j]`` at ``alpha = re[i] + 1j * im[j]``."""

    re: np.ndarray
    im: np.ndarray
    values: np.ndarray
    flags: Optional[np.ndarray] = None
    convention: str = CONVENTION
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.re = np.asarray(self.re, dtype=float)
        self.im = np.asarray(self.im, dtype=float)
        self.values = np.asarray(self.values)
        if np.iscomplexobj(self.values):
            self.values = self.values.real
        if self.values.shape != (self.re.size, self.im.size):
            raise InvalidInputError(
                f"values shape {self.values.shape} does not match axes ({self.re.size}, {self.im.size})"
            )
        for axis in (self.re, self.im):
            if axis.size > 1 and not np.all(np.diff(axis) > 0):
                raise InvalidInputError("grid axes must be strictly increasing")
        if self.flags is None:
            self.flags = np.zeros(self.values.shape, dtype=np.int64)

    @property
    def alphas(self) -> np.ndarray:
        return self.re[:, None] + 1j * self.im[None, :]

    @property
    def cell_area(self) -> float:
        dre = self.re[1] - self.re[0] if self.re.size > 1 else 1.0
        dim = self.im[1] - self.im[0] if self.im.size > 1 else 1.0
        return float(dre * dim)

    def integral(self) -> float:
        return float(self.values.sum() * self.cell_area)

    def to_csv(self) -> str:
        """Rows ``q, p, w, flags`` with ``q = Re alpha`` and ``p = Im alpha``."""
        buf = io.StringIO(newline="")
        buf.write(f"# convention: {self.convention}\n")
        buf.write("# q = Re(alpha), p = Im(alpha) (dimensionless); w in units of 1/area(alpha)\n")
        buf.write("q,p,w,flags\n")
        for i, q in enumerate(self.re):
            for j, p in enumerate(self.im):
                buf.write(f"{q:.10f},{p:.10f},{self.values[i, j]:.12e},{int(self.flags[i, j])}\n")
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "convention": self.convention,
            "re": self.re.tolist(),
            "im": self.im.tolist(),
            "values": self.values.tolist(),
            "flags": self.flags.tolist(),
            "meta": self.meta,
        }


def alpha_axes(extent: float = 3.0, points: int = 41) -> tuple[np.ndarray, np.ndarray]:
    """Square grid ``[-extent, extent]**2`` with ``points`` samples per axis."""
    if extent <= 0 or points < 2:
        raise InvalidInputError("extent must be positive and points >= 2")
    axis = np.linspace(-extent, extent, points)
    return axis, axis.copy()


def same_axes(a: WignerGrid, b: WignerGrid) -> bool:
    return (
        a.re.shape == b.re.shape
        and a.im.shape == b.im.shape
        and np.allclose(a.re, b.re, rtol=0, atol=1e-12)
        and np.allclose(a.im, b.im, rtol=0, atol=1e-12)
    )
