"""Overlap matrix elements F_ab(k) = <phi_a|e^{ikx}|phi_b> between channels.

The overlap of two real translational wavefunctions with the photon phase
factor e^{ikx} controls the strength of every translational transition.
Both states are sampled on piecewise-uniform grids; states solved on the
same grid family integrate directly, anything else is resampled with cubic
interpolation onto the union of the two axes restricted to the common
support.  Quadrature is composite Simpson, same scheme as the norm
integrals of the states themselves.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline

from .eigensolver import LevelSet, TranslationalState
from .errors import ParameterError

__all__ = ["FranckCondonMatrix", "overlap", "build_matrix"]


def _support(state: TranslationalState) -> tuple[int, int]:
    """First and last grid index where the stored wavefunction is nonzero."""
    nz = np.flatnonzero(state.psi)
    if nz.size == 0:
        return 0, -1
    return int(nz[0]), int(nz[-1])


def _shared_axis(a: TranslationalState, b: TranslationalState) -> bool:
    if a.grid is b.grid:
        return True
    return a.grid.shares_prefix_with(b.grid)


def _overlap_shared(a: TranslationalState, b: TranslationalState,
                    k_inv_nm: float, moment: int,
                    phase: np.ndarray | None = None) -> complex | None:
    """Direct product on the common grid prefix; None if supports are disjoint."""
    a0, a1 = _support(a)
    b0, b1 = _support(b)
    lo = max(a0, b0)
    hi = min(a1, b1, a.grid.n - 1, b.grid.n - 1)
    if hi - lo < 2:
        return None
    x = a.grid.x[lo:hi + 1]
    w = a.psi[lo:hi + 1] * b.psi[lo:hi + 1]
    if moment:
        w = w * x ** moment
    if phase is not None:
        integrand = w * phase[lo:hi + 1]
    else:
        integrand = w * np.exp(1j * k_inv_nm * x)
    return complex(simpson(integrand, x=x))


def _overlap_resampled(a: TranslationalState, b: TranslationalState,
                       k_inv_nm: float, moment: int) -> complex | None:
    a0, a1 = _support(a)
    b0, b1 = _support(b)
    if a1 < a0 or b1 < b0:
        return None
    xa, xb = a.x, b.x
    lo = max(xa[a0], xb[b0])
    hi = min(xa[a1], xb[b1])
    if hi <= lo:
        return None
    x = np.union1d(xa[(xa >= lo) & (xa <= hi)], xb[(xb >= lo) & (xb <= hi)])
    if x.size < 5:
        return None
    fa = CubicSpline(xa, a.psi)(x)
    fb = CubicSpline(xb, b.psi)(x)
    w = fa * fb
    if moment:
        w = w * x ** moment
    return complex(simpson(w * np.exp(1j * k_inv_nm * x), x=x))


def overlap(a: TranslationalState, b: TranslationalState, k_inv_nm: float,
            moment: int = 0) -> complex:
    """Overlap <phi_a|x^moment e^{ikx}|phi_b>.

    moment=0 is the plain transition matrix element; moment=1 gives the
    analytic k-derivative via dF/dk = i * overlap(a, b, k, moment=1).
    Disjoint supports return exactly 0 with a warning.
    """
    if _shared_axis(a, b):
        value = _overlap_shared(a, b, k_inv_nm, moment)
    else:
        value = _overlap_resampled(a, b, k_inv_nm, moment)
    if value is None:
        warnings.warn(
            "wavefunction supports are disjoint; overlap set to 0",
            stacklevel=2)
        return 0j
    return value


@dataclass(frozen=True)
class FranckCondonMatrix:
    """Dense block of overlaps between one excited and one ground basis.

    values[i, j] = F_{a_i b_j}(k).  disjoint[i, j] marks pairs whose
    supports never overlapped (entry forced to 0).  Norm tags record the
    state normalization per axis: |F|^2 is dimensionless for unit/unit and
    carries 1/Hz per delta-of-energy axis.
    """

    k_inv_nm: float
    row_states: tuple[TranslationalState, ...]
    col_states: tuple[TranslationalState, ...]
    values: np.ndarray
    disjoint: np.ndarray
    row_norm: str
    col_norm: str

    @property
    def abs2(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def row_sums(self) -> np.ndarray:
        """Sum_b |F_ab|^2 per row; bounded by 1 for a unit-normalized basis."""
        return self.abs2.sum(axis=1)

    def conjugated(self) -> "FranckCondonMatrix":
        """The k -> -k matrix, exact by the reality of the wavefunctions."""
        return FranckCondonMatrix(
            k_inv_nm=-self.k_inv_nm, row_states=self.row_states,
            col_states=self.col_states, values=np.conj(self.values),
            disjoint=self.disjoint, row_norm=self.row_norm,
            col_norm=self.col_norm)


def _state_list(basis, side: str) -> list[TranslationalState]:
    states = list(basis.states if isinstance(basis, LevelSet) else basis)
    if not states:
        raise ParameterError(f"empty {side} basis")
    return states


def _axis_norm(states: list[TranslationalState], side: str) -> str:
    norms = {s.norm for s in states}
    if len(norms) != 1:
        raise ParameterError(
            f"mixed normalization on the {side} axis: {sorted(norms)}")
    return norms.pop()


def build_matrix(excited, ground, k_inv_nm: float,
                 threads: int = 1) -> FranckCondonMatrix:
    """All-pairs overlap block between two bases (rows excited, cols ground)."""
    rows = _state_list(excited, "excited")
    cols = _state_list(ground, "ground")
    row_norm = _axis_norm(rows, "excited")
    col_norm = _axis_norm(cols, "ground")

    values = np.zeros((len(rows), len(cols)), dtype=np.complex128)
    disjoint = np.zeros(values.shape, dtype=bool)

    # Precompute the phase factor once per distinct grid; every pair on a
    # shared axis then reduces to a windowed triple product.
    phases: dict[int, np.ndarray] = {}

    def fill_row(i: int) -> int:
        a = rows[i]
        n_disjoint = 0
        for j, b in enumerate(cols):
            if _shared_axis(a, b):
                gid = id(a.grid)
                if gid not in phases:
                    phases[gid] = np.exp(1j * k_inv_nm * a.grid.x)
                v = _overlap_shared(a, b, k_inv_nm, 0, phase=phases[gid])
            else:
                v = _overlap_resampled(a, b, k_inv_nm, 0)
            if v is None:
                disjoint[i, j] = True
                n_disjoint += 1
            else:
                values[i, j] = v
        return n_disjoint

    if threads > 1:
        # prime the phase cache before sharing it across workers
        for a in rows:
            gid = id(a.grid)
            if gid not in phases:
                phases[gid] = np.exp(1j * k_inv_nm * a.grid.x)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            skipped = sum(pool.map(fill_row, range(len(rows))))
    else:
        skipped = sum(fill_row(i) for i in range(len(rows)))
    if skipped:
        warnings.warn(
            f"{skipped} state pairs had disjoint supports; overlaps set to 0",
            stacklevel=2)
    return FranckCondonMatrix(
        k_inv_nm=float(k_inv_nm), row_states=tuple(rows),
        col_states=tuple(cols), values=values, disjoint=disjoint,
        row_norm=row_norm, col_norm=col_norm)
