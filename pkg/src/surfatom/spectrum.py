"""Weak-field excitation spectra over translational level structure.

The excited-level populations follow the adiabatic weak-field formula:

    rho_aa = (s/2) * sum_b  gamma0^2 / (gamma_a^2 + 4 delta_ab^2)
                     * |F*_ab(k) - R F_ab(k)|^2 * rho_bb

with per-transition detuning delta_ab = delta - (E_a - E_b); the observed
signal is Gamma(delta) = sum_a rho_aa * gamma_a^(channel).  Initial ground
mixtures are either a Boltzmann-weighted set of continuum states on an
energy quadrature grid or a flat set of bound levels.  For continuum
mixtures the quadrature weight (in Hz) is folded into the mixture weight,
which makes the spectrum's absolute scale arbitrary but leaves every shape
quantity (peak shift, FWHM, asymmetry) unchanged.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .eigensolver import (Channel, GridPolicy, LevelSet, TranslationalState,
                          make_channel, solve_free_state)
from .errors import ConsistencyError, ParameterError
from .franck_condon import FranckCondonMatrix, build_matrix
from .model import AtomParams, FieldParams, boltzmann_energy_hz
from .potential import SurfacePotential
from .rates import LevelRates

__all__ = [
    "InitialMixture",
    "SpectrumRequest",
    "SpectrumResult",
    "thermal_mixture",
    "flat_bound_mixture",
    "custom_mixture",
    "combine_mixtures",
    "excited_populations",
    "scattering_rate",
    "sweep",
]

DEFAULT_DELTA_MIN_HZ = -150e6
DEFAULT_DELTA_MAX_HZ = 50e6
DEFAULT_DELTA_STEP_HZ = 0.25e6


@dataclass(frozen=True)
class InitialMixture:
    """Weighted incoherent set of ground translational states.

    Weights are dimensionless and sum to one; for continuum states the
    energy-quadrature weight is already folded in.
    """

    kind: str
    states: tuple[TranslationalState, ...]
    weights: np.ndarray
    temperature_k: float | None = None
    metadata: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(self.states) == 0:
            raise ParameterError("mixture needs at least one state")
        if w.shape != (len(self.states),):
            raise ParameterError("one weight per state required")
        if np.any(w < 0.0):
            raise ParameterError("mixture weights must be non-negative")
        total = w.sum()
        if abs(total - 1.0) > 1e-10:
            raise ParameterError(f"mixture weights must sum to 1, got {total}")
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return len(self.states)


def thermal_mixture(atom: AtomParams, pot: SurfacePotential, temperature_k: float,
                    e_cut_hz: float | None = None, n_nodes: int = 64,
                    e_min_hz: float = 1e3,
                    policy: GridPolicy | None = None,
                    channel: Channel | None = None,
                    cache=None) -> InitialMixture:
    """Boltzmann mixture of continuum states on an energy quadrature grid.

    Gauss-Legendre nodes are placed in sqrt(E): near threshold the coupling
    to shallow bound levels varies over tens of kHz while k_B T sits in the
    MHz range, so uniform-in-E nodes would under-resolve exactly the region
    that dominates the free-to-bound spectrum.  Energies below e_min_hz are
    excluded (their Boltzmann weight is O(e_min/kT); the asymptotic
    amplitude of slower states is not extractable on a finite grid).
    """
    if temperature_k <= 0.0:
        raise ParameterError(f"temperature must be positive, got {temperature_k}")
    if n_nodes < 2:
        raise ParameterError(f"need at least 2 quadrature nodes, got {n_nodes}")
    kt = boltzmann_energy_hz(temperature_k)
    if e_cut_hz is None:
        e_cut_hz = 10.0 * kt
    if e_cut_hz <= 0.0:
        raise ParameterError(f"energy cutoff must be positive, got {e_cut_hz}")
    if not 0.0 < e_min_hz < e_cut_hz:
        raise ParameterError(f"e_min must lie inside (0, e_cut), got {e_min_hz}")
    if e_cut_hz < 3.0 * kt:
        warnings.warn(
            f"energy cutoff {e_cut_hz:.3g} Hz is below 3 k_B T = {3 * kt:.3g} Hz; "
            "Boltzmann truncation error exceeds ~5%", stacklevel=2)
    if channel is None:
        channel = make_channel(pot, atom, policy, label="ground")
    nodes, gl_w = np.polynomial.legendre.leggauss(n_nodes)
    u_lo, u_hi = np.sqrt(e_min_hz), np.sqrt(e_cut_hz)
    u = 0.5 * (u_hi - u_lo) * (nodes + 1.0) + u_lo
    w_u = 0.5 * (u_hi - u_lo) * gl_w
    energies = u ** 2
    quad_w = 2.0 * u * w_u
    if cache is not None:
        states = tuple(cache.free_states(channel, energies))
    else:
        states = tuple(solve_free_state(channel, float(e)) for e in energies)
    weights = quad_w * np.exp(-energies / kt)
    weights /= weights.sum()
    return InitialMixture(
        kind="thermal-free", states=states, weights=weights,
        temperature_k=temperature_k,
        metadata={"e_cut_hz": float(e_cut_hz), "e_min_hz": float(e_min_hz),
                  "n_nodes": int(n_nodes), "kT_hz": float(kt)})


def flat_bound_mixture(levels: LevelSet, nu_min: int, nu_max: int) -> InitialMixture:
    """Equal-weight mixture of the bound levels nu_min..nu_max."""
    if nu_min > nu_max:
        raise ParameterError(f"empty level range [{nu_min}, {nu_max}]")
    picked = [s for s in levels if s.nu is not None and nu_min <= s.nu <= nu_max]
    if len(picked) != nu_max - nu_min + 1:
        raise ParameterError(
            f"levels {nu_min}..{nu_max} not all present in the solved set")
    n = len(picked)
    return InitialMixture(
        kind="flat-bound", states=tuple(picked), weights=np.full(n, 1.0 / n),
        metadata={"nu_min": int(nu_min), "nu_max": int(nu_max)})


def custom_mixture(states, weights) -> InitialMixture:
    w = np.asarray(weights, dtype=float)
    if w.size and w.sum() > 0.0:
        w = w / w.sum()
    return InitialMixture(kind="custom", states=tuple(states), weights=w)


def combine_mixtures(m1: InitialMixture, m2: InitialMixture,
                     w1: float) -> InitialMixture:
    """Convex combination w1*m1 + (1-w1)*m2 as a single mixture."""
    if not 0.0 <= w1 <= 1.0:
        raise ParameterError(f"combination weight must be in [0, 1], got {w1}")
    return InitialMixture(
        kind="custom", states=m1.states + m2.states,
        weights=np.concatenate((w1 * m1.weights, (1.0 - w1) * m2.weights)),
        metadata={"combined": (m1.kind, m2.kind, float(w1))})


@dataclass(frozen=True)
class SpectrumRequest:
    """Everything needed to sweep a spectrum over detuning."""

    field: FieldParams
    mixture: InitialMixture
    excited: LevelSet
    rates: LevelRates
    gamma0_hz: float
    delta_min_hz: float = DEFAULT_DELTA_MIN_HZ
    delta_max_hz: float = DEFAULT_DELTA_MAX_HZ
    delta_step_hz: float = DEFAULT_DELTA_STEP_HZ
    channel: str = "total"
    use_reflection: bool = True
    fc: FranckCondonMatrix | None = None
    fc_threads: int = 1

    def __post_init__(self):
        if self.gamma0_hz <= 0.0:
            raise ParameterError(f"gamma0 must be positive, got {self.gamma0_hz}")
        if self.delta_step_hz <= 0.0:
            raise ParameterError(f"detuning step must be positive, got {self.delta_step_hz}")
        if self.delta_max_hz <= self.delta_min_hz:
            raise ParameterError("detuning grid must be non-empty and increasing")
        if self.channel not in ("total", "channel", "radiation"):
            raise ParameterError(f"unknown channel selector {self.channel!r}")

    @property
    def delta_grid_hz(self) -> np.ndarray:
        n = int(round((self.delta_max_hz - self.delta_min_hz) / self.delta_step_hz)) + 1
        return self.delta_min_hz + self.delta_step_hz * np.arange(n)


@dataclass(frozen=True)
class _Prepared:
    """Detuning-independent pieces of the population formula."""

    shift_hz: np.ndarray      # E_a - E_b, shape (A, B)
    coupling: np.ndarray      # |F* - R F|^2 * rho_bb, shape (A, B)
    gamma_a: np.ndarray       # total decay per excited level, shape (A,)
    gamma_sel: np.ndarray     # selected-channel decay, shape (A,)
    gamma0_hz: float
    s: float


def _prepare(req: SpectrumRequest) -> _Prepared:
    exc = list(req.excited.states)
    mix = req.mixture
    rates = req.rates
    if len(rates) != len(exc) or not np.array_equal(
            rates.nus, [s.nu for s in exc]):
        raise ConsistencyError("rates do not cover the excited basis")
    fc = req.fc
    if fc is None:
        fc = build_matrix(req.excited, mix.states, req.field.k_inv_nm,
                          threads=req.fc_threads)
    else:
        if fc.row_states != tuple(exc) or fc.col_states != tuple(mix.states):
            raise ConsistencyError(
                "provided overlap matrix does not cover the requested pairs")
        if abs(fc.k_inv_nm - req.field.k_inv_nm) > 1e-12 * abs(req.field.k_inv_nm):
            raise ConsistencyError("overlap matrix built for a different k")
    r = req.field.reflection_r if req.use_reflection else 0.0
    f = fc.values
    coupling = np.abs(np.conj(f) - r * f) ** 2 * mix.weights[None, :]
    e_a = np.array([s.energy_hz for s in exc])
    e_b = np.array([s.energy_hz for s in mix.states])
    return _Prepared(
        shift_hz=e_a[:, None] - e_b[None, :],
        coupling=coupling,
        gamma_a=rates.gamma_hz,
        gamma_sel=rates.selected(req.channel),
        gamma0_hz=float(req.gamma0_hz),
        s=float(req.field.saturation_s))


def _populations(prep: _Prepared, delta_hz: float) -> np.ndarray:
    d_ab = delta_hz - prep.shift_hz
    lorentz = prep.gamma0_hz ** 2 / (prep.gamma_a[:, None] ** 2 + 4.0 * d_ab ** 2)
    return 0.5 * prep.s * np.sum(lorentz * prep.coupling, axis=1)


def excited_populations(req: SpectrumRequest, delta_hz: float) -> np.ndarray:
    """Per-excited-level population rho_aa at one detuning."""
    return _populations(_prepare(req), float(delta_hz))


def scattering_rate(req: SpectrumRequest, delta_hz: float) -> float:
    """Emission rate into the selected channel at one detuning."""
    prep = _prepare(req)
    return float(_populations(prep, float(delta_hz)) @ prep.gamma_sel)


@dataclass(frozen=True)
class SpectrumResult:
    """Swept spectrum plus extracted line-shape summary.

    delta_peak/fwhm/asymmetry are None when the peak sits on the grid
    boundary (flagged) or when a half-max crossing is missing.
    """

    delta_hz: np.ndarray
    gamma_hz: np.ndarray
    delta_peak_hz: float | None
    fwhm_hz: float | None
    asymmetry: float | None
    peak_at_boundary: bool
    edge_warning: bool
    metadata: dict


def _interp_peak(delta: np.ndarray, g: np.ndarray, i_pk: int) -> tuple[float, float]:
    """Cubic-interpolated peak position and height around grid index i_pk."""
    lo = max(i_pk - 3, 0)
    hi = min(i_pk + 4, g.size)
    if hi - lo < 4:
        return float(delta[i_pk]), float(g[i_pk])
    spl = CubicSpline(delta[lo:hi], g[lo:hi])
    dspl = spl.derivative()
    a = delta[max(i_pk - 1, lo)]
    b = delta[min(i_pk + 1, hi - 1)]
    da, db = float(dspl(a)), float(dspl(b))
    if da == 0.0:
        x0 = float(a)
    elif db == 0.0:
        x0 = float(b)
    elif da * db < 0.0:
        x0 = float(brentq(dspl, a, b))
    else:
        x0 = float(delta[i_pk])
    return x0, float(spl(x0))


def _half_crossing(delta: np.ndarray, g: np.ndarray, i_pk: int, half: float,
                   direction: int) -> float | None:
    """Linear-interpolated half-max crossing walking away from the peak."""
    i = i_pk
    while 0 <= i + direction < g.size:
        j = i + direction
        if g[j] <= half:
            if g[i] == g[j]:
                return float(delta[j])
            frac = (g[i] - half) / (g[i] - g[j])
            return float(delta[i] + frac * (delta[j] - delta[i]))
        i = j
    return None


def sweep(req: SpectrumRequest) -> SpectrumResult:
    """Evaluate Gamma(delta) on the request grid and extract the line shape."""
    prep = _prepare(req)
    delta = req.delta_grid_hz
    gamma = np.empty(delta.size)
    for i, d in enumerate(delta):
        gamma[i] = _populations(prep, float(d)) @ prep.gamma_sel

    meta = {
        "channel": req.channel,
        "saturation_s": req.field.saturation_s,
        "reflection_R": req.field.reflection_r if req.use_reflection else 0.0,
        "mixture_kind": req.mixture.kind,
        "mixture_size": len(req.mixture),
        "mixture_metadata": dict(req.mixture.metadata),
        "rates_source": req.rates.source,
        "excited_nu_range": [int(req.excited.nus[0]), int(req.excited.nus[-1])],
        "k_inv_nm": req.field.k_inv_nm,
    }

    i_pk = int(np.argmax(gamma))
    peak_at_boundary = i_pk == 0 or i_pk == delta.size - 1
    g_pk = float(gamma[i_pk])
    edge_warning = False
    if g_pk > 0.0 and not peak_at_boundary:
        edge_level = max(gamma[0], gamma[-1])
        if edge_level >= 0.05 * g_pk:
            edge_warning = True
            warnings.warn(
                "spectrum does not decay below 5% of the peak at the grid "
                "edges; widen the detuning grid", stacklevel=2)

    if peak_at_boundary or g_pk <= 0.0:
        return SpectrumResult(
            delta_hz=delta, gamma_hz=gamma, delta_peak_hz=None, fwhm_hz=None,
            asymmetry=None, peak_at_boundary=peak_at_boundary,
            edge_warning=edge_warning, metadata=meta)

    d_peak, g_peak = _interp_peak(delta, gamma, i_pk)
    half = 0.5 * g_peak
    left = _half_crossing(delta, gamma, i_pk, half, -1)
    right = _half_crossing(delta, gamma, i_pk, half, +1)
    fwhm = (right - left) if (left is not None and right is not None) else None

    asym = None
    if fwhm is not None:
        lo_mask = delta < d_peak - fwhm
        hi_mask = delta > d_peak + fwhm
        if lo_mask.sum() > 1 and hi_mask.sum() > 1:
            neg = float(np.trapezoid(gamma[lo_mask], delta[lo_mask]))
            pos = float(np.trapezoid(gamma[hi_mask], delta[hi_mask]))
            if pos > 0.0:
                asym = neg / pos

    return SpectrumResult(
        delta_hz=delta, gamma_hz=gamma, delta_peak_hz=d_peak, fwhm_hz=fwhm,
        asymmetry=asym, peak_at_boundary=False, edge_warning=edge_warning,
        metadata=meta)
