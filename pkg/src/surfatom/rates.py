"""Per-level spontaneous-emission rates from position-dependent profiles.

A RateProfile tabulates the total emission rate gamma(r) and the part
emitted into one detected channel (evanescent modes of a flat surface or
guided modes of a fiber; both enter the spectra identically).  Averaging a
profile over a level's probability density |phi_a(r)|^2 gives that level's
decay rate and its channel share.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .eigensolver import LevelSet, TranslationalState
from .errors import ParameterError, ProfileFormatError

__all__ = [
    "RateProfile",
    "LevelRates",
    "level_rates",
    "load_profile",
    "make_evanescent_profile",
    "uniform_profile",
]

_CSV_HEADER = ("r_nm", "gamma_total_Hz", "gamma_channel_Hz")


@dataclass(frozen=True)
class RateProfile:
    """Sampled emission-rate profile, linear in r between samples.

    Outside the sampled range the first/last sample is continued as a
    constant; a well-formed profile therefore ends at the free-space rate.
    """

    r_nm: np.ndarray
    gamma_total_hz: np.ndarray
    gamma_channel_hz: np.ndarray
    channel: str = "evanescent"
    source: str = "tabulated-file"

    def __post_init__(self):
        r = np.asarray(self.r_nm, dtype=float)
        gt = np.asarray(self.gamma_total_hz, dtype=float)
        gc = np.asarray(self.gamma_channel_hz, dtype=float)
        if not (r.ndim == gt.ndim == gc.ndim == 1) or not (r.size == gt.size == gc.size):
            raise ProfileFormatError("profile columns must be 1-d and equal length")
        if r.size < 2:
            raise ProfileFormatError("profile needs at least two samples")
        if not np.all(np.isfinite(r)) or not np.all(np.isfinite(gt)) or not np.all(np.isfinite(gc)):
            raise ProfileFormatError("profile contains non-finite values")
        if np.any(np.diff(r) <= 0.0):
            raise ProfileFormatError("profile r column must be strictly increasing")
        if r[0] < 0.0:
            raise ProfileFormatError("profile r values must be >= 0")
        if np.any(gt < 0.0) or np.any(gc < 0.0):
            raise ProfileFormatError("rates must be non-negative")
        if np.any(gc > gt * (1.0 + 1e-12)):
            raise ProfileFormatError("channel rate exceeds total rate in profile")
        if self.channel not in ("evanescent", "guided"):
            raise ParameterError(f"unknown channel kind {self.channel!r}")
        object.__setattr__(self, "r_nm", r)
        object.__setattr__(self, "gamma_total_hz", gt)
        object.__setattr__(self, "gamma_channel_hz", gc)

    def total(self, r) -> np.ndarray:
        return np.interp(r, self.r_nm, self.gamma_total_hz)

    def channel_rate(self, r) -> np.ndarray:
        return np.interp(r, self.r_nm, self.gamma_channel_hz)

    def scaled(self, factor: float) -> "RateProfile":
        return RateProfile(self.r_nm, self.gamma_total_hz * factor,
                           self.gamma_channel_hz * factor,
                           channel=self.channel, source=f"scaled({self.source})")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(_CSV_HEADER)
            for r, gt, gc in zip(self.r_nm, self.gamma_total_hz, self.gamma_channel_hz):
                w.writerow([f"{r:.12g}", f"{gt:.12g}", f"{gc:.12g}"])


def load_profile(path, channel: str = "evanescent") -> RateProfile:
    """Read a `r_nm,gamma_total_Hz,gamma_channel_Hz` CSV profile."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ProfileFormatError(f"empty profile file {path}") from None
        names = tuple(h.strip() for h in header)
        if names != _CSV_HEADER:
            raise ProfileFormatError(
                f"profile header must be {','.join(_CSV_HEADER)}, got {','.join(names)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise ProfileFormatError(f"line {lineno}: expected 3 columns, got {len(row)}")
            try:
                rows.append(tuple(float(c) for c in row))
            except ValueError as exc:
                raise ProfileFormatError(f"line {lineno}: {exc}") from None
    if not rows:
        raise ProfileFormatError(f"profile file {path} has no data rows")
    data = np.asarray(rows, dtype=float)
    return RateProfile(data[:, 0], data[:, 1], data[:, 2],
                       channel=channel, source=f"tabulated-file:{path}")


def make_evanescent_profile(gamma0_hz: float, g0: float = 0.2,
                            kappa_inv_nm: float = 1.0 / 140.0,
                            enhancement: float = 1.3,
                            r_max_nm: float = 2000.0,
                            n_samples: int = 4001) -> RateProfile:
    """Parametric near-surface profile.

    gamma_channel = gamma0 * g0 * exp(-2 kappa r), the evanescent-mode
    share; gamma_total = gamma0 * (1 + (enhancement - 1) * exp(-2 kappa r)),
    surface-enhanced decay relaxing to the free-space rate.  g0 <= enhancement
    keeps the channel below the total everywhere.
    """
    if gamma0_hz <= 0.0:
        raise ParameterError(f"gamma0 must be positive, got {gamma0_hz}")
    if not 0.0 <= g0 <= 1.0:
        raise ParameterError(f"g0 must be in [0, 1], got {g0}")
    if kappa_inv_nm <= 0.0:
        raise ParameterError(f"kappa must be positive, got {kappa_inv_nm}")
    if enhancement < max(g0, 1.0):
        raise ParameterError(
            f"enhancement must be >= max(g0, 1) = {max(g0, 1.0)}, got {enhancement}")
    r = np.linspace(0.0, r_max_nm, n_samples)
    decay = np.exp(-2.0 * kappa_inv_nm * r)
    return RateProfile(
        r, gamma0_hz * (1.0 + (enhancement - 1.0) * decay),
        gamma0_hz * g0 * decay,
        channel="evanescent", source="parametric-evanescent")


def make_guided_profile(gamma0_hz: float, g_short: float = 0.2,
                        l_short_nm: float = 25.0,
                        g_long: float = 0.025,
                        l_long_nm: float = 3000.0,
                        enhancement: float = 1.15,
                        n_samples: int = 2001) -> RateProfile:
    """Two-scale guided-channel profile; the default for spectrum runs.

    gamma_channel = gamma0 * (g_short * exp(-2 r / l_short)
                              + g_long * exp(-2 r / l_long)):
    a strong short-range coupling near the dielectric plus a weak
    long-range tail where the guided mode still overlaps the atom.
    gamma_total = gamma0 * (1 + (enhancement - 1) * exp(-2 r / l_short)),
    relaxing to the free-space rate away from the surface.  A single
    exponential cannot serve both deeply bound levels (peaked tens of nm
    out) and near-threshold ones (hundreds of nm); the second scale is
    what keeps shallow-level coupling finite without swamping deep levels.
    """
    if gamma0_hz <= 0.0:
        raise ParameterError(f"gamma0 must be positive, got {gamma0_hz}")
    for name, val in (("g_short", g_short), ("g_long", g_long)):
        if not 0.0 <= val <= 1.0:
            raise ParameterError(f"{name} must be in [0, 1], got {val}")
    for name, val in (("l_short_nm", l_short_nm), ("l_long_nm", l_long_nm)):
        if val <= 0.0:
            raise ParameterError(f"{name} must be positive, got {val}")
    if enhancement < max(g_short + g_long, 1.0):
        raise ParameterError(
            "enhancement must be >= max(g_short + g_long, 1), "
            f"got {enhancement}")
    r = np.unique(np.concatenate([
        np.linspace(0.0, 10.0 * l_short_nm, n_samples),
        np.linspace(0.0, 10.0 * l_long_nm, n_samples)]))
    short = np.exp(-2.0 * r / l_short_nm)
    long_ = np.exp(-2.0 * r / l_long_nm)
    return RateProfile(
        r, gamma0_hz * (1.0 + (enhancement - 1.0) * short),
        gamma0_hz * (g_short * short + g_long * long_),
        channel="guided", source="parametric-guided")


def uniform_profile(gamma0_hz: float, channel_fraction: float = 0.0,
                    r_max_nm: float = 1e6) -> RateProfile:
    """Position-independent rate; channel_fraction of it in the channel."""
    if not 0.0 <= channel_fraction <= 1.0:
        raise ParameterError(f"channel fraction must be in [0, 1], got {channel_fraction}")
    r = np.array([0.0, r_max_nm])
    g = np.full(2, float(gamma0_hz))
    return RateProfile(r, g, channel_fraction * g, source="uniform")


@dataclass(frozen=True)
class LevelRates:
    """Decay rates of a set of levels under one profile.

    gamma_rad_hz is stored as the computed difference, so the decomposition
    gamma = channel + radiation holds identically.
    """

    label: str
    nus: np.ndarray
    energies_hz: np.ndarray
    gamma_hz: np.ndarray
    gamma_channel_hz: np.ndarray
    channel: str
    source: str
    gamma_rad_hz: np.ndarray = field(init=False)

    def __post_init__(self):
        rad = self.gamma_hz - self.gamma_channel_hz
        # re-round the total through the same sum so that
        # gamma == channel + radiation holds bitwise, not just to an ulp
        object.__setattr__(self, "gamma_rad_hz", rad)
        object.__setattr__(self, "gamma_hz", self.gamma_channel_hz + rad)
        if np.any(self.gamma_hz <= 0.0):
            raise ParameterError("every level rate must be positive")
        if np.any(self.gamma_channel_hz < -1e-12 * self.gamma_hz):
            raise ParameterError("channel rates must be non-negative")

    def __len__(self) -> int:
        return self.gamma_hz.size

    def selected(self, which: str) -> np.ndarray:
        """Rate column by channel selector: total | channel | radiation."""
        if which == "total":
            return self.gamma_hz
        if which == "channel":
            return self.gamma_channel_hz
        if which == "radiation":
            return self.gamma_rad_hz
        raise ParameterError(f"unknown rate selector {which!r}")

    def by_nu(self, nu: int) -> tuple[float, float]:
        idx = np.flatnonzero(self.nus == nu)
        if idx.size != 1:
            raise ParameterError(f"level nu={nu} not present in rates")
        i = int(idx[0])
        return float(self.gamma_hz[i]), float(self.gamma_channel_hz[i])


def _rate_integral(profile_vals: np.ndarray, state: TranslationalState) -> float:
    # Same quadrature as the state's own normalization, so a constant
    # profile reproduces that constant to roundoff.
    return float(simpson(profile_vals * state.psi * state.psi, x=state.x))


def level_rates(profile: RateProfile, levels) -> LevelRates:
    """Average the profile over each level: gamma_a = integral gamma(r)|phi_a|^2 dr."""
    states = list(levels.states if isinstance(levels, LevelSet) else levels)
    if not states:
        raise ParameterError("empty level set")
    label = states[0].label
    # profiles are sampled per grid, not per state: reuse across same-grid states
    cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    gammas = np.empty(len(states))
    channels = np.empty(len(states))
    nus = np.empty(len(states), dtype=np.int64)
    energies = np.empty(len(states))
    for i, st in enumerate(states):
        gid = id(st.grid)
        if gid not in cache:
            cache[gid] = (profile.total(st.x), profile.channel_rate(st.x))
        gt, gc = cache[gid]
        gammas[i] = _rate_integral(gt, st)
        channels[i] = _rate_integral(gc, st)
        nus[i] = -1 if st.nu is None else st.nu
        energies[i] = st.energy_hz
    return LevelRates(label=label, nus=nus, energies_hz=energies,
                      gamma_hz=gammas, gamma_channel_hz=channels,
                      channel=profile.channel, source=profile.source)
