"""Bound and continuum solutions of -K psi'' + V(x) psi = E psi.

Method summary:

* piecewise-uniform grid, fine step near the wall, step doubling at
  absolute anchored boundaries (2, 4, 8, ... nm).  Two grids built with
  the same policy and wall agree node-for-node on their common extent,
  so overlap integrals between different states never interpolate.
* Numerov recurrence within each segment.  Outward sweeps cross a
  coarsening boundary exactly (the coarse predecessor x_b - H is a node
  of the finer segment); inward sweeps cross a refining boundary through
  a fourth-order Taylor bridge consistent with psi'' = -q psi.
* integration starts a fixed WKB action (~40) inside the classically
  forbidden regions instead of at the wall: the barrier action for the
  surface potential is in the thousands, so starting at the wall itself
  would overflow doubles, while the truncation error here is ~e^-80.
* bound levels: bisection on the node count of the outward solution
  isolates the target level, then a Rayleigh-quotient correction on the
  derivative mismatch at the matching point (chosen near the outer
  turning point) converges quadratically.
* free levels: outward sweep only, rescaled so the asymptotic amplitude
  carries delta-of-energy normalization 1/sqrt(pi K k_E); the amplitude
  is extracted from the local invariant psi^2 + (psi'/k)^2 averaged over
  the last two wavelengths, with a WKB correction for the residual tail.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit
from scipy.integrate import simpson

from .errors import CapacityError, DomainError, NumericalError, ParameterError
from .model import AtomParams
from .potential import SurfacePotential

# Starting the sweeps at these WKB actions inside the forbidden regions keeps
# every intermediate amplitude within double range (growth <= e^45 per side).
_ACTION_IN = 40.0
_ACTION_OUT = 45.0
_SEED = 1e-15
_THRESHOLD_MARGIN_HZ = 1.0  # levels closer than this to the escape energy are "at threshold"


@dataclass(frozen=True)
class GridPolicy:
    """Grid layout knobs.

    Segment 0 spans [x_wall, anchor] at inner_step; segment j spans
    [anchor*2^(j-1), anchor*2^j] at inner_step*2^j, capped at the largest
    power-of-two multiple below max_step.  The finest step must resolve
    the shortest local de Broglie wavelength by >= 12 points; the default
    gives ~40 points at the bottom of the deepest default well.
    """

    inner_step_nm: float = 5e-5
    anchor_nm: float = 2.0
    max_step_nm: float = 0.4

    def __post_init__(self):
        if self.inner_step_nm <= 0 or self.anchor_nm <= 0:
            raise ParameterError("grid steps and anchor must be positive")
        ratio = self.anchor_nm / self.inner_step_nm
        if abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise ParameterError("anchor must be an integer multiple of the inner step")
        if self.max_step_nm < self.inner_step_nm:
            raise ParameterError("max step must be >= inner step")

    def halved(self) -> "GridPolicy":
        """Same layout with the finest step halved (convergence studies)."""
        return replace(self, inner_step_nm=self.inner_step_nm / 2.0)


class Grid:
    """Strictly increasing nodes; uniform step inside each segment.

    seg_first[s] is the index of segment s's first node; seg_first[-1] is
    the last index of the grid, so segment s covers indices
    [seg_first[s], seg_first[s+1]] with step steps[s] (boundary nodes shared).
    """

    def __init__(self, x, seg_first, steps, policy):
        self.x = x
        self.seg_first = seg_first
        self.steps = steps
        self.policy = policy

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def x_wall(self) -> float:
        return float(self.x[0])

    @classmethod
    def build(cls, policy: GridPolicy, x_wall: float, x_max: float) -> "Grid":
        h0 = policy.anchor_nm / round(policy.anchor_nm / policy.inner_step_nm)
        anchor = policy.anchor_nm
        if x_wall >= anchor:
            raise ParameterError(f"wall {x_wall} nm must lie below the anchor {anchor} nm")
        if x_max <= x_wall:
            raise ParameterError("x_max must exceed the wall position")
        cap_exp = int(math.floor(math.log2(policy.max_step_nm / h0) + 1e-12))

        # Snap the wall down onto the lattice anchored at the first boundary.
        n_in = max(4, math.ceil((anchor - x_wall) / h0 - 1e-9))
        wall = anchor - n_in * h0
        parts = [np.array([wall])]
        seg_first = [0]
        steps = []
        lo = wall
        count = 1
        j = 0
        while True:
            step = h0 * 2.0 ** min(j, cap_exp)
            hi = anchor * 2.0 ** j
            final = j > 0 and hi >= x_max
            if final:
                n_int = max(4, math.ceil((x_max - lo) / step - 1e-9))
            elif j == 0:
                n_int = n_in
            else:
                n_int = round((hi - lo) / step)
            steps.append(step)
            seg = lo + step * np.arange(1, n_int + 1)
            parts.append(seg)
            count += n_int
            seg_first.append(count - 1)  # boundary node: end of s, start of s+1
            lo = float(seg[-1])  # carry the computed float so segments chain exactly
            if final or (j == 0 and anchor >= x_max):
                break
            j += 1
        x = np.concatenate(parts)
        return cls(x, np.asarray(seg_first, dtype=np.int64),
                   np.asarray(steps, dtype=np.float64), policy)

    def segment_of(self, i: int) -> int:
        """Segment whose half-open index range [first, next_first) contains i."""
        s = int(np.searchsorted(self.seg_first, i, side="right")) - 1
        return min(s, self.steps.size - 1)

    def interior(self, i: int) -> bool:
        """True if i and both neighbors share one uniform step (derivative-safe)."""
        s = self.segment_of(i)
        return self.seg_first[s] < i < self.seg_first[s + 1]

    def index_at(self, x_val: float) -> int:
        return int(np.clip(np.searchsorted(self.x, x_val), 0, self.n - 1))

    def shares_prefix_with(self, other: "Grid") -> bool:
        m = min(self.n, other.n)
        return bool(np.array_equal(self.x[:m], other.x[:m]))


@njit(cache=True, nogil=True)
def _sweep_out(y, q, seg_first, steps, i0, i1):
    """Numerov from i0 toward larger x, filling y[i0+2 .. i1].

    y[i0], y[i0+1] are the caller's seeds.  At a coarsening boundary the
    predecessor at distance H back is an exact node of the finer segment.
    """
    nseg = steps.shape[0]
    s = 0
    while s + 1 < nseg and seg_first[s + 1] <= i0:
        s += 1
    h = steps[s]
    i = i0 + 1
    ym = y[i0]
    yc = y[i]
    qm = q[i0]
    qc = q[i]
    while i < i1:
        if s + 1 < nseg and i == seg_first[s + 1]:
            s += 1
            r = int(round(steps[s] / h))
            h = steps[s]
            if r > 1:
                ym = y[i - r]
                qm = q[i - r]
        hh = h * h
        ynew = (2.0 * yc * (1.0 - 5.0 * hh * qc / 12.0)
                - ym * (1.0 + hh * qm / 12.0)) / (1.0 + hh * q[i + 1] / 12.0)
        y[i + 1] = ynew
        ym = yc
        qm = qc
        yc = ynew
        qc = q[i + 1]
        i += 1


@njit(cache=True, nogil=True)
def _sweep_in(y, q, seg_first, steps, ihi, i1):
    """Numerov from ihi toward smaller x, filling y[ihi-2 .. i1].

    At a refining boundary x_b the next fine-step value y(x_b - h) is not a
    coarse node; it is produced by a fourth-order Taylor bridge using
    psi'(x_b) recovered from the coarse pair and one-sided q derivatives.
    """
    s = steps.shape[0] - 1
    while s > 0 and seg_first[s] >= ihi:
        s -= 1
    h = steps[s]
    i = ihi - 1
    ym = y[ihi]
    yc = y[i]
    qm = q[ihi]
    qc = q[i]
    while i > i1:
        if i == seg_first[s] and s > 0:
            H = h
            hn = steps[s - 1]
            q0 = q[i]
            qp = (-11.0 * q0 + 18.0 * q[i + 1] - 9.0 * q[i + 2] + 2.0 * q[i + 3]) / (6.0 * H)
            qpp = (2.0 * q0 - 5.0 * q[i + 1] + 4.0 * q[i + 2] - q[i + 3]) / (H * H)
            c0 = 1.0 - H * H * q0 / 2.0 - H ** 3 * qp / 6.0 + H ** 4 * (q0 * q0 - qpp) / 24.0
            c1 = H - H ** 3 * q0 / 6.0 - H ** 4 * qp / 12.0
            dpsi = (y[i + 1] - yc * c0) / c1
            b0 = 1.0 - hn * hn * q0 / 2.0 + hn ** 3 * qp / 6.0 + hn ** 4 * (q0 * q0 - qpp) / 24.0
            b1 = -hn + hn ** 3 * q0 / 6.0 - hn ** 4 * qp / 12.0
            y[i - 1] = yc * b0 + dpsi * b1
            s -= 1
            h = hn
            ym = yc
            qm = qc
            yc = y[i - 1]
            qc = q[i - 1]
            i -= 1
            continue
        hh = h * h
        ynew = (2.0 * yc * (1.0 - 5.0 * hh * qc / 12.0)
                - ym * (1.0 + hh * qm / 12.0)) / (1.0 + hh * q[i - 1] / 12.0)
        y[i - 1] = ynew
        ym = yc
        qm = qc
        yc = ynew
        qc = q[i - 1]
        i -= 1


def _deriv(y, q, i, h):
    """Numerov-consistent O(h^4) first derivative at interior node i."""
    return ((y[i + 1] - y[i - 1] + h * h / 6.0 * (q[i + 1] - q[i - 1]) * y[i])
            / (2.0 * h - h ** 3 * q[i] / 3.0))


@dataclass
class Channel:
    """One potential curve sampled on a grid, plus the kinetic coefficient."""

    label: str
    kinetic_coeff: float
    grid: Grid
    v: np.ndarray
    potential: object = None
    _capacity: int | None = field(default=None, repr=False, init=False)

    def q(self, energy_hz: float) -> np.ndarray:
        return (energy_hz - self.v) / self.kinetic_coeff

    @property
    def v_min(self) -> float:
        return float(self.v.min())

    @property
    def bound_ceiling_hz(self) -> float:
        """Highest energy still counted as bound.

        The escape potential at the outer grid edge minus a 1 Hz margin;
        for surface potentials the tail is ~0 there, so this is ~-1 Hz.
        """
        return float(self.v[-1]) - _THRESHOLD_MARGIN_HZ


def make_channel(pot, atom: AtomParams, policy: GridPolicy | None = None,
                 x_max: float | None = None, label: str = "potential",
                 x_wall: float | None = None) -> Channel:
    """Sample a potential on a fresh grid sized for its full bound spectrum."""
    policy = policy or GridPolicy()
    if x_wall is None:
        x_wall = pot.barrier_top[0]
    if x_max is None:
        x_max = 1.5 * pot.outer_turning_point(-1.0) + 50.0
    grid = Grid.build(policy, x_wall, x_max)
    return Channel(label, atom.kinetic_coeff, grid, np.asarray(pot(grid.x), dtype=float), pot)


def make_channels(atom: AtomParams, policy: GridPolicy | None = None,
                  x_max: float | None = None) -> tuple[Channel, Channel]:
    """Ground and excited channels on one shared grid (overlap-ready)."""
    policy = policy or GridPolicy()
    pg = SurfacePotential(atom.ground)
    pe = SurfacePotential(atom.excited)
    x_wall = min(pg.barrier_top[0], pe.barrier_top[0])
    if x_max is None:
        x_max = max(1.5 * p.outer_turning_point(-1.0) + 50.0 for p in (pg, pe))
    grid = Grid.build(policy, x_wall, x_max)
    k = atom.kinetic_coeff
    return (Channel("ground", k, grid, np.asarray(pg(grid.x), dtype=float), pg),
            Channel("excited", k, grid, np.asarray(pe(grid.x), dtype=float), pe))


@dataclass
class TranslationalState:
    """One center-of-mass eigenstate sampled on its channel's grid."""

    kind: str                 # 'bound' | 'free'
    nu: int | None
    energy_hz: float
    grid: Grid
    psi: np.ndarray
    norm: str                 # 'unit' | 'delta_of_energy'
    label: str
    x_outer_nm: float | None = None
    k_inv_nm: float | None = None
    phase_rad: float | None = None

    @property
    def x(self) -> np.ndarray:
        return self.grid.x


@dataclass
class LevelSet:
    """Contiguous bound levels of one potential, optionally plus free states."""

    label: str
    states: list
    free_states: list = field(default_factory=list)

    def __post_init__(self):
        if not self.states:
            raise ParameterError("a level set needs at least one bound state")
        nus = [s.nu for s in self.states]
        if nus != list(range(nus[0], nus[0] + len(nus))):
            raise ParameterError("bound levels must form a contiguous nu range")
        energies = [s.energy_hz for s in self.states]
        if any(b <= a for a, b in zip(energies, energies[1:])):
            raise NumericalError("level energies are not strictly increasing in nu")

    @property
    def nus(self) -> np.ndarray:
        return np.array([s.nu for s in self.states], dtype=int)

    @property
    def energies_hz(self) -> np.ndarray:
        return np.array([s.energy_hz for s in self.states])

    def by_nu(self, nu: int) -> TranslationalState:
        base = self.states[0].nu
        if not base <= nu <= self.states[-1].nu:
            raise KeyError(f"nu={nu} outside solved range [{base}, {self.states[-1].nu}]")
        return self.states[nu - base]

    def __iter__(self):
        return iter(self.states)

    def __len__(self):
        return len(self.states)


def _integration_window(ch: Channel, q: np.ndarray) -> tuple[int, int, int, int]:
    """(i0, i_hi, it_lo, it_hi): sweep start/end and turning-point indices."""
    allowed = np.flatnonzero(q > 0.0)
    if allowed.size == 0:
        raise DomainError("energy lies below the potential everywhere on the grid")
    it_lo = int(allowed[0])
    it_hi = int(allowed[-1])
    x = ch.grid.x
    kappa = np.sqrt(np.maximum(-q, 0.0))
    edge = 0.5 * (kappa[:-1] + kappa[1:]) * np.diff(x)

    i0 = 0
    if it_lo > 0:
        cum = np.cumsum(edge[it_lo - 1:: -1])
        j = int(np.searchsorted(cum, _ACTION_IN))
        i0 = it_lo - 1 - j if j < cum.size else 0
    # Both seeds must sit below the next coarsening boundary.
    s = ch.grid.segment_of(i0)
    nxt = int(ch.grid.seg_first[s + 1])
    if nxt - i0 < 2:
        i0 = nxt - 2

    i_hi = ch.grid.n - 1
    if it_hi < ch.grid.n - 1:
        cum = np.cumsum(edge[it_hi:])
        j = int(np.searchsorted(cum, _ACTION_OUT))
        if j < cum.size:
            i_hi = it_hi + 1 + j
    if i_hi - i0 < 6:
        i_hi = min(i0 + 6, ch.grid.n - 1)
    return i0, i_hi, it_lo, it_hi


def _count_sign_flips(y: np.ndarray) -> int:
    s = np.sign(y)
    return int(np.count_nonzero(s[:-1] * s[1:] < 0.0))


def count_levels(ch: Channel, below_hz: float | None = None) -> int:
    """Number of eigenvalues below the given energy (outward node count)."""
    if below_hz is None:
        below_hz = ch.bound_ceiling_hz
    if below_hz <= ch.v_min:
        return 0
    q = ch.q(below_hz)
    i0, i_hi, _, _ = _integration_window(ch, q)
    y = np.zeros(ch.grid.n)
    y[i0 + 1] = _SEED
    _sweep_out(y, q, ch.grid.seg_first, ch.grid.steps, i0, i_hi)
    return _count_sign_flips(y[i0:i_hi + 1])


def channel_capacity(ch: Channel) -> int:
    """Total bound-level count (levels below the escape threshold)."""
    if ch._capacity is None:
        ch._capacity = count_levels(ch, ch.bound_ceiling_hz)
    return ch._capacity


def _match_window(ch: Channel, q: np.ndarray, it_hi: int,
                  i0: int, i_hi: int) -> tuple[int, int]:
    """Index window around the outer turning point for derivative matching.

    Sized by the local Airy length (K/|V'|)^(1/3): the outermost antinode
    sits about one Airy length inside the turning point.
    """
    x = ch.grid.x
    a = max(it_hi - 1, 1)
    b = min(it_hi + 1, ch.grid.n - 1)
    slope = abs(q[b] - q[a]) / (x[b] - x[a])
    if slope > 0.0:
        ell = slope ** (-1.0 / 3.0)
        j_lo = ch.grid.index_at(x[it_hi] - 4.0 * ell)
    else:
        j_lo = it_hi - 8
    # Never match beyond the turning point: outside it the outward sweep
    # diverges exponentially, which swamps the mismatch signal.
    j_hi = min(it_hi, i_hi - 2)
    j_lo = max(j_lo, i0 + 2)
    if j_hi - j_lo < 4:
        j_lo = max(i0 + 2, it_hi - 8)
        j_hi = min(i_hi - 2, it_hi + 2)
    return j_lo, j_hi


def solve_level(ch: Channel, nu: int, tol_hz: float | None = None) -> TranslationalState:
    """Solve one bound level by node-count bisection plus derivative matching."""
    if nu < 0:
        raise ParameterError(f"node count must be >= 0, got {nu}")
    cap = channel_capacity(ch)
    if nu >= cap:
        raise CapacityError(
            f"level nu={nu} requested but the well holds {cap} bound levels",
            capacity=cap)

    grid = ch.grid
    x = grid.x
    lo = ch.v_min * (1.0 - 1e-12)
    hi = ch.bound_ceiling_hz
    n_lo, n_hi = 0, cap
    tol = tol_hz
    # Bisect on the node counter: first isolate the nu-th eigenvalue, then
    # keep halving until the bracket itself is at tolerance.  The counter is
    # an exact below-E eigenvalue count, so this step cannot mis-bracket.
    for _ in range(300):
        isolated = n_lo == nu and n_hi == nu + 1
        if isolated and tol is None:
            tol = max(0.5, 1e-11 * max(abs(lo), abs(hi)))
        width_floor = 64.0 * np.spacing(max(abs(lo), abs(hi)))
        if isolated and hi - lo <= max(2.0 * tol, width_floor):
            break
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        n_mid = count_levels(ch, mid)
        if n_mid <= nu:
            lo, n_lo = mid, n_mid
        else:
            hi, n_hi = mid, n_mid
    if not (n_lo == nu and n_hi == nu + 1):
        raise NumericalError(
            "node-count bisection failed to isolate the level",
            diagnostics={"nu": nu, "bracket": (lo, hi), "counts": (n_lo, n_hi)})
    if tol is None:
        tol = max(0.5, 1e-11 * max(abs(lo), abs(hi)))

    # Derivative-mismatch polish inside the converged bracket.  Only the
    # node counter ever shrinks the bracket, so a poor correction step can
    # propose but never mis-bracket.
    e = 0.5 * (lo + hi)
    last = {}
    for _ in range(12):
        q = ch.q(e)
        i0, i_hi, _it_lo, it_hi = _integration_window(ch, q)
        j_lo, j_hi = _match_window(ch, q, it_hi, i0, i_hi)

        y_out = np.zeros(grid.n)
        y_out[i0 + 1] = _SEED
        _sweep_out(y_out, q, grid.seg_first, grid.steps, i0, j_hi)
        y_in = np.zeros(grid.n)
        y_in[i_hi - 1] = _SEED
        _sweep_in(y_in, q, grid.seg_first, grid.steps, i_hi, j_lo)

        window = slice(j_lo, j_hi + 1)
        order = np.argsort(np.abs(y_out[window]))[::-1]
        in_floor = 1e-9 * np.abs(y_in[window]).max()
        m = -1
        for off in order:
            cand = j_lo + int(off)
            if grid.interior(cand) and abs(y_in[cand]) > in_floor:
                m = cand
                break
        if m < 0:
            raise NumericalError("no usable matching point near the outer turning point",
                                 diagnostics={"nu": nu, "energy": e})
        c = y_out[m] / y_in[m]
        psi = np.concatenate((y_out[i0:m + 1], c * y_in[m + 1:i_hi + 1]))
        nodes = _count_sign_flips(psi)
        if nodes != nu:
            if count_levels(ch, e) <= nu:
                lo = max(lo, e)
            else:
                hi = min(hi, e)
            e = 0.5 * (lo + hi)
            continue

        h_m = grid.steps[grid.segment_of(m)]
        d_out = _deriv(y_out, q, m, h_m)
        d_in = c * _deriv(y_in, q, m, h_m)
        nrm = simpson(psi * psi, x=x[i0:i_hi + 1])
        de = ch.kinetic_coeff * y_out[m] * (d_out - d_in) / nrm
        if abs(de) < tol:
            e_final = min(max(e + de, lo), hi)
            psi_full = np.zeros(grid.n)
            psi_full[i0:m + 1] = y_out[i0:m + 1]
            psi_full[m + 1:i_hi + 1] = c * y_in[m + 1:i_hi + 1]
            psi_full /= math.sqrt(simpson(psi_full * psi_full, x=x))
            return TranslationalState(
                kind="bound", nu=nu, energy_hz=e_final, grid=grid, psi=psi_full,
                norm="unit", label=ch.label, x_outer_nm=float(x[it_hi]))
        e_new = e + de
        if not lo < e_new < hi:
            if count_levels(ch, e) <= nu:
                lo = max(lo, e)
            else:
                hi = min(hi, e)
            e_new = 0.5 * (lo + hi)
        last = {"nu": nu, "energy": e, "correction": de, "bracket": (lo, hi)}
        e = e_new
    raise NumericalError("bound-level refinement did not converge", diagnostics=last)


def solve_bound(pot, atom: AtomParams, nu_range: tuple[int, int],
                policy: GridPolicy | None = None, label: str = "potential",
                channel: Channel | None = None, threads: int = 1) -> LevelSet:
    """Solve a contiguous range of bound levels; returns them as a LevelSet."""
    nu_lo, nu_hi = int(nu_range[0]), int(nu_range[1])
    if nu_lo > nu_hi:
        raise ParameterError(f"empty level range [{nu_lo}, {nu_hi}]")
    ch = channel if channel is not None else make_channel(pot, atom, policy, label=label)
    cap = channel_capacity(ch)
    if nu_hi >= cap:
        raise CapacityError(
            f"requested levels up to nu={nu_hi} but the well holds {cap}",
            capacity=cap)
    nus = range(nu_lo, nu_hi + 1)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            states = list(pool.map(lambda nu: solve_level(ch, nu), nus))
    else:
        states = [solve_level(ch, nu) for nu in nus]
    return LevelSet(label=ch.label, states=states)


def capacity(pot, atom: AtomParams, policy: GridPolicy | None = None) -> int:
    """Total number of bound levels the well supports."""
    return channel_capacity(make_channel(pot, atom, policy))


def solve_free_state(ch: Channel, energy_hz: float,
                     x_max: float | None = None) -> TranslationalState:
    """Energy-normalized continuum state at the given positive energy."""
    if energy_hz <= 0.0:
        raise DomainError(f"free states need E > 0, got {energy_hz} Hz")
    k_e = math.sqrt(energy_hz / ch.kinetic_coeff)
    lam = 2.0 * math.pi / k_e

    # The tail must be quiet (|V| < 1e-3 E) for at least three wavelengths
    # before the extraction window.
    heavy = np.flatnonzero(np.abs(ch.v) >= 1e-3 * energy_hz)
    x_quiet = float(ch.grid.x[heavy[-1]]) if heavy.size else ch.grid.x_wall
    required = x_quiet + 3.0 * lam
    if x_max is None:
        x_max = float(ch.grid.x[-1])
    if x_max < required:
        raise NumericalError(
            "x_max too small for amplitude extraction",
            diagnostics={"x_max_nm": x_max, "required_nm": required,
                         "quiet_tail_from_nm": x_quiet})
    grid = ch.grid
    if x_max > grid.x[-1]:
        if ch.potential is None:
            raise NumericalError(
                "grid too short for this energy and no potential to extend it",
                diagnostics={"x_max_nm": x_max, "grid_end_nm": float(grid.x[-1])})
        grid = Grid.build(grid.policy, grid.x_wall, x_max)
        ch = Channel(ch.label, ch.kinetic_coeff, grid,
                     np.asarray(ch.potential(grid.x), dtype=float), ch.potential)
    i_end = grid.index_at(x_max)

    q = ch.q(energy_hz)
    i0, _, _, _ = _integration_window(ch, q)
    y = np.zeros(grid.n)
    y[i0 + 1] = _SEED
    _sweep_out(y, q, grid.seg_first, grid.steps, i0, i_end)

    # Amplitude/phase from the invariant A^2 = psi^2 + (psi'/k_loc)^2 over the
    # last two wavelengths, segment by segment so the derivative stays O(h^4).
    w_lo = grid.index_at(grid.x[i_end] - 2.0 * lam)
    w_lo = max(w_lo, i0 + 2)
    amps = []
    phases = []
    xs = []
    for s in range(grid.steps.size):
        a = max(w_lo, int(grid.seg_first[s]) + 1)
        b = min(i_end - 1, int(grid.seg_first[s + 1]) - 1)
        if b < a:
            continue
        h = grid.steps[s]
        sl = slice(a, b + 1)
        up = slice(a + 1, b + 2)
        dn = slice(a - 1, b)
        dpsi = (y[up] - y[dn] + h * h / 6.0 * (q[up] - q[dn]) * y[sl]) \
            / (2.0 * h - h ** 3 * q[sl] / 3.0)
        k_loc = np.sqrt(q[sl])
        amps.append(np.hypot(y[sl], dpsi / k_loc) * np.sqrt(k_loc / k_e))
        phases.append(np.arctan2(k_loc * y[sl], dpsi) - k_e * grid.x[sl])
        xs.append(grid.x[sl])
    if not amps:
        raise NumericalError(
            "no usable extraction window for the asymptotic amplitude",
            diagnostics={"x_max_nm": x_max, "wavelength_nm": lam})
    amp = np.concatenate(amps)
    a_eff = float(amp.mean())
    spread = float(amp.std() / a_eff)
    if spread > 1e-4:
        raise NumericalError(
            "asymptotic amplitude extraction did not stabilize",
            diagnostics={"relative_spread": spread, "window_nm": (float(np.concatenate(xs)[0]),
                                                                  float(grid.x[i_end]))})
    target = 1.0 / math.sqrt(math.pi * ch.kinetic_coeff * k_e)
    psi = y * (target / a_eff)
    psi[i_end + 1:] = 0.0
    ph = np.concatenate(phases)
    delta = math.atan2(np.sin(ph).mean(), np.cos(ph).mean())
    return TranslationalState(
        kind="free", nu=None, energy_hz=energy_hz, grid=grid, psi=psi,
        norm="delta_of_energy", label=ch.label, k_inv_nm=k_e, phase_rad=delta)


def solve_free(pot, atom: AtomParams, energy_hz: float, x_max: float | None = None,
               policy: GridPolicy | None = None, label: str = "potential",
               channel: Channel | None = None) -> TranslationalState:
    """Continuum state of a surface potential, delta-of-energy normalized."""
    ch = channel if channel is not None else make_channel(pot, atom, policy, label=label)
    return solve_free_state(ch, energy_hz, x_max)
