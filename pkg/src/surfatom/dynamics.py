"""Reduced density-matrix dynamics validating the adiabatic populations.

Small truncated bases only: the excited block rho_aa' and the optical
coherences rho_ab evolve; ground populations are frozen and ground
coherences dropped (the weak-drive assumption under which the adiabatic
formula is derived; repopulation feeds ground levels at the same order).
Cross-level damping gamma_aa' with a != a' is likewise dropped - each
excited level decays at its own rate.

Rotating frame: a single monochromatic drive lets its explicit phase be
removed by sigma_ab = rho_ab * exp(+i w_L t) while the excited block is
kept in the lab frame (sigma_aa' = rho_aa'), which makes the generator
time-independent:

    d sigma_ab /dt = (i d_ab - g_a/2) sigma_ab + (i/2) W_ab p_b
                     - (i/2) sum_a' sigma_aa' W_a'b
    d sigma_aa'/dt = (-i (E_a - E_a') - (g_a + g_a')/2) sigma_aa'
                     + (i/2) sum_b (W_ab conj(sigma_a'b) - sigma_ab conj(W_a'b))

with d_ab = delta - (E_a - E_b), p_b the frozen ground populations, and
W_ab = Omega (conj(F_ab) - R F_ab) the coherent sum of the incident and
reflected drives.  Populations are frame-independent.

Units: energies, rates and Rabi frequencies are all plain Hz and enter
the generator as commensurate rates (no 2*pi anywhere), matching the
Lorentzian gamma^2 + 4 delta^2 of the adiabatic formula; with that
convention excited populations decay as exp(-gamma_a t) at zero drive.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import NumericalError, ParameterError

_MAX_SATURATION = 1e-2  # perturbative regime this validation targets


@dataclass(frozen=True)
class ReducedSystem:
    """Truncated excited/ground system driven at one detuning.

    fc[a, b] is the excitation matrix element F_ab(k); omega_hz the bare
    Rabi frequency; the effective drive is W_ab = omega (conj(F) - R F).
    rho_bb holds the frozen ground populations.
    """

    energies_a_hz: np.ndarray
    energies_b_hz: np.ndarray
    gamma_a_hz: np.ndarray
    fc: np.ndarray
    rho_bb: np.ndarray
    omega_hz: float
    delta_hz: float
    gamma0_hz: float
    reflection_r: float = 0.0

    def __post_init__(self):
        ea = np.atleast_1d(np.asarray(self.energies_a_hz, dtype=float))
        eb = np.atleast_1d(np.asarray(self.energies_b_hz, dtype=float))
        ga = np.atleast_1d(np.asarray(self.gamma_a_hz, dtype=float))
        f = np.atleast_2d(np.asarray(self.fc, dtype=complex))
        pb = np.atleast_1d(np.asarray(self.rho_bb, dtype=float))
        if ga.shape != ea.shape:
            raise ParameterError("gamma_a must match the excited level list")
        if f.shape != (ea.size, eb.size):
            raise ParameterError(
                f"fc must have shape ({ea.size}, {eb.size}), got {f.shape}")
        if pb.shape != eb.shape:
            raise ParameterError("rho_bb must match the ground level list")
        if np.any(ga <= 0.0):
            raise ParameterError("every excited decay rate must be positive")
        if np.any(pb < 0.0) or pb.sum() > 1.0 + 1e-12:
            raise ParameterError("ground populations must be in [0, 1] with sum <= 1")
        if self.gamma0_hz <= 0.0:
            raise ParameterError("gamma0 must be positive")
        for name, arr in (("energies_a_hz", ea), ("energies_b_hz", eb),
                          ("gamma_a_hz", ga), ("fc", f), ("rho_bb", pb)):
            object.__setattr__(self, name, arr)

    @property
    def n_excited(self) -> int:
        return self.energies_a_hz.size

    @property
    def n_ground(self) -> int:
        return self.energies_b_hz.size

    @property
    def saturation_s(self) -> float:
        return 2.0 * abs(self.omega_hz) ** 2 / self.gamma0_hz ** 2

    @property
    def drive_hz(self) -> np.ndarray:
        """Effective Rabi matrix W_ab (incident plus reflected drive)."""
        return self.omega_hz * (np.conj(self.fc) - self.reflection_r * self.fc)

    @property
    def detunings_hz(self) -> np.ndarray:
        """Per-pair detuning d_ab = delta - (E_a - E_b)."""
        return self.delta_hz - (self.energies_a_hz[:, None]
                                - self.energies_b_hz[None, :])

    def adiabatic_populations(self) -> np.ndarray:
        """Quasi-steady excited populations from the weak-field formula."""
        w2 = np.abs(self.drive_hz) ** 2
        lor = 1.0 / (self.gamma_a_hz[:, None] ** 2 + 4.0 * self.detunings_hz ** 2)
        return (w2 * lor) @ self.rho_bb


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution of a ReducedSystem integration."""

    t_s: np.ndarray
    excited: np.ndarray      # (nt, Na, Na) rotating-frame excited block
    coherences: np.ndarray   # (nt, Na, Nb)
    system: ReducedSystem = field(repr=False)

    @property
    def populations(self) -> np.ndarray:
        return np.real(np.einsum("tii->ti", self.excited))

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.excited
                                   - np.conj(np.swapaxes(self.excited, 1, 2)))))


def _rhs(sys: ReducedSystem):
    na, nb = sys.n_excited, sys.n_ground
    w = sys.drive_hz
    dets = sys.detunings_hz
    ga = sys.gamma_a_hz
    coh_coef = 1j * dets - 0.5 * ga[:, None]
    blk_coef = (-1j * (sys.energies_a_hz[:, None] - sys.energies_a_hz[None, :])
                - 0.5 * (ga[:, None] + ga[None, :]))
    drive_b = 0.5j * w * sys.rho_bb[None, :]

    def rhs(_t, y):
        blk = y[:na * na].reshape(na, na)
        coh = y[na * na:].reshape(na, nb)
        dcoh = coh_coef * coh + drive_b - 0.5j * (blk @ w)
        dblk = blk_coef * blk + 0.5j * (w @ np.conj(coh).T
                                        - coh @ np.conj(w).T)
        return np.concatenate([dblk.ravel(), dcoh.ravel()])

    return rhs


def integrate(sys: ReducedSystem, t_end_s: float,
              dt_control_s: float | None = None,
              initial: Trajectory | None = None,
              n_samples: int = 200) -> Trajectory:
    """Integrate the reduced equations from t=0 (or a prior trajectory's end).

    Adaptive 8th-order Runge-Kutta; tolerances keep the local error per
    step below 1e-9 of unit trace.  dt_control_s caps the step size
    (default: free).  Raises NumericalError if the controller underflows
    the step or otherwise fails, and ParameterError outside the weak-drive
    regime s <= 1e-2.
    """
    if sys.saturation_s > _MAX_SATURATION:
        raise ParameterError(
            f"saturation s={sys.saturation_s:.3g} outside validated regime "
            f"(s <= {_MAX_SATURATION})")
    if t_end_s <= 0.0:
        raise ParameterError("t_end must be positive")
    na, nb = sys.n_excited, sys.n_ground
    if initial is None:
        y0 = np.zeros(na * na + na * nb, dtype=complex)
        t0 = 0.0
    else:
        y0 = np.concatenate([initial.excited[-1].ravel(),
                             initial.coherences[-1].ravel()])
        t0 = float(initial.t_s[-1])
    t_eval = np.linspace(t0, t0 + t_end_s, n_samples)
    sol = solve_ivp(_rhs(sys), (t0, t0 + t_end_s), y0, method="DOP853",
                    t_eval=t_eval, rtol=1e-10, atol=1e-13,
                    max_step=dt_control_s if dt_control_s else np.inf)
    if not sol.success:
        raise NumericalError(f"integration failed: {sol.message}",
                             diagnostics={"t_reached": float(sol.t[-1]) if sol.t.size else t0})
    y = sol.y.T
    return Trajectory(t_s=sol.t,
                      excited=y[:, :na * na].reshape(-1, na, na),
                      coherences=y[:, na * na:].reshape(-1, na, nb),
                      system=sys)


def compare_adiabatic(sys: ReducedSystem, t_end_s: float | None = None,
                      plateau_drift: float = 1e-4) -> np.ndarray:
    """Per-level relative error of the quasi-steady ODE populations
    against the adiabatic formula.

    Integrates until the populations drift by less than plateau_drift
    (relative) over one 1/gamma0 window; raises NumericalError if no
    plateau appears within t_end.
    """
    tau = 1.0 / sys.gamma0_hz
    if t_end_s is None:
        t_end_s = 60.0 * tau
    traj = integrate(sys, t_end_s, n_samples=max(400, int(t_end_s / tau) * 10))
    pops = traj.populations
    t = traj.t_s
    ref = pops[-1]
    if np.any(ref <= 0.0):
        raise NumericalError("quasi-steady population vanished",
                             diagnostics={"populations": ref.tolist()})
    i0 = int(np.searchsorted(t, t[-1] - tau))
    window = pops[i0:]
    drift = np.max(np.abs(window.max(axis=0) - window.min(axis=0)) / ref)
    if drift >= plateau_drift:
        raise NumericalError(
            f"no quasi-steady plateau: drift {drift:.2e} over final 1/gamma0",
            diagnostics={"drift": drift, "t_end_s": t_end_s})
    target = sys.adiabatic_populations()
    return np.abs(ref - target) / target


def two_level_system(gamma0_hz: float, delta_hz: float = 0.0,
                     saturation_s: float = 1e-3, fc: complex = 1.0,
                     gamma_a_hz: float | None = None,
                     reflection_r: float = 0.0) -> ReducedSystem:
    """One ground + one excited level; the textbook weak-drive check."""
    omega = gamma0_hz * np.sqrt(saturation_s / 2.0)
    return ReducedSystem(
        energies_a_hz=np.array([0.0]), energies_b_hz=np.array([0.0]),
        gamma_a_hz=np.array([gamma0_hz if gamma_a_hz is None else gamma_a_hz]),
        fc=np.array([[fc]]), rho_bb=np.array([1.0]),
        omega_hz=omega, delta_hz=delta_hz, gamma0_hz=gamma0_hz,
        reflection_r=reflection_r)


def toy_system(gamma0_hz: float, delta_hz: float = 0.0,
               saturation_s: float = 1e-3,
               reflection_r: float = 0.0) -> ReducedSystem:
    """Two ground + two excited levels with unequal, complex couplings.

    Level spacings and FC magnitudes sit at the scales the full solver
    produces (MHz-scale spacings, |F| well below 1, mixed phases), so this
    exercises every coupling pathway of the reduced equations at once.
    """
    g = gamma0_hz
    return ReducedSystem(
        energies_a_hz=np.array([-0.6 * g, 0.9 * g]),
        energies_b_hz=np.array([-0.2 * g, 0.3 * g]),
        gamma_a_hz=np.array([1.1 * g, 0.85 * g]),
        fc=np.array([[0.52 + 0.13j, -0.31 + 0.22j],
                     [0.18 - 0.40j, 0.61 + 0.05j]]),
        rho_bb=np.array([0.65, 0.35]),
        omega_hz=g * np.sqrt(saturation_s / 2.0),
        delta_hz=delta_hz, gamma0_hz=g, reflection_r=reflection_r)


def standard_checks(gamma0_hz: float, saturation_s: float = 1e-3,
                    reflection_r: float = 0.0) -> list[tuple[str, int, float]]:
    """Run the stock validations; returns (case, level index, rel. error)."""
    rows: list[tuple[str, int, float]] = []
    for name, sys in (
            ("two-level resonant",
             two_level_system(gamma0_hz, 0.0, saturation_s,
                              reflection_r=reflection_r)),
            ("two-level detuned",
             two_level_system(gamma0_hz, 0.7 * gamma0_hz, saturation_s,
                              reflection_r=reflection_r)),
            ("2x2 toy",
             toy_system(gamma0_hz, 0.2 * gamma0_hz, saturation_s,
                        reflection_r=reflection_r))):
        err = compare_adiabatic(sys)
        rows.extend((name, i, float(e)) for i, e in enumerate(err))
    return rows
