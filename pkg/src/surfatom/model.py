"""Unit conventions, physical constants, and shared parameter bundles.

Conventions used throughout the package:

* energies are stored as frequencies E/h in Hz,
* lengths in nm,
* rates in Hz,
* atomic mass in amu (converted once to the kinetic coefficient).

With these choices the stationary Schrodinger equation reads

    -K psi'' + V(x) psi = E psi,      K = hbar / (4 pi m)  [Hz nm^2]

so no Joule ever appears in a public interface.  Van der Waals
coefficients are quoted in the literature as kHz um^3; they are converted
on input (1 kHz um^3 = 1e12 Hz nm^3).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import constants as _sc

from .errors import ParameterError

# SI constants (CODATA via scipy).
H_PLANCK = _sc.h                  # J s
HBAR = _sc.hbar                   # J s
KB = _sc.k                        # J/K
C_LIGHT = _sc.c                   # m/s
AMU_KG = _sc.atomic_mass          # kg

# 1 kHz um^3 = 1e3 Hz * 1e9 nm^3 = 1e12 Hz nm^3.
C3_KHZ_UM3_TO_HZ_NM3 = 1e12


def kinetic_coefficient(mass_amu: float) -> float:
    """Kinetic coefficient K = hbar/(4 pi m) in Hz nm^2.

    This is the -hbar^2/2m Schrodinger prefactor after dividing the
    equation by h and expressing lengths in nm.
    """
    if mass_amu <= 0:
        raise ParameterError(f"mass must be positive, got {mass_amu} amu")
    return HBAR / (4.0 * math.pi * mass_amu * AMU_KG) * 1e18


def reflection_coefficient(n1: float) -> float:
    """Amplitude reflection coefficient R = (n1 - 1)/(n1 + 1) of the interface."""
    if n1 < 1.0:
        raise ParameterError(f"refractive index must be >= 1, got {n1}")
    return (n1 - 1.0) / (n1 + 1.0)


def boltzmann_energy_hz(temperature_k: float) -> float:
    """k_B T expressed as a frequency (Hz)."""
    if temperature_k <= 0:
        raise ParameterError(f"temperature must be positive, got {temperature_k} K")
    return KB * temperature_k / H_PLANCK


@dataclass(frozen=True)
class UnitSystem:
    """Marker for the Hz/nm/amu convention plus the derived kinetic coefficient."""

    mass_amu: float
    kinetic_coeff: float = 0.0  # Hz nm^2, filled in __post_init__

    def __post_init__(self):
        object.__setattr__(self, "kinetic_coeff", kinetic_coefficient(self.mass_amu))


@dataclass(frozen=True)
class PotentialParams:
    """Surface potential parameters A e^{-alpha x} - C3/x^3 for one internal state."""

    a_hz: float          # repulsion height (Hz)
    alpha_inv_nm: float  # repulsion range (1/nm)
    c3_hz_nm3: float     # van der Waals coefficient (Hz nm^3)

    def __post_init__(self):
        if self.a_hz <= 0:
            raise ParameterError(f"repulsion height A must be positive, got {self.a_hz}")
        if self.alpha_inv_nm <= 0:
            raise ParameterError(f"repulsion range alpha must be positive, got {self.alpha_inv_nm}")
        if self.c3_hz_nm3 <= 0:
            raise ParameterError(f"vdW coefficient C3 must be positive, got {self.c3_hz_nm3}")

    @classmethod
    def from_config_units(cls, a_hz: float, alpha_inv_nm: float, c3_khz_um3: float) -> "PotentialParams":
        """Build from config-file units (C3 in kHz um^3)."""
        return cls(a_hz, alpha_inv_nm, c3_khz_um3 * C3_KHZ_UM3_TO_HZ_NM3)

    @property
    def c3_khz_um3(self) -> float:
        return self.c3_hz_nm3 / C3_KHZ_UM3_TO_HZ_NM3


@dataclass(frozen=True)
class AtomParams:
    """Two-level atom with state-dependent surface potentials."""

    mass_amu: float
    gamma0_hz: float     # natural linewidth (Hz)
    lambda0_nm: float    # transition wavelength (nm)
    ground: PotentialParams
    excited: PotentialParams

    def __post_init__(self):
        if self.mass_amu <= 0:
            raise ParameterError(f"mass must be positive, got {self.mass_amu}")
        if self.gamma0_hz <= 0:
            raise ParameterError(f"linewidth must be positive, got {self.gamma0_hz}")
        if self.lambda0_nm <= 0:
            raise ParameterError(f"wavelength must be positive, got {self.lambda0_nm}")

    @property
    def kinetic_coeff(self) -> float:
        """K = hbar/(4 pi m) in Hz nm^2."""
        return kinetic_coefficient(self.mass_amu)

    def potential_params(self, state: str) -> PotentialParams:
        if state == "ground":
            return self.ground
        if state == "excited":
            return self.excited
        raise ParameterError(f"state must be 'ground' or 'excited', got {state!r}")


@dataclass(frozen=True)
class FieldParams:
    """Monochromatic probe field: wavenumber, saturation, surface reflection."""

    k_inv_nm: float       # probe wavenumber (1/nm)
    saturation_s: float   # s = 2|Omega|^2/gamma0^2
    reflection_r: float   # amplitude reflection coefficient

    def __post_init__(self):
        if self.k_inv_nm <= 0:
            raise ParameterError(f"wavenumber must be positive, got {self.k_inv_nm}")
        if self.saturation_s < 0:
            raise ParameterError(f"saturation parameter must be >= 0, got {self.saturation_s}")
        if not 0.0 <= self.reflection_r < 1.0:
            raise ParameterError(f"reflection coefficient must be in [0, 1), got {self.reflection_r}")

    @classmethod
    def from_wavelength(cls, wavelength_nm: float, saturation_s: float,
                        reflection_r: float = 0.0) -> "FieldParams":
        if wavelength_nm <= 0:
            raise ParameterError(f"wavelength must be positive, got {wavelength_nm}")
        return cls(2.0 * math.pi / wavelength_nm, saturation_s, reflection_r)


def cesium_silica() -> AtomParams:
    """Default parameter set: cesium D2 line near a fused-silica surface.

    C3g = 1.56 kHz um^3, C3e = 3.09 kHz um^3, A_g = 1.6e18 Hz,
    A_e = 3.17e18 Hz, alpha = 53 /nm, m = 132.9 amu, gamma0 = 5.25 MHz,
    lambda = 852 nm.
    """
    return AtomParams(
        mass_amu=132.9,
        gamma0_hz=5.25e6,
        lambda0_nm=852.0,
        ground=PotentialParams.from_config_units(1.6e18, 53.0, 1.56),
        excited=PotentialParams.from_config_units(3.17e18, 53.0, 3.09),
    )


# --- config (de)serialization -------------------------------------------------
#
# JSON configs keep the human-friendly units quoted in the literature:
# C3 in kHz um^3, gamma0 in MHz, wavelengths in nm.

def atom_to_config(atom: AtomParams) -> dict:
    return {
        "mass_amu": atom.mass_amu,
        "gamma0_MHz": atom.gamma0_hz / 1e6,
        "lambda0_nm": atom.lambda0_nm,
        "ground_potential": _potential_to_config(atom.ground),
        "excited_potential": _potential_to_config(atom.excited),
    }


def _potential_to_config(p: PotentialParams) -> dict:
    return {"A_Hz": p.a_hz, "alpha_inv_nm": p.alpha_inv_nm, "C3_kHz_um3": p.c3_khz_um3}


def atom_from_config(section: dict) -> AtomParams:
    return AtomParams(
        mass_amu=section["mass_amu"],
        gamma0_hz=section["gamma0_MHz"] * 1e6,
        lambda0_nm=section["lambda0_nm"],
        ground=_potential_from_config(section["ground_potential"]),
        excited=_potential_from_config(section["excited_potential"]),
    )


def _potential_from_config(section: dict) -> PotentialParams:
    return PotentialParams.from_config_units(
        section["A_Hz"], section["alpha_inv_nm"], section["C3_kHz_um3"])


def field_to_config(field: FieldParams) -> dict:
    return {
        "wavelength_nm": 2.0 * math.pi / field.k_inv_nm,
        "saturation_s": field.saturation_s,
        "reflection_R": field.reflection_r,
    }


def field_from_config(section: dict) -> FieldParams:
    if "reflection_R" in section and "refractive_index_n1" in section:
        raise ParameterError("give either reflection_R or refractive_index_n1, not both")
    if "refractive_index_n1" in section:
        refl = reflection_coefficient(section["refractive_index_n1"])
    else:
        refl = section.get("reflection_R", 0.0)
    return FieldParams.from_wavelength(
        section["wavelength_nm"], section.get("saturation_s", 1e-3), refl)
