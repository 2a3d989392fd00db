"""Surface-induced potential V(x) = A e^{-alpha x} - C3/x^3 and its geometry.

The exponential term models Pauli repulsion from the surface electron
cloud, the -C3/x^3 term the van der Waals attraction.  For the parameter
regimes of interest the two produce an inner barrier (local maximum a
fraction of a nm from the surface) followed by a deep well; toward the
surface the x^-3 divergence takes over again, so the barrier top is the
natural inner wall for any state that cannot tunnel through it.

Stationary points solve alpha A e^{-alpha x} = 3 C3 / x^4, i.e. roots of

    g(x) = ln(alpha A) - alpha x + 4 ln x - ln(3 C3),

which is concave with its maximum at x = 4/alpha: two roots (barrier,
well minimum) when g(4/alpha) > 0, none otherwise.
"""

from __future__ import annotations

import math
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from .errors import DegeneratePotentialError, DomainError
from .model import PotentialParams


class SurfacePotential:
    """One internal state's potential curve, energies in Hz, lengths in nm."""

    def __init__(self, params: PotentialParams):
        self.params = params
        self._stationary_points  # barrier/well structure checked at construction

    def __call__(self, x):
        """V(x) in Hz for x in nm (scalar or array, x > 0)."""
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0.0):
            raise DomainError("potential is defined for x > 0 only")
        p = self.params
        v = p.a_hz * np.exp(-p.alpha_inv_nm * x) - p.c3_hz_nm3 / x**3
        return float(v) if v.ndim == 0 else v

    def derivative(self, x):
        """dV/dx in Hz/nm."""
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0.0):
            raise DomainError("potential is defined for x > 0 only")
        p = self.params
        d = -p.alpha_inv_nm * p.a_hz * np.exp(-p.alpha_inv_nm * x) + 3.0 * p.c3_hz_nm3 / x**4
        return float(d) if d.ndim == 0 else d

    def _g(self, x: float) -> float:
        p = self.params
        return (math.log(p.alpha_inv_nm * p.a_hz) - p.alpha_inv_nm * x
                + 4.0 * math.log(x) - math.log(3.0 * p.c3_hz_nm3))

    @cached_property
    def _stationary_points(self) -> tuple[float, float]:
        """(x_barrier, x_min), the two roots of V'(x) = 0."""
        xc = 4.0 / self.params.alpha_inv_nm
        if self._g(xc) <= 0.0:
            raise DegeneratePotentialError(
                "potential has no barrier/well structure for these parameters")
        # Left root: g -> -inf as x -> 0+, so shrink the bracket start until g < 0.
        lo = xc * 0.5
        while self._g(lo) > 0.0:
            lo *= 0.5
        x_barrier = brentq(self._g, lo, xc, xtol=1e-15, rtol=8.9e-16)
        # Right root: the -alpha x term dominates for large x.
        hi = xc * 2.0
        while self._g(hi) > 0.0:
            hi *= 2.0
        x_min = brentq(self._g, xc, hi, xtol=1e-15, rtol=8.9e-16)
        return x_barrier, x_min

    @property
    def barrier_top(self) -> tuple[float, float]:
        """(x, V) at the inner barrier maximum."""
        xb = self._stationary_points[0]
        return xb, self(xb)

    @property
    def well_minimum(self) -> tuple[float, float]:
        """(x, V) at the well minimum."""
        xm = self._stationary_points[1]
        return xm, self(xm)

    def inner_turning_point(self, energy_hz: float) -> float:
        """Classical inner turning point, on the well side of the barrier."""
        xb, vb = self.barrier_top
        xm, vm = self.well_minimum
        if not vm < energy_hz < vb:
            raise DomainError(
                f"energy {energy_hz:.6g} Hz outside the well range ({vm:.6g}, {vb:.6g})")
        # xtol tight because the inner slope reaches ~1e16 Hz/nm.
        return brentq(lambda x: self(x) - energy_hz, xb, xm, xtol=1e-15, rtol=8.9e-16)

    def outer_turning_point(self, energy_hz: float) -> float:
        """Classical outer turning point; bound energies only (V_min < E < 0)."""
        xm, vm = self.well_minimum
        if not vm < energy_hz < 0.0:
            raise DomainError(
                f"energy {energy_hz:.6g} Hz outside the bound range ({vm:.6g}, 0)")
        # V ~ -C3/x^3 out there, so (C3/|E|)^(1/3) approximates the root; grow
        # the bracket end until V has risen above E.
        hi = (self.params.c3_hz_nm3 / -energy_hz) ** (1.0 / 3.0)
        while self(hi) <= energy_hz:
            hi *= 2.0
        return brentq(lambda x: self(x) - energy_hz, xm, hi, xtol=1e-13, rtol=8.9e-16)

    def turning_points(self, energy_hz: float) -> tuple[float, float]:
        return self.inner_turning_point(energy_hz), self.outer_turning_point(energy_hz)


def centrifugal_radius(c3_hz_nm3: float, kinetic_coeff: float, l_z: int) -> float:
    """Distance where the centrifugal barrier K|l_z^2 - 1/4|/x^2 overtakes C3/x^3.

    Inside this radius the van der Waals attraction wins and a classical
    trajectory spirals onto the surface; it sets the capture cross section
    scale for azimuthal quantum number l_z around a nanofiber.  l_z = 0 uses
    the same |l_z^2 - 1/4| = 1/4 factor.
    """
    return c3_hz_nm3 / (kinetic_coeff * abs(l_z * l_z - 0.25))
