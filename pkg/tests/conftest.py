"""Shared fixtures: channels, level sets, and mixtures are expensive, so
they are session-scoped and backed by an on-disk eigenstate cache that
persists between runs (tests/.cache unless SURFATOM_TEST_CACHE is set)."""

import os
from pathlib import Path

import pytest

from surfatom import (
    EigenstateCache,
    FieldParams,
    cesium_silica,
    flat_bound_mixture,
    make_channels,
    make_guided_profile,
    thermal_mixture,
)
from surfatom.potential import SurfacePotential


@pytest.fixture(scope="session")
def atom():
    return cesium_silica()


@pytest.fixture(scope="session")
def disk_cache():
    root = os.environ.get("SURFATOM_TEST_CACHE",
                          str(Path(__file__).parent / ".cache"))
    return EigenstateCache(root)


@pytest.fixture(scope="session")
def channels(atom):
    return make_channels(atom)


@pytest.fixture(scope="session")
def ground_channel(channels):
    return channels[0]


@pytest.fixture(scope="session")
def excited_channel(channels):
    return channels[1]


@pytest.fixture(scope="session")
def excited_levels(disk_cache, excited_channel):
    """Bound excited basis used by both spectra (nu 385..429)."""
    return disk_cache.bound_levels(excited_channel, range(385, 430),
                                   label="excited")


@pytest.fixture(scope="session")
def ground_levels(disk_cache, ground_channel):
    """Bound ground basis of the bound-to-bound spectrum (nu 269..293)."""
    return disk_cache.bound_levels(ground_channel, range(269, 294),
                                   label="ground")


@pytest.fixture(scope="session")
def field(atom):
    return FieldParams.from_wavelength(atom.lambda0_nm, saturation_s=1e-3,
                                       reflection_r=0.0)


@pytest.fixture(scope="session")
def guided_profile(atom):
    return make_guided_profile(atom.gamma0_hz)


@pytest.fixture(scope="session")
def thermal_200uK(atom, ground_channel, disk_cache):
    return thermal_mixture(atom, SurfacePotential(atom.ground), 200e-6,
                           channel=ground_channel, cache=disk_cache)


@pytest.fixture(scope="session")
def flat_bound_269_293(ground_levels):
    return flat_bound_mixture(ground_levels, 269, 293)
