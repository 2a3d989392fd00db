"""Transition matrix elements <phi_a| e^{ikx} |phi_b>."""

import dataclasses

import numpy as np
import pytest

from surfatom import ParameterError, build_matrix, overlap
from surfatom.franck_condon import FranckCondonMatrix

K_LIGHT = 2 * np.pi / 852.0


def test_identity_at_zero_momentum(ground_levels):
    states = ground_levels.states[:6]
    f = build_matrix(states, states, 0.0)
    assert np.max(np.abs(f.values - np.eye(6))) < 1e-6


def test_conjugation_under_k_reversal(excited_levels, ground_levels):
    a = excited_levels.by_nu(400)
    b = ground_levels.by_nu(285)
    fp = overlap(a, b, K_LIGHT)
    fm = overlap(a, b, -K_LIGHT)
    assert fm == np.conj(fp)


def test_first_moment_is_k_derivative(excited_levels, ground_levels):
    a = excited_levels.by_nu(400)
    b = ground_levels.by_nu(285)
    h = 1e-6
    fd = (overlap(a, b, K_LIGHT + h) - overlap(a, b, K_LIGHT - h)) / (2 * h)
    m1 = 1j * overlap(a, b, K_LIGHT, moment=1)
    assert abs(fd - m1) < 1e-6 * abs(m1)


def test_dominant_partner_of_ground_285(excited_levels, ground_levels):
    b = ground_levels.by_nu(285)
    mags = [abs(overlap(a, b, K_LIGHT)) for a in excited_levels.states]
    best = excited_levels.states[int(np.argmax(mags))].nu
    assert abs(best - 400) <= 2


def test_dominant_partner_of_free_level(excited_levels, disk_cache,
                                        ground_channel):
    (free,) = disk_cache.free_states(ground_channel, [4.25e6])
    mags = [abs(overlap(a, free, K_LIGHT)) for a in excited_levels.states]
    best = excited_levels.states[int(np.argmax(mags))].nu
    assert abs(best - 415) <= 2


def test_parseval_row_sum(disk_cache, ground_channel):
    # expand e^{ikx} phi_120 over the ground basis itself: the sum of
    # |F|^2 over a wide-enough window of bound partners exhausts the norm
    # (the level is deep, so continuum leakage is negligible).
    a = disk_cache.bound_levels(ground_channel, [120]).states[0]
    window = disk_cache.bound_levels(ground_channel, range(95, 146))
    total = sum(abs(overlap(b, a, K_LIGHT)) ** 2 for b in window.states)
    assert total == pytest.approx(1.0, abs=1e-3)
    inner = disk_cache.bound_levels(ground_channel, range(105, 136))
    partial = sum(abs(overlap(b, a, K_LIGHT)) ** 2 for b in inner.states)
    assert total - partial < 1e-3  # the window tails carry almost nothing
    assert total <= 1.0 + 1e-9


def test_row_sums_bounded_by_unity(excited_levels, ground_levels):
    f = build_matrix(excited_levels, ground_levels, K_LIGHT)
    # columns are ground levels: summing |F|^2 over a *partial* excited
    # basis can only undershoot completeness
    col_sums = f.abs2.sum(axis=0)
    assert np.all(col_sums <= 1.0 + 1e-9)


def test_matrix_threads_deterministic(excited_levels, ground_levels):
    states_a = excited_levels.states[:8]
    states_b = ground_levels.states[:5]
    f1 = build_matrix(states_a, states_b, K_LIGHT, threads=1)
    f4 = build_matrix(states_a, states_b, K_LIGHT, threads=4)
    assert np.array_equal(f1.values, f4.values)


def test_matrix_conjugated_round_trip(excited_levels, ground_levels):
    f = build_matrix(excited_levels.states[:4], ground_levels.states[:4], K_LIGHT)
    g = f.conjugated()
    assert g.k_inv_nm == -f.k_inv_nm
    assert np.array_equal(g.values, np.conj(f.values))


def test_disjoint_supports_warn(ground_levels):
    a = ground_levels.states[0]
    psi_lo = np.where(a.x < 50.0, a.psi, 0.0)
    psi_hi = np.where(a.x > 60.0, a.psi, 0.0)
    lo = dataclasses.replace(a, psi=psi_lo)
    hi = dataclasses.replace(a, psi=psi_hi)
    with pytest.warns(UserWarning):
        f = overlap(lo, hi, K_LIGHT)
    assert f == 0j


def test_resampled_grid_agrees_with_shared(atom):
    # same physical level solved on two incompatible grids: the
    # spline-resampled overlap must agree with the shared-axis result
    from surfatom import GridPolicy, make_channels, solve_level
    chg, che = make_channels(atom)
    chg2, che2 = make_channels(atom, policy=GridPolicy(inner_step_nm=4e-5,
                                                       anchor_nm=1.6))
    a1 = solve_level(che, 400)
    b1 = solve_level(chg, 285)
    b2 = solve_level(chg2, 285)
    shared = overlap(a1, b1, K_LIGHT)
    resampled = overlap(a1, b2, K_LIGHT)
    assert abs(resampled - shared) < 1e-4 * abs(shared)


def test_empty_and_mixed_bases_rejected(excited_levels, disk_cache,
                                        ground_channel, ground_levels):
    with pytest.raises(ParameterError):
        build_matrix([], ground_levels.states[:2], K_LIGHT)
    (free,) = disk_cache.free_states(ground_channel, [1e6])
    with pytest.raises(ParameterError):
        build_matrix(excited_levels.states[:2],
                     [ground_levels.states[0], free], K_LIGHT)


def test_matrix_records_norms(excited_levels, thermal_200uK):
    f = build_matrix(excited_levels.states[:3], thermal_200uK.states[:3], K_LIGHT)
    assert f.row_norm == "unit"
    assert f.col_norm == "delta_of_energy"
    assert isinstance(f, FranckCondonMatrix)
