"""Weak-field spectrum invariants: Lorentzian limit, linearity in the
drive, channel decomposition, and mixture/request validation."""

import numpy as np
import pytest

from surfatom import (
    FieldParams,
    InitialMixture,
    SpectrumRequest,
    build_matrix,
    combine_mixtures,
    custom_mixture,
    excited_populations,
    flat_bound_mixture,
    level_rates,
    scattering_rate,
    sweep,
    thermal_mixture,
    uniform_profile,
)
from surfatom.errors import ConsistencyError, ParameterError
from surfatom.eigensolver import LevelSet
from surfatom.potential import SurfacePotential

G0 = 5.25e6


# --- degenerate limit: same levels on both sides, k -> 0, uniform rates ---

@pytest.fixture(scope="module")
def degenerate(ground_levels):
    subset = LevelSet("ground", list(ground_levels.states[11:22]))  # nu 280..290
    mixture = flat_bound_mixture(subset, 280, 290)
    rates = level_rates(uniform_profile(G0), subset)
    # k tiny but nonzero: overlaps reduce to orthonormality up to O(k x)
    field = FieldParams.from_wavelength(8.52e8, saturation_s=1e-3,
                                        reflection_r=0.0)
    fc = build_matrix(subset, mixture.states, field.k_inv_nm)
    return subset, mixture, rates, field, fc


def _deg_request(degenerate, **kw):
    subset, mixture, rates, field, fc = degenerate
    base = dict(field=field, mixture=mixture, excited=subset, rates=rates,
                gamma0_hz=G0, delta_min_hz=-15e6, delta_max_hz=15e6,
                delta_step_hz=0.05e6, channel="total", fc=fc)
    base.update(kw)
    return SpectrumRequest(**base)


def test_degenerate_levels_give_lorentzian_of_width_gamma0(degenerate):
    res = sweep(_deg_request(degenerate))
    assert not res.peak_at_boundary and not res.edge_warning
    assert res.delta_peak_hz == pytest.approx(0.0, abs=1e3)
    assert res.fwhm_hz == pytest.approx(G0, rel=1e-3)
    assert res.asymmetry == pytest.approx(1.0, rel=0.06)


def test_degenerate_peak_population_matches_closed_form(degenerate):
    # on resonance each level sees only its own mixture weight 1/11 at
    # Lorentzian factor 1, so rho_aa = (s/2)/11 for every level
    req = _deg_request(degenerate)
    pops = excited_populations(req, 0.0)
    assert pops == pytest.approx(np.full(pops.size, 0.5e-3 / 11.0), rel=1e-4)


def test_signal_is_linear_in_saturation(degenerate):
    subset, mixture, rates, field, fc = degenerate
    f10 = FieldParams(field.k_inv_nm, saturation_s=10 * field.saturation_s,
                      reflection_r=field.reflection_r)
    r1 = sweep(_deg_request(degenerate))
    r10 = sweep(_deg_request(degenerate, field=f10))
    assert np.allclose(r10.gamma_hz, 10.0 * r1.gamma_hz, rtol=1e-12)
    assert r10.delta_peak_hz == pytest.approx(r1.delta_peak_hz, abs=1.0)
    assert r10.fwhm_hz == pytest.approx(r1.fwhm_hz, rel=1e-9)


def test_scattering_rate_matches_sweep_grid_point(degenerate):
    req = _deg_request(degenerate)
    res = sweep(req)
    i = 137
    assert scattering_rate(req, float(res.delta_hz[i])) == res.gamma_hz[i]


def test_peak_on_grid_boundary_suppresses_extraction(degenerate):
    res = sweep(_deg_request(degenerate, delta_min_hz=2e6, delta_max_hz=12e6))
    assert res.peak_at_boundary
    assert res.delta_peak_hz is None
    assert res.fwhm_hz is None
    assert res.asymmetry is None


def test_narrow_grid_raises_edge_warning(degenerate):
    with pytest.warns(UserWarning, match="widen the detuning grid"):
        res = sweep(_deg_request(degenerate, delta_min_hz=-4e6,
                                 delta_max_hz=4e6))
    assert res.edge_warning
    assert res.delta_peak_hz == pytest.approx(0.0, abs=1e3)


# --- physical basis: bound ground levels against the excited manifold ---

@pytest.fixture(scope="module")
def physical(ground_levels, excited_levels, guided_profile, field):
    mixture = flat_bound_mixture(ground_levels, 280, 290)
    rates = level_rates(guided_profile, excited_levels)
    fc = build_matrix(excited_levels, mixture.states, field.k_inv_nm)
    return mixture, rates, fc


def _phys_request(physical, excited_levels, field, **kw):
    mixture, rates, fc = physical
    base = dict(field=field, mixture=mixture, excited=excited_levels,
                rates=rates, gamma0_hz=G0, delta_min_hz=-120e6,
                delta_max_hz=40e6, delta_step_hz=0.5e6, channel="total",
                fc=fc)
    base.update(kw)
    return SpectrumRequest(**base)


# the 11-level flat mixture keeps a visible red tail at the grid edge, so
# the coverage warning is expected on every physical-basis sweep below
pytestmark_edge = pytest.mark.filterwarnings(
    "ignore:spectrum does not decay below 5%")


@pytestmark_edge
def test_channel_decomposition_sums_to_total(physical, excited_levels, field):
    tot = sweep(_phys_request(physical, excited_levels, field, channel="total"))
    ch = sweep(_phys_request(physical, excited_levels, field, channel="channel"))
    rad = sweep(_phys_request(physical, excited_levels, field,
                              channel="radiation"))
    assert np.allclose(tot.gamma_hz, ch.gamma_hz + rad.gamma_hz, rtol=1e-12)
    assert np.all(ch.gamma_hz <= tot.gamma_hz * (1 + 1e-12))


@pytestmark_edge
def test_prebuilt_overlaps_change_nothing(physical, excited_levels, field):
    mixture, rates, fc = physical
    with_fc = sweep(_phys_request(physical, excited_levels, field))
    without = sweep(SpectrumRequest(
        field=field, mixture=mixture, excited=excited_levels, rates=rates,
        gamma0_hz=G0, delta_min_hz=-120e6, delta_max_hz=40e6,
        delta_step_hz=0.5e6, channel="total"))
    assert np.array_equal(with_fc.gamma_hz, without.gamma_hz)


def test_mismatched_overlap_matrix_is_rejected(physical, excited_levels, field):
    mixture, rates, fc = physical
    wrong_k = FieldParams.from_wavelength(780.0, saturation_s=1e-3,
                                          reflection_r=0.0)
    with pytest.raises(ConsistencyError, match="different k"):
        sweep(_phys_request(physical, excited_levels, wrong_k))
    sub = LevelSet("excited", list(excited_levels.states[:10]))
    with pytest.raises(ConsistencyError):
        sweep(_phys_request(physical, sub, field,
                            rates=level_rates(uniform_profile(G0), sub)))


def test_rates_must_cover_excited_basis(physical, excited_levels, field,
                                        guided_profile):
    mixture, rates, fc = physical
    sub = LevelSet("excited", list(excited_levels.states[:10]))
    short = level_rates(guided_profile, sub)
    with pytest.raises(ConsistencyError, match="rates"):
        sweep(_phys_request(physical, excited_levels, field, rates=short,
                            fc=None))


@pytestmark_edge
def test_reflection_toggle_changes_coupling(physical, excited_levels):
    mixture, rates, fc = physical
    refl = FieldParams.from_wavelength(852.0, saturation_s=1e-3,
                                       reflection_r=0.18450560652395515)
    on = sweep(_phys_request(physical, excited_levels, refl,
                             use_reflection=True))
    off = sweep(_phys_request(physical, excited_levels, refl,
                              use_reflection=False))
    assert not np.allclose(on.gamma_hz, off.gamma_hz)
    assert on.metadata["reflection_R"] == pytest.approx(0.18450560652395515)
    assert off.metadata["reflection_R"] == 0.0


# --- mixtures ---

def test_thermal_mixture_weights_and_metadata(thermal_200uK):
    m = thermal_200uK
    assert m.kind == "thermal-free"
    assert m.weights.sum() == pytest.approx(1.0, abs=1e-12)
    energies = np.array([s.energy_hz for s in m.states])
    assert np.all(energies > 0.0)
    assert energies.max() < m.metadata["e_cut_hz"]
    assert energies.min() > m.metadata["e_min_hz"]
    kt = m.metadata["kT_hz"]
    assert kt == pytest.approx(4.167323824665515e6, rel=1e-12)
    # weights follow the Boltzmann factor after the quadrature measure is
    # divided out: w_i / (2 u_i du_i) ~ exp(-E_i / kT)
    assert m.weights[np.argmin(energies)] > 0.0


def test_thermal_mixture_low_cutoff_warns(atom, ground_channel, disk_cache):
    pot = SurfacePotential(atom.ground)
    with pytest.warns(UserWarning, match="Boltzmann truncation"):
        m = thermal_mixture(atom, pot, 200e-6, e_cut_hz=2 * 4.167323824665515e6,
                            n_nodes=2, channel=ground_channel, cache=disk_cache)
    assert len(m) == 2


def test_thermal_mixture_validation(atom, ground_channel):
    pot = SurfacePotential(atom.ground)
    with pytest.raises(ParameterError, match="temperature"):
        thermal_mixture(atom, pot, -1e-6, channel=ground_channel)
    with pytest.raises(ParameterError, match="nodes"):
        thermal_mixture(atom, pot, 200e-6, n_nodes=1, channel=ground_channel)
    with pytest.raises(ParameterError, match="e_min"):
        thermal_mixture(atom, pot, 200e-6, e_min_hz=1e12,
                        channel=ground_channel)


def test_flat_bound_mixture_is_uniform(ground_levels):
    m = flat_bound_mixture(ground_levels, 275, 285)
    assert len(m) == 11
    assert np.all(m.weights == m.weights[0])
    assert m.metadata == {"nu_min": 275, "nu_max": 285}
    with pytest.raises(ParameterError):
        flat_bound_mixture(ground_levels, 260, 280)  # 260..268 not solved
    with pytest.raises(ParameterError):
        flat_bound_mixture(ground_levels, 290, 280)


def test_custom_mixture_normalizes(ground_levels):
    states = ground_levels.states[:3]
    m = custom_mixture(states, [2.0, 1.0, 1.0])
    assert m.weights == pytest.approx([0.5, 0.25, 0.25])


def test_combined_mixture_is_convex(ground_levels, thermal_200uK):
    flat = flat_bound_mixture(ground_levels, 269, 275)
    both = combine_mixtures(flat, thermal_200uK, 0.25)
    assert len(both) == len(flat) + len(thermal_200uK)
    assert both.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert both.weights[: len(flat)].sum() == pytest.approx(0.25)
    with pytest.raises(ParameterError):
        combine_mixtures(flat, thermal_200uK, 1.5)


def test_mixture_rejects_bad_weights(ground_levels):
    states = tuple(ground_levels.states[:2])
    with pytest.raises(ParameterError, match="sum to 1"):
        InitialMixture("custom", states, np.array([0.7, 0.7]))
    with pytest.raises(ParameterError, match="non-negative"):
        InitialMixture("custom", states, np.array([1.5, -0.5]))
    with pytest.raises(ParameterError, match="one weight"):
        InitialMixture("custom", states, np.array([1.0]))


def test_request_validation(degenerate):
    with pytest.raises(ParameterError, match="gamma0"):
        _deg_request(degenerate, gamma0_hz=0.0)
    with pytest.raises(ParameterError, match="step"):
        _deg_request(degenerate, delta_step_hz=-1.0)
    with pytest.raises(ParameterError, match="increasing"):
        _deg_request(degenerate, delta_min_hz=10e6, delta_max_hz=-10e6)
    with pytest.raises(ParameterError, match="selector"):
        _deg_request(degenerate, channel="everything")
