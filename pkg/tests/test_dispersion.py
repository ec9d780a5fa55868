import math

import numpy as np
import pytest

from photonlab.dispersion import (
    DelayFit,
    DispersionProfile,
    FitError,
    Interferogram,
    PulseSpectrum,
    VACUUM_PROFILE,
    classical_baseline,
    correlation_envelope,
    envelope_center,
    envelope_kurtosis,
    envelope_rms_width,
    extract_delay,
    franson_interferogram,
    fringe_visibility,
    hom_interferogram,
    hom_rates,
    opposite_dispersion,
    propagate,
    skc_interferogram,
    skc_rates,
)
from photonlab.elements import apply_beam_splitter, apply_phase_shift
from photonlab.fock import FockSpace, StateVector, freq_bin
from photonlab.oam_imaging import ResolutionError
from photonlab.sources import BiphotonSpectrum, frequency_entangled_pair

SIGMA = 0.3          # rad/fs
OMEGA0 = 2.35        # rad/fs
TAUS = np.linspace(-12.0, 12.0, 241)


def gaussian_pair(n_bins=512):
    return BiphotonSpectrum.gaussian(OMEGA0, SIGMA, n_bins=n_bins)


def beta(b1=0.0, b2=0.0, b3=0.0, length=1.0):
    return DispersionProfile((0.0, b1, b2, b3), length)


# ---------------------------------------------------------------------------
# propagation


def test_empty_media_leave_amplitude_alone():
    spec = gaussian_pair(64)
    out = propagate(spec, signal=VACUUM_PROFILE, idler=VACUUM_PROFILE)
    assert np.allclose(out.amplitude, spec.amplitude)


def test_beta1_is_a_pure_delay():
    # linear-phase shift theorem: the dip translates without reshaping
    spec = gaussian_pair()
    shift = 3.0
    moved = hom_interferogram(spec, TAUS, signal=beta(b1=shift))
    plain_kernel = hom_rates(spec, TAUS - shift)[2]
    assert np.max(np.abs(moved.kernel - plain_kernel)) < 1e-12


def test_franson_media_cancel_joint_phase_at_second_order():
    spec = gaussian_pair(128)
    b2 = beta(b2=30.0)
    out = propagate(spec, signal=b2, idler=opposite_dispersion(b2))
    assert np.max(np.abs(np.angle(out.amplitude / spec.amplitude))) < 1e-12


def test_propagation_is_multiplicative_phase():
    spec = gaussian_pair(64)
    out = propagate(spec, signal=beta(b2=10.0), idler=beta(b1=1.0))
    assert np.allclose(np.abs(out.amplitude), np.abs(spec.amplitude))


# ---------------------------------------------------------------------------
# two-input mixing (signal and idler onto one splitter)


def test_dip_reaches_zero_at_balance():
    gram = hom_interferogram(gaussian_pair(), TAUS)
    assert gram.rates.min() < 1e-12
    assert abs(gram.scan[gram.rates.argmin()]) < 1e-12


def test_dip_oracle_from_fock_machinery():
    # independent route: the full state-vector simulation on a small grid
    spec = gaussian_pair(8)
    medium = beta(b1=0.8, b2=5.0)
    n = spec.detunings.size
    for tau in (-1.0, 0.0, 0.7, 2.0):
        st = frequency_entangled_pair(spec)
        for j in range(n):
            st = apply_phase_shift(
                st, freq_bin(j, 0), float(medium.phase(spec.detunings[j]))
            )
            st = apply_phase_shift(
                st, freq_bin(j, 1), float((spec.omega0 + spec.detunings[j]) * tau)
            )
        for j in range(n):
            st = apply_beam_splitter(st, freq_bin(j, 0), freq_bin(j, 1))
        coincidence = 0.0
        for bs, amp in st.items():
            channels = sorted(m.channel for m, cnt in bs.occ for _ in range(cnt))
            if channels == [0, 1]:
                coincidence += abs(amp) ** 2
        vectorized = hom_rates(spec, np.array([tau, tau + 1.0]), signal=medium)[0][0]
        assert abs(coincidence - vectorized) < 1e-10


def test_equal_arm_gvd_leaves_dip_untouched():
    spec = gaussian_pair()
    plain = hom_interferogram(spec, TAUS)
    both = hom_interferogram(spec, TAUS, signal=beta(b2=22.0), idler=beta(b2=22.0))
    ratio = envelope_rms_width(both) / envelope_rms_width(plain)
    assert 0.99 <= ratio <= 1.01


def test_one_arm_gvd_leaves_dip_untouched():
    spec = gaussian_pair()
    plain = hom_interferogram(spec, TAUS)
    dispersed = hom_interferogram(spec, TAUS, signal=beta(b2=22.0))
    ratio = envelope_rms_width(dispersed) / envelope_rms_width(plain)
    assert 0.99 <= ratio <= 1.01


def test_dip_visibility_beats_classical_bound():
    gram = hom_interferogram(gaussian_pair(), TAUS)
    vis = fringe_visibility(gram.rates)
    assert vis >= 0.99
    assert vis > 1 / math.sqrt(2)


def test_interferogram_symmetric_under_delay_reversal():
    spec = gaussian_pair()
    gram = hom_interferogram(spec, TAUS)
    assert np.max(np.abs(gram.rates - gram.rates[::-1])) < 1e-10


def test_outcome_probabilities_sum_to_one():
    spec = gaussian_pair()
    coincidence, bunched, _ = hom_rates(spec, TAUS, signal=beta(b1=1.0, b2=9.0))
    assert np.max(np.abs(coincidence + bunched - 1.0)) < 1e-10


def test_beta1_centers_within_one_grid_step():
    spec = gaussian_pair()
    shift = 3.0
    gram = hom_interferogram(spec, TAUS, signal=beta(b1=shift))
    step = TAUS[1] - TAUS[0]
    assert abs(envelope_center(gram) - shift) < step


def test_beta3_reshapes_envelope():
    spec = gaussian_pair()
    plain = hom_interferogram(spec, TAUS)
    skewed = hom_interferogram(spec, TAUS, signal=beta(b3=40.0))
    change = abs(envelope_kurtosis(skewed) - envelope_kurtosis(plain))
    assert change / envelope_kurtosis(plain) > 0.05


# ---------------------------------------------------------------------------
# one-port-fed interferometer (both photons in one input)


def test_skc_empty_medium_shows_coincidence_fringes():
    spec = gaussian_pair()
    taus = np.linspace(-6.0, 6.0, 4001)
    gram = skc_interferogram(spec, VACUUM_PROFILE, taus)
    # textbook two-photon fringes: oscillation at twice the center
    # frequency under the bandwidth envelope
    rates = gram.rates
    assert fringe_visibility(rates) > 0.9
    fringe = gram.extras["fringe"]
    zero_crossings = np.sum(np.diff(np.sign(fringe.real)) != 0)
    expected = 2 * OMEGA0 * 12.0 / math.pi
    assert abs(zero_crossings - expected) <= 2


def test_skc_oracle_from_fock_machinery():
    spec = gaussian_pair(8)
    medium = beta(b1=0.4, b2=6.0)
    n = spec.detunings.size
    omegas = spec.omega0 + spec.detunings
    root_step = math.sqrt(spec.step)
    for tau in (0.0, 0.35, -0.8):
        space = FockSpace(
            [freq_bin(j, ch) for j in range(n) for ch in (0, 1)], n_max=2
        )
        amp = {}
        for j in range(n):
            key = space.basis_state({freq_bin(j, 0): 1, freq_bin(n - 1 - j, 0): 1})
            amp[key] = amp.get(key, 0) + complex(spec.amplitude[j]) * root_step
        st = StateVector(space, amp, normalize=True)
        for j in range(n):
            st = apply_beam_splitter(st, freq_bin(j, 0), freq_bin(j, 1))
        for j in range(n):
            phase = float(omegas[j] * tau + medium.phase(spec.detunings[j]))
            st = apply_phase_shift(st, freq_bin(j, 0), phase)
        for j in range(n):
            st = apply_beam_splitter(st, freq_bin(j, 0), freq_bin(j, 1))
        coincidence = 0.0
        for bs, a in st.items():
            channels = sorted(m.channel for m, cnt in bs.occ for _ in range(cnt))
            if channels == [0, 1]:
                coincidence += abs(a) ** 2
        vectorized = skc_rates(spec, medium, np.array([tau, tau + 0.05]))[0][0]
        assert abs(coincidence - vectorized) < 1e-10


def test_skc_envelope_immune_to_gvd():
    spec = gaussian_pair()
    plain = skc_interferogram(spec, VACUUM_PROFILE, TAUS, include_fringes=False)
    dispersed = skc_interferogram(spec, beta(b2=22.0), TAUS, include_fringes=False)
    ratio = envelope_rms_width(dispersed) / envelope_rms_width(plain)
    assert 0.99 <= ratio <= 1.01


def test_skc_envelope_reshaped_by_third_order():
    spec = gaussian_pair()
    plain = skc_interferogram(spec, VACUUM_PROFILE, TAUS, include_fringes=False)
    skewed = skc_interferogram(spec, beta(b3=40.0), TAUS, include_fringes=False)
    change = abs(envelope_kurtosis(skewed) - envelope_kurtosis(plain))
    assert change / envelope_kurtosis(plain) > 0.05


def test_skc_outcomes_complete():
    spec = gaussian_pair()
    coincidence, bunched, _, _ = skc_rates(spec, beta(b2=9.0), TAUS, include_fringes=False)
    assert np.max(np.abs(coincidence + bunched - 1.0)) < 1e-10


# ---------------------------------------------------------------------------
# opposite-dispersion (two-medium) configuration


def test_franson_envelope_immune_to_gvd():
    spec = gaussian_pair()
    plain = correlation_envelope(spec, TAUS)
    dispersed = franson_interferogram(spec, beta(b2=22.0), TAUS)
    ratio = envelope_rms_width(dispersed) / envelope_rms_width(plain)
    assert 0.99 <= ratio <= 1.01


def test_franson_odd_orders_add():
    spec = gaussian_pair()
    plain = correlation_envelope(spec, TAUS)
    skewed = franson_interferogram(spec, beta(b3=20.0), TAUS)
    change = abs(envelope_kurtosis(skewed) - envelope_kurtosis(plain))
    assert change / envelope_kurtosis(plain) > 0.05


def test_same_sign_media_do_broaden_envelope():
    # the contrast case: without the opposite-dispersion pairing the
    # correlation envelope spreads
    spec = gaussian_pair()
    b2 = beta(b2=22.0)
    both_positive = correlation_envelope(propagate(spec, signal=b2, idler=b2), TAUS)
    plain = correlation_envelope(spec, TAUS)
    assert envelope_rms_width(both_positive) / envelope_rms_width(plain) > 2.0


# ---------------------------------------------------------------------------
# classical baseline


def test_transform_limited_width_without_medium():
    pulse = PulseSpectrum.gaussian(1.0)
    widths = classical_baseline(pulse, VACUUM_PROFILE)
    assert abs(widths.broadening - 1.0) < 1e-9
    # amplitude std sigma gives intensity std 1/(sqrt(2) sigma) in time
    assert abs(widths.width - 1 / math.sqrt(2)) < 0.005


def test_gaussian_chirp_closed_form():
    # amplitude std sigma: width grows by sqrt(1 + (beta2 L sigma^2)^2)
    sigma = 1.0
    pulse = PulseSpectrum.gaussian(sigma)
    widths = classical_baseline(pulse, beta(b2=2.0))
    assert abs(widths.broadening - math.sqrt(5.0)) < 0.01


def test_doubling_length_follows_closed_form():
    sigma = 1.0
    pulse = PulseSpectrum.gaussian(sigma)
    single = classical_baseline(pulse, DispersionProfile((0, 0, 2.0, 0), 1.0))
    double = classical_baseline(pulse, DispersionProfile((0, 0, 2.0, 0), 2.0))
    assert abs(single.broadening - math.sqrt(1 + 4)) < 0.01
    assert abs(double.broadening - math.sqrt(1 + 16)) < 0.02


def test_quantum_beats_classical_for_same_medium():
    spec = gaussian_pair()
    plain = hom_interferogram(spec, TAUS)
    dispersed = hom_interferogram(spec, TAUS, signal=beta(b2=22.0))
    quantum_ratio = envelope_rms_width(dispersed) / envelope_rms_width(plain)
    classical = classical_baseline(PulseSpectrum.gaussian(SIGMA), beta(b2=22.0))
    assert 0.99 <= quantum_ratio <= 1.01
    assert classical.broadening > 2.0


# ---------------------------------------------------------------------------
# delay extraction


def test_recovers_synthetic_group_delay():
    spec = gaussian_pair()
    gram = hom_interferogram(spec, TAUS, signal=beta(b1=3.0))
    fit = extract_delay(gram)
    assert abs(fit.delay - 3.0) <= max(3 * fit.stderr, 1e-6)


def test_gvd_does_not_move_the_recovered_delay():
    spec = gaussian_pair()
    clean = extract_delay(hom_interferogram(spec, TAUS, signal=beta(b1=3.0)))
    mixed = extract_delay(
        hom_interferogram(spec, TAUS, signal=beta(b1=3.0, b2=22.0))
    )
    assert abs(mixed.delay - clean.delay) <= max(3 * clean.stderr, 1e-9)


def test_noiseless_dip_fit_is_conditioning_limited():
    spec = gaussian_pair()
    fit = extract_delay(hom_interferogram(spec, TAUS))
    assert abs(fit.delay) < 1e-6
    assert fit.stderr < 1e-3


def test_flat_data_raises_fit_error():
    gram = Interferogram(
        scan=np.linspace(0, 1, 32),
        rates=np.full(32, 0.5),
        kernel=np.zeros(32, dtype=complex),
        configuration="hom",
    )
    with pytest.raises(FitError):
        extract_delay(gram)


def test_delay_fit_reports_visibility():
    fit = extract_delay(hom_interferogram(gaussian_pair(), TAUS))
    assert isinstance(fit, DelayFit)
    assert fit.visibility >= 0.99


# ---------------------------------------------------------------------------
# guards


def test_coarse_delay_grid_rejected():
    spec = gaussian_pair()
    with pytest.raises(ResolutionError):
        hom_interferogram(spec, np.linspace(-50.0, 50.0, 5))


def test_excessive_delay_range_rejected():
    spec = gaussian_pair(32)  # coarse detuning grid
    with pytest.raises(ResolutionError):
        hom_interferogram(spec, np.linspace(-400.0, 400.0, 100001))


def test_profile_validation():
    with pytest.raises(ValueError):
        DispersionProfile((0.0, 1.0, 2.0), 1.0)
    with pytest.raises(ValueError):
        DispersionProfile((0.0, 0.0, 0.0, 0.0), -1.0)
    with pytest.raises(ValueError):
        DispersionProfile((0.0, math.nan, 0.0, 0.0), 1.0)
