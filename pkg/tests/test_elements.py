import cmath
import math

import numpy as np
import pytest

from photonlab.elements import (
    ElementKind,
    ElementSpec,
    MissingMirrorModeError,
    apply_beam_splitter,
    apply_dove_prism,
    apply_mirror,
    apply_phase_shift,
    apply_swap,
    beam_splitter,
    build_interferometer,
    mach_zehnder,
    phase_shift,
)
from photonlab.fock import (
    FockSpace,
    StateVector,
    basis_vector,
    oam,
    path,
    total_number_expectation,
)

A, B = path(0), path(1)


def two_path_space(n_max=2):
    return FockSpace([A, B], n_max=n_max)


def oam_space(l, n_max=2):
    return FockSpace([oam(-l), oam(l)] if l else [oam(0)], n_max=n_max)


# ---------------------------------------------------------------------------
# beam splitter


def test_single_photon_splits_evenly_with_i_on_reflection():
    sp = two_path_space()
    out = apply_beam_splitter(basis_vector(sp, {A: 1}), A, B)
    assert abs(out.amplitude(sp.basis_state({A: 1})) - 1 / math.sqrt(2)) < 1e-15
    assert abs(out.amplitude(sp.basis_state({B: 1})) - 1j / math.sqrt(2)) < 1e-15


def test_two_photon_interference_null():
    # oracle: the four two-photon paths summed by hand with t = 1/sqrt2,
    # r = i/sqrt2: coincidence t*t + r*r = 0, bunched sqrt2 * t * r
    t, r = 1 / math.sqrt(2), 1j / math.sqrt(2)
    coincidence_oracle = t * t + r * r
    bunched_oracle = math.sqrt(2) * t * r
    assert coincidence_oracle == 0

    sp = two_path_space()
    out = apply_beam_splitter(basis_vector(sp, {A: 1, B: 1}), A, B)
    assert abs(out.amplitude(sp.basis_state({A: 1, B: 1}))) < 1e-14
    assert abs(out.amplitude(sp.basis_state({A: 2})) - bunched_oracle) < 1e-15
    assert abs(out.amplitude(sp.basis_state({B: 2})) - bunched_oracle) < 1e-15


def test_zero_mixing_angle_is_identity():
    sp = two_path_space(n_max=3)
    st = StateVector(
        sp,
        {
            sp.basis_state({A: 2, B: 1}): 0.6,
            sp.basis_state({B: 1}): 0.8,
        },
    )
    out = apply_beam_splitter(st, A, B, kappa=0.0)
    assert (out + st.scaled(-1)).norm() < 1e-15


def test_beam_splitter_preserves_norm_and_photon_number():
    rng = np.random.default_rng(7)
    sp = two_path_space(n_max=4)
    basis = list(sp.enumerate_basis())
    for _ in range(10):
        amps = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
        st = StateVector(sp, dict(zip(basis, amps)), normalize=True)
        out = apply_beam_splitter(st, A, B, kappa=rng.uniform(0, math.pi))
        assert abs(out.norm() - 1.0) < 1e-12
        assert abs(total_number_expectation(out) - total_number_expectation(st)) < 1e-12


def test_inner_products_preserved():
    rng = np.random.default_rng(11)
    sp = two_path_space(n_max=3)
    basis = list(sp.enumerate_basis())

    def random_state():
        amps = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
        return StateVector(sp, dict(zip(basis, amps)), normalize=True)

    for _ in range(5):
        u, v = random_state(), random_state()
        before = u.inner(v)
        after = apply_beam_splitter(u, A, B).inner(apply_beam_splitter(v, A, B))
        assert abs(before - after) < 1e-11


# ---------------------------------------------------------------------------
# phase shift


def test_phase_shift_on_upper_mode():
    sp = two_path_space()
    st = StateVector(
        sp,
        {
            sp.basis_state({B: 1}): 1 / math.sqrt(2),
            sp.basis_state({A: 1}): 1 / math.sqrt(2),
        },
    )
    phi = 0.9
    out = apply_phase_shift(st, A, phi)
    assert abs(out.amplitude(sp.basis_state({B: 1})) - 1 / math.sqrt(2)) < 1e-15
    assert abs(
        out.amplitude(sp.basis_state({A: 1})) - cmath.exp(1j * phi) / math.sqrt(2)
    ) < 1e-15


def test_collective_phase_of_four_photons():
    sp = two_path_space(n_max=4)
    st = basis_vector(sp, {A: 4})
    out = apply_phase_shift(st, A, math.pi / 4)
    # four photons each gain pi/4: total phase pi
    assert abs(out.amplitude(sp.basis_state({A: 4})) - (-1.0)) < 1e-12


def test_zero_phase_is_identity():
    sp = two_path_space()
    st = basis_vector(sp, {A: 1})
    assert apply_phase_shift(st, A, 0.0) is st


# ---------------------------------------------------------------------------
# Dove prism and mirror


def test_prism_flips_charge_with_rotation_phase():
    sp = oam_space(2)
    theta = 0.3
    out = apply_dove_prism(basis_vector(sp, {oam(2): 1}), [oam(2), oam(-2)], theta)
    expected = cmath.exp(4j * theta)
    assert abs(out.amplitude(sp.basis_state({oam(-2): 1})) - expected) < 1e-15


def test_prism_leaves_zero_charge_alone():
    sp = oam_space(0)
    st = basis_vector(sp, {oam(0): 1})
    out = apply_dove_prism(st, [oam(0)], 1.2345)
    assert (out + st.scaled(-1)).norm() < 1e-15


def test_prism_at_zero_angle_is_plain_flip():
    sp = oam_space(3)
    st = StateVector(
        sp,
        {
            sp.basis_state({oam(3): 1}): 1 / math.sqrt(2),
            sp.basis_state({oam(-3): 1}): 1 / math.sqrt(2),
        },
    )
    out = apply_dove_prism(st, [oam(3), oam(-3)], 0.0)
    assert out.fidelity(st) > 1 - 1e-15


def test_prism_is_involution():
    sp = oam_space(2, n_max=3)
    rng = np.random.default_rng(3)
    basis = list(sp.enumerate_basis())
    amps = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
    st = StateVector(sp, dict(zip(basis, amps)), normalize=True)
    arm = [oam(2), oam(-2)]
    twice = apply_dove_prism(apply_dove_prism(st, arm, 0.7), arm, 0.7)
    assert abs(twice.fidelity(st) - 1.0) < 1e-12


def test_prism_missing_mirror_mode():
    sp = FockSpace([oam(1)], n_max=1)
    with pytest.raises(MissingMirrorModeError):
        apply_dove_prism(basis_vector(sp, {oam(1): 1}), [oam(1)], 0.1)


def test_mirror_is_phase_free_flip():
    sp = oam_space(1)
    out = apply_mirror(basis_vector(sp, {oam(1): 1}), [oam(1), oam(-1)])
    assert abs(out.amplitude(sp.basis_state({oam(-1): 1})) - 1.0) < 1e-15


def test_swap_exchanges_occupations():
    sp = two_path_space(n_max=3)
    out = apply_swap(basis_vector(sp, {A: 2, B: 1}), A, B)
    assert abs(out.amplitude(sp.basis_state({A: 1, B: 2})) - 1.0) < 1e-15


# ---------------------------------------------------------------------------
# composition


def mz_matrix_oracle(phi):
    # 2x2 single-photon matrix product: BS * phase * BS
    c = 1 / math.sqrt(2)
    bs = np.array([[c, 1j * c], [1j * c, c]])
    ph = np.diag([np.exp(1j * phi), 1.0])
    return bs @ ph @ bs


@pytest.mark.parametrize("phi", [0.0, 0.4, math.pi / 2, 2.5])
def test_mach_zehnder_matches_matrix_oracle(phi):
    sp = two_path_space(n_max=1)
    out = mach_zehnder(A, B, phi).apply(basis_vector(sp, {A: 1}))
    column = mz_matrix_oracle(phi)[:, 0]
    assert abs(out.amplitude(sp.basis_state({A: 1})) - column[0]) < 1e-12
    assert abs(out.amplitude(sp.basis_state({B: 1})) - column[1]) < 1e-12
    intensities = (
        abs(out.amplitude(sp.basis_state({A: 1}))) ** 2,
        abs(out.amplitude(sp.basis_state({B: 1}))) ** 2,
    )
    assert abs(intensities[0] - math.sin(phi / 2) ** 2) < 1e-12
    assert abs(intensities[1] - math.cos(phi / 2) ** 2) < 1e-12


def test_empty_interferometer_is_identity():
    sp = two_path_space()
    st = basis_vector(sp, {A: 1})
    assert build_interferometer([]).apply(st) is st


def test_double_splitter_routes_deterministically():
    # two balanced splitters compose to a pure swap up to phase
    sp = two_path_space(n_max=1)
    out = build_interferometer([beam_splitter(A, B), beam_splitter(A, B)]).apply(
        basis_vector(sp, {A: 1})
    )
    assert abs(out.amplitude(sp.basis_state({B: 1}))) > 1 - 1e-12
    assert abs(out.amplitude(sp.basis_state({A: 1}))) < 1e-12


def test_composite_preserves_norm():
    rng = np.random.default_rng(5)
    sp = two_path_space(n_max=3)
    basis = list(sp.enumerate_basis())
    amps = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
    st = StateVector(sp, dict(zip(basis, amps)), normalize=True)
    circuit = build_interferometer(
        [beam_splitter(A, B), phase_shift(A, 0.7), beam_splitter(A, B, 0.3)]
    )
    assert abs(circuit.apply(st).norm() - 1.0) < 1e-12


# ---------------------------------------------------------------------------
# element specs


def test_spec_validation():
    with pytest.raises(ValueError):
        ElementSpec(ElementKind.BEAM_SPLITTER, (A,), 0.5)
    with pytest.raises(ValueError):
        ElementSpec(ElementKind.PHASE_SHIFT, (A, B), 0.5)
    with pytest.raises(ValueError):
        ElementSpec(ElementKind.PHASE_SHIFT, (A,), math.inf)
    with pytest.raises(ValueError):
        ElementSpec(ElementKind.DOVE_PRISM, (), 0.1)
