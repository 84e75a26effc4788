"""Far-field kernel, pattern-cut, and beam-metric tests.

The vectorised field evaluation is checked against an independent
element-by-element cmath loop (the double loop is the defining form).
"""

import cmath
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from risbeam.aperture import (
    ApertureSpec,
    CodingMatrix,
    Direction,
    coding_matrix,
    steering_phase_profile,
)
from risbeam.errors import DomainError
from risbeam.farfield import (
    beam_metrics,
    element_factor,
    gamma_field,
    gamma_pattern_cut,
    normalize_db,
    pattern_cut,
    peak_near,
    refined_peak_angles,
    total_field,
    write_pattern_csv,
)
from risbeam.units import free_space_wavelength_mm

LAMBDA0 = free_space_wavelength_mm(3.5)


def flagship(**overrides) -> ApertureSpec:
    base = dict(m_count=10, n_count=10, dx_mm=17.0, dy_mm=17.0, wavelength_mm=LAMBDA0)
    base.update(overrides)
    return ApertureSpec(**base)


def field_loop_oracle(spec, states, inc_scan, obs_scan):
    """Element-by-element reference sum in fixed m-then-n order."""
    k0 = 2 * math.pi / spec.wavelength_mm

    def unit(s):
        t, p = math.radians(abs(s)), (0.0 if s >= 0 else math.pi)
        return (math.sin(t) * math.cos(p), math.sin(t) * math.sin(p))

    ui, uo = unit(inc_scan), unit(obs_scan)
    total = 0j
    for m in range(spec.m_count):
        for n in range(spec.n_count):
            x, y = m * spec.dx_mm, n * spec.dy_mm
            gamma = spec.alpha * cmath.exp(1j * math.pi * int(states[m][n]))
            total += gamma * cmath.exp(1j * k0 * (x * (uo[0] - ui[0]) + y * (uo[1] - ui[1])))
    return total * math.cos(math.radians(abs(obs_scan))) ** spec.q_exponent


# ---------------------------------------------------------------- element factor


def test_element_factor_values():
    assert element_factor(0.0, 3.7) == 1.0
    assert element_factor(47.0, 0.0) == 1.0
    assert element_factor(60.0, 1.0) == pytest.approx(0.5, rel=1e-12)
    assert element_factor(90.0, 1.0) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(DomainError):
        element_factor(100.0, 1.0)
    with pytest.raises(DomainError):
        element_factor(10.0, -0.5)


# ---------------------------------------------------------------- total field


def test_single_element_unit_field():
    spec = ApertureSpec(1, 1, 17.0, 17.0, LAMBDA0)
    coding = CodingMatrix(states=np.zeros((1, 1), dtype=np.uint8))
    b = Direction.from_scan(0.0)
    assert total_field(spec, coding, b, b) == 1 + 0j


def test_uniform_broadside_coherent_sum():
    spec = flagship()
    coding = CodingMatrix(states=np.zeros((10, 10), dtype=np.uint8))
    b = Direction.from_scan(0.0)
    assert total_field(spec, coding, b, b) == 100 + 0j


def test_total_field_matches_loop_oracle():
    spec = flagship(alpha=0.9, q_exponent=1.0)
    rng = np.random.default_rng(42)
    inc = Direction.from_scan(12.0)
    for _ in range(10):
        states = rng.integers(0, 2, size=(10, 10))
        coding = CodingMatrix(states=states)
        for scan in (-60.0, -15.0, 0.0, 33.5, 80.0):
            got = total_field(spec, coding, inc, Direction.from_scan(scan))
            want = field_loop_oracle(spec, states, 12.0, scan)
            assert got == pytest.approx(want, rel=1e-12)


def test_total_field_shape_mismatch():
    spec = flagship()
    coding = CodingMatrix(states=np.zeros((3, 3), dtype=np.uint8))
    with pytest.raises(DomainError):
        total_field(spec, coding, Direction.from_scan(0.0), Direction.from_scan(0.0))


def test_bit_flip_negates_field_exactly():
    spec = flagship()
    coding = coding_matrix(spec, Direction.from_scan(0.0), Direction.from_scan(22.0))
    inc = Direction.from_scan(0.0)
    for scan in (-41.0, 0.0, 13.25, 22.0):
        e = total_field(spec, coding, inc, Direction.from_scan(scan))
        e_flip = total_field(spec, coding.flipped(), inc, Direction.from_scan(scan))
        assert e_flip == -e  # exact global pi shift


def test_alpha_scales_field_linearly():
    inc = Direction.from_scan(0.0)
    obs = Direction.from_scan(17.5)
    coding = coding_matrix(flagship(), inc, Direction.from_scan(28.0))
    e_full = total_field(flagship(alpha=1.0), coding, inc, obs)
    e_half = total_field(flagship(alpha=0.5), coding, inc, obs)
    assert e_half == pytest.approx(0.5 * e_full, rel=1e-12)


# ---------------------------------------------------------------- pattern cuts


def test_pattern_cut_normalisation_and_grid():
    spec = flagship()
    coding = coding_matrix(spec, Direction.from_scan(0.0), Direction.from_scan(30.0))
    cut = pattern_cut(spec, coding, Direction.from_scan(0.0), -90.0, 90.0, 5.0)
    assert len(cut.angles_deg) == 37  # the -90..90 / 5 deg measurement grid
    assert cut.angles_deg[0] == -90.0 and cut.angles_deg[-1] == 90.0
    assert cut.db_norm.max() == 0.0
    assert np.all(cut.db_norm <= 0.0)


def test_pattern_cut_matches_total_field_pointwise():
    spec = flagship(q_exponent=1.3, alpha=0.8)
    coding = coding_matrix(spec, Direction.from_scan(0.0), Direction.from_scan(-17.0))
    inc = Direction.from_scan(0.0)
    cut = pattern_cut(spec, coding, inc, -90.0, 90.0, 7.5)
    for angle, mag in zip(cut.angles_deg, cut.magnitude):
        assert mag == pytest.approx(
            abs(total_field(spec, coding, inc, Direction.from_scan(angle))), rel=1e-12
        )


def test_uniform_pattern_symmetric_about_broadside():
    spec = flagship()
    coding = CodingMatrix(states=np.zeros((10, 10), dtype=np.uint8))
    cut = pattern_cut(spec, coding, Direction.from_scan(0.0), -90.0, 90.0, 0.25)
    assert_allclose(cut.db_norm, cut.db_norm[::-1], atol=1e-9)
    metrics = beam_metrics(cut)
    assert metrics.peak_angle_deg == 0.0


def test_mirror_lobes_are_bit_exact_ties():
    # real-valued reflection states at normal incidence: |E(-s)| == |E(s)|
    spec = flagship()
    coding = coding_matrix(spec, Direction.from_scan(0.0), Direction.from_scan(30.0))
    cut = pattern_cut(spec, coding, Direction.from_scan(0.0), -90.0, 90.0, 0.25)
    assert_array_equal(cut.magnitude, cut.magnitude[::-1])


def test_normalize_db_cases():
    assert_allclose(normalize_db([10.2, 9.9]), [0.0, -0.3], atol=1e-12)
    assert_array_equal(normalize_db([5.0, 5.0, 5.0]), [0.0, 0.0, 0.0])
    base = normalize_db([3.0, -1.0, 2.5])
    assert_allclose(normalize_db([3.0 + 17.2, -1.0 + 17.2, 2.5 + 17.2]), base, atol=1e-12)
    with pytest.raises(DomainError):
        normalize_db([])
    with pytest.raises(DomainError):
        normalize_db([1.0, -np.inf])


# ---------------------------------------------------------------- beam metrics


def test_single_element_metrics_peak_broadside():
    spec = ApertureSpec(1, 1, 17.0, 17.0, LAMBDA0, q_exponent=1.0)
    coding = CodingMatrix(states=np.zeros((1, 1), dtype=np.uint8))
    cut = pattern_cut(spec, coding, Direction.from_scan(0.0), -90.0, 90.0, 1.0)
    metrics = beam_metrics(cut)
    assert metrics.peak_angle_deg == 0.0
    # cos taper alone: -3 dB where cos(theta) = 10^(-3/20)
    expected = 2 * math.degrees(math.acos(10 ** (-3 / 20)))
    assert metrics.half_power_beamwidth_deg == pytest.approx(expected, abs=0.2)
    assert metrics.sidelobe_level_db is None


def test_steered_codebook_peak_near_target():
    spec = flagship()
    inc = Direction.from_scan(0.0)
    coding = coding_matrix(spec, inc, Direction.from_scan(30.0))
    cut = pattern_cut(spec, coding, inc, -90.0, 90.0, 0.25)
    assert abs(peak_near(cut, 30.0) - 30.0) < 3.0
    # fine-sweep oracle: the tie-resolved peak matches a 0.05-deg brute sweep
    fine = pattern_cut(spec, coding, inc, 0.0, 90.0, 0.05)
    brute = fine.angles_deg[int(np.argmax(fine.magnitude))]
    assert abs(peak_near(cut, 30.0) - brute) < 0.25


def test_refined_peak_candidates_are_mirror_pair():
    spec = flagship()
    inc = Direction.from_scan(0.0)
    coding = coding_matrix(spec, inc, Direction.from_scan(22.0))
    cut = pattern_cut(spec, coding, inc, -90.0, 90.0, 0.25)
    cands = refined_peak_angles(cut)
    assert len(cands) == 2
    assert cands[0] == pytest.approx(-cands[1], abs=1e-9)
    assert peak_near(cut, 22.0) == max(cands)
    assert peak_near(cut, -22.0) == min(cands)


def test_boundary_peak_not_refined():
    spec = flagship(q_exponent=0.0)
    coding = CodingMatrix(states=np.zeros((10, 10), dtype=np.uint8))
    inc = Direction.from_scan(60.0)
    # uniform coding beams back toward the incidence direction; clip the cut
    # so the peak sits on the sweep boundary
    cut = pattern_cut(spec, coding, inc, -90.0, 60.0, 5.0)
    metrics = beam_metrics(cut, refine=True)
    assert metrics.boundary
    assert not metrics.refined
    assert metrics.peak_angle_deg == 60.0


def test_db_norm_unchanged_by_alpha():
    inc = Direction.from_scan(0.0)
    coding = coding_matrix(flagship(), inc, Direction.from_scan(-17.0))
    cut_full = pattern_cut(flagship(alpha=1.0), coding, inc, -90.0, 90.0, 2.5)
    cut_half = pattern_cut(flagship(alpha=0.5), coding, inc, -90.0, 90.0, 2.5)
    assert_allclose(cut_half.db_norm, cut_full.db_norm, atol=1e-9)


def test_continuous_profile_coherent_at_target():
    # the steering law cancels the aperture phase exactly at the target, so
    # the unquantised reflection grid sums to all M*N elements in phase there
    spec = flagship(q_exponent=1.0)
    inc = Direction.from_scan(10.0)
    target = Direction.from_scan(-24.0)
    profile = steering_phase_profile(spec, inc, target)
    gamma = np.exp(1j * profile.phases)
    field = gamma_field(spec, gamma, inc, target)
    assert field == pytest.approx(100.0 * element_factor(24.0, 1.0), rel=1e-12)


def test_continuous_profile_peaks_on_target():
    # unquantised phases, pure array sum (q = 0): peak exactly on the grid target
    spec = flagship(q_exponent=0.0)
    inc = Direction.from_scan(0.0)
    for target in (0.0, -17.0, 22.0, 28.0, 30.0, -30.0):
        profile = steering_phase_profile(spec, inc, Direction.from_scan(target))
        gamma = np.exp(1j * profile.phases)
        cut = gamma_pattern_cut(spec, gamma, inc, -90.0, 90.0, 0.25)
        metrics = beam_metrics(cut, refine=True)
        assert abs(metrics.peak_angle_deg - target) <= 0.25


# ---------------------------------------------------------------- CSV export


def test_pattern_csv_header_and_round_trip(tmp_path):
    spec = flagship()
    coding = coding_matrix(spec, Direction.from_scan(0.0), Direction.from_scan(30.0))
    cut = pattern_cut(spec, coding, Direction.from_scan(0.0), -90.0, 90.0, 5.0)
    path = tmp_path / "pattern.csv"
    write_pattern_csv(cut, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "angle_deg,mag_linear,db_raw,db_norm"
    assert len(lines) == 38
    first = [float(tok) for tok in lines[1].split(",")]
    assert first[0] == -90.0
    assert first[1] == cut.magnitude[0]
