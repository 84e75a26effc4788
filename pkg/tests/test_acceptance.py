"""Acceptance suite: every exit criterion at its stated tolerance.

Each test prints one ``ACCEPTANCE n ... PASS/FAIL`` line (visible with
``pytest -s`` and in failure output).

Known red criteria
------------------
Criteria 1 and 2 assert per-row beam-direction bounds that the plane-wave,
1-bit, 10x10 analytical model cannot meet for three of the sixteen table
rows; those assertions are kept faithful and left failing rather than
loosened.  The cause is structural: a 10-column aperture quantised to two
phase states realises only a coarse set of stripe periods, so only a coarse
set of lobe directions exists.

- T1, command -17 deg: the quantised ramp yields the 5/5 stripe split whose
  lobe pair sits at +/-20.6 deg (cos taper q=1).  No pattern local maximum
  exists within 3 deg of the command, so the +/-3 deg bound is unattainable.
- T2, command +20 deg at +30 deg incidence, and T3, command -18 deg at
  -30 deg incidence: the continuous profile spans less than half a phase
  cycle across the aperture, so its 1-bit image is nearly uniform and the
  strongest lobe forms 5.6 deg / 8.7 deg from the command (bound: 5 deg).

The mean-deviation and runtime clauses of criteria 1-2 pass; only the
per-row clauses fail.  All other criteria pass.
"""

import cmath
import math
from time import perf_counter

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from risbeam.aperture import (
    ApertureSpec,
    CodingMatrix,
    Direction,
    quantize_1bit,
    steering_phase_profile,
)
from risbeam.effmedium import LayerStack, effective_permittivity, electrical_thickness
from risbeam.farfield import beam_metrics, gamma_pattern_cut, total_field
from risbeam.linksim import (
    LinkScenario,
    cophase_codebook,
    effective_channel,
    equalize,
    qpsk_modulate,
    simulate_link,
    transmit,
)
from risbeam.refdata import (
    REFERENCE_SIMULATED,
    compare_predictions,
    flat_plate_baseline_db,
    gain_improvement,
    load_reference,
    predict_beam_directions,
)
from risbeam.units import free_space_wavelength_mm

LAMBDA0 = free_space_wavelength_mm(3.5)


def flagship(**overrides) -> ApertureSpec:
    base = dict(m_count=10, n_count=10, dx_mm=17.0, dy_mm=17.0, wavelength_mm=LAMBDA0)
    base.update(overrides)
    return ApertureSpec(**base)


def _report(num: int, name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    line = f"ACCEPTANCE {num} {name}: {status}"
    if detail:
        line += f"  [{detail}]"
    print(line)


def _deviation_table(report) -> str:
    return "; ".join(f"{r:g}->{p:.2f} (dev {abs(d):.2f})" for r, p, d in report.per_entry)


# ------------------------------------------------------------------ criterion 1


def test_criterion_1_beam_directions_normal_incidence():
    """Six commanded directions at normal incidence: per-row |dev| <= 3 deg,
    mean <= 4 deg, runtime < 5 s.  The -17 deg row is a known red (3.60 deg,
    see module docstring)."""
    spec = flagship(q_exponent=1.0)
    entries = load_reference("T1")
    t0 = perf_counter()
    peaks = predict_beam_directions(entries, spec, angle_step_deg=0.25)
    elapsed = perf_counter() - t0
    report = compare_predictions(entries, peaks, REFERENCE_SIMULATED)
    rows_ok = all(abs(d) <= 3.0 for _, _, d in report.per_entry)
    mean_ok = report.mean_abs_deviation_deg <= 4.0
    ok = rows_ok and mean_ok and elapsed < 5.0
    _report(1, "beam directions, normal incidence",
            ok, f"mean {report.mean_abs_deviation_deg:.2f} deg, {elapsed:.2f} s")
    assert elapsed < 5.0
    assert mean_ok, f"mean deviation {report.mean_abs_deviation_deg:.3f} > 4"
    assert rows_ok, f"per-row deviations exceed 3 deg: {_deviation_table(report)}"


# ------------------------------------------------------------------ criterion 2


def test_criterion_2_beam_directions_oblique_incidence():
    """T2/T3 oblique incidence: per-row |dev| <= 5 deg and mean <= 5 deg per
    table, runtime < 5 s.  The T2 +20 deg and T3 -18 deg rows are known red
    (5.60 / 8.71 deg, see module docstring)."""
    spec = flagship(q_exponent=1.0)
    t0 = perf_counter()
    reports = {}
    for table in ("T2", "T3"):
        entries = load_reference(table)
        peaks = predict_beam_directions(entries, spec, angle_step_deg=0.25)
        reports[table] = compare_predictions(entries, peaks, REFERENCE_SIMULATED)
    elapsed = perf_counter() - t0
    means_ok = all(r.mean_abs_deviation_deg <= 5.0 for r in reports.values())
    rows_ok = all(
        abs(d) <= 5.0 for r in reports.values() for _, _, d in r.per_entry
    )
    ok = means_ok and rows_ok and elapsed < 5.0
    detail = ", ".join(
        f"{t} mean {r.mean_abs_deviation_deg:.2f} deg" for t, r in reports.items()
    )
    _report(2, "beam directions, oblique incidence", ok, f"{detail}, {elapsed:.2f} s")
    assert elapsed < 5.0
    assert means_ok, detail
    assert rows_ok, "; ".join(
        f"{t}: {_deviation_table(r)}" for t, r in reports.items()
    )


# ------------------------------------------------------------------ criterion 3


def test_criterion_3_continuous_phase_exactness():
    """Before quantisation the steering law is exact: with the pure array sum
    (q = 0) the pattern peak lies within one 0.25 deg grid step of every
    commanded direction."""
    spec = flagship(q_exponent=0.0)
    incident = Direction.from_scan(0.0)
    worst = 0.0
    for entry in load_reference("T1"):
        profile = steering_phase_profile(spec, incident, Direction.from_scan(entry.target_scan_deg))
        gamma = np.exp(1j * profile.phases)
        cut = gamma_pattern_cut(spec, gamma, incident, -90.0, 90.0, 0.25)
        metrics = beam_metrics(cut, refine=True)
        worst = max(worst, abs(metrics.peak_angle_deg - entry.target_scan_deg))
    ok = worst <= 0.25
    _report(3, "continuous-phase exactness", ok, f"worst {worst:.4f} deg")
    assert ok, f"continuous-profile peak off target by {worst:.4f} deg"


# ------------------------------------------------------------------ criterion 4


def _field_loop_oracle(spec, states, inc_scan, obs_scan):
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


def test_criterion_4_oracle_equivalence():
    """Vectorised field evaluation matches the defining element-by-element
    double loop to 1e-12 relative, over 100 random codings x 37 angles.

    The error is measured relative to the coherent-sum scale alpha*M*N: at
    exact pattern nulls (e.g. a 50/50 coding at broadside, where the true sum
    is zero) any two valid summation orders differ by rounding noise and a
    value-relative error is ill-posed."""
    spec = flagship(alpha=0.85, q_exponent=1.0)
    scale = spec.alpha * spec.m_count * spec.n_count
    rng = np.random.default_rng(2024)
    angles = np.arange(-90.0, 90.1, 5.0)
    assert len(angles) == 37
    incident = Direction.from_scan(0.0)
    worst = 0.0
    for _ in range(100):
        states = rng.integers(0, 2, size=(10, 10))
        coding = CodingMatrix(states=states)
        for scan in angles:
            got = total_field(spec, coding, incident, Direction.from_scan(scan))
            want = _field_loop_oracle(spec, states, 0.0, scan)
            err = abs(got - want) / max(abs(want), scale)
            worst = max(worst, err)
    ok = worst <= 1e-12
    _report(4, "field-sum oracle equivalence", ok, f"worst rel err {worst:.2e}")
    assert ok, f"worst relative error {worst:.3e} > 1e-12"


# ------------------------------------------------------------------ criterion 5


def test_criterion_5_quantization_invariants():
    """Wrap invariance, bit-flip magnitude invariance and tie determinism,
    exhaustively over 10x10 grids covering every phase at 1 deg resolution.

    Wrap invariance is asserted for all 1-deg phases except the exact
    +/-90 deg tie circle: adding the (inexact) float 2*pi shifts those inputs
    off the tie by ~4e-16 before the quantiser ever sees them, which is a
    property of float addition, not of the quantiser.  Tie determinism at
    the exactly representable circle is asserted separately."""
    spec = flagship()
    incident = Direction.from_scan(0.0)
    degs = np.arange(-179.0, 181.0)  # 360 values at 1 deg resolution
    padded = np.concatenate([degs, degs[:40]]).reshape(4, 10, 10)
    tie = np.abs(np.abs(padded) - 90.0) < 1e-12

    probe_angles = [Direction.from_scan(s) for s in (-37.0, 0.0, 12.5, 64.0)]
    for grid_deg, tie_mask in zip(padded, tie):
        psi = np.radians(grid_deg)
        base = quantize_1bit(psi)

        # wrap invariance: +2*pi on everything, and on a checkerboard subset
        for shift in (np.ones_like(psi), np.indices(psi.shape).sum(0) % 2):
            shifted = psi + shift * 2 * np.pi
            changed = quantize_1bit(shifted).states != base.states
            assert not np.any(changed & ~tie_mask), "wrap invariance violated off the tie circle"

        # bit-flip magnitude invariance: global pi shift negates the field exactly
        for obs in probe_angles:
            e = total_field(spec, base, incident, obs)
            e_flip = total_field(spec, base.flipped(), incident, obs)
            assert e_flip == -e
            assert abs(e_flip) == abs(e)

    # tie determinism: the representable +/-pi/2 circle maps to state 0,
    # repeatably
    ties = np.array([[math.pi / 2, -math.pi / 2], [np.radians(90.0), np.radians(-90.0)]])
    first = quantize_1bit(ties).states
    assert_array_equal(first, np.zeros((2, 2), dtype=np.uint8))
    assert_array_equal(quantize_1bit(ties).states, first)

    _report(5, "quantisation invariants", True, "360 phases x 4 grids, ties to state 0")


# ------------------------------------------------------------------ criterion 6


def test_criterion_6_effective_medium_constants():
    """Series stack permittivity: strictly decreasing over a 100-point air-gap
    sweep, exact collapse at zero gap, and the flagship constants to 1e-4."""
    base = dict(h1_mm=2.0, h2_mm=1.6, eps_sub=4.4, tan_delta=0.02, f0_ghz=3.5)
    eps = [
        effective_permittivity(LayerStack(h_air_mm=h, **base))
        for h in np.linspace(0.0, 1.5, 100)
    ]
    decreasing = all(b < a for a, b in zip(eps, eps[1:]))
    exact_zero_gap = effective_permittivity(LayerStack(h_air_mm=0.0, **base)) == 4.4
    stack = LayerStack(h_air_mm=0.5, **base)
    eps_ok = abs(effective_permittivity(stack) - 3.1103) <= 1e-4
    thick_ok = abs(electrical_thickness(stack) - 0.02714) <= 1e-4
    ok = decreasing and exact_zero_gap and eps_ok and thick_ok
    _report(6, "effective-medium constants", ok,
            f"eps {effective_permittivity(stack):.6f}, thickness {electrical_thickness(stack):.6f}")
    assert decreasing
    assert exact_zero_gap
    assert eps_ok
    assert thick_ok


# ------------------------------------------------------------------ criterion 7


def test_criterion_7_link_simulation():
    """(a) noiseless loopback: SER = 0 and centroid distance 2*sqrt(Es);
    (b) post-equalisation noise variance within 5% of noise_var/|h_eff|^2
    over 1e5 symbols; (c) over 1000 seeded draws the co-phased codebook beats
    all-zero in |h_eff| always and in SER at least 95% of the time; total
    runtime < 30 s."""
    t0 = perf_counter()

    # (a) noiseless loopback
    scn = LinkScenario.seeded(10, 10, seed=2, noise_var=0.0, symbol_energy=4.0)
    h_eff = effective_channel(scn, cophase_codebook(scn))
    _, summary = simulate_link(scn, h_eff, 4000)
    loopback_ok = summary["ser"] == 0.0 and summary["d_min"] == pytest.approx(
        2 * math.sqrt(4.0), rel=1e-12
    )

    # (b) post-equalisation noise variance
    noise_var = 4.0
    scn_b = LinkScenario.seeded(10, 10, seed=3, noise_var=noise_var)
    h_b = effective_channel(scn_b, cophase_codebook(scn_b))
    n_sym = 100_000
    syms = qpsk_modulate(np.random.default_rng(3).integers(0, 2, 2 * n_sym))
    eq = equalize(transmit(scn_b, syms, h_b), h_b)
    sample = float(np.mean(np.abs(eq - syms) ** 2))
    expected = noise_var / abs(h_b) ** 2
    variance_ok = abs(sample - expected) <= 0.05 * expected

    # (c) paired codebook comparison over 1000 seeded draws
    h_wins = ser_wins = 0
    draws = 1000
    for seed in range(draws):
        scn_c = LinkScenario.seeded(10, 10, seed=seed, noise_var=16.0)
        h_co = effective_channel(scn_c, cophase_codebook(scn_c))
        h_zero = effective_channel(
            scn_c, CodingMatrix(states=np.zeros((10, 10), dtype=np.uint8))
        )
        h_wins += abs(h_co) > abs(h_zero)
        _, s_co = simulate_link(scn_c, h_co, 2000)
        _, s_zero = simulate_link(scn_c, h_zero, 2000)
        ser_wins += s_co["ser"] <= s_zero["ser"]
    elapsed = perf_counter() - t0
    pairing_ok = h_wins == draws and ser_wins >= 0.95 * draws

    ok = loopback_ok and variance_ok and pairing_ok and elapsed < 30.0
    _report(7, "link simulation", ok,
            f"var err {abs(sample - expected) / expected:.3%}, "
            f"|h| wins {h_wins}/{draws}, SER wins {ser_wins}/{draws}, {elapsed:.1f} s")
    assert loopback_ok, summary
    assert variance_ok, f"sample {sample:.4f} vs expected {expected:.4f}"
    assert h_wins == draws, f"|h_eff| dominance failed in {draws - h_wins} draws"
    assert ser_wins >= 0.95 * draws, f"SER wins only {ser_wins}/{draws}"
    assert elapsed < 30.0, f"runtime {elapsed:.1f} s"


# ------------------------------------------------------------------ criterion 8


def test_criterion_8_gain_improvement_arithmetic():
    """The bundled -45.2 / -54.2 dB levels reproduce the 9.0 dB flat-plate
    improvement exactly."""
    rows = load_reference("T1")
    improvement = gain_improvement(rows[0].measured_s21_db, flat_plate_baseline_db())
    ok = improvement == 9.0
    _report(8, "flat-plate gain improvement", ok, f"{improvement} dB")
    assert ok
