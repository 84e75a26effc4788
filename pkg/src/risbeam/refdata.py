"""Bundled beam-steering reference tables and the prediction-scoring procedure.

Three measurement tables from the 10x10 prototype are shipped as JSON: T1 at
normal incidence and T2/T3 at +/-30 deg incidence.  Each row pairs a
commanded (simulated) beam direction with the measured peak direction and
received level.  ``compare_predictions`` scores a list of predicted peak
angles against either reference column.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from .aperture import ApertureSpec, Direction, coding_matrix
from .errors import DomainError
from .farfield import pattern_cut, peak_near

TABLE_IDS = ("T1", "T2", "T3")
REFERENCE_SIMULATED = "simulated"
REFERENCE_MEASURED = "measured"


@dataclass(frozen=True)
class ReferenceEntry:
    """One table row: commanded direction vs measured beam, all scan angles in degrees."""

    incident_scan_deg: float
    target_scan_deg: float
    simulated_gain_dbi: float
    measured_scan_deg: float
    measured_s21_db: float
    table_id: str

    def __post_init__(self) -> None:
        if self.table_id not in TABLE_IDS:
            raise DomainError(f"unknown table id {self.table_id!r}")
        for name in ("incident_scan_deg", "target_scan_deg", "measured_scan_deg"):
            angle = getattr(self, name)
            if not -90.0 < angle < 90.0:
                raise DomainError(f"{name}={angle} outside (-90, 90) deg")


def _load_table_doc(table_id: str) -> dict:
    table_id = table_id.upper()
    if table_id not in TABLE_IDS:
        raise DomainError(f"unknown table id {table_id!r}; expected one of {TABLE_IDS}")
    path = resources.files("risbeam.data") / f"table_{table_id.lower()}.json"
    return json.loads(path.read_text())


def load_reference(table_id: str) -> list[ReferenceEntry]:
    """Load the bundled rows of one table, exactly as printed."""
    doc = _load_table_doc(table_id)
    incident = float(doc["incident_scan_deg"])
    return [
        ReferenceEntry(
            incident_scan_deg=incident,
            target_scan_deg=float(row["target_deg"]),
            simulated_gain_dbi=float(row["sim_gain_dbi"]),
            measured_scan_deg=float(row["meas_deg"]),
            measured_s21_db=float(row["meas_s21_db"]),
            table_id=doc["table"],
        )
        for row in doc["rows"]
    ]


def flat_plate_baseline_db() -> float:
    """Received level with a plain copper reflector in place of the coded surface."""
    return float(_load_table_doc("T1")["flat_plate_baseline_s21_db"])


def load_prototype_geometry() -> dict:
    """Fabrication dimensions of the measured prototype (reference metadata only)."""
    path = resources.files("risbeam.data") / "prototype_geometry.json"
    return json.loads(path.read_text())


@dataclass(frozen=True)
class DeviationReport:
    """Per-entry and aggregate deviation of predicted peaks from a reference column.

    ``per_entry`` holds (reference_angle, predicted_angle, deviation) triples
    with deviation = predicted - reference.
    """

    per_entry: tuple[tuple[float, float, float], ...]
    mean_abs_deviation_deg: float
    max_abs_deviation_deg: float
    reference: str

    def to_json_dict(self) -> dict:
        return {
            "reference": self.reference,
            "rows": [
                {"reference_deg": r, "predicted_deg": p, "deviation_deg": d}
                for r, p, d in self.per_entry
            ],
            "mean_abs_deviation_deg": self.mean_abs_deviation_deg,
            "max_abs_deviation_deg": self.max_abs_deviation_deg,
        }

    def format_text(self) -> str:
        lines = [f"{'reference':>12} {'predicted':>12} {'deviation':>12}"]
        for r, p, d in self.per_entry:
            lines.append(f"{r:>12.2f} {p:>12.2f} {d:>+12.2f}")
        lines.append(f"mean |deviation| = {self.mean_abs_deviation_deg:.3f} deg")
        lines.append(f"max  |deviation| = {self.max_abs_deviation_deg:.3f} deg")
        return "\n".join(lines)


def compare_predictions(
    entries: list[ReferenceEntry],
    predicted_peaks: list[float],
    reference: str = REFERENCE_SIMULATED,
) -> DeviationReport:
    """Score predicted peak angles against the chosen reference column, row by row."""
    if reference not in (REFERENCE_SIMULATED, REFERENCE_MEASURED):
        raise DomainError(f"reference must be 'simulated' or 'measured', got {reference!r}")
    if len(entries) != len(predicted_peaks):
        raise DomainError(
            f"{len(entries)} reference entries but {len(predicted_peaks)} predictions"
        )
    per_entry = []
    for entry, predicted in zip(entries, predicted_peaks):
        ref_angle = (
            entry.target_scan_deg if reference == REFERENCE_SIMULATED else entry.measured_scan_deg
        )
        per_entry.append((ref_angle, float(predicted), float(predicted) - ref_angle))
    devs = [abs(d) for _, _, d in per_entry]
    return DeviationReport(
        per_entry=tuple(per_entry),
        mean_abs_deviation_deg=sum(devs) / len(devs),
        max_abs_deviation_deg=max(devs),
        reference=reference,
    )


def predict_beam_directions(
    entries: list[ReferenceEntry],
    spec: ApertureSpec,
    angle_step_deg: float = 0.25,
) -> list[float]:
    """Predicted 1-bit beam peak for each table row.

    Synthesises the codebook for the row's incidence and target, sweeps the
    fine x-z cut, and reports the refined peak.  Exact twin lobes (bit-equal
    magnitude at mirrored angles, unavoidable for real reflection
    coefficients at normal incidence) resolve toward the commanded direction.
    """
    peaks = []
    for entry in entries:
        incident = Direction.from_scan(entry.incident_scan_deg)
        target = Direction.from_scan(entry.target_scan_deg)
        coding = coding_matrix(spec, incident, target)
        cut = pattern_cut(spec, coding, incident, -90.0, 90.0, angle_step_deg)
        peaks.append(peak_near(cut, entry.target_scan_deg))
    return peaks


def gain_improvement(s21_device_db: float, s21_baseline_db: float) -> float:
    """Level improvement of the device over a baseline reflector, in dB."""
    if not (abs(s21_device_db) < float("inf") and abs(s21_baseline_db) < float("inf")):
        raise DomainError("dB levels must be finite")
    return s21_device_db - s21_baseline_db
