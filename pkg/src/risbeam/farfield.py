"""Far-field evaluation of a coded aperture: pattern cuts, dB normalisation, beam metrics.

The scattered field at observation direction u_obs under plane-wave incidence
from u_inc is the coherent element sum

    E = f(theta_obs) * sum_mn alpha * s_mn * exp(j k0 p_mn . (u_obs - u_inc))

with s_mn = +/-1 from the 1-bit coding, f = cos^q the element factor, and the
field amplitude normalised to 1 (patterns are compared after normalisation
only).  dB values are 20*log10 of field magnitude.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .aperture import ApertureSpec, CodingMatrix, Direction, _position_grids
from .errors import DomainError


def element_factor(theta_deg: float, q: float) -> float:
    """Per-element angular taper cos^q(theta)."""
    if not 0.0 <= theta_deg <= 90.0:
        raise DomainError(f"theta must be in [0, 90] deg, got {theta_deg}")
    if q < 0:
        raise DomainError(f"exponent q must be >= 0, got {q}")
    return float(math.cos(math.radians(theta_deg)) ** q)


def _check_shape(spec: ApertureSpec, coding: CodingMatrix) -> None:
    if coding.shape != spec.shape:
        raise DomainError(
            f"coding shape {coding.shape} does not match aperture {spec.shape}"
        )


def total_field(
    spec: ApertureSpec,
    coding: CodingMatrix,
    incident: Direction,
    observation: Direction,
) -> complex:
    """Coherent sum of all element contributions at one observation direction."""
    _check_shape(spec, coding)
    x, y = _position_grids(spec)
    du = observation.unit_vector - incident.unit_vector
    phase = spec.k0_per_mm * (x * du[0] + y * du[1])
    gamma = spec.alpha * coding.reflection_signs()
    field = np.sum(gamma * np.exp(1j * phase))
    return complex(field * element_factor(observation.theta_deg, spec.q_exponent))


def gamma_field(
    spec: ApertureSpec,
    gamma: np.ndarray,
    incident: Direction,
    observation: Direction,
) -> complex:
    """Like :func:`total_field` but with an arbitrary complex reflection grid."""
    gamma = np.asarray(gamma)
    if gamma.shape != spec.shape:
        raise DomainError(f"gamma shape {gamma.shape} does not match aperture {spec.shape}")
    x, y = _position_grids(spec)
    du = observation.unit_vector - incident.unit_vector
    phase = spec.k0_per_mm * (x * du[0] + y * du[1])
    field = np.sum(gamma * np.exp(1j * phase))
    return complex(field * element_factor(observation.theta_deg, spec.q_exponent))


@dataclass(frozen=True)
class PatternCut:
    """Sampled field magnitude over scan angles in one observation plane.

    ``db_raw`` is 20*log10 of the linear magnitude (-inf at exact nulls);
    ``db_norm`` subtracts the maximum so the peak sits at 0 dB.
    """

    angles_deg: np.ndarray
    magnitude: np.ndarray
    db_raw: np.ndarray
    db_norm: np.ndarray
    plane: str = "xz"
    q_exponent: float = 1.0

    def __post_init__(self) -> None:
        for name in ("angles_deg", "magnitude", "db_raw", "db_norm"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = len(self.angles_deg)
        if n == 0:
            raise DomainError("pattern cut is empty")
        if any(len(getattr(self, name)) != n for name in ("magnitude", "db_raw", "db_norm")):
            raise DomainError("pattern cut arrays must have equal length")
        if np.any(np.diff(self.angles_deg) <= 0):
            raise DomainError("pattern cut angles must be strictly increasing")
        if abs(self.db_norm.max()) > 1e-9:
            raise DomainError("normalised pattern must peak at 0 dB")


def _scan_grid(start_deg: float, stop_deg: float, step_deg: float) -> np.ndarray:
    if step_deg <= 0:
        raise DomainError(f"angle step must be > 0, got {step_deg}")
    if stop_deg < start_deg:
        raise DomainError("empty angle range")
    n = int(math.floor((stop_deg - start_deg) / step_deg + 1e-9)) + 1
    return start_deg + step_deg * np.arange(n)


def _cut_fields(
    spec: ApertureSpec,
    gamma: np.ndarray,
    incident: Direction,
    angles_deg: np.ndarray,
) -> np.ndarray:
    """Vectorised x-z-plane field evaluation; one complex value per scan angle."""
    x, y = _position_grids(spec)
    ui = incident.unit_vector
    scan_rad = np.radians(angles_deg)
    ux = np.sin(scan_rad)  # x-z plane: u = (sin s, 0, cos s)
    phase = spec.k0_per_mm * (
        np.outer(ux - ui[0], x.ravel()) + np.outer(np.zeros_like(ux) - ui[1], y.ravel())
    )
    fields = np.sum(gamma.ravel() * np.exp(1j * phase), axis=1)
    taper = np.cos(scan_rad) ** spec.q_exponent  # cos is even, so |s| is implicit
    return fields * taper


def pattern_cut(
    spec: ApertureSpec,
    coding: CodingMatrix,
    incident: Direction,
    start_deg: float = -90.0,
    stop_deg: float = 90.0,
    step_deg: float = 0.25,
) -> PatternCut:
    """Evaluate the x-z principal-plane cut of a coded aperture.

    The -90..90 deg range at 5 deg steps reproduces a turntable measurement
    grid; the default 0.25 deg step is the fine grid used for synthesis
    checks.
    """
    _check_shape(spec, coding)
    angles = _scan_grid(start_deg, stop_deg, step_deg)
    gamma = spec.alpha * coding.reflection_signs()
    fields = _cut_fields(spec, gamma, incident, angles)
    return _assemble_cut(angles, fields, spec.q_exponent)


def gamma_pattern_cut(
    spec: ApertureSpec,
    gamma: np.ndarray,
    incident: Direction,
    start_deg: float = -90.0,
    stop_deg: float = 90.0,
    step_deg: float = 0.25,
) -> PatternCut:
    """Pattern cut for an arbitrary complex reflection grid (e.g. unquantised phases)."""
    gamma = np.asarray(gamma)
    if gamma.shape != spec.shape:
        raise DomainError(f"gamma shape {gamma.shape} does not match aperture {spec.shape}")
    angles = _scan_grid(start_deg, stop_deg, step_deg)
    fields = _cut_fields(spec, gamma, incident, angles)
    return _assemble_cut(angles, fields, spec.q_exponent)


def _assemble_cut(angles: np.ndarray, fields: np.ndarray, q: float) -> PatternCut:
    magnitude = np.abs(fields)
    with np.errstate(divide="ignore"):
        db_raw = 20.0 * np.log10(magnitude)
    db_norm = db_raw - db_raw.max()
    return PatternCut(
        angles_deg=angles, magnitude=magnitude, db_raw=db_raw, db_norm=db_norm,
        q_exponent=q,
    )


def normalize_db(values) -> np.ndarray:
    """Shift a dB series so its maximum is 0 dB."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise DomainError("cannot normalise an empty dB series")
    if not np.all(np.isfinite(arr)):
        raise DomainError("dB series must be finite")
    return arr - arr.max()


@dataclass(frozen=True)
class BeamMetrics:
    """Summary of one pattern cut: peak direction/level, beamwidth, sidelobe level.

    ``hpbw_deg`` or ``sll_db`` are None when the -3 dB crossings or any
    sidelobe do not exist within the cut.  ``refined`` records whether the
    sub-grid parabolic fit was applied; it is False when the peak sits on the
    cut boundary.
    """

    peak_angle_deg: float
    peak_db: float
    half_power_beamwidth_deg: float | None
    sidelobe_level_db: float | None
    refined: bool
    boundary: bool


def _parabolic_offset(y0: float, y1: float, y2: float) -> float:
    """Sub-grid offset (in grid steps) of the vertex of a parabola through 3 points."""
    denom = y0 - 2.0 * y1 + y2
    if denom == 0 or not math.isfinite(denom):
        return 0.0
    return 0.5 * (y0 - y2) / denom


def beam_metrics(cut: PatternCut, refine: bool = True) -> BeamMetrics:
    """Extract beam metrics from a pattern cut.

    The peak is the argmax of the normalised pattern (first sample on exact
    ties); with ``refine`` a 3-point parabolic fit in dB sharpens interior
    peaks.  The half-power beamwidth interpolates the -3 dB crossings
    linearly; the sidelobe level is the highest local maximum outside the
    main lobe, whose extent ends at the first local minimum on each side.
    """
    db = cut.db_norm
    angles = cut.angles_deg
    idx = int(np.argmax(db))
    boundary = idx == 0 or idx == len(db) - 1

    peak_angle = float(angles[idx])
    peak_norm = float(db[idx])
    refined = refine and not boundary and bool(np.isfinite(db[idx - 1]) and np.isfinite(db[idx + 1]))
    if refined:
        off = _parabolic_offset(db[idx - 1], db[idx], db[idx + 1])
        step = 0.5 * float(angles[idx + 1] - angles[idx - 1])
        peak_angle = float(angles[idx] + off * step)
        peak_norm = float(db[idx] - 0.25 * (db[idx - 1] - db[idx + 1]) * off)

    level = peak_norm - 3.0
    left = _crossing(angles, db, idx, level, direction=-1)
    right = _crossing(angles, db, idx, level, direction=+1)
    hpbw = (right - left) if (left is not None and right is not None) else None

    lobe_lo = _first_local_min(db, idx, direction=-1)
    lobe_hi = _first_local_min(db, idx, direction=+1)
    pieces = []
    if lobe_lo is not None:
        pieces.append(db[:lobe_lo])
    if lobe_hi is not None:
        pieces.append(db[lobe_hi + 1 :])
    outside = np.concatenate(pieces) if pieces else np.array([])
    sll = float(outside.max()) if outside.size else None

    return BeamMetrics(
        peak_angle_deg=peak_angle,
        peak_db=peak_norm + float(cut.db_raw.max()),
        half_power_beamwidth_deg=hpbw,
        sidelobe_level_db=sll,
        refined=refined,
        boundary=boundary,
    )


def _crossing(angles, db, peak_idx, level, direction) -> float | None:
    """Angle where the pattern first crosses ``level`` walking from the peak."""
    i = peak_idx
    while 0 <= i + direction < len(db):
        j = i + direction
        if db[j] < level:
            # linear interpolation between samples i (>= level) and j (< level)
            frac = (db[i] - level) / (db[i] - db[j])
            return float(angles[i] + frac * (angles[j] - angles[i]))
        i = j
    return None


def _first_local_min(db, peak_idx, direction) -> int | None:
    """Index of the first local minimum walking from the peak; None if the
    pattern never rises again before the cut edge (no sidelobe on that side)."""
    i = peak_idx
    while 0 <= i + direction < len(db):
        j = i + direction
        if db[j] > db[i]:
            return i
        i = j
    return None


def refined_peak_angles(cut: PatternCut, within_db: float = 1e-9) -> list[float]:
    """Refined angles of all local maxima within ``within_db`` of the global maximum.

    A 1-bit coded aperture at normal incidence radiates an exact twin lobe at
    the mirrored scan angle (its reflection coefficients are real), so the
    global maximum can be a bit-exact tie; this returns every tied (or
    near-tied) lobe so callers can disambiguate.
    """
    db = cut.db_norm
    angles = cut.angles_deg
    out = []
    for i in range(len(db)):
        left = db[i - 1] if i > 0 else -np.inf
        right = db[i + 1] if i < len(db) - 1 else -np.inf
        if db[i] >= left and db[i] >= right and db[i] >= -within_db:
            if 0 < i < len(db) - 1 and np.isfinite(left) and np.isfinite(right):
                off = _parabolic_offset(db[i - 1], db[i], db[i + 1])
                step = 0.5 * float(angles[i + 1] - angles[i - 1])
                out.append(float(angles[i] + off * step))
            else:
                out.append(float(angles[i]))
    return out


def peak_near(cut: PatternCut, target_deg: float, within_db: float = 1e-9) -> float:
    """Peak angle, with exact lobe ties resolved toward the commanded direction."""
    candidates = refined_peak_angles(cut, within_db)
    return min(candidates, key=lambda a: abs(a - target_deg))


def write_pattern_csv(cut: PatternCut, path) -> None:
    """Write a cut as CSV with header ``angle_deg,mag_linear,db_raw,db_norm``."""
    with open(path, "w") as fh:
        fh.write("angle_deg,mag_linear,db_raw,db_norm\n")
        for a, m, raw, norm in zip(cut.angles_deg, cut.magnitude, cut.db_raw, cut.db_norm):
            fh.write(f"{float(a)!r},{float(m)!r},{float(raw)!r},{float(norm)!r}\n")


def metrics_to_json_dict(metrics: BeamMetrics, q: float) -> dict:
    return {
        "peak_angle_deg": metrics.peak_angle_deg,
        "peak_db": metrics.peak_db,
        "hpbw_deg": metrics.half_power_beamwidth_deg,
        "sll_db": metrics.sidelobe_level_db,
        "q": q,
        "refined": metrics.refined,
    }


def save_metrics_json(metrics: BeamMetrics, q: float, path) -> None:
    with open(path, "w") as fh:
        json.dump(metrics_to_json_dict(metrics, q), fh, indent=2)
        fh.write("\n")
