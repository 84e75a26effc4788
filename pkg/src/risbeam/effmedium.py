"""Effective-medium model of the multilayer unit cell.

Closed-form stack permittivity and electrical thickness, dielectric-loss
bookkeeping (loss power, loss participation ratio, effective loss tangent),
the phase-to-amplitude figure of merit driving air-gap selection, and via
placement from imported surface-current maps.

All lengths are mm, frequencies GHz, field magnitudes V/m, volumes mm^3.
Every function here is a pure function of immutable inputs.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InputFormatError
from .units import VACUUM_PERMITTIVITY, free_space_wavelength_mm

MODE_SERIES = "series"
MODE_AS_PRINTED = "as_printed"
PERMITTIVITY_MODES = (MODE_SERIES, MODE_AS_PRINTED)

REGION_FR4 = "FR4"
REGION_OTHER = "OTHER"


@dataclass(frozen=True)
class LayerStack:
    """Substrate / air-gap geometry and material constants of one unit cell.

    ``h1_mm`` and ``h2_mm`` are the two substrate thicknesses, ``h_air_mm``
    the gap opened between them, ``eps_sub``/``eps_air`` the relative
    permittivities, ``tan_delta`` the substrate loss tangent and ``f0_ghz``
    the operating frequency.  The total height is always derived, never
    stored.
    """

    h1_mm: float
    h2_mm: float
    h_air_mm: float
    eps_sub: float
    tan_delta: float
    f0_ghz: float
    eps_air: float = 1.0

    def __post_init__(self) -> None:
        if not (self.h1_mm > 0 and self.h2_mm > 0):
            raise DomainError("substrate thicknesses h1 and h2 must be > 0")
        if self.h_air_mm < 0:
            raise DomainError("air-gap height h_air must be >= 0")
        if self.eps_sub < 1 or self.eps_air < 1:
            raise DomainError("relative permittivities must be >= 1")
        if self.tan_delta < 0:
            raise DomainError("loss tangent must be >= 0")
        if self.f0_ghz <= 0:
            raise DomainError("operating frequency f0 must be > 0")

    @property
    def total_height_mm(self) -> float:
        return self.h1_mm + self.h2_mm + self.h_air_mm

    @property
    def wavelength_mm(self) -> float:
        return free_space_wavelength_mm(self.f0_ghz)


def effective_permittivity(stack: LayerStack, mode: str = MODE_SERIES) -> float:
    """Single dielectric constant summarising the substrate + air-gap stack.

    ``series`` uses the series-capacitance combination

        eps_sub * eps_air * h / (eps_air * (h1 + h2) + eps_sub * h_air)

    which equals ``eps_sub`` at zero gap and decreases monotonically as the
    gap opens (for ``eps_sub > eps_air``).  ``as_printed`` evaluates the
    transposed combination

        (eps_air * eps_sub) * h / ((h1 + h2) * eps_sub + eps_air * h_air)

    which instead collapses to ``eps_air`` at zero gap; it is kept behind an
    explicit mode flag for cross-checking other toolchains.
    """
    h12 = stack.h1_mm + stack.h2_mm
    h = stack.total_height_mm
    if mode == MODE_SERIES:
        num = stack.eps_sub * stack.eps_air * h
        den = stack.eps_air * h12 + stack.eps_sub * stack.h_air_mm
    elif mode == MODE_AS_PRINTED:
        num = (stack.eps_air * stack.eps_sub) * h
        den = h12 * stack.eps_sub + stack.eps_air * stack.h_air_mm
    else:
        raise DomainError(
            f"unknown permittivity mode {mode!r}; expected one of {PERMITTIVITY_MODES}"
        )
    result = num / den
    if not math.isfinite(result):
        raise DomainError(
            "effective permittivity is non-finite; degenerate thicknesses "
            f"(h1={stack.h1_mm}, h2={stack.h2_mm}, h_air={stack.h_air_mm})"
        )
    return result


def electrical_thickness(stack: LayerStack, mode: str = MODE_SERIES) -> float:
    """Total stack height in dielectric-loaded wavelengths, h / (lambda0 * sqrt(eps_eff))."""
    eps_eff = effective_permittivity(stack, mode)
    return stack.total_height_mm / (stack.wavelength_mm * math.sqrt(eps_eff))


@dataclass(frozen=True)
class FieldSample:
    """One discretised field sample: |E| (V/m), cell volume (mm^3), region tag."""

    e_mag: float
    volume_mm3: float
    region: str

    def __post_init__(self) -> None:
        if not (math.isfinite(self.e_mag) and self.e_mag >= 0):
            raise DomainError(f"field magnitude must be finite and >= 0, got {self.e_mag}")
        if not (math.isfinite(self.volume_mm3) and self.volume_mm3 >= 0):
            raise DomainError(f"cell volume must be finite and >= 0, got {self.volume_mm3}")
        if self.region not in (REGION_FR4, REGION_OTHER):
            raise DomainError(f"region must be {REGION_FR4!r} or {REGION_OTHER!r}, got {self.region!r}")


@dataclass(frozen=True)
class FieldRegionSamples:
    """Discretised |E| samples over the unit-cell volume, tagged by material region."""

    samples: tuple[FieldSample, ...]

    def __post_init__(self) -> None:
        if len(self.samples) == 0:
            raise DomainError("at least one field sample is required")

    @classmethod
    def from_csv(cls, path) -> "FieldRegionSamples":
        """Load samples from a CSV file with header ``e_mag,volume,region``."""
        rows = []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != [
                "e_mag",
                "volume",
                "region",
            ]:
                raise InputFormatError(
                    f"{path}: line 1: expected header 'e_mag,volume,region', got {reader.fieldnames}"
                )
            for lineno, row in enumerate(reader, start=2):
                try:
                    sample = FieldSample(
                        e_mag=float(row["e_mag"]),
                        volume_mm3=float(row["volume"]),
                        region=row["region"].strip().upper(),
                    )
                except (TypeError, ValueError, KeyError) as exc:
                    raise InputFormatError(f"{path}: line {lineno}: {exc}") from exc
                rows.append(sample)
        return cls(samples=tuple(rows))

    def energy_sum(self, region: str | None = None) -> float:
        """Sum of |E|^2 * dV (V^2 mm^3 / m^2) over all samples or one region."""
        return sum(
            s.e_mag**2 * s.volume_mm3
            for s in self.samples
            if region is None or s.region == region
        )


def dielectric_loss_power(fields: FieldRegionSamples, stack: LayerStack) -> float:
    """Dissipated power (W) in the lossy substrate region.

    Midpoint Riemann sum (omega * eps0 * eps_sub * tan_delta / 2) * sum |E|^2 dV
    over FR4-tagged samples; volumes are converted from mm^3 to m^3.
    """
    if not any(s.region == REGION_FR4 for s in fields.samples):
        raise DomainError("no FR4-tagged samples: the lossy region is empty")
    omega = 2.0 * math.pi * stack.f0_ghz * 1e9
    energy_m3 = fields.energy_sum(REGION_FR4) * 1e-9
    return 0.5 * omega * VACUUM_PERMITTIVITY * stack.eps_sub * stack.tan_delta * energy_m3


def loss_participation_ratio(fields: FieldRegionSamples) -> float:
    """Fraction of stored field energy residing in the FR4 region, in [0, 1]."""
    total = fields.energy_sum()
    if total <= 0:
        raise DomainError("total field energy is zero; participation ratio undefined")
    return fields.energy_sum(REGION_FR4) / total


def effective_loss_tangent(lpr: float, tan_delta_fr4: float) -> float:
    """Loss tangent scaled by the participation ratio: lpr * tan_delta_fr4."""
    if not 0.0 <= lpr <= 1.0:
        raise DomainError(f"loss participation ratio must be in [0, 1], got {lpr}")
    if tan_delta_fr4 < 0:
        raise DomainError("loss tangent must be >= 0")
    return lpr * tan_delta_fr4


@dataclass(frozen=True)
class FomSample:
    """One air-gap sweep point: phase tuning range (deg) and mean reflection magnitude (dB)."""

    h_air_mm: float
    delta_phi_deg: float
    delta_s11_db: float

    def __post_init__(self) -> None:
        if not 0.0 < self.delta_phi_deg <= 360.0:
            raise DomainError(f"phase tuning range must be in (0, 360] deg, got {self.delta_phi_deg}")
        if not math.isfinite(self.delta_s11_db) or self.delta_s11_db > 0:
            raise DomainError(f"reflection magnitude must be finite and <= 0 dB, got {self.delta_s11_db}")


def phase_amplitude_fom(delta_phi_deg: float, delta_s11_db: float) -> float:
    """Phase tuning range per unit reflection loss, deg/dB.

    The dB magnitude enters as an absolute value, so a larger figure of merit
    always means more phase range per dB of reflection loss.  By convention
    ``delta_s11_db`` is the arithmetic mean of the ON/OFF reflection
    magnitudes in dB; callers may supply any other single-scalar summary.
    """
    if not delta_phi_deg > 0:
        raise DomainError(f"phase tuning range must be > 0, got {delta_phi_deg}")
    if delta_s11_db == 0:
        raise DomainError("zero reflection-magnitude change: figure of merit would be infinite")
    return delta_phi_deg / abs(delta_s11_db)


def optimize_air_gap(samples: list[FomSample]) -> tuple[float, list[float]]:
    """Pick the air-gap height maximising the phase-to-amplitude figure of merit.

    Discrete sweep over the supplied samples, no interpolation.  Ties break
    toward the smallest gap (compactness).  Returns ``(h_air_opt_mm, foms)``
    with one figure-of-merit value per input sample, for reporting.
    """
    if len(samples) == 0:
        raise DomainError("empty air-gap sweep")
    if len(samples) < 2:
        raise DomainError("air-gap sweep needs at least two samples")
    heights = [s.h_air_mm for s in samples]
    if any(b <= a for a, b in zip(heights, heights[1:])):
        raise DomainError("air-gap sweep heights must be strictly increasing")
    foms = [phase_amplitude_fom(s.delta_phi_deg, s.delta_s11_db) for s in samples]
    best = int(np.argmax(foms))  # first occurrence = smallest h_air on ties
    return samples[best].h_air_mm, foms


def load_fom_sweep_csv(path) -> list[FomSample]:
    """Load an air-gap sweep from a CSV with header ``h_air_mm,delta_phi_deg,delta_s11_db``."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        expected = ["h_air_mm", "delta_phi_deg", "delta_s11_db"]
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != expected:
            raise InputFormatError(
                f"{path}: line 1: expected header '{','.join(expected)}', got {reader.fieldnames}"
            )
        for lineno, row in enumerate(reader, start=2):
            try:
                out.append(
                    FomSample(
                        h_air_mm=float(row["h_air_mm"]),
                        delta_phi_deg=float(row["delta_phi_deg"]),
                        delta_s11_db=float(row["delta_s11_db"]),
                    )
                )
            except (TypeError, ValueError, KeyError, DomainError) as exc:
                raise InputFormatError(f"{path}: line {lineno}: {exc}") from exc
    return out


@dataclass(frozen=True)
class CurrentMap:
    """2-D grid of fundamental-mode surface-current magnitudes (A/m).

    ``values[row, col]`` samples the metallised region on a uniform grid of
    pitch ``cell_pitch_mm``.  The array is stored read-only.
    """

    values: np.ndarray
    cell_pitch_mm: float

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 2 or arr.size == 0:
            raise DomainError("current map must be a non-empty 2-D grid")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise DomainError("current-map values must be finite and >= 0")
        if not np.any(arr > 0):
            raise DomainError("current map is all-zero")
        if not self.cell_pitch_mm > 0:
            raise DomainError("cell pitch must be > 0")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_csv(cls, path, cell_pitch_mm: float = 1.0) -> "CurrentMap":
        """Load a sparse ``row,col,value`` CSV into a dense grid (missing cells are 0)."""
        triples: dict[tuple[int, int], float] = {}
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["row", "col", "value"]:
                raise InputFormatError(
                    f"{path}: line 1: expected header 'row,col,value', got {reader.fieldnames}"
                )
            for lineno, row in enumerate(reader, start=2):
                try:
                    r, c = int(row["row"]), int(row["col"])
                    v = float(row["value"])
                except (TypeError, ValueError, KeyError) as exc:
                    raise InputFormatError(f"{path}: line {lineno}: {exc}") from exc
                if r < 0 or c < 0:
                    raise InputFormatError(f"{path}: line {lineno}: negative grid index ({r}, {c})")
                if (r, c) in triples:
                    raise InputFormatError(f"{path}: line {lineno}: duplicate cell ({r}, {c})")
                triples[(r, c)] = v
        if not triples:
            raise InputFormatError(f"{path}: no data rows")
        n_rows = 1 + max(r for r, _ in triples)
        n_cols = 1 + max(c for _, c in triples)
        grid = np.zeros((n_rows, n_cols))
        for (r, c), v in triples.items():
            grid[r, c] = v
        return cls(values=grid, cell_pitch_mm=cell_pitch_mm)


@dataclass(frozen=True)
class ViaLocation:
    """Selected via placement: nearest grid cell, fractional centroid, and mm offsets.

    Millimetre offsets place cell (r, c) at ((c + 0.5) * pitch, (r + 0.5) * pitch),
    i.e. cell centres, with x running along columns and y along rows.
    """

    row: int
    col: int
    centroid_row: float
    centroid_col: float
    x_mm: float
    y_mm: float


def select_via_location(cmap: CurrentMap, plateau_tol: float = 0.01) -> ViaLocation:
    """Place the via at the centroid of the near-maximum current region.

    Cells with value >= (1 - plateau_tol) * max form the plateau; the via
    goes at the arithmetic centroid of their centres.  The default 1%
    tolerance absorbs sampling noise in imported field maps.  With
    ``plateau_tol = 0`` and a unique maximum this reduces to the argmax cell.
    """
    if not 0.0 <= plateau_tol < 1.0:
        raise DomainError(f"plateau tolerance must be in [0, 1), got {plateau_tol}")
    values = cmap.values
    peak = values.max()
    rows, cols = np.nonzero(values >= (1.0 - plateau_tol) * peak)
    centroid_row = float(rows.mean())
    centroid_col = float(cols.mean())
    pitch = cmap.cell_pitch_mm
    return ViaLocation(
        row=int(round(centroid_row)),
        col=int(round(centroid_col)),
        centroid_row=centroid_row,
        centroid_col=centroid_col,
        x_mm=(centroid_col + 0.5) * pitch,
        y_mm=(centroid_row + 0.5) * pitch,
    )


def rank_via_candidates(
    cmap: CurrentMap,
    candidates: list[tuple[int, int]],
    delta_z: float,
) -> list[tuple[tuple[int, int], float]]:
    """Rank candidate via cells by phase sensitivity |J(r)|^2 * |dZ|.

    Output is sorted descending by score; equal scores keep input order.
    """
    n_rows, n_cols = cmap.values.shape
    scored = []
    for r, c in candidates:
        if not (0 <= r < n_rows and 0 <= c < n_cols):
            raise DomainError(
                f"candidate ({r}, {c}) lies outside the {n_rows}x{n_cols} current map"
            )
        scored.append(((r, c), float(cmap.values[r, c] ** 2 * abs(delta_z))))
    return sorted(scored, key=lambda item: -item[1])
