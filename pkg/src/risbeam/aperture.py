"""Array geometry, steering phase synthesis, and 1-bit quantisation.

The aperture lies in the x-y plane.  A direction (theta, phi) in standard
spherical coordinates has unit vector
(sin(theta)cos(phi), sin(theta)sin(phi), cos(theta)); scan angles in the x-z
principal plane map to theta = |scan|, phi = 0 for positive scan and 180 deg
for negative scan.

Element (m, n) of an M x N aperture sits at ((m-1)*dx, (n-1)*dy) in mm with
1-based m, n.  In-memory grids are indexed [m-1, n-1], so axis 0 runs along x
and axis 1 along y.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InputFormatError


@dataclass(frozen=True)
class Direction:
    """Propagation/observation direction in standard spherical coordinates (degrees)."""

    theta_deg: float
    phi_deg: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.theta_deg <= 90.0:
            raise DomainError(f"theta must be in [0, 90] deg, got {self.theta_deg}")
        if not -180.0 < self.phi_deg <= 180.0:
            raise DomainError(f"phi must be in (-180, 180] deg, got {self.phi_deg}")

    @classmethod
    def from_scan(cls, scan_deg: float) -> "Direction":
        """Direction at a signed scan angle in the x-z principal plane."""
        if not -90.0 <= scan_deg <= 90.0:
            raise DomainError(f"scan angle must be in [-90, 90] deg, got {scan_deg}")
        return cls(theta_deg=abs(scan_deg), phi_deg=0.0 if scan_deg >= 0 else 180.0)

    @property
    def unit_vector(self) -> np.ndarray:
        t = math.radians(self.theta_deg)
        p = math.radians(self.phi_deg)
        return np.array(
            [math.sin(t) * math.cos(p), math.sin(t) * math.sin(p), math.cos(t)]
        )

    @property
    def scan_deg(self) -> float:
        """Signed x-z-plane scan angle; defined only for phi in {0, 180}."""
        if self.phi_deg == 0.0:
            return self.theta_deg
        if self.phi_deg == 180.0:
            return -self.theta_deg
        raise DomainError(f"direction phi={self.phi_deg} deg is not in the x-z principal plane")


@dataclass(frozen=True)
class ApertureSpec:
    """Array layout and per-element reflection parameters.

    ``m_count`` rows run along x with pitch ``dx_mm``; ``n_count`` columns run
    along y with pitch ``dy_mm``.  ``alpha`` is the uniform per-element
    reflection amplitude and ``q_exponent`` the cos^q element-factor exponent.
    """

    m_count: int
    n_count: int
    dx_mm: float
    dy_mm: float
    wavelength_mm: float
    alpha: float = 1.0
    q_exponent: float = 1.0

    def __post_init__(self) -> None:
        if self.m_count < 1 or self.n_count < 1:
            raise DomainError("aperture needs at least one element per axis")
        if not (self.dx_mm > 0 and self.dy_mm > 0 and self.wavelength_mm > 0):
            raise DomainError("dx, dy and wavelength must be > 0")
        if not 0.0 < self.alpha <= 1.0:
            raise DomainError(f"reflection amplitude alpha must be in (0, 1], got {self.alpha}")
        if self.q_exponent < 0:
            raise DomainError(f"element-factor exponent q must be >= 0, got {self.q_exponent}")

    @property
    def k0_per_mm(self) -> float:
        return 2.0 * math.pi / self.wavelength_mm

    @property
    def shape(self) -> tuple[int, int]:
        return (self.m_count, self.n_count)


def element_positions(spec: ApertureSpec) -> np.ndarray:
    """(M, N, 2) array of element (x, y) positions in mm; element (1, 1) is at the origin."""
    x = np.arange(spec.m_count) * spec.dx_mm
    y = np.arange(spec.n_count) * spec.dy_mm
    out = np.empty((spec.m_count, spec.n_count, 2))
    out[..., 0], out[..., 1] = np.meshgrid(x, y, indexing="ij")
    return out


def _position_grids(spec: ApertureSpec) -> tuple[np.ndarray, np.ndarray]:
    x = np.arange(spec.m_count) * spec.dx_mm
    y = np.arange(spec.n_count) * spec.dy_mm
    return np.meshgrid(x, y, indexing="ij")


@dataclass(frozen=True)
class PhaseProfile:
    """Continuous per-element reflection phases (radians) over an aperture."""

    phases: np.ndarray
    spec: ApertureSpec | None = None

    def __post_init__(self) -> None:
        arr = np.asarray(self.phases, dtype=float)
        if arr.ndim != 2:
            raise DomainError("phase profile must be a 2-D grid")
        if not np.all(np.isfinite(arr)):
            m, n = np.argwhere(~np.isfinite(arr))[0]
            raise DomainError(f"non-finite phase at element ({m + 1}, {n + 1})")
        if self.spec is not None and arr.shape != self.spec.shape:
            raise DomainError(
                f"phase grid shape {arr.shape} does not match aperture {self.spec.shape}"
            )
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "phases", arr)


def steering_phase_profile(
    spec: ApertureSpec, incident: Direction, target: Direction
) -> PhaseProfile:
    """Continuous phase law steering an incident plane wave toward a target direction.

    psi_mn = -k0 * p_mn . (u_target - u_incident), which cancels the spatial
    phase of the aperture sum exactly at the target direction so that all
    element contributions add in phase there.
    """
    x, y = _position_grids(spec)
    du = target.unit_vector - incident.unit_vector
    psi = -spec.k0_per_mm * (x * du[0] + y * du[1])
    return PhaseProfile(phases=psi, spec=spec)


def incident_phase(spec: ApertureSpec, incident: Direction) -> PhaseProfile:
    """Spatial phase of the incident plane wave at each element, -k0 * p_mn . u_inc."""
    x, y = _position_grids(spec)
    ui = incident.unit_vector
    psi = -spec.k0_per_mm * (x * ui[0] + y * ui[1])
    return PhaseProfile(phases=psi, spec=spec)


def wrap_phase(psi: np.ndarray) -> np.ndarray:
    """Wrap phases to the interval (-pi, pi]."""
    psi = np.asarray(psi, dtype=float)
    wrapped = np.mod(psi, 2.0 * np.pi)
    return np.where(wrapped > np.pi, wrapped - 2.0 * np.pi, wrapped)


@dataclass(frozen=True)
class CodingMatrix:
    """M x N grid of 1-bit states: 0 maps to reflection phase 0, 1 to phase pi."""

    states: np.ndarray
    source: PhaseProfile | None = None

    def __post_init__(self) -> None:
        arr = np.asarray(self.states)
        if arr.ndim != 2:
            raise DomainError("coding matrix must be a 2-D grid")
        if not np.isin(arr, (0, 1)).all():
            raise DomainError("coding states must all be 0 or 1")
        arr = arr.astype(np.uint8)
        arr.setflags(write=False)
        object.__setattr__(self, "states", arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.states.shape

    def reflection_signs(self) -> np.ndarray:
        """Per-element e^{j psi} with psi in {0, pi}: +1 for state 0, -1 for state 1."""
        return 1.0 - 2.0 * self.states.astype(float)

    def flipped(self) -> "CodingMatrix":
        """Coding with every bit inverted (a global pi phase shift)."""
        return CodingMatrix(states=1 - self.states)

    def phases_rad(self) -> np.ndarray:
        return self.states * np.pi

    def to_json_dict(self, spec: ApertureSpec | None = None) -> dict:
        """Serialisable form {"m", "n", "dx_mm", "dy_mm", "states"}; states is [m][n]."""
        spec = spec or (self.source.spec if self.source is not None else None)
        if spec is None:
            raise DomainError("aperture spec required to serialise a coding matrix")
        return {
            "m": spec.m_count,
            "n": spec.n_count,
            "dx_mm": spec.dx_mm,
            "dy_mm": spec.dy_mm,
            "states": self.states.tolist(),
        }

    def to_text_grid(self) -> str:
        """Plain 0/1 character grid, one text line per y-row, characters along x."""
        m, n = self.shape
        return "\n".join(
            "".join(str(int(self.states[i, j])) for i in range(m)) for j in range(n)
        )


def quantize_1bit(profile: PhaseProfile | np.ndarray) -> CodingMatrix:
    """Map continuous phases to the nearest of the two states {0, pi}.

    State 0 is chosen when cos(psi) >= 0, i.e. the wrapped phase lies within
    a quarter turn of zero; cosine is 2*pi-periodic so no explicit wrap is
    needed.  The tie circle |psi| = pi/2 resolves deterministically to state 0
    (the double closest to pi/2 has a small positive cosine).
    """
    if not isinstance(profile, PhaseProfile):
        profile = PhaseProfile(phases=np.asarray(profile, dtype=float))
    states = (np.cos(profile.phases) < 0).astype(np.uint8)
    return CodingMatrix(states=states, source=profile)


def coding_matrix(spec: ApertureSpec, incident: Direction, target: Direction) -> CodingMatrix:
    """1-bit codebook steering ``incident`` toward ``target``: quantised phase gradient."""
    return quantize_1bit(steering_phase_profile(spec, incident, target))


def stripe_runs(coding: CodingMatrix) -> list[int]:
    """Run lengths of constant state along x in the first y-row."""
    col = coding.states[:, 0]
    runs = [1]
    for a, b in zip(col, col[1:]):
        if a == b:
            runs[-1] += 1
        else:
            runs.append(1)
    return runs


def save_codebook_json(coding: CodingMatrix, path, spec: ApertureSpec | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(coding.to_json_dict(spec), fh, indent=2)
        fh.write("\n")


def load_codebook_json(path) -> tuple[CodingMatrix, dict]:
    """Load a codebook JSON; returns the coding and the geometry metadata dict."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputFormatError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    try:
        states = np.asarray(doc["states"])
        meta = {
            "m": int(doc["m"]),
            "n": int(doc["n"]),
            "dx_mm": float(doc["dx_mm"]),
            "dy_mm": float(doc["dy_mm"]),
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise InputFormatError(f"{path}: missing or malformed codebook field: {exc}") from exc
    if states.shape != (meta["m"], meta["n"]):
        raise InputFormatError(
            f"{path}: states shape {states.shape} does not match m={meta['m']}, n={meta['n']}"
        )
    try:
        coding = CodingMatrix(states=states)
    except DomainError as exc:
        raise InputFormatError(f"{path}: {exc}") from exc
    return coding, meta


def save_codebook_text(coding: CodingMatrix, path) -> None:
    with open(path, "w") as fh:
        fh.write(coding.to_text_grid())
        fh.write("\n")
