"""Physical constants and unit helpers (mm / GHz conventions)."""

from scipy.constants import c as SPEED_OF_LIGHT  # m/s
from scipy.constants import epsilon_0 as VACUUM_PERMITTIVITY  # F/m


def free_space_wavelength_mm(f0_ghz: float) -> float:
    """Free-space wavelength in mm at a frequency given in GHz."""
    return SPEED_OF_LIGHT / (f0_ghz * 1e9) * 1e3
