"""QPSK link-level Monte Carlo through the coded-surface effective channel.

The effective channel seen by the receiver is the direct path plus the
reflected cascade,

    h_eff = h_d + sum_mn h_t(m,n) * e^{j psi_mn} * h_r(m,n),   psi_mn in {0, pi}.

Symbols are Gray-mapped QPSK, s_k = sqrt(Es) * (a_k + j b_k) with a, b in
{+/-1}; the receiver adds complex white Gaussian noise, equalises by the
known h_eff and detects by quadrant.  Runs are deterministic given the
scenario seed: bits are drawn first, then the noise stream, so paired
codebook comparisons share identical bits and noise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .aperture import CodingMatrix, PhaseProfile, quantize_1bit
from .errors import DomainError, InputFormatError

# Gray map: bit pair (b0, b1) -> sqrt(Es) * ((1 - 2*b1) + j*(1 - 2*b0)),
# i.e. 00 -> +1+j, 01 -> -1+j, 11 -> -1-j, 10 -> +1-j.


@dataclass(frozen=True)
class LinkScenario:
    """Channel coefficients, noise level and seed for one link simulation.

    ``h_tx``/``h_rx`` are the per-element transmitter-to-surface and
    surface-to-receiver coefficients (equal shapes); ``h_direct`` the direct
    path; ``noise_var`` the total complex AWGN variance (independent
    real/imag parts of noise_var/2 each).
    """

    h_direct: complex
    h_tx: np.ndarray
    h_rx: np.ndarray
    noise_var: float
    symbol_energy: float = 1.0
    rng_seed: int = 0

    def __post_init__(self) -> None:
        tx = np.asarray(self.h_tx, dtype=complex)
        rx = np.asarray(self.h_rx, dtype=complex)
        if tx.ndim != 2 or tx.shape != rx.shape:
            raise DomainError("h_tx and h_rx must be 2-D grids of one common shape")
        if not (np.all(np.isfinite(tx)) and np.all(np.isfinite(rx))):
            raise DomainError("channel grids must be finite")
        if not math.isfinite(self.noise_var) or self.noise_var < 0:
            raise DomainError(f"noise variance must be >= 0, got {self.noise_var}")
        if not self.symbol_energy > 0:
            raise DomainError(f"symbol energy must be > 0, got {self.symbol_energy}")
        for name, arr in (("h_tx", tx), ("h_rx", rx)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.h_tx.shape

    @classmethod
    def seeded(
        cls,
        m: int = 10,
        n: int = 10,
        *,
        seed: int,
        noise_var: float,
        symbol_energy: float = 1.0,
        direct_path: bool = True,
    ) -> "LinkScenario":
        """I.i.d. circular-Gaussian CN(0, 1) channel grids from a seed.

        Draw order is fixed (h_tx grid, h_rx grid, then h_direct) so a seed
        pins the whole scenario bit-for-bit.
        """
        rng = np.random.default_rng(seed)

        def cn(shape):
            return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)

        h_tx = cn((m, n))
        h_rx = cn((m, n))
        h_d = complex(cn(())) if direct_path else 0j
        return cls(
            h_direct=h_d,
            h_tx=h_tx,
            h_rx=h_rx,
            noise_var=noise_var,
            symbol_energy=symbol_energy,
            rng_seed=seed,
        )

    def to_json_dict(self) -> dict:
        m, n = self.shape
        return {
            "m": m,
            "n": n,
            "h_direct": {"re": self.h_direct.real, "im": self.h_direct.imag},
            "h_tx": {"re": self.h_tx.real.tolist(), "im": self.h_tx.imag.tolist()},
            "h_rx": {"re": self.h_rx.real.tolist(), "im": self.h_rx.imag.tolist()},
            "noise_var": self.noise_var,
            "symbol_energy": self.symbol_energy,
            "seed": self.rng_seed,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "LinkScenario":
        try:
            h_tx = np.asarray(doc["h_tx"]["re"], dtype=float) + 1j * np.asarray(
                doc["h_tx"]["im"], dtype=float
            )
            h_rx = np.asarray(doc["h_rx"]["re"], dtype=float) + 1j * np.asarray(
                doc["h_rx"]["im"], dtype=float
            )
            return cls(
                h_direct=complex(doc["h_direct"]["re"], doc["h_direct"]["im"]),
                h_tx=h_tx,
                h_rx=h_rx,
                noise_var=float(doc["noise_var"]),
                symbol_energy=float(doc.get("symbol_energy", 1.0)),
                rng_seed=int(doc.get("seed", 0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputFormatError(f"malformed scenario document: {exc}") from exc


def save_scenario_json(scenario: LinkScenario, path) -> None:
    with open(path, "w") as fh:
        json.dump(scenario.to_json_dict(), fh)
        fh.write("\n")


def load_scenario_json(path) -> LinkScenario:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputFormatError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    return LinkScenario.from_json_dict(doc)


def qpsk_modulate(bits, symbol_energy: float = 1.0) -> np.ndarray:
    """Gray-map a {0,1} bit stream to QPSK symbols sqrt(Es) * (a + jb)."""
    bits = np.asarray(bits)
    if bits.ndim != 1 or not np.isin(bits, (0, 1)).all():
        raise DomainError("bits must be a 1-D sequence of 0/1")
    if len(bits) % 2 != 0:
        raise DomainError(f"odd bit count {len(bits)}: QPSK consumes bits in pairs")
    if not symbol_energy > 0:
        raise DomainError("symbol energy must be > 0")
    a = 1.0 - 2.0 * bits[1::2]
    b = 1.0 - 2.0 * bits[0::2]
    return np.sqrt(symbol_energy) * (a + 1j * b)


def qpsk_detect_bits(symbols) -> np.ndarray:
    """Quadrant (minimum-distance) detection back to the Gray-mapped bit pairs.

    Boundary samples (exact zero real or imaginary part) detect as the
    positive half-plane, matching the modulator's 0-bit.
    """
    symbols = np.asarray(symbols, dtype=complex)
    bits = np.empty(2 * len(symbols), dtype=np.int64)
    bits[0::2] = symbols.imag < 0
    bits[1::2] = symbols.real < 0
    return bits


def effective_channel(scenario: LinkScenario, coding: CodingMatrix) -> complex:
    """Direct path plus the coded reflected cascade."""
    if coding.shape != scenario.shape:
        raise DomainError(
            f"coding shape {coding.shape} does not match channel grids {scenario.shape}"
        )
    cascade = np.sum(scenario.h_tx * scenario.h_rx * coding.reflection_signs())
    return complex(scenario.h_direct + cascade)


def cophase_codebook(scenario: LinkScenario) -> CodingMatrix:
    """1-bit codebook aligning every reflected term with the direct path.

    The ideal continuous phase of element (m, n) is -arg(h_t h_r) plus
    arg(h_d) when a direct path exists (so reflected energy adds to it), or
    -arg(h_t h_r) alone otherwise; quantisation picks the nearer of {0, pi}.
    """
    cascade = scenario.h_tx * scenario.h_rx
    reference = np.angle(scenario.h_direct) if scenario.h_direct != 0 else 0.0
    ideal = -np.angle(cascade) + reference
    return quantize_1bit(PhaseProfile(phases=ideal))


def transmit(
    scenario: LinkScenario,
    symbols: np.ndarray,
    h: complex,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Apply the scalar channel and add receiver-side AWGN: r_k = h s_k + n_k."""
    if not (math.isfinite(h.real) and math.isfinite(h.imag)):
        raise DomainError("channel gain must be finite")
    if rng is None:
        rng = np.random.default_rng(scenario.rng_seed)
    n = len(symbols)
    sigma = math.sqrt(scenario.noise_var / 2.0)
    noise = sigma * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return h * np.asarray(symbols, dtype=complex) + noise


def equalize(received, h_eff: complex) -> np.ndarray:
    """Single-tap equalisation: s_hat_k = r_k / h_eff."""
    if h_eff == 0:
        raise DomainError("effective channel is zero (deep fade): cannot equalise")
    return np.asarray(received, dtype=complex) / h_eff


def min_constellation_distance(equalized, assignments) -> float:
    """Minimum pairwise distance between the four QPSK cluster centroids.

    ``assignments`` gives each sample's transmitted constellation point; the
    centroid of each of the four clusters is taken before measuring
    distances, so the metric tracks constellation geometry rather than noise
    extremes.
    """
    equalized = np.asarray(equalized, dtype=complex)
    assignments = np.asarray(assignments, dtype=complex)
    if equalized.shape != assignments.shape:
        raise DomainError("equalized and assignment streams must have equal length")
    scale = math.sqrt(np.mean(np.abs(assignments) ** 2) / 2.0)
    points = [scale * (re + 1j * im) for re in (1, -1) for im in (1, -1)]
    centroids = []
    for point in points:
        mask = np.isclose(assignments.real, point.real) & np.isclose(
            assignments.imag, point.imag
        )
        if not mask.any():
            raise DomainError(f"constellation cluster at {point:+.3f} is empty")
        centroids.append(equalized[mask].mean())
    dists = [
        abs(a - b) for i, a in enumerate(centroids) for b in centroids[i + 1 :]
    ]
    return float(min(dists))


def symbol_error_rate(equalized, reference_symbols) -> float:
    """Fraction of symbols whose quadrant detection disagrees with the reference."""
    equalized = np.asarray(equalized, dtype=complex)
    reference = np.asarray(reference_symbols, dtype=complex)
    if equalized.shape != reference.shape:
        raise DomainError("equalized and reference streams must have equal length")
    detected = qpsk_detect_bits(equalized).reshape(-1, 2)
    sent = qpsk_detect_bits(reference).reshape(-1, 2)
    return float(np.mean(np.any(detected != sent, axis=1)))


@dataclass(frozen=True)
class SymbolStream:
    """One simulated transmission: source bits and the symbol-domain stages."""

    bits: np.ndarray
    symbols: np.ndarray
    received: np.ndarray
    equalized: np.ndarray
    detected_bits: np.ndarray

    def __post_init__(self) -> None:
        if len(self.symbols) * 2 != len(self.bits):
            raise DomainError("bit count must be twice the symbol count")
        if not (len(self.symbols) == len(self.received) == len(self.equalized)):
            raise DomainError("symbol-domain streams must have equal length")


def simulate_link(
    scenario: LinkScenario,
    h_eff: complex,
    n_symbols: int,
) -> tuple[SymbolStream, dict]:
    """Run one seeded QPSK transmission through a scalar effective channel.

    Returns the full symbol stream and a summary dict with the error rate,
    centroid minimum distance, channel, noise level and seed.
    """
    if n_symbols < 1:
        raise DomainError("need at least one symbol")
    rng = np.random.default_rng(scenario.rng_seed)
    bits = rng.integers(0, 2, size=2 * n_symbols)
    symbols = qpsk_modulate(bits, scenario.symbol_energy)
    received = transmit(scenario, symbols, h_eff, rng=rng)
    equalized = equalize(received, h_eff)
    stream = SymbolStream(
        bits=bits,
        symbols=symbols,
        received=received,
        equalized=equalized,
        detected_bits=qpsk_detect_bits(equalized),
    )
    summary = {
        "ser": symbol_error_rate(equalized, symbols),
        "d_min": min_constellation_distance(equalized, symbols),
        "h_eff_re": h_eff.real,
        "h_eff_im": h_eff.imag,
        "noise_var": scenario.noise_var,
        "seed": scenario.rng_seed,
    }
    return stream, summary


def write_constellation_csv(stream: SymbolStream, path) -> None:
    """Write per-symbol stages as CSV with a two-character detected-bits column."""
    with open(path, "w") as fh:
        fh.write("index,tx_re,tx_im,rx_re,rx_im,eq_re,eq_im,detected_bits\n")
        det = stream.detected_bits.reshape(-1, 2)
        for k, (s, r, e) in enumerate(zip(stream.symbols, stream.received, stream.equalized)):
            fh.write(
                f"{k},{float(s.real)!r},{float(s.imag)!r},{float(r.real)!r},{float(r.imag)!r},"
                f"{float(e.real)!r},{float(e.imag)!r},{det[k, 0]}{det[k, 1]}\n"
            )


def save_summary_json(summary: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
