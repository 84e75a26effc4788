"""File renderers for the report outputs (PNG figures next to the CSV/JSON)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .aperture import CodingMatrix
from .effmedium import FomSample
from .farfield import BeamMetrics, PatternCut
from .linksim import SymbolStream
from .refdata import DeviationReport

_DPI = 150
_FLOOR_DB = -60.0


def save_pattern_figure(cut: PatternCut, metrics: BeamMetrics, path, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    db = np.maximum(cut.db_norm, _FLOOR_DB)
    ax.plot(cut.angles_deg, db, lw=1.5)
    ax.axvline(metrics.peak_angle_deg, color="C3", ls="--", lw=1.0,
               label=f"peak {metrics.peak_angle_deg:.2f} deg")
    ax.axhline(-3.0, color="gray", ls=":", lw=0.8)
    ax.set_xlabel("scan angle [deg]")
    ax.set_ylabel("normalized level [dB]")
    ax.set_xlim(cut.angles_deg[0], cut.angles_deg[-1])
    ax.set_ylim(_FLOOR_DB, 3)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="lower left", fontsize=9)
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)


def save_codebook_figure(coding: CodingMatrix, path, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    # transpose so x (index m) runs horizontally, matching the text grid
    ax.imshow(coding.states.T, cmap="binary", origin="lower", vmin=0, vmax=1)
    m, n = coding.shape
    ax.set_xticks(np.arange(-0.5, m, 1), minor=True)
    ax.set_yticks(np.arange(-0.5, n, 1), minor=True)
    ax.grid(which="minor", color="0.8", lw=0.5)
    ax.tick_params(which="minor", length=0)
    ax.set_xlabel("element index along x")
    ax.set_ylabel("element index along y")
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)


def save_fom_figure(samples: list[FomSample], foms: list[float], h_opt_mm: float, path) -> None:
    heights = [s.h_air_mm for s in samples]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(heights, foms, "o-", lw=1.2)
    ax.axvline(h_opt_mm, color="C3", ls="--", lw=1.0, label=f"optimum {h_opt_mm:g} mm")
    ax.set_xlabel("air-gap height [mm]")
    ax.set_ylabel("figure of merit [deg/dB]")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=9)
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)


def save_validation_figure(report: DeviationReport, path, title: str = "") -> None:
    refs = [r for r, _, _ in report.per_entry]
    devs = [d for _, _, d in report.per_entry]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(range(len(devs)), devs, width=0.6, color="C0")
    ax.axhline(0.0, color="black", lw=0.8)
    ax.set_xticks(range(len(devs)))
    ax.set_xticklabels([f"{r:g}" for r in refs])
    ax.set_xlabel(f"{report.reference} reference direction [deg]")
    ax.set_ylabel("predicted - reference [deg]")
    ax.grid(True, axis="y", alpha=0.3)
    label = f"mean |dev| {report.mean_abs_deviation_deg:.2f} deg"
    ax.set_title(f"{title}  ({label})" if title else label)
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)


def save_constellation_figure(stream: SymbolStream, path, title: str = "") -> None:
    fig, axes = plt.subplots(1, 2, figsize=(9, 4.5), sharex=True, sharey=True)
    axes[0].scatter(stream.received.real, stream.received.imag, s=4, alpha=0.4)
    axes[0].set_title("received")
    axes[1].scatter(stream.equalized.real, stream.equalized.imag, s=4, alpha=0.4)
    axes[1].scatter(stream.symbols.real, stream.symbols.imag, s=40, marker="x", color="C3")
    axes[1].set_title("equalized")
    for ax in axes:
        ax.axhline(0, color="gray", lw=0.6)
        ax.axvline(0, color="gray", lw=0.6)
        ax.set_xlabel("I")
        ax.grid(True, alpha=0.3)
        ax.set_aspect("equal", adjustable="box")
    axes[0].set_ylabel("Q")
    if title:
        fig.suptitle(title)
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)
