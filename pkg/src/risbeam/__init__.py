"""Analytical design and validation chain for a 1-bit reconfigurable reflecting surface.

Submodules:

- ``effmedium``: unit-cell effective-medium model, loss bookkeeping, air-gap
  and via selection,
- ``aperture``: array geometry, steering phase profiles, 1-bit codebooks,
- ``farfield``: pattern cuts, dB normalisation, beam metrics,
- ``refdata``: bundled measurement tables and deviation scoring,
- ``linksim``: QPSK Monte Carlo through the effective channel,
- ``plots``: PNG renderers for the report outputs,
- ``cli``: the ``risbeam`` command-line front end.
"""

from .aperture import (
    ApertureSpec,
    CodingMatrix,
    Direction,
    PhaseProfile,
    coding_matrix,
    element_positions,
    incident_phase,
    quantize_1bit,
    steering_phase_profile,
)
from .effmedium import (
    CurrentMap,
    FieldRegionSamples,
    FieldSample,
    FomSample,
    LayerStack,
    dielectric_loss_power,
    effective_loss_tangent,
    effective_permittivity,
    electrical_thickness,
    loss_participation_ratio,
    optimize_air_gap,
    phase_amplitude_fom,
    rank_via_candidates,
    select_via_location,
)
from .errors import DomainError, InputFormatError
from .farfield import (
    BeamMetrics,
    PatternCut,
    beam_metrics,
    element_factor,
    normalize_db,
    pattern_cut,
    peak_near,
    total_field,
)
from .linksim import (
    LinkScenario,
    SymbolStream,
    cophase_codebook,
    effective_channel,
    equalize,
    min_constellation_distance,
    qpsk_modulate,
    simulate_link,
    symbol_error_rate,
    transmit,
)
from .refdata import (
    DeviationReport,
    ReferenceEntry,
    compare_predictions,
    gain_improvement,
    load_reference,
    predict_beam_directions,
)

__version__ = "0.1.0"
