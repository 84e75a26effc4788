"""Command-line front end: every pipeline stage as a subcommand.

Inputs come from flags or a flat ``key = value`` config file; outputs are
plain CSV/JSON (plus PNG figures unless ``--no-figures``) written under the
``--out`` directory.  Exit codes: 0 success, 2 input error, 3 domain error.
"""

from __future__ import annotations

import functools
import json
import os
import sys

import click
import numpy as np

from . import aperture, effmedium, farfield, linksim, plots, refdata
from .errors import DomainError, InputFormatError
from .units import free_space_wavelength_mm

_CONFIG_COMMANDS = ("unitcell", "codebook", "pattern", "validate", "qpsk")


def _parse_config(path) -> dict:
    """Parse a flat ``key = value`` file into a defaults dict."""
    values: dict[str, object] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InputFormatError(f"{path}: line {lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            value = value.strip()
            if not key:
                raise InputFormatError(f"{path}: line {lineno}: empty key")
            for cast in (int, float):
                try:
                    values[key] = cast(value)
                    break
                except ValueError:
                    continue
            else:
                values[key] = value
    return values


def _friendly_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except InputFormatError as exc:
            click.echo(f"input error: {exc}", err=True)
            sys.exit(2)
        except DomainError as exc:
            click.echo(f"domain error: {exc}", err=True)
            sys.exit(3)

    return wrapper


def _scan_angle(ctx, param, value):
    if value is not None and not -90.0 <= value <= 90.0:
        raise click.BadParameter(f"{value} deg outside [-90, 90]")
    return value


@click.group()
@click.option("--config", type=click.Path(exists=True, dir_okay=False),
              help="Flat 'key = value' defaults file.")
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True,
              help="Seed for every random draw (non-negative).")
@click.option("--out", type=click.Path(file_okay=False), default=".", show_default=True,
              help="Output directory (created if missing).")
@click.option("--figures/--no-figures", default=True, show_default=True,
              help="Render PNG figures next to the CSV/JSON outputs.")
@click.pass_context
def main(ctx, config, seed, out, figures):
    """Design and validation chain for a 1-bit reconfigurable reflecting surface."""
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        click.echo(f"input error: cannot create output directory {out}: {exc}", err=True)
        sys.exit(2)
    if config:
        try:
            defaults = _parse_config(config)
        except InputFormatError as exc:
            click.echo(f"input error: {exc}", err=True)
            sys.exit(2)
        ctx.default_map = {cmd: defaults for cmd in _CONFIG_COMMANDS}
    ctx.obj = {"seed": seed, "out": out, "figures": figures}


def _out_path(ctx, name: str) -> str:
    return os.path.join(ctx.obj["out"], name)


def _aperture_options(fn):
    for opt in reversed([
        click.option("--m", type=int, default=10, show_default=True, help="Elements along x."),
        click.option("--n", type=int, default=10, show_default=True, help="Elements along y."),
        click.option("--dx", type=float, default=17.0, show_default=True, help="x pitch [mm]."),
        click.option("--dy", type=float, default=17.0, show_default=True, help="y pitch [mm]."),
        click.option("--f0", type=float, default=3.5, show_default=True,
                     help="Operating frequency [GHz]; sets the wavelength."),
        click.option("--wavelength", type=float, default=None,
                     help="Override wavelength [mm] (default: free-space at --f0)."),
        click.option("--alpha", type=float, default=1.0, show_default=True,
                     help="Per-element reflection amplitude, in (0, 1]."),
        click.option("--q", type=float, default=1.0, show_default=True,
                     help="Element-factor exponent in cos^q(theta)."),
    ]):
        fn = opt(fn)
    return fn


def _build_spec(m, n, dx, dy, f0, wavelength, alpha, q) -> aperture.ApertureSpec:
    lam = wavelength if wavelength is not None else free_space_wavelength_mm(f0)
    return aperture.ApertureSpec(
        m_count=m, n_count=n, dx_mm=dx, dy_mm=dy, wavelength_mm=lam,
        alpha=alpha, q_exponent=q,
    )


@main.command()
@click.option("--h1", type=float, default=2.0, show_default=True, help="Substrate 1 thickness [mm].")
@click.option("--h2", type=float, default=1.6, show_default=True, help="Substrate 2 thickness [mm].")
@click.option("--h-air", type=float, default=0.5, show_default=True, help="Air-gap height [mm].")
@click.option("--eps-sub", type=float, default=4.4, show_default=True, help="Substrate relative permittivity.")
@click.option("--eps-air", type=float, default=1.0, show_default=True, help="Gap relative permittivity.")
@click.option("--tan-delta", type=float, default=0.02, show_default=True, help="Substrate loss tangent.")
@click.option("--f0", type=float, default=3.5, show_default=True, help="Operating frequency [GHz].")
@click.option("--fom-sweep", type=click.Path(exists=True, dir_okay=False),
              help="Air-gap sweep CSV 'h_air_mm,delta_phi_deg,delta_s11_db'.")
@click.option("--fields", type=click.Path(exists=True, dir_okay=False),
              help="Field-sample CSV 'e_mag,volume,region' (V/m, mm^3, FR4|OTHER).")
@click.option("--current-map", type=click.Path(exists=True, dir_okay=False),
              help="Surface-current CSV 'row,col,value' [A/m].")
@click.option("--cell-pitch", type=float, default=1.0, show_default=True,
              help="Current-map grid pitch [mm].")
@click.option("--plateau-tol", type=float, default=0.01, show_default=True,
              help="Relative tolerance defining the near-maximum current plateau.")
@click.pass_context
@_friendly_errors
def unitcell(ctx, h1, h2, h_air, eps_sub, eps_air, tan_delta, f0, fom_sweep,
             fields, current_map, cell_pitch, plateau_tol):
    """Unit-cell stack report: permittivity, thickness, losses, air-gap optimum."""
    stack = effmedium.LayerStack(
        h1_mm=h1, h2_mm=h2, h_air_mm=h_air, eps_sub=eps_sub, eps_air=eps_air,
        tan_delta=tan_delta, f0_ghz=f0,
    )
    click.echo(f"frequency: {f0:g} GHz (lambda0 = {stack.wavelength_mm:.3f} mm)")
    click.echo(f"stack: h1={h1:g} mm, h2={h2:g} mm, h_air={h_air:g} mm, total={stack.total_height_mm:g} mm")
    for mode in effmedium.PERMITTIVITY_MODES:
        eps = effmedium.effective_permittivity(stack, mode)
        thick = effmedium.electrical_thickness(stack, mode)
        click.echo(f"effective permittivity ({mode}): {eps:.6f}")
        click.echo(f"electrical thickness ({mode}):   {thick:.6f}")

    if fields:
        samples = effmedium.FieldRegionSamples.from_csv(fields)
        lpr = effmedium.loss_participation_ratio(samples)
        tand_eff = effmedium.effective_loss_tangent(lpr, stack.tan_delta)
        p_d = effmedium.dielectric_loss_power(samples, stack)
        click.echo(f"loss participation ratio: {lpr:.6f}")
        click.echo(f"effective loss tangent:   {tand_eff:.6f}")
        click.echo(f"dielectric loss power:    {p_d:.6e} W")

    if current_map:
        cmap = effmedium.CurrentMap.from_csv(current_map, cell_pitch_mm=cell_pitch)
        via = effmedium.select_via_location(cmap, plateau_tol=plateau_tol)
        click.echo(
            f"via location: cell ({via.row}, {via.col}), centroid "
            f"({via.centroid_row:.3f}, {via.centroid_col:.3f}), "
            f"offset ({via.x_mm:.3f}, {via.y_mm:.3f}) mm"
        )

    if fom_sweep:
        sweep = effmedium.load_fom_sweep_csv(fom_sweep)
        h_opt, foms = effmedium.optimize_air_gap(sweep)
        click.echo(f"{'h_air [mm]':>12} {'FoM [deg/dB]':>14}")
        for s, fom in zip(sweep, foms):
            mark = "  <-- optimum" if s.h_air_mm == h_opt else ""
            click.echo(f"{s.h_air_mm:>12g} {fom:>14.4f}{mark}")
        click.echo(f"optimal air gap: {h_opt:g} mm")
        if ctx.obj["figures"]:
            plots.save_fom_figure(sweep, foms, h_opt, _out_path(ctx, "fom_sweep.png"))


@main.command()
@_aperture_options
@click.option("--incident", type=float, default=0.0, show_default=True, callback=_scan_angle,
              help="Incident scan angle in the x-z plane [deg].")
@click.option("--target", type=float, default=0.0, show_default=True, callback=_scan_angle,
              help="Commanded beam scan angle in the x-z plane [deg].")
@click.pass_context
@_friendly_errors
def codebook(ctx, m, n, dx, dy, f0, wavelength, alpha, q, incident, target):
    """Synthesise the 1-bit codebook steering --incident toward --target."""
    spec = _build_spec(m, n, dx, dy, f0, wavelength, alpha, q)
    coding = aperture.coding_matrix(
        spec, aperture.Direction.from_scan(incident), aperture.Direction.from_scan(target)
    )
    json_path = _out_path(ctx, "codebook.json")
    text_path = _out_path(ctx, "codebook.txt")
    aperture.save_codebook_json(coding, json_path, spec)
    aperture.save_codebook_text(coding, text_path)
    runs = aperture.stripe_runs(coding)
    if len(runs) == 1:
        click.echo(f"uniform codebook: all elements in state {int(coding.states[0, 0])}")
    else:
        click.echo("stripe runs along x: " + ",".join(str(r) for r in runs))
    click.echo(f"wrote {json_path} and {text_path}")
    if ctx.obj["figures"]:
        plots.save_codebook_figure(
            coding, _out_path(ctx, "codebook.png"),
            title=f"incident {incident:g} deg -> target {target:g} deg",
        )


@main.command()
@_aperture_options
@click.option("--codebook", "codebook_path", type=click.Path(exists=True, dir_okay=False),
              required=True, help="Codebook JSON produced by the codebook subcommand.")
@click.option("--incident", type=float, default=0.0, show_default=True, callback=_scan_angle,
              help="Incident scan angle [deg].")
@click.option("--start", type=float, default=-90.0, show_default=True, help="Sweep start [deg].")
@click.option("--stop", type=float, default=90.0, show_default=True, help="Sweep stop [deg].")
@click.option("--step", type=float, default=0.25, show_default=True,
              help="Sweep step [deg]; 5 reproduces the turntable measurement grid.")
@click.option("--refine/--no-refine", default=True, show_default=True,
              help="Sub-grid parabolic refinement of the peak.")
@click.pass_context
@_friendly_errors
def pattern(ctx, m, n, dx, dy, f0, wavelength, alpha, q, codebook_path,
            incident, start, stop, step, refine):
    """Far-field x-z cut of a stored codebook: CSV samples plus beam metrics."""
    coding, meta = aperture.load_codebook_json(codebook_path)
    for flag, name in ((m, "m"), (n, "n")):
        source = ctx.get_parameter_source(name)
        if source is not None and source.name != "DEFAULT" and flag != meta[name]:
            raise InputFormatError(
                f"--{name}={flag} does not match codebook {codebook_path} ({name}={meta[name]})"
            )
    spec = _build_spec(meta["m"], meta["n"], meta["dx_mm"], meta["dy_mm"],
                       f0, wavelength, alpha, q)
    cut = farfield.pattern_cut(
        spec, coding, aperture.Direction.from_scan(incident), start, stop, step
    )
    metrics = farfield.beam_metrics(cut, refine=refine)
    csv_path = _out_path(ctx, "pattern.csv")
    json_path = _out_path(ctx, "beam_metrics.json")
    farfield.write_pattern_csv(cut, csv_path)
    farfield.save_metrics_json(metrics, spec.q_exponent, json_path)
    hpbw = metrics.half_power_beamwidth_deg
    sll = metrics.sidelobe_level_db
    click.echo(
        f"peak {metrics.peak_angle_deg:.2f} deg"
        + (f", HPBW {hpbw:.2f} deg" if hpbw is not None else "")
        + (f", SLL {sll:.2f} dB" if sll is not None else "")
        + (" (peak at sweep boundary, not refined)" if metrics.boundary else "")
    )
    click.echo(f"wrote {csv_path} and {json_path}")
    if ctx.obj["figures"]:
        plots.save_pattern_figure(cut, metrics, _out_path(ctx, "pattern.png"),
                                  title=f"incidence {incident:g} deg")


@main.command()
@_aperture_options
@click.option("--table", type=click.Choice(["T1", "T2", "T3"], case_sensitive=False),
              default="T1", show_default=True, help="Reference table to score against.")
@click.option("--reference", type=click.Choice(["simulated", "measured"]),
              default="simulated", show_default=True,
              help="Reference column; the other is reported informationally.")
@click.option("--step", type=float, default=0.25, show_default=True,
              help="Fine sweep step for the predicted peak [deg].")
@click.pass_context
@_friendly_errors
def validate(ctx, m, n, dx, dy, f0, wavelength, alpha, q, table, reference, step):
    """Predict the beam direction for every table row and score the deviations."""
    table = table.upper()
    spec = _build_spec(m, n, dx, dy, f0, wavelength, alpha, q)
    entries = refdata.load_reference(table)
    peaks = refdata.predict_beam_directions(entries, spec, angle_step_deg=step)
    report = refdata.compare_predictions(entries, peaks, reference)
    other = (refdata.REFERENCE_MEASURED if reference == refdata.REFERENCE_SIMULATED
             else refdata.REFERENCE_SIMULATED)
    info_report = refdata.compare_predictions(entries, peaks, other)

    doc = {
        "table": table,
        "incident_scan_deg": entries[0].incident_scan_deg,
        "q": spec.q_exponent,
        "angle_step_deg": step,
        **report.to_json_dict(),
        "informational": info_report.to_json_dict(),
    }
    json_path = _out_path(ctx, f"validate_{table}.json")
    text_path = _out_path(ctx, f"validate_{table}.txt")
    with open(json_path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    text = (
        f"table {table}, incidence {entries[0].incident_scan_deg:g} deg, "
        f"reference {reference}\n" + report.format_text() + "\n"
    )
    with open(text_path, "w") as fh:
        fh.write(text)
    click.echo(text.rstrip("\n"))
    click.echo(f"wrote {json_path} and {text_path}")
    if ctx.obj["figures"]:
        plots.save_validation_figure(report, _out_path(ctx, f"validate_{table}.png"),
                                     title=f"table {table}")


@main.command()
@click.option("--scenario", default="seeded", show_default=True,
              help="'seeded' for generated channels, or a scenario JSON path.")
@click.option("--codebook", "codebook_source", default="cophase", show_default=True,
              help="'cophase', 'allzero', or a codebook JSON path.")
@click.option("--m", type=int, default=10, show_default=True, help="Elements along x (seeded).")
@click.option("--n", type=int, default=10, show_default=True, help="Elements along y (seeded).")
@click.option("--noise-var", type=float, default=1.0, show_default=True,
              help="Complex AWGN variance at the receiver.")
@click.option("--symbol-energy", type=float, default=1.0, show_default=True,
              help="QPSK symbol energy E_s.")
@click.option("--symbols", "n_symbols", type=int, default=4000, show_default=True,
              help="Number of QPSK symbols per run.")
@click.option("--baseline/--no-baseline", default=False, show_default=True,
              help="Also run the no-surface baseline over the direct path only.")
@click.pass_context
@_friendly_errors
def qpsk(ctx, scenario, codebook_source, m, n, noise_var, symbol_energy,
         n_symbols, baseline):
    """Seeded QPSK Monte Carlo through the effective channel; constellation + summary."""
    if scenario == "seeded":
        scn = linksim.LinkScenario.seeded(
            m, n, seed=ctx.obj["seed"], noise_var=noise_var, symbol_energy=symbol_energy
        )
    else:
        if not os.path.exists(scenario):
            raise InputFormatError(f"scenario file {scenario} does not exist")
        scn = linksim.load_scenario_json(scenario)

    if codebook_source == "cophase":
        coding = linksim.cophase_codebook(scn)
    elif codebook_source == "allzero":
        coding = aperture.CodingMatrix(states=np.zeros(scn.shape, dtype=np.uint8))
    else:
        if not os.path.exists(codebook_source):
            raise InputFormatError(f"codebook file {codebook_source} does not exist")
        coding, _ = aperture.load_codebook_json(codebook_source)
        if coding.shape != scn.shape:
            raise InputFormatError(
                f"codebook shape {coding.shape} does not match scenario grids {scn.shape}"
            )

    h_eff = linksim.effective_channel(scn, coding)
    stream, summary = linksim.simulate_link(scn, h_eff, n_symbols)
    csv_path = _out_path(ctx, "constellation.csv")
    json_path = _out_path(ctx, "qpsk_summary.json")
    linksim.write_constellation_csv(stream, csv_path)
    linksim.save_summary_json(summary, json_path)
    click.echo(
        f"with surface:  |h_eff| = {abs(h_eff):.4f}, SER = {summary['ser']:.4g}, "
        f"d_min = {summary['d_min']:.4f}"
    )
    click.echo(f"wrote {csv_path} and {json_path}")
    if ctx.obj["figures"]:
        plots.save_constellation_figure(stream, _out_path(ctx, "constellation.png"),
                                        title="with surface")

    if baseline:
        stream_b, summary_b = linksim.simulate_link(scn, scn.h_direct, n_symbols)
        csv_b = _out_path(ctx, "constellation_baseline.csv")
        json_b = _out_path(ctx, "qpsk_baseline_summary.json")
        linksim.write_constellation_csv(stream_b, csv_b)
        linksim.save_summary_json(summary_b, json_b)
        click.echo(
            f"no surface:    |h_ch|  = {abs(scn.h_direct):.4f}, SER = {summary_b['ser']:.4g}, "
            f"d_min = {summary_b['d_min']:.4f}"
        )
        click.echo(f"wrote {csv_b} and {json_b}")
        if ctx.obj["figures"]:
            plots.save_constellation_figure(stream_b, _out_path(ctx, "constellation_baseline.png"),
                                            title="no surface")


if __name__ == "__main__":
    main()
