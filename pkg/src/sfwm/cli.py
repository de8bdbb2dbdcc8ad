"""Command-line front end.

Subcommands: ``wavepacket`` (single operating point -> spectrum, packet,
fit report), ``sweep`` (many points -> CSV and optional SVG), ``fit``
(external packet CSV -> fit report), ``selfcheck`` (oracle battery).

Exit codes: 0 success, 1 numeric failure (non-convergence, singular
systems), 2 config or input errors.  Every output file embeds the config
hash, and reruns with an unchanged config produce byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
from pathlib import Path

import click

from . import __version__, kernel
from .cache import ResponseCache, default_cache_dir
from .config import ConfigError, load_run_config, load_sweep_config
from .doppler import QuadratureError, averaged_response
from .fitting import (
    DegenerateDataError,
    FitConvergenceError,
    MultiPeakError,
    fit_wavepacket,
    read_wavepacket_counts,
    spectral_fwhm,
)
from .obe import SingularSystemError
from .selfcheck import run_selfcheck
from .spectrum import (
    apply_etalon,
    assemble_spectrum,
    etalon_attenuation,
    numeric_fwhm,
    rate_proxy,
    synthesize_wavepacket,
    write_spectrum_csv,
    write_wavepacket_csv,
)
from .svgplot import line_chart, write_svg
from .sweep import run_sweep, write_sweep_csv

EXIT_NUMERIC = 1
EXIT_CONFIG = 2

_NUMERIC_ERRORS = (
    QuadratureError,
    SingularSystemError,
    FitConvergenceError,
    DegenerateDataError,
    MultiPeakError,
)

#: Packets narrower than this (ns) are treated as dominated by the fast
#: decay; the slow, linewidth-limited packets of interest sit well above it.
FAST_DECAY_FWHM_NS = 5.0


def _config_fail(exc) -> None:
    click.echo(f"config error: {exc}", err=True)
    sys.exit(EXIT_CONFIG)


def _numeric_fail(exc) -> None:
    click.echo(f"numeric failure: {exc}", err=True)
    sys.exit(EXIT_NUMERIC)


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _write_report(path: Path, report: dict) -> None:
    path.write_text(json.dumps(_json_safe(report), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _resolve_cache(cache_dir) -> ResponseCache:
    return ResponseCache(Path(cache_dir) if cache_dir else default_cache_dir())


@click.group()
@click.version_option(version=__version__, prog_name="sfwm")
@click.option(
    "--kernel",
    "kernel_backend",
    type=click.Choice(["auto", "cython", "numpy"]),
    default="auto",
    help="Force the susceptibility kernel backend.",
)
def main(kernel_backend: str) -> None:
    """Biphoton wave-packet simulator for warm-vapor four-wave mixing."""
    try:
        kernel.set_backend(None if kernel_backend == "auto" else kernel_backend)
    except RuntimeError as exc:
        _config_fail(exc)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=".")
@click.option("--jobs", type=int, default=1, help="Accepted for interface symmetry; single-point runs are serial.")
@click.option("--no-etalon", is_flag=True, help="Skip the etalon filter regardless of the config.")
@click.option("--mirror-time", is_flag=True, help="Reverse the packet time axis (swapped-roles convention).")
@click.option("--seed", type=int, default=None, help="Override the config seed (recorded in the report).")
@click.option("--cache", "cache_dir", type=click.Path(file_okay=False), default=None)
@click.option("--svg", is_flag=True, help="Also write SVG plots.")
def wavepacket(config_path, out_dir, jobs, no_etalon, mirror_time, seed, cache_dir, svg):
    """Compute the spectrum and correlation packet for one operating point."""
    try:
        cfg = load_run_config(config_path)
    except ConfigError as exc:
        _config_fail(exc)

    etalon_enabled = cfg.etalon_enabled and not no_etalon
    mirror = cfg.mirror_time or mirror_time
    seed = cfg.seed if seed is None else seed
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cache = _resolve_cache(cache_dir)

    try:
        kappa, zeta, xi = averaged_response(cfg.params, cfg.grid, cfg.quad, cache)
        f = assemble_spectrum(kappa, zeta, xi)
        fwhm_unfiltered = spectral_fwhm(f.freq_mhz, f.power)
        a_e = etalon_attenuation(f, cfg.etalon)
        rate = cfg.rate_proportionality * rate_proxy(f)
        f_used = apply_etalon(f, cfg.etalon) if etalon_enabled else f
        fwhm_used = spectral_fwhm(f_used.freq_mhz, f_used.power)
        wp = synthesize_wavepacket(f_used, window_ns=cfg.window_ns, mirror_time=mirror)
        fit = fit_wavepacket(wp.t_ns, wp.values)
        try:
            raw_fwhm_ns = numeric_fwhm(wp.t_ns, wp.values)
            fast_decay = raw_fwhm_ns < FAST_DECAY_FWHM_NS
        except ValueError:
            raw_fwhm_ns = None
            fast_decay = None
    except _NUMERIC_ERRORS as exc:
        _numeric_fail(exc)

    chash = cfg.config_hash
    files = []
    write_spectrum_csv(out / "spectrum.csv", f, chash)
    files.append("spectrum.csv")
    if etalon_enabled:
        write_spectrum_csv(out / "spectrum_filtered.csv", f_used, chash)
        files.append("spectrum_filtered.csv")
    write_wavepacket_csv(out / "wavepacket.csv", wp, chash)
    files.append("wavepacket.csv")

    if svg:
        spectra_series = [{"label": "unfiltered", "x": f.freq_mhz, "y": f.power}]
        if etalon_enabled:
            spectra_series.append({"label": "filtered", "x": f_used.freq_mhz, "y": f_used.power})
        write_svg(
            out / "spectrum.svg",
            line_chart(spectra_series, title="biphoton spectrum", xlabel="detuning (MHz)",
                       ylabel="power (arb.)", comment=f"config_hash={chash}"),
        )
        write_svg(
            out / "wavepacket.svg",
            line_chart([{"label": "g2", "x": wp.t_ns, "y": wp.values}], title="correlation packet",
                       xlabel="delay (ns)", ylabel="g2 (arb.)", comment=f"config_hash={chash}"),
        )
        files += ["spectrum.svg", "wavepacket.svg"]

    report = {
        "config_hash": chash,
        "params_hash": kappa.meta["params_hash"],
        "backend": kappa.meta["backend"],
        "etalon_enabled": etalon_enabled,
        "mirror_time": mirror,
        "seed": seed,
        "spectral_fwhm_unfiltered_mhz": fwhm_unfiltered,
        "spectral_fwhm_mhz": fwhm_used,
        "a_e": a_e,
        "rate_proxy": rate,
        "tau_b_ns": fit.tau_b,
        "fit": fit.to_dict(),
        "fast_decay_detected": fast_decay,
        "raw_packet_fwhm_ns": raw_fwhm_ns,
        "quadrature": {
            "levels": kappa.meta["quad_levels"],
            "error": kappa.meta["quad_error"],
            "converged": kappa.meta["quad_converged"],
            "omega_nodes": kappa.meta["omega_nodes"],
        },
        "grid": {
            "center": kappa.meta["grid_center"],
            "span": kappa.meta["grid_span"],
            "nodes": kappa.meta["grid_nodes"],
        },
        "files": files,
    }
    _write_report(out / "report.json", report)
    click.echo(
        f"wavepacket: tau_b = {fit.tau_b:.3f} ns, spectral FWHM = {fwhm_used:.3f} MHz "
        f"(unfiltered {fwhm_unfiltered:.3f} MHz), outputs in {out}"
    )


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=".")
@click.option("--jobs", type=int, default=1)
@click.option("--no-etalon", is_flag=True)
@click.option("--cache", "cache_dir", type=click.Path(file_okay=False), default=None)
@click.option("--svg", is_flag=True)
def sweep(config_path, out_dir, jobs, no_etalon, cache_dir, svg):
    """Run a parameter sweep; one CSV row per operating point."""
    try:
        cfg = load_sweep_config(config_path)
    except ConfigError as exc:
        _config_fail(exc)

    spec = cfg.spec
    if no_etalon:
        from dataclasses import replace

        spec = replace(spec, etalon_enabled=False)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cache = _resolve_cache(cache_dir)

    rows = run_sweep(spec, jobs=max(1, jobs), cache_dir=cache.root)
    write_sweep_csv(out / "sweep.csv", rows, cfg.config_hash)

    if svg:
        by_omega = {}
        for row in rows:
            if row.error is None:
                by_omega.setdefault(row.omega_d0, []).append(row)
        series = [
            {
                "label": f"omega_d0 = {key:g} Gamma",
                "x": [r.delta_atom for r in group],
                "y": [r.tau_b_ns for r in group],
            }
            for key, group in sorted(by_omega.items())
        ]
        write_svg(
            out / "sweep.svg",
            line_chart(series, title="temporal width vs one-photon detuning",
                       xlabel="delta_atom (Gamma)", ylabel="tau_b (ns)",
                       comment=f"config_hash={cfg.config_hash}"),
        )

    failed = [row for row in rows if row.error is not None]
    click.echo(f"sweep: {len(rows) - len(failed)}/{len(rows)} points ok, outputs in {out}")
    for row in failed:
        click.echo(
            f"  failed point omega_d0={row.omega_d0:g}, delta_atom={row.delta_atom:g}: {row.error}",
            err=True,
        )
    if failed and len(failed) == len(rows):
        sys.exit(EXIT_NUMERIC)


@main.command()
@click.argument("data_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=".")
def fit(data_csv, out_dir):
    """Fit the packet shape to an external coincidence CSV (t_ns,counts[,weight])."""
    try:
        t, counts, weights = read_wavepacket_counts(data_csv)
    except ValueError as exc:
        _config_fail(exc)

    try:
        result = fit_wavepacket(t, counts, weights)
    except _NUMERIC_ERRORS as exc:
        _numeric_fail(exc)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    digest = hashlib.sha256(Path(data_csv).read_bytes()).hexdigest()
    report = {"input": str(data_csv), "input_hash": digest, **result.to_dict()}
    _write_report(out / "fit_report.json", report)
    click.echo(f"fit: tau_b = {result.tau_b:.3f} ns, sbr = {result.sbr:.3g}, report in {out}")


@main.command()
@click.option("--jobs", type=int, default=1, help="Accepted for interface symmetry.")
def selfcheck(jobs):
    """Run the oracle battery and print one line per check."""
    results = run_selfcheck(print_fn=click.echo)
    if not all(r.passed for r in results):
        sys.exit(EXIT_NUMERIC)


if __name__ == "__main__":
    main()
