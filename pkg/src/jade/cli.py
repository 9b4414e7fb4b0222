"""Command-line harness.

Subcommands
-----------
pulse : write the pulse waveform and spectrum as CSV.
simulate : synthesize snapshots and write them as a text dataset.
estimate : run the estimation chain on a dataset file.
run : full in-memory synthesis + estimation, report as JSON.
montecarlo : repeated seeded runs with bias/RMSE aggregates.

Exit codes: 0 on success, 2 on a configuration/validation error, 3 on an
estimation failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .exceptions import EstimationError, ValidationError
from .pulse import generate_pulse, spectrum
from .channel import load_dataset, save_dataset, synthesize
from .correlation import estimate_correlation, select_band
from .prony import svd_prony
from .delay import beamform, fit_delay
from .pipeline import (
    ScenarioConfig,
    default_scenario,
    load_config,
    monte_carlo,
    run_pipeline,
    scenario_from_dict,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_ESTIMATION = 3


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_pulse_csvs(cfg: ScenarioConfig, out_dir: Path) -> None:
    wave = generate_pulse(cfg.pulse)
    spec = spectrum(wave, cfg.band_threshold)
    _write_csv(
        out_dir / "pulse_waveform.csv",
        ["t", "g"],
        zip(wave.t, wave.values),
    )
    unwrapped = dict(zip(spec.passband.tolist(), spec.phase_unwrapped))
    order = np.argsort(spec.omega)
    rows = []
    for q in order:
        rows.append(
            [
                spec.omega[q],
                spec.magnitude[q],
                spec.phase[q],
                unwrapped.get(int(q), ""),
            ]
        )
    _write_csv(
        out_dir / "pulse_spectrum.csv",
        ["omega", "magnitude", "phase", "phase_unwrapped"],
        rows,
    )


def _dump_correlation(corr, out_dir: Path) -> None:
    lags = np.arange(-(corr.num_lags - 1), corr.num_lags)
    values = corr.two_sided()
    _write_csv(
        out_dir / "correlation.csv",
        ["lag", "re", "im", "abs", "phase"],
        zip(lags, values.real, values.imag, np.abs(values), np.angle(values)),
    )


def _dump_roots(modes, out_dir: Path) -> None:
    selected = set(np.round(modes.roots, 12).tolist())
    rows = [
        [z.real, z.imag, abs(z), int(np.round(z, 12) in selected)]
        for z in modes.all_roots
    ]
    _write_csv(out_dir / "roots.csv", ["re", "im", "modulus", "selected"], rows)


def _dump_fit(delays, beams, pulse_spec, out_dir: Path, snapshot: int = 0) -> None:
    # One CSV per path: unwrapped residual phase of one representative
    # snapshot against the fitted line.
    from .pulse import unwrap_phase

    band = delays.band
    omega = pulse_spec.omega[band]
    g_band = pulse_spec.values[band]
    for i in range(beams.num_paths):
        residual = beams.values[snapshot, i, band] * (np.conj(g_band) / np.abs(g_band) ** 2)
        phase = unwrap_phase(np.angle(residual))
        line = delays.slope[snapshot, i] * omega + delays.intercept[snapshot, i]
        _write_csv(
            out_dir / f"fit_path{i + 1}.csv",
            ["omega", "phase_residual", "fitted_line"],
            zip(omega, phase, line),
        )


def _load_scenario(args) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config else default_scenario()
    overrides = {}
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValidationError(f"--set expects key=value, got {item!r}")
        overrides[key.strip()] = value.strip()
    if overrides:
        merged = cfg.to_dict()
        merged.update(overrides)
        cfg = scenario_from_dict(merged)
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "snapshots", None) is not None:
        cfg = replace(cfg, num_snapshots=args.snapshots)
    return cfg


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="scenario config file (key = value lines)")
    parser.add_argument("--seed", type=int, help="override the scenario seed")
    parser.add_argument("--snapshots", type=int, help="override the snapshot count")
    parser.add_argument(
        "--set",
        action="append",
        metavar="KEY=VALUE",
        help="override any config key (repeatable)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jade",
        description="Joint angle/delay estimation for fading multipath array data.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_pulse = sub.add_parser("pulse", help="write pulse waveform/spectrum CSVs")
    _add_common(p_pulse)
    p_pulse.add_argument("--out", type=Path, default=Path("."), help="output directory")

    p_sim = sub.add_parser("simulate", help="synthesize snapshots to a dataset file")
    _add_common(p_sim)
    p_sim.add_argument("--out", type=Path, default=Path("dataset.txt"), help="dataset path")

    p_est = sub.add_parser("estimate", help="estimate angles/delays from a dataset file")
    _add_common(p_est)
    p_est.add_argument("--data", type=Path, required=True, help="dataset file to read")
    p_est.add_argument("--out", type=Path, help="directory for report/dumps (default: stdout only)")
    p_est.add_argument("--dump-correlation", action="store_true")
    p_est.add_argument("--dump-roots", action="store_true")
    p_est.add_argument("--dump-fit", action="store_true")

    p_run = sub.add_parser("run", help="synthesize + estimate in one go")
    _add_common(p_run)
    p_run.add_argument("--out", type=Path, help="directory for report/dumps (default: stdout only)")
    p_run.add_argument("--timing", action="store_true", help="include wall-clock timing in the report")
    p_run.add_argument("--dump-correlation", action="store_true")
    p_run.add_argument("--dump-roots", action="store_true")
    p_run.add_argument("--dump-fit", action="store_true")

    p_mc = sub.add_parser("montecarlo", help="repeated seeded runs with aggregates")
    _add_common(p_mc)
    p_mc.add_argument("--trials", type=int, default=4, help="number of trials")
    p_mc.add_argument("--jobs", type=int, default=1, help="parallel trial workers")
    p_mc.add_argument("--out", type=Path, help="directory for the report (default: stdout only)")

    return parser


def _cmd_pulse(args) -> int:
    cfg = _load_scenario(args)
    cfg.validate()
    args.out.mkdir(parents=True, exist_ok=True)
    _write_pulse_csvs(cfg, args.out)
    print(f"wrote {args.out / 'pulse_waveform.csv'} and {args.out / 'pulse_spectrum.csv'}")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    cfg = _load_scenario(args).resolved()
    wave = generate_pulse(cfg.pulse)
    snaps = synthesize(
        wave, cfg.paths, cfg.array, cfg.fading, cfg.num_snapshots, cfg.noise_var, cfg.seed
    )
    args.out.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(snaps, args.out)
    print(
        f"wrote {args.out}: S={snaps.num_snapshots} M={snaps.num_sensors} "
        f"N={snaps.num_samples} seed={cfg.seed}"
    )
    return EXIT_OK


def _cmd_estimate(args) -> int:
    cfg = _load_scenario(args).resolved()
    snaps = load_dataset(args.data)
    wave = generate_pulse(cfg.pulse)
    if len(wave) != snaps.num_samples:
        raise ValidationError(
            f"dataset has N={snaps.num_samples} samples but the configured "
            f"pulse has N={len(wave)}"
        )
    pulse_spec = spectrum(wave, cfg.band_threshold)
    band = select_band(pulse_spec, cfg.band_threshold)
    corr = estimate_correlation(snaps, band)
    modes = svd_prony(corr, cfg.prony)
    beams = beamform(snaps, modes.sines)
    delays = fit_delay(beams, pulse_spec, band, cfg.weighted_fit)

    print("angles_deg:", " ".join(f"{a:.4f}" for a in modes.angles_deg))
    print("delay_median:", " ".join(f"{d:.4f}" for d in delays.delay_median))
    print("delay_mean:", " ".join(f"{d:.4f}" for d in delays.delay_mean))
    print("singular_values:", " ".join(f"{s:.6g}" for s in modes.singular_values[:10]), "...")
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        if args.dump_correlation:
            _dump_correlation(corr, args.out)
        if args.dump_roots:
            _dump_roots(modes, args.out)
        if args.dump_fit:
            _dump_fit(delays, beams, pulse_spec, args.out)
    return EXIT_OK


def _cmd_run(args) -> int:
    cfg = _load_scenario(args)
    keep = args.dump_correlation or args.dump_roots or args.dump_fit
    report = run_pipeline(cfg, keep_artifacts=keep)
    text = report.to_json(include_timing=args.timing)
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "report.json").write_text(text + "\n")
        print(f"wrote {args.out / 'report.json'}")
        if args.dump_correlation:
            _dump_correlation(report.artifacts.correlation, args.out)
        if args.dump_roots:
            _dump_roots(report.artifacts.modes, args.out)
        if args.dump_fit:
            _dump_fit(
                report.artifacts.delays,
                report.artifacts.beamformed,
                report.artifacts.pulse_spec,
                args.out,
            )
    else:
        print(text)
    print(f"elapsed: {report.timing_s:.3f} s", file=sys.stderr)
    return EXIT_OK


def _cmd_montecarlo(args) -> int:
    cfg = _load_scenario(args)
    report = monte_carlo(cfg, trials=args.trials, jobs=args.jobs)
    text = report.to_json()
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "montecarlo.json").write_text(text + "\n")
        print(f"wrote {args.out / 'montecarlo.json'}")
    else:
        print(text)
    if report.num_failed:
        print(f"{report.num_failed}/{report.num_trials} trials failed", file=sys.stderr)
    return EXIT_OK


_COMMANDS = {
    "pulse": _cmd_pulse,
    "simulate": _cmd_simulate,
    "estimate": _cmd_estimate,
    "run": _cmd_run,
    "montecarlo": _cmd_montecarlo,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except EstimationError as exc:
        print(f"estimation failed: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION


if __name__ == "__main__":
    sys.exit(main())
