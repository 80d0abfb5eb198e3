"""Command-line front end.

Subcommands: ``synth`` writes a ground-truth pair, ``preprocess`` turns an
ECG plus respiration recording into a pair CSV, ``analyze`` runs the sweep
and writes matrix/CV/stability/manifest (and optionally a heatmap), and
``report`` aggregates stability files per condition label.

Exit codes: 0 success, 2 invalid input or configuration, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import logging
import sys
from collections import defaultdict
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from tempord import __version__
from tempord.engine import run_analysis
from tempord.errors import ConfigError, TempordError
from tempord.outputs import (
    fmt,
    sha256_file,
    stability_payload,
    write_cv_csv,
    write_heatmap,
    write_json,
    write_matrix_csv,
)
from tempord.preprocess import decimate, detect_r_peaks, load_bivariate_csv, load_series_csv, tachogram_on_grid
from tempord.synth import SynthKind, SynthSpec, generate
from tempord.types import AnalysisConfig, BivariateRecord, Scaling

log = logging.getLogger("tempord")

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 2, 3

SCALING_NAMES = {"0": Scaling.NONE, "none": Scaling.NONE, "1": Scaling.UNIFORM, "uniform": Scaling.UNIFORM,
                 "2": Scaling.GAUSSIAN, "gaussian": Scaling.GAUSSIAN}


def _manifest(command: str, inputs: Sequence[Path], outputs: Sequence[Path], config: dict,
              timestamp: bool) -> dict:
    manifest = {
        "tool": "tempord",
        "version": __version__,
        "command": command,
        "config": config,
        "inputs": {p.name: sha256_file(p) for p in inputs},
        "outputs": {p.name: sha256_file(p) for p in outputs},
    }
    if timestamp:
        manifest["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return manifest


def write_pair_csv(record: BivariateRecord, path: Path, columns=("ch1", "ch2")) -> Path:
    times = record.signal1.times
    n = min(len(record.signal1), len(record.signal2))
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["time_s", *columns])
        for i in range(n):
            writer.writerow([fmt(times[i]), repr(float(record.signal1.values[i])),
                             repr(float(record.signal2.values[i]))])
    return path


# ---------------------------------------------------------------------------
# analyze


def _config_from_args(args, rate: float) -> AnalysisConfig:
    return AnalysisConfig.from_seconds(
        rate,
        segment_s=args.segment_sec,
        shift_min_s=args.shift_min_sec,
        shift_max_s=args.shift_max_sec,
        shift_step_s=args.shift_step_sec,
        window_step_s=args.window_step_sec,
        method=args.method,
        distance_kind=args.distance,
        scaling=SCALING_NAMES[args.scaling],
        threshold=args.threshold,
        stable_tolerance_steps=args.stable_tolerance_steps,
    )


def cmd_analyze(args) -> int:
    # threshold bounds do not depend on the data; fail before touching files
    if args.threshold is not None:
        AnalysisConfig(method=args.method, segment_len_samples=3, threshold=args.threshold)
    src = Path(args.input)
    record = load_bivariate_csv(src, args.columns)
    if args.swap:
        record = record.swapped()
    config = _config_from_args(args, record.sample_rate_hz)
    result = run_analysis(record, config, workers=args.threads)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    prefix = args.prefix or src.stem
    manifest_path = out_dir / f"{prefix}.manifest.json"
    outputs = [
        write_matrix_csv(result.matrix, out_dir / f"{prefix}.matrix.csv"),
        write_cv_csv(result.causal_vector, out_dir / f"{prefix}.cv.csv"),
        write_json(
            stability_payload(result.report, label=args.label, manifest=manifest_path.name,
                              signal_duration_s=record.signal1.duration_s),
            out_dir / f"{prefix}.stability.json",
        ),
    ]
    if args.heatmap:
        outputs.append(write_heatmap(result.matrix, out_dir / f"{prefix}.heatmap.ppm"))
    config_echo = config.to_dict()
    config_echo.update(sample_rate_hz=record.sample_rate_hz, signal1=record.labels[0],
                       signal2=record.labels[1], window_anchor="start")
    write_json(_manifest("analyze", [src], outputs, config_echo, not args.no_timestamp), manifest_path)
    rep = result.report
    print(f"{prefix}: {result.matrix.shape[0]} windows x {result.matrix.shape[1]} shifts; "
          f"CV mean {rep.mean_shift_ms if rep.mean_shift_ms is None else round(rep.mean_shift_ms, 1)} ms, "
          f"defined {rep.defined_ratio_percent:.1f}%")
    return EXIT_OK


# ---------------------------------------------------------------------------
# preprocess / synth / report


def cmd_preprocess(args) -> int:
    ecg_path, resp_path = Path(args.ecg), Path(args.resp)
    ecg = load_series_csv(ecg_path, args.ecg_column)
    resp = load_series_csv(resp_path, args.resp_column)
    ratio = resp.sample_rate_hz / args.target_rate
    factor = round(ratio)
    if factor < 1 or abs(ratio - factor) > 1e-9 * ratio:
        raise ConfigError(f"respiration rate {resp.sample_rate_hz} Hz is not an integer multiple of {args.target_rate} Hz")
    beats = detect_r_peaks(ecg)
    resp = decimate(resp, factor)
    tacho = tachogram_on_grid(beats, resp)
    first = resp.index_of(tacho.start_time_s)
    resp = type(resp)(resp.values[first: first + len(tacho)], resp.sample_rate_hz, tacho.start_time_s)
    record = BivariateRecord(tacho, resp, ("tachogram", "tidal_volume"))
    if args.signal1 == "resp":
        record = record.swapped()
    out = Path(args.output)
    write_pair_csv(record, out)
    config = {"target_rate_hz": args.target_rate, "decimation_factor": factor, "beats": len(beats),
              "signal1": record.labels[0], "signal2": record.labels[1]}
    inputs = [ecg_path] if ecg_path == resp_path else [ecg_path, resp_path]
    write_json(_manifest("preprocess", inputs, [out], config, not args.no_timestamp),
               out.with_suffix(".manifest.json"))
    print(f"{out}: {len(beats)} beats, {len(tacho)} samples @ {args.target_rate} Hz")
    return EXIT_OK


def cmd_synth(args) -> int:
    spec = SynthSpec(
        kind=args.kind, duration_s=args.duration_sec, sample_rate_hz=args.rate,
        breath_rate_bpm=args.breath_rate_bpm, frequency_hz=args.frequency_hz,
        depth_factor=args.depth, lag_s=args.lag_sec, noise_sd=args.noise_sd, rng_seed=args.seed,
    )
    record = generate(spec)
    out = Path(args.output)
    write_pair_csv(record, out)
    config = {k: (v.value if isinstance(v, SynthKind) else v) for k, v in spec.__dict__.items()}
    write_json(_manifest("synth", [], [out], config, not args.no_timestamp), out.with_suffix(".manifest.json"))
    print(f"{out}: {len(record.signal1)} samples, {record.labels[0]} / {record.labels[1]}")
    return EXIT_OK


def _mean_sd(values: list) -> tuple[Optional[float], Optional[float]]:
    vals = [v for v in values if v is not None]
    if not vals:
        return None, None
    sd = float(np.std(vals, ddof=1)) if len(vals) > 1 else None
    return float(np.mean(vals)), sd


def cmd_report(args) -> int:
    groups: dict[str, list[dict]] = defaultdict(list)
    for p in args.inputs:
        payload = json.loads(Path(p).read_text(encoding="utf-8"))
        groups[payload.get("label") or "unlabeled"].append(payload)
    header = ["label", "n", "n_defined", "cv_mean_ms", "cv_sd_ms", "longest_mean_s", "longest_sd_s",
              "ratio_mean_percent", "ratio_sd_percent", "mean_run_duration_ms"]
    rows = []
    for label in sorted(groups):
        items = groups[label]
        defined = [d for d in items if d.get("mean_shift_ms") is not None]
        cv = _mean_sd([d["mean_shift_ms"] for d in items])
        longest = _mean_sd([d["longest_stable_run_s"] for d in defined])
        ratio = _mean_sd([d["defined_ratio_percent"] for d in defined])
        run = _mean_sd([d.get("mean_run_duration_ms") for d in defined])
        cells = [label, str(len(items)), str(len(defined))]
        for v in (*cv, *longest, *ratio, run[0]):
            cells.append("NA" if v is None else fmt(v))
        rows.append(cells)
    out = Path(args.output)
    with out.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    for cells in rows:
        print(f"{cells[0]}: CV {cells[3]} ± {cells[4]} ms (n={cells[1]})")
    return EXIT_OK


# ---------------------------------------------------------------------------


class _DefaultsFormatter(argparse.HelpFormatter):
    """Show the default of every option that has a meaningful one."""

    def _get_help_string(self, action):
        text = action.help or ""
        default = action.default
        if default is None or default is False or default == argparse.SUPPRESS or "default" in text or not action.option_strings:
            return text
        if isinstance(default, (tuple, list)):
            default = " ".join(map(str, default))
        return f"{text} (default: {default})".lstrip()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tempord", description="Local temporal-order estimation between two signals.")
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="sweep windows and shifts, extract the causal vector",
                       formatter_class=_DefaultsFormatter)
    a.add_argument("--input", required=True, help="pair CSV with header time_s,ch1,ch2")
    a.add_argument("--columns", nargs=2, default=("ch1", "ch2"), metavar=("SIGNAL1", "SIGNAL2"),
                   help="column names of the two signals")
    a.add_argument("--swap", action="store_true", help="shift the first column instead of the second")
    a.add_argument("--method", choices=("lm", "td"), default="td", help="linear modeling or time-series distance")
    a.add_argument("--distance", choices=("manhattan", "fourier"), default="manhattan", help="td distance")
    a.add_argument("--scaling", choices=tuple(SCALING_NAMES), default="gaussian", help="per-segment scaling")
    a.add_argument("--segment-sec", type=float, default=10.0, help="segment length")
    a.add_argument("--shift-min-sec", type=float, default=-2.0, help="smallest shift")
    a.add_argument("--shift-max-sec", type=float, default=2.0, help="largest shift")
    a.add_argument("--shift-step-sec", type=float, default=None, help="default: one sample")
    a.add_argument("--window-step-sec", type=float, default=None, help="default: one sample")
    a.add_argument("--threshold", type=float, default=None,
                   help="exclusion level (e.g. 0.90 for lm, 0.15 for td); none by default")
    a.add_argument("--stable-tolerance-steps", type=int, default=1, help="run tolerance in shift steps")
    a.add_argument("--label", default=None, help="condition label stored in the stability file")
    a.add_argument("--out-dir", default=".", help="output directory")
    a.add_argument("--prefix", default=None, help="output file stem (default: input stem)")
    a.add_argument("--heatmap", action="store_true", help="also write a PPM heatmap")
    a.add_argument("--threads", type=int, default=None, help="worker threads (default: TEMPORD_THREADS or CPU count)")
    a.add_argument("--no-timestamp", action="store_true", help="omit the manifest timestamp")
    a.set_defaults(func=cmd_analyze)

    p = sub.add_parser("preprocess", help="ECG + respiration -> tachogram/tidal-volume pair",
                       formatter_class=_DefaultsFormatter)
    p.add_argument("--ecg", required=True, help="CSV with time_s and an ECG column")
    p.add_argument("--ecg-column", default="ecg", help="ECG column name")
    p.add_argument("--resp", required=True, help="CSV with time_s and a respiration column")
    p.add_argument("--resp-column", default="resp", help="respiration column name")
    p.add_argument("--target-rate", type=float, default=25.0, help="output rate in Hz")
    p.add_argument("--signal1", choices=("tachogram", "resp"), default="tachogram",
                   help="which channel is held stationary")
    p.add_argument("--output", required=True)
    p.add_argument("--no-timestamp", action="store_true")
    p.set_defaults(func=cmd_preprocess)

    s = sub.add_parser("synth", help="write a ground-truth signal pair",
                       formatter_class=_DefaultsFormatter)
    s.add_argument("--kind", choices=[k.value for k in SynthKind], default="lagged-sine", help="generator")
    s.add_argument("--duration-sec", type=float, default=120.0, help="signal length")
    s.add_argument("--rate", type=float, default=25.0, help="sample rate in Hz")
    s.add_argument("--breath-rate-bpm", type=float, default=6.0, help="breaths per minute")
    s.add_argument("--frequency-hz", type=float, default=None, help="overrides the breath rate")
    s.add_argument("--depth", type=float, default=1.0, help="tidal volume amplitude")
    s.add_argument("--lag-sec", type=float, default=0.0, help="true lag, positive when signal 1 leads")
    s.add_argument("--noise-sd", type=float, default=0.0, help="additive Gaussian noise")
    s.add_argument("--seed", type=int, default=0, help="noise seed")
    s.add_argument("--output", required=True)
    s.add_argument("--no-timestamp", action="store_true")
    s.set_defaults(func=cmd_synth)

    r = sub.add_parser("report", help="aggregate stability files per label")
    r.add_argument("inputs", nargs="+")
    r.add_argument("--output", required=True)
    r.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except TempordError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
