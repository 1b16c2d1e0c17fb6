"""Command-line front end.

Every subcommand reads the experiment configuration from ``--config``, then
``$MCRX_CONFIG``, then the bundled reference file; ``--set section.key=value``
overrides single keys.  Exit status: 0 success, 2 configuration error,
3 data or I/O error, 4 fit did not converge.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import config as cfgmod
from . import io
from .errors import ConfigError, DataError, DomainError, FitProblemError, ModelParameterError
from .fitting import FitProblem, fit, isotherm_model, kinetics_model, pulse_kt_model
from .physchem import physchem_report
from .pulse import simulate_pulse
from .txrx import (
    add_noise, ber, decision_times, difference_detect, filter_lag, moving_mean,
    normalize, sample_decision_points, synthesize_signal,
)

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NOCONV = 0, 2, 3, 4


def _config(args) -> cfgmod.Config:
    cfg = cfgmod.load_default(args.config)
    if args.set:
        cfg = cfg.with_overrides(args.set)
    return cfg


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(lines, out_path=None):
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if out_path is not None:
        Path(out_path).write_text(text, encoding="utf-8", newline="\n")


def _baseline(cfg, override):
    if override is not None:
        return override
    cfg.require("receiver")
    return cfg.sections["receiver"]["baseline_current_uA"]


# ------------------------------------------------------------- commands

def cmd_physchem(args) -> int:
    cfg = _config(args)
    cfg.require("channel", "electrolyte", "receiver")
    buffer, sensing = cfgmod.electrolytes_from(cfg)
    r = cfg.sections["receiver"]
    try:
        rep = physchem_report(
            cfgmod.channel_from(cfg), cfgmod.receiver_from(cfg), buffer, sensing,
            cfgmod.probe_from(cfg), r["cnp_shift_mV"], r["neglect_gate_electrode"])
    except DomainError as exc:
        raise ConfigError(f"{cfg.source}: {exc}") from None
    _emit(rep.lines())
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _config(args)
    tx = cfgmod.tx_from(cfg)
    p = cfgmod.pulse_params_from(cfg)
    noise = cfgmod.noise_from(cfg)
    grid_dt = cfg.get("tx", "grid_dt_s")
    window, f_offset = cfgmod.filter_from(cfg, grid_dt)
    baseline = cfg.get("receiver", "baseline_current_uA")
    try:
        bits = cfgmod.bits_from(cfg)
        clean = synthesize_signal(bits, tx, p, grid_dt, baseline)
        noisy = add_noise(clean, noise)
        filtered = moving_mean(noisy, window)
        t_raw = decision_times(tx)
        t_filt = decision_times(tx, f_offset)
        r_raw = sample_decision_points(noisy, tx, t_raw)
        r_filt = sample_decision_points(filtered, tx, t_filt)
    except DomainError as exc:
        raise ConfigError(f"{cfg.source}: {exc}") from None
    dec_raw, dec_filt = difference_detect(r_raw), difference_detect(r_filt)

    out = _out_dir(args.out)
    files = [
        io.write_trace(out / "clean.csv", clean),
        io.write_trace(out / "noisy.csv", noisy),
        io.write_trace(out / "filtered.csv", filtered),
        io.write_trace(out / "clean_normalized.csv", normalize(clean)),
        io.write_bits(out / "sent_bits.txt", bits),
        io.write_columns(out / "decision_samples.csv",
                         ("time_s", "raw_uA", "filtered_time_s", "filtered_uA"),
                         [t_raw, r_raw, t_filt, r_filt]),
        io.write_bits(out / "decoded_raw.txt", dec_raw),
        io.write_bits(out / "decoded_filtered.txt", dec_filt),
    ]
    lines = [
        f"config_sha256 = {cfg.hash()}",
        f"n_bits = {tx.n_bits}",
        f"bit_interval_s = {tx.bit_interval:g}",
        f"ber_raw = {ber(bits, dec_raw):.6g}",
        f"ber_filtered = {ber(bits, dec_filt):.6g}",
        f"errors_raw = {int(np.count_nonzero(bits != dec_raw))}",
        f"errors_filtered = {int(np.count_nonzero(bits != dec_filt))}",
    ]
    _emit(lines, out / "report.txt")
    files.append(out / "report.txt")
    io.write_manifest(out / "manifest.json", cfg.hash(),
                      {"bits": tx.seed, "noise": noise.seed}, files)
    return EXIT_OK


def _fit_and_report(problem, max_iter, out, residual_header, x):
    result = fit(problem, max_iterations=max_iter)
    lines = [f"model = {problem.model.name}"] + result.report_lines()
    if out is not None:
        out = _out_dir(out)
        resid = problem.model(result.values, problem.x) - problem.y
        io.write_columns(out / "residuals.csv", residual_header, [x, resid])
        _emit(lines, out / "report.txt")
    else:
        _emit(lines)
    if not result.converged:
        print(f"mcrx: fit did not converge: {result.message}", file=sys.stderr)
        return EXIT_NOCONV
    return EXIT_OK


def cmd_fit_isotherm(args) -> int:
    cfg = _config(args)
    pts = io.read_sensing_points(args.data)
    c_nM = np.array([pt.concentration * 1e9 for pt in pts])
    d_i = np.array([pt.delta_I_plateau for pt in pts])
    problem = FitProblem(isotherm_model(), c_nM, d_i)
    return _fit_and_report(problem, cfg.get("fit", "max_iterations"), args.out,
                           ("concentration_nM", "residual_uA"), c_nM)


def cmd_fit_kinetics(args) -> int:
    cfg = _config(args)
    cfg.require("fit")
    f = cfg.sections["fit"]
    trace = io.read_trace(args.trace)
    y = trace.samples - (args.baseline_uA or 0.0)
    t = trace.times
    if args.model == "langmuir":
        t_rel = t - f["association_start_s"]
        keep = t_rel >= 0
        t_d = f["association_end_s"] - f["association_start_s"]
        if t_d <= 0:
            raise ConfigError(f"{cfg.source}: [fit] association_end_s must follow "
                              "association_start_s")
        model = kinetics_model(f["concentration_nM"] * 1e-9, t_d)
        weights = np.where(t_rel[keep] > t_d, f["dissociation_weight"], 1.0)
        problem = FitProblem(model, t_rel[keep], y[keep], weights=weights)
        x_out = t[keep]
    else:
        template = cfgmod.pulse_params_from(cfg)
        problem = FitProblem(pulse_kt_model(template), t, y)
        x_out = t
    return _fit_and_report(problem, f["max_iterations"], args.out,
                           ("time_s", "residual_uA"), x_out)


def _filtered(cfg, trace, window_override=None):
    window, offset = cfgmod.filter_from(cfg, trace.dt)
    if window_override is not None:
        window = window_override
        offset = None
    if offset is None:
        offset = -filter_lag(window, trace.dt)
    try:
        return moving_mean(trace, window), offset
    except DomainError as exc:
        raise ConfigError(f"[filter] window_s: {exc}") from None


def cmd_detect(args) -> int:
    cfg = _config(args)
    tx = cfgmod.tx_from(cfg)
    trace = io.read_trace(args.trace)
    offset = 0.0
    if args.filter:
        trace, offset = _filtered(cfg, trace, args.window)
    r = sample_decision_points(trace, tx, decision_times(tx, offset))
    bits = difference_detect(r)
    if args.out:
        io.write_bits(args.out, bits)
    print("".join(str(int(b)) for b in bits))
    return EXIT_OK


def cmd_ber(args) -> int:
    sent = io.read_bits(args.sent)
    decoded = io.read_bits(args.decoded)
    if sent.size != decoded.size:
        raise DataError(f"{args.decoded}: {decoded.size} bits, but {args.sent} has {sent.size}")
    _emit([f"ber = {ber(sent, decoded):.6g}",
           f"errors = {int(np.count_nonzero(sent != decoded))}",
           f"n_bits = {sent.size}"])
    return EXIT_OK


def cmd_plotdata(args) -> int:
    header, rows = io.read_table(args.trace, (io.TRACE_HEADER, io.NORMALIZED_HEADER))
    t, y = rows[:, 0], rows[:, 1]
    if args.filter or args.normalize:
        cfg = _config(args)
        trace = io.read_trace(args.trace, baseline=_baseline(cfg, args.baseline_uA))
        if args.filter:
            trace, _ = _filtered(cfg, trace, args.window)
        if args.normalize:
            trace = normalize(trace)
            header = io.NORMALIZED_HEADER
        y = trace.samples
    if args.downsample < 1:
        raise DataError("--downsample must be a positive integer")
    step = slice(None, None, args.downsample)
    io.write_columns(args.out, header, [t[step], y[step]])
    return EXIT_OK


def cmd_pulse(args) -> int:
    cfg = _config(args)
    p = cfgmod.pulse_params_from(cfg)
    try:
        res = simulate_pulse(p, args.t_end, args.dt, cfg.get("receiver", "baseline_current_uA"))
    except ModelParameterError as exc:
        raise ConfigError(f"{cfg.source}: {exc}") from None
    if args.normalized:
        io.write_columns(args.out, io.NORMALIZED_HEADER, [res.times, res.normalized])
    else:
        io.write_columns(args.out, ("time_s", "delta_I_uA"), [res.times, res.delta_I])
    return EXIT_OK


# --------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI experiment file (default: $MCRX_CONFIG, "
                                         "then the bundled reference config)")
    common.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                        help="override one config key; repeatable")

    ap = argparse.ArgumentParser(prog="mcrx", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"mcrx {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("physchem", parents=[common], help="channel and gate-stack numbers")
    s.set_defaults(func=cmd_physchem)

    s = sub.add_parser("simulate", parents=[common], help="run one transmission")
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("fit-isotherm", parents=[common], help="fit K_D and the saturation current")
    s.add_argument("data", help="CSV with concentration_nM,delta_I_uA")
    s.add_argument("--out", help="directory for report.txt and residuals.csv")
    s.set_defaults(func=cmd_fit_isotherm)

    s = sub.add_parser("fit-kinetics", parents=[common], help="fit a binding time trace")
    s.add_argument("trace", help="CSV with time_s,current_uA")
    s.add_argument("--model", choices=("langmuir", "pulse-kT"), default="langmuir")
    s.add_argument("--baseline-uA", type=float, default=None,
                   help="subtract this resting current first")
    s.add_argument("--out", help="directory for report.txt and residuals.csv")
    s.set_defaults(func=cmd_fit_kinetics)

    s = sub.add_parser("detect", parents=[common], help="decode bits from a received trace")
    s.add_argument("trace")
    s.add_argument("--filter", action="store_true", help="apply the moving-mean filter first")
    s.add_argument("--window", type=float, default=None, help="filter window in s")
    s.add_argument("--out", help="write decoded bits here")
    s.set_defaults(func=cmd_detect)

    s = sub.add_parser("ber", help="bit error rate between two bit files")
    s.add_argument("sent")
    s.add_argument("decoded")
    s.set_defaults(func=cmd_ber)

    s = sub.add_parser("plotdata", parents=[common], help="plot-ready trace CSV")
    s.add_argument("trace")
    s.add_argument("--out", required=True)
    s.add_argument("--downsample", type=int, default=1, help="keep every N-th row")
    s.add_argument("--filter", action="store_true")
    s.add_argument("--window", type=float, default=None, help="filter window in s")
    s.add_argument("--normalize", action="store_true", help="divide by the baseline current")
    s.add_argument("--baseline-uA", type=float, default=None)
    s.set_defaults(func=cmd_plotdata)

    s = sub.add_parser("pulse", parents=[common], help="single-pulse response")
    s.add_argument("--out", required=True)
    s.add_argument("--t-end", type=float, default=600.0)
    s.add_argument("--dt", type=float, default=1.0)
    s.add_argument("--normalized", action="store_true")
    s.set_defaults(func=cmd_pulse)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"mcrx: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, FitProblemError, DomainError, ModelParameterError) as exc:
        print(f"mcrx: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"mcrx: I/O error: {exc.filename or ''}: {exc.strerror}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
