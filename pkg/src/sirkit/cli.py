"""``sirkit`` command line: impedance, design, simulate, fit, sweep.

Exit codes: 0 ok, 2 invalid input, 3 infeasible design, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from sirkit.cpw import SubstrateSpec, CpwCrossSection, cpw_params, solve_center_width
from sirkit.errors import (
    DesignInfeasibleError,
    NoResonanceError,
    NoSolutionError,
    SirkitError,
    TraceFormatError,
    ValidationError,
)
from sirkit.fitting import fit_notch
from sirkit.manifest import (
    DesignManifest,
    ResonatorEntry,
    SegmentEntry,
    empty_manifest,
    load_manifest,
    write_manifest,
)
from sirkit.network import estimate_loaded_q, fundamental_frequency, notch_grid, s21_sweep
from sirkit.photons import dbm_to_watt, photon_number, power_sweep
from sirkit.sir import DesignTarget, shortening, synthesize_design
from sirkit.traceio import TRACE_SUFFIXES, read_trace, write_fit_results, write_trace

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INFEASIBLE = 3
EXIT_IO = 4

SWEEP_COLUMNS = (
    "trace_id",
    "source_power_dbm",
    "chip_power_dbm",
    "photon_number",
    "q_internal",
    "q_coupling_mag",
    "q_loaded",
    "f_r_hz",
)

log = logging.getLogger("sirkit")


def _fmt(x) -> str:
    return repr(float(x))


def _say(text=""):
    print(text)


# --- impedance --------------------------------------------------------------


def cmd_impedance(args) -> int:
    sub = SubstrateSpec(args.er)
    xs = CpwCrossSection(args.w, args.g, args.t)
    line = cpw_params(xs, sub)
    _say(f"z0_ohm={line.z0:.4f}")
    _say(f"eps_eff={line.eps_eff:.4f}")
    _say(f"phase_velocity_m_s={line.phase_velocity:.6e}")
    _say(f"modulus_k={xs.modulus:.6f}")
    return EXIT_OK


# --- design -----------------------------------------------------------------


def _design_lines(args, sub):
    low_xs = CpwCrossSection(args.w1, args.g1)
    low = cpw_params(low_xs, sub)
    if args.w2 is not None:
        high_xs = CpwCrossSection(args.w2, args.g2)
    elif args.r is not None:
        if not args.r > 0:
            raise ValidationError(f"R must be > 0 (got {args.r})", field="r")
        if math.isclose(args.r, 1.0, rel_tol=1e-12):
            return [(low_xs, low)]
        high_xs = CpwCrossSection(solve_center_width(low.z0 / args.r, args.g2, sub), args.g2)
    else:
        raise ValidationError("give --r or the second section geometry (--w2)", field="r")
    return [(low_xs, low), (high_xs, cpw_params(high_xs, sub))]


def _entry_from_design(name, design, xss, cap, target):
    return ResonatorEntry(
        name=name,
        type="UIR" if design.is_uniform else "SIR",
        segments=[SegmentEntry(xs.center_width, xs.gap, length)
                  for xs, (_, length) in zip(xss, design.segments)],
        coupling_cap_ff=cap,
        target_frequency_hz=target,
        termination=design.termination,
    )


def _report_design(name, design):
    kind = "UIR" if design.is_uniform else "SIR"
    lengths = ", ".join(f"{length:.2f}" for _, length in design.segments)
    _say(f"{name}: {kind} R={design.impedance_ratio:.4f} "
         f"shortening={100.0 * design.shortening:.2f}% lengths_um=[{lengths}]")


def cmd_design(args) -> int:
    if args.manifest:
        return _design_from_manifest(args)
    if args.freq is None:
        raise ValidationError("--freq is required without --manifest", field="freq")
    sub = SubstrateSpec(args.er)
    pairs = _design_lines(args, sub)
    xss = [xs for xs, _ in pairs]
    lines = [line for _, line in pairs]
    target = DesignTarget(args.freq, termination=args.termination)
    if target.termination == "open" and len(lines) == 2:
        xss = [xss[0], xss[1], xss[0]]
    design = synthesize_design(target, lines if len(lines) == 2 else lines[0],
                               coupling_cap=args.coupling_cap, trim=not args.no_trim)
    _report_design(args.name, design)
    if len(lines) == 2:
        _say(f"{args.name}: quarter-wave reference saving {100.0 * shortening(design.impedance_ratio):.2f}%")
    if args.out:
        manifest = empty_manifest(sub)
        manifest.resonators.append(
            _entry_from_design(args.name, design, xss, args.coupling_cap, args.freq))
        manifest.validate()
        write_manifest(manifest, args.out)
        _say(f"wrote {args.out}")
    return EXIT_OK


def _design_from_manifest(args) -> int:
    manifest = load_manifest(args.manifest)
    out = []
    for entry in manifest.resonators:
        if entry.target_frequency_hz is None:
            _say(f"{entry.name}: no target frequency, kept as is")
            out.append(entry)
            continue
        lines = manifest.segment_lines(entry)
        target = DesignTarget(entry.target_frequency_hz, termination=entry.termination)
        if entry.type == "SIR" and entry.termination == "open":
            lines = lines[:2]
        design = synthesize_design(target, lines if len(lines) > 1 else lines[0],
                                   coupling_cap=manifest.coupling_cap(entry),
                                   trim=not args.no_trim)
        _report_design(entry.name, design)
        segs = [replace(seg, length_um=length)
                for seg, (_, length) in zip(entry.segments, design.segments)]
        out.append(replace(entry, segments=segs))
    manifest.resonators = out
    manifest.validate()
    if args.out:
        write_manifest(manifest, args.out)
        _say(f"wrote {args.out}")
    return EXIT_OK


# --- simulate ---------------------------------------------------------------


def _zoom_grid(res, points, linewidths):
    f0 = fundamental_frequency(res)
    ql = estimate_loaded_q(res, f0)
    return notch_grid(f0, ql, linewidths, points)


def cmd_simulate(args) -> int:
    manifest = load_manifest(args.manifest)
    placed = manifest.placements(args.qi)
    feed = manifest.feedline_params()
    length = manifest.feedline_length()
    zooms = [(res, _zoom_grid(res, args.zoom_points, args.zoom_linewidths)) for res, _ in placed]
    if args.fmin is not None and args.fmax is not None:
        fmin, fmax = args.fmin, args.fmax
    elif zooms:
        centers = [g[len(g) // 2] for _, g in zooms]
        fmin, fmax = 0.95 * min(centers), 1.05 * max(centers)
    else:
        fmin, fmax = 4e9, 8e9
    if not 0 < fmin < fmax:
        raise ValidationError("need 0 < fmin < fmax", field="fmin")
    grid = np.linspace(fmin, fmax, args.points)
    for _, g in zooms:
        grid = np.concatenate([grid, g[(g >= fmin) & (g <= fmax)]])
    grid = np.unique(grid)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        trace = s21_sweep(feed, placed, grid, feedline_length=length)
    trace.metadata = {"manifest": Path(args.manifest).name, "resonators": len(placed)}
    write_trace(trace, args.out)
    _say(f"wrote {args.out} ({len(grid)} points, {len(placed)} resonators)")
    if args.zoom_dir:
        zdir = Path(args.zoom_dir)
        zdir.mkdir(parents=True, exist_ok=True)
        suffix = Path(args.out).suffix or ".csv"
        for (res, g) in zooms:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                z = s21_sweep(feed, placed, g, feedline_length=length)
            z.metadata = {"resonator": res.name}
            write_trace(z, zdir / f"{res.name}{suffix}")
        _say(f"wrote {len(zooms)} zoomed traces to {zdir}")
    return EXIT_OK


# --- fit / sweep ------------------------------------------------------------


def _collect(paths):
    files = []
    for p in map(Path, paths):
        if p.is_dir():
            files.extend(sorted(q for q in p.iterdir() if q.suffix.lower() in TRACE_SUFFIXES))
        elif p.exists():
            files.append(p)
        else:
            raise FileNotFoundError(f"no such file: {p}")
    return files


def cmd_fit(args) -> int:
    files = _collect(args.traces)
    rows = []
    n_warn = 0
    bad_format = []
    for path in files:
        row = {"trace_id": path.stem}
        try:
            trace = read_trace(path)
        except TraceFormatError as exc:
            print(f"error: {exc}", file=sys.stderr)
            bad_format.append(str(exc))
            row["status"] = "malformed"
            rows.append(row)
            continue
        try:
            fit = fit_notch(trace)
        except NoResonanceError:
            row["status"] = "no-resonance"
            n_warn += 1
            rows.append(row)
            continue
        except SirkitError as exc:
            row["status"] = f"failed: {exc}"
            n_warn += 1
            rows.append(row)
            continue
        row.update(
            f_r_hz=fit.f_r,
            q_loaded=fit.q_loaded,
            q_coupling_mag=fit.q_coupling_mag,
            mismatch_angle_rad=fit.mismatch_angle,
            q_internal=fit.q_internal,
            rms_residual=fit.rms_residual,
            status="ok",
        )
        if args.attenuation_db is not None and trace.incident_power_dbm is not None:
            try:
                chip = dbm_to_watt(trace.incident_power_dbm - args.attenuation_db)
                row["photon_number"] = photon_number(chip, fit.q_loaded, fit.q_internal,
                                                     1, fit.f_r)
            except SirkitError as exc:
                row["status"] = f"ok; no photon number: {exc}"
                n_warn += 1
        rows.append(row)
    write_fit_results(rows, args.out)
    _say(f"wrote {args.out}: {len(rows)} traces, {n_warn} warnings")
    if n_warn:
        print(f"warning: {n_warn} trace(s) without a usable fit", file=sys.stderr)
    if bad_format:
        return EXIT_INVALID
    return EXIT_OK


def cmd_sweep(args) -> int:
    files = _collect([args.directory])
    traces, ids = [], []
    for path in files:
        traces.append(read_trace(path))
        ids.append(path.stem)
    sweep = power_sweep(traces, args.attenuation_db, trace_ids=ids)
    for tid, msg in sweep.failures:
        print(f"warning: {tid} skipped: {msg}", file=sys.stderr)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for p in sweep.points:
            writer.writerow([p.trace_id, _fmt(p.source_power_dbm), _fmt(p.incident_power_dbm),
                             _fmt(p.photon_number), _fmt(p.fit.q_internal),
                             _fmt(p.fit.q_coupling_mag), _fmt(p.fit.q_loaded), _fmt(p.fit.f_r)])
    _say(f"wrote {args.out}: {len(sweep.points)} points, {len(sweep.failures)} skipped")
    return EXIT_OK


def cmd_synth_sweep(args) -> int:
    from sirkit.loss import LossModelParams, synthesize_power_sweep

    manifest = load_manifest(args.manifest)
    by_name = {e.name: e for e in manifest.resonators}
    if args.resonator not in by_name:
        raise ValidationError(f"no resonator named {args.resonator!r}", field="resonator")
    entry = by_name[args.resonator]
    if args.coupling_cap is not None:
        entry = replace(entry, coupling_cap_ff=args.coupling_cap)
    res = manifest.resonator_spec(entry)
    params = LossModelParams(args.tls, args.nc, args.beta, args.q_other, args.temperature,
                             fundamental_frequency(res))
    powers = np.linspace(args.pmax, args.pmin, args.count)
    snr = None if args.snr_db <= 0 else args.snr_db
    traces = synthesize_power_sweep(params, res, powers, args.attenuation_db, snr, args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for t in traces:
        write_trace(t, out / f"{t.metadata['trace_id']}.csv")
    _say(f"wrote {len(traces)} traces to {out}")
    return EXIT_OK


# --- entry point ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sirkit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("impedance", help="CPW impedance and effective permittivity")
    p.add_argument("--w", type=float, required=True, help="centre width (um)")
    p.add_argument("--g", type=float, required=True, help="gap (um)")
    p.add_argument("--er", type=float, default=10.0, help="substrate permittivity")
    p.add_argument("--t", type=float, default=0.0, help="film thickness (um), ignored")
    p.set_defaults(func=cmd_impedance)

    p = sub.add_parser("design", help="solve resonator section lengths")
    p.add_argument("--freq", type=float, help="target fundamental (Hz)")
    p.add_argument("--r", type=float, help="impedance ratio Z1/Z2")
    p.add_argument("--w1", type=float, default=20.0, help="coupled-end centre width (um)")
    p.add_argument("--g1", type=float, default=10.0, help="coupled-end gap (um)")
    p.add_argument("--w2", type=float, help="shorted-end centre width (um)")
    p.add_argument("--g2", type=float, default=18.0, help="shorted-end gap (um)")
    p.add_argument("--er", type=float, default=10.0)
    p.add_argument("--coupling-cap", type=float, default=0.8, help="fF")
    p.add_argument("--termination", default="short")
    p.add_argument("--name", default="R1")
    p.add_argument("--no-trim", action="store_true", help="skip the simulated trim step")
    p.add_argument("--manifest", help="re-solve every entry with a target frequency")
    p.add_argument("--out", help="manifest to write")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("simulate", help="simulate the transmission of a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", default="chip.csv", help=".csv or .s2p")
    p.add_argument("--fmin", type=float)
    p.add_argument("--fmax", type=float)
    p.add_argument("--points", type=int, default=2001)
    p.add_argument("--zoom-points", type=int, default=401)
    p.add_argument("--zoom-linewidths", type=float, default=10.0)
    p.add_argument("--zoom-dir", help="also write one zoomed trace per resonator here")
    p.add_argument("--qi", type=float, help="internal Q of every resonator (default lossless)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit notch traces")
    p.add_argument("traces", nargs="+", help="trace files or directories")
    p.add_argument("--out", default="fit_results.csv")
    p.add_argument("--attenuation-db", type=float, help="input line attenuation")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("sweep", help="internal Q against photon number")
    p.add_argument("directory")
    p.add_argument("--attenuation-db", type=float, required=True)
    p.add_argument("--out", default="qi_vs_n.csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth-sweep", help="synthetic power sweep from the loss model")
    p.add_argument("manifest")
    p.add_argument("--resonator", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--coupling-cap", type=float, help="override the entry's cap (fF)")
    p.add_argument("--pmax", type=float, default=-20.0, help="source power (dBm)")
    p.add_argument("--pmin", type=float, default=-65.0)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--attenuation-db", type=float, default=75.0)
    p.add_argument("--snr-db", type=float, default=40.0, help="<= 0 for noiseless")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tls", type=float, default=8e-6)
    p.add_argument("--nc", type=float, default=10.0)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--q-other", type=float, default=1e6)
    p.add_argument("--temperature", type=float, default=0.010)
    p.set_defaults(func=cmd_synth_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (DesignInfeasibleError, NoSolutionError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValidationError as exc:
        where = f" [{exc.field}]" if exc.field else ""
        print(f"invalid input{where}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except TraceFormatError as exc:
        print(f"malformed trace: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SirkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
