"""``flexent`` command line: plan, simulate, infer, score, allocate, report.

Exit codes: 0 success, 2 validation, 3 infeasible plan, 4 numerical
non-convergence.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, fileio, metrics, pipeline
from .allocator import allocate
from .config import ENV_VAR, load_config
from .errors import FlexentError, UsageError
from .source import jsi_car_classes, simulate_jsi
from .tomography import PosteriorSummary

log = logging.getLogger("flexent")


def _manifest(args, cfg, inputs, outputs, seed=None):
    return {
        "command": args.command,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "seed": seed,
        "overrides": dict(args.overrides),
        "config": cfg,
        "tool_version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }


def _write_manifest(args, cfg, inputs, outputs, seed=None):
    out = Path(args.out)
    path = out / "manifest.json" if out.is_dir() else out.with_name(out.name + ".manifest.json")
    fileio.write_json(_manifest(args, cfg, inputs, outputs, seed), path)


def _parse_channels(text, count):
    if not text:
        return list(range(1, count + 1))
    ks = []
    for part in text.split(","):
        if "-" in part:
            lo, hi = part.split("-", 1)
            ks.extend(range(int(lo), int(hi) + 1))
        else:
            ks.append(int(part))
    bad = [k for k in ks if not 1 <= k <= count]
    if bad:
        raise UsageError(f"channels out of range 1..{count}: {bad[:5]}")
    return ks


def cmd_plan(args, cfg):
    plan = pipeline.plan_from_config(cfg)
    fileio.write_plan_csv(plan, args.out)
    _write_manifest(args, cfg, [], [args.out])
    print(f"wrote {len(plan)} channel pairs to {args.out}")


def cmd_simulate_jsi(args, cfg):
    plan = pipeline.plan_from_config(cfg)
    c, l = pipeline.wss_specs(cfg)
    seed = int(cfg["seed"])
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0, 6]))
    scan = simulate_jsi(pipeline.jsi_model(cfg), plan, args.pattern, cfg["jsi_integration_s"], rng, c, l)
    fileio.write_jsi_csv(scan, args.out)
    _write_manifest(args, cfg, [], [args.out], seed)
    for name, s in jsi_car_classes(scan).items():
        print(f"{name:15s} CAR {s['mean']:.3f} +/- {s['std']:.3f} over {s['n']} points")


def cmd_simulate_tomo(args, cfg):
    ks = _parse_channels(args.channels, int(cfg["count"]))
    seed = int(cfg["seed"])
    records = pipeline.simulate_tomography(cfg, ks, seed)
    fileio.write_counts_csv(records, args.out)
    _write_manifest(args, cfg, [], [args.out], seed)
    print(f"wrote {len(records)} count records for {len(ks)} channels to {args.out}")


def cmd_tomo(args, cfg):
    grouped = pipeline.group_by_channel(fileio.read_counts_csv(args.counts))
    seed = int(cfg["seed"])
    posts = pipeline.run_tomography(grouped, cfg, seed, jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for p in posts:
        obj = p.to_json()
        obj["r_coinc"] = pipeline.coincidence_rate(grouped[p.channel])
        path = out / f"posterior_k{p.channel:03d}.json"
        fileio.write_json(obj, path)
        written.append(path.name)
        for w in p.warnings:
            log.warning("channel %d: %s", p.channel, w)
    _write_manifest(args, cfg, [args.counts], written, seed)
    print(f"wrote {len(posts)} posterior summaries to {out}")


def _load_posteriors(directory):
    files = sorted(Path(directory).glob("posterior_k*.json"))
    if not files:
        raise UsageError(f"no posterior_k*.json files in {directory}")
    posts, rates = [], {}
    for f in files:
        obj = fileio.read_json(f)
        p = PosteriorSummary.from_json(obj)
        if p.channel is None or "r_coinc" not in obj:
            raise UsageError(f"{f}: missing channel or r_coinc")
        posts.append(p)
        rates[p.channel] = float(obj["r_coinc"])
    return posts, rates, files


def cmd_metrics(args, cfg):
    posts, rates, files = _load_posteriors(args.posteriors)
    cars = {}
    inputs = [str(f) for f in files]
    if args.jsi:
        cars = pipeline.diagonal_cars(fileio.read_jsi_csv(args.jsi, cfg["window_s"]))
        inputs.append(args.jsi)
    reports = pipeline.reports_from_posteriors(posts, rates, cars, int(cfg["seed"]))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fileio.write_report_csv(reports, out / "report.csv")
    summary = metrics.summarize_reports(reports)
    fileio.write_json({"summary": summary, "channels": [r.to_json() for r in reports]}, out / "report.json")
    _write_manifest(args, cfg, inputs, ["report.csv", "report.json"], int(cfg["seed"]))
    print(
        f"{summary['channels']} channels: mean fidelity {summary['fidelity_mean']:.4f}, "
        f"mean R_N {summary['r_n_mean']:.0f} ebits/s, mean R_I {summary['r_i_mean']:.0f} ebits/s, "
        f"sum R_I {summary['r_i_sum'] / 1000:.1f} kebits/s"
    )


def cmd_allocate(args, cfg):
    requests = fileio.read_requests_csv(args.requests)
    rates = fileio.read_report_rates(args.report)
    plan = allocate(requests, rates, int(cfg["c_ports"]), int(cfg["l_ports"]))
    fileio.write_json(plan.to_json(), args.out)
    _write_manifest(args, cfg, [args.requests, args.report], [args.out])
    print(f"assigned {len(plan.assignments)} request(s); unmet: {plan.unmet or 'none'}")


def cmd_report(args, cfg):
    data = fileio.read_json(Path(args.metrics) / "report.json")
    reports = [metrics.EntanglementReport.from_json(c) for c in data["channels"]]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    inputs = [str(Path(args.metrics) / "report.json")]

    if args.jsi:
        scan = fileio.read_jsi_csv(args.jsi, cfg["window_s"])
        from .source import car

        rows = [
            [e.sig_ch, e.idl_ch, e.coinc, repr(car(e.coinc, e.singles_s, e.singles_i, scan.window_s, e.integration_s))]
            for e in scan.entries
            if e.singles_s > 0 and e.singles_i > 0
        ]
        fileio._write(out / "jsi_heatmap.csv", ["sig_ch", "idl_ch", "coinc", "car"], rows)
        written.append("jsi_heatmap.csv")
        inputs.append(args.jsi)

    fileio._write(
        out / "channel_series.csv",
        ["k", "fidelity", "r_coinc", "r_n", "r_i"],
        ([r.k] + [repr(float(v)) for v in (r.fidelity, r.r_coinc, r.r_n, r.r_i)] for r in reports),
    )
    written.append("channel_series.csv")

    ranked = sorted(reports, key=lambda r: (-r.fidelity, r.k))
    picks = [("top", i + 1, r) for i, r in enumerate(ranked[: args.top])]
    if args.bottom:
        picks += [("bottom", i + 1, r) for i, r in enumerate(ranked[::-1][: args.bottom])]
    for tag, rank, r in picks:
        if r.rotated_state is None:
            raise UsageError(f"channel {r.k} has no rotated state in {args.metrics}")
        name = f"density_{tag}{rank}_k{r.k:03d}.csv"
        fileio._write(out / name, ["part", "row", "HH", "HV", "VH", "VV"], pipeline.density_grid_rows(r.rotated_state))
        written.append(name)
    _write_manifest(args, cfg, inputs, written)
    print(f"wrote {len(written)} files to {out}")


COMMANDS = {
    "plan": cmd_plan,
    "simulate-jsi": cmd_simulate_jsi,
    "simulate-tomo": cmd_simulate_tomo,
    "tomo": cmd_tomo,
    "metrics": cmd_metrics,
    "allocate": cmd_allocate,
    "report": cmd_report,
}


def _kv(text):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    k, v = text.split("=", 1)
    return k.strip(), v.strip()


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"key=value config file (default: ${ENV_VAR})")
    common.add_argument("--seed", type=int, help="master random seed")
    common.add_argument("--out", required=True, help="output file or directory")
    common.add_argument("--set", dest="sets", action="append", type=_kv, default=[], metavar="KEY=VALUE",
                        help="override a config value; repeatable")

    parser = argparse.ArgumentParser(prog="flexent", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", parents=[common], help="energy-matched channel plan CSV")
    p.add_argument("--pump", type=float, help="pump frequency, THz")
    p.add_argument("--width", type=float, help="channel width, GHz")
    p.add_argument("--count", type=int, help="number of channel pairs")

    p = sub.add_parser("simulate-jsi", parents=[common], help="simulated JSI raster scan CSV")
    p.add_argument("--pattern", choices=["diagonal", "full"], default="diagonal")
    p.add_argument("--count", type=int)

    p = sub.add_parser("simulate-tomo", parents=[common], help="simulated 36-setting count CSV")
    p.add_argument("--channels", help="e.g. '1-20' or '3,7,9' (default: all)")
    p.add_argument("--integration", type=float, help="seconds per setting")
    p.add_argument("--count", type=int)

    p = sub.add_parser("tomo", parents=[common], help="Bayesian tomography per channel")
    p.add_argument("--counts", required=True)
    p.add_argument("--samples", type=int)
    p.add_argument("--burn-in", type=int)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("metrics", parents=[common], help="entanglement report per channel")
    p.add_argument("--posteriors", required=True, help="directory written by 'tomo'")
    p.add_argument("--jsi", help="JSI CSV for per-channel diagonal CAR")

    p = sub.add_parser("allocate", parents=[common], help="assign channel blocks to requests")
    p.add_argument("--requests", required=True)
    p.add_argument("--report", required=True, help="report.csv written by 'metrics'")
    p.add_argument("--c-ports", type=int)
    p.add_argument("--l-ports", type=int)

    p = sub.add_parser("report", parents=[common], help="plot-data CSVs")
    p.add_argument("--metrics", required=True, help="directory written by 'metrics'")
    p.add_argument("--jsi")
    p.add_argument("--top", type=int, default=3)
    p.add_argument("--bottom", type=int, default=3)
    return parser


_FLAG_KEYS = {
    "pump": "pump_thz",
    "width": "width_ghz",
    "count": "count",
    "integration": "tomo_integration_s",
    "samples": "mcmc_samples",
    "burn_in": "mcmc_burn_in",
    "c_ports": "c_ports",
    "l_ports": "l_ports",
    "seed": "seed",
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    overrides = dict(args.sets)
    for attr, key in _FLAG_KEYS.items():
        if getattr(args, attr, None) is not None:
            overrides[key] = getattr(args, attr)
    args.overrides = overrides
    try:
        cfg = load_config(args.config, overrides)
        COMMANDS[args.command](args, cfg)
    except FlexentError as exc:
        print(f"flexent {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"flexent {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
