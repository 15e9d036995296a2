"""Command-line front-end: every pipeline as a subcommand.

Outputs are plot-ready CSV (6 significant digits, config embedded as a
leading comment line) or full-precision JSON (config embedded in the
document).  All stochastic subcommands require an explicit seed.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import analyze as ana
from . import optimize as opt
from . import simulate as sim
from .binning import (PARITY_BETA_SCALE, Majority, Parity, TiePolicy,
                      parity_chsh_analytic)
from .errors import ManyPairsError
from .pairstats import SETTING_PAIRS, settings_from_beta, werner_correlators

OUTDIR_ENV = "MANYPAIRS_OUTDIR"


def _parse_int_range(text: str) -> list[int]:
    """Inclusive 'a..b' range or comma-separated integers."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(t) for t in text.split(",") if t]


def _parse_float_list(text: str, points: int = 11) -> list[float]:
    """Comma-separated floats, or 'a..b' expanded to `points` values."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(np.linspace(float(lo), float(hi), points))
    return [float(t) for t in text.split(",") if t]


def _strategy(args) -> Majority | Parity:
    if args.strategy == "parity":
        return Parity()
    return Majority(TiePolicy(args.tie))


def _mode(args) -> opt.SettingsMode:
    return opt.SettingsMode(args.mode)


def _resolve_out(path: str | None) -> Path | None:
    if path is None:
        return None
    p = Path(path)
    outdir = os.environ.get(OUTDIR_ENV)
    if outdir and not p.is_absolute():
        p = Path(outdir) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _emit(config: dict, columns: list[str], rows: list[tuple],
          extra: dict, args) -> None:
    """Write a result table as CSV or JSON, embedding config for provenance."""
    out = _resolve_out(args.out)
    if args.format == "json":
        doc = {"config": config, "columns": columns,
               "rows": [list(r) for r in rows]}
        doc.update(extra)
        text = json.dumps(doc, indent=2) + "\n"
    else:
        lines = ["# config: " + json.dumps(config)]
        for key, value in extra.items():
            lines.append(f"# {key}: {json.dumps(value)}")
        lines.append(",".join(columns))
        for row in rows:
            cells = []
            for v in row:
                if isinstance(v, float):
                    cells.append(f"{v:.6g}")
                else:
                    cells.append(str(v))
            lines.append(",".join(cells))
        text = "\n".join(lines) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _config_dict(args, keys) -> dict:
    return {k: getattr(args, k) for k in keys if getattr(args, k) is not None}


def cmd_scan_vc(args) -> int:
    strategy = _strategy(args)
    n_values = _parse_int_range(args.n)
    curve = opt.scan_critical_visibilities(n_values, strategy, _mode(args),
                                           width=args.width)
    rows = []
    for n, vc in curve.points:
        row = [n, vc, args.strategy]
        if curve.fit is not None:
            row.append(curve.fit.predict(n))
        if isinstance(strategy, Parity):
            row.append(opt.parity_vc_approx(n))
        rows.append(tuple(row))
    columns = ["n", "v_c", "strategy"]
    if curve.fit is not None:
        columns.append("v_c_fit")
    if isinstance(strategy, Parity):
        columns.append("v_c_linear_approx")
    extra = {"monotone": curve.monotone}
    if curve.fit is not None:
        extra["fit"] = {"c1": curve.fit.c1, "c2": curve.fit.c2,
                        "residual": curve.fit.residual}
    config = _config_dict(args, ["command", "strategy", "tie", "mode", "n",
                                 "width"])
    _emit(config, columns, rows, extra, args)
    return 0


def cmd_max_s(args) -> int:
    strategy = _strategy(args)
    n_values = _parse_int_range(args.n)
    betas = _parse_float_list(args.beta, args.beta_points)
    rows = [(beta, n, opt.family_chsh(beta, args.v, n, strategy))
            for n in n_values for beta in betas]
    config = _config_dict(args, ["command", "strategy", "tie", "n", "beta",
                                 "v"])
    _emit(config, ["beta", "n", "s"], rows, {}, args)
    return 0


def cmd_simulate(args) -> int:
    table = werner_correlators(settings_from_beta(args.beta), args.v)
    overrides = {}
    for item in args.override or []:
        key, value = item.split("=", 1)
        x, y = (int(t) for t in key.split(","))
        overrides[(x, y)] = float(value)
    detector = sim.DetectorModel(eta_t_a=args.eta_t_a, eta_r_a=args.eta_r_a,
                                 eta_t_b=args.eta_t_b, eta_r_b=args.eta_r_b)
    streams = []
    for (x, y) in SETTING_PAIRS:
        pair_table = table
        if (x, y) in overrides:
            d = table.to_json_dict()
            d[f"e{x}{y}"] = overrides[(x, y)]
            pair_table = table.from_json_dict(d)
        extra = {"beta": args.beta, "visibility": args.v}
        if args.symmetrize:
            streams.extend(sim.generate_symmetrized(
                pair_table, (x, y), args.events, detector, seed=args.seed,
                discard_prob=args.discard_prob, extra_meta=extra))
        else:
            streams.append(sim.generate_run(
                pair_table, (x, y), args.events, detector, seed=args.seed,
                discard_prob=args.discard_prob, extra_meta=extra))
    out = _resolve_out(args.out)
    if out is None:
        raise ManyPairsError("simulate requires --out")  # pragma: no cover
    if args.format == "csv":
        sim.write_csv(streams, out)
    else:
        sim.write_jsonl(streams, out)
    return 0


def _criterion(text: str):
    if text == "point":
        return ana.PointEstimate()
    if text.startswith("ksigma:"):
        return ana.MinusKSigma(k=float(text.split(":", 1)[1]))
    raise ManyPairsError(f"unknown criterion {text!r}")


def cmd_analyze(args) -> int:
    strategy = _strategy(args)
    streams = []
    for path in args.files:
        streams.extend(ana.read_streams(path))
    by_beta: dict[float, list] = {}
    for stream in streams:
        beta = float(stream.meta.get("beta", 0.0))
        by_beta.setdefault(beta, []).append(stream)
    sequences_per_beta = {beta: ana.sequences_from_streams(group)
                          for beta, group in by_beta.items()}
    threads = args.threads if args.threads > 0 else (os.cpu_count() or 1)
    curve = ana.find_nc(sequences_per_beta, strategy,
                        _parse_int_range(args.n),
                        criterion=_criterion(args.criterion),
                        resamples=args.resamples, seed=args.seed,
                        threads=threads)
    rows = list(curve.entries)
    config = _config_dict(args, ["command", "strategy", "tie", "n",
                                 "resamples", "seed", "criterion"])
    extra = {"summary": {"strategy": args.strategy,
                         "nCritical": curve.n_critical,
                         "criterion": args.criterion}}
    if curve.note:
        extra["note"] = curve.note
    _emit(config, ["beta", "n", "s", "sigma"], rows, extra, args)
    return 0


def cmd_compare(args) -> int:
    v_values = _parse_float_list(args.v, args.v_points)
    n_values = _parse_int_range(args.n)
    cmp_ = opt.binning_comparison(v_values, n_values, _mode(args),
                                  crossover_tol=args.tol)
    config = _config_dict(args, ["command", "v", "n", "mode", "tol"])
    extra = {"winners": [list(w) for w in cmp_.winners],
             "crossover": cmp_.crossover}
    _emit(config, ["v", "n", "s_majority", "s_parity"], list(cmp_.rows),
          extra, args)
    return 0


def cmd_ratio(args) -> int:
    v_values = _parse_float_list(args.v, args.v_points)
    rows = [(v, opt.violation_ratio(v)) for v in v_values]
    config = _config_dict(args, ["command", "v"])
    _emit(config, ["v", "ratio"], rows, {}, args)
    return 0


def _add_common(p: argparse.ArgumentParser, strategy: bool = True) -> None:
    if strategy:
        p.add_argument("--strategy", choices=["majority", "parity"],
                       default="majority")
        p.add_argument("--tie", choices=[t.value for t in TiePolicy],
                       default=TiePolicy.TIE_TO_MINUS.value,
                       help="majority-vote tie policy for even n")
    p.add_argument("--out", default=None,
                   help=f"output path (relative paths land in ${OUTDIR_ENV} "
                        "when set; default stdout)")
    p.add_argument("--format", choices=["csv", "json"], default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="manypairs",
        description="Collective-measurement CHSH toolkit: exact theory, "
                    "critical-noise scans, event simulation and analysis.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scan-vc", help="critical visibility vs pair count")
    _add_common(p)
    p.add_argument("--n", required=True, help="pair counts, e.g. 2..64")
    p.add_argument("--mode", choices=[m.value for m in opt.SettingsMode],
                   default=opt.SettingsMode.BETA_FAMILY.value)
    p.add_argument("--width", type=float, default=1e-5)
    p.set_defaults(func=cmd_scan_vc)

    p = sub.add_parser("max-s", help="CHSH value vs beta for fixed n set")
    _add_common(p)
    p.add_argument("--n", required=True)
    p.add_argument("--beta", required=True,
                   help="comma list or lo..hi (see --beta-points)")
    p.add_argument("--beta-points", type=int, default=64)
    p.add_argument("--v", type=float, default=1.0)
    p.set_defaults(func=cmd_max_s)

    p = sub.add_parser("simulate", help="generate coincidence event files")
    _add_common(p, strategy=False)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--v", type=float, required=True)
    p.add_argument("--events", type=int, default=sim.DEFAULT_EVENTS_PER_RUN)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--symmetrize", action="store_true",
                   help="emit all four 45-degree basis variants")
    p.add_argument("--eta-t-a", type=float, default=1.0)
    p.add_argument("--eta-r-a", type=float, default=1.0)
    p.add_argument("--eta-t-b", type=float, default=1.0)
    p.add_argument("--eta-r-b", type=float, default=1.0)
    p.add_argument("--discard-prob", type=float, default=0.0)
    p.add_argument("--override", action="append", default=None,
                   metavar="X,Y=E",
                   help="per-setting-pair correlator override (colored noise)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="cluster, bin and bootstrap S_n")
    _add_common(p)
    p.add_argument("--files", nargs="+", required=True)
    p.add_argument("--n", required=True)
    p.add_argument("--resamples", type=int, default=1000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--criterion", default="point",
                   help="'point' or 'ksigma:K'")
    p.add_argument("--threads", type=int, default=1,
                   help="bootstrap worker threads (0 = auto)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("compare", help="majority vs parity over a (V, n) grid")
    _add_common(p, strategy=False)
    p.add_argument("--v", required=True)
    p.add_argument("--v-points", type=int, default=11)
    p.add_argument("--n", required=True)
    p.add_argument("--mode", choices=[m.value for m in opt.SettingsMode],
                   default=opt.SettingsMode.BETA_FAMILY.value)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("ratio", help="remaining parity violation at n_c/2")
    _add_common(p, strategy=False)
    p.add_argument("--v", required=True)
    p.add_argument("--v-points", type=int, default=11)
    p.set_defaults(func=cmd_ratio)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ManyPairsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
