"""Command-line front end: run episodes, compare controllers, sweep a
config key, and execute the oracle self-tests. Outputs are CSV files and
JSON summaries for offline inspection."""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import DEFAULTS, build_scenario, parse_config
from .errors import ConfigError
from .oracles import run_selftest
from .sim import TrajectoryRecord, run_episode, summarize

EXIT_OK = 0
EXIT_SAFETY_BREACH = 2
EXIT_QP_INFEASIBLE = 3
EXIT_CONFIG_ERROR = 4

_STATUS_EXIT = {
    "OK": EXIT_OK,
    "SAFETY_BREACH": EXIT_SAFETY_BREACH,
    "QP_INFEASIBLE": EXIT_QP_INFEASIBLE,
    "STEP_UNDERFLOW": EXIT_SAFETY_BREACH,
}


def _fmt(v):
    return f"{v:.17g}"


def write_csv(record: TrajectoryRecord, path):
    """CSV rows at dt_out with 17-significant-digit values and LF endings."""
    n = record.x.shape[1]
    m = record.u.shape[1]
    L = record.Wc.shape[1]
    header = (["t"]
              + [f"x{i+1}" for i in range(n)]
              + [f"u{i+1}" for i in range(m)]
              + ["h", "B", "Vhat", "delta"]
              + [f"Wc{i+1}" for i in range(L)]
              + [f"Wa{i+1}" for i in range(L)]
              + ["minEigGamma", "c1", "J", "status"])
    R = len(record.t)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            for i in range(R):
                row_status = record.status if i == R - 1 else "OK"
                vals = ([record.t[i]] + list(record.x[i]) + list(record.u[i])
                        + [record.h[i], record.B[i], record.Vhat[i], record.delta[i]]
                        + list(record.Wc[i]) + list(record.Wa[i])
                        + [record.min_eig_gamma[i], record.c1[i], record.J[i]])
                fh.write(",".join(_fmt(v) for v in vals) + f",{row_status}\n")
    except OSError as exc:
        raise OSError(f"cannot write trajectory CSV to {path}: {exc}") from exc


def write_panels(record: TrajectoryRecord, stem):
    """Two-column plot-ready files: state norm, barrier value, input magnitude."""
    panels = {
        "xnorm": np.linalg.norm(record.x, axis=1),
        "h": record.h,
        "uinf": np.max(np.abs(record.u), axis=1),
    }
    for name, series in panels.items():
        path = f"{stem}_panel_{name}.dat"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for t, v in zip(record.t, series):
                fh.write(f"{_fmt(t)} {_fmt(v)}\n")


def write_summary(summary_dict, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary_dict, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_values(args):
    values = parse_config(args.config) if args.config else dict(DEFAULTS)
    if getattr(args, "controller", None):
        values["sim.controller"] = args.controller
    if getattr(args, "seed", None) is not None:
        values["gains.seed"] = args.seed
    if getattr(args, "t_final", None) is not None:
        values["sim.t_final"] = args.t_final
    return values


def _run_one(values):
    scn = build_scenario(values)
    record = run_episode(scn)
    return record, summarize(record)


def cmd_run(args):
    values = _load_values(args)
    record, summary = _run_one(values)
    write_csv(record, args.out)
    if args.summary:
        write_summary(summary.as_dict(), args.summary)
    print(f"{record.controller}: status={record.status} min_h={summary.min_h:.6g} "
          f"terminal_x={summary.terminal_x_norm:.6g} J={summary.total_J:.6g}")
    return _STATUS_EXIT.get(record.status, EXIT_OK)


def cmd_compare(args):
    values = _load_values(args)
    stem = str(Path(args.out).with_suffix("")) if args.out else "compare"
    records = {}
    summaries = {}
    for ctrl in ("adp", "qp"):
        v = dict(values)
        v["sim.controller"] = ctrl
        record, summary = _run_one(v)
        records[ctrl] = record
        summaries[ctrl] = summary
        write_csv(record, f"{stem}_{ctrl}.csv")
        write_panels(record, f"{stem}_{ctrl}")
    joint = {
        "adp": summaries["adp"].as_dict(),
        "qp": summaries["qp"].as_dict(),
        "terminal_x_norm_adp": summaries["adp"].terminal_x_norm,
        "terminal_x_norm_qp": summaries["qp"].terminal_x_norm,
        "adp_converges_better": summaries["adp"].terminal_x_norm < summaries["qp"].terminal_x_norm,
    }
    write_summary(joint, args.summary or f"{stem}_summary.json")
    for ctrl in ("adp", "qp"):
        s = summaries[ctrl]
        print(f"{ctrl}: status={s.status} min_h={s.min_h:.6g} "
              f"terminal_x={s.terminal_x_norm:.6g} J={s.total_J:.6g}")
    worst = max(_STATUS_EXIT.get(r.status, EXIT_OK) for r in records.values())
    return worst


def cmd_sweep(args):
    values = _load_values(args)
    if args.sweep_key not in DEFAULTS:
        raise ConfigError(f"unknown sweep key {args.sweep_key!r}")
    import ast
    sweep_values = [ast.literal_eval(tok) for tok in args.sweep_values.split(";")]
    threads = int(os.environ.get("SAFEADP_THREADS", "4"))
    stem = str(Path(args.out).with_suffix("")) if args.out else "sweep"

    def job(idx_val):
        idx, val = idx_val
        v = dict(values)
        v[args.sweep_key] = val
        record, summary = _run_one(v)
        write_csv(record, f"{stem}_{idx:03d}.csv")
        d = summary.as_dict()
        d["sweep_key"] = args.sweep_key
        d["sweep_value"] = val
        write_summary(d, f"{stem}_{idx:03d}_summary.json")
        return record.status, d

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(job, enumerate(sweep_values)))
    for (status, d) in results:
        print(f"{args.sweep_key}={d['sweep_value']}: status={status} "
              f"min_h={d['min_h']:.6g} terminal_x={d['terminal_x_norm']:.6g}")
    return max(_STATUS_EXIT.get(status, EXIT_OK) for status, _ in results)


def cmd_selftest(_args):
    results = run_selftest()
    all_ok = True
    for name, ok, detail in results:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        all_ok = all_ok and ok
    return EXIT_OK if all_ok else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="safeadp",
                                     description="Barrier-embedded safe optimal control runner")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_controller=True):
        p.add_argument("--config", help="config file (flat dotted keys)")
        p.add_argument("--seed", type=int, help="RNG seed (overrides gains.seed)")
        p.add_argument("--t-final", dest="t_final", type=float, help="episode length in seconds")
        p.add_argument("--out", help="output CSV path / stem")
        p.add_argument("--summary", help="summary JSON path")
        if with_controller:
            p.add_argument("--controller", choices=["adp", "qp"])

    p_run = sub.add_parser("run", help="run one episode")
    common(p_run)
    p_run.set_defaults(func=cmd_run, out="traj.csv")

    p_cmp = sub.add_parser("compare", help="run both controllers with shared geometry/seed")
    common(p_cmp, with_controller=False)
    p_cmp.set_defaults(func=cmd_compare, out="compare.csv")

    p_sw = sub.add_parser("sweep", help="vary one config key over a list of values")
    common(p_sw)
    p_sw.add_argument("--sweep-key", required=True)
    p_sw.add_argument("--sweep-values", required=True,
                      help="semicolon-separated literals, e.g. '0.01;0.05' or '[3,3];[3,3.5]'")
    p_sw.set_defaults(func=cmd_sweep, out="sweep.csv")

    p_st = sub.add_parser("selftest", help="run the oracle suites")
    p_st.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
