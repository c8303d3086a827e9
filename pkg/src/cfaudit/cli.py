"""Command line front end: ``cfaudit run|sweep|calibrate|report``."""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from .config import ConfigError, ExperimentConfig, ParseError, load_config
from .monitors import Trigger
from .sim.calibrate import ACFA_OVERHEAD_TARGETS, CalibrationFailed, Fixed, acfa_overhead, calibrate_preset
from .sim.engine import Mode, run_simulation
from .sim.metrics import compute_overhead
from .tcb import TcbConfig

COLUMNS = ["preset", "mode", "cf_size", "seed", "total_runtime_s", "t_app_s", "t_tcb_s", "t_wait_s",
           "t1", "t2", "t3", "t4", "utilization", "overhead_pct"]
SWEEP_KEYS = ("cf_size", "branch_rate", "rtt_ms", "mac_rate", "mode")
SEED_ENV = "CFAUDIT_SEED"


def fmt(x: float) -> str:
    return format(x, ".6g")


def apply_env(cfg: ExperimentConfig) -> ExperimentConfig:
    seed = os.environ.get(SEED_ENV)
    if seed:
        cfg = cfg.with_value("seed", seed)
    return cfg


def simulate(cfg: ExperimentConfig):
    """Run the configured session plus its best-effort baseline; returns
    (csv row dict, SimResult)."""
    wl, link, tcb = cfg.to_workload(), cfg.to_link(), cfg.to_tcb()
    mode = cfg.to_mode()
    res = run_simulation(mode, wl, link, tcb, cfg.to_adversary(), seed=cfg.seed, horizon=cfg.horizon_s)
    if mode.kind == "best-effort" and not cfg.rules and not cfg.device_rules:
        base = res.metrics
    else:
        base = run_simulation(Mode.best_effort(cfg.cf_size), wl, link, tcb, seed=cfg.seed,
                              horizon=cfg.horizon_s).metrics
    m = res.metrics
    m.overhead_vs_baseline = compute_overhead(m, base)
    row = {
        "preset": cfg.preset_name(), "mode": mode.label, "cf_size": str(cfg.cf_size),
        "seed": str(cfg.seed), "total_runtime_s": fmt(m.total_runtime), "t_app_s": fmt(m.t_app),
        "t_tcb_s": fmt(m.t_tcb), "t_wait_s": fmt(m.t_wait),
        **{t.name.lower(): str(m.count(t)) for t in Trigger},
        "utilization": fmt(m.utilization), "overhead_pct": fmt(m.overhead_vs_baseline),
    }
    return row, res


def csv_text(rows, columns=COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _write(path: str, text: str) -> None:
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)


def cmd_run(path: str, out=None) -> int:
    try:
        cfg = apply_env(load_config(path))
        row, res = simulate(cfg)
        _write(cfg.output + ".csv", csv_text([row]))
        _write(cfg.output + ".trace", "\n".join(res.trace_lines()) + "\n")
    except (OSError, ConfigError) as exc:
        print(f"cfaudit: {exc}", file=sys.stderr)
        return 1
    (out or sys.stdout).write(csv_text([row]))
    return res.outcome.exit_code


def _sort_key(key: str, value: str):
    return value if key == "mode" else float(value)


def cmd_sweep(path: str, key: str, values: list[str], workers: int = 1, out=None) -> int:
    try:
        if key not in SWEEP_KEYS:
            raise ParseError(f"cannot sweep {key!r}; choose from {', '.join(SWEEP_KEYS)}")
        values = [v.strip() for v in values if v.strip()]
        if not values:
            raise ParseError("empty value list")
        cfg = apply_env(load_config(path))
        variants = [(v, cfg.with_value(key, v)) for v in values]
        if key != "mode":
            variants.sort(key=lambda p: _sort_key(key, p[0]))
        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            results = list(pool.map(lambda p: simulate(p[1]), variants))
        rows = []
        for (v, _), (row, _) in zip(variants, results):
            rows.append({"sweep_key": key, "sweep_value": v, **row})
        _write(cfg.output + ".csv", csv_text(rows, ["sweep_key", "sweep_value"] + COLUMNS))
        plot = [f"# x={key} overhead_pct utilization t4"]
        plot += [f"{r['sweep_value']} {r['overhead_pct']} {r['utilization']} {r['t4']}" for r in rows]
        _write(cfg.output + ".plot.dat", "\n".join(plot) + "\n")
    except (OSError, ConfigError) as exc:
        print(f"cfaudit: {exc}", file=sys.stderr)
        return 1
    (out or sys.stdout).write(csv_text(rows, ["sweep_key", "sweep_value"] + COLUMNS))
    return max(res.outcome.exit_code for _, res in results)


def cmd_calibrate(app: str, target: float | None = None, mac_rate: float | None = None,
                  fills: float | None = None, out=None) -> int:
    if target is None:
        if app not in ACFA_OVERHEAD_TARGETS:
            print(f"cfaudit: no default target for {app!r}; pass --target", file=sys.stderr)
            return 1
        target = ACFA_OVERHEAD_TARGETS[app]
    fixed = Fixed()
    if mac_rate is not None:
        fixed = Fixed(tcb_cfg=TcbConfig(mac_rate=mac_rate), fills=fixed.fills)
    if fills is not None:
        fixed = Fixed(tcb_cfg=fixed.tcb_cfg, fills=fills)
    try:
        wl = calibrate_preset(app, target, fixed)
    except (CalibrationFailed, ValueError) as exc:
        print(f"cfaudit: {exc}", file=sys.stderr)
        return 1
    (out or sys.stdout).write(f"preset={app} branch_rate={wl.branch_rate!r} total_branches={wl.total_branches} "
              f"mac_rate={fmt(fixed.tcb_cfg.mac_rate)} acfa_overhead_pct={fmt(acfa_overhead(wl, fixed))}\n")
    return 0


def _ratio(row) -> float:
    stalled = float(row["t_tcb_s"]) + float(row["t_wait_s"])
    return float(row["t_app_s"]) / stalled if stalled else float("inf")


def cmd_report(paths: list[str], out=None) -> int:
    """Overhead and utilization-gain table from run/sweep CSVs."""
    rows = []
    try:
        for p in paths:
            with open(p, encoding="utf-8", newline="") as f:
                rows.extend(csv.DictReader(f))
    except OSError as exc:
        print(f"cfaudit: {exc}", file=sys.stderr)
        return 1
    missing = [c for c in ("preset", "mode", "seed", "overhead_pct") if rows and c not in rows[0]]
    if missing:
        print(f"cfaudit: not a cfaudit CSV (missing {', '.join(missing)})", file=sys.stderr)
        return 1
    acfa = {(r["preset"], r["seed"]): r for r in rows if r["mode"] == "acfa"}
    table = []
    for r in rows:
        ref = acfa.get((r["preset"], r["seed"]))
        gain = ""
        if ref is not None and r["mode"] != "best-effort":
            gain = fmt(100 * (_ratio(r) - _ratio(ref)) / _ratio(ref))
        table.append({"preset": r["preset"], "mode": r["mode"], "seed": r["seed"],
                      "overhead_pct": r["overhead_pct"], "utilization_gain_pct": gain})
    (out or sys.stdout).write(csv_text(table, ["preset", "mode", "seed", "overhead_pct", "utilization_gain_pct"]))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cfaudit", description="Control-flow auditing simulator")
    sub = ap.add_subparsers(dest="cmd", required=True)
    p = sub.add_parser("run", help="simulate one configured session")
    p.add_argument("config")
    p = sub.add_parser("sweep", help="repeat a run over values of one key")
    p.add_argument("config")
    p.add_argument("--key", required=True, choices=SWEEP_KEYS)
    p.add_argument("--values", required=True, help="comma separated")
    p.add_argument("--workers", type=int, default=1)
    p = sub.add_parser("calibrate", help="fit a workload to an ACFA overhead")
    p.add_argument("app")
    p.add_argument("--target", type=float)
    p.add_argument("--mac-rate", type=float)
    p.add_argument("--fills", type=float)
    p = sub.add_parser("report", help="summarize CSV output")
    p.add_argument("csv", nargs="+")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.cmd == "run":
        return cmd_run(args.config)
    if args.cmd == "sweep":
        return cmd_sweep(args.config, args.key, args.values.split(","), args.workers)
    if args.cmd == "calibrate":
        return cmd_calibrate(args.app, args.target, args.mac_rate, args.fills)
    return cmd_report(args.csv)


if __name__ == "__main__":
    sys.exit(main())
