"""Command-line front end, run as `python -m isac_scaling <command>`.

Exit codes: 0 ok, 1 configuration error, 2 invariant violation, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import platform
import sys
from pathlib import Path
from typing import Optional

import numpy as np
import scipy

from . import __version__, analytic
from .config import ConfigError, ExperimentConfig, load_config
from .experiment import build_instance, run_sweep
from .verify import verify_suite

log = logging.getLogger("isac_scaling")

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_RUNTIME = 0, 1, 2, 3


class InvariantViolation(RuntimeError):
    pass


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--manifest", help="re-run the configuration stored in a manifest")
    for f in dataclasses.fields(ExperimentConfig):
        if f.name == "mode":
            continue
        p.add_argument(f"--{f.name.replace('_', '-')}", dest=f"cfg_{f.name}", default=None, metavar="V")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="python -m isac_scaling", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("simulate", "run replicates at the given sizes and exponents"),
        ("sweep", "size/exponent sweep with a slope table"),
        ("analytic", "tradeoff curves in closed form"),
        ("verify", "invariant suite, writes a pass/fail ledger"),
        ("export", "dump one instance with its lattice and routes as JSON"),
    ):
        p = sub.add_parser(name, help=help_)
        _add_config_flags(p)
        if name == "verify":
            p.add_argument("--inject-schedule-m", type=int, default=None,
                           help="corrupt the schedule with this slot parameter (negative test)")
        if name == "export":
            p.add_argument("--replicate", type=int, default=0)
    return ap


def config_from_args(args) -> ExperimentConfig:
    overrides = {}
    for k, v in vars(args).items():
        if k.startswith("cfg_") and v is not None:
            overrides[k[4:]] = v
    overrides["mode"] = args.command
    if args.manifest:
        try:
            stored = json.loads(Path(args.manifest).read_text())["config"]
        except (OSError, KeyError, ValueError) as e:
            raise ConfigError("manifest", str(e)) from None
        stored.pop("mode", None)
        stored.update(overrides)
        return ExperimentConfig.from_dict(stored).validate()
    return load_config(args.config, overrides)


def manifest(cfg: ExperimentConfig, command: str, outputs: list, status: str = "ok", extra: Optional[dict] = None) -> dict:
    return {
        "command": command,
        "status": status,
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "versions": {
            "isac_scaling": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "outputs": sorted(outputs),
        **(extra or {}),
    }


def _write(out: Path, name: str, text: str, written: list) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)
    written.append(name)


def _slope_csv(slopes: dict) -> str:
    lines = ["key,metric,slope,stderr"]
    for key in sorted(slopes):
        for metric in sorted(slopes[key]):
            v = slopes[key][metric]
            lines.append(f"{key},{metric},{v['slope']!r},{v['stderr']!r}")
    return "\n".join(lines) + "\n"


def cmd_run(cfg: ExperimentConfig, command: str) -> int:
    out = Path(cfg.output)
    report = run_sweep(cfg, progress=lambda r: log.info("n=%g gamma=%g rep=%d done", r.n, r.gamma, r.replicate))
    written: list = []
    _write(out, "report.json", report.to_json(), written)
    _write(out, "metrics.csv", report.to_csv(), written)
    if command == "sweep" or len(cfg.n) >= 3:
        _write(out, "slopes.csv", _slope_csv(report.slopes), written)
    status = "ok"
    unr = max((r.unroutable_fraction for r in report.instances), default=0.0)
    if unr > cfg.unroutable_ceiling:
        status = "warning"
        log.warning("unroutable fraction %.3f exceeds the ceiling %.3f", unr, cfg.unroutable_ceiling)
    viol = sum(r.layer_violations for r in report.instances)
    if viol:
        status = "invariant_violation"
    _write(out, "manifest.json", json.dumps(manifest(cfg, command, written + ["manifest.json"], status), indent=1,
                                            sort_keys=True), written)
    print(f"{command}: {len(report.instances)} instances -> {out}/ ({status})")
    for key in sorted(report.slopes):
        s = report.slopes[key]
        if "highway_throughput" in s and "min_sensing_distance" in s:
            print(f"  {key}: throughput slope {s['highway_throughput']['slope']:+.3f} "
                  f"(se {s['highway_throughput']['stderr']:.3f}), "
                  f"sensing slope {s['min_sensing_distance']['slope']:+.3f}")
    if viol:
        raise InvariantViolation(f"{viol} receivers above the layer bound")
    return EXIT_OK


def cmd_analytic(cfg: ExperimentConfig) -> int:
    out = Path(cfg.output)
    written: list = []
    grid = cfg.gamma_grid()
    for ac, as_ in cfg.analytic_pairs:
        rows = analytic.tradeoff_curve(cfg.analytic_n, ac, as_, grid)
        _write(out, f"curves_ac{ac:g}_as{as_:g}.csv", analytic.curves_to_csv(rows), written)
    _write(out, "manifest.json", json.dumps(manifest(cfg, "analytic", written + ["manifest.json"]), indent=1,
                                            sort_keys=True), written)
    print(f"analytic: {len(cfg.analytic_pairs)} curve files -> {out}/")
    return EXIT_OK


def cmd_verify(cfg: ExperimentConfig, inject_M: Optional[int]) -> int:
    ledger = verify_suite(cfg, inject_schedule_M=inject_M)
    out = Path(cfg.output)
    written: list = []
    _write(out, "verify.json", ledger.to_json(), written)
    for c in ledger.checks:
        print(f"{c.status.upper():5s} {c.key}{'' if c.hard else ' (soft)'}")
    _write(out, "manifest.json", json.dumps(
        manifest(cfg, "verify", written + ["manifest.json"], "ok" if ledger.ok else "invariant_violation"),
        indent=1, sort_keys=True), written)
    return EXIT_OK if ledger.ok else EXIT_INVARIANT


def cmd_export(cfg: ExperimentConfig, replicate: int) -> int:
    out = Path(cfg.output)
    written: list = []
    for n in cfg.n:
        for g in cfg.gamma:
            b = build_instance(cfg, n, g, replicate)
            r = b["routes"]
            tag = f"n{n:g}_g{g:g}_r{replicate}"
            _write(out, f"instance_{tag}.json", b["instance"].to_json(), written)
            _write(out, f"lattice_{tag}.json", json.dumps(b["lattice"].to_dict(), sort_keys=True), written)
            routes = {
                "dest": r.dest.tolist(),
                "routable": r.routable.tolist(),
                "entry_relay": r.entry_relay.tolist(),
                "exit_relay": r.exit_relay.tolist(),
                "D": r.D.tolist(),
            }
            _write(out, f"routes_{tag}.json", json.dumps(routes), written)
    _write(out, "manifest.json", json.dumps(manifest(cfg, "export", written + ["manifest.json"]), indent=1,
                                            sort_keys=True), written)
    print(f"export: {len(written) - 1} files -> {out}/")
    return EXIT_OK


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command in ("simulate", "sweep"):
            return cmd_run(cfg, args.command)
        if args.command == "analytic":
            return cmd_analytic(cfg)
        if args.command == "verify":
            return cmd_verify(cfg, args.inject_schedule_m)
        return cmd_export(cfg, args.replicate)
    except InvariantViolation as e:
        print(f"invariant violation: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"runtime failure: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
