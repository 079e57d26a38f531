"""Command-line entry point.

Subcommands: ``verify``, ``physical``, ``sweep``, ``custom``.  Exit codes:
0 on full success, 2 when one or more schemes failed (partial results
written), 1 on configuration errors.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .cases import (
    physical_preset, run_custom_case, run_ns_sweep, run_physical_case,
    run_verification_case, verification_preset,
)
from .config import load_config, parse_duration
from .errors import StswallError


def _add_common(parser: argparse.ArgumentParser, default_out: str) -> None:
    parser.add_argument("--config", help="INI case file overriding the preset")
    parser.add_argument("--out", default=default_out, help="output directory")
    parser.add_argument("--scheme", help="comma list of schemes (euler,df,rkc,rkl)")
    parser.add_argument("--ns", help="super-step counts as rkc,rkl (e.g. 10,20)")
    parser.add_argument("--dx", type=float, help="grid spacing override")
    parser.add_argument("--dt", help="Euler time step override (accepts s/min/h/d suffixes)")
    parser.add_argument("--tau", help="final time override (accepts s/min/h/d suffixes)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stswall",
        description="Coupled heat-and-moisture wall simulator with super-time-stepping",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("verify", help="dimensionless verification comparison"), "out_verify")
    _add_common(sub.add_parser("physical", help="rammed-earth drying study"), "out_physical")
    p_sweep = sub.add_parser("sweep", help="super-step count sweep")
    _add_common(p_sweep, "out_sweep")
    p_custom = sub.add_parser("custom", help="run a user-provided case file")
    _add_common(p_custom, "out_custom")
    return parser


def _apply_overrides(cfg, args, dimensionless: bool) -> None:
    if args.scheme:
        cfg.schemes = [s.strip() for s in args.scheme.split(",") if s.strip()]
    if args.ns:
        vals = [int(x) for x in args.ns.split(",") if x.strip()]
        if len(vals) == 1:
            cfg.ns = {"rkc": vals[0], "rkl": vals[0]}
        elif len(vals) == 2:
            cfg.ns = {"rkc": vals[0], "rkl": vals[1]}
        else:
            cfg.sweep_ns = vals
    if args.dx is not None:
        cfg.dx = args.dx
    unit = "s"
    if args.dt:
        cfg.dt_euler = float(args.dt) if dimensionless else parse_duration(args.dt, unit)
    if args.tau:
        cfg.tau = float(args.tau) if dimensionless else parse_duration(args.tau, unit)
        cfg.tau_days = cfg.tau if dimensionless else cfg.tau / 86400.0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            cfg = load_config(args.config) if args.config else verification_preset()
            _apply_overrides(cfg, args, dimensionless=True)
            result = run_verification_case(cfg, args.out)
            _print_records(result.records)
        elif args.command == "physical":
            cfg = load_config(args.config) if args.config else physical_preset()
            _apply_overrides(cfg, args, dimensionless=False)
            result = run_physical_case(cfg, args.out)
            _print_records(result.records)
            for scheme, info in result.policy_counts.items():
                print(f"policy @365d {scheme}: dt={info['dt_s']:g} s, N_t={info['n_t']}")
        elif args.command == "sweep":
            cfg = load_config(args.config) if args.config else verification_preset()
            _apply_overrides(cfg, args, dimensionless=True)
            if args.ns:
                cfg.sweep_ns = [int(x) for x in args.ns.split(",") if x.strip()]
            result = run_ns_sweep(cfg, out_dir=args.out)
            for scheme, slope in result.slopes.items():
                print(f"{scheme}: error slope vs N_S  solution={slope['solution']:.3f}  "
                      f"u={slope['u']:.3f}  v={slope['v']:.3f}")
        else:
            if not args.config:
                print("error: custom requires --config PATH", file=sys.stderr)
                return 1
            cfg = load_config(args.config)
            _apply_overrides(cfg, args, dimensionless=cfg.kind != "physical")
            result = run_custom_case(cfg, args.out)
            _print_records(result.records)
    except StswallError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if result.failures:
        for name, msg in result.failures.items():
            print(f"FAILED {name}: {msg}", file=sys.stderr)
        return 2
    return 0


def _print_records(records) -> None:
    for rec in records:
        parts = [f"{rec.scheme:>6}", f"dt={rec.dt:.4g}", f"N_t={rec.n_t}",
                 f"rho_Ndt={rec.rho_ndt_pct:.3g}%"]
        if rec.epsinf_u is not None:
            parts.append(f"epsinf(u)={rec.epsinf_u:.3g} epsinf(v)={rec.epsinf_v:.3g}")
            parts.append(f"scd(u)={rec.scd_u:.2f} scd(v)={rec.scd_v:.2f}")
        parts.append(f"cpu={rec.cpu_s:.3g}s rho_cpu={rec.rho_cpu_pct:.3g}%")
        if rec.status != "ok":
            parts.append(f"[{rec.status}]")
        print("  ".join(parts))


if __name__ == "__main__":
    sys.exit(main())
