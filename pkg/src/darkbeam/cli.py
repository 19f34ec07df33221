"""Command line entry point.

One subcommand per run operation plus validate-config. Exit codes:
0 on success, 2 for configuration problems, 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import MODEL_SIZES, load_config
from .errors import ConfigError, NumericError

OPERATIONS = ("eigen", "follow", "stirap", "beamline", "li6demo", "sweep")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="darkbeam",
        description="Dressed-state beam purification simulator.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", default=None,
                        help="INI configuration file (defaults used when omitted)")
    common.add_argument("--model", type=int, choices=MODEL_SIZES, default=None,
                        help="level-structure size override")
    common.add_argument("--seed", type=int, default=None,
                        help="random seed override")
    common.add_argument("--threads", type=int, default=None,
                        help="compute threads (default: machine parallelism)")
    sub = parser.add_subparsers(dest="operation", required=True)
    for name in OPERATIONS:
        p = sub.add_parser(name, parents=[common],
                           help=f"run the {name} operation")
        p.add_argument("--out", metavar="DIR", default=None,
                       help="output directory (default: [run] output_dir)")
    sub.add_parser("validate-config", parents=[common],
                   help="resolve and validate a configuration, print it, write nothing")
    return parser


def _summarize(operation: str, report: dict) -> list[str]:
    lines = []
    if operation == "eigen":
        for case in report["cases"]:
            if case["dark_state_present"]:
                lines.append(
                    f"{case['case']}: decoupled zero state present"
                    f" (max |E| = {case['max_abs_energy_rads']:.3g} rad/s)"
                )
            else:
                lines.append(
                    f"{case['case']}: no decoupled state; well depth"
                    f" {case['well_depth_rads']:.6g} rad/s"
                    f" ({case['well_depth_k'] * 1e3:.3g} mK)"
                )
    elif operation == "follow":
        for case in report["cases"]:
            lines.append(
                f"{case['case']}: min followed projection"
                f" {case['min_followed_projection']:.6f},"
                f" final norm {case['final_norm']:.6f}"
            )
    elif operation == "stirap":
        pops = ", ".join(f"{k}={v:.6f}" for k, v in sorted(report["final_populations"].items()))
        lines.append(f"{report['mode']}: {pops}")
        lines.append(
            f"plateau ratio {report['plateau_ratio_measured']:.4f}"
            f" (expected {report['plateau_ratio_expected']:.4f})"
        )
    elif operation in ("beamline", "li6demo"):
        purity = report["purity"]
        lines.append(
            "purity "
            + (f"{purity:.6f}" if purity is not None else "undefined (nothing passed)")
            + f", target yield {report['target_yield']:.6f}"
        )
        totals = report["outcome_totals"]
        lines.append(", ".join(f"{k}={v:.4f}" for k, v in sorted(totals.items())))
    elif operation == "sweep":
        lines.append(f"{report['n_rows']} rows")
        defined = [r["purity"] for r in report["rows"] if r["purity"] is not None]
        if defined:
            lines.append(f"best purity {max(defined):.6f}")
    return lines


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {"model": args.model, "seed": args.seed}
    if args.operation != "validate-config":
        overrides["mode"] = args.operation
        overrides["output_dir"] = args.out
    try:
        cfg = load_config(args.config, overrides)
        if args.threads is not None:
            if args.threads <= 0:
                raise ConfigError("--threads must be positive")
            import numba

            numba.set_num_threads(args.threads)
        if args.operation == "validate-config":
            print(json.dumps(cfg.echo(), sort_keys=True, indent=2))
            print(f"config_sha256 = {cfg.sha256()}")
            return 0
        from .experiments import RUN_OPS

        out_dir = cfg.values["run"]["output_dir"]
        report = RUN_OPS[args.operation](cfg, out_dir)
        for line in _summarize(args.operation, report):
            print(line)
        print(f"outputs written to {out_dir}")
        return 0
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
