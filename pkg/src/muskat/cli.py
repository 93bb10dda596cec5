"""Command-line entry point.

Exit codes: 0 success, 2 invalid configuration, 3 solver left its regime,
4 file input or output failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiments as ex
from . import io as mio
from .config import RunConfig, apply_overrides, load_config
from .errors import ConfigError, NonConvergence, RegimeError

__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_CONFIG", "EXIT_REGIME", "EXIT_IO"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_REGIME = 3
EXIT_IO = 4

COMMANDS = ("run", "dn-check", "oracle-compare", "lyapunov-scan", "contraction", "norms")

_KIND = {
    "run": "evolve",
    "dn-check": "dn-check",
    "oracle-compare": "oracle-compare",
    "lyapunov-scan": "lyapunov-scan",
    "contraction": "contraction",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="muskat", description="One-phase Muskat interface simulator.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "run": "evolve an interface and write diagnostics, snapshots and a manifest",
        "dn-check": "flat exactness, symmetry and Picard telemetry of the DN operator",
        "oracle-compare": "compare the fixed-point and elliptic DN backends",
        "lyapunov-scan": "sign of the Lyapunov integral over random interfaces",
        "contraction": "distance between perturbed runs",
        "norms": "function-space norms of the initial interface",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", type=Path, help="JSON configuration file")
        p.add_argument("--dt", type=float, help="time step")
        p.add_argument("--t-final", type=float, dest="t_final", help="final time")
        p.add_argument("--n", type=int, help="grid points per dimension")
        p.add_argument("--preset", help="initial interface preset")
        p.add_argument("--amplitude", type=float, help="preset amplitude")
        p.add_argument("--seed", type=int, help="random seed")
        p.add_argument("--out", type=str, help="output directory")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config) if args.config is not None else RunConfig()
    overrides = {
        "stepper.dt": args.dt,
        "experiment.t_final": args.t_final,
        "grid.n": args.n,
        "init.preset": args.preset,
        "init.amplitude": args.amplitude,
        "init.seed": args.seed,
        "output.dir": args.out,
    }
    if args.command in _KIND:
        overrides["experiment.kind"] = _KIND[args.command]
    return apply_overrides(cfg, overrides)


def _execute(command: str, cfg: RunConfig) -> tuple[dict, int]:
    out = Path(cfg.output.dir)
    if command == "run":
        mio.ensure_dir(out)
        res = ex.run_evolution(cfg)
        summary = ex.evolution_summary(cfg, res)
        mio.write_run(out, res.rows, res.trajectory, cfg.model_dump(), cfg.params.model_dump(),
                      cfg.output.snapshots, {"summary": summary})
        return summary, EXIT_OK if res.ok else EXIT_REGIME
    handlers = {
        "dn-check": ex.dn_check,
        "oracle-compare": ex.oracle_compare,
        "lyapunov-scan": ex.lyapunov_scan,
        "contraction": ex.contraction,
        "norms": ex.norms_report,
    }
    result = handlers[command](cfg)
    mio.ensure_dir(out)
    mio.write_json(out / f"{command.replace('-', '_')}.json", result)
    mio.write_manifest(out, cfg.model_dump())
    code = EXIT_REGIME if result.get("diverged") else EXIT_OK
    return result, code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        result, code = _execute(args.command, cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RegimeError, NonConvergence) as exc:
        print(f"regime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    except mio.OutputError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    summary = {k: v for k, v in result.items() if not isinstance(v, list)}
    print(json.dumps(summary, indent=2, sort_keys=True, default=str))
    return code


if __name__ == "__main__":
    sys.exit(main())
