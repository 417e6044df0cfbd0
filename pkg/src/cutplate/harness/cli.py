"""Command line entry point ``cutplate``."""
import argparse
import sys
import warnings
from pathlib import Path

from ..beam import CutGeometryError
from ..mesh import MeshError
from ..solver import ConvergenceError, SingularSystemError
from .config import ConfigError, load_config
from .study import convergence_study, run, standalone_beam_study, write_artifacts, write_rates


def _n_list(text):
    try:
        ns = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not ns or any(n < 1 for n in ns):
        raise argparse.ArgumentTypeError(f"expected positive integers, got {text!r}")
    return ns


def _common(p):
    p.add_argument("--seed", type=int, default=None, help="seed for the positivity diagnostic")
    p.add_argument("--solver", choices=("direct", "cg"), default=None)
    p.add_argument("--tol", type=float, default=None, help="relative residual tolerance")
    p.add_argument("--out", type=Path, default=None, help="output directory")


def build_parser():
    parser = argparse.ArgumentParser(prog="cutplate", description="Plates reinforced by cut-element beams.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="solve one configured scenario")
    p.add_argument("config", type=Path)
    _common(p)
    p = sub.add_parser("converge", help="manufactured-solution convergence study")
    p.add_argument("config", type=Path)
    p.add_argument("--n", type=_n_list, default=[8, 16, 32, 64])
    _common(p)
    p = sub.add_parser("beam-study", help="standalone clamped beam against the exact midpoint deflection")
    p.add_argument("--n", type=_n_list, default=[8, 16, 32, 64])
    p.add_argument("--gamma", type=float, default=0.1)
    _common(p)
    return parser


def _apply_overrides(cfg, args):
    kw = {}
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.solver is not None:
        kw["solver"] = args.solver
    if args.tol is not None:
        kw["tol"] = args.tol
    if args.out is not None:
        kw["output_dir"] = args.out
    return cfg.with_updates(**kw) if kw else cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = _apply_overrides(load_config(args.config), args)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")  # recorded in report.txt instead
                result = run(cfg)
            out = write_artifacts(result)
            print(f"{cfg.name}: max |u| = {result.max_deflection:.6e}, wrote {out}")
        elif args.command == "converge":
            cfg = _apply_overrides(load_config(args.config), args)
            table = convergence_study(cfg, args.n)
            path = write_rates(table, cfg.output_dir)
            print(table.to_csv(), end="")
            print(f"wrote {path}")
        else:
            out = args.out if args.out is not None else Path("out/beam_study")
            table = standalone_beam_study(
                args.n, gamma=args.gamma, method=args.solver or "direct", tol=args.tol or 1e-10
            )
            path = write_rates(table, out)
            print(table.to_csv(), end="")
            print(f"wrote {path}")
    except (ConfigError, MeshError, CutGeometryError, SingularSystemError, ConvergenceError,
            ValueError, OSError) as exc:
        print(f"cutplate: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
