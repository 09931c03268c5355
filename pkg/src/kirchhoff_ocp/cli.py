"""Command line front end.

Exit status: 0 when every run converged, 2 when some run did not, 1 on
errors.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from . import experiments
from .config import ConfigError, ExperimentConfig, load_preset, preset_names


def _config(args) -> ExperimentConfig:
    if args.config and args.preset:
        raise ConfigError("use either --config or --preset")
    if args.config:
        cfg = ExperimentConfig.load(args.config)
    elif args.preset:
        cfg = load_preset(args.preset)
    else:
        cfg = ExperimentConfig()
    if args.mesh_level is not None:
        cfg = replace(cfg, mesh_level=args.mesh_level)
    if getattr(args, "warmstart", False):
        cfg = replace(cfg, warmstart=True)
    return cfg


def _say(args, *msg):
    if not args.quiet:
        print(*msg)


def cmd_forward(args, cfg):
    res = experiments.run_forward(cfg, args.out)
    _say(args, f"vertices={res.mesh.n_vertices} s*={res.energy:.12e} residual={res.residual:.3e}")
    return True


def _summary(args, header, rows):
    _say(args, ",".join(header))
    for row in rows:
        _say(args, ",".join(experiments.io.format_value(v) for v in row))


def cmd_solve(args, cfg):
    res = experiments.run_solve(cfg, args.out)
    _say(args, f"vertices={res.mesh.n_vertices} iterations={res.report.iterations} "
               f"converged={res.converged} R={res.report.final.R:.3e}")
    return res.converged


def cmd_sweep_alpha(args, cfg):
    sweep = experiments.run_alpha_sweep(cfg, args.out)
    _summary(args, sweep.header, sweep.rows)
    return sweep.converged


def cmd_sweep_mesh(args, cfg):
    sweep = experiments.run_mesh_sweep(cfg, args.out)
    _summary(args, sweep.header, sweep.rows)
    return sweep.converged


def cmd_sweep_eps(args, cfg):
    sweep = experiments.run_penalty_sweep(cfg, args.out)
    _summary(args, sweep.header, sweep.rows)
    return sweep.converged


COMMANDS = {
    "forward": (cmd_forward, "solve the state equation for u = u_a"),
    "solve": (cmd_solve, "run the semismooth Newton method once"),
    "sweep-alpha": (cmd_sweep_alpha, "non-locality parameter study"),
    "sweep-mesh": (cmd_sweep_mesh, "mesh refinement study"),
    "sweep-eps": (cmd_sweep_eps, "penalty parameter study"),
}


def build_parser():
    parser = argparse.ArgumentParser(prog="kirchhoff-ocp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--preset", help=f"bundled configuration ({', '.join(preset_names())})")
        p.add_argument("--out", help="output directory for CSV and VTK files")
        p.add_argument("--mesh-level", type=int, help="number of uniform refinements + 1")
        p.add_argument("--quiet", action="store_true")
        p.add_argument("-v", "--verbose", action="store_true", help="log every Newton step")
        if name == "sweep-eps":
            p.add_argument("--warmstart", action="store_true",
                           help="start each solve from the previous converged iterate")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        cfg = _config(args)
        ok = COMMANDS[args.command][0](args, cfg)
    except (ConfigError, OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0 if ok else 2


if __name__ == "__main__":
    sys.exit(main())
