"""Command-line entry point.

Subcommands:
  exact <hamiltonian>          print the exact ground-state energy
  vqe | palqo | dmd <config>   run an experiment from a TOML config
  shots <p> <M> <eps> <iters>  print the measurement-shot estimate
  compare <metrics.json ...>   tabulate speedup and energy gap across runs

The Hamiltonian argument of `exact` is either a term-list file or a builder
shorthand such as `tfim:n=4,j=1,h=0.5`. Exit codes: 0 success, 2 validation
error, 3 non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .ansatz import AnsatzError
from .config import ConfigError, load_experiment_config
from .experiment import run_experiment
from .pauli import (
    Hamiltonian,
    HamiltonianError,
    build_heisenberg,
    build_tfim,
    build_xxz,
    exact_ground_energy,
    parse_hamiltonian_file,
)
from .vqe import ShotModel, shot_cost

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NOT_CONVERGED = 3

# shorthand key -> (builder kwarg, default), mirroring the TOML defaults
_BUILDERS = {
    "tfim": (build_tfim, {"j": ("J", 1.0), "h": ("h", 1.0)}),
    "heisenberg": (
        build_heisenberg,
        {"jx": ("Jx", 1.0), "jy": ("Jy", 1.0), "jz": ("Jz", 1.0), "h": ("h", 0.0)},
    ),
    "xxz": (build_xxz, {"j": ("J", 1.0), "jp": ("Jp", 1.0), "delta": ("delta", 0.0)}),
}


def parse_hamiltonian_arg(arg: str) -> Hamiltonian:
    """A file path, or `builder:key=value,...` shorthand."""
    path = Path(arg)
    if path.is_file():
        return parse_hamiltonian_file(path.read_text())
    name, _, rest = arg.partition(":")
    if name not in _BUILDERS:
        raise ConfigError(
            f"{arg!r} is neither a file nor a known builder "
            f"({', '.join(sorted(_BUILDERS))})"
        )
    builder, params = _BUILDERS[name]
    kwargs = {kwarg: default for kwarg, default in params.values()}
    n = None
    for item in filter(None, rest.split(",")):
        key, sep, value = item.partition("=")
        if not sep or (key != "n" and key not in params):
            allowed = ("n", *params)
            raise ConfigError(f"bad builder parameter {item!r} (allowed: {allowed})")
        try:
            if key == "n":
                n = int(value)
            else:
                kwargs[params[key][0]] = float(value)
        except ValueError:
            raise ConfigError(f"bad numeric value in {item!r}") from None
    if n is None:
        raise ConfigError("builder shorthand requires n=<qubits>")
    return builder(n, **kwargs)


def _cmd_exact(args) -> int:
    h = parse_hamiltonian_arg(args.hamiltonian)
    print(repr(exact_ground_energy(h)))
    return EXIT_OK


def _cmd_run(args) -> int:
    config = load_experiment_config(args.config)
    config.method = args.command
    result = run_experiment(config, output_root=args.output_root)
    agg = result.aggregate
    print(f"method={agg['method']} reference_energy={agg['reference_energy']!r}")
    for seed, m in sorted(result.per_seed.items()):
        speedup = "n/a" if m.speedup is None else f"{m.speedup:.3f}"
        print(
            f"seed={seed} delta_e={m.delta_e:.3e} "
            f"iterations={m.quantum_iterations} shots={m.shot_total} "
            f"speedup={speedup} converged={m.converged}"
        )
    if agg["speedup_median"] is not None:
        print(
            f"speedup median={agg['speedup_median']:.3f} "
            f"min={agg['speedup_min']:.3f} max={agg['speedup_max']:.3f}"
        )
    print(f"artifacts: {result.output_dir}")
    if not result.all_converged:
        print("warning: not all seeds converged", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _cmd_shots(args) -> int:
    model = ShotModel(
        num_terms=args.num_terms, epsilon=args.epsilon, param_count=args.param_count
    )
    print(shot_cost(model, args.iters))
    return EXIT_OK


def _cmd_compare(args) -> int:
    header = f"{'run':<30} {'seed':>5} {'speedup':>10} {'delta_e':>12} {'shots':>16}"
    print(header)
    for metrics_path in args.metrics:
        path = Path(metrics_path)
        if not path.is_file():
            raise ConfigError(f"metrics file not found: {path}")
        try:
            payload = json.loads(path.read_text())
            seeds = payload["seeds"]
            label = f"{path.parent.name}/{payload['aggregate']['method']}"
        except (json.JSONDecodeError, KeyError) as exc:
            raise ConfigError(f"{path}: not a metrics file ({exc})") from None
        for seed, m in sorted(seeds.items(), key=lambda kv: int(kv[0])):
            speedup = "n/a" if m["speedup"] is None else f"{m['speedup']:.3f}"
            print(
                f"{label:<30} {seed:>5} {speedup:>10} "
                f"{m['delta_e']:>12.3e} {m['shot_total']:>16}"
            )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qaccel",
        description="Surrogate-accelerated variational ground-state search.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_exact = sub.add_parser("exact", help="print the exact ground-state energy")
    p_exact.add_argument("hamiltonian", help="term-list file or builder shorthand")
    p_exact.set_defaults(fn=_cmd_exact)

    for name, text in (
        ("vqe", "plain gradient-descent run"),
        ("palqo", "surrogate-accelerated run"),
        ("dmd", "linear-baseline accelerated run"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("config", help="TOML experiment config")
        p.add_argument("--output-root", default=None, help="artifact root directory")
        p.set_defaults(fn=_cmd_run)

    p_shots = sub.add_parser("shots", help="measurement-shot estimate 2pM/eps^2 * iters")
    p_shots.add_argument("param_count", type=int)
    p_shots.add_argument("num_terms", type=int)
    p_shots.add_argument("epsilon", type=float)
    p_shots.add_argument("iters", type=int)
    p_shots.set_defaults(fn=_cmd_shots)

    p_cmp = sub.add_parser("compare", help="tabulate metrics across runs")
    p_cmp.add_argument("metrics", nargs="+", help="metrics.json files")
    p_cmp.set_defaults(fn=_cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "vqe":
        args.command = "vanilla"
    try:
        return args.fn(args)
    except (ConfigError, HamiltonianError, AnsatzError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def entry() -> None:
    sys.exit(main())
