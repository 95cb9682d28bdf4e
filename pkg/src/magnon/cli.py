"""Command-line front end.

Every subcommand builds the same JSON-style config accepted by
``magnon run --config``, so flag runs and config runs share one code path.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure,
4 boundary contamination of a transmission window.
"""

import argparse
import sys
from pathlib import Path

from . import __version__
from .disorder import DisorderSpec, generate_correlated_sequence
from .errors import BoundaryContaminationError, EnsembleError, InvalidInputError, InvalidSpecError, NumericalFailure
from .experiment import ConfigError, load_config, normalize_config, run_experiment, write_disorder_csv
from .observables import stationary_window
from .oracle import bessel_amplitude

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_BOUNDARY = 0, 2, 3, 4


def parse_number_list(text: str) -> list:
    """``"0,0.5,...,3"`` style lists; an ellipsis extends the step of the first two values."""
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if any(p in ("...", "…") for p in parts):
        i = parts.index("..." if "..." in parts else "…")
        if i < 2 or i != len(parts) - 2:
            raise argparse.ArgumentTypeError("ellipsis needs two leading values and one final value")
        first, second, last = float(parts[0]), float(parts[1]), float(parts[-1])
        step = second - first
        if step <= 0 or last < first:
            raise argparse.ArgumentTypeError("ellipsis list must be increasing")
        count = int(round((last - first) / step)) + 1
        return [round(first + k * step, 12) for k in range(count)]
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number list: {text!r}") from None


def _int_list(text):
    try:
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer list: {text!r}") from None


def _alpha_value(args):
    if getattr(args, "ordered", False):
        return None
    if getattr(args, "alpha_list", None) is not None:
        return args.alpha_list
    return args.alpha


def _add_chain(p, default_alpha=None):
    p.add_argument("--n", type=int, required=True, help="number of sites N")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--alpha", type=float, default=default_alpha, help="disorder correlation exponent")
    group.add_argument("--alpha-list", type=parse_number_list, help="comma list, e.g. 0,0.5,...,3")
    group.add_argument("--ordered", action="store_true", help="uniform chain, no disorder")
    p.add_argument("--coupling", type=float, default=1.0, help="exchange coupling J")
    p.add_argument("--realizations", type=int, default=100)
    p.add_argument("--base-seed", "--seed", dest="base_seed", type=int, default=0)
    p.add_argument("--out-dir", default=None)


def _common(args, experiment):
    cfg = {
        "experiment": experiment,
        "n_sites": args.n,
        "alpha": _alpha_value(args),
        "coupling": args.coupling,
        "realizations": args.realizations,
        "base_seed": args.base_seed,
    }
    if args.out_dir:
        cfg["out_dir"] = args.out_dir
    return cfg


def _window_value(args):
    return "full" if args.full_window else args.window


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="magnon", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment from a JSON config (or a previous meta.json)")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", default=None)

    p = sub.add_parser("disorder-sample", help="write one normalised disorder sequence as CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="CSV path (columns n,epsilon)")

    p = sub.add_parser("evolve", help="site probabilities/amplitudes after spectral evolution")
    _add_chain(p)
    p.add_argument("--x0", type=int, default=None)
    p.add_argument("--time", type=float, default=None)
    p.add_argument("--t-max", type=float, default=None)
    p.add_argument("--dt", type=float, default=1.0)

    p = sub.add_parser("entropy-scan", help="block entropy S(L) of sites x0+1..x0+L")
    _add_chain(p)
    p.add_argument("--x0", type=int, default=None)
    p.add_argument("--time", type=float, default=40.0)
    p.add_argument("--L-max", dest="L_max", type=int, default=None)

    for name, helptext in (
        ("concurrence-map", "pairwise concurrence snapshot C_ij at one time"),
        ("max-concurrence", "running maximum of C_ij over a time window"),
    ):
        p = sub.add_parser(name, help=helptext)
        _add_chain(p)
        p.add_argument("--x0", type=int, default=None)
        if name == "concurrence-map":
            p.add_argument("--time", type=float, required=True)
        else:
            p.add_argument("--t-max", type=float, default=200.0)
            p.add_argument("--dt", type=float, default=0.1)
        p.add_argument("--window", type=int, default=150, help="half-width around x0")
        p.add_argument("--full-window", action="store_true")

    p = sub.add_parser("transmission", help="entanglement transmission/reflection versus alpha")
    _add_chain(p)
    p.add_argument("--sender", type=int, default=1)
    p.add_argument("--r0", type=_int_list, default=[20], help="reference site(s), comma separated")
    p.add_argument("--dt", type=float, default=0.5)

    p = sub.add_parser("oracle", help="infinite-chain Bessel amplitude at a distance and time")
    p.add_argument("--distance", type=int, required=True)
    p.add_argument("--time", type=float, required=True)
    p.add_argument("--out-dir", default=None)
    return parser


def config_from_args(args) -> dict:
    cmd = args.command
    if cmd == "oracle":
        cfg = {"experiment": "oracle", "distance": args.distance, "time": args.time}
        if args.out_dir:
            cfg["out_dir"] = args.out_dir
        return cfg
    cfg = _common(args, cmd)
    if cmd in ("evolve", "entropy-scan", "concurrence-map", "max-concurrence") and args.x0 is not None:
        cfg["x0"] = args.x0
    if cmd == "evolve":
        if args.t_max is not None:
            cfg["time_grid"] = {"start": 0.0, "stop": args.t_max, "step": args.dt}
        else:
            cfg["time"] = 0.0 if args.time is None else args.time
    elif cmd == "entropy-scan":
        cfg["time"] = args.time
        if args.L_max is not None:
            cfg["L_max"] = args.L_max
    elif cmd == "concurrence-map":
        cfg["time"] = args.time
        cfg["site_window"] = _window_value(args)
    elif cmd == "max-concurrence":
        cfg["time_grid"] = {"start": 0.0, "stop": args.t_max, "step": args.dt}
        cfg["site_window"] = _window_value(args)
    elif cmd == "transmission":
        cfg["sender"] = args.sender
        cfg["r0_list"] = args.r0
        if args.dt != 0.5:
            grid = stationary_window(args.n, args.sender, args.coupling, args.dt)
            cfg["time_grid"] = {"start": float(grid[0]), "stop": float(grid[-1]), "step": args.dt}
    return cfg


def _disorder_sample(args) -> int:
    try:
        seq = generate_correlated_sequence(DisorderSpec(args.n, args.alpha, args.seed))
    except InvalidSpecError as exc:
        print(f"magnon: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    write_disorder_csv(Path(args.out), seq.values, args.alpha, args.seed)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "disorder-sample":
        return _disorder_sample(args)
    source = "<flags>"
    try:
        if args.command == "run":
            source = args.config
            cfg = load_config(args.config)
        else:
            cfg = normalize_config(config_from_args(args))
        if args.command == "oracle" and args.out_dir is None:
            w = bessel_amplitude(0, cfg["distance"], cfg["time"])
            print(f"distance={cfg['distance']} time={cfg['time']!r} amplitude={w.real!r}{w.imag:+}j probability={abs(w) ** 2!r}")
            return EXIT_OK
        outcome = run_experiment(cfg, getattr(args, "out_dir", None))
    except ConfigError as exc:
        print(f"magnon: config error: {exc.located(source)}", file=sys.stderr)
        return EXIT_CONFIG
    except BoundaryContaminationError as exc:
        print(f"magnon: boundary contamination: {exc}", file=sys.stderr)
        return EXIT_BOUNDARY
    except (EnsembleError, NumericalFailure) as exc:
        print(f"magnon: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (InvalidInputError, InvalidSpecError) as exc:
        print(f"magnon: config error: {source}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"wrote {len(outcome.files)} data file(s) to {outcome.out_dir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
