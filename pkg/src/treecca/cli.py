"""Command-line front end: simulation, numerics, verification, diagrams.

Thin adapters only; every number comes from the library modules.  Exit
codes: 0 success, 1 configuration error, 2 verification mismatch, 3 no
witness exists, 4 internal invariant breach.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import experiments, heatmap, numerics, verification
from .dynamics import CCA, GHM, ModelParams, run
from .errors import (InternalConsistencyError, NoWitnessError, TreeccaError)
from .structures import (StructureQuery, excitation_witness, extract_witness,
                         mark, verify_excitation_witness, verify_witness)
from .tree import build_dary_ball, build_regular_ball

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_MISMATCH = 2
EXIT_NO_WITNESS = 3
EXIT_INTERNAL = 4

# published minimal-kappa reference values checked by --check-paper-table
REFERENCE_KAPPA_TABLE = {
    2: {2: 3, 3: 5, 4: 7, 5: 8, 6: 10, 7: 11, 8: 12, 9: 14},
    3: {2: 3, 3: 3, 4: 3, 5: 4, 6: 5, 7: 5, 8: 6, 9: 7},
}


class CliConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports config errors via exceptions, not exit code 2."""

    def error(self, message):
        raise CliConfigError(message)


def parse_range(text: str) -> list[int]:
    """Inclusive integer range 'a..b', or a single integer."""
    if ".." in text:
        lo_s, hi_s = text.split("..", 1)
        lo, hi = int(lo_s), int(hi_s)
        if hi < lo:
            raise CliConfigError(f"empty range {text!r}")
        return list(range(lo, hi + 1))
    return [int(text)]


def _build_parser() -> _Parser:
    parser = _Parser(prog="treecca", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    def add_common(p, *names):
        if "config" in names:
            p.add_argument("--config", type=str, default=None,
                           help="JSON file with the same keys as the flags; flags win")
        if "d" in names:
            p.add_argument("--d", type=str, default=None)
        if "theta" in names:
            p.add_argument("--theta", type=str, default=None)
        if "kappa" in names:
            p.add_argument("--kappa", type=str, default=None)
        if "seed" in names:
            p.add_argument("--seed", type=int, default=None)
        if "out" in names:
            p.add_argument("--out", type=str, default=None)

    initial_choices = [experiments.RANDOM, experiments.ALL_ZERO,
                       experiments.DEPTH_MOD]

    p = sub.add_parser("simulate", help="run one trajectory or a trial batch")
    add_common(p, "config", "d", "theta", "kappa", "seed", "out")
    p.add_argument("--model", choices=[CCA, GHM], default=None)
    p.add_argument("--radius", type=int, default=None,
                   help="regular-ball truncation radius")
    p.add_argument("--depth", type=int, default=None,
                   help="d-ary-ball truncation depth (alternative to --radius)")
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--trial", type=int, default=None,
                   help="trial index for a single trajectory")
    p.add_argument("--initial", default=None, choices=initial_choices)
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("fixed-point", help="smallest fixed point of b1/b2")
    add_common(p, "config", "d", "theta", "kappa", "out")
    p.add_argument("--map", dest="map_id", choices=[numerics.B1, numerics.B2],
                   default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--max-iter", type=int, default=None)

    p = sub.add_parser("phase-diagram", help="fixed-point grid over d and kappa")
    add_common(p, "config", "d", "theta", "kappa", "out")
    p.add_argument("--map", dest="map_id", choices=[numerics.B1, numerics.B2],
                   default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--format", dest="fmt", choices=["csv", "svg", "json"],
                   default=None)

    p = sub.add_parser("thresholds", help="minimal kappa for GHM fixation")
    add_common(p, "config", "d", "theta", "out")
    p.add_argument("--refinement",
                   choices=[numerics.GENERAL, numerics.THETA2, numerics.THETA3],
                   default=None,
                   help="default: the theta-specific refinement when theta is 2 or 3")
    p.add_argument("--check-paper-table", action="store_true",
                   help="compare d=2..9 against the published table; exit 2 on mismatch")

    p = sub.add_parser("verify-bounds", help="run the numeric inequality suite")
    add_common(p, "config", "out")
    p.add_argument("--list", action="store_true", dest="list_only",
                   help="print the check inventory without running")
    p.add_argument("--perturb", type=float, default=None,
                   help="test-only: add eps*max(1,|lhs|) to every left side")

    p = sub.add_parser("witness", help="extract and verify a witness subtree")
    add_common(p, "config", "d", "theta", "kappa", "seed", "out")
    p.add_argument("--variant", default=None,
                   choices=["rigid-fort", "strongly-rigid-fort", "rainbow",
                            "excitation"])
    p.add_argument("--radius", type=int, default=None)
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--trial", type=int, default=None)
    p.add_argument("--t", type=int, default=None,
                   help="excitation time (excitation variant only)")
    p.add_argument("--initial", default=None, choices=initial_choices)
    return parser


_DEFAULTS = {
    "simulate": {"trials": 1, "trial": 0, "initial": experiments.RANDOM,
                 "workers": 1},
    "fixed-point": {"tol": numerics.DEFAULT_TOL,
                    "max_iter": numerics.DEFAULT_MAX_ITER},
    "phase-diagram": {"tol": numerics.DEFAULT_TOL,
                      "max_iter": numerics.DEFAULT_MAX_ITER, "fmt": "csv"},
    "thresholds": {},
    "verify-bounds": {"perturb": 0.0},
    "witness": {"trial": 0, "initial": experiments.RANDOM},
}


def _fill_defaults(args):
    for key, value in _DEFAULTS.get(args.command, {}).items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)


def _apply_config(args: argparse.Namespace, parser_keys: set[str]):
    """Fill unset options from --config JSON; flags win; unknown keys rejected."""
    if getattr(args, "config", None) is None:
        return
    with open(args.config) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise CliConfigError("config file must hold a JSON object")
    for key, value in data.items():
        dest = key.replace("-", "_")
        if dest not in parser_keys:
            raise CliConfigError(f"unknown config key {key!r}")
        if getattr(args, dest, None) in (None, False):
            setattr(args, dest, value)


def _need(args, *keys):
    for key in keys:
        if getattr(args, key, None) is None:
            raise CliConfigError(f"missing required option --{key.replace('_', '-')}")


def _scalar(value, name: str) -> int:
    vals = parse_range(str(value))
    if len(vals) != 1:
        raise CliConfigError(f"--{name} must be a single integer here")
    return vals[0]


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _build_topology(args):
    if (args.radius is None) == (args.depth is None):
        raise CliConfigError("exactly one of --radius or --depth is required")
    d = _scalar(args.d, "d")
    if args.radius is not None:
        return build_regular_ball(d, args.radius), args.radius
    return build_dary_ball(d, args.depth), args.depth


def _cmd_simulate(args) -> int:
    _need(args, "model", "d", "theta", "kappa", "horizon", "seed")
    topo, bound = _build_topology(args)
    d = _scalar(args.d, "d")
    theta, kappa = _scalar(args.theta, "theta"), _scalar(args.kappa, "kappa")
    if args.horizon > bound:
        raise CliConfigError(
            f"--horizon {args.horizon} exceeds the light-cone bound "
            f"{bound} of this truncation")
    if args.trials == 1:
        initial = experiments.make_initial(topo, kappa, args.seed, args.trial,
                                           args.initial)
        traj = run(topo, initial, ModelParams(args.model, kappa, theta),
                   args.horizon)
        payload = {
            "model": traj.model, "kappa": traj.kappa, "theta": traj.theta,
            "horizon": traj.horizon,
            "root_colors": traj.root_colors.tolist(),
            "excited_count": traj.excited_count.tolist(),
            "last_excited": traj.last_excited, "censored": traj.censored,
            "lightcone_valid_upto": traj.lightcone_valid_upto,
        }
        _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
        return EXIT_OK
    if args.radius is None:
        raise CliConfigError("trial batches need a regular ball (--radius)")
    if args.horizon != args.radius:
        raise CliConfigError(
            "trial batches report light-cone-exact statistics and need "
            "--horizon equal to --radius")
    if args.model == GHM:
        report = experiments.estimate_tau_tail(
            d, theta, kappa, args.radius, args.trials, args.seed,
            workers=args.workers, initial=args.initial)
    else:
        report = experiments.fluctuation_window(
            d, theta, kappa, args.radius, args.trials, args.seed,
            workers=args.workers, initial=args.initial)
    _emit(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def _cmd_fixed_point(args) -> int:
    _need(args, "map_id", "d", "theta", "kappa")
    result = numerics.kleene_fp(
        args.map_id, _scalar(args.d, "d"), _scalar(args.theta, "theta"),
        _scalar(args.kappa, "kappa"), tol=args.tol, max_iter=args.max_iter)
    _emit(json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def _cmd_phase_diagram(args) -> int:
    _need(args, "map_id", "d", "theta", "kappa")
    grid = numerics.phase_grid(
        args.map_id, _scalar(args.theta, "theta"), parse_range(str(args.d)),
        parse_range(str(args.kappa)), tol=args.tol, max_iter=args.max_iter)
    if args.fmt == "svg":
        _emit(heatmap.render_phase_grid(grid), args.out)
    elif args.fmt == "json":
        payload = {"map": grid.map_id, "theta": grid.theta,
                   "d_values": grid.d_values.tolist(),
                   "kappa_values": grid.kappa_values.tolist(),
                   "y_star": grid.y_star.tolist()}
        _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    else:
        lines = [",".join(str(c) for c in row) for row in grid.to_rows()]
        _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _cmd_thresholds(args) -> int:
    _need(args, "theta", "d")
    theta = _scalar(args.theta, "theta")
    ds = parse_range(str(args.d))
    refinement = args.refinement
    if refinement is None:
        refinement = {2: numerics.THETA2, 3: numerics.THETA3}.get(
            theta, numerics.GENERAL)
    rows = [(d, numerics.ghm_kappa_threshold(theta, d, refinement)) for d in ds]
    lines = ["d,kappa_min"] + [f"{d},{k}" for d, k in rows]
    _emit("\n".join(lines) + "\n", args.out)
    if args.check_paper_table:
        if theta not in REFERENCE_KAPPA_TABLE:
            raise CliConfigError(
                f"no reference table row for theta={theta}")
        expected = REFERENCE_KAPPA_TABLE[theta]
        mismatches = [(d, k, expected[d]) for d, k in rows
                      if d in expected and k != expected[d]]
        if mismatches:
            for d, got, want in mismatches:
                sys.stderr.write(
                    f"table mismatch at d={d}: computed {got}, published {want}\n")
            return EXIT_MISMATCH
    return EXIT_OK


def _cmd_verify_bounds(args) -> int:
    if args.list_only:
        _emit("\n".join(verification.list_check_names()) + "\n", args.out)
        return EXIT_OK
    results = verification.run_checks(perturb=args.perturb)
    lines = ["check,lhs,rhs,passed,detail"]
    for r in results:
        lines.append(f"{r.name},{r.lhs!r},{r.rhs!r},{r.passed},{r.detail}")
    n_fail = sum(not r.passed for r in results)
    lines.append(f"summary,,,{n_fail == 0},{len(results)} checks {n_fail} failed")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if n_fail == 0 else EXIT_MISMATCH


def _witness_payload(topo, coloring, witness) -> dict:
    nodes = []
    for v in witness.nodes:
        v = int(v)
        nodes.append({
            "id": v,
            "parent": int(topo.parent[v]),
            "depth": int(topo.node_depth[v]),
            "color": int(coloring.colors[v]),
            "selected": [int(w) for w in witness.selected.get(v, [])],
        })
    return {"version": 1, "variant": witness.variant,
            "depth": witness.depth, "nodes": nodes}


def _cmd_witness(args) -> int:
    _need(args, "variant", "d", "theta", "kappa", "seed")
    topo, _ = _build_topology(args)
    theta, kappa = _scalar(args.theta, "theta"), _scalar(args.kappa, "kappa")
    coloring = experiments.make_initial(topo, kappa, args.seed, args.trial,
                                        args.initial)
    if args.variant == "excitation":
        if args.t is None:
            raise CliConfigError("excitation witnesses need --t")
        witness = excitation_witness(topo, coloring, args.t, theta)
        try:
            verify_excitation_witness(topo, coloring, witness, args.t, theta)
        except NoWitnessError as exc:
            sys.stderr.write(f"internal error: witness failed re-verification: {exc}\n")
            return EXIT_INTERNAL
    else:
        query = StructureQuery(variant=args.variant, theta=theta, kappa=kappa)
        marks = mark(topo, coloring, query)
        witness = extract_witness(topo, coloring, marks)
        try:
            verify_witness(topo, coloring, witness, query)
        except NoWitnessError as exc:
            sys.stderr.write(f"internal error: witness failed re-verification: {exc}\n")
            return EXIT_INTERNAL
    payload = _witness_payload(topo, coloring, witness)
    payload["params"] = {"d": _scalar(args.d, "d"), "theta": theta,
                         "kappa": kappa, "seed": args.seed,
                         "trial": args.trial, "initial": args.initial}
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "fixed-point": _cmd_fixed_point,
    "phase-diagram": _cmd_phase_diagram,
    "thresholds": _cmd_thresholds,
    "verify-bounds": _cmd_verify_bounds,
    "witness": _cmd_witness,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise CliConfigError("a subcommand is required")
        _apply_config(args, set(vars(args)))
        _fill_defaults(args)
        return _COMMANDS[args.command](args)
    except NoWitnessError as exc:
        sys.stderr.write(f"no witness: {exc}\n")
        return EXIT_NO_WITNESS
    except InternalConsistencyError as exc:
        sys.stderr.write(f"internal error: {exc}\n")
        return EXIT_INTERNAL
    except (CliConfigError, TreeccaError, FileNotFoundError,
            OverflowError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
