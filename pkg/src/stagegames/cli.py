"""Command-line front end: ``stagegames <subcommand> ...``.

Exit codes: 0 on success, 2 on invalid input, 3 on numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .blind import blind_pde_residual, make_grid, solve_blind_value
from .discounting import parse_family, weight_sum_identity_check, _iter_weights
from .duration import DEFAULT_EPS_TRUNC, solve_duration_value
from .errors import StageGamesError, ValidationError
from .game import WeightFunction, load_game, parse_partition, parse_weight, uniform_partition
from .kernels import scheme_gap
from .lab import load_sweep_spec, run_sweep, write_csv
from .matrix_game import val


def _emit(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _weight_arg(args) -> WeightFunction:
    lam = getattr(args, "lam", None)
    if lam is not None and args.k:
        raise ValidationError("give either --lambda or --k, not both")
    if lam is not None:
        return WeightFunction.exponential(lam)
    if args.k:
        return parse_weight(args.k)
    raise ValidationError("a weight is required: --k exp:L|unif:T or --lambda L")


def _partition_arg(args, k: WeightFunction):
    part = parse_partition(args.partition)
    if not part.bounded and np.isfinite(k.horizon):
        # a finite-horizon weight needs no tail beyond its support
        part = uniform_partition(part.sup_h, k.horizon)
    return part


def cmd_validate(args):
    game = load_game(args.game)
    print(json.dumps({"valid": True, "S": game.S, "m": game.m, "n": game.n,
                      "q_max": game.q_max, "g_norm": game.g_norm}))


def cmd_val(args):
    with open(args.matrix) as fh:
        raw = json.load(fh)
    A = raw["matrix"] if isinstance(raw, dict) else raw
    try:
        A = np.asarray(A, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"matrix is not numeric: {exc}") from exc
    if A.ndim != 2 or 0 in A.shape or not np.all(np.isfinite(A)):
        raise ValidationError("matrix must be a nonempty finite 2-d array")
    sol = val(A)
    print(json.dumps({"value": sol.value, "x": sol.x_opt.tolist(), "y": sol.y_opt.tolist()}))


def cmd_solve(args):
    game = load_game(args.game)
    k = _weight_arg(args)
    field = solve_duration_value(game, _partition_arg(args, k), k, args.scheme, args.eps,
                                 strategies=True)
    rows = [(t, game.states[w], field.values[n, w])
            for n, t in enumerate(field.times) for w in range(game.S)]
    _emit(write_csv(rows, ("t", "state", "value")), args.out)
    if args.out:
        X, Y = field.strategies
        sidecar = {
            "states": game.states, "actions1": game.actions1, "actions2": game.actions2,
            "times": field.times[:-1].tolist(),
            "x": X.tolist(), "y": Y.tolist(),
        }
        Path(str(args.out) + ".strategies.json").write_text(json.dumps(sidecar, indent=1) + "\n")


def _solve_blind(args):
    game = load_game(args.game)
    k = _weight_arg(args)
    grid = make_grid(game.S, args.grid, allow_large=args.allow_large)
    return game, solve_blind_value(game, _partition_arg(args, k), k, grid, args.eps)


def cmd_solve_blind(args):
    game, field = _solve_blind(args)
    cols = ("t",) + tuple(f"p_{s}" for s in game.states) + ("value",)
    rows = [(t, *field.grid.points[node], field.values[n, node])
            for n, t in enumerate(field.times) for node in range(field.grid.size)]
    _emit(write_csv(rows, cols), args.out)


def cmd_blind_residual(args):
    if args.lam is None:
        raise ValidationError("blind-residual needs --lambda")
    game, field = _solve_blind(args)
    res = blind_pde_residual(game, args.lam, field.grid, field.values[0])
    cols = ("node",) + tuple(f"p_{s}" for s in game.states) + ("residual",)
    rows = [(node, *field.grid.points[node], res[node]) for node in range(field.grid.size)]
    _emit(write_csv(rows, cols), args.out)


def cmd_scheme_gap(args):
    game = load_game(args.game)
    rows = [(h, scheme_gap(game, h)) for h in args.h_list]
    _emit(write_csv(rows, ("h", "gap")), args.out)


def cmd_discount_check(args):
    family = parse_family(args.family, args.lam)
    part = parse_partition(args.partition)
    rows = []
    total = 0.0
    for i, (h, survival, w) in enumerate(_iter_weights(family, part, args.floor)):
        total += w
        rows.append((i, h, survival, w, total, abs(total - 1.0 / args.lam)))
    text = write_csv(rows, ("i", "h", "survival", "weight", "partial_sum", "deviation"))
    if family.kind == "linear":
        text += "# identity_deviation,%.17g\n" % weight_sum_identity_check(args.lam, part, args.floor)
    _emit(text, args.out)


def cmd_sweep(args):
    spec = load_sweep_spec(args.spec)
    if args.out:
        spec.output = None
    report = run_sweep(spec)
    text = report.to_csv()
    if args.out or not spec.output:
        _emit(text, args.out)
    if report.partial:
        print("PartialResults: some configurations failed", file=sys.stderr)
        return 3
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stagegames",
                                     description="Zero-sum stochastic games with short stages.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a game file")
    p.add_argument("game")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("val", help="value and optimal strategies of a matrix game")
    p.add_argument("matrix")
    p.set_defaults(func=cmd_val)

    def weight_opts(p, with_lambda):
        if with_lambda:
            p.add_argument("--lambda", dest="lam", type=float, default=None)
        p.add_argument("--k", default=None, help="exp:L or unif:T")
        p.add_argument("--partition", default="uniform:0.01", help="uniform:h[:T]")
        p.add_argument("--eps", type=float, default=DEFAULT_EPS_TRUNC)
        p.add_argument("--out", default=None)

    p = sub.add_parser("solve", help="perfect-observation value on a partition")
    p.add_argument("game")
    weight_opts(p, with_lambda=False)
    p.add_argument("--scheme", choices=("linear", "exp", "exponential"), default="linear")
    p.set_defaults(func=cmd_solve)

    for name, func, helptext in (("solve-blind", cmd_solve_blind, "state-blind value on a grid"),
                                 ("blind-residual", cmd_blind_residual,
                                  "discounted belief-equation residual per node")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("game")
        weight_opts(p, with_lambda=True)
        p.add_argument("--grid", type=int, default=None, help="grid resolution M")
        p.add_argument("--allow-large", action="store_true")
        p.set_defaults(func=func)

    p = sub.add_parser("scheme-gap", help="distance between Id + h q and exp(h q)")
    p.add_argument("game")
    p.add_argument("--h-list", type=float, nargs="+", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_scheme_gap)

    p = sub.add_parser("discount-check", help="stage weights of a discount family")
    p.add_argument("--family", default="linear", choices=("linear", "lin", "exp", "exponential", "capped"))
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--partition", default="uniform:0.1")
    p.add_argument("--floor", type=float, default=1e-12, help="stop once the survival is below this")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_discount_check)

    p = sub.add_parser("sweep", help="run a convergence sweep from a JSON spec")
    p.add_argument("spec")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code = args.func(args)
    except StageGamesError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return code or 0


if __name__ == "__main__":
    sys.exit(main())
