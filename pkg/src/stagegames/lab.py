"""Convergence experiments: random instances, refinement sweeps, CSV reports."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .blind import BeliefGrid, _blind_backward, blind_pde_residual, measure_lipschitz
from .discounting import DiscountFamily, family_equivalence_gap, parse_family
from .duration import (DEFAULT_EPS_TRUNC, limit_equation_residual, solve_discounted_fixed_point,
                       solve_duration_value)
from .errors import StageGamesError, ValidationError
from .game import Game, WeightFunction, kernel_from_matrix, load_game, make_game, parse_weight, \
    uniform_partition

EXPERIMENTS = ("scheme-gap-value", "discounted-consistency", "blind-convergence",
               "family-equivalence", "residual-decay", "model-equivalence")

COLUMNS = ("experiment", "game", "level", "h", "M", "lambda", "k", "metric", "slope",
           "eps_trunc", "tol", "extra", "status")


class SweepSpecError(ValidationError):
    pass


@dataclass(frozen=True)
class RandomGameSpec:
    seed: int
    S: int = 2
    m: int = 2
    n: int = 2
    payoff_range: tuple = (-1.0, 1.0)
    q_max: float = 1.0


def random_game(spec: RandomGameSpec) -> Game:
    """Uniform payoffs and ``q = q_max (P - Id)`` for a random row-stochastic ``P``."""
    if min(spec.S, spec.m, spec.n) < 1:
        raise ValidationError("dimensions must be at least 1")
    if not 0 <= spec.q_max <= 1:
        raise ValidationError("q_max must lie in [0, 1]")
    rng = np.random.default_rng(spec.seed)
    lo, hi = spec.payoff_range
    g = rng.uniform(lo, hi, size=(spec.m, spec.n, spec.S))
    P = rng.uniform(size=(spec.m, spec.n, spec.S, spec.S))
    P /= P.sum(axis=-1, keepdims=True)
    q = spec.q_max * kernel_from_matrix(P)
    # re-centre the diagonal so rows sum to zero after scaling
    diag = np.arange(spec.S)
    q[..., diag, diag] = 0.0
    q[..., diag, diag] = -q.sum(axis=-1)
    return make_game(g, q)


def fit_slope(hs, errors, discard_largest: bool = True) -> float:
    """Least-squares slope of ``log(error)`` against ``log(h)``.

    The largest ``h`` is dropped as pre-asymptotic when at least three
    points remain; nonpositive errors give ``nan``.
    """
    hs = np.asarray(hs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if discard_largest and hs.size >= 3:
        keep = hs != hs.max()
        hs, errors = hs[keep], errors[keep]
    if hs.size < 2 or np.any(errors <= 0):
        return math.nan
    return float(np.polyfit(np.log(hs), np.log(errors), 1)[0])


def format_float(x) -> str:
    if isinstance(x, str):
        return x
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return "%.17g" % float(x)


def write_csv(rows, columns, out=None) -> str:
    """CSV with a header row; floats with 17 significant digits."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        cells = [row.get(c) for c in columns] if isinstance(row, dict) else row
        writer.writerow([format_float(c) for c in cells])
    text = buf.getvalue()
    if out is not None:
        Path(out).write_text(text)
    return text


# ---------------------------------------------------------------------------
# Sweeps


@dataclass
class SweepSpec:
    experiment: str
    games: list
    h_list: list = field(default_factory=list)
    M_list: list = field(default_factory=list)
    k: str | None = None
    lam: float = 1.0
    horizon: float = 2.0
    eps_trunc: float = DEFAULT_EPS_TRUNC
    tol: float = 1e-10
    families: tuple = ("linear", "exponential")
    C: float = 1.0
    model: str = "perfect"
    output: str | None = None
    threads: int | None = None

    @classmethod
    def from_dict(cls, raw: dict, base_dir=".") -> "SweepSpec":
        raw = dict(raw)
        games = raw.pop("games", None)
        if games is None and "game" in raw:
            games = [raw.pop("game")]
        if not games:
            raise SweepSpecError("sweep needs 'game' or 'games'")
        resolved = []
        for g in games:
            if isinstance(g, str):
                g = {"file": g}
            if "file" in g:
                g = dict(g, file=str(Path(base_dir) / g["file"]))
            resolved.append(g)
        if "lambda" in raw:
            raw["lam"] = raw.pop("lambda")
        if "eps" in raw:
            raw["eps_trunc"] = raw.pop("eps")
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise SweepSpecError(f"unknown sweep fields: {sorted(unknown)}")
        spec = cls(games=resolved, **raw)
        spec.check()
        return spec

    def check(self):
        if self.experiment not in EXPERIMENTS:
            raise SweepSpecError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        hs = list(self.h_list)
        if self.experiment != "blind-convergence" or hs:
            if len(hs) < 1:
                raise SweepSpecError("h_list must not be empty")
            if any(b >= a for a, b in zip(hs, hs[1:])) or any(h <= 0 for h in hs):
                raise SweepSpecError("h_list must be positive and strictly decreasing")
        if self.experiment == "blind-convergence" or (self.experiment == "residual-decay"
                                                      and self.model == "blind"):
            if len(self.M_list) != len(hs):
                raise SweepSpecError("M_list must pair one grid resolution with each h")
        if self.model not in ("perfect", "blind"):
            raise SweepSpecError("model must be 'perfect' or 'blind'")


def load_sweep_spec(path) -> SweepSpec:
    with open(path) as fh:
        raw = json.load(fh)
    return SweepSpec.from_dict(raw, base_dir=Path(path).parent)


def _game_from_source(src: dict) -> tuple[str, Game]:
    if "file" in src:
        return src["file"], load_game(src["file"])
    spec = RandomGameSpec(seed=int(src["seed"]), S=int(src.get("S", 2)), m=int(src.get("m", 2)),
                          n=int(src.get("n", 2)), q_max=float(src.get("q_max", 1.0)),
                          payoff_range=tuple(src.get("payoff_range", (-1.0, 1.0))))
    label = f"seed={spec.seed};S={spec.S};m={spec.m};n={spec.n};q_max={spec.q_max:g}"
    return label, random_game(spec)


def _weight(spec: SweepSpec) -> WeightFunction:
    if spec.k:
        return parse_weight(spec.k)
    if spec.experiment in ("model-equivalence", "scheme-gap-value"):
        return WeightFunction.uniform(spec.horizon)
    return WeightFunction.exponential(spec.lam)


def _partition(h, k: WeightFunction):
    return uniform_partition(h, k.horizon)


def _check_admissible(game: Game, spec: SweepSpec):
    for h in spec.h_list:
        if h * game.q_max > 1 + 1e-12:
            raise SweepSpecError(f"h={h} is not admissible for q_max={game.q_max}")


def _perfect_metric(spec: SweepSpec, game: Game, h: float):
    k = _weight(spec)
    if spec.experiment == "discounted-consistency":
        k = WeightFunction.exponential(spec.lam)
        v = solve_duration_value(game, _partition(h, k), k, "linear", spec.eps_trunc)
        v_star = solve_discounted_fixed_point(game, spec.lam, spec.tol)
        return float(np.abs(v.values[0] - v_star).max()), ""
    if spec.experiment in ("scheme-gap-value", "model-equivalence"):
        part = _partition(h, k)
        lin = solve_duration_value(game, part, k, "linear", spec.eps_trunc)
        ex = solve_duration_value(game, part, k, "exponential", spec.eps_trunc)
        if spec.experiment == "model-equivalence":
            return float(np.abs(lin.values[0] - ex.values[0]).max()), ""
        return float(np.abs(lin.values - ex.values).max()), ""
    if spec.experiment == "family-equivalence":
        famA, famB = (parse_family(f, spec.lam) for f in spec.families)
        return family_equivalence_gap(famA, famB, uniform_partition(h), spec.C), \
            f"{famA.kind} vs {famB.kind}"
    if spec.experiment == "residual-decay":
        v = solve_duration_value(game, _partition(h, k), k, "linear", spec.eps_trunc)
        nodes = v.times[:-1]
        nodes = nodes[nodes < spec.horizon]
        worst = max(float(np.abs(limit_equation_residual(game, k, v, t)).max()) for t in nodes)
        return worst, f"max over {len(nodes)} nodes"
    raise SweepSpecError(f"{spec.experiment} is not a perfect-observation experiment")


def _blind_level(spec: SweepSpec, game: Game, h: float, M: int, scheme="linear"):
    k = _weight(spec)
    return _blind_backward(game, _partition(h, k), k, BeliefGrid(game.S, M), spec.eps_trunc, scheme)


def _run_game(spec: SweepSpec, gi: int, src: dict):
    label, game = _game_from_source(src)
    if spec.experiment != "family-equivalence":
        _check_admissible(game, spec)
    k_text = spec.k or ("exp:%g" % spec.lam if spec.experiment in
                        ("discounted-consistency", "residual-decay", "blind-convergence")
                        else "unif:%g" % spec.horizon)
    if spec.experiment == "discounted-consistency":
        k_text = "exp:%g" % spec.lam
    rows = []
    base = {"experiment": spec.experiment, "game": label, "lambda": spec.lam, "k": k_text,
            "eps_trunc": spec.eps_trunc, "tol": spec.tol}
    if spec.experiment == "blind-convergence":
        fields = [_blind_level(spec, game, h, M) for h, M in zip(spec.h_list, spec.M_list)]
        finest = fields[-1]
        coarse_pts = BeliefGrid(game.S, spec.M_list[0]).points
        ref = finest.grid.interpolate(finest.values[0], coarse_pts)
        for level, (h, M, f) in enumerate(zip(spec.h_list, spec.M_list, fields)):
            gap = float(np.abs(f.grid.interpolate(f.values[0], coarse_pts) - ref).max())
            exp_field = _blind_level(spec, game, h, M, scheme="exponential")
            map_gap = float(np.abs(exp_field.values[0] - f.values[0]).max())
            lip = measure_lipschitz(f)
            rows.append(dict(base, level=level, h=h, M=M, metric=gap, status="ok",
                             extra=f"L_p={lip['L_p']:.17g};L_t={lip['L_t']:.17g};"
                                   f"belief_map_gap={map_gap:.17g}"))
        slope = fit_slope(spec.h_list[:-1], [r["metric"] for r in rows[:-1]])
    elif spec.experiment == "residual-decay" and spec.model == "blind":
        for level, (h, M) in enumerate(zip(spec.h_list, spec.M_list)):
            f = _blind_level(spec, game, h, M)
            res = blind_pde_residual(game, spec.lam, f.grid, f.values[0])
            rows.append(dict(base, level=level, h=h, M=M, metric=float(np.abs(res).max()),
                             extra=f"mean={float(np.abs(res).mean()):.17g}", status="ok"))
        slope = fit_slope(spec.h_list, [r["metric"] for r in rows])
    else:
        for level, h in enumerate(spec.h_list):
            metric, extra = _perfect_metric(spec, game, h)
            rows.append(dict(base, level=level, h=h, metric=metric, extra=extra, status="ok"))
        slope = fit_slope(spec.h_list, [r["metric"] for r in rows])
    for r in rows:
        r["slope"] = slope
    return gi, rows


@dataclass
class SweepReport:
    rows: list
    partial: bool = False

    def to_csv(self, out=None) -> str:
        return write_csv(self.rows, COLUMNS, out)

    def series(self, game_index: int = 0):
        games = sorted({r["game"] for r in self.rows}, key=[r["game"] for r in self.rows].index)
        label = games[game_index]
        return [r for r in self.rows if r["game"] == label]


def _thread_count(spec: SweepSpec) -> int:
    env = os.environ.get("STAGEGAMES_THREADS")
    if env:
        return max(1, int(env))
    return max(1, spec.threads or 1)


def run_sweep(spec: SweepSpec) -> SweepReport:
    """Run every game of the sweep; rows are ordered by (game index, level).

    A failing game contributes one ``status=error`` row and marks the
    report partial.
    """
    spec.check()

    def job(item):
        gi, src = item
        try:
            return _run_game(spec, gi, src)
        except StageGamesError as exc:
            label = src.get("file") or f"seed={src.get('seed')}"
            return gi, [{"experiment": spec.experiment, "game": label, "level": 0,
                         "status": f"error: {type(exc).__name__}: {exc}",
                         "eps_trunc": spec.eps_trunc, "tol": spec.tol}]

    items = list(enumerate(spec.games))
    threads = _thread_count(spec)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, items))
    else:
        results = [job(it) for it in items]
    rows = [r for _, rs in sorted(results, key=lambda x: x[0]) for r in rs]
    report = SweepReport(rows, partial=any(r["status"] != "ok" for r in rows))
    if spec.output:
        report.to_csv(spec.output)
    return report
