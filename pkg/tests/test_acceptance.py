"""Acceptance criteria 1-12.

Each test prints one ``PASS``/``FAIL`` line and then asserts.  Run directly
(``python tests/test_acceptance.py``) to get the twelve lines without pytest.
"""

import functools
import json
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from stagegames import (DiscountFamily, RandomGameSpec, WeightFunction, belief_step,
                        blind_pde_residual, family_equivalence_gap, fit_slope, make_game, make_grid,
                        make_partition, measure_lipschitz, product_lower_bound_gap, random_game,
                        save_game, scheme_gap, shapley_apply, solve_blind_value,
                        solve_discounted_fixed_point, solve_duration_value, transition,
                        uniform_partition, val, val_oracle_2x2, weight_sum_identity_check)
from stagegames.duration import stage_payoff
from stagegames.game import TailRule

SEED = 20261015
_capture = {"manager": None}


@pytest.fixture(autouse=True)
def _show_lines(pytestconfig):
    _capture["manager"] = pytestconfig.pluginmanager.getplugin("capturemanager")
    yield
    _capture["manager"] = None


def report(number, ok, detail, started):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d}: {detail} ({time.perf_counter() - started:.1f}s)"
    manager = _capture["manager"]
    if manager is not None:
        with manager.global_and_fixture_disabled():
            print("\n" + line)
    else:
        print(line)
    assert ok, line


def game(seed, S=2, m=2, n=2, q_max=1.0):
    return random_game(RandomGameSpec(seed=seed, S=S, m=m, n=n, q_max=q_max))


def game_family(count, seed, S_range=(1, 4), mn_range=(1, 3)):
    rng = np.random.default_rng(seed)
    return [game(int(rng.integers(2**63)), int(rng.integers(S_range[0], S_range[1] + 1)),
                 int(rng.integers(mn_range[0], mn_range[1] + 1)),
                 int(rng.integers(mn_range[0], mn_range[1] + 1))) for _ in range(count)]


# 1 ---------------------------------------------------------------------------

def test_criterion_01_matrix_game():
    started = time.perf_counter()
    rng = np.random.default_rng(SEED + 1)
    oracle_err = max(abs(val(A).value - val_oracle_2x2(A))
                     for A in rng.uniform(-10, 10, size=(1000, 2, 2)))
    rps = abs(val([[0, -1, 1], [1, 0, -1], [-1, 1, 0]]).value)
    prop_err = 0.0
    for _ in range(1000):
        m, n = rng.integers(1, 6, size=2)
        A = rng.uniform(-10, 10, size=(m, n))
        B = A + rng.uniform(-3, 3, size=(m, n))
        c = rng.uniform(-10, 10)
        vA, vB = val(A).value, val(B).value
        prop_err = max(prop_err,
                       abs(val(A + c).value - vA - c),
                       abs(val(-A.T).value + vA),
                       abs(vA - vB) - np.abs(A - B).max(),
                       val(A).value - val(np.maximum(A, B)).value)
    ok = oracle_err <= 1e-8 and rps <= 1e-9 and prop_err <= 1e-8
    report(1, ok, f"2x2 oracle err {oracle_err:.1e}, RPS |value| {rps:.1e}, "
                  f"worst property violation {prop_err:.1e}", started)


# 2 ---------------------------------------------------------------------------

def test_criterion_02_shapley_operator():
    started = time.perf_counter()
    rng = np.random.default_rng(SEED + 2)
    worst_nonexp = worst_perturb = -np.inf
    for g in game_family(1000, SEED + 2):
        h = float(rng.uniform(0.01, 1.0))
        k = WeightFunction.exponential(float(rng.uniform(0.2, 3.0)))
        t0 = float(rng.uniform(0, 3))
        lin, ex = transition(g, h, "linear"), transition(g, h, "exponential")
        p_lin = stage_payoff(g, k, t0, t0 + h, "linear")
        p_exp = stage_payoff(g, k, t0, t0 + h, "exponential")
        f, f2 = rng.normal(scale=rng.uniform(0.1, 5), size=(2, g.S))
        a = shapley_apply(g, p_lin, lin, f)
        worst_nonexp = max(worst_nonexp,
                           np.abs(a - shapley_apply(g, p_lin, lin, f2)).max() - np.abs(f - f2).max())
        bound = (np.abs(p_lin - p_exp).max()
                 + np.abs(lin.matrices - ex.matrices).sum(axis=-1).max() * np.abs(f).max())
        worst_perturb = max(worst_perturb, np.abs(a - shapley_apply(g, p_exp, ex, f)).max() - bound)
    ok = worst_nonexp <= 1e-10 and worst_perturb <= 1e-10
    report(2, ok, f"max excess over nonexpansive bound {worst_nonexp:.1e}, "
                  f"over perturbation bound {worst_perturb:.1e}", started)


# 3 ---------------------------------------------------------------------------

def test_criterion_03_scheme_gap_order():
    started = time.perf_counter()
    hs = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3]
    slopes = []
    for g in game_family(20, SEED + 3, S_range=(2, 4)):
        slopes.append(fit_slope(hs, [scheme_gap(g, h) for h in hs]))
    slopes = np.array(slopes)
    ok = bool(np.all(np.abs(slopes - 2.0) <= 0.1))
    report(3, ok, f"scheme-gap slopes in [{slopes.min():.3f}, {slopes.max():.3f}] (target 2.0 +- 0.1)",
           started)


# 4 and 5 share the game family ----------------------------------------------

H_LIST = [0.2, 0.1, 0.05, 0.025]
LAMBDAS = [0.5, 1.0, 2.0]


@functools.lru_cache(maxsize=None)
def perfect_games():
    return game_family(10, SEED + 4, S_range=(2, 4), mn_range=(1, 3))


def test_criterion_04_discounted_consistency():
    started = time.perf_counter()
    failures, ratios, slopes = [], [], []
    for idx, g in enumerate(perfect_games()):
        lam = LAMBDAS[idx % 3]
        k = WeightFunction.exponential(lam)
        v_star = solve_discounted_fixed_point(g, lam, 1e-12)
        errs = [np.abs(solve_duration_value(g, uniform_partition(h), k).values[0] - v_star).max()
                for h in H_LIST]
        r = [errs[i] / errs[i + 1] for i in (1, 2)]
        s = fit_slope(H_LIST, errs)
        ratios += r
        slopes.append(s)
        if not (all(a > b for a, b in zip(errs, errs[1:])) and all(1.5 <= x <= 2.6 for x in r)
                and s >= 0.9):
            failures.append(idx)
    report(4, not failures, f"error ratios in [{min(ratios):.3f}, {max(ratios):.3f}], "
                            f"min slope {min(slopes):.3f}, failing games {failures}", started)


def test_criterion_05_model_equivalence():
    started = time.perf_counter()
    k = WeightFunction.uniform(2.0)
    slopes = []
    for g in perfect_games():
        gaps = []
        for h in H_LIST:
            part = uniform_partition(h, 2.0)
            lin = solve_duration_value(g, part, k, "linear")
            ex = solve_duration_value(g, part, k, "exponential")
            gaps.append(np.abs(lin.values[0] - ex.values[0]).max())
        slopes.append(fit_slope(H_LIST, gaps))
    ok = min(slopes) >= 0.9
    report(5, ok, f"linear-vs-exp gap slopes in [{min(slopes):.3f}, {max(slopes):.3f}] (need >= 0.9)",
           started)


# 6 ---------------------------------------------------------------------------

def test_criterion_06_weight_identity():
    started = time.perf_counter()
    rng = np.random.default_rng(SEED + 6)
    eps = 1e-12
    worst_ratio = 0.0
    for _ in range(100):
        lam = float(rng.uniform(0.2, 1.0))
        max_h = 0.9 / lam if rng.uniform() < 0.5 else 0.5
        prefix = np.concatenate([[0.0], np.cumsum(rng.uniform(1e-3, max_h, size=rng.integers(0, 50)))])
        part = make_partition(prefix, tail=TailRule("constant", float(rng.uniform(0.02, max_h))))
        worst_ratio = max(worst_ratio, weight_sum_identity_check(lam, part, eps) / (eps / lam))
    negative = 0
    for _ in range(1000):
        lam = float(rng.uniform(0.01, 2.0))
        steps = rng.uniform(0, 1.0 / lam, size=rng.integers(1, 60))
        negative += int(np.any(product_lower_bound_gap(lam, steps, exact=True) < 0))
    ok = worst_ratio <= 1.0 and negative == 0
    report(6, ok, f"worst identity deviation {worst_ratio:.3f} x eps/lambda, "
                  f"{negative} prefixes violate the product bound", started)


# 7 ---------------------------------------------------------------------------

def test_criterion_07_family_equivalence():
    started = time.perf_counter()
    lin, ex = DiscountFamily("linear", 1.0), DiscountFamily("exponential", 1.0)
    gaps = [family_equivalence_gap(lin, ex, uniform_partition(h), C=1.0) for h in (0.1, 0.05, 0.025)]
    ok = gaps[0] > gaps[1] > gaps[2] and gaps[2] < 0.05
    report(7, ok, "gaps " + ", ".join(f"{x:.5f}" for x in gaps) + " at h = 0.1, 0.05, 0.025", started)


# 8 ---------------------------------------------------------------------------

def test_criterion_08_belief_contraction():
    started = time.perf_counter()
    rng = np.random.default_rng(SEED + 8)
    worst = -np.inf
    games = game_family(200, SEED + 8)
    for _ in range(10_000):
        g = games[int(rng.integers(len(games)))]
        h = float(rng.uniform(0, 1.0))
        x, y = rng.dirichlet(np.ones(g.m)), rng.dirichlet(np.ones(g.n))
        p1, p2 = rng.dirichlet(np.ones(g.S), size=2)
        after = np.abs(belief_step(p1, x, y, g, h) - belief_step(p2, x, y, g, h)).sum()
        worst = max(worst, after - np.abs(p1 - p2).sum())
    drift = -np.inf
    for g in games[:100]:
        p0 = p = rng.dirichlet(np.ones(g.S))
        t = 0.0
        for h in rng.uniform(0.001, 0.3, size=40):
            p = belief_step(p, np.eye(g.m)[rng.integers(g.m)], np.eye(g.n)[rng.integers(g.n)], g, h)
            t += h
            drift = max(drift, np.abs(p - p0).sum() - 2 * t)
    ok = worst <= 1e-12 and drift <= 1e-12
    report(8, ok, f"max L1 expansion {worst:.1e}, max drift excess over 2|t_n - t_m| {drift:.1e}",
           started)


# 9 and 10 share the state-blind solves ---------------------------------------

@functools.lru_cache(maxsize=None)
def blind_solves():
    rng = np.random.default_rng(SEED + 9)
    k = WeightFunction.exponential(1.0)
    out = []
    for _ in range(5):
        g = game(int(rng.integers(2**63)), S=2, m=2, n=2)
        fine = solve_blind_value(g, uniform_partition(0.02), k, make_grid(2, 64))
        coarse = solve_blind_value(g, uniform_partition(0.04), k, make_grid(2, 32))
        out.append((g, k, fine, coarse))
    return out


def test_criterion_09_blind_lipschitz():
    started = time.perf_counter()
    worst = {"L_p": -np.inf, "L_t": -np.inf, "bound": -np.inf}
    measured = []
    for g, k, fine, _ in blind_solves():
        lip = measure_lipschitz(fine)
        measured.append(lip)
        worst["L_p"] = max(worst["L_p"], lip["L_p"] - 2 * g.g_norm)
        worst["L_t"] = max(worst["L_t"], lip["L_t"] - (k(0) * g.g_norm + 4))
        worst["bound"] = max(worst["bound"], np.abs(fine.values).max() - 2 * g.g_norm)
    ok = worst["L_p"] <= 1e-6 and worst["L_t"] <= 1e-6 and worst["bound"] <= 0
    report(9, ok, f"L_p max {max(m['L_p'] for m in measured):.3f} (bound 2|g|), "
                  f"L_t max {max(m['L_t'] for m in measured):.3f} (bound |k||g|+4), "
                  f"sup|v| - 2|g| = {worst['bound']:.3f}", started)


def test_criterion_10_blind_residual():
    started = time.perf_counter()
    rows, ok = [], True
    for g, _, fine, coarse in blind_solves():
        r_fine = np.abs(blind_pde_residual(g, 1.0, fine.grid, fine.values[0])).max()
        r_coarse = np.abs(blind_pde_residual(g, 1.0, coarse.grid, coarse.values[0])).max()
        rows.append((r_coarse, r_fine))
        ok &= r_coarse > r_fine and r_fine <= 0.1 * g.g_norm
    report(10, ok, "sup residual (32, 0.04) -> (64, 0.02): "
                   + ", ".join(f"{a:.4f}->{b:.4f}" for a, b in rows), started)


# 11 --------------------------------------------------------------------------

def belief_ode_value(q, g, p0, lam=1.0, t_end=40.0):
    S = len(p0)

    def rhs(t, y):
        return np.concatenate([y[:S] @ q, [lam * np.exp(-lam * t) * (y[:S] @ g)]])

    sol = solve_ivp(rhs, (0.0, t_end), np.concatenate([p0, [0.0]]), method="DOP853",
                    rtol=1e-11, atol=1e-13)
    return sol.y[-1, -1]


def test_criterion_11_blind_oracle():
    started = time.perf_counter()
    rng = np.random.default_rng(SEED + 11)
    worst = 0.0
    for _ in range(5):
        g = game(int(rng.integers(2**63)), S=2, m=1, n=1)
        field = solve_blind_value(g, uniform_partition(0.01), WeightFunction.exponential(1.0),
                                  make_grid(2, 64))
        beliefs = [np.array([1.0, 0.0]), np.array([0.0, 1.0]), *rng.dirichlet([1, 1], size=3)]
        for p0 in beliefs:
            expected = belief_ode_value(g.kernel[0, 0], g.payoff[0, 0], p0)
            worst = max(worst, abs(field(0.0, p0) - expected) / g.g_norm)
    report(11, worst <= 0.02, f"max |grid value - ODE oracle| / |g| = {worst:.4f} (need <= 0.02)",
           started)


# 12 --------------------------------------------------------------------------

def run_cli(args, cwd):
    proc = subprocess.run([sys.executable, "-m", "stagegames.cli", *args], cwd=cwd,
                          capture_output=True)
    return proc.returncode, proc.stdout


def test_criterion_12_cli_determinism(tmp_path):
    started = time.perf_counter()
    save_game(random_game(RandomGameSpec(seed=SEED, S=2, m=2, n=3)), tmp_path / "game.json")
    (tmp_path / "matrix.json").write_text(json.dumps([[0, -1, 1], [1, 0, -1], [-1, 1, 0]]))
    (tmp_path / "sweep.json").write_text(json.dumps({
        "experiment": "model-equivalence", "games": [{"seed": SEED}, {"seed": SEED + 1, "S": 3}],
        "h_list": [0.2, 0.1, 0.05], "threads": 2}))
    commands = {
        "validate": ["validate", "game.json"],
        "val": ["val", "matrix.json"],
        "solve": ["solve", "game.json", "--k", "exp:1", "--partition", "uniform:0.1", "--out", "{}"],
        "solve-blind": ["solve-blind", "game.json", "--lambda", "1", "--grid", "16",
                        "--partition", "uniform:0.05", "--out", "{}"],
        "blind-residual": ["blind-residual", "game.json", "--lambda", "1", "--grid", "16",
                           "--partition", "uniform:0.05", "--out", "{}"],
        "scheme-gap": ["scheme-gap", "game.json", "--h-list", "0.1", "0.01", "0.001", "--out", "{}"],
        "discount-check": ["discount-check", "--family", "exp", "--lambda", "1",
                           "--partition", "uniform:0.1", "--out", "{}"],
        "sweep": ["sweep", "sweep.json", "--out", "{}"],
    }
    differing = []
    for name, args in commands.items():
        outputs = []
        for run in range(2):
            target = f"{name}-{run}.out"
            code, stdout = run_cli([a.replace("{}", target) for a in args], tmp_path)
            assert code == 0, f"{name} exited with {code}"
            payload = stdout + ((tmp_path / target).read_bytes() if "{}" in args else b"")
            if name == "solve":
                payload += (tmp_path / (target + ".strategies.json")).read_bytes()
            outputs.append(payload)
        if outputs[0] != outputs[1] or not outputs[0]:
            differing.append(name)
    report(12, not differing, f"{len(commands)} subcommands re-run byte-identical"
                              + (f"; differing: {differing}" if differing else ""), started)


if __name__ == "__main__":
    import tempfile

    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                if "tmp_path" in fn.__code__.co_varnames[:fn.__code__.co_argcount]:
                    with tempfile.TemporaryDirectory() as d:
                        fn(Path(d))
                else:
                    fn()
            except AssertionError:
                pass
