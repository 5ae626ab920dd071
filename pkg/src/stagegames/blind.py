"""State-blind games: belief dynamics and value iteration on a simplex grid.

Players never see the state, so the sufficient statistic is the belief
``p`` in the probability simplex, which moves deterministically as
``p -> p (Id + h q(i, j))`` once the stage actions are revealed.  Values are
stored on the regular grid ``{p : M p integer}`` and interpolated
barycentrically on its Freudenthal (Kuhn) triangulation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import GridTooCoarse, GridTooLarge, OutOfRange, StepTooLarge
from .game import Game, Partition, WeightFunction, as_distribution
from .duration import DEFAULT_EPS_TRUNC, truncated_times
from .kernels import expm
from .matrix_game import val_batch

DEFAULT_RESOLUTION = {1: 1, 2: 64, 3: 24}


class BeliefGrid:
    """Lattice ``{c / M : c in N^S, sum(c) = M}`` with simplex interpolation.

    Points are handled in cumulative coordinates ``z_k = M * sum_{a > k} p_a``
    (``k = 1 .. S-1``), in which the lattice is the set of integer,
    nonincreasing vectors in ``[0, M]`` and the Freudenthal triangulation of
    the unit cubes restricts to a triangulation of the simplex.
    """

    def __init__(self, S: int, M: int):
        if S < 1 or M < 1:
            raise GridTooCoarse(f"need S >= 1 and M >= 1, got S={S}, M={M}")
        self.S = S
        self.M = M
        d = S - 1
        z = [c for c in itertools.product(range(M, -1, -1), repeat=d)
             if all(c[a] >= c[a + 1] for a in range(d - 1))]
        z = np.array(sorted(z), dtype=np.int64).reshape(len(z), d)
        self.z = z
        self.counts = self._counts(z)
        self.points = self.counts / M
        self.lookup = np.full((M + 1,) * d, -1, dtype=np.int64)
        if d:
            self.lookup[tuple(z.T)] = np.arange(len(z))
        assert len(z) == comb(M + S - 1, S - 1)

    def _counts(self, z):
        ext = np.concatenate([np.full((len(z), 1), self.M), z, np.zeros((len(z), 1), int)], axis=1)
        return ext[:, :-1] - ext[:, 1:]

    @property
    def size(self) -> int:
        return len(self.points)

    def index(self, counts) -> int:
        counts = np.asarray(counts)
        z = np.cumsum(counts[::-1])[::-1][1:]
        return int(self.lookup[tuple(z)]) if self.S > 1 else 0

    def locate(self, P):
        """Vertex indices ``(K, S)`` and barycentric weights ``(K, S)`` for beliefs ``P``."""
        P = np.atleast_2d(np.asarray(P, dtype=float))
        K = len(P)
        if self.S == 1:
            return np.zeros((K, 1), dtype=np.int64), np.ones((K, 1))
        d = self.S - 1
        z = self.M * np.cumsum(P[:, ::-1], axis=1)[:, ::-1][:, 1:]
        z = np.clip(z, 0.0, self.M)
        z = np.minimum.accumulate(z, axis=1)
        base = np.floor(z)
        frac = z - base
        base = base.astype(np.int64)
        order = np.argsort(-frac, axis=1, kind="stable")
        sorted_frac = np.take_along_axis(frac, order, axis=1)
        weights = np.empty((K, self.S))
        weights[:, 0] = 1.0 - sorted_frac[:, 0]
        weights[:, 1:-1] = sorted_frac[:, :-1] - sorted_frac[:, 1:]
        weights[:, -1] = sorted_frac[:, -1]
        steps = np.zeros((K, self.S, d), dtype=np.int64)
        rows = np.arange(K)
        for r in range(1, self.S):
            steps[:, r] = steps[:, r - 1]
            steps[rows, r, order[:, r - 1]] += 1
        verts = base[:, None, :] + steps
        # zero-weight vertices may leave the lattice; park them on the base vertex
        inside = np.all(verts <= self.M, axis=2)
        if d > 1:
            inside &= np.all(verts[:, :, :-1] >= verts[:, :, 1:], axis=2)
        verts = np.where(inside[:, :, None], verts, base[:, None, :])
        idx = self.lookup[tuple(np.moveaxis(verts, 2, 0))]
        return idx, weights

    def interpolate(self, values, P):
        idx, w = self.locate(P)
        return (np.asarray(values)[idx] * w).sum(axis=1)


def make_grid(S: int, M: int | None = None, allow_large: bool = False) -> BeliefGrid:
    """Grid with the default resolution (64 for two states, 24 for three)."""
    if M is None:
        if S not in DEFAULT_RESOLUTION:
            raise GridTooLarge(f"no default resolution for S={S}; pass M explicitly")
        M = DEFAULT_RESOLUTION[S]
    if S >= 4 and not allow_large:
        raise GridTooLarge(f"S={S} gives {comb(M + S - 1, S - 1)} nodes; set allow_large=True")
    return BeliefGrid(S, M)


def mixed_kernel(game: Game, x, y) -> np.ndarray:
    return np.einsum("i,j,ijab->ab", x, y, game.kernel)


def belief_step(p, x, y, game: Game, h: float) -> np.ndarray:
    """Belief after one stage of length ``h`` under mixed actions ``(x, y)``."""
    p = as_distribution(p)
    x = as_distribution(x)
    y = as_distribution(y)
    if h * game.q_max > 1.0 + 1e-12:
        raise StepTooLarge(f"h={h} times q_max={game.q_max} exceeds 1")
    return p @ (np.eye(game.S) + h * mixed_kernel(game, x, y))


@dataclass(frozen=True, eq=False)
class BlindValueField:
    """Values ``values[n, node]`` at partition times, barycentric in ``p``, linear in ``t``."""

    times: np.ndarray
    values: np.ndarray
    grid: BeliefGrid
    eps_trunc: float
    scheme: str = "linear"
    g_norm: float = field(default=0.0, repr=False)

    def __call__(self, t: float, p) -> float:
        ts = self.times
        if not ts[0] <= t <= ts[-1]:
            raise OutOfRange(f"t={t} outside [{ts[0]}, {ts[-1]}]")
        n = min(int(np.searchsorted(ts, t, side="right")) - 1, ts.size - 2)
        a = (ts[n + 1] - t) / (ts[n + 1] - ts[n])
        row = a * self.values[n] + (1 - a) * self.values[n + 1]
        return float(self.grid.interpolate(row, p)[0])


def _successors(game: Game, grid: BeliefGrid, h: float, scheme: str):
    if scheme == "linear":
        if h * game.q_max > 1.0 + 1e-12:
            raise StepTooLarge(f"h={h} times q_max={game.q_max} exceeds 1")
        P = np.eye(game.S) + h * game.kernel
    else:
        P = expm(h * game.kernel)
    nxt = np.einsum("ka,ijab->ijkb", grid.points, P)
    np.clip(nxt, 0.0, None, out=nxt)
    nxt /= nxt.sum(axis=-1, keepdims=True)
    idx, w = grid.locate(nxt.reshape(-1, game.S))
    shape = (game.m, game.n, grid.size, grid.S)
    return idx.reshape(shape), w.reshape(shape)


def _blind_backward(game: Game, partition: Partition, k: WeightFunction, grid: BeliefGrid,
                    eps_trunc: float, scheme: str) -> BlindValueField:
    if grid.S != game.S:
        raise GridTooCoarse(f"grid has {grid.S} states, game has {game.S}")
    times = truncated_times(partition, k, eps_trunc)
    N = times.size
    values = np.zeros((N, grid.size))
    belief_payoff = np.einsum("ijw,kw->kij", game.payoff, grid.points)
    cache = {}
    for i in range(N - 2, -1, -1):
        h = float(f"{times[i + 1] - times[i]:.13g}")
        succ = cache.get(h)
        if succ is None:
            succ = cache[h] = _successors(game, grid, h, scheme)
        idx, w = succ
        cont = (values[i + 1][idx] * w).sum(axis=-1)
        stage = h * k(times[i]) * belief_payoff + np.moveaxis(cont, 2, 0)
        values[i] = val_batch(stage)
    return BlindValueField(times, values, grid, eps_trunc, scheme, game.g_norm)


def solve_blind_value(game: Game, partition: Partition, k: WeightFunction,
                      grid: BeliefGrid | None = None,
                      eps_trunc: float = DEFAULT_EPS_TRUNC) -> BlindValueField:
    """State-blind value by backward induction on the belief grid.

    At node ``p``: ``v_n(p) = Val[h_n k(t_n) sum_w p(w) g(i, j, w)
    + v_{n+1}(p (Id + h_n q(i, j)))]``, the continuation interpolated on the grid.
    """
    if grid is None:
        grid = make_grid(game.S)
    return _blind_backward(game, partition, k, grid, eps_trunc, "linear")


def _pairwise_l1(points):
    return np.abs(points[:, None, :] - points[None, :, :]).sum(axis=-1)


def measure_lipschitz(field: BlindValueField) -> dict:
    """Empirical Lipschitz constants in belief (L1 norm) and in time.

    ``L_p`` is the largest difference quotient over all node pairs at a
    common partition time; ``L_t`` the largest slope between consecutive
    times at a common node (the Lipschitz constant of the time interpolant).
    """
    pts = field.grid.points
    values = field.values
    L_p = 0.0
    if len(pts) > 1:
        D = _pairwise_l1(pts)
        iu = np.triu_indices(len(pts), k=1)
        inv = 1.0 / D[iu]
        chunk = max(1, 2_000_000 // len(inv))
        for s in range(0, len(values), chunk):
            v = values[s:s + chunk]
            diff = np.abs(v[:, iu[0]] - v[:, iu[1]])
            L_p = max(L_p, float((diff * inv).max()))
    slopes = np.abs(np.diff(values, axis=0)) / np.diff(field.times)[:, None]
    return {"L_p": L_p, "L_t": float(slopes.max()) if slopes.size else 0.0}


def belief_gradient(grid: BeliefGrid, values) -> np.ndarray:
    """Finite-difference derivatives along ``e_a - e_ref`` at every node.

    ``ref`` is the node's largest coordinate, so a lattice neighbour exists
    on at least one side of every direction.  Returns ``(K, S)`` with the
    derivative along ``e_a - e_ref`` in column ``a`` (zero in column ``ref``);
    central differences where both neighbours exist, one-sided otherwise.
    """
    if grid.M < 2:
        raise GridTooCoarse("finite differences need M >= 2")
    values = np.asarray(values, dtype=float)
    K, S = grid.size, grid.S
    out = np.zeros((K, S))
    step = 1.0 / grid.M
    for node in range(K):
        c = grid.counts[node]
        ref = int(np.argmax(c))
        for a in range(S):
            if a == ref:
                continue
            fwd = c.copy()
            fwd[a] += 1
            fwd[ref] -= 1
            f_val = values[grid.index(fwd)]
            if c[a] >= 1:
                bwd = c.copy()
                bwd[a] -= 1
                bwd[ref] += 1
                out[node, a] = (f_val - values[grid.index(bwd)]) / (2 * step)
            else:
                out[node, a] = (f_val - values[node]) / step
    return out


def blind_pde_residual(game: Game, lam: float, grid: BeliefGrid, values) -> np.ndarray:
    """Per-node residual of ``lam v(p) = Val[lam g(i, j, p) + <p q(i, j), grad v(p)>]``.

    The drift ``p q(i, j)`` sums to zero, so with ``ref`` the node's largest
    coordinate ``<p q, grad v> = sum_a (p q)_a D_a v`` where ``D_a`` is the
    derivative along ``e_a - e_ref`` from :func:`belief_gradient`.
    """
    values = np.asarray(values, dtype=float)
    grad = belief_gradient(grid, values)
    drift = np.einsum("ka,ijab->kijb", grid.points, game.kernel)
    transport = np.einsum("kijb,kb->kij", drift, grad)
    stage = lam * np.einsum("ijw,kw->kij", game.payoff, grid.points) + transport
    return lam * values - val_batch(stage)
