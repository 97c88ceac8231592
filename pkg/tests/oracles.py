"""Independent reference implementations used by the test-suite.

Everything here is deliberately naive: explicit enumeration of chains,
permutations, transport polytope vertices. None of it shares code with
the package beyond the plain data classes.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np

from optprice import (
    ConstraintSet,
    CouplingInstance,
    DiscreteMeasure,
    ExtendedPotential,
    FiniteSpace,
    Relation,
    c_subdifferential,
    c_transform,
    solve_kantorovich,
    support,
)


# ---------------------------------------------------------------- transport


def _solve_exact(rows, rhs):
    """Unique solution of a consistent linear system over the rationals, or None."""
    a = [list(r) + [b] for r, b in zip(rows, rhs)]
    n = len(rows[0])
    piv_cols = []
    r = 0
    for col in range(n):
        piv = next((i for i in range(r, len(a)) if a[i][col] != 0), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        inv = 1 / a[r][col]
        a[r] = [v * inv for v in a[r]]
        for i in range(len(a)):
            if i != r and a[i][col] != 0:
                f = a[i][col]
                a[i] = [vi - f * vr for vi, vr in zip(a[i], a[r])]
        piv_cols.append(col)
        r += 1
    if any(all(v == 0 for v in row[:-1]) and row[-1] != 0 for row in a):
        return None
    if len(piv_cols) < n:
        return None
    x = [Fraction(0)] * n
    for i, col in enumerate(piv_cols):
        x[col] = a[i][-1]
    return x


def transport_vertices(mu, nu):
    """All vertices of the transport polytope with rational marginals ``mu``, ``nu``."""
    mu = [Fraction(v) for v in mu]
    nu = [Fraction(v) for v in nu]
    n, m = len(mu), len(nu)
    cells = [(i, j) for i in range(n) for j in range(m)]
    found = set()
    for k in range(1, n + m):
        for basis in itertools.combinations(cells, k):
            rows = [[Fraction(int(c[0] == i)) for c in basis] for i in range(n)]
            rows += [[Fraction(int(c[1] == j)) for c in basis] for j in range(m)]
            sol = _solve_exact(rows, mu + nu)
            if sol is None or any(v < 0 for v in sol):
                continue
            plan = [[Fraction(0)] * m for _ in range(n)]
            for (i, j), v in zip(basis, sol):
                plan[i][j] = v
            found.add(tuple(tuple(r) for r in plan))
    return [np.array(v, dtype=object) for v in found]


def brute_force_transport(vertices, cost) -> Fraction:
    cost = [[Fraction(int(v)) for v in row] for row in cost]
    best = None
    for plan in vertices:
        val = sum(plan[i][j] * cost[i][j] for i in range(len(cost)) for j in range(len(cost[0])))
        best = val if best is None or val < best else best
    return best


# ---------------------------------------------------------------- chains


def chain_sequences(pairs, max_len=None):
    """All sequences of distinct pairs of length 1..max_len."""
    max_len = len(pairs) if max_len is None else max_len
    for k in range(1, max_len + 1):
        yield from itertools.permutations(pairs, k)


def rockafellar_enum(c: np.ndarray, pairs, s: int) -> np.ndarray:
    """Chains x_1 = s, pairs (x_i, y_i), x_{n+1} = x: sum c(x_{i+1}, y_i) - c(x_i, y_i)."""
    n_x = c.shape[0]
    best = np.full(n_x, -np.inf)
    for seq in chain_sequences(pairs):
        if seq[0][0] != s:
            continue
        inner = sum(c[seq[i + 1][0], seq[i][1]] - c[seq[i][0], seq[i][1]] for i in range(len(seq) - 1))
        xl, yl = seq[-1]
        best = np.maximum(best, inner + c[:, yl] - c[xl, yl])
    return best


def alpha_enum(c: np.ndarray, pairs, prices: dict) -> np.ndarray:
    """``max_s f(s) + R_s`` by chain enumeration."""
    return np.max([prices[s] + rockafellar_enum(c, pairs, s) for s in prices], axis=0)


def lipschitz_alpha_enum(d: np.ndarray, pairs, prices: dict) -> np.ndarray:
    """Printed minimal-extension chain formula for the metric case."""
    best = np.full(d.shape[0], -np.inf)
    for seq in chain_sequences(pairs):
        s = seq[0][0]
        if s not in prices:
            continue
        inner = sum(d[seq[i][0], seq[i][1]] - d[seq[i + 1][0], seq[i][1]] for i in range(len(seq) - 1))
        xn, yn = seq[-1]
        best = np.maximum(best, prices[s] + inner + d[xn, yn] - d[:, yn])
    return best


def lipschitz_gamma_enum(d: np.ndarray, pairs, prices: dict) -> np.ndarray:
    """Printed maximal-extension chain formula for the metric case.

    ``x_1 = s`` and the pair ``(s, y_1)`` only anchors the chain; each step
    to ``(x_{i+1}, y_{i+1})`` adds ``d(x_i, y_{i+1}) - d(x_{i+1}, y_{i+1})``
    and the walk ends with ``d(x_n, x)``.
    """
    best = np.full(d.shape[0], np.inf)
    for s, value in prices.items():
        best = np.minimum(best, value + d[s])
        for seq in chain_sequences(pairs, len(pairs)):
            xs = [s] + [p[0] for p in seq]
            ys = [None] + [p[1] for p in seq]
            inner = sum(d[xs[i], ys[i + 1]] - d[xs[i + 1], ys[i + 1]] for i in range(len(xs) - 1))
            best = np.minimum(best, value + inner + d[xs[-1]])
    return best


# ---------------------------------------------------------------- instances


def random_coupling(rng, n, m, integer=True, low=-3, high=3) -> CouplingInstance:
    if integer:
        c = rng.integers(low, high + 1, size=(n, m)).astype(float)
    else:
        c = rng.normal(size=(n, m))
    return CouplingInstance(FiniteSpace.range(n), FiniteSpace.range(m), c)


def random_convex(rng, inst: CouplingInstance) -> ExtendedPotential:
    """A random c-convex potential on X: the c-transform of a random potential on Y."""
    g = rng.integers(-3, 4, size=inst.shape[1]).astype(float)
    return c_transform(ExtendedPotential(inst.space_y, g), inst.T, side="x")


def random_constraints(rng, inst: CouplingInstance, max_pairs=6):
    """(h0, cons) with ``h0`` c-convex, ``M`` inside its subdifferential and ``f = h0`` on ``S``."""
    h0 = random_convex(rng, inst)
    sub = list(c_subdifferential(h0, inst, side="x").pairs)
    k = int(rng.integers(1, min(max_pairs, len(sub)) + 1))
    chosen = [sub[i] for i in sorted(rng.choice(len(sub), size=k, replace=False))]
    rel = Relation(tuple(chosen))
    dom = list(rel.domain)
    size = int(rng.integers(1, len(dom) + 1))
    S = sorted(rng.choice(dom, size=size, replace=False).tolist())
    return h0, ConstraintSet.from_potential(rel, S, h0)


def random_graph_metric_edges(rng, n, max_w=5):
    """Edges of a random connected graph (spanning tree plus extras) with integer weights."""
    edges = []
    for v in range(1, n):
        edges.append((int(rng.integers(0, v)), v, int(rng.integers(1, max_w + 1))))
    for _ in range(int(rng.integers(0, n + 1)) if n > 1 else 0):
        u, v = rng.choice(n, size=2, replace=False)
        edges.append((int(u), int(v), int(rng.integers(1, max_w + 1))))
    return edges


def example2(n: int, grid: str = "interval"):
    """Two-segment market: X on [-1.5,-1] and [1,1.5] with n points each, Y = {-1, 1}, cost x*y."""
    if grid == "interval":
        left, right = np.linspace(-1.5, -1, n), np.linspace(1, 1.5, n)
    else:
        h = 0.5 / n
        left = -1.5 + (np.arange(n) + 0.5) * h
        right = 1 + (np.arange(n) + 0.5) * h
    xs = np.concatenate([left, right])
    sx = FiniteSpace.from_values(xs)
    sy = FiniteSpace(("-1", "1"))
    cost = CouplingInstance.from_function(sx, sy, lambda x, y: x * y)
    mu = DiscreteMeasure.uniform(sx)
    nu = DiscreteMeasure(sy, [0.5, 0.5])
    return xs, cost, mu, nu


def example2_pricing(n: int = 100, grid: str = "interval"):
    xs, cost, mu, nu = example2(n, grid)
    res = solve_kantorovich(mu, nu, cost)
    right = np.flatnonzero(xs > 0)
    cons = ConstraintSet(support(res.plan), tuple(right.tolist()), np.abs(xs[right]))
    return xs, res, cons


def h_p(xs, p):
    return np.where(xs < 0, -xs + p, xs)
