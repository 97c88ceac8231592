"""Cyclic monotonicity of finite relations.

A relation ``G`` is c-cyclically monotone when every cycle of its pairs
``(x_1, y_1), ..., (x_n, y_n)`` (with ``x_{n+1} = x_1``) satisfies::

    sum_i c(x_i, y_i) - c(x_{i+1}, y_i) >= 0

Two independent checkers are provided. :func:`check_cyclic_monotone`
searches the pair graph for a negative cycle with Bellman-Ford;
:func:`check_n_monotone_permutations` enumerates subsets and
permutations and compares assignment totals directly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import DEFAULT_TOL, CouplingInstance, Relation, Tolerance
from .exceptions import LimitExceeded

PERMUTATION_LIMIT = 8


@dataclass(frozen=True)
class MonotoneVerdict:
    """Outcome of a monotonicity check.

    ``witness`` is an ordered cycle of pairs from the relation whose
    cycle sum (``cycle_sum``) is negative; both are ``None`` when the
    relation is monotone.
    """

    is_monotone: bool
    witness: tuple[tuple[int, int], ...] | None = None
    cycle_sum: float | None = None

    def __bool__(self):
        return self.is_monotone


def cycle_sum(cycle, coupling: np.ndarray) -> float:
    """``sum_i c(x_i, y_i) - c(x_{i+1}, y_i)`` over a closed sequence of pairs."""
    total = 0.0
    n = len(cycle)
    for k, (x, y) in enumerate(cycle):
        x_next = cycle[(k + 1) % n][0]
        total += coupling[x, y] - coupling[x_next, y]
    return float(total)


def pair_graph_weights(rel: Relation, inst: CouplingInstance) -> np.ndarray:
    """Edge weights ``w[i, k] = c(x_i, y_i) - c(x_k, y_i)`` between pairs of ``rel``."""
    xs, ys = rel.arrays()
    c = inst.coupling
    return c[xs, ys][:, None] - c[np.ix_(xs, ys)].T


def _negative_cycle(w: np.ndarray) -> list[int] | None:
    """Bellman-Ford from a virtual source joined to every node by a 0-edge.

    Returns the node sequence of a cycle in the predecessor graph, which is
    negative whenever it exists, or ``None``.
    """
    n = w.shape[0]
    dist = np.zeros(n)
    pred = np.full(n, -1)
    last = -1
    for _ in range(n):
        last = -1
        for u in range(n):
            cand = dist[u] + w[u]
            better = cand < dist
            if better.any():
                dist[better] = cand[better]
                pred[better] = u
                last = int(np.flatnonzero(better)[-1])
        if last < 0:
            return None
    v = last
    for _ in range(n):
        v = int(pred[v])
    cycle = [v]
    u = int(pred[v])
    while u != v:
        cycle.append(u)
        u = int(pred[u])
    cycle.reverse()
    return cycle


def check_cyclic_monotone(rel: Relation, inst: CouplingInstance, tol: Tolerance = DEFAULT_TOL) -> MonotoneVerdict:
    """Decide c-cyclic monotonicity by negative-cycle detection.

    Cycles with sum in ``[-eps_feas, 0)`` are treated as monotone. The
    search runs on weights shifted by ``eps_feas / |rel|`` per edge, so any
    simple cycle below ``-eps_feas`` is still negative after the shift and
    exact-zero cycles never are. A second pass with the full ``eps_feas``
    shift confirms borderline detections.
    """
    rel.require_nonempty()
    rel.check_bounds(inst)
    w = pair_graph_weights(rel, inst)
    pairs = rel.pairs
    for shift in (tol.eps_feas / len(pairs), tol.eps_feas):
        nodes = _negative_cycle(w + shift)
        if nodes is None:
            return MonotoneVerdict(True)
        cycle = tuple(pairs[k] for k in nodes)
        total = cycle_sum(cycle, inst.coupling)
        if total < -tol.eps_feas:
            return MonotoneVerdict(False, cycle, total)
    return MonotoneVerdict(True)


def _orbit(perm: tuple[int, ...], start: int) -> list[int]:
    # successor of a is perm^{-1}(a): x_{next} then pairs with y_a
    inv = [0] * len(perm)
    for i, p in enumerate(perm):
        inv[p] = i
    orbit = [start]
    nxt = inv[start]
    while nxt != start:
        orbit.append(nxt)
        nxt = inv[nxt]
    return orbit


def check_n_monotone_permutations(rel: Relation, inst: CouplingInstance, n_max: int = 6,
                                  tol: Tolerance = DEFAULT_TOL) -> MonotoneVerdict:
    """Decide n-c-monotonicity for all ``n <= n_max`` by exhaustive rearrangement.

    For every subset of at most ``n_max`` pairs and every permutation
    ``sigma`` checks ``sum c(x_i, y_sigma(i)) <= sum c(x_i, y_i) + eps_feas``.
    A violating permutation is reported through its most negative cycle.
    """
    if n_max > PERMUTATION_LIMIT:
        raise LimitExceeded(f"n_max={n_max} exceeds the factorial guard of {PERMUTATION_LIMIT}")
    rel.require_nonempty()
    rel.check_bounds(inst)
    pairs = rel.pairs
    c = inst.coupling
    xs, ys = rel.arrays()
    for k in range(2, min(n_max, len(pairs)) + 1):
        perms = np.array(list(itertools.permutations(range(k))))
        rows = np.arange(k)
        for subset in itertools.combinations(range(len(pairs)), k):
            sub = c[np.ix_(xs[list(subset)], ys[list(subset)])]
            identity = np.trace(sub)
            excess = sub[rows, perms].sum(axis=1) - identity
            worst = int(np.argmax(excess))
            if excess[worst] > tol.eps_feas:
                perm = tuple(int(p) for p in perms[worst])
                best = None
                seen = set()
                for a in range(k):
                    if a in seen or perm[a] == a:
                        continue
                    orbit = _orbit(perm, a)
                    seen.update(orbit)
                    cycle = tuple(pairs[subset[i]] for i in orbit)
                    total = cycle_sum(cycle, c)
                    if best is None or total < best[1]:
                        best = (cycle, total)
                return MonotoneVerdict(False, best[0], best[1])
    return MonotoneVerdict(True)


def permutation_budget(n_pairs: int, n_max: int) -> int:
    """Number of permutations :func:`check_n_monotone_permutations` evaluates."""
    return sum(math.comb(n_pairs, k) * math.factorial(k) for k in range(2, min(n_max, n_pairs) + 1))
