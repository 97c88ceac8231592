"""Finite metric spaces and constrained Lipschitz extension.

With the coupling ``-d`` for a (pseudo)metric ``d`` the c-convex
functions are exactly the 1-Lipschitz ones, and a pair ``(x, y)`` is in
the subdifferential of ``f`` iff ``f(y) - f(x) = d(x, y)``. Freezing a
relation ``M`` of distance-preserving pairs and values on ``S`` gives a
family of 1-Lipschitz extensions whose envelopes are computed by the
:mod:`optprice.antider` machinery. With ``M`` the identity on ``S`` they
reduce to the McShane (lower) and Whitney (upper) extensions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import shortest_path

from .antider import ConstraintSet, EnvelopePair, alpha_envelope, gamma_envelope
from .core import (
    DEFAULT_TOL,
    CouplingInstance,
    ExtendedPotential,
    FiniteSpace,
    Relation,
    Tolerance,
    c_subdifferential,
    c_transform,
    is_c_convex,
)
from .exceptions import ConstraintViolation, DisconnectedGraph, NotLipschitzOnS, ValidationError

LipschitzConstraint = ConstraintSet


@dataclass(frozen=True, eq=False)
class FiniteMetric:
    """Symmetric, zero-diagonal distance matrix satisfying the triangle inequality.

    Zero off-diagonal entries are allowed (pseudometrics).
    """

    space: FiniteSpace
    dist: np.ndarray
    tol: Tolerance = DEFAULT_TOL

    def __post_init__(self):
        d = np.array(self.dist, dtype=float)
        n = self.space.size
        if d.shape != (n, n):
            raise ValidationError(f"distance matrix has shape {d.shape}, expected ({n}, {n})")
        eps = self.tol.eps_feas
        if not np.all(np.isfinite(d)):
            raise ValidationError("distances must be finite")
        if np.any(d < -eps):
            raise ValidationError("distances must be nonnegative")
        if np.any(np.abs(np.diag(d)) > eps):
            raise ValidationError("distance to self must be 0")
        if np.max(np.abs(d - d.T)) > eps:
            raise ValidationError("distance matrix is not symmetric")
        for j in range(n):
            if np.any(d > d[:, j, None] + d[None, j, :] + eps):
                raise ValidationError(f"triangle inequality fails through point {self.space.labels[j]!r}")
        d = 0.5 * (d + d.T)
        np.fill_diagonal(d, 0.0)
        d = np.maximum(d, 0.0)
        d.setflags(write=False)
        object.__setattr__(self, "dist", d)

    @property
    def size(self) -> int:
        return self.space.size

    def coupling(self) -> CouplingInstance:
        """The instance ``-d`` on ``X x X``."""
        return CouplingInstance(self.space, self.space, -self.dist)

    def holder(self, K: float, exponent: float) -> "FiniteMetric":
        """``K d^exponent``; a metric again for ``K > 0`` and ``0 < exponent <= 1``.

        Extending in this metric gives Holder-continuous extensions with
        constant ``K``.
        """
        if not K > 0 or not 0 < exponent <= 1:
            raise ValidationError("need K > 0 and 0 < exponent <= 1")
        return FiniteMetric(self.space, K * self.dist ** exponent, self.tol)

    @classmethod
    def from_points(cls, points, labels=None, tol: Tolerance = DEFAULT_TOL) -> "FiniteMetric":
        """Euclidean distances between rows of ``points`` (1-d input is a line)."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=-1))
        space = FiniteSpace(labels) if labels is not None else (
            FiniteSpace.from_values(pts[:, 0]) if pts.shape[1] == 1 else FiniteSpace.range(len(pts)))
        return cls(space, d, tol)


def metric_from_graph(edges, n: int, labels=None, tol: Tolerance = DEFAULT_TOL) -> FiniteMetric:
    """Shortest-path metric of a connected, positively weighted undirected graph.

    ``edges`` is an iterable of ``(u, v, weight)`` with integer endpoints.
    """
    edges = list(edges)
    space = FiniteSpace(labels) if labels is not None else FiniteSpace.range(n)
    if n == 1:
        return FiniteMetric(space, np.zeros((1, 1)), tol)
    if not edges:
        raise DisconnectedGraph("graph has no edges")
    u, v, w = (np.array(col) for col in zip(*edges))
    if np.any(w <= 0):
        raise ValidationError("edge weights must be positive")
    if np.any((u < 0) | (u >= n) | (v < 0) | (v >= n)):
        raise ValidationError("edge endpoint out of range")
    graph = coo_matrix((w.astype(float), (u.astype(int), v.astype(int))), shape=(n, n)).tocsr()
    dist = shortest_path(graph, method="D", directed=False)
    if not np.all(np.isfinite(dist)):
        raise DisconnectedGraph("graph is not connected")
    return FiniteMetric(space, dist, tol)


@dataclass(frozen=True)
class LipschitzVerdict:
    """The four equivalent characterisations of 1-Lipschitz functions."""

    lipschitz: bool
    self_conjugate: bool
    convex: bool
    identity_antiderivative: bool

    @property
    def consistent(self) -> bool:
        return len({self.lipschitz, self.self_conjugate, self.convex, self.identity_antiderivative}) == 1

    def __bool__(self):
        return self.lipschitz


def is_lipschitz(values, d: FiniteMetric, eps: float = DEFAULT_TOL.eps_eq) -> bool:
    v = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(v)):
        return False
    return bool(np.all(v[:, None] - v[None, :] <= d.dist + eps))


def lipconv_check(f: ExtendedPotential, d: FiniteMetric, tol: Tolerance = DEFAULT_TOL) -> LipschitzVerdict:
    """Evaluate each characterisation independently; ``consistent`` reports agreement."""
    inst = d.coupling()
    conj = c_transform(f, inst, side="x").values
    with np.errstate(invalid="ignore"):
        self_conj = bool(np.all(np.isfinite(f.values)) and np.max(np.abs(conj + f.values)) <= tol.eps_eq)
    identity = Relation.identity(range(d.size))
    sub = set(c_subdifferential(f, inst, tol, side="x").pairs)
    return LipschitzVerdict(
        lipschitz=is_lipschitz(f.values, d, tol.eps_eq),
        self_conjugate=self_conj,
        convex=is_c_convex(f, inst, tol, side="x"),
        identity_antiderivative=all(p in sub for p in identity.pairs),
    )


def _check_on_subset(fixed, values, d: FiniteMetric, eps: float):
    idx = np.asarray(fixed, dtype=int)
    v = np.asarray(values, dtype=float)
    if idx.size == 0:
        raise ValidationError("S must be nonempty")
    sub = d.dist[np.ix_(idx, idx)]
    if np.any(v[:, None] - v[None, :] > sub + eps):
        raise NotLipschitzOnS("values on S are not 1-Lipschitz")
    return idx, v


def mcshane(fixed, values, d: FiniteMetric, tol: Tolerance = DEFAULT_TOL) -> ExtendedPotential:
    """Smallest 1-Lipschitz extension: ``max_s f(s) - d(x, s)``."""
    idx, v = _check_on_subset(fixed, values, d, tol.eps_eq)
    out = (v[None, :] - d.dist[:, idx]).max(axis=1)
    out[idx] = v
    return ExtendedPotential(d.space, out)


def whitney(fixed, values, d: FiniteMetric, tol: Tolerance = DEFAULT_TOL) -> ExtendedPotential:
    """Largest 1-Lipschitz extension: ``min_s f(s) + d(x, s)``."""
    idx, v = _check_on_subset(fixed, values, d, tol.eps_eq)
    out = (v[None, :] + d.dist[:, idx]).min(axis=1)
    out[idx] = v
    return ExtendedPotential(d.space, out)


def forced_values(cons: LipschitzConstraint, d: FiniteMetric, tol: Tolerance = DEFAULT_TOL) -> dict[int, float]:
    """Values every admissible extension takes on ``M(S)``: ``f(t) = f(s) + d(s, t)``."""
    known = cons.value_map()
    forced = dict(known)
    for s, value in known.items():
        for i, t in cons.rel.pairs:
            if i != s:
                continue
            v = value + d.dist[s, t]
            if t in forced and abs(forced[t] - v) > tol.eps_eq:
                raise ConstraintViolation(
                    f"point {d.space.labels[t]!r} is forced to both {forced[t]:.12g} and {v:.12g}"
                )
            forced.setdefault(t, v)
    return forced


def distance_constraint_slack(h: ExtendedPotential, rel: Relation, d: FiniteMetric,
                              points=None) -> np.ndarray:
    """``d(x', y) - d(x, y) - h(x) + h(x')`` for every ``(x, y)`` in ``rel``, ``x'`` in ``points``.

    Nonnegative entries everywhere means ``h`` satisfies the frozen-pair
    constraints; ``points`` defaults to the whole space.
    """
    xs, ys = rel.arrays()
    pts = np.arange(d.size) if points is None else np.asarray(points, dtype=int)
    hv = h.values
    return (d.dist[np.ix_(pts, ys)].T - d.dist[xs, ys][:, None]
            - hv[xs][:, None] + hv[pts][None, :])


def constrained_lipschitz(cons: LipschitzConstraint, d: FiniteMetric, tol: Tolerance = DEFAULT_TOL) -> EnvelopePair:
    """Minimal and maximal 1-Lipschitz extensions honouring frozen pairs.

    A frozen pair ``(x, y)`` asks ``h(y) - h(x) = d(x, y)`` together with
    the one-sided conditions ``h(x) - h(x') <= d(x', y) - d(x, y)``.
    """
    cons.rel.require_nonempty()
    cons.rel.check_bounds(d.coupling())
    _check_on_subset(cons.fixed, cons.values, d, tol.eps_eq)
    on_s = _rows_in(cons.rel, cons.fixed)
    if on_s.pairs:
        slack = distance_constraint_slack(cons.seed(d.space), on_s, d, cons.fixed)
        if np.min(slack) < -tol.eps_eq:
            raise ConstraintViolation("fixed values violate the frozen-pair distance constraints on S")
    forced_values(cons, d, tol)
    inst = d.coupling()
    return EnvelopePair(alpha_envelope(inst, cons, tol), gamma_envelope(inst, cons, tol))


def _rows_in(rel: Relation, subset) -> Relation:
    s = set(subset)
    return Relation(tuple(p for p in rel.pairs if p[0] in s))
