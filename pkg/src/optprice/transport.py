"""Exact discrete Kantorovich problem.

The solver is a successive-shortest-path minimum-cost flow with node
potentials on the bipartite network ``source -> X -> Y -> sink``. When
every weight is (to 1e-12) a rational with a modest common denominator
the masses are scaled to integers and the flow is exact; otherwise the
flow runs in floating point with ``eps_feas`` slack.

Dual prices follow the pricing convention: ``f`` is the buy price on X,
``g`` the sell price on Y, ``g(y) - f(x) <= cost(x, y)`` everywhere with
equality on the support of the plan.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import DEFAULT_TOL, CouplingInstance, ExtendedPotential, FiniteSpace, Relation, Tolerance
from .exceptions import EmptyRestriction, InfeasibleMarginals, SpaceMismatch, ValidationError
from .monotone import MonotoneVerdict, check_cyclic_monotone

_MAX_DENOMINATOR = 10**6
_MAX_SCALE = 10**12


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Probability weights on a finite space (zero weights allowed)."""

    space: FiniteSpace
    weights: np.ndarray
    tol: Tolerance = DEFAULT_TOL

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.shape != (self.space.size,):
            raise SpaceMismatch(f"{w.size} weights for a space of size {self.space.size}")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValidationError("weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > self.tol.eps_feas:
            raise InfeasibleMarginals(f"weights sum to {w.sum():.12g}, not 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, space: FiniteSpace) -> "DiscreteMeasure":
        return cls(space, np.full(space.size, 1.0 / space.size))

    def integrate(self, values) -> float:
        values = values.values if isinstance(values, ExtendedPotential) else np.asarray(values)
        mask = self.weights > 0
        return float(np.dot(self.weights[mask], values[mask]))


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """Sparse plan: ``entries`` are ``(i, j, mass)`` with mass > 0."""

    shape: tuple[int, int]
    entries: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        entries = tuple(sorted((int(i), int(j), float(m)) for i, j, m in self.entries))
        n, m = self.shape
        for i, j, mass in entries:
            if not (0 <= i < n and 0 <= j < m):
                raise ValidationError(f"plan entry ({i}, {j}) out of range")
            if not mass > 0:
                raise ValidationError("plan masses must be positive")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "shape", (int(n), int(m)))

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        for i, j, mass in self.entries:
            out[i, j] += mass
        return out

    def row_sums(self) -> np.ndarray:
        return self.to_dense().sum(axis=1)

    def col_sums(self) -> np.ndarray:
        return self.to_dense().sum(axis=0)

    @property
    def total_mass(self) -> float:
        return float(sum(m for _, _, m in self.entries))

    def cost(self, cost: CouplingInstance) -> float:
        return float(sum(mass * cost.coupling[i, j] for i, j, mass in self.entries))

    def check_marginals(self, mu: DiscreteMeasure, nu: DiscreteMeasure, tol: Tolerance = DEFAULT_TOL) -> None:
        if np.max(np.abs(self.row_sums() - mu.weights)) > tol.eps_feas:
            raise ValidationError("plan rows do not sum to mu")
        if np.max(np.abs(self.col_sums() - nu.weights)) > tol.eps_feas:
            raise ValidationError("plan columns do not sum to nu")

    @classmethod
    def from_dense(cls, matrix, threshold: float = 0.0) -> "TransportPlan":
        matrix = np.asarray(matrix, dtype=float)
        ii, jj = np.nonzero(matrix > threshold)
        return cls(matrix.shape, tuple(zip(ii.tolist(), jj.tolist(), matrix[ii, jj].tolist())))


@dataclass(frozen=True, eq=False)
class DualPair:
    f: ExtendedPotential
    g: ExtendedPotential


@dataclass(frozen=True, eq=False)
class SolveResult:
    plan: TransportPlan
    primal_value: float
    duals: DualPair
    dual_value: float
    mu: DiscreteMeasure
    nu: DiscreteMeasure
    cost: CouplingInstance

    @property
    def gap(self) -> float:
        return abs(self.primal_value - self.dual_value)

    def with_duals(self, f: ExtendedPotential, g: ExtendedPotential) -> "SolveResult":
        """Same plan, user-supplied prices (for :func:`check_duality`)."""
        return SolveResult(self.plan, self.primal_value, DualPair(f, g),
                           dual_value(f, g, self.mu, self.nu), self.mu, self.nu, self.cost)


@dataclass(frozen=True)
class DualityReport:
    dual_value: float
    primal_value: float
    gap: float
    feasibility_violations: int
    support_violations: int

    @property
    def ok(self) -> bool:
        return self.feasibility_violations == 0 and self.support_violations == 0


def dual_value(f: ExtendedPotential, g: ExtendedPotential, mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """Total price difference ``sum g nu - sum f mu``."""
    return nu.integrate(g) - mu.integrate(f)


def _integer_masses(a: np.ndarray, b: np.ndarray):
    """Common integer scaling of both weight vectors, or ``None``."""
    fracs = []
    for w in np.concatenate([a, b]):
        fr = Fraction(float(w)).limit_denominator(_MAX_DENOMINATOR)
        if abs(float(fr) - w) > 1e-12 * max(1.0, abs(w)):
            return None
        fracs.append(fr)
    scale = 1
    for fr in fracs:
        scale = scale * fr.denominator // math.gcd(scale, fr.denominator)
        if scale > _MAX_SCALE:
            return None
    ints = [int(fr * scale) for fr in fracs]
    ia, ib = ints[: a.size], ints[a.size:]
    if sum(ia) != sum(ib):
        return None
    return np.array(ia, dtype=np.int64), np.array(ib, dtype=np.int64), scale


def _admissible_path(open_arcs: np.ndarray, src: int, snk: int):
    """Breadth-first path over ``open_arcs``; lowest-index parents win ties."""
    V = open_arcs.shape[0]
    parent = np.full(V, -1)
    seen = np.zeros(V, dtype=bool)
    seen[src] = True
    frontier = np.array([src])
    while frontier.size and not seen[snk]:
        reach = open_arcs[frontier] & ~seen
        new = reach.any(axis=0)
        if not new.any():
            return None
        parent[new] = frontier[reach[:, new].argmax(axis=0)]
        seen |= new
        frontier = np.flatnonzero(new)
    if not seen[snk]:
        return None
    path = [snk]
    while path[-1] != src:
        path.append(int(parent[path[-1]]))
    path.reverse()
    return path


def _min_cost_flow(cost: np.ndarray, supply: np.ndarray, demand: np.ndarray, eps: float) -> np.ndarray:
    """Primal-dual min-cost flow on ``source -> rows -> cols -> sink``.

    Each phase computes shortest residual distances from the source
    (vectorised Bellman-Ford; the residual graph of a min-cost flow has
    no negative cycle), then augments along shortest paths, found by
    breadth-first search over tight arcs, until none is left. Returns
    the flow matrix, same dtype as ``supply``.
    """
    n, m = cost.shape
    V = n + m + 2
    src, snk = 0, V - 1
    cap = np.zeros((V, V), dtype=supply.dtype)
    w = np.full((V, V), np.inf)
    rows = np.arange(1, n + 1)
    cols = np.arange(n + 1, n + m + 1)
    total = supply.sum()
    cap[src, rows] = supply
    cap[cols, snk] = demand
    cap[np.ix_(rows, cols)] = total
    w[src, rows] = 0.0
    w[cols, snk] = 0.0
    w[rows, src] = 0.0
    w[snk, cols] = 0.0
    w[np.ix_(rows, cols)] = cost
    w[np.ix_(cols, rows)] = -cost.T
    zero = 1e-12 * (1.0 + float(np.abs(cost).max()))
    remaining = total
    while remaining > eps:
        arcs = np.where(cap > eps, w, np.inf)
        dist = np.full(V, np.inf)
        dist[src] = 0.0
        for _ in range(V):
            nxt = np.minimum(dist, (dist[:, None] + arcs).min(axis=0))
            if np.array_equal(nxt, dist):
                break
            dist = nxt
        if not np.isfinite(dist[snk]):
            raise InfeasibleMarginals("no augmenting path although mass remains")
        with np.errstate(invalid="ignore"):
            tight = (dist[:, None] + arcs - dist[None, :]) <= zero
        while remaining > eps:
            path = _admissible_path(tight & (cap > eps), src, snk)
            if path is None:
                break
            us, vs = np.array(path[:-1]), np.array(path[1:])
            delta = cap[us, vs].min()
            cap[us, vs] -= delta
            cap[vs, us] += delta
            remaining -= delta
    return cap[np.ix_(cols, rows)].T.copy()


def _residual_potentials(cost: np.ndarray, flow_support: np.ndarray, eps: float):
    """Shortest distances in the final residual graph (Bellman-Ford, 0 start).

    Residual arcs: ``x -> y`` with weight cost, ``y -> x`` with weight
    ``-cost`` where the plan is positive. The distances are feasible duals
    tight on the support.
    """
    n, m = cost.shape
    dx = np.zeros(n)
    dy = np.full(m, np.inf)
    back = np.where(flow_support, -cost, np.inf)
    for _ in range(n + m + 1):
        new_dy = np.minimum(dy, (dx[:, None] + cost).min(axis=0))
        new_dx = np.minimum(dx, (new_dy[None, :] + back).min(axis=1))
        if np.array_equal(new_dy, dy) and np.array_equal(new_dx, dx):
            break
        dx, dy = new_dx, new_dy
    return dx, dy


def solve_kantorovich(mu: DiscreteMeasure, nu: DiscreteMeasure, cost: CouplingInstance,
                      tol: Tolerance = DEFAULT_TOL) -> SolveResult:
    """Optimal plan and optimal prices for the finite transport problem.

    Zero-weight points stay in the spaces but not in the flow network;
    their prices come from conjugation. Prices are normalised so the
    smallest buy price is 0.
    """
    if mu.space != cost.space_x or nu.space != cost.space_y:
        raise SpaceMismatch("measures do not live on the cost's spaces")
    if abs(mu.weights.sum() - nu.weights.sum()) > tol.eps_feas:
        raise InfeasibleMarginals("marginals have different total mass")
    C = cost.coupling
    px = np.flatnonzero(mu.weights > 0)
    py = np.flatnonzero(nu.weights > 0)
    sub = C[np.ix_(px, py)]
    scaled = _integer_masses(mu.weights[px], nu.weights[py])
    if scaled is not None:
        a, b, scale = scaled
        flow = _min_cost_flow(sub, a, b, eps=0).astype(float) / scale
    else:
        a, b = mu.weights[px].astype(float), nu.weights[py].astype(float)
        flow = _min_cost_flow(sub, a, b, eps=tol.eps_feas * 1e-3)
    threshold = 0.0 if scaled is not None else tol.eps_feas * 1e-3
    ii, jj = np.nonzero(flow > threshold)
    plan = TransportPlan(C.shape, tuple(zip(px[ii].tolist(), py[jj].tolist(), flow[ii, jj].tolist())))

    dx, dy = _residual_potentials(sub, flow > threshold, tol.eps_feas)
    # extend to zero-weight points, then make the pair mutually conjugate;
    # both steps keep feasibility and tightness on the support
    f = (dy[None, :] - C[:, py]).max(axis=1)
    g = (C + f[:, None]).min(axis=0)
    f = (g[None, :] - C).max(axis=1)
    shift = f.min()
    f -= shift
    g -= shift

    space_x, space_y = cost.space_x, cost.space_y
    duals = DualPair(ExtendedPotential(space_x, f), ExtendedPotential(space_y, g))
    primal = plan.cost(cost)
    return SolveResult(plan, primal, duals, dual_value(duals.f, duals.g, mu, nu), mu, nu, cost)


def support(plan: TransportPlan, tol: Tolerance = DEFAULT_TOL) -> Relation:
    return Relation(tuple((i, j) for i, j, mass in plan.entries if mass > tol.eps_feas))


def verify_optimality(plan: TransportPlan, cost: CouplingInstance, tol: Tolerance = DEFAULT_TOL) -> MonotoneVerdict:
    """A finite plan is optimal iff its support is (-cost)-cyclically monotone."""
    return check_cyclic_monotone(support(plan, tol), cost.negated(), tol)


def check_duality(result: SolveResult, tol: Tolerance = DEFAULT_TOL) -> DualityReport:
    """Feasibility, tightness on the support and the duality gap of ``result``."""
    f, g = result.duals.f.values, result.duals.g.values
    C = result.cost.coupling
    with np.errstate(invalid="ignore"):
        slack = g[None, :] - f[:, None] - C
    feas = int(np.sum(np.nan_to_num(slack, nan=0.0) > tol.eps_feas))
    sup = int(sum(1 for i, j in support(result.plan, tol) if not abs(slack[i, j]) <= tol.eps_eq))
    dv = dual_value(result.duals.f, result.duals.g, result.mu, result.nu)
    return DualityReport(dv, result.primal_value, abs(result.primal_value - dv), feas, sup)


@dataclass(frozen=True, eq=False)
class RestrictedPlan:
    plan: TransportPlan
    mu: DiscreteMeasure
    nu: DiscreteMeasure
    zeta: float


def restrict_plan(plan: TransportPlan, subset: Relation, space_x: FiniteSpace, space_y: FiniteSpace,
                  tol: Tolerance = DEFAULT_TOL) -> RestrictedPlan:
    """Keep the plan on ``subset`` and renormalise it to a probability plan."""
    masses = {(i, j): m for i, j, m in plan.entries}
    missing = [p for p in subset.pairs if p not in masses]
    if missing:
        raise ValidationError(f"pairs {missing[:3]} are not in the support of the plan")
    zeta = float(sum(masses[p] for p in subset.pairs))
    if zeta <= tol.eps_feas:
        raise EmptyRestriction("restriction retains no mass")
    entries = tuple((i, j, masses[(i, j)] / zeta) for i, j in subset.pairs)
    sub = TransportPlan(plan.shape, entries)
    rows, cols = sub.row_sums(), sub.col_sums()
    return RestrictedPlan(sub, DiscreteMeasure(space_x, rows, tol), DiscreteMeasure(space_y, cols, tol), zeta)
