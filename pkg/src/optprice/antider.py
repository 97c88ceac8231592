"""Rockafellar antiderivatives and the minimal/maximal envelopes.

Given a coupling ``c`` on ``X x Y``, a relation ``M`` (the frozen pairs),
a nonempty ``S`` inside ``dom(M)`` and prices ``f`` on ``S``, the family
of admissible potentials is every c-convex ``h`` with ``M`` inside the
c-subdifferential of ``h`` and ``h = f`` on ``S``. Its pointwise minimum
``alpha`` and maximum ``gamma`` are themselves admissible.

``alpha`` is assembled from longest chains in the pair graph of ``M``;
``gamma`` is the c-transform of ``alpha`` computed for the dual data
(transposed coupling, inverted relation, prices forced on ``M(S)``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DEFAULT_TOL,
    INF,
    CouplingInstance,
    ExtendedPotential,
    Relation,
    Tolerance,
    c_convexify,
    c_subdifferential,
    c_transform,
    is_c_convex,
)
from .exceptions import (
    ConstraintNotFullDomain,
    DualInconsistent,
    InconsistentConstraints,
    IndexNotInDomain,
    NotCyclicallyMonotone,
    ValidationError,
)
from .monotone import check_cyclic_monotone


@dataclass(frozen=True, eq=False)
class ConstraintSet:
    """Frozen relation ``rel``, fixed index set ``S`` and prices on ``S``."""

    rel: Relation
    fixed: tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        fixed = tuple(int(s) for s in self.fixed)
        values = np.array(self.values, dtype=float).reshape(-1)
        if not fixed:
            raise ValidationError("the fixed set S must be nonempty")
        if len(set(fixed)) != len(fixed):
            raise ValidationError("the fixed set S has repeated indices")
        if values.shape != (len(fixed),):
            raise ValidationError("one fixed value is needed per point of S")
        if not np.all(np.isfinite(values)):
            raise ValidationError("fixed values must be finite")
        dom = set(self.rel.domain)
        outside = [s for s in fixed if s not in dom]
        if outside:
            raise IndexNotInDomain(f"fixed points {outside} are not in dom(M)")
        order = np.argsort(fixed)
        values = values[order]
        values.setflags(write=False)
        object.__setattr__(self, "fixed", tuple(fixed[k] for k in order))
        object.__setattr__(self, "values", values)

    @classmethod
    def from_potential(cls, rel: Relation, fixed, f: ExtendedPotential) -> "ConstraintSet":
        fixed = tuple(fixed)
        return cls(rel, fixed, f.values[list(fixed)])

    @property
    def full_domain(self) -> bool:
        return set(self.fixed) == set(self.rel.domain)

    def value_map(self) -> dict[int, float]:
        return dict(zip(self.fixed, self.values.tolist()))

    def seed(self, space) -> ExtendedPotential:
        """Prices on ``S`` and ``+inf`` elsewhere."""
        out = np.full(space.size, INF)
        out[list(self.fixed)] = self.values
        return ExtendedPotential(space, out)


@dataclass(frozen=True, eq=False)
class EnvelopePair:
    alpha: ExtendedPotential
    gamma: ExtendedPotential

    @property
    def width(self) -> float:
        """Largest gap ``gamma - alpha`` (the remaining pricing freedom)."""
        return float(np.max(self.gamma.values - self.alpha.values))


@dataclass(frozen=True)
class MembershipVerdict:
    """Clause-by-clause membership test.

    Clauses: (1) ``h`` is c-convex, (2) every frozen pair lies in the
    c-subdifferential of ``h``, (3) ``h`` matches the fixed prices.
    ``diagnosis`` names the most informative failed clause, checking the
    problem constraints (2) and (3) before the qualifier (1).
    """

    is_member: bool
    convex: bool
    antiderivative: bool
    agrees: bool
    missing_pairs: tuple[tuple[int, int], ...] = ()
    diagnosis: str = "member"

    def __bool__(self):
        return self.is_member

    @property
    def failed_clauses(self) -> tuple[int, ...]:
        flags = (self.convex, self.antiderivative, self.agrees)
        return tuple(k + 1 for k, ok in enumerate(flags) if not ok)

    @property
    def first_failed(self) -> int | None:
        for clause, ok in ((2, self.antiderivative), (3, self.agrees), (1, self.convex)):
            if not ok:
                return clause
        return None


def _require_monotone(rel: Relation, inst: CouplingInstance, tol: Tolerance) -> None:
    verdict = check_cyclic_monotone(rel, inst, tol)
    if not verdict.is_monotone:
        raise NotCyclicallyMonotone(
            f"relation is not c-cyclically monotone (cycle sum {verdict.cycle_sum:.6g})",
            witness=verdict.witness,
            cycle_sum=verdict.cycle_sum,
        )


def _chain_tables(inst: CouplingInstance, rel: Relation, tol: Tolerance):
    """Longest chain values in the pair graph and the terminal hop table.

    ``paths[i, k]`` is the best total of ``c(x_next, y_cur) - c(x_cur, y_cur)``
    along chains from pair ``i`` to pair ``k`` (0 for the empty chain);
    ``hop[k, x] = c(x, y_k) - c(x_k, y_k)``.
    """
    rel.require_nonempty()
    rel.check_bounds(inst)
    _require_monotone(rel, inst, tol)
    xs, ys = rel.arrays()
    c = inst.coupling
    own = c[xs, ys]
    gain = c[np.ix_(xs, ys)].T - own[:, None]
    paths = gain.copy()
    np.fill_diagonal(paths, np.maximum(np.diag(paths), 0.0))
    for k in range(len(xs)):
        np.maximum(paths, paths[:, k, None] + paths[None, k, :], out=paths)
    hop = c[:, ys].T - own[:, None]
    return xs, paths, hop


def rockafellar(inst: CouplingInstance, rel: Relation, s: int, tol: Tolerance = DEFAULT_TOL) -> ExtendedPotential:
    """Rockafellar's antiderivative of ``rel`` anchored at ``s``.

    Supremum over chains of pairs starting at ``x_1 = s`` and ending at
    ``x`` of the incremental coupling differences. Vanishes at ``s``.
    """
    s = int(s)
    if s not in rel.domain:
        raise IndexNotInDomain(f"index {s} is not in dom(M)")
    xs, paths, hop = _chain_tables(inst, rel, tol)
    reach = paths[xs == s].max(axis=0)
    values = (reach[:, None] + hop).max(axis=0)
    # monotone relation: the value at the anchor is exactly 0; clear round-off
    values[s] = 0.0
    return ExtendedPotential(inst.space_x, values)


def alpha_envelope(inst: CouplingInstance, cons: ConstraintSet, tol: Tolerance = DEFAULT_TOL) -> ExtendedPotential:
    """Minimal admissible potential: ``max_s f(s) + R_s(x)``."""
    xs, paths, hop = _chain_tables(inst, cons.rel, tol)
    prices = cons.value_map()
    starts = np.array([k for k, x in enumerate(xs) if x in prices], dtype=int)
    offsets = np.array([prices[int(xs[k])] for k in starts])
    reach = (offsets[:, None] + paths[starts]).max(axis=0)
    alpha = (reach[:, None] + hop).max(axis=0)
    fixed = list(cons.fixed)
    excess = alpha[fixed] - cons.values
    if np.any(np.abs(excess) > tol.eps_eq):
        worst = int(np.argmax(np.abs(excess)))
        raise InconsistentConstraints(
            f"fixed prices admit no antiderivative: at index {fixed[worst]} the minimal "
            f"extension is {alpha[fixed[worst]]:.12g}, the fixed price {cons.values[worst]:.12g}"
        )
    alpha[fixed] = cons.values
    return ExtendedPotential(inst.space_x, alpha)


def dual_constraints(inst: CouplingInstance, cons: ConstraintSet,
                     tol: Tolerance = DEFAULT_TOL) -> tuple[CouplingInstance, ConstraintSet]:
    """Dual data on ``Y``: transposed coupling, inverted relation, forced prices on ``M(S)``.

    On a frozen pair ``(s, t)`` the conjugate price is forced to
    ``c(s, t) - f(s)``; two pairs sharing ``t`` must agree.
    """
    c = inst.coupling
    forced: dict[int, float] = {}
    for s, value in cons.value_map().items():
        for i, t in cons.rel.pairs:
            if i != s:
                continue
            v = c[s, t] - value
            if t in forced and abs(forced[t] - v) > tol.eps_eq:
                raise DualInconsistent(
                    f"target {t} is forced to two conjugate prices {forced[t]:.12g} and {v:.12g}"
                )
            forced.setdefault(t, v)
    targets = tuple(sorted(forced))
    return inst.T, ConstraintSet(cons.rel.inverse(), targets, [forced[t] for t in targets])


def gamma_envelope(inst: CouplingInstance, cons: ConstraintSet, tol: Tolerance = DEFAULT_TOL) -> ExtendedPotential:
    """Maximal admissible potential, via the conjugate of the dual ``alpha``."""
    dual_inst, dual_cons = dual_constraints(inst, cons, tol)
    alpha_dual = alpha_envelope(dual_inst, dual_cons, tol)
    gamma = c_transform(alpha_dual, dual_inst, side="x").values.copy()
    fixed = list(cons.fixed)
    if np.any(np.abs(gamma[fixed] - cons.values) > tol.eps_eq):
        raise InconsistentConstraints("maximal extension does not reproduce the fixed prices")
    gamma[fixed] = cons.values
    return ExtendedPotential(inst.space_x, gamma)


def envelopes(inst: CouplingInstance, cons: ConstraintSet, tol: Tolerance = DEFAULT_TOL) -> EnvelopePair:
    return EnvelopePair(alpha_envelope(inst, cons, tol), gamma_envelope(inst, cons, tol))


def _require_full_domain(cons: ConstraintSet) -> None:
    if not cons.full_domain:
        raise ConstraintNotFullDomain("closed forms need S = dom(M)")


def alpha_fulldomain(inst: CouplingInstance, cons: ConstraintSet) -> ExtendedPotential:
    """``max over (s, t) in M of f(s) + c(x, t) - c(s, t)``; requires ``S = dom(M)``."""
    _require_full_domain(cons)
    prices = cons.value_map()
    xs, ys = cons.rel.arrays()
    c = inst.coupling
    offsets = np.array([prices[int(s)] for s in xs]) - c[xs, ys]
    return ExtendedPotential(inst.space_x, (offsets[None, :] + c[:, ys]).max(axis=1))


def gamma_fulldomain(inst: CouplingInstance, cons: ConstraintSet) -> ExtendedPotential:
    """c-convexification of the prices extended by ``+inf`` off ``dom(M)``."""
    _require_full_domain(cons)
    return c_convexify(cons.seed(inst.space_x), inst, side="x")


def is_member(h: ExtendedPotential, inst: CouplingInstance, cons: ConstraintSet,
              tol: Tolerance = DEFAULT_TOL) -> MembershipVerdict:
    """Test whether ``h`` is an admissible potential for ``cons``."""
    convex = is_c_convex(h, inst, tol, side="x")
    sub = set(c_subdifferential(h, inst, tol, side="x").pairs)
    missing = tuple(p for p in cons.rel.pairs if p not in sub)
    fixed = list(cons.fixed)
    agrees = bool(np.all(np.abs(h.values[fixed] - cons.values) <= tol.eps_eq))
    antiderivative = not missing
    clause = None
    for k, ok in ((2, antiderivative), (3, agrees), (1, convex)):
        if not ok:
            clause = k
            break
    diagnosis = {
        None: "member",
        1: "clause (1): not c-convex",
        2: f"clause (2): {len(missing)} frozen pair(s) outside the c-subdifferential",
        3: "clause (3): does not match the fixed prices",
    }[clause]
    return MembershipVerdict(
        is_member=clause is None,
        convex=convex,
        antiderivative=antiderivative,
        agrees=agrees,
        missing_pairs=missing,
        diagnosis=diagnosis,
    )
