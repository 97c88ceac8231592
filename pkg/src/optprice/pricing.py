"""Lowest and highest compatible prices for a solved transport problem.

A part ``M`` of an optimal plan is frozen and the buy prices on
``S``, a subset of ``dom(M)``, are kept. Compatible buy prices are the
(-cost)-convex (-cost)-antiderivatives of ``M`` that keep those prices;
the consumers' best choice is the minimal one and the producers' best
choice the maximal one. Sell prices follow as ``g = -h^{-c}``.

All sign handling lives here: callers pass transport costs and the
module conjugates with the negated cost.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .antider import ConstraintSet, MembershipVerdict, alpha_envelope, gamma_envelope, is_member
from .core import (
    DEFAULT_TOL,
    CouplingInstance,
    ExtendedPotential,
    Relation,
    Tolerance,
    c_subdifferential,
    c_transform,
)
from .exceptions import FrozenPairsNotInSupport, ImproperFunction, ValidationError
from .transport import SolveResult, dual_value, restrict_plan, support


@dataclass(frozen=True, eq=False)
class PricingProblem:
    solve: SolveResult
    frozen: ConstraintSet

    def __post_init__(self):
        frozen_pairs = set(self.frozen.rel.pairs)
        outside = sorted(frozen_pairs - set(support(self.solve.plan).pairs))
        if outside:
            raise FrozenPairsNotInSupport(f"frozen pairs {outside[:5]} carry no mass in the plan")

    @classmethod
    def build(cls, result: SolveResult, fixed, values=None, frozen: Relation | None = None) -> "PricingProblem":
        """Freeze ``frozen`` (default: the whole support) and the prices on ``fixed``.

        ``values`` defaults to the solver's own buy prices on ``fixed``.
        """
        rel = support(result.plan) if frozen is None else frozen
        fixed = tuple(int(s) for s in fixed)
        if values is None:
            values = result.duals.f.values[list(fixed)]
        return cls(result, ConstraintSet(rel, fixed, values))

    @property
    def coupling(self) -> CouplingInstance:
        """The negated cost used for all conjugations."""
        return self.solve.cost.negated()


@dataclass(frozen=True, eq=False)
class PriceCorridor:
    """Envelope prices and their conjugates.

    ``alpha_dual`` and ``gamma_dual`` are the (-cost)-conjugates of the
    buy prices, i.e. members of the dual family on Y; the sell prices are
    their negatives (``alpha_sell``, ``gamma_sell``). ``outside_alpha`` and
    ``outside_gamma`` list support pairs of the original plan that leave
    the subdifferential of the respective envelope.
    """

    alpha_price: ExtendedPotential
    gamma_price: ExtendedPotential
    alpha_dual: ExtendedPotential
    gamma_dual: ExtendedPotential
    outside_alpha: tuple[tuple[int, int], ...] = ()
    outside_gamma: tuple[tuple[int, int], ...] = ()

    @property
    def width(self) -> float:
        return float(np.max(self.gamma_price.values - self.alpha_price.values))

    @property
    def alpha_sell(self) -> ExtendedPotential:
        return ExtendedPotential(self.alpha_dual.space, -self.alpha_dual.values)

    @property
    def gamma_sell(self) -> ExtendedPotential:
        return ExtendedPotential(self.gamma_dual.space, -self.gamma_dual.values)


@dataclass(frozen=True, eq=False)
class PricingReport:
    membership: MembershipVerdict
    sell: ExtendedPotential
    feasibility_violations: int
    total_difference: float
    primal_value: float
    matches_primal: bool
    restricted_total: float
    restricted_primal: float
    matches_restricted: bool


def seed_antiderivative(f_partial: ExtendedPotential, dom_m) -> ExtendedPotential:
    """Prices kept on ``dom(M)``, ``+inf`` elsewhere.

    A (generally not c-convex) antiderivative of ``M`` whenever the
    original prices were one.
    """
    dom_m = tuple(int(i) for i in dom_m)
    if not dom_m:
        raise ImproperFunction("dom(M) is empty")
    if not np.all(np.isfinite(f_partial.values[list(dom_m)])):
        raise ValidationError("prices must be finite on dom(M)")
    return f_partial.restrict(dom_m)


def _outside(rel: Relation, h: ExtendedPotential, inst: CouplingInstance, tol: Tolerance):
    sub = set(c_subdifferential(h, inst, tol, side="x").pairs)
    return tuple(p for p in rel.pairs if p not in sub)


def price_bounds(prob: PricingProblem, tol: Tolerance = DEFAULT_TOL) -> PriceCorridor:
    """Minimal and maximal compatible buy prices with their conjugates."""
    inst = prob.coupling
    alpha = alpha_envelope(inst, prob.frozen, tol)
    gamma = gamma_envelope(inst, prob.frozen, tol)
    full = support(prob.solve.plan, tol)
    return PriceCorridor(
        alpha_price=alpha,
        gamma_price=gamma,
        alpha_dual=c_transform(alpha, inst, side="x"),
        gamma_dual=c_transform(gamma, inst, side="x"),
        outside_alpha=_outside(full, alpha, inst, tol),
        outside_gamma=_outside(full, gamma, inst, tol),
    )


def validate_pricing(h: ExtendedPotential, prob: PricingProblem, tol: Tolerance = DEFAULT_TOL,
                     sell: ExtendedPotential | None = None) -> PricingReport:
    """Check a candidate buy price against the frozen data.

    ``sell`` defaults to ``-h^{-c}``, the best sell price compatible with
    ``h``. Totals are reported for the full problem and for the frozen
    sub-plan renormalised to a probability plan; members of the family
    are optimal for the latter.
    """
    inst = prob.coupling
    res = prob.solve
    membership = is_member(h, inst, prob.frozen, tol)
    if sell is None:
        sell = ExtendedPotential(res.cost.space_y, -c_transform(h, inst, side="x").values)
    with np.errstate(invalid="ignore"):
        slack = sell.values[None, :] - h.values[:, None] - res.cost.coupling
    violations = int(np.sum(np.nan_to_num(slack, nan=0.0, posinf=1.0) > tol.eps_feas))
    total = dual_value(h, sell, res.mu, res.nu)
    sub = restrict_plan(res.plan, prob.frozen.rel, res.cost.space_x, res.cost.space_y, tol)
    restricted_total = dual_value(h, sell, sub.mu, sub.nu)
    restricted_primal = sub.plan.cost(res.cost)
    return PricingReport(
        membership=membership,
        sell=sell,
        feasibility_violations=violations,
        total_difference=total,
        primal_value=res.primal_value,
        matches_primal=abs(total - res.primal_value) <= tol.eps_feas,
        restricted_total=restricted_total,
        restricted_primal=restricted_primal,
        matches_restricted=abs(restricted_total - restricted_primal) <= tol.eps_feas,
    )

