"""c-convex analysis, discrete optimal transport and price corridors."""

from importlib.resources import files

from .antider import (
    ConstraintSet,
    EnvelopePair,
    MembershipVerdict,
    alpha_envelope,
    alpha_fulldomain,
    dual_constraints,
    envelopes,
    gamma_envelope,
    gamma_fulldomain,
    is_member,
    rockafellar,
)
from .core import (
    DEFAULT_TOL,
    INF,
    CouplingInstance,
    ExtendedPotential,
    FiniteSpace,
    Relation,
    Tolerance,
    c_convexify,
    c_subdifferential,
    c_transform,
    is_c_convex,
    young_fenchel_gap,
)
from .exceptions import (
    OptPriceError,
    ValidationError,
    MathematicalError,
    ImproperFunction,
    SpaceMismatch,
    EmptyRelation,
    LimitExceeded,
    IndexNotInDomain,
    InfeasibleMarginals,
    ConstraintNotFullDomain,
    EmptyRestriction,
    FrozenPairsNotInSupport,
    DisconnectedGraph,
    ParseError,
    NotCyclicallyMonotone,
    InconsistentConstraints,
    DualInconsistent,
    NotLipschitzOnS,
    ConstraintViolation,
)
from .metric import (
    FiniteMetric,
    LipschitzConstraint,
    LipschitzVerdict,
    constrained_lipschitz,
    distance_constraint_slack,
    forced_values,
    is_lipschitz,
    lipconv_check,
    mcshane,
    metric_from_graph,
    whitney,
)
from .monotone import MonotoneVerdict, check_cyclic_monotone, check_n_monotone_permutations, cycle_sum
from .pricing import PriceCorridor, PricingProblem, PricingReport, price_bounds, seed_antiderivative, validate_pricing
from .transport import (
    DiscreteMeasure,
    DualityReport,
    DualPair,
    SolveResult,
    TransportPlan,
    check_duality,
    dual_value,
    restrict_plan,
    solve_kantorovich,
    support,
    verify_optimality,
)

__version__ = "0.1.0"


def example_path(name: str = "example2.problem"):
    """Path of a problem file bundled with the package."""
    return files("optprice") / "data" / name
