"""scikit-learn style wrappers.

:class:`LipschitzExtension` is a genuine regressor: it learns nothing
beyond the training data and predicts the smallest, largest or midpoint
``K``-Holder extension at new points. :class:`KantorovichSolver` exposes
the transport solver through ``fit`` and fitted attributes.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .core import CouplingInstance, FiniteSpace, Tolerance
from .exceptions import NotLipschitzOnS, ValidationError
from .transport import DiscreteMeasure, check_duality, solve_kantorovich, support


class LipschitzExtension(RegressorMixin, BaseEstimator):
    """Extend ``y = f(X)`` with ``|f(a) - f(b)| <= K * dist(a, b)**exponent``.

    Parameters
    ----------
    bound : {"lower", "upper", "mid"}
        ``lower`` is the McShane extension, ``upper`` the Whitney
        extension, ``mid`` their average.
    K : float
        Holder constant.
    exponent : float
        Holder exponent in ``(0, 1]``.
    metric : str
        Any metric accepted by :func:`scipy.spatial.distance.cdist`.
    tol : float
        Slack allowed when checking the training data.
    """

    def __init__(self, bound="mid", K=1.0, exponent=1.0, metric="euclidean", tol=1e-9):
        self.bound = bound
        self.K = K
        self.exponent = exponent
        self.metric = metric
        self.tol = tol

    def _dist(self, A, B):
        return self.K * cdist(A, B, metric=self.metric) ** self.exponent

    def fit(self, X, y):
        if self.bound not in ("lower", "upper", "mid"):
            raise ValidationError(f"bound must be lower, upper or mid, got {self.bound!r}")
        if not self.K > 0 or not 0 < self.exponent <= 1:
            raise ValidationError("need K > 0 and 0 < exponent <= 1")
        X, y = check_X_y(X, y, y_numeric=True)
        gaps = y[:, None] - y[None, :] - self._dist(X, X)
        if np.max(gaps) > self.tol:
            raise NotLipschitzOnS(f"training data exceed the Holder bound by {np.max(gaps):.3g}")
        self.X_fit_ = X
        self.y_fit_ = y.astype(float)
        self.n_features_in_ = X.shape[1]
        return self

    def lower(self, X):
        check_is_fitted(self)
        X = check_array(X)
        return (self.y_fit_[None, :] - self._dist(X, self.X_fit_)).max(axis=1)

    def upper(self, X):
        check_is_fitted(self)
        X = check_array(X)
        return (self.y_fit_[None, :] + self._dist(X, self.X_fit_)).min(axis=1)

    def predict(self, X):
        if self.bound == "lower":
            return self.lower(X)
        if self.bound == "upper":
            return self.upper(X)
        return 0.5 * (self.lower(X) + self.upper(X))


class KantorovichSolver(BaseEstimator):
    """Exact discrete transport solver.

    ``fit(cost, mu, nu)`` takes a cost matrix and the two marginals
    (uniform when omitted) and sets ``plan_``, ``primal_value_``,
    ``buy_prices_``, ``sell_prices_``, ``support_`` and ``gap_``.
    """

    def __init__(self, tol=1e-9):
        self.tol = tol

    def fit(self, cost, mu=None, nu=None):
        cost = check_array(cost)
        n, m = cost.shape
        tol = Tolerance.uniform(self.tol)
        inst = CouplingInstance(FiniteSpace.range(n), FiniteSpace.range(m), cost)
        mu = DiscreteMeasure.uniform(inst.space_x) if mu is None else DiscreteMeasure(inst.space_x, mu, tol)
        nu = DiscreteMeasure.uniform(inst.space_y) if nu is None else DiscreteMeasure(inst.space_y, nu, tol)
        res = solve_kantorovich(mu, nu, inst, tol)
        self.result_ = res
        self.plan_ = res.plan.to_dense()
        self.primal_value_ = res.primal_value
        self.buy_prices_ = res.duals.f.values.copy()
        self.sell_prices_ = res.duals.g.values.copy()
        self.support_ = np.array(support(res.plan, tol).pairs, dtype=int).reshape(-1, 2)
        self.gap_ = check_duality(res, tol).gap
        return self
