"""Finite spaces, extended-real potentials and the c-transform engine.

Everything here is finite: a space is an ordered tuple of labels, a
coupling is a dense real matrix over two spaces and a potential is a
dense vector that may take the value ``+inf``. All containers are
immutable; their arrays are flagged read-only.

Conjugation convention::

    f^c(y) = max_x c(x, y) - f(x)
    g^c(x) = max_y c(x, y) - g(y)

so ``c(x, y) <= f(x) + f^c(y)`` everywhere, with equality exactly on the
c-subdifferential.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .exceptions import EmptyRelation, ImproperFunction, SpaceMismatch, ValidationError

INF = np.inf


def _readonly(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Tolerance:
    """Absolute comparison bands.

    ``eps_eq`` is used for equalities between potentials (conjugate
    identities, subdifferential membership); ``eps_feas`` for feasibility
    statements (marginals, price constraints, cycle sums).
    """

    eps_eq: float = 1e-9
    eps_feas: float = 1e-9

    def __post_init__(self):
        if not (self.eps_eq > 0 and self.eps_feas > 0):
            raise ValidationError("tolerances must be strictly positive")

    @classmethod
    def uniform(cls, eps: float) -> "Tolerance":
        return cls(eps_eq=eps, eps_feas=eps)


DEFAULT_TOL = Tolerance()


@dataclass(frozen=True)
class FiniteSpace:
    """An ordered set of distinct labels."""

    labels: tuple[str, ...]
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        labels = tuple(str(label) for label in self.labels)
        if not labels:
            raise ValidationError("a finite space needs at least one point")
        if len(set(labels)) != len(labels):
            seen, dup = set(), None
            for label in labels:
                if label in seen:
                    dup = label
                    break
                seen.add(label)
            raise ValidationError(f"duplicate label {dup!r}")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "_index", {label: i for i, label in enumerate(labels)})

    @property
    def size(self) -> int:
        return len(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def index(self, label) -> int:
        try:
            return self._index[str(label)]
        except KeyError:
            raise ValidationError(f"unknown label {label!r}") from None

    @classmethod
    def range(cls, n: int) -> "FiniteSpace":
        return cls(tuple(str(i) for i in range(n)))

    @classmethod
    def from_values(cls, values: Iterable[float]) -> "FiniteSpace":
        """Label points by the shortest repr that round-trips the float."""
        return cls(tuple(format_number(v) for v in values))

    def coordinates(self) -> np.ndarray:
        """Parse every label as a float; raises if any label is not numeric."""
        try:
            return np.array([float(label) for label in self.labels])
        except ValueError:
            raise ValidationError("space labels are not numeric") from None


def format_number(v: float) -> str:
    v = float(v)
    if v == 0.0:
        return "0"
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


@dataclass(frozen=True, eq=False)
class CouplingInstance:
    """A real coupling (or cost) matrix between two finite spaces."""

    space_x: FiniteSpace
    space_y: FiniteSpace
    coupling: np.ndarray

    def __post_init__(self):
        c = np.array(self.coupling, dtype=float)
        if c.ndim != 2 or c.shape != (self.space_x.size, self.space_y.size):
            raise SpaceMismatch(
                f"coupling has shape {c.shape}, spaces need "
                f"({self.space_x.size}, {self.space_y.size})"
            )
        if not np.all(np.isfinite(c)):
            raise ValidationError("coupling entries must be finite reals")
        c.setflags(write=False)
        object.__setattr__(self, "coupling", c)

    @property
    def shape(self) -> tuple[int, int]:
        return self.coupling.shape

    @property
    def T(self) -> "CouplingInstance":
        """Same coupling viewed from Y: ``c^T(y, x) = c(x, y)``."""
        return CouplingInstance(self.space_y, self.space_x, self.coupling.T)

    def negated(self) -> "CouplingInstance":
        return CouplingInstance(self.space_x, self.space_y, -self.coupling)

    @classmethod
    def from_function(cls, space_x, space_y, func) -> "CouplingInstance":
        """Evaluate ``func(x, y)`` on numeric labels (vectorised via broadcasting)."""
        x = space_x.coordinates()[:, None]
        y = space_y.coordinates()[None, :]
        return cls(space_x, space_y, np.broadcast_to(func(x, y), (x.size, y.size)))


@dataclass(frozen=True, eq=False)
class ExtendedPotential:
    """A proper function on a finite space with values in (-inf, +inf]."""

    space: FiniteSpace
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.shape != (self.space.size,):
            raise SpaceMismatch(f"potential has {v.size} values for a space of size {self.space.size}")
        if np.any(np.isnan(v)) or np.any(v == -INF):
            raise ValidationError("potential values must lie in (-inf, +inf]")
        if not np.any(np.isfinite(v)):
            raise ImproperFunction("potential has no finite value")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def finite(self) -> np.ndarray:
        return np.isfinite(self.values)

    @property
    def dom(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.finite))

    def __getitem__(self, i):
        return self.values[i]

    def __len__(self):
        return self.values.size

    def shift(self, constant: float) -> "ExtendedPotential":
        return ExtendedPotential(self.space, self.values + constant)

    def restrict(self, indices: Iterable[int]) -> "ExtendedPotential":
        """Keep values on ``indices``, +inf elsewhere (adds an indicator)."""
        out = np.full(self.space.size, INF)
        idx = np.fromiter(indices, dtype=int)
        out[idx] = self.values[idx]
        return ExtendedPotential(self.space, out)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.space.labels, self.values.tolist()))

    @classmethod
    def indicator(cls, space: FiniteSpace, indices: Iterable[int]) -> "ExtendedPotential":
        out = np.full(space.size, INF)
        out[list(indices)] = 0.0
        return cls(space, out)

    @classmethod
    def from_mapping(cls, space: FiniteSpace, values: Mapping, default: float = INF) -> "ExtendedPotential":
        out = np.full(space.size, float(default))
        for label, value in values.items():
            out[space.index(label)] = float(value)
        return cls(space, out)


@dataclass(frozen=True)
class Relation:
    """Finite set of ``(i, j)`` index pairs: the graph of a multivalued map."""

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        pairs = tuple(sorted({(int(i), int(j)) for i, j in self.pairs}))
        if any(i < 0 or j < 0 for i, j in pairs):
            raise ValidationError("relation indices must be nonnegative")
        object.__setattr__(self, "pairs", pairs)

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __contains__(self, pair):
        return tuple(pair) in set(self.pairs)

    @property
    def domain(self) -> tuple[int, ...]:
        return tuple(sorted({i for i, _ in self.pairs}))

    @property
    def image(self) -> tuple[int, ...]:
        return tuple(sorted({j for _, j in self.pairs}))

    def inverse(self) -> "Relation":
        return Relation(tuple((j, i) for i, j in self.pairs))

    def image_of(self, subset: Iterable[int]) -> tuple[int, ...]:
        s = set(subset)
        return tuple(sorted({j for i, j in self.pairs if i in s}))

    def issubset(self, other: "Relation") -> bool:
        return set(self.pairs) <= set(other.pairs)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.pairs:
            return np.empty(0, dtype=int), np.empty(0, dtype=int)
        xs, ys = zip(*self.pairs)
        return np.array(xs, dtype=int), np.array(ys, dtype=int)

    def check_bounds(self, inst: CouplingInstance) -> None:
        n, m = inst.shape
        for i, j in self.pairs:
            if i >= n or j >= m:
                raise ValidationError(f"pair ({i}, {j}) out of range for a {n}x{m} instance")

    def require_nonempty(self) -> None:
        if not self.pairs:
            raise EmptyRelation("relation has no pairs")

    @classmethod
    def identity(cls, indices: Iterable[int]) -> "Relation":
        return cls(tuple((i, i) for i in indices))

    @classmethod
    def from_labels(cls, inst: CouplingInstance, pairs: Iterable[Sequence[str]]) -> "Relation":
        return cls(tuple((inst.space_x.index(a), inst.space_y.index(b)) for a, b in pairs))


def _oriented(f: ExtendedPotential, inst: CouplingInstance, side: str | None):
    """Return ``(matrix, other_space)`` with rows indexed by ``f.space``."""
    if side is None:
        if f.space == inst.space_x:
            side = "x"
        elif f.space == inst.space_y:
            side = "y"
        else:
            raise SpaceMismatch("potential lives on neither space of the instance")
    if side == "x":
        if f.space != inst.space_x:
            raise SpaceMismatch("potential is not defined on the X space")
        return inst.coupling, inst.space_y
    if side == "y":
        if f.space != inst.space_y:
            raise SpaceMismatch("potential is not defined on the Y space")
        return inst.coupling.T, inst.space_x
    raise ValueError(f"side must be 'x', 'y' or None, got {side!r}")


def _other(side: str | None, f: ExtendedPotential, inst: CouplingInstance) -> str:
    if side is None:
        side = "x" if f.space == inst.space_x else "y"
    return "y" if side == "x" else "x"


def c_transform(f: ExtendedPotential, inst: CouplingInstance, side: str | None = None) -> ExtendedPotential:
    """Return the c-conjugate of ``f``.

    ``side`` says which space ``f`` lives on (``"x"`` or ``"y"``). It is
    inferred from ``f.space`` when omitted; pass it explicitly when the
    two spaces coincide and ``f`` is meant to live on Y.

    The result is finite everywhere because the coupling is finite and
    ``f`` is proper.
    """
    c, other = _oriented(f, inst, side)
    fin = f.finite
    vals = (c[fin] - f.values[fin, None]).max(axis=0)
    return ExtendedPotential(other, vals)


def c_convexify(f: ExtendedPotential, inst: CouplingInstance, side: str | None = None) -> ExtendedPotential:
    """Double conjugate ``f^{cc}``; the largest c-convex minorant of ``f``."""
    side = side or ("x" if f.space == inst.space_x else "y")
    return c_transform(c_transform(f, inst, side), inst, _other(side, f, inst))


def _max_abs_diff(a: np.ndarray, b: np.ndarray) -> float:
    both_inf = np.isinf(a) & np.isinf(b)
    if np.any(np.isinf(a) ^ np.isinf(b)):
        return INF
    d = np.abs(a[~both_inf] - b[~both_inf])
    return float(d.max()) if d.size else 0.0


def is_c_convex(f: ExtendedPotential, inst: CouplingInstance, tol: Tolerance = DEFAULT_TOL,
                side: str | None = None) -> bool:
    return _max_abs_diff(c_convexify(f, inst, side).values, f.values) <= tol.eps_eq


def young_fenchel_gap(f: ExtendedPotential, inst: CouplingInstance, side: str | None = None) -> np.ndarray:
    """``gap[i, j] = f[i] + f^c[j] - c(i, j)``; ``+inf`` on rows where f is infinite."""
    c, _ = _oriented(f, inst, side)
    fc = c_transform(f, inst, side).values
    with np.errstate(invalid="ignore"):
        return f.values[:, None] + fc[None, :] - c


def c_subdifferential(f: ExtendedPotential, inst: CouplingInstance, tol: Tolerance = DEFAULT_TOL,
                      side: str | None = None) -> Relation:
    """All pairs where the Young-Fenchel inequality is tight within ``eps_eq``.

    Pairs are oriented ``(index in f.space, index in the other space)``.
    """
    gap = young_fenchel_gap(f, inst, side)
    ii, jj = np.nonzero(np.abs(gap) <= tol.eps_eq)
    return Relation(tuple(zip(ii.tolist(), jj.tolist())))
