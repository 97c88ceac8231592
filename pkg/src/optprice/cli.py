"""Command line front end.

Problem files are line oriented. ``#`` starts a comment, blank lines are
ignored and a line ``[name]`` opens a section. Sections::

    [mode]       transport | pricing | lipschitz
    [x], [y]     labels A B C ... | points v1 v2 ... | interval a b n | midpoints a b n
                 (several lines concatenate; lipschitz mode uses only [x])
    [cost]       expr product | expr absdiff | expr sqdiff, or |X| rows of |Y| numbers
    [mu], [nu]   uniform, or weights in order (decimals or fractions p/q)
    [frozen]     support | identity | one "xlabel ylabel" pair per line
    [fixed]      "label value" or "range LO HI FUNC" lines, FUNC in abs x neg zero dual
    [metric]     expr absdiff | "edge u v w" lines | |X| rows of |X| numbers,
                 optionally followed by "holder K a"
    [candidate]  buy prices to verify, same grammar as [fixed]
    [sell]       sell prices on Y to verify, same grammar as [fixed]

Exit codes: 0 success, 1 invalid input (parse or validation error),
2 mathematical failure (for example a relation that is not cyclically
monotone, or ``verify`` finding a violated property).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .antider import ConstraintSet
from .core import (
    DEFAULT_TOL,
    CouplingInstance,
    ExtendedPotential,
    FiniteSpace,
    Relation,
    Tolerance,
    format_number,
)
from .exceptions import (
    MathematicalError,
    NotCyclicallyMonotone,
    OptPriceError,
    ParseError,
    ValidationError,
)
from .metric import (
    FiniteMetric,
    LipschitzConstraint,
    constrained_lipschitz,
    distance_constraint_slack,
    is_lipschitz,
    metric_from_graph,
)
from .monotone import check_cyclic_monotone
from .pricing import PricingProblem, price_bounds, validate_pricing
from .transport import (
    DiscreteMeasure,
    SolveResult,
    check_duality,
    solve_kantorovich,
    support,
    verify_optimality,
)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_MATH = 2

SIGNIFICANT = 12
MODES = ("transport", "pricing", "lipschitz")
SECTIONS = ("mode", "x", "y", "cost", "mu", "nu", "frozen", "fixed", "metric", "candidate", "sell")
COMMANDS = ("solve", "duals", "check-monotone", "price-bounds", "lipschitz-extend", "verify")

_EXPRESSIONS = {
    "product": lambda x, y: x * y,
    "absdiff": lambda x, y: np.abs(x - y),
    "sqdiff": lambda x, y: (x - y) ** 2,
}
_PRICE_FUNCS = {
    "abs": np.abs,
    "x": lambda x: x,
    "neg": lambda x: -x,
    "zero": np.zeros_like,
}


@dataclass
class _Token:
    text: str
    line: int
    column: int


@dataclass
class _Line:
    tokens: list[_Token]
    number: int

    @property
    def head(self) -> str:
        return self.tokens[0].text


def _tokenize(raw: str, number: int) -> _Line | None:
    text = raw.split("#", 1)[0]
    tokens = [_Token(m.group(), number, m.start() + 1) for m in re.finditer(r"\S+", text)]
    return _Line(tokens, number) if tokens else None


def _number(tok: _Token) -> float:
    try:
        value = float(Fraction(tok.text)) if "/" in tok.text else float(tok.text)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"expected a number, got {tok.text!r}", tok.line, tok.column) from None
    if math.isnan(value):
        raise ParseError("NaN is not allowed", tok.line, tok.column)
    return value


def _finite(tok: _Token) -> float:
    value = _number(tok)
    if not math.isfinite(value):
        raise ParseError(f"expected a finite number, got {tok.text!r}", tok.line, tok.column)
    return value


def _count(tok: _Token) -> int:
    try:
        n = int(tok.text)
    except ValueError:
        raise ParseError(f"expected a positive integer, got {tok.text!r}", tok.line, tok.column) from None
    if n < 1:
        raise ParseError("grid size must be at least 1", tok.line, tok.column)
    return n


def _arity(line: _Line, n: int) -> None:
    if len(line.tokens) != n:
        tok = line.tokens[min(n, len(line.tokens)) - 1] if len(line.tokens) < n else line.tokens[n]
        raise ParseError(f"{line.head!r} expects {n - 1} argument(s)", tok.line, tok.column)


def _label(space: FiniteSpace, tok: _Token) -> int:
    try:
        return space.index(tok.text)
    except ValidationError:
        raise ParseError(f"unknown label {tok.text!r}", tok.line, tok.column) from None


@dataclass
class PriceSpec:
    """Unresolved price assignments; ``dual`` entries need a solved problem."""

    entries: list = field(default_factory=list)
    source: int = 0

    def resolve(self, space: FiniteSpace, duals: ExtendedPotential | None = None) -> dict[int, float]:
        out: dict[int, float] = {}
        coords = None
        for entry in self.entries:
            if entry[0] == "label":
                _, index, value = entry
                out[index] = value
                continue
            _, lo, hi, func, tok = entry
            if coords is None:
                coords = space.coordinates()
            idx = np.flatnonzero((coords >= lo) & (coords <= hi))
            if func == "dual":
                if duals is None:
                    raise ParseError("price function 'dual' needs a transport problem", tok.line, tok.column)
                vals = duals.values[idx]
            else:
                vals = _PRICE_FUNCS[func](coords[idx])
            out.update(zip(idx.tolist(), np.asarray(vals, dtype=float).tolist()))
        if not out:
            raise ValidationError(f"price section starting on line {self.source} selects no points")
        return out


@dataclass
class ProblemFile:
    mode: str
    space_x: FiniteSpace
    space_y: FiniteSpace
    cost: CouplingInstance | None = None
    mu: DiscreteMeasure | None = None
    nu: DiscreteMeasure | None = None
    frozen: Relation | str | None = None
    fixed: PriceSpec | None = None
    metric: FiniteMetric | None = None
    candidate: PriceSpec | None = None
    sell: PriceSpec | None = None
    tol: Tolerance = DEFAULT_TOL


def _split_sections(text: str) -> dict[str, tuple[_Line, list[_Line]]]:
    sections: dict[str, tuple[_Line, list[_Line]]] = {}
    current = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = _tokenize(raw, number)
        if line is None:
            continue
        head = line.tokens[0]
        if head.text.startswith("["):
            m = re.fullmatch(r"\[([a-z]+)\]", head.text)
            if not m or m.group(1) not in SECTIONS:
                raise ParseError(f"unknown section header {head.text!r}", number, head.column)
            if len(line.tokens) > 1:
                raise ParseError("section header must stand alone", number, line.tokens[1].column)
            name = m.group(1)
            if name in sections:
                raise ParseError(f"section [{name}] appears twice", number, head.column)
            sections[name] = (line, [])
            current = name
        elif current is None:
            raise ParseError("content before the first section header", number, head.column)
        else:
            sections[current][1].append(line)
    if not sections:
        raise ParseError("empty problem file", 1, 1)
    return sections


def _parse_space(header: _Line, body: list[_Line]) -> FiniteSpace:
    labels: list[str] = []
    for line in body:
        args = line.tokens[1:]
        if line.head == "labels":
            labels.extend(t.text for t in args)
        elif line.head == "points":
            labels.extend(format_number(_finite(t)) for t in args)
        elif line.head in ("interval", "midpoints"):
            _arity(line, 4)
            a, b, n = _finite(args[0]), _finite(args[1]), _count(args[2])
            if line.head == "interval":
                grid = np.linspace(a, b, n)
            else:
                grid = a + (np.arange(n) + 0.5) * (b - a) / n
            labels.extend(format_number(v) for v in grid)
        else:
            raise ParseError(f"unknown space directive {line.head!r}", line.number, line.tokens[0].column)
    if not labels:
        raise ParseError("space has no points", header.number, header.tokens[0].column)
    try:
        return FiniteSpace(tuple(labels))
    except ValidationError as exc:
        raise ParseError(str(exc), header.number, header.tokens[0].column) from None


def _parse_matrix(header: _Line, body: list[_Line], shape) -> np.ndarray:
    rows = [[_finite(t) for t in line.tokens] for line in body]
    if len(rows) != shape[0]:
        raise ParseError(f"expected {shape[0]} rows, got {len(rows)}", header.number, 1)
    for line, row in zip(body, rows):
        if len(row) != shape[1]:
            raise ParseError(f"expected {shape[1]} entries, got {len(row)}", line.number, 1)
    return np.array(rows, dtype=float)


def _parse_expr(line: _Line, space_x: FiniteSpace, space_y: FiniteSpace) -> np.ndarray:
    _arity(line, 2)
    name = line.tokens[1]
    if name.text not in _EXPRESSIONS:
        raise ParseError(f"unknown expression {name.text!r}", name.line, name.column)
    try:
        return CouplingInstance.from_function(space_x, space_y, _EXPRESSIONS[name.text]).coupling
    except ValidationError as exc:
        raise ParseError(str(exc), name.line, name.column) from None


def _parse_weights(header: _Line, body: list[_Line], space: FiniteSpace, tol: Tolerance) -> DiscreteMeasure:
    if len(body) == 1 and body[0].head == "uniform":
        _arity(body[0], 1)
        return DiscreteMeasure.uniform(space)
    weights = [_finite(t) for line in body for t in line.tokens]
    if len(weights) != space.size:
        raise ParseError(f"expected {space.size} weights, got {len(weights)}", header.number, 1)
    return DiscreteMeasure(space, np.array(weights), tol)


def _parse_frozen(body: list[_Line], space_x: FiniteSpace, space_y: FiniteSpace) -> Relation | str:
    if len(body) == 1 and body[0].head in ("support", "identity"):
        _arity(body[0], 1)
        return body[0].head
    pairs = []
    for line in body:
        _arity(line, 2)
        pairs.append((_label(space_x, line.tokens[0]), _label(space_y, line.tokens[1])))
    return Relation(tuple(pairs))


def _parse_prices(header: _Line, body: list[_Line], space: FiniteSpace) -> PriceSpec:
    spec = PriceSpec(source=header.number)
    for line in body:
        if line.head == "range":
            _arity(line, 4)
            lo, hi, func = _number(line.tokens[1]), _number(line.tokens[2]), line.tokens[3]
            if func.text not in _PRICE_FUNCS and func.text != "dual":
                raise ParseError(f"unknown price function {func.text!r}", func.line, func.column)
            spec.entries.append(("range", lo, hi, func.text, func))
        else:
            _arity(line, 2)
            spec.entries.append(("label", _label(space, line.tokens[0]), _finite(line.tokens[1])))
    if not spec.entries:
        raise ParseError("empty price section", header.number, 1)
    return spec


def _parse_metric(header: _Line, body: list[_Line], space: FiniteSpace, tol: Tolerance) -> FiniteMetric:
    holder = None
    if body and body[-1].head == "holder":
        _arity(body[-1], 3)
        holder = (_finite(body[-1].tokens[1]), _finite(body[-1].tokens[2]))
        body = body[:-1]
    if not body:
        raise ParseError("metric section has no data", header.number, 1)
    if body[0].head == "expr":
        if len(body) != 1:
            raise ParseError("expr must be the only metric directive", body[1].number, 1)
        metric = FiniteMetric(space, _parse_expr(body[0], space, space), tol)
    elif body[0].head == "edge":
        edges = []
        for line in body:
            if line.head != "edge":
                raise ParseError("cannot mix edges with other metric data", line.number, 1)
            _arity(line, 4)
            edges.append((_label(space, line.tokens[1]), _label(space, line.tokens[2]), _finite(line.tokens[3])))
        metric = metric_from_graph(edges, space.size, space.labels, tol)
    else:
        metric = FiniteMetric(space, _parse_matrix(header, body, (space.size, space.size)), tol)
    if holder is not None:
        metric = metric.holder(*holder)
    return metric


def parse_text(text: str, tol: Tolerance = DEFAULT_TOL) -> ProblemFile:
    sections = _split_sections(text)
    if "mode" not in sections:
        raise ParseError("missing [mode] section", 1, 1)
    header, body = sections["mode"]
    if len(body) != 1 or len(body[0].tokens) != 1 or body[0].head not in MODES:
        raise ParseError(f"[mode] must contain one of {', '.join(MODES)}", header.number, 1)
    mode = body[0].head
    if "x" not in sections:
        raise ParseError("missing [x] section", header.number, 1)
    space_x = _parse_space(*sections["x"])
    if mode == "lipschitz":
        space_y = space_x
    elif "y" not in sections:
        raise ParseError("missing [y] section", header.number, 1)
    else:
        space_y = _parse_space(*sections["y"])

    prob = ProblemFile(mode, space_x, space_y, tol=tol)
    if "cost" in sections:
        h, b = sections["cost"]
        if len(b) == 1 and b[0].head == "expr":
            matrix = _parse_expr(b[0], space_x, space_y)
        else:
            matrix = _parse_matrix(h, b, (space_x.size, space_y.size))
        prob.cost = CouplingInstance(space_x, space_y, matrix)
    if "mu" in sections:
        prob.mu = _parse_weights(*sections["mu"], space_x, tol)
    if "nu" in sections:
        prob.nu = _parse_weights(*sections["nu"], space_y, tol)
    if "frozen" in sections:
        prob.frozen = _parse_frozen(sections["frozen"][1], space_x, space_y)
    if "fixed" in sections:
        prob.fixed = _parse_prices(*sections["fixed"], space_x)
    if "candidate" in sections:
        prob.candidate = _parse_prices(*sections["candidate"], space_x)
    if "sell" in sections:
        prob.sell = _parse_prices(*sections["sell"], space_y)
    if "metric" in sections:
        prob.metric = _parse_metric(*sections["metric"], space_x, tol)

    needed = {"transport": ("cost", "mu", "nu"), "pricing": ("cost", "mu", "nu", "fixed"),
              "lipschitz": ("metric", "fixed")}[mode]
    for name in needed:
        if getattr(prob, name) is None:
            raise ValidationError(f"mode {mode} needs a [{name}] section")
    return prob


def parse_problem(path, tol: Tolerance = DEFAULT_TOL) -> ProblemFile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from None
    return parse_text(text, tol)


# ---------------------------------------------------------------- reports


def round_sig(v: float) -> float | str:
    """Round to 12 significant digits; infinities become the strings ``inf``/``-inf``."""
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    out = float(f"{v:.{SIGNIFICANT}g}")
    return 0.0 if out == 0 else out


def fmt(v) -> str:
    if isinstance(v, str):
        return v
    return f"{float(v):.{SIGNIFICANT}g}"


def emit_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=False, ensure_ascii=False)


def emit_text(report: dict) -> str:
    lines = []
    for key, value in report.items():
        if isinstance(value, list) and value and isinstance(value[0], dict):
            cols = list(value[0])
            lines.append(f"{key}:")
            lines.append("  " + " ".join(cols))
            for row in value:
                lines.append("  " + " ".join("-" if row[c] is None else fmt(row[c]) if isinstance(row[c], float)
                                             else str(row[c]) for c in cols))
        elif isinstance(value, list):
            lines.append(f"{key}: " + " ".join(f"({', '.join(map(str, p))})" if isinstance(p, list) else str(p)
                                               for p in value))
        elif isinstance(value, bool):
            lines.append(f"{key}: {'yes' if value else 'no'}")
        elif isinstance(value, float):
            lines.append(f"{key}: {fmt(value)}")
        else:
            lines.append(f"{key}: {value}")
    return "\n".join(lines) + "\n"


def write_csv(path, rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["label", "alpha", "gamma", "fixed"])
        for row in rows:
            writer.writerow([row["label"], fmt(row["alpha"]), fmt(row["gamma"]),
                             "" if row["fixed"] is None else fmt(row["fixed"])])


@dataclass
class Outcome:
    report: dict
    exit_code: int = EXIT_OK
    csv_rows: list | None = None


def _pairs(rel, sx: FiniteSpace, sy: FiniteSpace) -> list:
    return [[sx.labels[i], sy.labels[j]] for i, j in rel]


def _require(prob: ProblemFile, *modes: str, command: str) -> None:
    if prob.mode not in modes:
        raise ValidationError(f"command {command} needs mode {' or '.join(modes)}, file has {prob.mode}")


def _solve(prob: ProblemFile) -> SolveResult:
    return solve_kantorovich(prob.mu, prob.nu, prob.cost, prob.tol)


def _frozen_relation(frozen, result: SolveResult | None, tol: Tolerance, fixed=()) -> Relation:
    if frozen is None or frozen == "support":
        if result is None:
            raise ValidationError("frozen 'support' needs a transport problem")
        return support(result.plan, tol)
    if frozen == "identity":
        return Relation.identity(fixed)
    return frozen


def _constraints(prob: ProblemFile, result: SolveResult | None) -> ConstraintSet:
    duals = result.duals.f if result is not None else None
    values = prob.fixed.resolve(prob.space_x, duals)
    fixed = tuple(sorted(values))
    frozen = "identity" if prob.mode == "lipschitz" and prob.frozen is None else prob.frozen
    rel = _frozen_relation(frozen, result, prob.tol, fixed)
    return ConstraintSet(rel, fixed, [values[s] for s in fixed])


def cmd_solve(prob: ProblemFile, flags) -> Outcome:
    _require(prob, "transport", "pricing", command="solve")
    res = _solve(prob)
    sx, sy = prob.space_x, prob.space_y
    return Outcome({
        "command": "solve",
        "primal_value": round_sig(res.primal_value),
        "dual_value": round_sig(res.dual_value),
        "gap": round_sig(res.gap),
        "plan": [{"x": sx.labels[i], "y": sy.labels[j], "mass": round_sig(m)} for i, j, m in res.plan.entries],
    })


def cmd_duals(prob: ProblemFile, flags) -> Outcome:
    _require(prob, "transport", "pricing", command="duals")
    res = _solve(prob)
    rep = check_duality(res, prob.tol)
    report = {
        "command": "duals",
        "primal_value": round_sig(res.primal_value),
        "dual_value": round_sig(rep.dual_value),
        "gap": round_sig(rep.gap),
        "feasibility_violations": rep.feasibility_violations,
        "support_violations": rep.support_violations,
        "buy": [{"label": l, "f": round_sig(v)} for l, v in zip(prob.space_x.labels, res.duals.f.values)],
        "sell": [{"label": l, "g": round_sig(v)} for l, v in zip(prob.space_y.labels, res.duals.g.values)],
    }
    return Outcome(report, EXIT_OK if rep.ok else EXIT_MATH)


def cmd_check_monotone(prob: ProblemFile, flags) -> Outcome:
    if prob.mode == "lipschitz":
        inst, convention = prob.metric.coupling(), "-d"
        rel = _constraints(prob, None).rel
    else:
        if prob.cost is None:
            raise ValidationError("check-monotone needs a [cost] section")
        result = None
        if prob.frozen in (None, "support"):
            if prob.mu is None or prob.nu is None:
                raise ValidationError("checking the plan support needs [mu] and [nu]")
            result = _solve(prob)
        rel = _frozen_relation(prob.frozen, result, prob.tol)
        implicit = result is not None
        if flags.transport or implicit:
            inst, convention = prob.cost.negated(), "-cost"
        else:
            inst, convention = prob.cost, "cost"
    verdict = check_cyclic_monotone(rel, inst, prob.tol)
    report = {
        "command": "check-monotone",
        "coupling": convention,
        "pairs": len(rel),
        "monotone": verdict.is_monotone,
    }
    if not verdict.is_monotone:
        report["cycle_sum"] = round_sig(verdict.cycle_sum)
        report["witness"] = _pairs(verdict.witness, inst.space_x, inst.space_y)
    return Outcome(report, EXIT_OK if verdict.is_monotone else EXIT_MATH)


def _envelope_rows(space: FiniteSpace, alpha, gamma, cons: ConstraintSet) -> list[dict]:
    fixed = cons.value_map()
    return [
        {"label": label, "alpha": round_sig(a), "gamma": round_sig(g),
         "fixed": round_sig(fixed[i]) if i in fixed else None}
        for i, (label, a, g) in enumerate(zip(space.labels, alpha.values, gamma.values))
    ]


def cmd_price_bounds(prob: ProblemFile, flags) -> Outcome:
    _require(prob, "pricing", command="price-bounds")
    res = _solve(prob)
    cons = _constraints(prob, res)
    corridor = price_bounds(PricingProblem(res, cons), prob.tol)
    rows = _envelope_rows(prob.space_x, corridor.alpha_price, corridor.gamma_price, cons)
    report = {
        "command": "price-bounds",
        "primal_value": round_sig(res.primal_value),
        "frozen_pairs": len(cons.rel),
        "fixed_points": len(cons.fixed),
        "width": round_sig(corridor.width),
        "corridor": rows,
        "dual": [{"label": l, "alpha_dual": round_sig(a), "gamma_dual": round_sig(g)}
                 for l, a, g in zip(prob.space_y.labels, corridor.alpha_dual.values, corridor.gamma_dual.values)],
    }
    if flags.witness:
        report["outside_alpha"] = _pairs(corridor.outside_alpha, prob.space_x, prob.space_y)
        report["outside_gamma"] = _pairs(corridor.outside_gamma, prob.space_x, prob.space_y)
    return Outcome(report, csv_rows=rows)


def _lipschitz_parts(prob: ProblemFile):
    cons = _constraints(prob, None)
    cons = LipschitzConstraint(cons.rel, cons.fixed, cons.values)
    return cons, constrained_lipschitz(cons, prob.metric, prob.tol)


def cmd_lipschitz_extend(prob: ProblemFile, flags) -> Outcome:
    _require(prob, "lipschitz", command="lipschitz-extend")
    cons, env = _lipschitz_parts(prob)
    rows = _envelope_rows(prob.space_x, env.alpha, env.gamma, cons)
    return Outcome({
        "command": "lipschitz-extend",
        "frozen_pairs": len(cons.rel),
        "fixed_points": len(cons.fixed),
        "width": round_sig(env.width),
        "extension": rows,
    }, csv_rows=rows)


def _verify_lipschitz(prob: ProblemFile, flags) -> Outcome:
    cons, env = _lipschitz_parts(prob)
    d, eps = prob.metric, prob.tol.eps_eq
    report = {"command": "verify"}
    ok = True
    for name, h in (("alpha", env.alpha), ("gamma", env.gamma)):
        lip = is_lipschitz(h.values, d, eps)
        slack = float(np.min(distance_constraint_slack(h, cons.rel, d)))
        agrees = bool(np.all(np.abs(h.values[list(cons.fixed)] - cons.values) <= eps))
        report[f"{name}_lipschitz"] = lip
        report[f"{name}_min_slack"] = round_sig(slack)
        report[f"{name}_matches_fixed"] = agrees
        ok &= lip and slack >= -eps and agrees
    report["ok"] = ok
    return Outcome(report, EXIT_OK if ok else EXIT_MATH)


def _potential(space: FiniteSpace, by_index: dict[int, float]) -> ExtendedPotential:
    """Prices keyed by point index; unpriced points get +inf."""
    out = np.full(space.size, np.inf)
    out[list(by_index)] = list(by_index.values())
    return ExtendedPotential(space, out)


def _verify_pricing(prob: ProblemFile, res: SolveResult, flags) -> Outcome:
    cons = _constraints(prob, res)
    pp = PricingProblem(res, cons)
    report: dict = {"command": "verify"}
    if prob.candidate is None:
        corridor = price_bounds(pp, prob.tol)
        candidates = [("alpha", corridor.alpha_price, None), ("gamma", corridor.gamma_price, None)]
    else:
        h = _potential(prob.space_x, prob.candidate.resolve(prob.space_x, res.duals.f))
        sell = None
        if prob.sell is not None:
            sell = _potential(prob.space_y, prob.sell.resolve(prob.space_y))
        candidates = [("candidate", h, sell)]
    ok = True
    for name, h, sell in candidates:
        r = validate_pricing(h, pp, prob.tol, sell)
        report[f"{name}_member"] = r.membership.is_member
        report[f"{name}_diagnosis"] = r.membership.diagnosis
        report[f"{name}_feasibility_violations"] = r.feasibility_violations
        report[f"{name}_total_difference"] = round_sig(r.total_difference)
        report[f"{name}_restricted_total"] = round_sig(r.restricted_total)
        if flags.witness and r.membership.missing_pairs:
            report[f"{name}_missing_pairs"] = _pairs(r.membership.missing_pairs, prob.space_x, prob.space_y)
        ok &= r.membership.is_member and r.feasibility_violations == 0
    report["primal_value"] = round_sig(res.primal_value)
    report["ok"] = ok
    return Outcome(report, EXIT_OK if ok else EXIT_MATH)


def cmd_verify(prob: ProblemFile, flags) -> Outcome:
    if prob.mode == "lipschitz":
        return _verify_lipschitz(prob, flags)
    res = _solve(prob)
    if prob.mode == "pricing":
        return _verify_pricing(prob, res, flags)
    rep = check_duality(res, prob.tol)
    verdict = verify_optimality(res.plan, res.cost, prob.tol)
    report = {
        "command": "verify",
        "primal_value": round_sig(res.primal_value),
        "dual_value": round_sig(rep.dual_value),
        "gap": round_sig(rep.gap),
        "feasibility_violations": rep.feasibility_violations,
        "support_violations": rep.support_violations,
        "support_monotone": verdict.is_monotone,
    }
    if flags.witness and not verdict.is_monotone:
        report["witness"] = _pairs(verdict.witness, prob.space_x, prob.space_y)
    ok = rep.ok and verdict.is_monotone
    report["ok"] = ok
    return Outcome(report, EXIT_OK if ok else EXIT_MATH)


_DISPATCH = {
    "solve": cmd_solve,
    "duals": cmd_duals,
    "check-monotone": cmd_check_monotone,
    "price-bounds": cmd_price_bounds,
    "lipschitz-extend": cmd_lipschitz_extend,
    "verify": cmd_verify,
}


def run(command: str, prob: ProblemFile, flags) -> Outcome:
    if command not in _DISPATCH:
        raise ValidationError(f"unknown command {command!r}")
    return _DISPATCH[command](prob, flags)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="optprice", description="Price corridors for discrete optimal transport.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("problem", help="path to a problem file")
    p.add_argument("--tol", type=float, metavar="EPS", help="sets both equality and feasibility tolerance")
    p.add_argument("--csv", metavar="PATH", help="write label,alpha,gamma,fixed rows (envelope commands)")
    p.add_argument("--witness", action="store_true", help="include violation witnesses")
    p.add_argument("--quiet", action="store_true", help="print nothing on success")
    p.add_argument("--json", action="store_true", help="print the report as JSON")
    p.add_argument("--transport", action="store_true",
                   help="check-monotone: use the negated cost as coupling")
    return p


def _report_error(exc: OptPriceError, flags, prob: ProblemFile | None) -> int:
    code = EXIT_MATH if isinstance(exc, MathematicalError) else EXIT_INVALID
    print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    if flags.witness and isinstance(exc, NotCyclicallyMonotone) and exc.witness and prob is not None:
        print("witness: " + " ".join(f"({prob.space_x.labels[i]}, {prob.space_y.labels[j]})"
                                     for i, j in exc.witness), file=sys.stderr)
    return code


def main(argv=None) -> int:
    flags = build_parser().parse_args(argv)
    prob = None
    try:
        if flags.tol is not None and not (flags.tol >= 0 and math.isfinite(flags.tol)):
            raise ValidationError("--tol must be a nonnegative finite number")
        tol = DEFAULT_TOL if flags.tol is None else Tolerance.uniform(flags.tol)
        if flags.csv and flags.command not in ("price-bounds", "lipschitz-extend"):
            raise ValidationError("--csv is only available for price-bounds and lipschitz-extend")
        prob = parse_problem(flags.problem, tol)
        outcome = run(flags.command, prob, flags)
        if flags.csv:
            try:
                write_csv(flags.csv, outcome.csv_rows)
            except OSError as exc:
                raise ValidationError(f"cannot write {flags.csv}: {exc}") from None
    except OptPriceError as exc:
        return _report_error(exc, flags, prob)
    if not (flags.quiet and outcome.exit_code == EXIT_OK):
        sys.stdout.write(emit_json(outcome.report) + "\n" if flags.json else emit_text(outcome.report))
    return outcome.exit_code


if __name__ == "__main__":
    sys.exit(main())
