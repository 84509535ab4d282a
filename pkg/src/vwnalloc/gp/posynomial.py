"""Monomial/posynomial algebra and the geometric-program container.

Standard form:

    minimize    f0(x)
    subject to  f_i(x) <= 1      (posynomials)
                g_j(x)  = 1      (monomials)
                x > 0, optional box bounds

A monomial is c * prod_n x_n^{a_n} with c > 0; a posynomial is a finite sum
of monomials.  The container additionally accepts *products of posynomials*
for the objective and inequality constraints (generalized GP).  A product
of posynomials is log-convex, so the log-domain solver handles it exactly;
a plain posynomial is the one-factor special case.  This avoids the
exponential term blow-up of expanding products like prod_t gamma_t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass
class Monomial:
    """c * prod x^a with c > 0; exponents keyed by variable name."""

    coefficient: float
    exponents: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not (self.coefficient > 0 and math.isfinite(self.coefficient)):
            raise ValueError("monomial coefficient must be positive and finite")
        for v, a in self.exponents.items():
            if not math.isfinite(a):
                raise ValueError(f"non-finite exponent for {v}")

    def evaluate(self, x: dict[str, float]) -> float:
        val = math.log(self.coefficient)
        for v, a in self.exponents.items():
            xv = x[v]
            if xv <= 0:
                raise ValueError(f"variable {v} must be positive, got {xv}")
            val += a * math.log(xv)
        return math.exp(val)

    def __mul__(self, other: "Monomial") -> "Monomial":
        exps = dict(self.exponents)
        for v, a in other.exponents.items():
            exps[v] = exps.get(v, 0.0) + a
        exps = {v: a for v, a in exps.items() if a != 0.0}
        return Monomial(self.coefficient * other.coefficient, exps)


@dataclass
class Posynomial:
    """Nonempty sum of monomials."""

    terms: list[Monomial]

    def __post_init__(self):
        if not self.terms:
            raise ValueError("posynomial needs at least one term")

    def evaluate(self, x: dict[str, float]) -> float:
        return sum(t.evaluate(x) for t in self.terms)

    def scaled(self, c: float) -> "Posynomial":
        if c <= 0:
            raise ValueError("scale factor must be positive")
        return Posynomial([Monomial(t.coefficient * c, dict(t.exponents)) for t in self.terms])

    def times_monomial(self, mono: Monomial) -> "Posynomial":
        return Posynomial([t * mono for t in self.terms])

    @property
    def is_monomial(self) -> bool:
        return len(self.terms) == 1


@dataclass
class PosyProduct:
    """Product of posynomials; log-convex, solvable without expansion."""

    factors: list[Posynomial]

    def __post_init__(self):
        if not self.factors:
            raise ValueError("product needs at least one factor")

    def evaluate(self, x: dict[str, float]) -> float:
        val = 0.0
        for f in self.factors:
            val += math.log(f.evaluate(x))
        return math.exp(val)


def evaluate(f, x: dict[str, float]) -> float:
    """Evaluate a Monomial, Posynomial or PosyProduct at a positive point."""
    return f.evaluate(x)


def as_factors(expr) -> list[Posynomial]:
    if isinstance(expr, PosyProduct):
        return expr.factors
    if isinstance(expr, Posynomial):
        return [expr]
    if isinstance(expr, Monomial):
        return [Posynomial([expr])]
    raise TypeError(f"not a GP expression: {type(expr)!r}")


@dataclass
class GpProblem:
    """Geometric program in standard form (plus posynomial-product support).

    variables:  ordered declaration list; every name referenced by a term
                must appear here
    objective:  Posynomial or PosyProduct to minimize
    ineq:       constraints expr <= 1
    eq:         monomial constraints g = 1
    lower/upper: optional positive box bounds per variable
    """

    variables: list[str]
    objective: Posynomial | PosyProduct
    ineq: list[Posynomial | PosyProduct] = field(default_factory=list)
    eq: list[Monomial] = field(default_factory=list)
    ineq_labels: list[str] = field(default_factory=list)
    eq_labels: list[str] = field(default_factory=list)
    lower: dict[str, float] = field(default_factory=dict)
    upper: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.variables) != len(set(self.variables)):
            raise ValueError("duplicate variable declaration")
        if not self.ineq_labels:
            self.ineq_labels = [f"ineq{i}" for i in range(len(self.ineq))]
        if not self.eq_labels:
            self.eq_labels = [f"eq{j}" for j in range(len(self.eq))]
        if len(self.ineq_labels) != len(self.ineq) or len(self.eq_labels) != len(self.eq):
            raise ValueError("label lists must match constraint lists")
        declared = set(self.variables)
        for f in self._all_exprs():
            for t in f.terms:
                for v in t.exponents:
                    if v not in declared:
                        raise ValueError(f"undeclared variable {v!r}")
        for v, b in list(self.lower.items()) + list(self.upper.items()):
            if v not in declared:
                raise ValueError(f"bound on undeclared variable {v!r}")
            if b <= 0:
                raise ValueError("box bounds must be positive")

    def _all_exprs(self):
        for expr in [self.objective, *self.ineq]:
            yield from as_factors(expr)
        for mono in self.eq:
            yield Posynomial([mono])

    @property
    def constraint_count(self) -> int:
        """Structural constraints (box bounds excluded)."""
        return len(self.ineq) + len(self.eq)


@dataclass
class GpSolution:
    """Result of a GP solve.

    status is one of "optimal", "infeasible", "max_iter".  At "optimal" the
    KKT residual of the log-domain convex program is <= the requested
    tolerance, every inequality holds within tolerance and every monomial
    equality is met to machine precision (they are eliminated exactly).
    """

    x: dict[str, float]
    objective_value: float
    status: str
    kkt_residual: float
    iterations: int
    message: str = ""


def _fmt(v: float) -> str:
    return repr(float(v))


def dump_gp(p: GpProblem) -> str:
    """Readable one-term-per-line dump, stable ordering, for fixtures."""
    order = {v: i for i, v in enumerate(p.variables)}

    def term_str(t: Monomial) -> str:
        parts = [_fmt(t.coefficient)]
        for v in sorted(t.exponents, key=order.__getitem__):
            parts.append(f"{v}^{_fmt(t.exponents[v])}")
        return " ".join(parts)

    lines = ["# gp dump v1"]
    for v in p.variables:
        lo = _fmt(p.lower[v]) if v in p.lower else "-"
        hi = _fmt(p.upper[v]) if v in p.upper else "-"
        lines.append(f"var {v} {lo} {hi}")
    for j, f in enumerate(as_factors(p.objective)):
        for t in f.terms:
            lines.append(f"obj {j} {term_str(t)}")
    for label, expr in zip(p.ineq_labels, p.ineq):
        for j, f in enumerate(as_factors(expr)):
            for t in f.terms:
                lines.append(f"ineq[{label}] {j} {term_str(t)}")
    for label, mono in zip(p.eq_labels, p.eq):
        lines.append(f"eq[{label}] 0 {term_str(mono)}")
    return "\n".join(lines) + "\n"


def parse_gp(text: str) -> GpProblem:
    """Inverse of dump_gp (round-trip fidelity for regression fixtures)."""
    variables: list[str] = []
    lower: dict[str, float] = {}
    upper: dict[str, float] = {}
    obj_factors: dict[int, list[Monomial]] = {}
    ineq: dict[str, dict[int, list[Monomial]]] = {}
    eq: dict[str, Monomial] = {}

    def parse_term(tokens: list[str]) -> Monomial:
        coeff = float(tokens[0])
        exps = {}
        for tok in tokens[1:]:
            name, _, a = tok.rpartition("^")
            exps[name] = float(a)
        return Monomial(coeff, exps)

    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        kind, rest = line.split(" ", 1)
        if kind == "var":
            name, lo, hi = rest.split(" ")
            variables.append(name)
            if lo != "-":
                lower[name] = float(lo)
            if hi != "-":
                upper[name] = float(hi)
        elif kind == "obj":
            j, *toks = rest.split(" ")
            obj_factors.setdefault(int(j), []).append(parse_term(toks))
        elif kind.startswith("ineq["):
            label = kind[5:-1]
            j, *toks = rest.split(" ")
            ineq.setdefault(label, {}).setdefault(int(j), []).append(parse_term(toks))
        elif kind.startswith("eq["):
            label = kind[3:-1]
            _, *toks = rest.split(" ")
            eq[label] = parse_term(toks)
        else:
            raise ValueError(f"bad dump line: {raw!r}")

    def build(fmap: dict[int, list[Monomial]]):
        factors = [Posynomial(fmap[j]) for j in sorted(fmap)]
        return factors[0] if len(factors) == 1 else PosyProduct(factors)

    return GpProblem(
        variables=variables,
        objective=build(obj_factors),
        ineq=[build(fmap) for fmap in ineq.values()],
        eq=list(eq.values()),
        ineq_labels=list(ineq.keys()),
        eq_labels=list(eq.keys()),
        lower=lower,
        upper=upper,
    )
