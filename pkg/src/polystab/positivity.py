"""Positivity certificates by parameter elimination.

After a formal factorization, every factor term with an odd exponent has to
vanish and every remaining term must carry a nonnegative coefficient; what is
left is then a weighted sum of even powers of linear forms.  ``solve`` searches
for parameter values that achieve this, ``extract_sos`` renders the result.

A failed search returns a ``Failure`` value.  It means no certificate was found,
not that the polynomial takes negative values.
"""

from __future__ import annotations

import math
import random
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .formalfactor import FactorTerm, FormalFactorization, formal_lf
from .polyring import (
    EvaluationError,
    ParamPoly,
    ParamRat,
    Polynomial,
    Role,
    Symbol,
    _join_signed,
    eval_numeric,
    natural_key,
)

__all__ = [
    "ParityClassification",
    "Constraint",
    "Surd",
    "Interval",
    "ParamInterval",
    "SolutionSet",
    "SumOfSquares",
    "Failure",
    "Certificate",
    "WitnessReport",
    "classify",
    "solve",
    "extract_sos",
    "pos_check",
    "verify_witness",
    "resolve_witness",
]

CANDIDATE_VALUES = [Fraction(v) for v in (0, 1, -1, Fraction(1, 2), Fraction(-1, 2), 2, -2)]
WITNESS_GRID = [Fraction(v) for v in (1, -1, Fraction(1, 2), Fraction(-1, 2), 2, -2, 4, -4, 0)]
RANDOM_TRIES = 200
WITNESS_NODE_CAP = 20000


# ---------------------------------------------------------------------------
# data
# ---------------------------------------------------------------------------


@dataclass
class ParityClassification:
    odd: list  # (mu, coefficient), mu counted from 1 over factors then remainder
    even: list

    @property
    def size(self) -> int:
        return len(self.odd) + len(self.even)


@dataclass
class Constraint:
    expr: ParamRat
    relation: str  # ">=0", ">0" or "!=0"
    source: str = ""

    def holds(self, point: Mapping) -> bool:
        try:
            v = self.expr.evaluate(point)
        except (EvaluationError, ZeroDivisionError):
            return False
        if self.relation == ">0":
            return v > 0
        if self.relation == ">=0":
            return v >= 0
        return v != 0

    def __str__(self) -> str:
        op = {">0": ">", ">=0": ">=", "!=0": "!="}[self.relation]
        return f"{self.expr} {op} 0"


def _squarefree(n: int) -> tuple[int, int]:
    """n = k^2 * m with m squarefree (trial division, partial for huge n)."""
    k, m = 1, 1
    d = 2
    while d * d <= n and d < 100000:
        while n % (d * d) == 0:
            n //= d * d
            k *= d
        if n % d == 0:
            n //= d
            m *= d
        d += 1
    return k, m * n


@dataclass(frozen=True)
class Surd:
    """``a + s*sqrt(r)`` with rational a, r >= 0 and sign s in {-1, 1}."""

    a: Fraction
    r: Fraction = Fraction(0)
    s: int = 1

    def __post_init__(self):
        r = Fraction(self.r)
        if r < 0:
            raise ValueError("negative radicand")
        rn, rd = math.isqrt(r.numerator), math.isqrt(r.denominator)
        if rn * rn == r.numerator and rd * rd == r.denominator:
            object.__setattr__(self, "a", Fraction(self.a) + self.s * Fraction(rn, rd))
            object.__setattr__(self, "r", Fraction(0))
            object.__setattr__(self, "s", 1)

    @property
    def is_rational(self) -> bool:
        return self.r == 0

    def __float__(self) -> float:
        return float(self.a) + self.s * math.sqrt(self.r)

    def __str__(self) -> str:
        if self.is_rational:
            return _fstr(self.a)
        # sqrt(p/q) = sqrt(p*q)/q = k*sqrt(m)/q
        k, m = _squarefree(self.r.numerator * self.r.denominator)
        coef = Fraction(k, self.r.denominator)
        root = f"sqrt({m})" if coef == 1 else f"{_fstr(coef)}*sqrt({m})"
        sign = "+" if self.s > 0 else "-"
        if self.a == 0:
            return root if self.s > 0 else f"-{root}"
        return f"{_fstr(self.a)} {sign} {root}"


def _fstr(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


@dataclass(frozen=True)
class Interval:
    lo: Surd | None  # None means unbounded
    hi: Surd | None
    lo_open: bool = True
    hi_open: bool = True

    def contains(self, v: float, strict: bool = False) -> bool:
        if self.lo is not None:
            lo = float(self.lo)
            if v < lo or ((self.lo_open or strict) and v == lo):
                return False
        if self.hi is not None:
            hi = float(self.hi)
            if v > hi or ((self.hi_open or strict) and v == hi):
                return False
        return True

    def __str__(self) -> str:
        left = "(" if self.lo is None or self.lo_open else "["
        right = ")" if self.hi is None or self.hi_open else "]"
        lo = "-inf" if self.lo is None else str(self.lo)
        hi = "inf" if self.hi is None else str(self.hi)
        return f"{left}{lo}, {hi}{right}"


@dataclass
class ParamInterval:
    param: str
    pieces: list  # Interval union
    pinned: dict = field(default_factory=dict)  # other parameters held at witness values

    def __str__(self) -> str:
        body = " U ".join(str(iv) for iv in self.pieces) or "(empty)"
        text = f"{self.param} in {body}"
        if self.pinned:
            pins = ", ".join(f"{k}={_fstr(v)}" for k, v in self.pinned.items())
            text += f" (at {pins})"
        return text


@dataclass
class SolutionSet:
    equalities: dict  # name -> ParamRat in free parameters, in solve order
    inequalities: list  # Constraint
    free_params: list  # names
    witness: dict | None  # name -> Fraction for every free parameter
    steps: list = field(default_factory=list)
    intervals: list = field(default_factory=list)  # ParamInterval
    solved_forms: list = field(default_factory=list)  # human readable "B2 < 0"
    factorization: FormalFactorization | None = None
    constant_values: dict = field(default_factory=dict)

    @property
    def nonvanishing(self) -> list:
        return [c for c in self.inequalities if c.relation == "!=0"]

    @property
    def sign_constraints(self) -> list:
        return [c for c in self.inequalities if c.relation != "!=0"]

    def bindings(self) -> dict:
        return dict(self.equalities)


@dataclass
class SumOfSquares:
    gens: tuple
    terms: list  # FactorTerm with only even exponents
    provenance: SolutionSet | None = None

    def polynomial(self) -> Polynomial:
        total = Polynomial.zero(self.gens)
        for t in self.terms:
            total = total + t.polynomial(self.gens)
        return total

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        return _join_signed([t.render(self.gens) for t in self.terms])


@dataclass
class Failure:
    reason: str
    steps: list = field(default_factory=list)

    def __bool__(self) -> bool:
        return False

    def __str__(self) -> str:
        return f"no certificate found (inconclusive): {self.reason}"


@dataclass
class Certificate:
    polynomial: Polynomial
    factorization: FormalFactorization
    classification: ParityClassification
    solution: SolutionSet
    sos: SumOfSquares
    numeric_sos: SumOfSquares | None
    positive_definite: bool


@dataclass
class WitnessReport:
    ok: bool
    samples: int
    min_value: float
    counterexample: dict | None = None
    mismatch: Polynomial | None = None

    def __bool__(self) -> bool:
        return self.ok


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------


def _remainder_terms(f: FormalFactorization) -> list[FactorTerm]:
    n = len(f.gens)
    out = []
    for m, c in f.remainder.items():
        out.append(FactorTerm(c, tuple(m), (None,) * n))
    return out


def _all_terms(f: FormalFactorization) -> list[FactorTerm]:
    return list(f.factors) + _remainder_terms(f)


def classify(f: FormalFactorization) -> ParityClassification:
    odd, even = [], []
    for mu, t in enumerate(_all_terms(f), start=1):
        (even if t.is_even else odd).append((mu, t.coefficient))
    return ParityClassification(odd, even)


# ---------------------------------------------------------------------------
# elimination search
# ---------------------------------------------------------------------------


class _CapHit(Exception):
    pass


def _as_symbols(params: Iterable, role_default: Role = Role.FEEDBACK) -> dict[str, Symbol]:
    out = {}
    for p in params:
        if isinstance(p, Symbol):
            out[p.name] = p
        else:
            role = Role.W_PARAM if str(p).startswith("W_") else role_default
            out[str(p)] = Symbol(str(p), role)
    return out


def _complexity(c: ParamPoly) -> tuple:
    return (len(c.terms), c.total_degree())


def _update_bindings(bindings: dict, name: str, value: ParamRat) -> dict:
    sub = {name: value}
    out = {k: v.subs(sub) for k, v in bindings.items()}
    out[name] = value
    return out


@dataclass
class _Ctx:
    odd: list
    even: list
    symbols: dict
    constants: frozenset
    constant_values: dict
    strict: bool
    cap: int
    rng_seed: int
    nodes: int = 0


def _affine_moves(num: ParamPoly, ctx: _Ctx) -> list[tuple[str, ParamRat, ParamPoly]]:
    moves = []
    for s in num.symbols():
        if s not in ctx.symbols or num.degree_in(s) != 1:
            continue
        parts = num.collect(s)
        cof = parts[1]
        rest = parts.get(0, ParamPoly())
        sym = ctx.symbols[s]
        key = (
            0 if sym.role is Role.W_PARAM else 1,
            0 if cof.is_constant else 1,
            _complexity(cof),
            sym.sort_key,
        )
        moves.append((key, s, ParamRat(-rest, cof), cof))
    moves.sort(key=lambda t: t[0])
    return [(s, v, cof) for _, s, v, cof in moves]


def _dfs(i: int, bindings: dict, cofactors: list, steps: list, ctx: _Ctx):
    ctx.nodes += 1
    if ctx.nodes > ctx.cap:
        raise _CapHit()
    if i == len(ctx.odd):
        return _leaf(bindings, cofactors, steps, ctx)
    mu, coeff = ctx.odd[i]
    c = coeff.subs(bindings)
    if c.is_zero:
        return _dfs(i + 1, bindings, cofactors, steps, ctx)
    num = c.num
    decision = [s for s in num.symbols() if s in ctx.symbols]
    if not decision:
        return None
    for s, value, cof in _affine_moves(num, ctx):
        nb = _update_bindings(bindings, s, value)
        ncof = cofactors if cof.is_constant else cofactors + [ParamRat(cof)]
        step = f"c{mu}: {c} = 0  =>  {s} = {value}"
        res = _dfs(i + 1, nb, ncof, steps + [step], ctx)
        if res is not None:
            return res
    ordered = sorted(decision, key=lambda s: ctx.symbols[s].sort_key)
    for s in ordered:
        for v in CANDIDATE_VALUES:
            nb = _update_bindings(bindings, s, ParamRat(v))
            step = f"c{mu}: {c} = 0  =>  try {s} = {_fstr(v)}"
            res = _dfs(i, nb, cofactors, steps + [step], ctx)
            if res is not None:
                return res
    return None


def _primitive(pp: ParamPoly) -> ParamPoly:
    """Scale by a positive rational to coprime integer coefficients."""
    if pp.is_zero:
        return pp
    lcm = 1
    for c in pp.terms.values():
        lcm = lcm * c.denominator // math.gcd(lcm, c.denominator)
    g = 0
    for c in pp.terms.values():
        g = math.gcd(g, (c * lcm).numerator)
    return pp.scale(Fraction(lcm, g))


def _tidy(c: ParamRat) -> ParamRat:
    """Same sign as ``c``, with numerator and denominator made primitive separately."""
    num = _primitive(c.num)
    if c.den.is_constant:
        if c.den.constant_value < 0:
            num = -num
        return ParamRat._make(num, ParamPoly.constant(1))
    return ParamRat._make(num, _primitive(c.den))


def _nonvanishing(pp: ParamPoly, source: str) -> list[Constraint]:
    """Split off monomial factors so each condition reads as simply as possible."""
    out = []
    content = pp.monomial_content()
    for s, _ in content:
        out.append(Constraint(ParamRat.symbol(s), "!=0", source))
    rest = _primitive(pp.divide_monomial(content))
    if not rest.is_constant:
        if rest.leading_term()[1] < 0:
            rest = -rest
        out.append(Constraint(ParamRat(rest), "!=0", source))
    return out


def _dedupe(constraints: list[Constraint]) -> list[Constraint]:
    out: list[Constraint] = []
    for c in constraints:
        if any(c.relation == o.relation and c.expr == o.expr for o in out):
            continue
        out.append(c)
    return out


def _leaf(bindings: dict, cofactors: list, steps: list, ctx: _Ctx):
    constraints: list[Constraint] = []
    nonvanishing: list[Constraint] = []
    for mu, coeff in ctx.even:
        c = coeff.subs(bindings)
        if c.is_constant:
            if c.constant_value < 0:
                return None
            continue
        else:
            constraints.append(Constraint(_tidy(c), ">0" if ctx.strict else ">=0", f"c{mu}"))
            if not c.den.is_constant:
                nonvanishing += _nonvanishing(c.den, f"denominator of c{mu}")
    for cof in cofactors:
        v = cof.subs(bindings)
        if v.is_zero:
            return None
        if not v.is_constant:
            nonvanishing += _nonvanishing(v.num, "elimination cofactor")
    for name, v in bindings.items():
        if not v.den.is_constant:
            nonvanishing += _nonvanishing(v.den, f"denominator of {name}")
    nonvanishing = _dedupe(nonvanishing)
    all_constraints = constraints + nonvanishing
    involved = set()
    for c in all_constraints:
        involved |= c.expr.symbols()
    for v in bindings.values():
        involved |= v.symbols()
    unresolved_constants = {s for s in involved if s in ctx.constants and s not in ctx.constant_values}
    if unresolved_constants:
        return bindings, all_constraints, None, steps
    witness = _find_witness(all_constraints, ctx)
    if witness is None:
        return None
    return bindings, all_constraints, witness, steps


# ---------------------------------------------------------------------------
# witness search
# ---------------------------------------------------------------------------


def _univariate(expr: ParamPoly, s: str) -> list[Fraction]:
    """Coefficient list (index = power) of a polynomial whose only symbol is ``s``."""
    coeffs = [Fraction(0)] * (expr.degree_in(s) + 1)
    for m, c in expr.terms.items():
        e = m[0][1] if m else 0
        coeffs[e] += c
    return coeffs


def _interval_candidates(constraint: Constraint, s: str, point: dict) -> list[Fraction]:
    pinned = {k: ParamRat(v) for k, v in point.items() if k in constraint.expr.symbols()}
    try:
        e = constraint.expr.subs(pinned)
    except EvaluationError:
        return []
    if e.symbols() != {s}:
        return []
    poly = e.num * e.den
    coeffs = _univariate(poly, s)
    if len(coeffs) < 2:
        return []
    roots = np.roots([float(c) for c in reversed(coeffs)])
    real = sorted({float(r.real) for r in roots if abs(r.imag) < 1e-9})
    if not real:
        return []
    cands = [real[0] - 1.0] + [(a + b) / 2 for a, b in zip(real, real[1:])] + [real[-1] + 1.0]
    out = []
    for v in cands:
        for lim in (4, 16, 1000):
            q = Fraction(v).limit_denominator(lim)
            if q not in out:
                out.append(q)
    return out


def _find_witness(constraints: list[Constraint], ctx: _Ctx) -> dict | None:
    params = set()
    for c in constraints:
        params |= {s for s in c.expr.symbols() if s in ctx.symbols}
    order = sorted(params, key=lambda s: ctx.symbols[s].sort_key)
    base = {k: Fraction(v) for k, v in ctx.constant_values.items()}
    if not order:
        return {} if all(c.holds(base) for c in constraints) else None
    level = {s: i for i, s in enumerate(order)}
    by_level: list[list[Constraint]] = [[] for _ in order]
    for c in constraints:
        syms = [s for s in c.expr.symbols() if s in level]
        if syms:
            by_level[max(level[s] for s in syms)].append(c)
        elif not c.holds(base):
            return None
    touching = {s: [c for c in constraints if s in c.expr.symbols()] for s in order}
    budget = [WITNESS_NODE_CAP]

    def rec(i: int, point: dict):
        if i == len(order):
            return dict(point)
        s = order[i]
        seen = set()
        cands = list(WITNESS_GRID)
        for c in touching[s]:
            cands += _interval_candidates(c, s, point)
        for v in cands:
            if v in seen:
                continue
            seen.add(v)
            budget[0] -= 1
            if budget[0] < 0:
                return None
            point[s] = v
            if all(c.holds(point) for c in by_level[i]):
                res = rec(i + 1, point)
                if res is not None:
                    return res
            del point[s]
        return None

    found = rec(0, dict(base))
    if found is None:
        rng = random.Random(ctx.rng_seed)
        for _ in range(RANDOM_TRIES):
            point = dict(base)
            for s in order:
                point[s] = Fraction(rng.randint(-64, 64), 8)
            if all(c.holds(point) for c in constraints):
                found = point
                break
    if found is None:
        return None
    return {s: found[s] for s in order}


# ---------------------------------------------------------------------------
# interval reporting
# ---------------------------------------------------------------------------


def _roots_upto2(coeffs: list[Fraction]) -> list[Surd] | None:
    while coeffs and coeffs[-1] == 0:
        coeffs = coeffs[:-1]
    deg = len(coeffs) - 1
    if deg <= 0:
        return []
    if deg == 1:
        return [Surd(-coeffs[0] / coeffs[1])]
    if deg == 2:
        c, b, a = coeffs
        disc = b * b - 4 * a * c
        if disc < 0:
            return []
        centre = -b / (2 * a)
        r = disc / (4 * a * a)
        if r == 0:
            return [Surd(centre)]
        return [Surd(centre, r, -1), Surd(centre, r, 1)]
    return None


def _eval_univ(coeffs: list[Fraction], x: float) -> float:
    return sum(float(c) * x**k for k, c in enumerate(coeffs))


def _solve_univariate(e: ParamRat, s: str, relation: str) -> list[Interval] | None:
    ncoef = _univariate(e.num, s) if e.num.symbols() else [e.num.constant_value]
    dcoef = _univariate(e.den, s) if e.den.symbols() else [e.den.constant_value]
    nr = _roots_upto2(ncoef)
    dr = _roots_upto2(dcoef)
    if nr is None or dr is None:
        return None
    crit: list[tuple[float, Surd, bool]] = []
    for r in nr:
        crit.append((float(r), r, False))
    for r in dr:
        crit.append((float(r), r, True))
    crit.sort(key=lambda t: t[0])
    merged: list[list] = []
    for x, r, is_pole in crit:
        if merged and abs(merged[-1][0] - x) < 1e-12:
            merged[-1][2] = merged[-1][2] or is_pole
        else:
            merged.append([x, r, is_pole])

    def ok(x: float) -> bool:
        d = _eval_univ(dcoef, x)
        if d == 0:
            return False
        v = _eval_univ(ncoef, x) / d
        return v > 0 if relation == ">0" else v >= 0

    xs = [m[0] for m in merged]
    if not xs:
        return [Interval(None, None)] if ok(0.0) else []
    tests = [xs[0] - 1.0] + [(a + b) / 2 for a, b in zip(xs, xs[1:])] + [xs[-1] + 1.0]
    pieces: list[Interval] = []
    for k, t in enumerate(tests):
        if not ok(t):
            continue
        lo = merged[k - 1] if k > 0 else None
        hi = merged[k] if k < len(merged) else None
        lo_open = lo is None or lo[2] or relation == ">0"
        hi_open = hi is None or hi[2] or relation == ">0"
        iv = Interval(lo[1] if lo else None, hi[1] if hi else None, lo_open, hi_open)
        if pieces and pieces[-1].hi is not None and iv.lo is not None and not pieces[-1].hi_open and not iv.lo_open and float(pieces[-1].hi) == float(iv.lo):
            prev = pieces.pop()
            iv = Interval(prev.lo, iv.hi, prev.lo_open, iv.hi_open)
        pieces.append(iv)
    return pieces


def _intersect(a: list[Interval], b: list[Interval]) -> list[Interval]:
    out = []
    for x in a:
        for y in b:
            lo, lo_open = x.lo, x.lo_open
            if y.lo is not None and (lo is None or float(y.lo) > float(lo) or (float(y.lo) == float(lo) and y.lo_open)):
                lo, lo_open = y.lo, y.lo_open
            hi, hi_open = x.hi, x.hi_open
            if y.hi is not None and (hi is None or float(y.hi) < float(hi) or (float(y.hi) == float(hi) and y.hi_open)):
                hi, hi_open = y.hi, y.hi_open
            if lo is not None and hi is not None:
                if float(lo) > float(hi) or (float(lo) == float(hi) and (lo_open or hi_open)):
                    continue
            out.append(Interval(lo, hi, lo_open, hi_open))
    return out


def _solved_form(c: Constraint, symbols: dict) -> str | None:
    """``s < expr`` for a constraint affine in ``s`` with a constant cofactor."""
    if c.relation == "!=0":
        return None
    e = c.expr
    for s in sorted(e.symbols(), key=lambda n: symbols[n].sort_key if n in symbols else (9, (), natural_key(n))):
        if s not in symbols or e.den.degree_in(s) or e.num.degree_in(s) != 1:
            continue
        parts = e.num.collect(s)
        cof = ParamRat(parts[1], e.den)
        if not cof.is_constant:
            continue
        k = cof.constant_value
        bound = ParamRat(-parts.get(0, ParamPoly()), e.den) / ParamRat(k)
        strict = c.relation == ">0"
        if k > 0:
            op = ">" if strict else ">="
        else:
            op = "<" if strict else "<="
        return f"{s} {op} {bound}"
    return None


def _interval_report(constraints: list[Constraint], witness: dict | None, symbols: dict) -> list[ParamInterval]:
    groups: dict[tuple, ParamInterval] = {}
    order: list[tuple] = []
    for c in constraints:
        if c.relation == "!=0":
            continue
        syms = [s for s in c.expr.symbols() if s in symbols]
        for s in sorted(syms, key=lambda n: symbols[n].sort_key):
            others = [o for o in c.expr.symbols() if o != s]
            if others and (witness is None or any(o not in witness for o in others)):
                continue
            pinned = {o: witness[o] for o in sorted(others, key=natural_key)} if others else {}
            e = c.expr.subs({o: ParamRat(v) for o, v in pinned.items()}) if pinned else c.expr
            if e.symbols() != {s}:
                continue
            pieces = _solve_univariate(e, s, c.relation)
            if pieces is None:
                continue
            key = (s, tuple(pinned.items()))
            if key in groups:
                groups[key].pieces = _intersect(groups[key].pieces, pieces)
            else:
                groups[key] = ParamInterval(s, pieces, pinned)
                order.append(key)
    return [groups[k] for k in order]


# ---------------------------------------------------------------------------
# public entry points
# ---------------------------------------------------------------------------


def solve(
    f: FormalFactorization,
    cls: ParityClassification | None = None,
    decision_params: Iterable | None = None,
    *,
    constants: Iterable[str] = (),
    constant_values: Mapping[str, object] | None = None,
    strict: bool = False,
    branch_cap: int = 256,
    seed: int = 0,
):
    """Eliminate the odd coefficients; return a ``SolutionSet`` or a ``Failure``."""
    if cls is None:
        cls = classify(f)
    symbols = {s.name: s for s in f.params}
    if decision_params is not None:
        symbols.update(_as_symbols(decision_params))
    constants = frozenset(constants)
    for c in constants:
        symbols.pop(c, None)
    cvals = {k: Fraction(v) for k, v in (constant_values or {}).items()}
    ctx = _Ctx(cls.odd, cls.even, symbols, constants, cvals, strict, branch_cap, seed)
    try:
        res = _dfs(0, {}, [], [], ctx)
    except _CapHit:
        return Failure(f"branch cap {branch_cap} exhausted")
    if res is None:
        return Failure("no parameter choice removes every odd term with nonnegative even coefficients")
    bindings, constraints, witness, steps = res
    free = sorted((s for s in symbols if s not in bindings), key=lambda s: symbols[s].sort_key)
    if witness is not None:
        witness = {s: witness.get(s, Fraction(0)) for s in free}
    intervals = _interval_report(constraints, witness, symbols)
    solved = [t for t in (_solved_form(c, symbols) for c in constraints) if t]
    return SolutionSet(
        equalities=bindings,
        inequalities=constraints,
        free_params=free,
        witness=witness,
        steps=steps,
        intervals=intervals,
        solved_forms=solved,
        factorization=f,
        constant_values=cvals,
    )


def resolve_witness(s: SolutionSet) -> dict:
    """Numeric values of every parameter: the witness plus evaluated equalities."""
    if s.witness is None:
        raise ValueError("solution set has no numeric witness")
    point = dict(s.constant_values)
    point.update(s.witness)
    for name, expr in s.equalities.items():
        if name not in point:
            point[name] = expr.evaluate(point)
    return point


def extract_sos(f: FormalFactorization, s: SolutionSet, numeric: bool = False) -> SumOfSquares:
    bindings = dict(s.equalities)
    if numeric:
        bindings = {k: ParamRat(v) for k, v in resolve_witness(s).items()}
    terms = []
    for t in _all_terms(f):
        t2 = t.subs(bindings)
        if t2.coefficient.is_zero:
            continue
        if not t2.is_even:
            raise ValueError(f"odd term survives the solution: {t2.render_body(f.gens)}")
        terms.append(t2)
    return SumOfSquares(f.gens, terms, s)


def _positive_definite(sos: SumOfSquares) -> bool:
    covered = set()
    for t in sos.terms:
        c = t.coefficient
        if not c.is_constant or c.constant_value <= 0:
            continue
        nz = [i for i, e in enumerate(t.exponents) if e]
        if len(nz) == 1:
            covered.add(nz[0])
    return len(covered) == len(sos.gens)


def pos_check(
    p: Polynomial,
    decision_params: Iterable | None = None,
    *,
    constants: Iterable[str] = (),
    constant_values: Mapping[str, object] | None = None,
    strict: bool = False,
    branch_cap: int = 256,
    seed: int = 0,
):
    """Factor, classify, solve and extract; ``Certificate`` or ``Failure``."""
    if decision_params is None:
        decision_params = [s for s in p.params() if s not in set(constants)]
    f = formal_lf(p)
    cls = classify(f)
    s = solve(
        f,
        cls,
        decision_params,
        constants=constants,
        constant_values=constant_values,
        strict=strict,
        branch_cap=branch_cap,
        seed=seed,
    )
    if not s:
        return s
    sos = extract_sos(f, s)
    numeric = extract_sos(f, s, numeric=True) if s.witness is not None else None
    pd = _positive_definite(numeric if numeric is not None else sos)
    return Certificate(p, f, cls, s, sos, numeric, pd)


def verify_witness(p: Polynomial, s: SolutionSet, samples: int = 1000, seed: int = 0) -> WitnessReport:
    """Sample ``p`` under the witness and re-expand the even terms exactly."""
    point = {k: Fraction(v) for k, v in resolve_witness(s).items()}
    pw = p.subs_params({k: ParamRat(v) for k, v in point.items() if k in p.params()})
    mismatch = None
    if s.factorization is not None:
        b = {k: ParamRat(v) for k, v in point.items()}
        even = Polynomial.zero(p.gens)
        for t in _all_terms(s.factorization):
            if t.is_even:
                even = even + t.subs(b).polynomial(p.gens)
        diff = even - pw
        if not diff.is_zero:
            mismatch = diff
    rng = random.Random(seed)
    worst = math.inf
    bad = None
    for _ in range(samples if pw.terms else 0):
        x = {g: Fraction(rng.randint(-1000, 1000), 100) for g in p.gens}
        v = eval_numeric(pw, x)
        if v < worst:
            worst = v
        if v < Fraction(-1, 10**9) and bad is None:
            bad = x
    if worst is math.inf:
        worst = 0
    return WitnessReport(bad is None and mismatch is None, samples, float(worst), bad, mismatch)
