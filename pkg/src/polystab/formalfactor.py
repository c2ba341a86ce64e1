"""Formal linear-like factorization.

Repeatedly peel the maxterm ``c * x1^j1 * ... * xn^jn`` off the polynomial and
replace it by ``c * x1^j1 * L2^j2 * ... * Ln^jn`` where each
``L_s = x_s + W_s_1_k*x1 + ... + W_s_(s-1)_k*x_(s-1)`` carries fresh parameters.
The difference only contains monomials strictly below the maxterm, so the loop
terminates once nothing but powers of ``x1`` is left.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

from .polyring import (
    ONE,
    ParamRat,
    Polynomial,
    Role,
    Symbol,
    _join_signed,
    format_monomial,
    lex_key,
    natural_key,
    term_pieces,
)

__all__ = [
    "LinearForm",
    "FactorTerm",
    "FormalFactorization",
    "RuleSet",
    "FactorizationError",
    "w_name",
    "formal_lf",
    "expand",
    "evaluate",
    "descent_ok",
    "params_sorted",
]


class FactorizationError(RuntimeError):
    pass


def w_name(sigma: int, rho: int, k: int) -> str:
    return f"W_{sigma}_{rho}_{k}"


@dataclass(frozen=True)
class LinearForm:
    """``x_sigma + sum_{rho < sigma} coefficients[rho-1] * x_rho``."""

    sigma: int
    iteration: int
    coefficients: tuple  # ParamRat per position 1..sigma-1

    def polynomial(self, gens: Sequence[str]) -> Polynomial:
        terms = {}
        n = len(gens)
        lead = [0] * n
        lead[self.sigma - 1] = 1
        terms[tuple(lead)] = ONE
        for rho, c in enumerate(self.coefficients, start=1):
            if c.is_zero:
                continue
            m = [0] * n
            m[rho - 1] = 1
            terms[tuple(m)] = c
        return Polynomial(gens, terms)

    def subs(self, bindings) -> "LinearForm":
        return LinearForm(
            self.sigma, self.iteration, tuple(c.subs(bindings) for c in self.coefficients)
        )

    def is_bare(self) -> bool:
        return all(c.is_zero for c in self.coefficients)

    def render(self, gens: Sequence[str]) -> str:
        pieces = [(False, gens[self.sigma - 1])]
        for rho in range(self.sigma - 1, 0, -1):
            c = self.coefficients[rho - 1]
            if not c.is_zero:
                pieces.append(term_pieces(c, gens[rho - 1]))
        return _join_signed(pieces)


@dataclass(frozen=True)
class FactorTerm:
    coefficient: ParamRat
    exponents: tuple
    forms: tuple  # LinearForm or None per position; position 1 is always None (bare x1)

    def polynomial(self, gens: Sequence[str]) -> Polynomial:
        n = len(gens)
        m = [0] * n
        m[0] = self.exponents[0]
        # expand the forms first: their coefficients are single symbols, c_mu can be large
        out = Polynomial(gens, {tuple(m): 1})
        for idx in range(1, n):
            e = self.exponents[idx]
            if e:
                out = out * self.forms[idx].polynomial(gens) ** e
        return out.scale(self.coefficient)

    def subs(self, bindings) -> "FactorTerm":
        return FactorTerm(
            self.coefficient.subs(bindings),
            self.exponents,
            tuple(f.subs(bindings) if f is not None else None for f in self.forms),
        )

    @property
    def is_even(self) -> bool:
        return all(e % 2 == 0 for e in self.exponents)

    def render_body(self, gens: Sequence[str]) -> str:
        parts = []
        e1 = self.exponents[0]
        if e1:
            parts.append(gens[0] if e1 == 1 else f"{gens[0]}^{e1}")
        for idx in range(1, len(gens)):
            e = self.exponents[idx]
            if not e:
                continue
            f = self.forms[idx]
            base = f.render(gens)
            if not f.is_bare():
                base = f"({base})"
            parts.append(base if e == 1 else f"{base}^{e}")
        return "*".join(parts)

    def render(self, gens: Sequence[str]) -> tuple[bool, str]:
        return term_pieces(self.coefficient, self.render_body(gens))


@dataclass
class FormalFactorization:
    gens: tuple
    factors: list
    remainder: Polynomial
    params: list = field(default_factory=list)  # Symbol, in minting order
    maxterms: list = field(default_factory=list)  # monomial extracted at each iteration

    def remainder_terms(self) -> list[tuple[int, ParamRat]]:
        """(x1 exponent, coefficient) pairs of the remainder, descending."""
        return [(m[0], c) for m, c in self.remainder.items()]

    def subs(self, bindings) -> "FormalFactorization":
        return FormalFactorization(
            self.gens,
            [f.subs(bindings) for f in self.factors],
            self.remainder.subs_params(bindings),
            list(self.params),
            list(self.maxterms),
        )

    def pieces(self, drop_zero: bool = True) -> list[tuple[bool, str]]:
        out = []
        for f in self.factors:
            if drop_zero and f.coefficient.is_zero:
                continue
            out.append(f.render(self.gens))
        for m, c in self.remainder.items():
            out.append(term_pieces(c, format_monomial(self.gens, m)))
        return out

    def __str__(self) -> str:
        pieces = self.pieces()
        return _join_signed(pieces) if pieces else "0"


@dataclass
class RuleSet:
    """Parameter vector plus one or more rule vectors of values."""

    params: tuple
    rules: list

    def __post_init__(self):
        self.params = tuple(p.name if isinstance(p, Symbol) else p for p in self.params)
        for r in self.rules:
            if len(r) != len(self.params):
                raise ValueError(
                    f"rule vector of length {len(r)} does not match {len(self.params)} parameters"
                )

    def bindings(self):
        for r in self.rules:
            yield {p: ParamRat.coerce(v) for p, v in zip(self.params, r)}


def _form_for(sigma: int, k: int, minted: list) -> LinearForm:
    coeffs = []
    for rho in range(1, sigma):
        name = w_name(sigma, rho, k)
        minted.append(Symbol(name, Role.W_PARAM, (sigma, rho, k)))
        coeffs.append(ParamRat.symbol(name))
    return LinearForm(sigma, k, tuple(coeffs))


def formal_lf(p: Polynomial, max_iterations: int | None = None) -> FormalFactorization:
    """Factor ``p`` over its generators, taken in order as x1 < x2 < ... < xn."""
    gens = p.gens
    n = len(gens)
    if n == 0:
        return FormalFactorization(gens, [], p)
    existing = {s for s in p.params() if s.startswith("W_")}
    if existing:
        raise ValueError(f"input already contains factorization parameters: {sorted(existing)}")
    if max_iterations is None:
        max_iterations = 10 * max(1, len(p.terms)) * (p.degree() + 1) ** n
    rest = p
    factors: list[FactorTerm] = []
    minted: list[Symbol] = []
    maxterms: list = []
    k = 0
    remainder_terms = {}
    while rest.terms:
        c, m = rest.maxterm()
        if all(e == 0 for e in m[1:]):
            # everything left is a polynomial in x1
            remainder_terms = dict(rest.terms)
            break
        k += 1
        if k > max_iterations:
            raise FactorizationError(f"iteration cap {max_iterations} exceeded")
        forms = [None] * n
        for idx in range(1, n):
            if m[idx]:
                forms[idx] = _form_for(idx + 1, k, minted)
        term = FactorTerm(c, tuple(m), tuple(forms))
        factors.append(term)
        maxterms.append(tuple(m))
        rest = rest - term.polynomial(gens)
    remainder = Polynomial(gens, remainder_terms)
    return FormalFactorization(gens, factors, remainder, minted, maxterms)


def expand(f: FormalFactorization) -> Polynomial:
    total = f.remainder
    for term in f.factors:
        if not term.coefficient.is_zero:
            total = total + term.polynomial(f.gens)
    return total


def evaluate(f: FormalFactorization, rules: RuleSet) -> list[FormalFactorization]:
    """Apply each rule vector; factor terms whose coefficient vanishes are dropped."""
    out = []
    for b in rules.bindings():
        g = f.subs(b)
        g.factors = [t for t in g.factors if not t.coefficient.is_zero]
        out.append(g)
    return out


def params_sorted(f: FormalFactorization) -> list[str]:
    return sorted((s.name for s in f.params), key=natural_key)


def descent_ok(f: FormalFactorization) -> bool:
    """Maxterms extracted across iterations are strictly decreasing."""
    keys = [lex_key(m) for m in f.maxterms]
    return all(a > b for a, b in zip(keys, keys[1:]))
