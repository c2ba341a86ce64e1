"""Exact sparse polynomials whose coefficients are rational functions of named parameters.

Three layers:

* ``ParamPoly``: polynomial in parameter symbols (W's, feedback gains, plant
  constants) with ``Fraction`` coefficients.  A parameter monomial is a sorted
  tuple of ``(name, exponent)`` pairs; the zero polynomial is the empty dict.
* ``ParamRat``: quotient of two ``ParamPoly``.  Zero-testing only needs the
  numerator to expand to zero; full multivariate gcd is not attempted.
* ``Polynomial``: sparse map from dense exponent tuples over an ordered list of
  variable names (``gens``) to ``ParamRat`` coefficients.

Monomials over the variables are ordered lexicographically with the *last*
generator most significant, so for states ``x1, ..., xn`` we get
``x1 < x1^7 < x1*x2 < x1*x2^8 < x1*x2*x3``.
"""

from __future__ import annotations

import enum
import functools
import math
import re
import threading
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Union

__all__ = [
    "Role",
    "Symbol",
    "SymbolTable",
    "ParamPoly",
    "ParamRat",
    "Polynomial",
    "EvaluationError",
    "lex_compare",
    "lex_key",
    "maxterm",
    "substitute",
    "partial_derivative",
    "eval_numeric",
    "natural_key",
]

Monomial = tuple  # dense exponent tuple aligned with Polynomial.gens
PMono = tuple  # sorted ((name, exp), ...) over parameter symbols
Number = Union[int, Fraction, float]

_IDENT = re.compile(r"^[^\W\d]\w*$")


class EvaluationError(ValueError):
    """Raised when a numeric evaluation cannot be carried out."""


def natural_key(name: str) -> tuple:
    """Sort key that orders ``W_2_1_2`` before ``W_2_1_13``."""
    parts = re.split(r"(\d+)", name)
    return tuple((0, int(p)) if p.isdigit() else (1, p) for p in parts if p)


class Role(str, enum.Enum):
    STATE = "state"
    INPUT = "input"
    W_PARAM = "w-param"
    FEEDBACK = "feedback-param"
    CONSTANT = "plant-constant"


_ROLE_RANK = {
    Role.FEEDBACK: 0,
    Role.W_PARAM: 1,
    Role.CONSTANT: 2,
    Role.STATE: 3,
    Role.INPUT: 4,
}


@dataclass(frozen=True)
class Symbol:
    name: str
    role: Role
    index: tuple = ()

    @property
    def sort_key(self) -> tuple:
        return (_ROLE_RANK[self.role], self.index, natural_key(self.name))

    @property
    def is_variable(self) -> bool:
        return self.role in (Role.STATE, Role.INPUT)

    def __str__(self) -> str:
        return self.name


class SymbolTable:
    """Declared names and their roles.

    States keep their declaration order, which fixes ``x1 < x2 < ... < xn``.
    Names are unique and a name's role never changes once declared.
    """

    def __init__(
        self,
        states: Iterable[str] = (),
        inputs: Iterable[str] = (),
        constants: Iterable[str] = (),
        params: Iterable[Symbol] = (),
    ):
        self._symbols: dict[str, Symbol] = {}
        self._states: list[str] = []
        self._inputs: list[str] = []
        self._lock = threading.Lock()
        for i, name in enumerate(states, start=1):
            self.declare(name, Role.STATE, (i,))
        for j, name in enumerate(inputs, start=1):
            self.declare(name, Role.INPUT, (j,))
        for k, name in enumerate(constants, start=1):
            self.declare(name, Role.CONSTANT, (k,))
        for sym in params:
            self.add(sym)

    def declare(self, name: str, role: Role, index: tuple = ()) -> Symbol:
        return self.add(Symbol(name, Role(role), tuple(index)))

    def add(self, sym: Symbol) -> Symbol:
        if not _IDENT.match(sym.name):
            raise ValueError(f"invalid identifier {sym.name!r}")
        with self._lock:
            old = self._symbols.get(sym.name)
            if old is not None:
                if old.role != sym.role:
                    raise ValueError(
                        f"name {sym.name!r} already declared as {old.role.value}"
                    )
                return old
            self._symbols[sym.name] = sym
            if sym.role is Role.STATE:
                self._states.append(sym.name)
            elif sym.role is Role.INPUT:
                self._inputs.append(sym.name)
        return sym

    def __contains__(self, name: str) -> bool:
        return name in self._symbols

    def __getitem__(self, name: str) -> Symbol:
        return self._symbols[name]

    def get(self, name: str, default=None):
        return self._symbols.get(name, default)

    def __iter__(self):
        return iter(list(self._symbols.values()))

    @property
    def states(self) -> tuple[str, ...]:
        return tuple(self._states)

    @property
    def inputs(self) -> tuple[str, ...]:
        return tuple(self._inputs)

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(self._states) + tuple(self._inputs)

    def of_role(self, role: Role) -> list[Symbol]:
        return sorted(
            (s for s in self._symbols.values() if s.role is role),
            key=lambda s: s.sort_key,
        )

    def copy(self) -> "SymbolTable":
        out = SymbolTable()
        for sym in self._symbols.values():
            out.add(sym)
        return out


# ---------------------------------------------------------------------------
# parameter polynomials
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=1 << 16)
def _pmono_mul(a: PMono, b: PMono) -> PMono:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for s, e in b:
        d[s] = d.get(s, 0) + e
    return tuple(sorted(d.items()))


def _pmono_div(a: PMono, b: PMono) -> PMono | None:
    d = dict(a)
    for s, e in b:
        r = d.get(s, 0) - e
        if r < 0:
            return None
        if r:
            d[s] = r
        else:
            del d[s]
    return tuple(sorted(d.items()))


def _pmono_str(m: PMono) -> str:
    items = sorted(m, key=lambda se: natural_key(se[0]))
    return "*".join(s if e == 1 else f"{s}^{e}" for s, e in items)


def _frac_str(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational)) and not isinstance(c, bool):
        return Fraction(c)
    raise TypeError(f"expected an exact rational, got {type(c).__name__}")


class ParamPoly:
    """Polynomial over parameter symbols with exact rational coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[PMono, Rational] | None = None):
        if terms:
            self.terms = {m: _as_fraction(c) for m, c in terms.items() if c}
        else:
            self.terms = {}

    @classmethod
    def _raw(cls, terms: dict) -> "ParamPoly":
        obj = cls.__new__(cls)
        obj.terms = terms
        return obj

    @classmethod
    def constant(cls, c) -> "ParamPoly":
        c = _as_fraction(c)
        return cls._raw({(): c} if c else {})

    @classmethod
    def symbol(cls, name: str) -> "ParamPoly":
        return cls._raw({((name, 1),): Fraction(1)})

    # -- predicates -----------------------------------------------------
    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and () in self.terms)

    @property
    def constant_value(self) -> Fraction:
        if not self.is_constant:
            raise ValueError("polynomial is not constant")
        return self.terms.get((), Fraction(0))

    def symbols(self) -> frozenset[str]:
        return frozenset(s for m in self.terms for s, _ in m)

    def degree_in(self, name: str) -> int:
        best = 0
        for m in self.terms:
            for s, e in m:
                if s == name and e > best:
                    best = e
        return best

    def total_degree(self) -> int:
        return max((sum(e for _, e in m) for m in self.terms), default=0)

    # -- arithmetic -----------------------------------------------------
    def __add__(self, other):
        if isinstance(other, (Polynomial, ParamRat)):
            return NotImplemented
        if not isinstance(other, ParamPoly):
            other = ParamPoly.constant(other)
        if not other.terms:
            return self
        if not self.terms:
            return other
        out = dict(self.terms)
        for m, c in other.terms.items():
            v = out.get(m)
            if v is None:
                out[m] = c
            else:
                v += c
                if v:
                    out[m] = v
                else:
                    del out[m]
        return ParamPoly._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return ParamPoly._raw({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, ParamPoly):
            other = ParamPoly.constant(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "ParamPoly":
        c = _as_fraction(c)
        if not c:
            return ParamPoly._raw({})
        if c == 1:
            return self
        return ParamPoly._raw({m: v * c for m, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (Polynomial, ParamRat)):
            return NotImplemented
        if not isinstance(other, ParamPoly):
            return self.scale(other)
        if not self.terms or not other.terms:
            return ParamPoly._raw({})
        if len(other.terms) == 1 and () in other.terms:
            return self.scale(other.terms[()])
        if len(self.terms) == 1 and () in self.terms:
            return other.scale(self.terms[()])
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _pmono_mul(m1, m2)
                v = out.get(m)
                out[m] = c1 * c2 if v is None else v + c1 * c2
        return ParamPoly._raw({m: c for m, c in out.items() if c})

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power of a polynomial")
        result = ParamPoly.constant(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, ParamPoly):
            return self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self.terms == ({(): Fraction(other)} if other else {})
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    # -- structure ------------------------------------------------------
    def collect(self, name: str) -> dict[int, "ParamPoly"]:
        """View as a univariate polynomial in ``name``: exponent -> coefficient."""
        parts: dict[int, dict] = {}
        for m, c in self.terms.items():
            e = 0
            rest = m
            for i, (s, k) in enumerate(m):
                if s == name:
                    e = k
                    rest = m[:i] + m[i + 1 :]
                    break
            parts.setdefault(e, {})[rest] = c
        return {e: ParamPoly._raw(t) for e, t in parts.items()}

    def monomial_content(self) -> PMono:
        it = iter(self.terms)
        try:
            first = dict(next(it))
        except StopIteration:
            return ()
        for m in it:
            d = dict(m)
            for s in list(first):
                e = min(first[s], d.get(s, 0))
                if e:
                    first[s] = e
                else:
                    del first[s]
            if not first:
                break
        return tuple(sorted(first.items()))

    def divide_monomial(self, m: PMono) -> "ParamPoly":
        if not m:
            return self
        return ParamPoly._raw({_pmono_div(k, m): c for k, c in self.terms.items()})

    def leading_term(self) -> tuple[PMono, Fraction]:
        """Leading term in a fixed display-independent order (used for sign normalisation)."""
        m = max(self.terms, key=lambda k: (sum(e for _, e in k), k))
        return m, self.terms[m]

    def exact_div(self, other: "ParamPoly") -> "ParamPoly | None":
        """Return ``self / other`` when the division is exact, else ``None``."""
        if other.is_zero:
            raise ZeroDivisionError("division by the zero polynomial")
        if other.is_constant:
            return self.scale(1 / other.constant_value)
        if self.is_zero:
            return self
        if self.total_degree() < other.total_degree():
            return None
        names = sorted(self.symbols() | other.symbols())

        def key(m):
            d = dict(m)
            return tuple(d.get(n, 0) for n in names)

        lead = max(other.terms, key=key)
        lead_c = other.terms[lead]
        rem = dict(self.terms)
        quot: dict = {}
        limit = 4 * (len(self.terms) + 1) * (len(other.terms) + 1) + 64
        while rem:
            limit -= 1
            if limit < 0:
                return None
            lt = max(rem, key=key)
            qm = _pmono_div(lt, lead)
            if qm is None:
                return None
            qc = rem[lt] / lead_c
            quot[qm] = qc
            for m, c in other.terms.items():
                mm = _pmono_mul(m, qm)
                v = rem.get(mm, Fraction(0)) - qc * c
                if v:
                    rem[mm] = v
                else:
                    rem.pop(mm, None)
        return ParamPoly._raw(quot)

    # -- evaluation and substitution ------------------------------------
    def evaluate(self, point: Mapping[str, Number]):
        total: Number = Fraction(0)
        for m, c in self.terms.items():
            v: Number = c
            for s, e in m:
                try:
                    x = point[s]
                except KeyError:
                    raise EvaluationError(f"unbound symbol {s}") from None
                v = v * x**e
            total = total + v
        return total

    def subs(self, bindings: Mapping[str, "ParamRat"]) -> "ParamRat":
        """Simultaneous substitution of parameters by rational functions."""
        relevant = {s: b for s, b in bindings.items() if s in self.symbols()}
        if not relevant:
            return ParamRat._make(self, _ONE_P)
        degs = {s: self.degree_in(s) for s in relevant}
        num_pow: dict[str, list[ParamPoly]] = {}
        den_pow: dict[str, list[ParamPoly]] = {}
        for s, b in relevant.items():
            b = ParamRat.coerce(b)
            n = [_ONE_P]
            d = [_ONE_P]
            for _ in range(degs[s]):
                n.append(n[-1] * b.num)
                d.append(d[-1] * b.den)
            num_pow[s] = n
            den_pow[s] = d
        acc: dict = {}
        for m, c in self.terms.items():
            rest = []
            found = {}
            for s, e in m:
                if s in relevant:
                    found[s] = e
                else:
                    rest.append((s, e))
            factor = None
            for s in relevant:
                e = found.get(s, 0)
                piece = num_pow[s][e]
                k = degs[s] - e
                if k:
                    piece = piece * den_pow[s][k]
                if piece.is_constant and piece.constant_value == 1:
                    continue
                factor = piece if factor is None else factor * piece
            rest_m = tuple(rest)
            if factor is None:
                _acc_add(acc, rest_m, c)
            else:
                for fm, fc in factor.terms.items():
                    _acc_add(acc, _pmono_mul(fm, rest_m), fc * c)
        out = ParamPoly._raw({m: c for m, c in acc.items() if c})
        den = _ONE_P
        for s in relevant:
            den = den * den_pow[s][degs[s]]
        return ParamRat(out, den)

    # -- display ----------------------------------------------------------
    def sorted_terms(self) -> list[tuple[PMono, Fraction]]:
        return sorted(
            self.terms.items(),
            key=lambda mc: (
                sum(e for _, e in mc[0]),
                [(natural_key(s), -e) for s, e in sorted(mc[0], key=lambda se: natural_key(se[0]))],
            ),
        )

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        pieces = []
        for m, c in self.sorted_terms():
            if not m:
                body = _frac_str(abs(c))
            elif abs(c) == 1:
                body = _pmono_str(m)
            else:
                body = f"{_frac_str(abs(c))}*{_pmono_str(m)}"
            pieces.append((c < 0, body))
        return _join_signed(pieces)

    def __repr__(self) -> str:
        return f"ParamPoly({self})"


def _acc_add(acc: dict, m, c) -> None:
    v = acc.get(m)
    acc[m] = c if v is None else v + c


def _join_signed(pieces: list[tuple[bool, str]]) -> str:
    out = []
    for i, (neg, body) in enumerate(pieces):
        if i == 0:
            out.append(f"-{body}" if neg else body)
        else:
            out.append(f" - {body}" if neg else f" + {body}")
    return "".join(out)


_ONE_P = ParamPoly.constant(1)


class ParamRat:
    """Rational function of parameters, ``num / den``.

    Normal form: a constant denominator is folded into the numerator (so it
    becomes 1); otherwise common monomial factors are cancelled, exact
    polynomial division is attempted, and both parts are scaled to coprime
    integer coefficients with a positive leading denominator coefficient.
    Equality is decided by cross multiplication.
    """

    __slots__ = ("num", "den")

    def __init__(self, num, den=None):
        num = num if isinstance(num, ParamPoly) else ParamPoly.constant(num)
        if den is None:
            self.num, self.den = num, _ONE_P
            return
        den = den if isinstance(den, ParamPoly) else ParamPoly.constant(den)
        self.num, self.den = _normalize(num, den)

    @classmethod
    def _make(cls, num: ParamPoly, den: ParamPoly) -> "ParamRat":
        obj = cls.__new__(cls)
        obj.num = num
        obj.den = den
        return obj

    @classmethod
    def coerce(cls, value) -> "ParamRat":
        if isinstance(value, ParamRat):
            return value
        if isinstance(value, ParamPoly):
            return cls._make(value, _ONE_P)
        if isinstance(value, str):
            return cls._make(ParamPoly.symbol(value), _ONE_P)
        return cls._make(ParamPoly.constant(value), _ONE_P)

    @classmethod
    def symbol(cls, name: str) -> "ParamRat":
        return cls._make(ParamPoly.symbol(name), _ONE_P)

    # -- predicates -----------------------------------------------------
    @property
    def is_zero(self) -> bool:
        return not self.num.terms

    @property
    def is_constant(self) -> bool:
        return self.num.is_constant and self.den.is_constant

    @property
    def is_polynomial(self) -> bool:
        return self.den.is_constant

    @property
    def constant_value(self) -> Fraction:
        return self.num.constant_value / self.den.constant_value

    def symbols(self) -> frozenset[str]:
        return self.num.symbols() | self.den.symbols()

    # -- arithmetic -----------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Polynomial):
            return NotImplemented
        other = ParamRat.coerce(other)
        if self.den.is_constant and other.den.is_constant:
            return ParamRat._make(self.num + other.num, _ONE_P)
        if self.den == other.den:
            return ParamRat(self.num + other.num, self.den)
        return ParamRat(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        return ParamRat._make(-self.num, self.den)

    def __sub__(self, other):
        if isinstance(other, Polynomial):
            return NotImplemented
        return self + (-ParamRat.coerce(other))

    def __rsub__(self, other):
        return ParamRat.coerce(other) + (-self)

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            return NotImplemented
        other = ParamRat.coerce(other)
        if self.den.is_constant and other.den.is_constant:
            return ParamRat._make(self.num * other.num, _ONE_P)
        return ParamRat(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Polynomial):
            return NotImplemented
        other = ParamRat.coerce(other)
        if other.is_zero:
            raise ZeroDivisionError("division by a zero rational function")
        return ParamRat(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other):
        return ParamRat.coerce(other) / self

    def __pow__(self, k: int):
        if k < 0:
            return ParamRat(1) / (self ** (-k))
        if self.den.is_constant:
            return ParamRat._make(self.num**k, _ONE_P)
        return ParamRat._make(self.num**k, self.den**k)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, ParamPoly, ParamRat)):
            other = ParamRat.coerce(other)
            return (self.num * other.den - other.num * self.den).is_zero
        return NotImplemented

    __hash__ = None  # equality is by cross multiplication; no canonical hash

    # -- evaluation and substitution --------------------------------------
    def subs(self, bindings: Mapping[str, "ParamRat"]) -> "ParamRat":
        if not bindings:
            return self
        syms = self.symbols()
        if not any(s in syms for s in bindings):
            return self
        n = self.num.subs(bindings)
        if self.den.is_constant:
            return n if self.den is _ONE_P else n / ParamRat(self.den)
        d = self.den.subs(bindings)
        if d.is_zero:
            raise EvaluationError("substitution vanishes a denominator")
        return n / d

    def evaluate(self, point: Mapping[str, Number]):
        d = self.den.evaluate(point)
        if d == 0:
            raise EvaluationError("parameter assignment vanishes a denominator")
        return self.num.evaluate(point) / d

    # -- display ----------------------------------------------------------
    @property
    def is_single_term(self) -> bool:
        return self.den.is_constant and len(self.num.terms) <= 1

    def __str__(self) -> str:
        if self.den.is_constant:
            return str(self.num)
        ns = str(self.num)
        if len(self.num.terms) > 1:
            ns = f"({ns})"
        ds = str(self.den)
        (dm, dc), = self.den.terms.items() if len(self.den.terms) == 1 else ((None, None),)
        if not (len(self.den.terms) == 1 and dc == 1 and len(dm) == 1 and dm[0][1] == 1):
            ds = f"({ds})"
        return f"{ns}/{ds}"

    def __repr__(self) -> str:
        return f"ParamRat({self})"

    def __float__(self) -> float:
        return float(self.constant_value)


def _normalize(num: ParamPoly, den: ParamPoly) -> tuple[ParamPoly, ParamPoly]:
    if den.is_zero:
        raise ZeroDivisionError("zero denominator")
    if num.is_zero:
        return num, _ONE_P
    if den.is_constant:
        c = den.constant_value
        return (num if c == 1 else num.scale(1 / c)), _ONE_P
    mc = _pmono_gcd(num.monomial_content(), den.monomial_content())
    if mc:
        num = num.divide_monomial(mc)
        den = den.divide_monomial(mc)
        if den.is_constant:
            return num.scale(1 / den.constant_value), _ONE_P
    q = num.exact_div(den)
    if q is not None:
        return q, _ONE_P
    if num.is_constant is False and len(num.terms) >= 1:
        inv = den.exact_div(num)
        if inv is not None and len(inv.terms) >= 1 and inv.is_constant is False:
            num, den = _ONE_P, inv
    # coprime integer coefficients, positive leading denominator coefficient
    coeffs = list(num.terms.values()) + list(den.terms.values())
    lcm = 1
    for c in coeffs:
        lcm = lcm * c.denominator // math.gcd(lcm, c.denominator)
    g = 0
    for c in coeffs:
        g = math.gcd(g, (c * lcm).numerator)
    scale = Fraction(lcm, g)
    if den.leading_term()[1] < 0:
        scale = -scale
    if scale != 1:
        num = num.scale(scale)
        den = den.scale(scale)
    return num, den


def _pmono_gcd(a: PMono, b: PMono) -> PMono:
    db = dict(b)
    return tuple((s, min(e, db[s])) for s, e in a if s in db)


ZERO = ParamRat(0)
ONE = ParamRat(1)


# ---------------------------------------------------------------------------
# polynomials over variables
# ---------------------------------------------------------------------------


def lex_key(m: Monomial) -> tuple:
    """Sort key for the monomial order (last generator most significant)."""
    return m[::-1]


def lex_compare(m1: Monomial, m2: Monomial) -> int:
    """Return -1, 0 or 1 as ``m1`` is less than, equal to or greater than ``m2``."""
    if len(m1) != len(m2):
        raise ValueError("monomials over different variable universes")
    for a, b in zip(reversed(m1), reversed(m2)):
        if a != b:
            return -1 if a < b else 1
    return 0


def _coef(value) -> ParamRat:
    if isinstance(value, float):
        raise TypeError("float coefficients are not allowed in exact polynomials")
    return ParamRat.coerce(value)


class Polynomial:
    """Sparse polynomial over ``gens`` with ``ParamRat`` coefficients.

    Treat instances as immutable.
    """

    __slots__ = ("gens", "terms")

    def __init__(self, gens: Sequence[str], terms: Mapping[Monomial, object] | None = None):
        self.gens = tuple(gens)
        n = len(self.gens)
        clean = {}
        for m, c in (terms or {}).items():
            m = tuple(m)
            if len(m) != n:
                raise ValueError(f"monomial {m} does not match generators {self.gens}")
            if any(e < 0 for e in m):
                raise ValueError("negative exponent")
            c = _coef(c)
            if not c.is_zero:
                clean[m] = c
        self.terms = clean

    @classmethod
    def _raw(cls, gens: tuple, terms: dict) -> "Polynomial":
        obj = cls.__new__(cls)
        obj.gens = gens
        obj.terms = terms
        return obj

    @classmethod
    def zero(cls, gens: Sequence[str]) -> "Polynomial":
        return cls._raw(tuple(gens), {})

    @classmethod
    def constant(cls, gens: Sequence[str], value) -> "Polynomial":
        gens = tuple(gens)
        c = _coef(value)
        return cls._raw(gens, {} if c.is_zero else {(0,) * len(gens): c})

    @classmethod
    def variable(cls, gens: Sequence[str], name: str) -> "Polynomial":
        gens = tuple(gens)
        m = [0] * len(gens)
        m[gens.index(name)] = 1
        return cls._raw(gens, {tuple(m): ONE})

    @classmethod
    def monomial(cls, gens: Sequence[str], exps: Monomial, coefficient=1) -> "Polynomial":
        return cls(gens, {tuple(exps): coefficient})

    # -- predicates and accessors ----------------------------------------
    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def nvars(self) -> int:
        return len(self.gens)

    def coeff(self, m: Monomial) -> ParamRat:
        return self.terms.get(tuple(m), ZERO)

    def constant_term(self) -> ParamRat:
        return self.coeff((0,) * len(self.gens))

    def support(self) -> list[Monomial]:
        return sorted(self.terms, key=lex_key, reverse=True)

    def items(self) -> list[tuple[Monomial, ParamRat]]:
        """Terms in descending monomial order."""
        return [(m, self.terms[m]) for m in self.support()]

    def degree(self) -> int:
        return max((sum(m) for m in self.terms), default=0)

    def degree_in(self, name: str) -> int:
        i = self.gens.index(name)
        return max((m[i] for m in self.terms), default=0)

    def params(self) -> frozenset[str]:
        out: frozenset[str] = frozenset()
        for c in self.terms.values():
            out |= c.symbols()
        return out

    def used_gens(self) -> set[str]:
        return {g for i, g in enumerate(self.gens) if any(m[i] for m in self.terms)}

    def is_homogeneous_zero_free(self) -> bool:
        return self.constant_term().is_zero

    # -- generator management --------------------------------------------
    def with_gens(self, gens: Sequence[str]) -> "Polynomial":
        """Re-express over ``gens``; every generator in use must be present."""
        gens = tuple(gens)
        if gens == self.gens:
            return self
        used = self.used_gens()
        missing = used - set(gens)
        if missing:
            raise ValueError(f"cannot drop generators in use: {sorted(missing)}")
        pos = [self.gens.index(g) if g in self.gens else None for g in gens]
        out = {}
        for m, c in self.terms.items():
            out[tuple(m[p] if p is not None else 0 for p in pos)] = c
        return Polynomial._raw(gens, out)

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.gens != self.gens:
                raise ValueError(f"generator mismatch: {self.gens} vs {other.gens}")
            return other
        return Polynomial.constant(self.gens, other)

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        other = self._coerce(other)
        if not other.terms:
            return self
        if not self.terms:
            return other
        out = dict(self.terms)
        for m, c in other.terms.items():
            v = out.get(m)
            if v is None:
                out[m] = c
            else:
                v = v + c
                if v.is_zero:
                    del out[m]
                else:
                    out[m] = v
        return Polynomial._raw(self.gens, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw(self.gens, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) + (-self)

    def scale(self, c) -> "Polynomial":
        c = _coef(c)
        if c.is_zero:
            return Polynomial.zero(self.gens)
        out = {}
        for m, v in self.terms.items():
            w = v * c
            if not w.is_zero:
                out[m] = w
        return Polynomial._raw(self.gens, out)

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return self.scale(other)
        other = self._coerce(other)
        if not self.terms or not other.terms:
            return Polynomial.zero(self.gens)
        polynomial_coeffs = all(c.den.is_constant for c in self.terms.values()) and all(
            c.den.is_constant for c in other.terms.values()
        )
        if polynomial_coeffs:
            acc: dict = {}
            for m1, c1 in self.terms.items():
                for m2, c2 in other.terms.items():
                    m = tuple(a + b for a, b in zip(m1, m2))
                    bucket = acc.get(m)
                    if bucket is None:
                        bucket = acc[m] = {}
                    for p1, f1 in c1.num.terms.items():
                        for p2, f2 in c2.num.terms.items():
                            pm = _pmono_mul(p1, p2)
                            v = bucket.get(pm)
                            bucket[pm] = f1 * f2 if v is None else v + f1 * f2
            out = {}
            for m, bucket in acc.items():
                pp = {k: v for k, v in bucket.items() if v}
                if pp:
                    out[m] = ParamRat._make(ParamPoly._raw(pp), _ONE_P)
            return Polynomial._raw(self.gens, out)
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                v = out.get(m)
                out[m] = c1 * c2 if v is None else v + c1 * c2
        return Polynomial._raw(self.gens, {m: c for m, c in out.items() if not c.is_zero})

    def __rmul__(self, other):
        return self.scale(other)

    def __truediv__(self, other):
        return self.scale(ONE / _coef(other))

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("polynomial powers need a nonnegative integer exponent")
        result = Polynomial.constant(self.gens, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            if other.gens != self.gens:
                try:
                    other = other.with_gens(self.gens)
                except ValueError:
                    return False
            return (self - other).is_zero
        if isinstance(other, (int, Fraction, ParamRat, ParamPoly)):
            return (self - Polynomial.constant(self.gens, other)).is_zero
        return NotImplemented

    __hash__ = None

    # -- algebra ------------------------------------------------------------
    def maxterm(self) -> tuple[ParamRat, Monomial]:
        if not self.terms:
            raise ValueError("empty polynomial has no maxterm")
        m = max(self.terms, key=lex_key)
        return self.terms[m], m

    def diff(self, name: str) -> "Polynomial":
        i = self.gens.index(name)
        out = {}
        for m, c in self.terms.items():
            e = m[i]
            if e:
                mm = m[:i] + (e - 1,) + m[i + 1 :]
                out[mm] = c * e
        return Polynomial._raw(self.gens, out)

    def subs_params(self, bindings: Mapping[str, object]) -> "Polynomial":
        if not bindings:
            return self
        b = {k: ParamRat.coerce(v) for k, v in bindings.items()}
        out = {}
        for m, c in self.terms.items():
            v = c.subs(b)
            if not v.is_zero:
                out[m] = v
        return Polynomial._raw(self.gens, out)

    def evaluate(self, point: Mapping[str, Number]):
        return eval_numeric(self, point)

    def __str__(self) -> str:
        return format_polynomial(self)

    def __repr__(self) -> str:
        return f"Polynomial({self})"


# ---------------------------------------------------------------------------
# module-level operations
# ---------------------------------------------------------------------------


def maxterm(p: Polynomial) -> tuple[ParamRat, Monomial]:
    """Coefficient and monomial of the lex-largest term."""
    return p.maxterm()


def partial_derivative(p: Polynomial, x: str) -> Polynomial:
    return p.diff(x)


def substitute(
    p: Polynomial,
    bindings: Mapping[str, object],
    table: SymbolTable | None = None,
) -> Polynomial:
    """Simultaneous substitution of variables and parameters, then expansion.

    Variables may be bound to ``Polynomial`` values (expressed over a subset of
    the remaining generators); parameters to rationals or ``ParamRat``.  Bound
    variables are removed from the result's generators.  With a ``table``,
    binding a state to an expression containing inputs is rejected.
    """
    var_b = {k: v for k, v in bindings.items() if k in p.gens}
    par_b = {k: v for k, v in bindings.items() if k not in p.gens}
    for k, v in par_b.items():
        if isinstance(v, Polynomial):
            if v.used_gens():
                raise ValueError(f"parameter {k} bound to an expression in variables")
            par_b[k] = v.constant_term()
    if par_b:
        p = p.subs_params(par_b)
    if not var_b:
        return p
    rest = tuple(g for g in p.gens if g not in var_b)
    repl: dict[str, Polynomial] = {}
    for k, v in var_b.items():
        if not isinstance(v, Polynomial):
            v = Polynomial.constant(rest, v)
        if table is not None and k in table and table[k].role is Role.STATE:
            bad = [g for g in v.used_gens() if g in table and table[g].role is Role.INPUT]
            if bad:
                raise ValueError(f"state {k} cannot be bound to an expression in inputs {bad}")
        try:
            v = v.with_gens(rest)
        except ValueError as exc:
            raise ValueError(f"replacement for {k} uses eliminated variables") from exc
        if par_b:
            v = v.subs_params(par_b)
        repl[k] = v
    keep = [i for i, g in enumerate(p.gens) if g not in var_b]
    bound = [(i, g) for i, g in enumerate(p.gens) if g in var_b]
    powers: dict[str, list[Polynomial]] = {g: [Polynomial.constant(rest, 1)] for _, g in bound}

    def power(g: str, e: int) -> Polynomial:
        lst = powers[g]
        while len(lst) <= e:
            lst.append(lst[-1] * repl[g])
        return lst[e]

    result = Polynomial.zero(rest)
    groups: dict[tuple, dict] = {}
    for m, c in p.terms.items():
        key = tuple(m[i] for i, _ in bound)
        groups.setdefault(key, {})[tuple(m[i] for i in keep)] = c
    for key, sub_terms in groups.items():
        part = Polynomial._raw(rest, sub_terms)
        for (i, g), e in zip(bound, key):
            if e:
                part = part * power(g, e)
        result = result + part
    return result


def eval_numeric(p: Polynomial, point: Mapping[str, Number]):
    """Evaluate at a point binding every variable and parameter of ``p``.

    Exact ``Fraction`` when all supplied values are rational, ``float`` otherwise.
    """
    needed = set(p.used_gens()) | set(p.params())
    missing = sorted(needed - set(point), key=natural_key)
    if missing:
        raise EvaluationError(f"unbound symbols: {', '.join(missing)}")
    total: Number = Fraction(0)
    idx = [(i, g) for i, g in enumerate(p.gens)]
    for m, c in p.terms.items():
        v = c.evaluate(point)
        for i, g in idx:
            if m[i]:
                v = v * point[g] ** m[i]
        total = total + v
    return total


# ---------------------------------------------------------------------------
# formatting
# ---------------------------------------------------------------------------


def format_monomial(gens: Sequence[str], m: Monomial, descending: bool = False) -> str:
    order = range(len(gens) - 1, -1, -1) if descending else range(len(gens))
    parts = []
    for i in order:
        e = m[i]
        if e == 1:
            parts.append(gens[i])
        elif e > 1:
            parts.append(f"{gens[i]}^{e}")
    return "*".join(parts)


def term_pieces(c: ParamRat, mono_str: str) -> tuple[bool, str]:
    """Render ``c * mono`` as (negative?, body) for signed joining."""
    if c.is_constant:
        v = c.constant_value
        neg = v < 0
        a = abs(v)
        if not mono_str:
            return neg, _frac_str(a)
        if a == 1:
            return neg, mono_str
        return neg, f"{_frac_str(a)}*{mono_str}"
    if c.is_single_term:
        (pm, pc), = c.num.terms.items()
        neg = pc < 0
        inner = str(ParamRat._make(ParamPoly._raw({pm: abs(pc)}), _ONE_P))
        return neg, inner if not mono_str else f"{inner}*{mono_str}"
    s = str(c)
    if not mono_str:
        if s.startswith("-"):
            return False, f"({s})"
        return False, s if c.den.is_constant else s
    if c.den.is_constant:
        return False, f"({s})*{mono_str}"
    return False, f"{s}*{mono_str}" if not s.startswith("-") else f"({s})*{mono_str}"


def format_polynomial(p: Polynomial) -> str:
    if not p.terms:
        return "0"
    pieces = [term_pieces(c, format_monomial(p.gens, m)) for m, c in p.items()]
    return _join_signed(pieces)
