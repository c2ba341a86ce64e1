"""Expression and system-file parsing, and certificate printing."""

from __future__ import annotations

import json
import re
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction

from .feedback import FeedbackFamily, LyapunovSpec, PolySystem
from .formalfactor import FormalFactorization
from .polyring import ParamRat, Polynomial, Role, SymbolTable, natural_key
from .positivity import Certificate, Failure, SolutionSet, SumOfSquares

__all__ = [
    "ParseError",
    "SourceExpr",
    "SystemOptions",
    "tokenize",
    "parse_poly",
    "infer_table",
    "parse_monomial",
    "parse_system",
    "print_certificate",
    "frac_str",
]

SCHEMA_VERSION = 1

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r\n]+)|(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)|(?P<ident>[^\W\d]\w*)|(?P<op>[-+*/^()])"
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 1, col: int = 1):
        self.message = message
        self.line = line
        self.col = col
        super().__init__(f"line {line}, column {col}: {message}")


@dataclass(frozen=True)
class SourceExpr:
    text: str
    origin: str = "<expr>"


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int


def _linecol(text: str, pos: int) -> tuple[int, int]:
    line = text.count("\n", 0, pos) + 1
    start = text.rfind("\n", 0, pos) + 1
    return line, pos - start + 1


def tokenize(text: str) -> list[Token]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", *_linecol(text, pos))
        kind = m.lastgroup
        if kind == "num" and not m.group().isdigit():
            raise ParseError(
                f"non-integer literal {m.group()!r}; write rationals as p/q", *_linecol(text, pos)
            )
        if kind != "ws":
            out.append(Token(kind, m.group(), pos))
        pos = m.end()
    out.append(Token("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, table: SymbolTable):
        self.text = text
        self.table = table
        self.gens = table.variables
        self.toks = tokenize(text)
        self.i = 0

    def error(self, msg: str, tok: Token | None = None):
        tok = tok or self.toks[self.i]
        raise ParseError(msg, *_linecol(self.text, tok.pos))

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def take(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def parse(self) -> Polynomial:
        if self.tok.kind == "end":
            self.error("empty expression")
        p = self.expr()
        if self.tok.kind != "end":
            self.error(f"unexpected {self.tok.text!r}")
        return p

    def expr(self) -> Polynomial:
        p = self.term()
        while self.tok.text in ("+", "-") and self.tok.kind == "op":
            op = self.take().text
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self) -> Polynomial:
        p = self.unary()
        while self.tok.kind == "op" and self.tok.text in ("*", "/"):
            optok = self.take()
            q = self.unary()
            if optok.text == "*":
                p = p * q
            else:
                if q.used_gens():
                    self.error("division by an expression in the variables", optok)
                c = q.constant_term()
                if c.is_zero:
                    self.error("division by zero", optok)
                p = p.scale(ParamRat(1) / c)
        if self.tok.kind in ("num", "ident") or self.tok.text == "(":
            self.error("missing operator ('*' is explicit)")
        return p

    def unary(self) -> Polynomial:
        if self.tok.kind == "op" and self.tok.text in ("+", "-"):
            op = self.take().text
            p = self.unary()
            return -p if op == "-" else p
        return self.power()

    def power(self) -> Polynomial:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            optok = self.take()
            neg = False
            while self.tok.kind == "op" and self.tok.text in ("+", "-"):
                neg ^= self.take().text == "-"
            e = self.atom()
            if neg:
                e = -e
            if e.used_gens() or e.params():
                self.error("exponent must be a constant integer", optok)
            v = e.constant_term().constant_value if e.terms else Fraction(0)
            if v.denominator != 1:
                self.error(f"fractional exponent {v}", optok)
            if v < 0:
                self.error(f"negative exponent {v}", optok)
            if self.tok.kind == "op" and self.tok.text == "^":
                self.error("chained '^' is ambiguous; use parentheses")
            return base ** int(v)
        return base

    def atom(self) -> Polynomial:
        t = self.tok
        if t.kind == "num":
            self.take()
            return Polynomial.constant(self.gens, int(t.text))
        if t.kind == "ident":
            self.take()
            sym = self.table.get(t.text)
            if sym is None:
                self.error(f"unknown identifier {t.text!r}", t)
            if sym.is_variable:
                return Polynomial.variable(self.gens, t.text)
            return Polynomial.constant(self.gens, ParamRat.symbol(t.text))
        if t.kind == "op" and t.text == "(":
            self.take()
            p = self.expr()
            if not (self.tok.kind == "op" and self.tok.text == ")"):
                self.error("expected ')'")
            self.take()
            return p
        if t.kind == "end":
            self.error("unexpected end of input")
        self.error(f"unexpected {t.text!r}")


def infer_table(text: str, params: Sequence[str] = ()) -> SymbolTable:
    """States are every identifier in ``text`` (natural order) except listed parameters."""
    names = {t.text for t in tokenize(text) if t.kind == "ident"}
    params = set(params)
    table = SymbolTable(states=sorted(names - params, key=natural_key))
    for p in sorted(names & params, key=natural_key):
        table.declare(p, Role.W_PARAM if p.startswith("W_") else Role.FEEDBACK)
    return table


def parse_poly(text: str, table: SymbolTable | Sequence[str] | None = None) -> Polynomial:
    """Parse an expression into a fully expanded ``Polynomial``.

    ``table`` may be a ``SymbolTable`` or a plain list of state names; without
    one, every identifier is taken as a state.
    """
    if table is None:
        table = infer_table(text)
    elif not isinstance(table, SymbolTable):
        table = SymbolTable(states=table)
    return _Parser(text, table).parse()


def parse_monomial(text: str, states: Sequence[str]) -> tuple:
    p = parse_poly(text, SymbolTable(states=states))
    if len(p.terms) != 1:
        raise ValueError(f"{text!r} is not a single monomial")
    (m, c), = p.terms.items()
    if c != 1:
        raise ValueError(f"{text!r} must be a bare monomial without coefficient")
    if sum(m) == 0:
        raise ValueError("feedback monomials must be nonconstant")
    return m


@dataclass
class SystemOptions:
    constant_values: dict
    template: list | None
    degree: int | None
    lyapunov_text: str | None = None


def _load(document) -> dict:
    if isinstance(document, Mapping):
        return dict(document)
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None
    if not isinstance(data, dict):
        raise ValueError("system document must be a JSON object")
    return data


def _rational(v) -> Fraction:
    if isinstance(v, bool) or isinstance(v, float):
        raise ValueError(f"constant value {v!r} is not an exact rational; use an integer or \"p/q\"")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, str) and re.fullmatch(r"\s*-?\d+(\s*/\s*\d+)?\s*", v):
        return Fraction(v.replace(" ", ""))
    raise ValueError(f"constant value {v!r} is not an exact rational")


def parse_system(document) -> tuple[PolySystem, LyapunovSpec | None, SystemOptions]:
    data = _load(document)
    for key in ("states", "rhs"):
        if key not in data:
            raise ValueError(f"system document is missing {key!r}")
    states = list(data["states"])
    inputs = list(data.get("inputs", []))
    consts = data.get("constants", [])
    values: dict = {}
    if isinstance(consts, Mapping):
        names = list(consts)
        values = {k: _rational(v) for k, v in consts.items() if v is not None}
    else:
        names = list(consts)
    rhs_text = list(data["rhs"])
    if len(rhs_text) != len(states):
        raise ValueError(f"{len(rhs_text)} right-hand sides for {len(states)} states")
    table = SymbolTable(states=states, inputs=inputs, constants=names)
    rhs = []
    for i, text in enumerate(rhs_text, start=1):
        try:
            rhs.append(parse_poly(text, table))
        except ParseError as exc:
            raise ParseError(f"Φ{i}: {exc.message}", exc.line, exc.col) from None
    sys = PolySystem(states, inputs, rhs, names)
    L = None
    lyap = data.get("lyapunov")
    if lyap:
        L = LyapunovSpec(parse_poly(lyap, SymbolTable(states=states)))
    template = None
    if data.get("feedback_template") is not None:
        tmpl = data["feedback_template"]
        if len(tmpl) != len(inputs):
            raise ValueError(f"feedback_template has {len(tmpl)} rows for {len(inputs)} inputs")
        template = [[parse_monomial(t, states) for t in row] for row in tmpl]
    degree = data.get("degree")
    if degree is not None and (not isinstance(degree, int) or degree < 1):
        raise ValueError("degree must be a positive integer")
    return sys, L, SystemOptions(values, template, degree, lyap)


# ---------------------------------------------------------------------------
# printing
# ---------------------------------------------------------------------------


def frac_str(v) -> str:
    v = Fraction(v)
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def _factorization_doc(f: FormalFactorization) -> dict:
    factors = []
    for t in f.factors:
        forms = []
        for idx, form in enumerate(t.forms):
            if form is not None and t.exponents[idx]:
                forms.append(
                    {"sigma": form.sigma, "iteration": form.iteration, "form": form.render(f.gens),
                     "power": t.exponents[idx]}
                )
        factors.append(
            {"coefficient": str(t.coefficient), "exponents": list(t.exponents),
             "x1_power": t.exponents[0], "forms": forms}
        )
    remainder = [{"power": k, "coefficient": str(c)} for k, c in f.remainder_terms()]
    return {
        "variables": list(f.gens),
        "expression": str(f),
        "factors": factors,
        "remainder": remainder,
        "parameters": [s.name for s in f.params],
    }


def _constraint_docs(s: SolutionSet) -> tuple[list, list]:
    signs = [{"expr": str(c.expr), "relation": c.relation} for c in s.sign_constraints]
    nonzero = [str(c.expr) for c in s.nonvanishing]
    return signs, nonzero


def _interval_docs(s: SolutionSet) -> list:
    out = []
    for iv in s.intervals:
        out.append(
            {
                "parameter": iv.param,
                "intervals": [str(p) for p in iv.pieces],
                "pinned": {k: frac_str(v) for k, v in iv.pinned.items()},
                "text": str(iv),
            }
        )
    return out


def _solution_doc(s: SolutionSet, names: Sequence[str] | None = None) -> dict:
    signs, nonzero = _constraint_docs(s)
    eq = s.equalities
    doc = {}
    if names is None:
        doc["equalities"] = {k: str(v) for k, v in eq.items()}
    else:
        keep = set(names)
        doc["equalities"] = {k: str(v) for k, v in eq.items() if k in keep}
        doc["auxiliary_equalities"] = {k: str(v) for k, v in eq.items() if k not in keep}
    doc["inequalities"] = signs
    doc["solved_inequalities"] = list(s.solved_forms)
    doc["nonvanishing"] = nonzero
    doc["intervals"] = _interval_docs(s)
    doc["free_parameters"] = list(s.free_params)
    return doc


def _certificate_doc(c: Certificate) -> dict:
    s = c.solution
    doc = {"kind": "positivity", "status": "certified", "polynomial": str(c.polynomial)}
    doc.update(_solution_doc(s))
    doc["witness"] = None if s.witness is None else {k: frac_str(v) for k, v in s.witness.items()}
    doc["sos"] = str(c.sos)
    doc["sos_numeric"] = None if c.numeric_sos is None else str(c.numeric_sos)
    doc["positive_definite"] = c.positive_definite
    return doc


def _family_doc(fb: FeedbackFamily) -> dict:
    s = fb.constraints
    cert = fb.certificate
    names = [p.name for p in fb.params]
    doc = {
        "kind": "feedback_family",
        "status": "certified",
        "states": list(fb.states),
        "inputs": list(fb.inputs),
        "degree": fb.degree,
        "template_laws": {u: str(law) for u, law in zip(fb.inputs, fb.laws)},
        "family_laws": {u: str(law) for u, law in zip(fb.inputs, fb.resolved_laws())},
    }
    doc.update(_solution_doc(s, names))
    if s.witness is not None:
        point = fb.witness_values()
        doc["witness"] = {
            "parameters": {k: frac_str(point[k]) for k in names if k in point},
            "laws": {u: str(law) for u, law in zip(fb.inputs, fb.witness_laws())},
        }
    else:
        doc["witness"] = None
    doc["V"] = str(fb.V)
    doc["V_convention"] = "V = -sum_i dL/dx_i * Phi_i(x, a(x))"
    doc["sos"] = str(cert.sos)
    doc["sos_numeric"] = None if cert.numeric_sos is None else str(cert.numeric_sos)
    return doc


def _text_solution(s: SolutionSet, lines: list, names: Sequence[str] | None = None) -> None:
    eq = s.equalities
    main = {k: v for k, v in eq.items() if names is None or k in names}
    aux = {k: v for k, v in eq.items() if names is not None and k not in names}
    lines.append("equalities:")
    lines += [f"  {k} = {v}" for k, v in main.items()] or ["  (none)"]
    if aux:
        lines.append("auxiliary equalities:")
        lines += [f"  {k} = {v}" for k, v in aux.items()]
    lines.append("inequalities:")
    lines += [f"  {c}" for c in s.sign_constraints] or ["  (none)"]
    if s.solved_forms:
        lines.append("solved inequalities:")
        lines += [f"  {t}" for t in s.solved_forms]
    if s.nonvanishing:
        lines.append("nonvanishing:")
        lines += [f"  {c}" for c in s.nonvanishing]
    if s.intervals:
        lines.append("intervals:")
        lines += [f"  {iv}" for iv in s.intervals]


def print_certificate(obj, fmt: str = "text") -> str:
    """Render a factorization, certificate, family, SOS or failure as text or JSON."""
    if fmt not in ("text", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    if fmt == "json":
        if isinstance(obj, FormalFactorization):
            doc = {"kind": "factorization", **_factorization_doc(obj)}
        elif isinstance(obj, Certificate):
            doc = _certificate_doc(obj)
        elif isinstance(obj, FeedbackFamily):
            doc = _family_doc(obj)
        elif isinstance(obj, SumOfSquares):
            doc = {"kind": "sos", "variables": list(obj.gens), "sos": str(obj)}
        elif isinstance(obj, Failure):
            doc = {"kind": "failure", "status": "no certificate found (inconclusive)", "reason": obj.reason}
        else:
            raise TypeError(f"cannot print {type(obj).__name__}")
        return json.dumps({"schema_version": SCHEMA_VERSION, **doc}, indent=2, ensure_ascii=False)

    if isinstance(obj, (FormalFactorization, SumOfSquares)):
        return str(obj)
    if isinstance(obj, Failure):
        return str(obj)
    lines: list[str] = []
    if isinstance(obj, Certificate):
        s = obj.solution
        lines.append("certificate found")
        lines.append(f"polynomial: {obj.polynomial}")
        _text_solution(s, lines)
        if s.witness is not None:
            shown = {k: v for k, v in s.witness.items() if v != 0}
            lines.append("witness: " + (", ".join(f"{k}={frac_str(v)}" for k, v in shown.items()) or "all free parameters 0"))
        lines.append(f"sos: {obj.sos}")
        if obj.numeric_sos is not None and str(obj.numeric_sos) != str(obj.sos):
            lines.append(f"sos at witness: {obj.numeric_sos}")
        lines.append(f"positive definite: {'yes' if obj.positive_definite else 'not established'}")
        return "\n".join(lines)
    if isinstance(obj, FeedbackFamily):
        s = obj.constraints
        names = [p.name for p in obj.params]
        lines.append("stabilizing feedback family found")
        for u, law in zip(obj.inputs, obj.resolved_laws()):
            lines.append(f"  {u} = {law}")
        _text_solution(s, lines, names)
        if s.witness is not None:
            point = obj.witness_values()
            lines.append("witness: " + ", ".join(f"{k}={frac_str(point[k])}" for k in names if k in point))
            for u, law in zip(obj.inputs, obj.witness_laws()):
                lines.append(f"  {u} = {law}")
        else:
            lines.append("witness: none (plant constants have no numeric values)")
        lines.append(f"V = {obj.V}")
        lines.append(f"sos: {obj.certificate.sos}")
        if obj.certificate.numeric_sos is not None:
            lines.append(f"sos at witness: {obj.certificate.numeric_sos}")
        return "\n".join(lines)
    raise TypeError(f"cannot print {type(obj).__name__}")
