"""Polynomial state feedback with a Lyapunov certificate.

Pick a parametric law ``u = a(x)``, form ``V = -grad(L) . Phi(x, a(x))`` and ask
the positivity search for parameter values that make ``V`` a sum of squares.
"""

from __future__ import annotations

import itertools
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
import random

from .polyring import (
    ParamRat,
    Polynomial,
    Role,
    Symbol,
    eval_numeric,
    substitute,
)
from .positivity import Certificate, Failure, pos_check, resolve_witness

__all__ = [
    "PolySystem",
    "LyapunovSpec",
    "FeedbackFamily",
    "JacobianPair",
    "param_letter",
    "dense_monomials",
    "build_parametric_feedback",
    "lyapunov_derivative",
    "synthesize",
    "linearize",
    "suggest_templates",
]

# Greek capitals in alphabetical order, Latin look-alikes where they coincide
LETTERS = ["A", "B", "Γ", "Δ", "E", "Z", "H", "Θ", "I", "K", "Λ", "M",
           "N", "Ξ", "O", "Π", "P", "Σ", "T", "Y", "Φ", "X", "Ψ", "Ω"]


@dataclass
class PolySystem:
    states: tuple
    inputs: tuple
    rhs: list  # Polynomial over states + inputs, one per state
    constants: tuple = ()

    def __post_init__(self):
        self.states = tuple(self.states)
        self.inputs = tuple(self.inputs)
        self.constants = tuple(self.constants)
        if len(self.rhs) != len(self.states):
            raise ValueError(f"{len(self.rhs)} right-hand sides for {len(self.states)} states")
        gens = self.gens
        fixed = []
        for i, phi in enumerate(self.rhs, start=1):
            phi = phi.with_gens(gens)
            if not phi.constant_term().is_zero:
                raise ValueError(f"Φ{i} has a free term {phi.constant_term()}; the origin must be an equilibrium")
            fixed.append(phi)
        self.rhs = fixed

    @property
    def gens(self) -> tuple:
        return self.states + self.inputs

    @property
    def n(self) -> int:
        return len(self.states)

    @property
    def m(self) -> int:
        return len(self.inputs)

    def with_constants(self, values: Mapping[str, object]) -> "PolySystem":
        b = {k: ParamRat(Fraction(v)) for k, v in values.items()}
        rest = tuple(c for c in self.constants if c not in b)
        return PolySystem(self.states, self.inputs, [p.subs_params(b) for p in self.rhs], rest)


@dataclass
class LyapunovSpec:
    L: Polynomial
    samples: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not self.L.constant_term().is_zero:
            raise ValueError("Lyapunov function must vanish at the origin")
        if self.L.params():
            raise ValueError("Lyapunov function must have numeric coefficients")
        rng = random.Random(self.seed)
        for _ in range(self.samples):
            x = {g: Fraction(rng.randint(-1000, 1000), 100) for g in self.L.gens}
            if all(v == 0 for v in x.values()):
                continue
            if eval_numeric(self.L, x) <= 0:
                raise ValueError(f"Lyapunov function is not positive at {x}")

    @classmethod
    def default(cls, states: Sequence[str]) -> "LyapunovSpec":
        L = Polynomial.zero(states)
        for s in states:
            L = L + Polynomial.variable(states, s) ** 2
        return cls(L)


@dataclass
class FeedbackFamily:
    states: tuple
    inputs: tuple
    laws: list  # Polynomial over states, one per input
    params: list  # Symbol, in template order
    template: list  # per input: list of exponent tuples
    degree: int
    constraints: object = None  # SolutionSet once synthesized
    certificate: Certificate | None = None
    V: Polynomial | None = None

    def resolved_laws(self) -> list:
        if self.constraints is None:
            return list(self.laws)
        b = self.constraints.equalities
        return [law.subs_params(b) for law in self.laws]

    def witness_values(self) -> dict:
        return resolve_witness(self.constraints)

    def witness_laws(self) -> list:
        point = self.witness_values()
        b = {k: ParamRat(v) for k, v in point.items()}
        return [law.subs_params(b) for law in self.laws]

    def feedback_equalities(self) -> dict:
        names = {p.name for p in self.params}
        return {k: v for k, v in self.constraints.equalities.items() if k in names}


@dataclass
class JacobianPair:
    A: list
    B: list


def param_letter(pos: int) -> str:
    base = LETTERS[pos % len(LETTERS)]
    return base if pos < len(LETTERS) else f"{base}{pos // len(LETTERS)}_"


def dense_monomials(n: int, degree: int) -> list[tuple]:
    out = []
    for d in range(1, degree + 1):
        for combo in itertools.combinations_with_replacement(range(n), d):
            m = [0] * n
            for i in combo:
                m[i] += 1
            out.append(tuple(m))
    return out


def build_parametric_feedback(
    n: int,
    m: int,
    degree: int,
    template: Sequence[Sequence[tuple]] | None = None,
    states: Sequence[str] | None = None,
    inputs: Sequence[str] | None = None,
) -> FeedbackFamily:
    if degree < 1:
        raise ValueError("feedback degree must be at least 1")
    states = tuple(states) if states is not None else tuple(f"x{i}" for i in range(1, n + 1))
    inputs = tuple(inputs) if inputs is not None else tuple(f"u{j}" for j in range(1, m + 1))
    if len(states) != n or len(inputs) != m:
        raise ValueError("state/input names do not match the dimensions")
    if template is None:
        template = [dense_monomials(n, degree)] * m
    if len(template) != m:
        raise ValueError(f"template has {len(template)} entries for {m} inputs")
    laws, params, clean = [], [], []
    for j, monos in enumerate(template, start=1):
        seen = []
        for mono in monos:
            mono = tuple(mono)
            if len(mono) != n:
                raise ValueError(f"monomial {mono} has wrong length")
            if sum(mono) == 0:
                raise ValueError("feedback laws have no free term")
            if sum(mono) > degree:
                raise ValueError(f"monomial {mono} exceeds degree {degree}")
            if mono not in seen:
                seen.append(mono)
        law = Polynomial.zero(states)
        for pos, mono in enumerate(seen):
            name = f"{param_letter(pos)}{j}"
            params.append(Symbol(name, Role.FEEDBACK, (pos, j)))
            law = law + Polynomial(states, {mono: ParamRat.symbol(name)})
        laws.append(law)
        clean.append(seen)
    return FeedbackFamily(states, inputs, laws, params, clean, degree)


def _closed_loop_rhs(sys: PolySystem, laws: Sequence[Polynomial]) -> list[Polynomial]:
    if len(laws) != sys.m:
        raise ValueError(f"{len(laws)} feedback laws for {sys.m} inputs")
    b = {u: law.with_gens(sys.states) for u, law in zip(sys.inputs, laws)}
    out = []
    for phi in sys.rhs:
        out.append(substitute(phi, b) if b else phi.with_gens(sys.states))
    return out


def lyapunov_derivative(sys: PolySystem, L: LyapunovSpec, fb: FeedbackFamily | Sequence[Polynomial]) -> Polynomial:
    """``V = -sum_i dL/dx_i * Phi_i(x, a(x))``, expanded."""
    laws = fb.laws if isinstance(fb, FeedbackFamily) else list(fb)
    Lp = L.L.with_gens(sys.states)
    V = Polynomial.zero(sys.states)
    for x, phi in zip(sys.states, _closed_loop_rhs(sys, laws)):
        V = V - Lp.diff(x) * phi
    return V


def synthesize(
    sys: PolySystem,
    L: LyapunovSpec | None = None,
    template: Sequence[Sequence[tuple]] | None = None,
    degree: int | None = None,
    *,
    constant_values: Mapping[str, object] | None = None,
    branch_cap: int = 256,
    seed: int = 0,
):
    """Return a constrained ``FeedbackFamily`` or a ``Failure``."""
    if L is None:
        L = LyapunovSpec.default(sys.states)
    if degree is None:
        degree = max((sum(m) for t in template for m in t), default=1) if template else 1
    if constant_values:
        sys = sys.with_constants(constant_values)
    fb = build_parametric_feedback(sys.n, sys.m, degree, template, sys.states, sys.inputs)
    V = lyapunov_derivative(sys, L, fb)
    cert = pos_check(
        V,
        fb.params,
        constants=sys.constants,
        strict=True,
        branch_cap=branch_cap,
        seed=seed,
    )
    if not cert:
        return Failure(f"no stabilizer found at this template/degree ({cert.reason})")
    fb.constraints = cert.solution
    fb.certificate = cert
    fb.V = V
    return fb


def linearize(sys: PolySystem) -> JacobianPair:
    gens = sys.gens

    def unit(k: int) -> tuple:
        m = [0] * len(gens)
        m[k] = 1
        return tuple(m)

    A = [[phi.coeff(unit(k)) for k in range(sys.n)] for phi in sys.rhs]
    B = [[phi.coeff(unit(sys.n + k)) for k in range(sys.m)] for phi in sys.rhs]
    return JacobianPair(A, B)


def suggest_templates(sys: PolySystem, L: LyapunovSpec | None = None, max_degree: int = 3) -> list:
    """Escalating templates: linear, mirrored nonlinearities, single extra monomial, dense."""
    if max_degree < 1:
        raise ValueError("max degree must be at least 1")
    n, m = sys.n, sys.m
    linear = dense_monomials(n, 1)
    out: list = []

    def push(t):
        t = [list(dict.fromkeys(tuple(x) for x in row)) for row in t]
        if t not in out:
            out.append(t)

    push([linear] * m)
    if max_degree == 1:
        return out
    mirrored = []
    for j in range(m):
        extra = []
        for phi in sys.rhs:
            if not any(mono[n + j] for mono in phi.terms):
                continue
            for mono in phi.support():
                xs, us = mono[:n], mono[n:]
                if any(us) or not 2 <= sum(xs) <= max_degree:
                    continue
                extra.append(tuple(xs))
        mirrored.append(linear + sorted(set(extra), key=lambda e: dense_monomials(n, max_degree).index(e)))
    push(mirrored)
    for d in range(2, max_degree + 1):
        for mono in dense_monomials(n, d):
            if sum(mono) == d:
                push([linear + [mono]] * m)
    push([dense_monomials(n, max_degree)] * m)
    return out
