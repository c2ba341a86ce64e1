"""Exact polynomial positivity certificates and Lyapunov feedback synthesis."""

from .feedback import (
    FeedbackFamily,
    JacobianPair,
    LyapunovSpec,
    PolySystem,
    build_parametric_feedback,
    linearize,
    lyapunov_derivative,
    suggest_templates,
    synthesize,
)
from .formalfactor import FormalFactorization, RuleSet, evaluate, expand, formal_lf
from .parser import ParseError, parse_poly, parse_system, print_certificate
from .polyring import (
    ParamPoly,
    ParamRat,
    Polynomial,
    Role,
    Symbol,
    SymbolTable,
    eval_numeric,
    lex_compare,
    maxterm,
    partial_derivative,
    substitute,
)
from .positivity import (
    Certificate,
    Failure,
    SolutionSet,
    SumOfSquares,
    classify,
    extract_sos,
    pos_check,
    solve,
    verify_witness,
)
from .simulate import SimTrace, check_decrease, simulate_batch, simulate_closed_loop

__version__ = "0.1.0"

__all__ = [
    "FeedbackFamily",
    "JacobianPair",
    "LyapunovSpec",
    "PolySystem",
    "build_parametric_feedback",
    "linearize",
    "lyapunov_derivative",
    "suggest_templates",
    "synthesize",
    "ParamPoly",
    "ParamRat",
    "Polynomial",
    "Role",
    "Symbol",
    "SymbolTable",
    "eval_numeric",
    "lex_compare",
    "maxterm",
    "partial_derivative",
    "substitute",
    "Certificate",
    "Failure",
    "SolutionSet",
    "SumOfSquares",
    "classify",
    "extract_sos",
    "pos_check",
    "solve",
    "verify_witness",
    "FormalFactorization",
    "RuleSet",
    "evaluate",
    "expand",
    "formal_lf",
    "ParseError",
    "parse_poly",
    "parse_system",
    "print_certificate",
    "SimTrace",
    "check_decrease",
    "simulate_batch",
    "simulate_closed_loop",
]
