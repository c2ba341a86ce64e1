import random
import time
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from polystab.formalfactor import (
    FactorizationError,
    RuleSet,
    descent_ok,
    evaluate,
    expand,
    formal_lf,
    params_sorted,
    w_name,
)
from polystab.parser import parse_poly
from polystab.polyring import ParamRat, Polynomial, lex_key

from conftest import random_poly

G3 = ["x1", "x2", "x3"]


def test_three_term_example():
    p = parse_poly("5*x1 - 7*x1*x2 + 11*x1*x3", G3)
    f = formal_lf(p)
    assert len(f.factors) == 2
    W321 = ParamRat.symbol("W_3_2_1")
    assert f.factors[0].coefficient == 11
    assert f.factors[1].coefficient == -7 - 11 * W321
    assert f.factors[0].exponents == (1, 0, 1)
    assert f.factors[1].exponents == (1, 1, 0)
    W212, W311 = ParamRat.symbol("W_2_1_2"), ParamRat.symbol("W_3_1_1")
    rem = {m: c for m, c in f.remainder.items()}
    assert rem == {(1, 0, 0): ParamRat(5), (2, 0, 0): 7 * W212 - 11 * W311 + 11 * W212 * W321}
    assert str(f) == (
        "11*x1*(x3 + W_3_2_1*x2 + W_3_1_1*x1) + (-7 - 11*W_3_2_1)*x1*(x2 + W_2_1_2*x1)"
        " + (7*W_2_1_2 - 11*W_3_1_1 + 11*W_2_1_2*W_3_2_1)*x1^2 + 5*x1"
    )
    assert params_sorted(f) == ["W_2_1_2", "W_3_1_1", "W_3_2_1"]
    assert expand(f) == p


def test_rule_evaluation():
    p = parse_poly("5*x1 - 7*x1*x2 + 11*x1*x3", G3)
    f = formal_lf(p)
    rules = RuleSet(("W_3_1_1", "W_3_2_1", "W_2_1_2"), [(-2, 1, -1)])
    (g,) = evaluate(f, rules)
    assert str(g) == "11*x1*(x3 + x2 - 2*x1) - 18*x1*(x2 - x1) + 4*x1^2 + 5*x1"
    assert expand(g) == p


def test_rule_vector_length_checked():
    with pytest.raises(ValueError, match="does not match"):
        RuleSet(("a", "b"), [(1,)])


def test_zero_coefficient_factor_dropped():
    p = parse_poly("5*x1 - 7*x1*x2 + 11*x1*x3", G3)
    f = formal_lf(p)
    rules = RuleSet(("W_3_2_1",), [(Fraction(-7, 11),)])
    (g,) = evaluate(f, rules)
    assert len(g.factors) == 1


def test_univariate_is_pure_remainder():
    p = parse_poly("3*x1^4 - x1", ["x1", "x2"])
    f = formal_lf(p)
    assert f.factors == [] and f.remainder == p


def test_zero_polynomial():
    f = formal_lf(Polynomial.zero(("x1", "x2")))
    assert f.factors == [] and f.remainder.is_zero


def test_w_names():
    assert w_name(3, 2, 1) == "W_3_2_1"


def test_existing_w_params_rejected():
    x1, x2 = Polynomial.variable(("x1", "x2"), "x1"), Polynomial.variable(("x1", "x2"), "x2")
    with pytest.raises(ValueError):
        formal_lf(x1 * x2 * ParamRat.symbol("W_2_1_1"))


def test_iteration_cap():
    p = parse_poly("x1*x2 + x2^2", ["x1", "x2"])
    with pytest.raises(FactorizationError):
        formal_lf(p, max_iterations=1)


def test_round_trip_random_corpus():
    rng = random.Random(2024)
    for _ in range(200):
        p = random_poly(rng)
        f = formal_lf(p)
        assert (expand(f) - p).is_zero
        assert descent_ok(f)
        assert all(m[1:] == (0,) * (len(m) - 1) for m in f.remainder.terms)


def test_descent_strict_each_iteration():
    rng = random.Random(5)
    for _ in range(50):
        p = random_poly(rng, n=3, deg=3)
        f = formal_lf(p)
        keys = [lex_key(m) for m in f.maxterms]
        assert keys == sorted(keys, reverse=True)
        assert len(set(keys)) == len(keys)


def test_parametric_coefficients_round_trip():
    rng = random.Random(9)
    for _ in range(30):
        p = random_poly(rng, n=3, deg=3, params=("a", "b"))
        assert (expand(formal_lf(p)) - p).is_zero


small_terms = st.dictionaries(
    st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(0, 2)),
    st.integers(-9, 9).filter(bool),
    max_size=5,
)


@settings(max_examples=40, derandomize=True, deadline=None)
@given(small_terms)
def test_round_trip_hypothesis(terms):
    p = Polynomial(tuple(G3), terms)
    f = formal_lf(p)
    assert expand(f) == p


def test_three_term_timing():
    p = parse_poly("5*x1 - 7*x1*x2 + 11*x1*x3", G3)
    t0 = time.perf_counter()
    formal_lf(p)
    assert time.perf_counter() - t0 < 1.0
