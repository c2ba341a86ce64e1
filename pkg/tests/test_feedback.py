import time
from fractions import Fraction

import pytest

from polystab.feedback import (
    FeedbackFamily,
    LyapunovSpec,
    PolySystem,
    build_parametric_feedback,
    dense_monomials,
    linearize,
    lyapunov_derivative,
    param_letter,
    suggest_templates,
    synthesize,
)
from polystab.parser import parse_poly
from polystab.polyring import ParamRat, Polynomial
from polystab.positivity import Failure

from conftest import linear_decay_system


def test_param_letters():
    assert [param_letter(i) for i in range(4)] == ["A", "B", "Γ", "Δ"]


def test_dense_monomials():
    assert dense_monomials(2, 2) == [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]


def test_build_dense_family():
    fb = build_parametric_feedback(2, 1, 2)
    assert [p.name for p in fb.params] == ["A1", "B1", "Γ1", "Δ1", "E1"]
    assert str(fb.laws[0]) == "E1*x2^2 + Δ1*x1*x2 + B1*x2 + Γ1*x1^2 + A1*x1"


def test_build_rejects_bad_templates():
    with pytest.raises(ValueError, match="free term"):
        build_parametric_feedback(2, 1, 2, [[(0, 0)]])
    with pytest.raises(ValueError, match="exceeds degree"):
        build_parametric_feedback(2, 1, 1, [[(2, 0)]])
    with pytest.raises(ValueError):
        build_parametric_feedback(2, 1, 0)


def test_free_term_rejected():
    with pytest.raises(ValueError, match="free term"):
        PolySystem(("x",), (), [parse_poly("x + 1", ["x"])])


def test_lyapunov_spec_checks():
    with pytest.raises(ValueError):
        LyapunovSpec(parse_poly("x^2 + 1", ["x"]))
    with pytest.raises(ValueError):
        LyapunovSpec(parse_poly("x^2 - y^2", ["x", "y"]))
    assert LyapunovSpec.default(["x", "y"]).L == parse_poly("x^2 + y^2", ["x", "y"])


def test_derivative_of_linear_decay():
    sys = linear_decay_system()
    V = lyapunov_derivative(sys, LyapunovSpec.default(sys.states), [])
    assert V == parse_poly("2*x^2", ["x"])


def test_single_integrator():
    sys = PolySystem(("x1",), ("u1",), [parse_poly("u1", ["x1", "u1"])])
    fam = synthesize(sys, None, [[(1,)]], 1)
    assert isinstance(fam, FeedbackFamily)
    assert fam.constraints.solved_forms == ["A1 < 0"]
    assert fam.witness_values()["A1"] < 0
    assert str(fam.certificate.numeric_sos) == "2*x1^2"


def test_two_state_family(two_state):
    sys, L, opts = two_state
    t0 = time.perf_counter()
    fam = synthesize(sys, L, opts.template, opts.degree)
    assert time.perf_counter() - t0 < 60
    eq = fam.feedback_equalities()
    assert eq["A1"] == 2 and eq["B2"] == 2 and eq["Γ2"] == 0
    assert eq["A2"] == ParamRat(5) / (4 * ParamRat.symbol("B1"))
    w = fam.witness_values()
    assert {k: w[k] for k in ["A1", "A2", "B1", "B2", "Γ1", "Γ2"]} == {
        "A1": 2, "A2": Fraction(5, 4), "B1": 1, "B2": 2, "Γ1": Fraction(1, 2), "Γ2": 0,
    }
    shown = [str(i) for i in fam.constraints.intervals]
    assert "B1 in (0, 5/4)" in shown
    # V at the witness is twice the hand-derived certificate (literal gradient of x^2 + y^2)
    V = lyapunov_derivative(sys, L, fam.witness_laws())
    x, y = (Polynomial.variable(sys.states, s) for s in sys.states)
    hand = (
        x**4 * Fraction(20375, 663552)
        + 2 * (x * Fraction(659, 1152) + y) ** 2 * x**2
        + x**2
        + 3 * (x * Fraction(1, 6) + y) ** 4
    )
    assert V == 2 * hand


def test_rigid_body_unit_constants(rigid_body):
    sys, L, opts = rigid_body
    fam = synthesize(sys, L, opts.template, opts.degree, constant_values={"a1": 1, "a2": 1, "a3": 1})
    eq = fam.feedback_equalities()
    assert eq["Γ1"] == 0 and eq["Γ2"] == 0
    assert eq["Δ1"] + ParamRat.symbol("Δ2") == -3
    assert "B2 < 0" in fam.constraints.solved_forms
    A1 = [f for f in fam.constraints.solved_forms if f.startswith("A1 <")]
    assert A1
    rhs = parse_poly(A1[0].split("<", 1)[1].split("/")[0], ["A2", "B1"])
    assert rhs == parse_poly("(A2 + B1)^2", ["A2", "B1"])
    assert A1[0].endswith("/(4*B2)")


def test_rigid_body_symbolic_constants(rigid_body):
    sys, L, opts = rigid_body
    fam = synthesize(sys, L, opts.template, opts.degree)
    assert fam
    a = [ParamRat.symbol(s) for s in ("a1", "a2", "a3", "Δ2")]
    assert fam.feedback_equalities()["Δ1"] == -a[0] - a[1] - a[2] - a[3]
    assert fam.constraints.witness is None
    # plant constants are never solved for
    assert not set(fam.constraints.equalities) & {"a1", "a2", "a3"}


def test_unstabilizable_template_fails():
    sys = PolySystem(("x1", "x2"), ("u1",), [parse_poly("x1", ["x1", "x2", "u1"]), parse_poly("u1", ["x1", "x2", "u1"])])
    res = synthesize(sys, None, [[(0, 1)]], 1)
    assert isinstance(res, Failure)
    assert "no stabilizer found" in res.reason


def test_linearize(two_state, rigid_body):
    sys, _, _ = two_state
    J = linearize(sys)
    assert J.A == [[4, 8], [0, 0]] and J.B == [[0, -4], [0, 0]]
    sys, _, _ = rigid_body
    J = linearize(sys)
    assert J.A == [[0] * 3] * 3
    assert J.B == [[1, 0], [0, 1], [0, 0]]


def test_suggest_templates(two_state):
    sys, L, _ = two_state
    ts = suggest_templates(sys, L, 2)
    assert ts[0] == [[(1, 0), (0, 1)]] * 2
    assert ts[-1] == [dense_monomials(2, 2)] * 2
    assert len(ts) == len({repr(t) for t in ts})
