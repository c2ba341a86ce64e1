import random
from fractions import Fraction
from itertools import combinations

import pytest

from polystab.formalfactor import formal_lf
from polystab.parser import parse_poly
from polystab.polyring import ParamRat, Polynomial, eval_numeric
from polystab.positivity import (
    Certificate,
    Failure,
    classify,
    extract_sos,
    pos_check,
    solve,
    verify_witness,
)

XYZ = ["x", "y", "z"]
TERNARY = "x^2 - 2*x*y + 6*y^2 - 4*y*z + 3*z^2"


def test_ternary_quadratic_certificate():
    p = parse_poly(TERNARY, XYZ)
    cert = pos_check(p)
    assert isinstance(cert, Certificate)
    eq = cert.solution.equalities
    assert eq["W_3_2_1"] == Fraction(-2, 3)
    assert eq["W_3_1_1"] == 0
    assert eq["W_2_1_4"] == Fraction(-3, 14)
    assert str(cert.sos) == "3*(z - 2/3*y)^2 + 14/3*(y - 3/14*x)^2 + 11/14*x^2"
    assert cert.sos.polynomial() == p
    assert cert.positive_definite


def test_ternary_sos_by_hand():
    # the certificate re-expands to p using only integer arithmetic on the forms
    x, y, z = (Polynomial.variable(XYZ, v) for v in XYZ)
    sos = 3 * (z - Fraction(2, 3) * y) ** 2 + Fraction(14, 3) * (y - Fraction(3, 14) * x) ** 2 + Fraction(11, 14) * x**2
    assert sos == parse_poly(TERNARY, XYZ)


def test_verify_witness_and_corruption():
    p = parse_poly(TERNARY, XYZ)
    cert = pos_check(p)
    assert verify_witness(p, cert.solution)
    cert.solution.equalities["W_2_1_4"] = ParamRat(Fraction(3, 14))
    rep = verify_witness(p, cert.solution)
    assert not rep and rep.mismatch is not None


def test_perfect_square():
    p = parse_poly("x1^2 + 2*x1*x2 + x2^2", ["x1", "x2"])
    cert = pos_check(p)
    assert cert.solution.equalities["W_2_1_1"] == 1
    assert not cert.positive_definite


def test_sum_of_two_squares():
    cert = pos_check(parse_poly("x1^2 + x2^2", ["x1", "x2"]))
    assert cert and all(v == 0 for v in cert.solution.equalities.values())
    assert cert.positive_definite


@pytest.mark.parametrize("text", ["-x1^2", "x1*x2", "x1^3", "x1^2 - x2^2"])
def test_negative_controls(text):
    res = pos_check(parse_poly(text, ["x1", "x2"]))
    assert isinstance(res, Failure) and not res
    assert "inconclusive" in str(res)


def test_classification_partitions():
    f = formal_lf(parse_poly("5*x1 - 7*x1*x2 + 11*x1*x3", ["x1", "x2", "x3"]))
    cls = classify(f)
    assert cls.size == 4
    assert len(cls.odd) == 3 and len(cls.even) == 1


def test_branch_cap_reports_failure():
    f = formal_lf(parse_poly(TERNARY, XYZ))
    res = solve(f, branch_cap=1)
    assert isinstance(res, Failure) and "branch cap" in res.reason


def test_decision_params_inequality():
    # a*x^2 is nonnegative only under a >= 0
    x1 = Polynomial.variable(("x1", "x2"), "x1")
    x2 = Polynomial.variable(("x1", "x2"), "x2")
    p = x1**2 * ParamRat.symbol("a") + x2**2
    cert = pos_check(p, ["a"])
    assert cert
    assert [str(c) for c in cert.solution.sign_constraints] == ["a >= 0"]
    assert cert.solution.witness["a"] >= 0


def test_plant_constants_are_never_assigned():
    x1 = Polynomial.variable(("x1",), "x1")
    p = x1**2 * ParamRat.symbol("k")
    cert = pos_check(p, [], constants=["k"])
    assert not cert or "k" not in cert.solution.equalities
    cert = pos_check(p, [], constants=["k"], constant_values={"k": 2})
    assert cert and cert.solution.witness is not None


# --- oracles ------------------------------------------------------------------


def _det(M):
    n = len(M)
    if n == 1:
        return M[0][0]
    return sum((-1) ** j * M[0][j] * _det([row[:j] + row[j + 1 :] for row in M[1:]]) for j in range(n))


def _psd(M):
    # exact: every principal minor nonnegative
    n = len(M)
    for k in range(1, n + 1):
        for idx in combinations(range(n), k):
            if _det([[M[i][j] for j in idx] for i in idx]) < 0:
                return False
    return True


def _random_form(rng, n):
    M = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            v = Fraction(rng.randint(-6, 6), rng.choice([1, 1, 2]))
            M[i][j] = M[j][i] = v
    return M


def _form_poly(M, gens):
    vs = [Polynomial.variable(gens, g) for g in gens]
    p = Polynomial.zero(gens)
    for i in range(len(gens)):
        for j in range(len(gens)):
            p = p + vs[i] * vs[j] * M[i][j]
    return p


def test_quadratic_form_oracle():
    rng = random.Random(77)
    certified = 0
    for k in range(100):
        n = rng.randint(2, 3)
        gens = tuple(f"x{i}" for i in range(1, n + 1))
        M = _random_form(rng, n)
        if k % 3 == 0:
            # Gram of a random matrix: PSD by construction
            A = [[Fraction(rng.randint(-3, 3)) for _ in range(n)] for _ in range(n)]
            M = [[sum(A[r][i] * A[r][j] for r in range(n)) for j in range(n)] for i in range(n)]
        res = pos_check(_form_poly(M, gens))
        if res:
            certified += 1
            assert _psd(M), M
            assert res.sos.polynomial() == _form_poly(M, gens)
    assert certified >= 20


def test_sos_sampling_soundness():
    rng = random.Random(1)
    texts = [
        TERNARY,
        "x^2 + 2*x*y + y^2",
        "x^4 + y^4 + z^2",
        "x^2 + y^2 + z^2 - x*y",
        "x^2*y^2 + x^2 + 1",
    ]
    for t in texts:
        p = parse_poly(t, XYZ)
        cert = pos_check(p)
        assert cert, t
        poly = cert.sos.polynomial()
        for _ in range(1000):
            pt = {g: rng.uniform(-10, 10) for g in XYZ}
            assert float(eval_numeric(poly, pt)) >= -1e-9


def test_extract_sos_only_even_terms():
    f = formal_lf(parse_poly(TERNARY, XYZ))
    s = solve(f)
    sos = extract_sos(f, s)
    assert all(t.is_even for t in sos.terms)
