import csv
import math

import numpy as np
import pytest

from polystab.feedback import PolySystem, lyapunov_derivative, synthesize
from polystab.parser import parse_poly
from polystab.polyring import eval_numeric
from polystab.simulate import (
    CompiledPolys,
    SimulationError,
    check_decrease,
    simulate_batch,
    simulate_closed_loop,
    write_csv,
)

from conftest import linear_decay_system


def _err(dt):
    tr = simulate_closed_loop(linear_decay_system(), None, [1.0], 1.0, dt)
    return abs(tr.final_state[0] - math.exp(-1.0))


def test_matches_exponential():
    tr = simulate_closed_loop(linear_decay_system(), None, [1.0], 1.0, 1e-3)
    assert np.allclose(tr.states[:, 0], np.exp(-tr.times), atol=1e-8)


def test_rk4_order():
    ratio = _err(0.1) / _err(0.05)
    assert 12 <= ratio <= 20


def test_compiled_polys_match_exact():
    p = parse_poly("3*x^2*y - 1/2*y^3 + x", ["x", "y"])
    f = CompiledPolys([p])
    X = np.array([[0.5, -1.25], [2.0, 3.0]])
    for row, v in zip(X, f(X)[:, 0]):
        assert v == pytest.approx(float(eval_numeric(p, {"x": row[0], "y": row[1]})))


def test_divergence_aborts():
    sys = PolySystem(("x",), (), [parse_poly("x^2", ["x"])])
    with pytest.raises(SimulationError) as ei:
        simulate_closed_loop(sys, None, [1.0], 2.0, 1e-3, bound=1e3)
    assert ei.value.last_time < 1.0


def test_lyapunov_rate_matches_derivative(two_state):
    sys, L, opts = two_state
    fam = synthesize(sys, L, opts.template, opts.degree)
    laws = fam.witness_laws()
    V = lyapunov_derivative(sys, L, laws)
    tr = simulate_closed_loop(sys, laws, [0.3, -0.2], 0.5, 1e-3, L)
    k = 100
    rate = (tr.lyapunov[k + 1] - tr.lyapunov[k - 1]) / (2e-3)
    x, y = tr.states[k]
    assert rate == pytest.approx(-float(eval_numeric(V, {"x": x, "y": y})), rel=1e-4)


def test_closed_loop_decreases(two_state):
    sys, L, opts = two_state
    fam = synthesize(sys, L, opts.template, opts.degree)
    trs = simulate_batch(sys, fam.witness_laws(), [[1, 1], [-2, 0.5], [0, -3]], 5.0, 1e-3, L)
    for tr in trs:
        assert check_decrease(tr)
        assert tr.lyapunov[-1] < tr.lyapunov[0]


def test_open_loop_violation(two_state):
    sys, L, _ = two_state
    tr = simulate_closed_loop(sys, None, [0.1, 0.1], 1.0, 1e-3, L)
    rep = check_decrease(tr)
    assert not rep and rep.first_violation == 1
    assert "VIOLATION" in str(rep)


def test_origin_stays_put(two_state):
    sys, L, _ = two_state
    tr = simulate_closed_loop(sys, None, [0.0, 0.0], 1.0, 1e-2, L)
    assert check_decrease(tr) and not tr.states.any()


def test_csv(tmp_path, two_state):
    sys, L, _ = two_state
    tr = simulate_closed_loop(sys, None, [0.1, 0.0], 0.01, 1e-3, L)
    path = tmp_path / "t.csv"
    write_csv(tr, path, sys.states, sys.inputs)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["t", "x", "y", "u1", "u2", "L"]
    assert len(rows) == 12
    assert float(rows[-1][0]) == pytest.approx(0.01)


def test_bad_step():
    with pytest.raises(ValueError):
        simulate_closed_loop(linear_decay_system(), None, [1.0], 1.0, 0.0)


def test_parametric_laws_rejected(two_state):
    sys, L, opts = two_state
    fam = synthesize(sys, L, opts.template, opts.degree)
    with pytest.raises(ValueError, match="unbound parameters"):
        simulate_closed_loop(sys, fam.laws, [1, 1], 0.1)
