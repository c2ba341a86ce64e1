import random
import time
from fractions import Fraction
from pathlib import Path

import pytest

from polystab.feedback import PolySystem
from polystab.parser import parse_system
from polystab.polyring import ParamRat, Polynomial

ROOT = Path(__file__).resolve().parents[1]
SYSTEMS = ROOT / "systems"

# criterion id -> (title, passed); filled from tests marked with ``criterion``
ACCEPTANCE: dict = {}
SUITE_LIMIT_S = 300.0
_started = [0.0]


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(id, title): acceptance criterion check")


def pytest_sessionstart(session):
    _started[0] = time.perf_counter()


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    cid, title = mark.args
    if rep.when == "setup" and rep.passed:
        return
    ok = rep.passed
    prev = ACCEPTANCE.get(cid)
    ACCEPTANCE[cid] = (title, ok if prev is None else (prev[1] and ok))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    elapsed = time.perf_counter() - _started[0]
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE):
        title, ok = ACCEPTANCE[cid]
        terminalreporter.write_line(f"criterion {cid}: {'PASS' if ok else 'FAIL'}  {title}")
    ok = elapsed < SUITE_LIMIT_S
    terminalreporter.write_line(
        f"criterion 7-time: {'PASS' if ok else 'FAIL'}  session finished in {elapsed:.1f} s (limit {SUITE_LIMIT_S:.0f} s)"
    )


def gens_vars(*names):
    return [Polynomial.variable(names, n) for n in names]


def random_poly(rng: random.Random, n=None, deg=4, nterms=8, params=()):
    n = n or rng.randint(1, 4)
    gens = tuple(f"x{i}" for i in range(1, n + 1))
    terms = {}
    for _ in range(rng.randint(1, nterms)):
        d = rng.randint(0, deg)
        m = [0] * n
        for _ in range(d):
            m[rng.randrange(n)] += 1
        c = ParamRat(Fraction(rng.randint(-20, 20), rng.randint(1, 9)))
        if params and rng.random() < 0.3:
            c = c * ParamRat.symbol(rng.choice(params))
        terms[tuple(m)] = c
    return Polynomial(gens, terms)


@pytest.fixture
def two_state():
    return parse_system((SYSTEMS / "two_state_cubic.json").read_text())


@pytest.fixture
def rigid_body():
    return parse_system((SYSTEMS / "rigid_body.json").read_text())


@pytest.fixture
def single_integrator():
    return parse_system((SYSTEMS / "single_integrator.json").read_text())


def linear_decay_system():
    (x,) = gens_vars("x")
    return PolySystem(("x",), (), [-x])
