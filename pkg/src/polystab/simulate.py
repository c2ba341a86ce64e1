"""Fixed-step RK4 simulation of closed loops, with Lyapunov tracking.

This is the only floating point part of the package.
"""

from __future__ import annotations

import csv
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .feedback import LyapunovSpec, PolySystem, _closed_loop_rhs
from .polyring import Polynomial

__all__ = [
    "SimulationError",
    "CompiledPolys",
    "SimTrace",
    "DecreaseReport",
    "simulate_closed_loop",
    "simulate_batch",
    "check_decrease",
    "write_csv",
]


class SimulationError(RuntimeError):
    def __init__(self, message: str, last_time: float):
        self.last_time = last_time
        super().__init__(f"{message} (last good time t={last_time:.6g})")


class CompiledPolys:
    """Vectorised evaluation of numeric polynomials sharing the same generators."""

    def __init__(self, polys: Sequence[Polynomial]):
        polys = list(polys)
        gens = polys[0].gens if polys else ()
        monos = sorted({m for p in polys for m in p.terms})
        self.nvars = len(gens)
        self.exps = np.array(monos, dtype=np.int64).reshape(len(monos), len(gens))
        self.coefs = np.zeros((len(polys), len(monos)))
        index = {m: k for k, m in enumerate(monos)}
        for i, p in enumerate(polys):
            if p.gens != gens:
                raise ValueError("polynomials over different generators")
            if p.params():
                raise ValueError(f"unbound parameters {sorted(p.params())}; supply numeric values")
            for m, c in p.terms.items():
                self.coefs[i, index[m]] = float(c.constant_value)

    def __call__(self, X: np.ndarray) -> np.ndarray:
        """``X`` has shape (batch, nvars); result has shape (batch, npolys)."""
        if self.exps.shape[0] == 0:
            return np.zeros((X.shape[0], self.coefs.shape[0]))
        mon = np.prod(X[:, None, :] ** self.exps[None, :, :], axis=2)
        return mon @ self.coefs.T


@dataclass
class SimTrace:
    times: np.ndarray
    states: np.ndarray  # (steps+1, n)
    inputs: np.ndarray  # (steps+1, m)
    lyapunov: np.ndarray  # (steps+1,)

    def __post_init__(self):
        k = len(self.times)
        if not (len(self.states) == len(self.inputs) == len(self.lyapunov) == k):
            raise ValueError("trace arrays have different lengths")

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


@dataclass
class DecreaseReport:
    ok: bool
    tolerance: float
    max_increase: float
    first_violation: int | None = None
    time: float | None = None

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        if self.ok:
            return f"Lyapunov decrease: pass (max step increase {self.max_increase:.3e})"
        return (
            f"Lyapunov decrease: VIOLATION at step {self.first_violation} (t={self.time:.6g}), "
            f"L rose by {self.max_increase:.3e}; the origin is not certified stable along this trajectory"
        )


def _prepare(sys: PolySystem, laws: Sequence[Polynomial] | None, L: LyapunovSpec | None):
    states = sys.states
    if laws is None:
        laws = [Polynomial.zero(states) for _ in sys.inputs]
    laws = [law.with_gens(states) for law in laws]
    f = CompiledPolys(_closed_loop_rhs(sys, laws))
    u = CompiledPolys(laws) if laws else None
    if L is None:
        L = LyapunovSpec.default(states)
    lf = CompiledPolys([L.L.with_gens(states)])
    return f, u, lf


def simulate_batch(
    sys: PolySystem,
    laws: Sequence[Polynomial] | None,
    X0,
    t_final: float,
    dt: float = 1e-3,
    L: LyapunovSpec | None = None,
    bound: float = 1e6,
) -> list[SimTrace]:
    """Integrate several initial states at once; ``laws=None`` means u = 0."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t_final < 0:
        raise ValueError("t_final must be nonnegative")
    f, u, lf = _prepare(sys, laws, L)
    X = np.array(X0, dtype=float).reshape(-1, sys.n)
    steps = int(round(t_final / dt))
    B = X.shape[0]
    xs = np.empty((steps + 1, B, sys.n))
    xs[0] = X
    t = 0.0
    for k in range(steps):
        k1 = f(X)
        k2 = f(X + 0.5 * dt * k1)
        k3 = f(X + 0.5 * dt * k2)
        k4 = f(X + dt * k3)
        Xn = X + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(Xn)):
            raise SimulationError("non-finite state encountered", t)
        if np.max(np.linalg.norm(Xn, axis=1)) > bound:
            raise SimulationError(f"divergence: |x| exceeded {bound:g}", t)
        X = Xn
        t = (k + 1) * dt
        xs[k + 1] = X
    times = np.arange(steps + 1) * dt
    out = []
    for b in range(B):
        traj = xs[:, b, :]
        ins = u(traj) if u is not None else np.zeros((steps + 1, 0))
        out.append(SimTrace(times, traj, ins, lf(traj)[:, 0]))
    return out


def simulate_closed_loop(
    sys: PolySystem,
    laws: Sequence[Polynomial] | None,
    x0,
    t_final: float,
    dt: float = 1e-3,
    L: LyapunovSpec | None = None,
    bound: float = 1e6,
) -> SimTrace:
    return simulate_batch(sys, laws, [x0], t_final, dt, L, bound)[0]


def check_decrease(trace: SimTrace, tol: float = 1e-7) -> DecreaseReport:
    """L(t_{k+1}) <= L(t_k) + tol at every step."""
    d = np.diff(trace.lyapunov)
    if len(d) == 0:
        return DecreaseReport(True, tol, 0.0)
    bad = np.nonzero(d > tol)[0]
    worst = float(np.max(d))
    if len(bad) == 0:
        return DecreaseReport(True, tol, worst)
    k = int(bad[0])
    return DecreaseReport(False, tol, worst, k + 1, float(trace.times[k + 1]))


def write_csv(trace: SimTrace, path, states: Sequence[str], inputs: Sequence[str]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", *states, *inputs, "L"])
        for k in range(len(trace.times)):
            w.writerow(
                [repr(float(trace.times[k]))]
                + [repr(float(v)) for v in trace.states[k]]
                + [repr(float(v)) for v in trace.inputs[k]]
                + [repr(float(trace.lyapunov[k]))]
            )
