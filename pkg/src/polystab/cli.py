"""Command line entry point.

Exit codes: 0 success, 1 no certificate / decrease violation / divergence,
2 invalid input.
"""

from __future__ import annotations

import argparse
import json
import sys as _sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .feedback import LyapunovSpec, suggest_templates, synthesize
from .formalfactor import formal_lf
from .parser import ParseError, infer_table, parse_poly, parse_system, print_certificate
from .polyring import SymbolTable
from .positivity import pos_check
from .simulate import SimulationError, check_decrease, simulate_closed_loop, write_csv

EXIT_OK, EXIT_NONE, EXIT_INVALID = 0, 1, 2


@dataclass
class RunConfig:
    subcommand: str
    input_path: str | None = None
    expr: str | None = None
    states: list | None = None
    fmt: str = "text"
    seed: int = 0
    branch_cap: int = 256
    degree_cap: int | None = None
    lyapunov: str | None = None
    settings: dict = field(default_factory=dict)
    feedback_path: str | None = None
    open_loop: bool = False
    x0: list | None = None
    t_final: float = 20.0
    dt: float = 1e-3
    bound: float = 1e6
    csv_path: str = "trace.csv"

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "RunConfig":
        settings = {}
        for item in getattr(ns, "set", None) or []:
            if "=" not in item:
                raise ValueError(f"--set expects name=value, got {item!r}")
            k, v = item.split("=", 1)
            settings[k.strip()] = Fraction(v.strip())
        states = ns.states.split(",") if getattr(ns, "states", None) else None
        x0 = [float(Fraction(v)) for v in ns.x0.split(",")] if getattr(ns, "x0", None) else None
        return cls(
            subcommand=ns.command,
            input_path=getattr(ns, "file", None) or getattr(ns, "system", None),
            expr=getattr(ns, "expr", None),
            states=[s.strip() for s in states] if states else None,
            fmt=getattr(ns, "format", "text"),
            seed=getattr(ns, "seed", 0),
            branch_cap=getattr(ns, "branch_cap", 256),
            degree_cap=getattr(ns, "degree", None),
            lyapunov=getattr(ns, "lyapunov", None),
            settings=settings,
            feedback_path=getattr(ns, "feedback", None),
            open_loop=getattr(ns, "open_loop", False),
            x0=x0,
            t_final=getattr(ns, "tfinal", 20.0),
            dt=getattr(ns, "dt", 1e-3),
            bound=getattr(ns, "bound", 1e6),
            csv_path=getattr(ns, "csv", "trace.csv"),
        )


def _read_expr(cfg: RunConfig):
    if cfg.expr is not None:
        text = cfg.expr
    elif cfg.input_path:
        text = Path(cfg.input_path).read_text()
    else:
        raise ValueError("give an expression with --expr or a file")
    table = SymbolTable(states=cfg.states) if cfg.states else infer_table(text)
    return parse_poly(text, table)


def cmd_factor(cfg: RunConfig) -> int:
    p = _read_expr(cfg)
    print(print_certificate(formal_lf(p), cfg.fmt))
    return EXIT_OK


def cmd_positivity(cfg: RunConfig) -> int:
    p = _read_expr(cfg)
    res = pos_check(p, branch_cap=cfg.branch_cap, seed=cfg.seed)
    print(print_certificate(res, cfg.fmt))
    return EXIT_OK if res else EXIT_NONE


def _load_system(cfg: RunConfig):
    system, L, opts = parse_system(Path(cfg.input_path).read_text())
    if cfg.lyapunov:
        L = LyapunovSpec(parse_poly(cfg.lyapunov, SymbolTable(states=system.states)))
    values = dict(opts.constant_values)
    values.update(cfg.settings)
    unknown = set(values) - set(system.constants)
    if unknown:
        raise ValueError(f"--set names unknown plant constants: {sorted(unknown)}")
    return system, L, opts, values


def cmd_synthesize(cfg: RunConfig) -> int:
    system, L, opts, values = _load_system(cfg)
    if opts.template is not None and not cfg.degree_cap:
        templates = [opts.template]
    else:
        degree = cfg.degree_cap or opts.degree or 3
        templates = suggest_templates(system.with_constants(values), L, degree)
    res = None
    for t in templates:
        d = max(sum(m) for row in t for m in row) if t and any(t) else 1
        res = synthesize(
            system, L, t, d, constant_values=values, branch_cap=cfg.branch_cap, seed=cfg.seed
        )
        if res:
            break
    print(print_certificate(res, cfg.fmt))
    return EXIT_OK if res else EXIT_NONE


def _load_laws(path: str, states) -> list:
    doc = json.loads(Path(path).read_text())
    laws = doc.get("witness", {}).get("laws") if isinstance(doc.get("witness"), dict) else None
    if laws is None:
        laws = doc.get("laws")
    if laws is None:
        raise ValueError("feedback file has neither 'laws' nor 'witness.laws'")
    return laws


def cmd_simulate(cfg: RunConfig) -> int:
    system, L, _opts, values = _load_system(cfg)
    if values:
        system = system.with_constants(values)
    if system.constants:
        raise ValueError(f"plant constants need values: {list(system.constants)}")
    table = SymbolTable(states=system.states)
    if cfg.open_loop or not system.inputs:
        laws = None
    else:
        if not cfg.feedback_path:
            raise ValueError("simulate needs --feedback FILE or --open-loop")
        raw = _load_laws(cfg.feedback_path, system.states)
        if isinstance(raw, dict):
            raw = [raw[u] for u in system.inputs]
        if len(raw) != system.m:
            raise ValueError(f"{len(raw)} feedback laws for {system.m} inputs")
        laws = [parse_poly(text, table) for text in raw]
    x0 = cfg.x0 if cfg.x0 is not None else [0.0] * system.n
    if len(x0) != system.n:
        raise ValueError(f"--x0 has {len(x0)} entries for {system.n} states")
    try:
        trace = simulate_closed_loop(system, laws, x0, cfg.t_final, cfg.dt, L, cfg.bound)
    except SimulationError as exc:
        print(f"simulation aborted: {exc}")
        return EXIT_NONE
    write_csv(trace, cfg.csv_path, system.states, system.inputs)
    report = check_decrease(trace)
    final = ", ".join(f"{v:.6g}" for v in trace.final_state)
    print(f"trace written to {cfg.csv_path} ({len(trace.times)} rows)")
    print(f"final state: ({final})")
    print(str(report))
    if not report:
        print("origin is an unstable equilibrium point for this input (L increased)" if laws is None
              else "decrease check failed")
    return EXIT_OK if report else EXIT_NONE


COMMANDS = {
    "factor": cmd_factor,
    "positivity": cmd_positivity,
    "synthesize": cmd_synthesize,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polystab", description="Exact polynomial positivity and feedback synthesis.")
    sub = ap.add_subparsers(dest="command", required=True)

    def expr_args(p):
        p.add_argument("file", nargs="?", help="file holding one polynomial expression")
        p.add_argument("--expr", help="polynomial expression, e.g. '5*x1-7*x1*x2'")
        p.add_argument("--states", help="comma separated variable order x1,...,xn (default: natural sort)")
        p.add_argument("--format", choices=["text", "json"], default="text")

    p = sub.add_parser("factor", help="formal linear-like factorization")
    expr_args(p)
    p = sub.add_parser("positivity", help="search for a sum-of-squares certificate")
    expr_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--branch-cap", type=int, default=256)

    p = sub.add_parser("synthesize", help="stabilizing feedback family for a system file")
    p.add_argument("system")
    p.add_argument("--degree", type=int, default=None, help="degree cap for template escalation (default 3)")
    p.add_argument("--lyapunov", help="Lyapunov function (default: sum of squares of states)")
    p.add_argument("--set", action="append", metavar="NAME=VALUE", help="plant constant value")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--branch-cap", type=int, default=256)

    p = sub.add_parser("simulate", help="RK4 closed-loop simulation with Lyapunov tracking")
    p.add_argument("system")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--feedback", help="JSON file with 'laws' or a synthesize --format json document")
    g.add_argument("--open-loop", action="store_true", help="simulate with u = 0")
    p.add_argument("--x0", help="comma separated initial state, rationals allowed")
    p.add_argument("--tfinal", type=float, default=20.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--bound", type=float, default=1e6)
    p.add_argument("--csv", default="trace.csv")
    p.add_argument("--lyapunov")
    p.add_argument("--set", action="append", metavar="NAME=VALUE")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    try:
        cfg = RunConfig.from_args(ns)
        return COMMANDS[cfg.subcommand](cfg)
    except (ParseError, ValueError, OSError, ZeroDivisionError, KeyError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    _sys.exit(main())
