"""Config-driven command line.

A run is described by one JSON document: the command, the environment, and
optional solver overrides.  Tables go to ``<prefix>.<kind>.csv`` and a
summary record goes to ``<prefix>.summary.json`` and standard output.
Failures print a JSON error record to standard error and exit with the
code carried by the exception (1 config, 2 assumption, 3 infeasible or
violated, 4 enumeration cap).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import os
import sys
import tempfile
from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from . import baseline, oracle, retirement, verifier
from .baseline import ContractPath, OptimalContract
from .config import SolverConfig
from .errors import ContractError, ParseError, SchemaError
from .payoff_env import (DECREASING, INCREASING, Affine, PayoffEnv, Polynomial, Table,
                         make_apprenticeship_env, make_bertrand_env, make_cournot_env,
                         make_env, make_polynomial_env)
from .retirement import RetirementContract, RetirementEnv

COMMANDS = ("solve", "retire", "pareto", "sweep-delta", "sweep-cost", "verify", "oracle")
FMT = ".12g"


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


# --- function and environment descriptors --------------------------------

class AffineFn(_Strict):
    kind: Literal["affine"]
    intercept: float
    slope: float


class PolyFn(_Strict):
    kind: Literal["polynomial"]
    coeffs: list[float] = Field(min_length=1)


class TableFn(_Strict):
    kind: Literal["table"]
    x: list[float] = Field(min_length=2)
    y: list[float] = Field(min_length=2)


FnSpec = Annotated[Union[AffineFn, PolyFn, TableFn], Field(discriminator="kind")]


def build_fn(spec, direction):
    if isinstance(spec, AffineFn):
        return Affine(spec.intercept, spec.slope, direction)
    if isinstance(spec, PolyFn):
        return Polynomial(tuple(spec.coeffs), direction)
    return Table(tuple(spec.x), tuple(spec.y), direction)


class PolynomialEnv(_Strict):
    family: Literal["polynomial"]
    pi: list[float] = Field(min_length=1)
    w: list[float] = Field(min_length=1)
    v: list[float] = Field(min_length=1)
    delta: float


class FunctionsEnv(_Strict):
    family: Literal["functions"]
    pi: FnSpec
    w: FnSpec
    v: FnSpec
    delta: float
    s0: float = 0.0


class ApprenticeshipEnv(_Strict):
    family: Literal["apprenticeship"]
    p: float
    q: float
    delta: float


class CournotEnv(_Strict):
    family: Literal["cournot"]
    A: float
    beta: float
    delta: float


class BertrandEnv(_Strict):
    family: Literal["bertrand"]
    A: float
    gamma: float
    delta: float


EnvSpec = Annotated[Union[PolynomialEnv, FunctionsEnv, ApprenticeshipEnv, CournotEnv,
                          BertrandEnv], Field(discriminator="family")]


def build_env(spec, delta: float | None = None) -> PayoffEnv:
    d = spec.delta if delta is None else delta
    if isinstance(spec, PolynomialEnv):
        return make_polynomial_env(spec.pi, spec.w, spec.v, d)
    if isinstance(spec, FunctionsEnv):
        return make_env(build_fn(spec.pi, INCREASING), build_fn(spec.w, DECREASING),
                        build_fn(spec.v, INCREASING), d, spec.s0)
    if isinstance(spec, ApprenticeshipEnv):
        return make_apprenticeship_env(spec.p, spec.q, d)
    if isinstance(spec, CournotEnv):
        return make_cournot_env(spec.A, spec.beta, d)
    return make_bertrand_env(spec.A, spec.gamma, d)


# --- run specification ----------------------------------------------------

class SolverOverrides(_Strict):
    scan_points: int | None = Field(default=None, ge=3)
    retire_scan_points: int | None = Field(default=None, ge=3)
    eps_step: float | None = Field(default=None, gt=0)
    eps_root: float | None = Field(default=None, gt=0)
    eps_val: float | None = Field(default=None, ge=0)
    max_periods: int | None = Field(default=None, ge=1)
    cap: int | None = Field(default=None, ge=1)
    tol: float | None = Field(default=None, ge=0)

    def config(self) -> SolverConfig:
        return SolverConfig(**{k: v for k, v in self.model_dump().items() if v is not None})


class ContractSpec(_Strict):
    s: list[float] = Field(min_length=1)
    p: list[float] = Field(min_length=1)
    s_limit: float | None = None


class GridModel(_Strict):
    m: int = Field(ge=2)
    T: int | None = Field(default=None, ge=1)
    tail: Literal["stationary", "full"] = "stationary"


class OutputSpec(_Strict):
    prefix: str | None = None
    format: Literal["csv"] = "csv"


class RunSpec(_Strict):
    command: Literal["solve", "retire", "pareto", "sweep-delta", "sweep-cost",
                     "verify", "oracle"]
    env: EnvSpec
    K: int | None = Field(default=None, ge=2)
    C: FnSpec | None = None
    lambdas: list[float] | None = None
    deltas: list[float] | None = None
    n_points: int = Field(default=101, ge=1)
    contract: ContractSpec | None = None
    grid: GridModel | None = None
    solver: SolverOverrides = Field(default_factory=SolverOverrides)
    output: OutputSpec = Field(default_factory=OutputSpec)


REQUIRED = {
    "retire": ("K", "C"),
    "sweep-cost": ("K", "C", "lambdas"),
    "sweep-delta": ("deltas",),
    "verify": ("contract",),
    "oracle": ("grid",),
}


def _loc(err) -> str:
    return ".".join(str(x) for x in err["loc"]) or "<root>"


def parse_config(text: str) -> RunSpec:
    """Parse and validate a JSON run document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}")
    return parse_document(doc)


def parse_document(doc) -> RunSpec:
    if not isinstance(doc, dict):
        raise SchemaError("run document must be a JSON object", key="<root>")
    try:
        spec = RunSpec.model_validate(doc)
    except ValidationError as exc:
        err = exc.errors()[0]
        key = _loc(err)
        raise SchemaError(f"{key}: {err['msg']}", key=key) from None
    for key in REQUIRED.get(spec.command, ()):
        if getattr(spec, key) is None:
            raise SchemaError(f"{key}: required by command {spec.command!r}", key=key)
    if spec.command == "sweep-cost" and any(lam <= 0 for lam in spec.lambdas):
        raise SchemaError("lambdas: cost scales must be positive", key="lambdas")
    if spec.command == "oracle" and spec.K is None and spec.grid.T is None:
        raise SchemaError("grid.T: required unless K is given", key="grid.T")
    if (spec.K is None) != (spec.C is None):
        key = "C" if spec.C is None else "K"
        raise SchemaError(f"{key}: K and C must be given together", key=key)
    return spec


def serialize(spec: RunSpec) -> dict:
    """Canonical document: defaults filled in, unset optional keys dropped."""
    return spec.model_dump(mode="json", exclude_none=True)


# --- output helpers --------------------------------------------------------

def fmt(x) -> str:
    if x is None or (isinstance(x, float) and np.isnan(x)):
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), FMT)


def _clean(obj):
    """Round floats to 12 significant digits so summaries are byte-stable."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if np.isnan(x) or np.isinf(x):
            return None
        return float(format(x, FMT))
    return obj


def _atomic_write(path: str, text: str):
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for row in rows:
        wr.writerow([fmt(x) for x in row])
    return buf.getvalue()


def emit_plot_data(obj) -> dict:
    """Staircase series (t, s_t, p_t) plus the reference line for plotting.

    For an optimal contract the reference is the level M* of delta*pi + w;
    for a bare path it is the limit level; for a retirement contract it is
    the terminal knowledge level 1.
    """
    if isinstance(obj, OptimalContract):
        path, ref, kind = obj.path, obj.M_star, "M_star"
    elif isinstance(obj, ContractPath):
        path, ref, kind = obj, obj.s_limit, "s_limit"
    elif isinstance(obj, RetirementContract):
        s = np.asarray(obj.s, dtype=float)
        p = list(np.asarray(obj.p, dtype=float)) + [None]
        rows = [(t, float(s[t]), p[t]) for t in range(len(s))]
        return {"header": ("t", "s_t", "p_t"), "rows": rows,
                "reference": float(s[-1]), "reference_kind": "terminal"}
    else:
        raise TypeError(f"cannot plot {type(obj).__name__}")
    rows = [(t, float(path.s[t]), float(path.p[t])) for t in range(len(path.s))]
    return {"header": ("t", "s_t", "p_t"), "rows": rows,
            "reference": float(ref), "reference_kind": kind}


# --- commands ----------------------------------------------------------------

def _retirement_env(spec: RunSpec, env: PayoffEnv) -> RetirementEnv:
    return RetirementEnv(env, spec.K, build_fn(spec.C, DECREASING))


def _solve(spec, env, cfg):
    opt = baseline.solve_optimal(env, cfg)
    plot = emit_plot_data(opt)
    summary = {"sbar_star": opt.sbar_star, "s1_star": opt.s1_star, "M_star": opt.M_star,
               "Pi0": opt.Pi0, "W0": opt.W0, "trivial": opt.trivial,
               "s_limit": opt.path.s_limit, "T": opt.path.T,
               "truncated": opt.path.truncated}
    return summary, {"sequence": (plot["header"], plot["rows"])}, 0


def _retire(spec, env, cfg):
    envR = _retirement_env(spec, env)
    rc = retirement.solve_retirement(envR, cfg)
    report = verifier.check_retirement_contract(envR, rc, cfg.tol)
    plot = emit_plot_data(rc)
    summary = {"K": envR.K, "s1_star": float(rc.s[1]), "Pi0R": rc.Pi0R,
               "s1_roots": list(rc.s1_roots), "verdict": str(report.verdict)}
    return summary, {"sequence": (plot["header"], plot["rows"])}, 0


def _pareto(spec, env, cfg):
    opt = baseline.solve_optimal(env, cfg)
    pts = baseline.pareto_frontier(env, opt, spec.n_points)
    rows = [(q.p0, q.Pi0, q.W0) for q in pts]
    summary = {"s1_star": opt.s1_star, "p0_max": pts[-1].p0, "surplus": opt.Pi0 + opt.W0,
               "n_points": len(pts)}
    return summary, {"frontier": (("p0", "Pi0", "W0"), rows)}, 0


def _sweep_delta(spec, env, cfg):
    rows = []
    for d in spec.deltas:
        opt = baseline.solve_optimal(build_env(spec.env, d), cfg)
        rows.append((d, opt.s1_star, opt.sbar_star, opt.Pi0))
    lo, hi = baseline.delta_thresholds(lambda d: build_env(spec.env, d), cfg=cfg)
    summary = {"delta_low": lo, "delta_high": hi, "rows": len(rows)}
    return summary, {"sweep": (("param", "s1_star", "sbar_star", "Pi0"), rows)}, 0


def _sweep_cost(spec, env, cfg):
    envR = _retirement_env(spec, env)
    table = retirement.cost_scaling_sweep(envR, spec.lambdas, cfg)
    # the retirement contract always ends at full knowledge
    rows = [(lam, s1, 1.0, pi0) for lam, s1, pi0 in table]
    summary = {"K": envR.K, "rows": len(rows)}
    return summary, {"sweep": (("param", "s1_star", "sbar_star", "Pi0"), rows)}, 0


def _verify(spec, env, cfg):
    c = spec.contract
    rows = []
    if spec.K is not None:
        envR = _retirement_env(spec, env)
        rc = RetirementContract(np.array(c.s), np.array(c.p), float("nan"))
        report = verifier.check_retirement_contract(envR, rc, cfg.tol)
    else:
        s_lim = c.s[-1] if c.s_limit is None else c.s_limit
        try:
            path = ContractPath(np.array(c.s), s_lim, np.array(c.p))
        except ValueError as exc:
            raise SchemaError(f"contract: {exc}", key="contract") from None
        report = verifier.check_contract(env, path, cfg.tol)
    for rec in report.per_period:
        for name, lo, hi in rec.intervals():
            if not np.isnan(lo):
                rows.append((rec.t, name, lo, hi))
    v = report.verdict
    summary = {"verdict": str(v), "feasibility_ok": report.feasibility_ok,
               "min_slack": report.min_slack, "constraint": v.constraint, "t": v.t}
    code = 3 if v.kind == verifier.VIOLATED else 0
    return summary, {"verify": (("t", "constraint", "slack_lo", "slack_hi"), rows)}, code


def _oracle(spec, env, cfg):
    g = spec.grid
    if spec.K is not None:
        envR = _retirement_env(spec, env)
        best, seq = oracle.oracle_retirement(envR, oracle.GridSpec(g.m, envR.K), cfg.cap)
        rows = [(t, float(x)) for t, x in enumerate(seq)]
        summary = {"best_profit": best, "best_sequence": [float(x) for x in seq]}
        return summary, {"oracle": (("t", "s_t"), rows)}, 0
    grid = oracle.GridSpec(g.m, g.T)
    env_max = oracle.enumerate_envelope(env, grid, cfg.cap, tail=g.tail)
    opt = baseline.solve_optimal(env, cfg)
    ref = [opt.path.s[min(t, opt.path.T)] for t in range(1, g.T + 1)]
    rows = [(t + 1, env_max[t], ref[t], bool(env_max[t] <= ref[t] + grid.h + 1e-12))
            for t in range(g.T)]
    summary = {"h": grid.h, "tail": g.tail, "dominance_ok": all(r[3] for r in rows)}
    return summary, {"oracle": (("t", "envelope", "solver_s_t", "within_h"), rows)}, 0


HANDLERS = {"solve": _solve, "retire": _retire, "pareto": _pareto,
            "sweep-delta": _sweep_delta, "sweep-cost": _sweep_cost,
            "verify": _verify, "oracle": _oracle}


@dataclasses.dataclass
class RunResult:
    summary: dict
    tables: dict
    exit_code: int
    files: list


def run(spec: RunSpec, prefix: str | None = None) -> RunResult:
    """Execute a validated spec; write tables and the summary when a prefix is known."""
    cfg = spec.solver.config()
    env = build_env(spec.env)
    summary, tables, code = HANDLERS[spec.command](spec, env, cfg)
    summary = _clean({"command": spec.command, "inputs": serialize(spec), **summary})
    prefix = prefix or spec.output.prefix
    files = []
    if prefix:
        for kind, (header, rows) in tables.items():
            path = f"{prefix}.{kind}.csv"
            _atomic_write(path, csv_text(header, rows))
            files.append(path)
        path = f"{prefix}.summary.json"
        _atomic_write(path, json.dumps(summary, indent=2, sort_keys=True) + "\n")
        files.append(path)
    return RunResult(summary, tables, code, files)


def _error_record(exc: ContractError) -> str:
    rec = {"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}
    if getattr(exc, "key", None):
        rec["key"] = exc.key
    return json.dumps(rec, sort_keys=True)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="knowtransfer",
                                 description="Solve and verify knowledge-transfer contracts.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON run document")
    ap.add_argument("--out", help="output path prefix")
    ap.add_argument("--scan-points", type=int)
    ap.add_argument("--max-periods", type=int)
    ap.add_argument("--tol", type=float)
    args = ap.parse_args(argv)
    try:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ParseError(f"cannot read config: {exc}") from None
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}")
        if not isinstance(doc, dict):
            raise SchemaError("run document must be a JSON object", key="<root>")
        if doc.setdefault("command", args.command) != args.command:
            raise SchemaError(f"command: document says {doc['command']!r}, "
                              f"command line says {args.command!r}", key="command")
        solver = doc.setdefault("solver", {})
        if isinstance(solver, dict):
            for key, val in (("scan_points", args.scan_points),
                             ("max_periods", args.max_periods), ("tol", args.tol)):
                if val is not None:
                    solver[key] = val
        spec = parse_document(doc)
        result = run(spec, args.out)
    except ContractError as exc:
        print(_error_record(exc), file=sys.stderr)
        return exc.exit_code
    print(json.dumps(result.summary, indent=2, sort_keys=True))
    if result.exit_code:
        s = result.summary
        print(json.dumps({"error": "Violated", "constraint": s.get("constraint"),
                          "t": s.get("t"), "exit_code": result.exit_code}, sort_keys=True),
              file=sys.stderr)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
