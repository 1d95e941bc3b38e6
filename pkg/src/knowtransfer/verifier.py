"""Implementability checks for candidate contracts.

Everything here is computed from the raw discounted sums of stage payoffs
and payments.  Nothing calls the break-even recursions, so agreement with
the solvers is real evidence rather than a restatement.

Infinite paths are given as a finite prefix plus a limit level.  Beyond the
prefix the knowledge path is only known to lie between the last prefix
value and the limit, so every continuation value is reported as an
interval [lo, hi].  A constraint holds when its slack lower bound is at
least ``-tol``; it is violated when the upper bound is below ``-tol``; it is
indeterminate in between (enlarge the prefix).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .baseline import ContractPath
from .payoff_env import PayoffEnv
from .retirement import RetirementContract, RetirementEnv

PRINCIPAL = "Principal"
EXPERT = "Expert"
IMPLEMENTABLE = "Implementable"
VIOLATED = "Violated"
INDETERMINATE = "Indeterminate"
INDET = "Indeterminate"  # the third value of DeviationResult.profitable
TOL = 1e-8


@dataclass(frozen=True)
class Verdict:
    kind: str
    constraint: str | None = None
    t: int | None = None

    def __str__(self):
        if self.kind == IMPLEMENTABLE:
            return self.kind
        if self.kind == VIOLATED:
            return f"{self.kind}({self.constraint}, t={self.t})"
        return f"{self.kind}(t={self.t})"


@dataclass
class PeriodSlack:
    t: int
    pic_lo: float
    pic_hi: float
    eic_lo: float
    eic_hi: float
    sic_lo: float = float("nan")   # NaN where the constraint does not apply
    sic_hi: float = float("nan")

    def intervals(self):
        return (("P-IC", self.pic_lo, self.pic_hi),
                ("E-IC", self.eic_lo, self.eic_hi),
                ("S-IC", self.sic_lo, self.sic_hi))


@dataclass
class ICReport:
    feasibility_ok: bool
    per_period: list[PeriodSlack]
    min_slack: float
    verdict: Verdict
    notes: list[str] = field(default_factory=list)

    @property
    def implementable(self) -> bool:
        return self.verdict.kind == IMPLEMENTABLE


@dataclass(frozen=True)
class DeviationResult:
    player: str
    t: int
    onpath_value: tuple[float, float]
    deviation_value: tuple[float, float]
    profitable: object   # False, True or INDET

    @property
    def margin(self) -> float:
        """On-path lower bound minus deviation upper bound."""
        return self.onpath_value[0] - self.deviation_value[1]


def _feasibility(s, p, s_limit=None, tol=TOL):
    """(M) and (LL): returns None or (constraint, t) of the first failure."""
    s = np.asarray(s, dtype=float)
    p = np.asarray(p, dtype=float)
    bad = np.flatnonzero((s < -tol) | (s > 1.0 + tol))
    if bad.size:
        return "M", int(bad[0])
    bad = np.flatnonzero(np.diff(s) < -tol)
    if bad.size:
        return "M", int(bad[0]) + 1
    if s_limit is not None and (s_limit < s[-1] - tol or s_limit > 1.0 + tol):
        return "M", len(s) - 1
    bad = np.flatnonzero(p < -tol)
    if bad.size:
        return "LL", int(bad[0])
    return None


def _backward(flow, d, tail_lo, tail_hi):
    """Discounted sums V_t = flow_t + d V_{t+1} over the prefix, bracketed at the end.

    Returns arrays lo, hi of length len(flow) + 1; the last entry is the tail.
    """
    n = len(flow)
    lo = np.empty(n + 1)
    hi = np.empty(n + 1)
    lo[n], hi[n] = tail_lo, tail_hi
    for t in range(n - 1, -1, -1):
        lo[t] = flow[t] + d * lo[t + 1]
        hi[t] = flow[t] + d * hi[t + 1]
    return lo, hi


def continuation_values(env: PayoffEnv, path: ContractPath):
    """Brackets for principal values Pi_t, expert values W_t and surplus sums, t = 0..T+1."""
    d = env.delta
    s, p = path.s, path.p
    sT, sL = float(s[-1]), float(path.s_limit)
    pi_v = np.asarray(env.pi(s), dtype=float)
    w_v = np.asarray(env.w(s), dtype=float)
    # payments after T: the frontloaded total for the remaining move is an upper bound
    pay_tail = max(float(env.w(sT) - env.w(sL)), 0.0) / (1.0 - d)
    Pi = _backward(pi_v - p, d, env.pi(sT) / (1.0 - d) - pay_tail, env.pi(sL) / (1.0 - d))
    W = _backward(w_v + p, d, env.w(sL) / (1.0 - d), env.w(sT) / (1.0 - d) + pay_tail)
    S = _backward(pi_v + w_v, d, env.G(sT) / (1.0 - d), env.G(sL) / (1.0 - d))
    return Pi, W, S


def _judge(per_period, tol, extra_fail=None):
    if extra_fail is not None:
        return Verdict(VIOLATED, *extra_fail)
    first_indet = None
    for rec in per_period:
        for name, lo, hi in rec.intervals():
            if np.isnan(lo):
                continue
            if hi < -tol:
                return Verdict(VIOLATED, name, rec.t)
            if lo < -tol and first_indet is None:
                first_indet = rec.t
    if first_indet is not None:
        return Verdict(INDETERMINATE, t=first_indet)
    return Verdict(IMPLEMENTABLE)


def _min_slack(per_period):
    vals = [lo for rec in per_period for _, lo, _ in rec.intervals() if not np.isnan(lo)]
    return float(min(vals)) if vals else float("inf")


def resolved_horizon(env: PayoffEnv, path: ContractPath, tol: float = TOL) -> int:
    """Largest t whose slack brackets are narrower than ``tol``.

    The tail uncertainty at period t is discounted by delta^(T+1-t), so the
    brackets tighten geometrically as t moves away from the prefix end.
    """
    Pi, W, S = continuation_values(env, path)
    width = np.maximum.reduce([Pi[1] - Pi[0], W[1] - W[0], S[1] - S[0]])
    wide = np.flatnonzero(width > tol)
    if wide.size == 0:
        return path.T
    # expert slack at t looks one period ahead
    return min(max(int(wide[0]) - 2, 0), path.T)


def check_sic(env: PayoffEnv, path: ContractPath, tol: float = TOL,
              horizon: int | None = None) -> list[tuple[int, float, float]]:
    """Slack intervals of sum_{tau>=t} d^(tau-t) G(s_tau) - [pi(s_t) + w(s_{t-1})]/(1-d), t >= 1."""
    d = env.delta
    _, _, S = continuation_values(env, path)
    s = path.s
    last = path.T if horizon is None else min(horizon, path.T)
    out = []
    for t in range(1, last + 1):
        rhs = (env.pi(s[t]) + env.w(s[t - 1])) / (1.0 - d)
        out.append((t, float(S[0][t] - rhs), float(S[1][t] - rhs)))
    return out


def check_contract(env: PayoffEnv, path: ContractPath, tol: float = TOL,
                   horizon: int | None = None) -> ICReport:
    """Per-period slack of the principal, expert and surplus constraints.

    Periods 0..horizon are judged; by default the horizon is the resolved
    part of the prefix (all of it when the path is stationary after T).
    """
    d = env.delta
    s = path.s
    fail = _feasibility(s, path.p, path.s_limit, tol)
    Pi, W, S = continuation_values(env, path)
    last = resolved_horizon(env, path, tol) if horizon is None else min(horizon, path.T)
    recs = []
    for t in range(last + 1):
        dev_p = env.pi(s[t]) / (1.0 - d)
        dev_e = env.w(s[t]) / (1.0 - d)
        rec = PeriodSlack(t, float(Pi[0][t] - dev_p), float(Pi[1][t] - dev_p),
                          float(W[0][t + 1] - dev_e), float(W[1][t + 1] - dev_e))
        if t >= 1:
            rhs = (env.pi(s[t]) + env.w(s[t - 1])) / (1.0 - d)
            rec.sic_lo, rec.sic_hi = float(S[0][t] - rhs), float(S[1][t] - rhs)
        recs.append(rec)
    notes = []
    if last < path.T:
        notes.append(f"periods beyond {last} not resolved by the prefix")
    return ICReport(fail is None, recs, _min_slack(recs), _judge(recs, tol, fail), notes)


def simulate_deviation(env: PayoffEnv, path: ContractPath, player: str, t: int,
                       tol: float = TOL) -> DeviationResult:
    """Compare compliance with the one-shot default punished by the inactive equilibrium.

    A principal who defaults at t keeps pi(s_t) forever.  An expert who takes
    p_t and skips the training keeps w(s_t) forever from t+1.
    """
    if not (0 <= t <= path.T):
        raise ValueError(f"period {t} outside the prefix 0..{path.T}")
    d = env.delta
    Pi, W, _ = continuation_values(env, path)
    if player == PRINCIPAL:
        on = (float(Pi[0][t]), float(Pi[1][t]))
        dev = float(env.pi(path.s[t]) / (1.0 - d))
    elif player == EXPERT:
        on = (float(W[0][t + 1]), float(W[1][t + 1]))
        dev = float(env.w(path.s[t]) / (1.0 - d))
    else:
        raise ValueError(f"unknown player {player!r}")
    if dev <= on[0] + tol:
        profitable = False
    elif dev > on[1] + tol:
        profitable = True
    else:
        profitable = INDET
    return DeviationResult(player, t, on, (dev, dev), profitable)


def check_retirement_contract(envR: RetirementEnv, rc: RetirementContract,
                              tol: float = TOL) -> ICReport:
    """Exact finite-sum check of a K-period contract with retirement."""
    env, K, C = envR.base, envR.K, envR.C
    d = env.delta
    s = np.asarray(rc.s, dtype=float)
    p = np.asarray(rc.p, dtype=float)
    if s.shape != (K + 1,) or p.shape != (K,):
        raise ValueError(f"expected {K + 1} knowledge levels and {K} payments")
    fail = _feasibility(s, p, None, tol)
    pi_v = np.asarray(env.pi(s[:K]), dtype=float)
    w_v = np.asarray(env.w(s[:K]), dtype=float)
    cost_K = float(C(s[K]))
    Pi = np.zeros(K + 1)
    W = np.zeros(K + 1)
    Pi[K] = 0.0
    for t in range(K - 1, -1, -1):
        Pi[t] = pi_v[t] - p[t] + d * Pi[t + 1]
        W[t] = w_v[t] + p[t] + d * W[t + 1]
    recs = []
    nan = float("nan")
    for t in range(K):
        # the catch-up cost lands in the last period, K-1-t periods after t
        value = Pi[t] - d ** (K - 1 - t) * cost_K
        dev_p = (1.0 - d ** (K - t)) * pi_v[t] / (1.0 - d) - d ** (K - 1 - t) * float(C(s[t]))
        pic = float(value - dev_p)
        if t <= K - 2:
            eic = float(W[t + 1] - (1.0 - d ** (K - t - 1)) * w_v[t] / (1.0 - d))
        else:
            eic = nan   # the retiring expert has no future to protect
        recs.append(PeriodSlack(t, pic, pic, eic, eic))
    return ICReport(fail is None, recs, _min_slack(recs), _judge(recs, tol, fail))
