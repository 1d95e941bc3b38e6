"""Finite-horizon contract when the expert retires after K periods.

The terminal condition s_K = 1 turns the modified break-even recursion into
a two-point boundary problem in the knowledge gift s1.  ``solve_retirement``
shoots on s1: every grid value of s1 is propagated through the recursion at
once (vectorized bisection), transitions between "falls short of 1" and
"overshoots / infeasible" are bracketed and refined, and the largest root
wins because the optimal contract maximizes the gift.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import SolverConfig
from .errors import BadParams, NoContract, NoRoot
from .payoff_env import PayoffEnv, MonotoneFn

DEFAULT = SolverConfig()
INFEASIBLE = None  # marker returned by ``shoot`` in place of a terminal gap
ROOT_TOL = 1e-9


@dataclass(frozen=True)
class RetirementEnv:
    base: PayoffEnv
    K: int
    C: MonotoneFn

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 2:
            raise BadParams(f"horizon K must be an integer >= 2, got {self.K}")
        if abs(self.C(1.0)) > 1e-12:
            raise BadParams(f"catch-up cost must vanish at s=1, got C(1)={self.C(1.0)}")
        grid = np.linspace(0.0, 1.0, 10001)
        if np.any(np.diff(np.asarray(self.C(grid), dtype=float)) > 1e-12):
            raise BadParams("catch-up cost must be decreasing")

    def with_cost(self, C: MonotoneFn) -> "RetirementEnv":
        return RetirementEnv(self.base, self.K, C)


@dataclass
class RetirementContract:
    s: np.ndarray            # length K+1, s[K] = 1
    p: np.ndarray            # length K
    Pi0R: float
    s1_roots: list = field(default_factory=list)


def _coeffs(d, K, t):
    """Weights of the modified break-even condition at period t."""
    benefit = (d - d ** (K - t)) / (1.0 - d)
    cost = d ** (K - 1 - t)
    comp = (1.0 - d ** (K - t)) / (1.0 - d)
    return benefit, cost, comp


def _rbe_solve(envR: RetirementEnv, s_prev, s_curr, t, iters=200):
    """Vectorized solve of the modified break-even condition for s_{t+1}.

    Returns an array with NaN where no root exists in [s_curr, 1].
    """
    env, C = envR.base, envR.C
    s_prev = np.asarray(s_prev, dtype=float)
    s_curr = np.asarray(s_curr, dtype=float)
    a, b, c = _coeffs(env.delta, envR.K, t)
    pi_c, C_c = env.pi(s_curr), C(s_curr)
    rhs = c * (env.w(s_prev) - env.w(s_curr))

    def lhs(x):
        return a * (env.pi(x) - pi_c) + b * (C_c - C(x))

    ones = np.ones_like(s_curr)
    top = lhs(ones)
    out = np.where(rhs <= 0.0, s_curr, np.nan)
    todo = (rhs > 0.0) & (top >= rhs - 1e-12)
    out = np.where(todo & (top <= rhs), 1.0, out)
    todo &= top > rhs
    lo, hi = s_curr.copy(), ones.copy()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if not np.any(((mid > lo) & (mid < hi))[todo]):
            break
        go_right = lhs(mid) < rhs
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_right, hi, mid)
    # pick the bracket end with the smaller residual
    r_lo, r_hi = np.abs(lhs(lo) - rhs), np.abs(lhs(hi) - rhs)
    root = np.where(r_lo <= r_hi, lo, hi)
    return np.where(todo, root, out)


def rbe_step(envR: RetirementEnv, s_prev: float, s_curr: float, t: int) -> float:
    """Next knowledge level under the modified break-even condition at period t."""
    if not (1 <= t <= envR.K - 1):
        raise ValueError(f"period t={t} outside 1..K-1")
    x = float(_rbe_solve(envR, s_prev, s_curr, t))
    if np.isnan(x):
        raise NoRoot(f"period {t}: required training exceeds the remaining knowledge "
                     f"(s_prev={s_prev:.12g}, s_curr={s_curr:.12g})")
    return x


def _shoot_many(envR: RetirementEnv, s1: np.ndarray) -> np.ndarray:
    """Propagate every gift in ``s1``; returns an (n, K+1) array with NaN after failure."""
    s1 = np.asarray(s1, dtype=float)
    K = envR.K
    seq = np.full((s1.size, K + 1), np.nan)
    seq[:, 0] = envR.base.s0
    seq[:, 1] = s1
    for t in range(1, K):
        ok = ~np.isnan(seq[:, t])
        if not ok.any():
            break
        nxt = np.full(s1.size, np.nan)
        nxt[ok] = _rbe_solve(envR, seq[ok, t - 1], seq[ok, t], t)
        seq[:, t + 1] = nxt
    return seq


def shoot(envR: RetirementEnv, s1: float):
    """Run the recursion from (s0, s1).

    Returns ``(sequence, gap)`` where ``gap = 1 - s_K``, or
    ``(partial_sequence, INFEASIBLE)`` when some period has no root.
    """
    seq = [envR.base.s0, float(s1)]
    for t in range(1, envR.K):
        try:
            seq.append(rbe_step(envR, seq[t - 1], seq[t], t))
        except NoRoot:
            return seq, INFEASIBLE
    return seq, 1.0 - seq[-1]


def retirement_payments(envR: RetirementEnv, s) -> np.ndarray:
    """p0 = 0 and p_t = (1 - delta^(K-t)) [w(s_{t-1}) - w(s_t)] / (1 - delta)."""
    env, K, d = envR.base, envR.K, envR.base.delta
    s = np.asarray(s, dtype=float)
    wv = np.asarray(env.w(s[:K]), dtype=float)
    t = np.arange(1, K)
    p = np.zeros(K)
    p[1:] = (1.0 - d ** (K - t)) * (wv[:-1] - wv[1:]) / (1.0 - d)
    return p


def retirement_profit(envR: RetirementEnv, s1: float) -> float:
    """Time-0 profit on a binding path: pi(s0) + (d - d^K) pi(s1)/(1-d) - d^(K-1) C(s1)."""
    env, K, d = envR.base, envR.K, envR.base.delta
    return (env.pi(env.s0) + (d - d ** K) * env.pi(s1) / (1.0 - d)
            - d ** (K - 1) * envR.C(s1))


def _status(seq_row):
    """+1 if the path falls short of s_K = 1, 0 on an exact hit, -1 if it cannot be completed."""
    last = seq_row[-1]
    if np.isnan(last):
        return -1
    return 1 if last < 1.0 else 0


def solve_retirement(envR: RetirementEnv, cfg: SolverConfig = DEFAULT,
                     scan_points: int | None = None) -> RetirementContract:
    """Optimal contract with retirement by shooting on the knowledge gift."""
    n = scan_points or cfg.retire_scan_points
    if not np.any(np.asarray(envR.C(np.linspace(0.0, 1.0, 1001)), dtype=float) > 0.0):
        # the last-period condition has nothing on its left side
        raise NoContract("without a catch-up cost no gift reaches s_K = 1 by break-even")
    s0 = envR.base.s0
    grid = np.linspace(s0, 1.0, n)
    seqs = _shoot_many(envR, grid)
    status = np.array([_status(row) for row in seqs])

    # Gaps are never negative, so roots sit where "falls short" meets
    # "hits or cannot be completed".  Bisect every such transition on the
    # short/not-short predicate and keep the short end, which is a completed
    # path converging onto s_K = 1.
    short = status > 0
    roots = []
    for i in range(n - 1):
        if short[i] == short[i + 1]:
            continue
        lo, hi = float(grid[i]), float(grid[i + 1])
        lo_short = bool(short[i])
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if (_status(_shoot_many(envR, np.array([mid]))[0]) > 0) == lo_short:
                lo = mid
            else:
                hi = mid
        for cand in ((lo, hi) if lo_short else (hi, lo)):
            row = _shoot_many(envR, np.array([cand]))[0]
            if not np.isnan(row[-1]) and 1.0 - row[-1] <= ROOT_TOL:
                roots.append(cand)
                break
    if status[-1] == 0:
        roots.append(float(grid[-1]))
    roots = sorted(set(roots))
    if not roots:
        raise NoContract("no knowledge gift reaches s_K = 1 under modified break-even")
    s1 = roots[-1]
    s = _shoot_many(envR, np.array([s1]))[0]
    s[-1] = 1.0
    p = retirement_payments(envR, s)
    return RetirementContract(s, p, float(retirement_profit(envR, s1)), roots)


def cost_scaling_sweep(envR: RetirementEnv, lambdas, cfg: SolverConfig = DEFAULT,
                       scan_points: int | None = None) -> list[tuple[float, float, float]]:
    """Solve with the catch-up cost scaled by each lambda; rows (lambda, s1*, Pi0R)."""
    rows = []
    for lam in lambdas:
        if lam <= 0:
            raise BadParams(f"cost scale must be positive, got {lam}")
        rc = solve_retirement(envR.with_cost(envR.C.scaled(lam)), cfg, scan_points)
        rows.append((float(lam), float(rc.s[1]), rc.Pi0R))
    return rows
