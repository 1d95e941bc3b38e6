"""Profit-maximizing relational contract in the infinite-horizon model.

The optimal knowledge path is pinned down by three objects:

* the long-run level ``sbar_star``, the smallest maximizer of
  ``delta*pi(s) + w(s)``;
* the knowledge gift ``s1_star``, the period-0 training for which
  ``delta*pi(s1) + w(s0)`` equals that maximum;
* the break-even recursion ``delta*[pi(s_{t+1}) - pi(s_t)] = w(s_{t-1}) - w(s_t)``
  which propagates the path from ``(s0, s1_star)``.

Payments follow the frontloading rule: nothing in period 0, then the
present value of the expert's future stage-payoff loss from last period's
training.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .config import SolverConfig
from .errors import NoSolution, OutOfRange, TrivialContract
from .payoff_env import PayoffEnv, inverse_increasing

DEFAULT = SolverConfig()
_FD_STEP = 1e-5


@dataclass
class ContractPath:
    """Knowledge prefix ``s[0..T]`` with payments ``p[0..T]`` and the analytic limit."""

    s: np.ndarray
    s_limit: float
    p: np.ndarray
    truncated: bool = False

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        if self.s.shape != self.p.shape:
            raise ValueError("knowledge and payment sequences must have equal length")

    @property
    def T(self) -> int:
        return len(self.s) - 1


@dataclass
class OptimalContract:
    path: ContractPath
    sbar_star: float
    s1_star: float
    M_star: float
    Pi0: float
    W0: float
    trivial: bool


@dataclass(frozen=True)
class FrontierPoint:
    p0: float
    Pi0: float
    W0: float


def _refine_peak(f, a, b, lo_dom, hi_dom, iters=80):
    """Locate the leftmost local peak of f inside [a, b] by slope-sign bisection.

    The slope sign comes from a symmetric difference; a slope that is not
    clearly positive sends the search left, so flat stretches resolve to
    their left end.
    """
    lo, hi = a, b
    for _ in range(iters):
        x = 0.5 * (lo + hi)
        if x <= lo or x >= hi:
            break
        h = min(max(hi - lo, _FD_STEP), x - lo_dom, hi_dom - x)
        if h <= 0.0:
            hi = x
            continue
        fl, fr = f(x - h), f(x + h)
        noise = 4.0 * np.finfo(float).eps * max(1.0, abs(fl), abs(fr))
        if fr - fl > noise:
            lo = x
        else:
            hi = x
    x = 0.5 * (lo + hi)
    # the symmetric difference loses resolution next to the domain ends
    fx = f(x)
    noise = 4.0 * np.finfo(float).eps * max(1.0, abs(fx))
    if x - lo_dom < _FD_STEP and f(lo_dom) >= fx - noise:
        x = lo_dom
    elif hi_dom - x < _FD_STEP and f(hi_dom) >= fx - noise:
        x = hi_dom
    return x


def locate_smallest_max(f: Callable, lo: float, hi: float, n: int,
                        eps_val: float) -> tuple[float, float]:
    """Smallest maximizer of f on [lo, hi]: dense scan, then local refinement.

    Grid points within ``eps_val`` of the grid maximum count as ties; the
    leftmost contiguous run of tied points is refined to its peak.
    """
    grid = np.linspace(lo, hi, n)
    vals = np.asarray(f(grid), dtype=float)
    top = float(vals.max())
    band = vals >= top - eps_val
    i = int(np.argmax(band))
    j = i
    while j + 1 < n and band[j + 1]:
        j += 1
    a, b = grid[max(i - 1, 0)], grid[min(j + 1, n - 1)]
    x = _refine_peak(f, float(a), float(b), lo, hi)
    fx = float(f(x))
    if fx < vals[i] - eps_val:
        x, fx = float(grid[i]), float(vals[i])
    return x, max(fx, top)


def smallest_maximizer(env: PayoffEnv, cfg: SolverConfig = DEFAULT) -> tuple[float, float]:
    """Return (sbar_star, M_star) for the objective delta*pi(s) + w(s) on [s0, 1]."""
    d = env.delta

    def f(s):
        return d * env.pi(s) + env.w(s)

    return locate_smallest_max(f, env.s0, 1.0, cfg.scan_points, cfg.eps_val)


def knowledge_gift(env: PayoffEnv, sbar_star: float, M_star: float,
                   eps_root: float = DEFAULT.eps_root) -> float:
    """Largest period-0 training compatible with break-even: pi^-1((M* - w(s0)) / delta)."""
    if sbar_star <= env.s0:
        return env.s0
    y = (M_star - env.w(env.s0)) / env.delta
    try:
        s1 = inverse_increasing(env.pi, y, env.s0, 1.0, eps_root)
    except OutOfRange as exc:  # impossible for a valid maximizer
        raise RuntimeError(f"knowledge gift target out of range: {exc}") from exc
    return min(s1, sbar_star)


def be_step(env: PayoffEnv, s_prev: float, s_curr: float,
            eps_root: float = DEFAULT.eps_root) -> float:
    """Next knowledge level from the break-even condition."""
    y = env.pi(s_curr) + (env.w(s_prev) - env.w(s_curr)) / env.delta
    if y > env.pi(1.0) + eps_root:
        raise NoSolution(
            f"break-even needs pi(s)={y:.12g} above pi(1)={env.pi(1.0):.12g}")
    return inverse_increasing(env.pi, y, s_curr, 1.0, eps_root)


def limit_level(env: PayoffEnv, s1: float, cfg: SolverConfig = DEFAULT) -> float:
    """Smallest s >= s1 with delta*pi(s) + w(s) = delta*pi(s1) + w(s0).

    Summing the break-even condition over all periods shows that any
    convergent path from (s0, s1) has this limit.  When the level only
    touches the curve (the optimal gift), the touching point is the peak.
    """
    if s1 <= env.s0:
        return env.s0
    d = env.delta
    level = d * env.pi(s1) + env.w(env.s0)

    def f(s):
        return d * env.pi(s) + env.w(s)

    peak, top = locate_smallest_max(f, s1, 1.0, cfg.scan_points, cfg.eps_val)
    if abs(top - level) <= cfg.eps_val:
        return peak
    if top < level:
        raise NoSolution(
            f"gift s1={s1:.12g} exceeds what any limit level can sustain "
            f"(needs {level:.12g}, max {top:.12g})")
    grid = np.linspace(s1, 1.0, cfg.scan_points)
    k = int(np.argmax(f(grid) - level > 0))
    lo, hi = float(grid[k - 1]), float(grid[k])
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) - level > 0:
            hi = mid
        else:
            lo = mid
    return hi


def generate_sequence(env: PayoffEnv, s1: float, cfg: SolverConfig = DEFAULT) -> ContractPath:
    """Iterate break-even from (s0, s1) until steps fall below ``eps_step``."""
    if not (env.s0 <= s1 <= 1.0):
        raise ValueError(f"gift s1={s1} outside [s0, 1]")
    s = [env.s0, float(s1)]
    while s[-1] - s[-2] >= cfg.eps_step and len(s) - 1 < cfg.max_periods:
        try:
            s.append(be_step(env, s[-2], s[-1], cfg.eps_root))
        except NoSolution as exc:
            raise NoSolution(f"period {len(s)}: {exc}") from exc
    truncated = s[-1] - s[-2] >= cfg.eps_step
    s_limit = max(limit_level(env, s1, cfg), s[-1])
    return ContractPath(np.array(s), s_limit, np.zeros(len(s)), truncated)


def force_sequence(env: PayoffEnv, s1: float, max_periods: int = DEFAULT.max_periods,
                   eps_root: float = DEFAULT.eps_root) -> ContractPath:
    """Run break-even from (s0, s1) until it fails, then hold the last level forever.

    Used to build candidate paths from infeasible gifts for the verifier.
    """
    s = [env.s0, float(s1)]
    while len(s) - 1 < max_periods:
        try:
            nxt = be_step(env, s[-2], s[-1], eps_root)
        except NoSolution:
            break
        if nxt - s[-1] <= 0.0:
            break
        s.append(nxt)
    return frontload_payments(env, ContractPath(np.array(s), s[-1], np.zeros(len(s))))


def frontload_payments(env: PayoffEnv, path: ContractPath) -> ContractPath:
    """Attach p0 = 0 and p_t = [w(s_{t-1}) - w(s_t)] / (1 - delta)."""
    wv = np.asarray(env.w(path.s), dtype=float)
    p = np.zeros_like(path.s)
    p[1:] = (wv[:-1] - wv[1:]) / (1.0 - env.delta)
    return replace(path, p=p)


def solve_optimal(env: PayoffEnv, cfg: SolverConfig = DEFAULT) -> OptimalContract:
    sbar, M = smallest_maximizer(env, cfg)
    trivial = sbar <= env.s0
    s1 = env.s0 if trivial else knowledge_gift(env, sbar, M, cfg.eps_root)
    path = frontload_payments(env, generate_sequence(env, s1, cfg))
    d = env.delta
    Pi0 = env.pi(env.s0) + d * env.pi(s1) / (1.0 - d)
    W0 = env.w(env.s0) / (1.0 - d)
    return OptimalContract(path, float(sbar), float(s1), float(M), float(Pi0),
                           float(W0), bool(trivial))


def delta_thresholds(env_at: Callable[[float], PayoffEnv], tol: float = 1e-9,
                     cfg: SolverConfig = DEFAULT, edge: float = 1e-6) -> tuple[float, float]:
    """Discount-factor cutoffs for a nontrivial contract and for full long-run transfer.

    Returns (delta_low, delta_high) with delta_low the supremum of discount
    factors giving the trivial contract and delta_high the infimum of those
    giving sbar_star = 1.  Empty sets map to 0 and 1 respectively.  The
    indicators are probed on [edge, 1 - edge]; closer to the ends the argmax
    cannot be told apart from the boundary in double precision.
    """
    cache: dict[float, float] = {}

    def sbar(d):
        if d not in cache:
            cache[d] = smallest_maximizer(env_at(d), cfg)[0]
        return cache[d]

    s0 = env_at(0.5).s0
    edge_lo, edge_hi = edge, 1.0 - edge

    def cutoff(flag, empty_value):
        # flag is monotone in delta: False below the cutoff, True above
        if flag(edge_lo):
            return 0.0
        if not flag(edge_hi):
            return empty_value
        lo, hi = edge_lo, edge_hi
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if flag(mid):
                hi = mid
            else:
                lo = mid
        return 0.5 * (lo + hi)

    delta_low = cutoff(lambda d: sbar(d) > s0, 1.0)
    delta_high = cutoff(lambda d: sbar(d) >= 1.0, 1.0)
    return delta_low, delta_high


def patience_limit_gift(env: PayoffEnv) -> float:
    """Limit of the knowledge gift as delta -> 1: pi^-1(pi(1) + w(1) - w(s0))."""
    y = env.pi(1.0) + env.w(1.0) - env.w(env.s0)
    return inverse_increasing(env.pi, y, env.s0, 1.0)


def pareto_frontier(env: PayoffEnv, opt: OptimalContract, n_points: int = 101) -> list[FrontierPoint]:
    """Pareto-efficient (p0, Pi0, W0) triples on the optimal knowledge path.

    Only the period-0 payment moves; it ranges over
    [0, delta*(pi(s1*) - pi(s0)) / (1 - delta)].
    """
    if opt.trivial:
        raise TrivialContract("the trivial contract has a single-point frontier")
    if n_points < 1:
        raise ValueError("n_points must be positive")
    d = env.delta
    p0_max = d * (env.pi(opt.s1_star) - env.pi(env.s0)) / (1.0 - d)
    p0s = [0.0] if n_points == 1 else np.linspace(0.0, p0_max, n_points)
    return [FrontierPoint(float(p0), opt.Pi0 - float(p0), opt.W0 + float(p0)) for p0 in p0s]
