"""Brute-force search over grid contracts on small instances.

Every nondecreasing sequence of grid levels is enumerated, paired with the
frontloaded payments it implies, and checked against the incentive
constraints directly.  The search shares no code with the solvers beyond
payoff evaluation, which is what makes it useful as ground truth.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import CapExceeded
from .payoff_env import PayoffEnv
from .retirement import RetirementEnv

CAP = 5_000_000
CHUNK = 200_000
PASS_TOL = 1e-10   # slack tolerance for exact binding on grid points
STATIONARY = "stationary"
FULL = "full"


@dataclass(frozen=True)
class GridSpec:
    m: int   # knowledge levels 0, h, ..., 1 with h = 1/(m-1)
    T: int   # enumerated periods

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise ValueError(f"grid needs m >= 2 levels, got {self.m}")
        if int(self.T) != self.T or self.T < 1:
            raise ValueError(f"horizon T must be >= 1, got {self.T}")

    @property
    def h(self) -> float:
        return 1.0 / (self.m - 1)

    @property
    def levels(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.m)

    def count(self) -> int:
        """Number of nondecreasing length-T sequences over m levels."""
        return comb(self.T + self.m - 1, self.T)


def _chunks(m, T):
    """Index arrays of every nondecreasing sequence, in lexicographic order."""
    it = itertools.combinations_with_replacement(range(m), T)
    while True:
        block = list(itertools.islice(it, CHUNK))
        if not block:
            return
        yield np.array(block, dtype=np.int64).reshape(len(block), T)


def _check_cap(grid: GridSpec, cap: int):
    n = grid.count()
    if n > cap:
        raise CapExceeded(f"{n} sequences for m={grid.m}, T={grid.T} exceed the cap {cap}")


def _levels_from(env_s0, grid):
    lv = grid.levels
    # the path starts at s0, so only levels at or above it are reachable
    return lv[lv >= env_s0 - 1e-15]


def enumerate_envelope(env: PayoffEnv, grid: GridSpec, cap: int = CAP,
                       tol: float = PASS_TOL, tail: str = STATIONARY) -> np.ndarray:
    """Per-period maximum of s_t over grid paths passing the surplus constraint.

    The constraint is sum_{tau>=t} d^(tau-t) G(s_tau) >= [pi(s_t) + w(s_{t-1})]/(1-d)
    for t=1..T, with the tail after T summed in closed form.  With
    ``tail="stationary"`` each path is held at s_T forever.  At t=T this
    forces s_{T-1} = s_T, and the same argument runs backward, so only the
    constant path survives.  ``tail="full"`` jumps to s=1 after T instead.
    That bounds every real continuation from above, so any implementable
    path's prefix passes, but it also admits prefixes that no infinite
    path can complete.  Returns an array of length T (index 0 is period 1).
    """
    if tail not in (STATIONARY, FULL):
        raise ValueError(f"unknown tail convention {tail!r}")
    _check_cap(grid, cap)
    d, T = env.delta, grid.T
    lv = _levels_from(env.s0, grid)
    G_lv = np.asarray(env.G(lv), dtype=float)
    pi_lv = np.asarray(env.pi(lv), dtype=float)
    w_lv = np.asarray(env.w(lv), dtype=float)
    w0 = float(env.w(env.s0))
    env_max = np.full(T, -np.inf)
    for idx in _chunks(len(lv), T):
        G = G_lv[idx]
        # suffix sums of discounted surplus, tail at s_T
        if tail == STATIONARY:
            acc = G[:, -1] / (1.0 - d)
        else:
            acc = np.full(len(idx), float(env.G(1.0)) / (1.0 - d))
        ok = np.ones(len(idx), dtype=bool)
        for t in range(T - 1, -1, -1):
            acc = G[:, t] + d * acc
            prev_w = w_lv[idx[:, t - 1]] if t > 0 else w0
            rhs = (pi_lv[idx[:, t]] + prev_w) / (1.0 - d)
            ok &= acc - rhs >= -tol
        if ok.any():
            env_max = np.maximum(env_max, lv[idx[ok]].max(axis=0))
    # the constant path at s0 always passes
    return np.maximum(env_max, env.s0)


def oracle_retirement(envR: RetirementEnv, grid: GridSpec, cap: int = CAP,
                      tol: float = PASS_TOL) -> tuple[float, np.ndarray]:
    """Best raw profit over grid contracts of length K and the sequence achieving it.

    Sequences (s_1..s_K) are nondecreasing grid levels with s_K free; the
    catch-up cost C(s_K) is charged in the last period.  Payments follow
    p_t = (1 - d^(K-t)) [w(s_{t-1}) - w(s_t)] / (1 - d).  Ties go to the
    lexicographically smallest sequence.
    """
    env, K, C = envR.base, envR.K, envR.C
    if grid.T != K:
        raise ValueError(f"grid horizon {grid.T} must equal K={K}")
    _check_cap(grid, cap)
    d, s0 = env.delta, env.s0
    lv = _levels_from(s0, grid)
    pi_lv = np.asarray(env.pi(lv), dtype=float)
    w_lv = np.asarray(env.w(lv), dtype=float)
    C_lv = np.asarray(C(lv), dtype=float)
    pi0, w0, C0 = float(env.pi(s0)), float(env.w(s0)), float(C(s0))
    t_idx = np.arange(1, K)
    scale = (1.0 - d ** (K - t_idx)) / (1.0 - d)
    best, best_seq = -np.inf, None
    for idx in _chunks(len(lv), K):
        n = len(idx)
        # periods 0..K-1 and the terminal level K
        pi_t = np.column_stack([np.full(n, pi0), pi_lv[idx[:, :K - 1]]])
        w_t = np.column_stack([np.full(n, w0), w_lv[idx[:, :K - 1]]])
        C_t = np.column_stack([np.full(n, C0), C_lv[idx[:, :K - 1]]])
        cost_K = C_lv[idx[:, -1]]
        p = np.zeros((n, K))
        p[:, 1:] = scale * (w_t[:, :-1] - w_t[:, 1:])
        ok = np.ones(n, dtype=bool)
        Pi = np.zeros(n)
        W = np.zeros(n)
        for t in range(K - 1, -1, -1):
            if t <= K - 2:
                # W currently holds the expert's value from t+1
                ok &= W - (1.0 - d ** (K - t - 1)) * w_t[:, t] / (1.0 - d) >= -tol
            Pi = pi_t[:, t] - p[:, t] + d * Pi
            W = w_t[:, t] + p[:, t] + d * W
            value = Pi - d ** (K - 1 - t) * cost_K
            dev = (1.0 - d ** (K - t)) * pi_t[:, t] / (1.0 - d) - d ** (K - 1 - t) * C_t[:, t]
            ok &= value - dev >= -tol
        profit = Pi - d ** (K - 1) * cost_K
        profit = np.where(ok, profit, -np.inf)
        i = int(np.argmax(profit))
        if profit[i] > best:
            best, best_seq = float(profit[i]), np.concatenate([[s0], lv[idx[i]]])
    if best_seq is None:
        # the constant path at s0 binds every constraint, so this cannot happen
        raise RuntimeError("no grid contract passed the constraints")
    return best, best_seq
