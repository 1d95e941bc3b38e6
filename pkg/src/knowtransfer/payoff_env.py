"""Stage-payoff environments.

An environment bundles the principal's stage payoff ``pi``, the expert's
stage payoff ``w`` and the novice's stage payoff ``v`` (all functions of the
novice's knowledge level ``s`` in [0, 1]) with a common discount factor.

Functions come from a few closed parametric families so that an environment
can be written down in a config file and evaluated deterministically.  All
families evaluate both Python floats and numpy arrays; the scalar path is
kept cheap because the break-even recursion calls it millions of times.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import AssumptionViolated, BadDelta, BadParams, OutOfRange

EPS_MONO = 1e-12
EPS_ROOT = 1e-12
BISECT_CAP = 200
N_GRID = 10001

INCREASING = "increasing"
DECREASING = "decreasing"


class MonotoneFn:
    """Base class for the admissible payoff-function families."""

    family: str = ""
    direction: str = INCREASING

    def __call__(self, s):
        raise NotImplementedError

    def scaled(self, lam: float) -> "MonotoneFn":
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Polynomial(MonotoneFn):
    """Polynomial with coefficients in ascending powers."""

    coeffs: tuple
    direction: str = INCREASING
    family: str = field(default="polynomial", init=False)

    def __post_init__(self):
        if len(self.coeffs) == 0:
            raise BadParams("polynomial needs at least one coefficient")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    def __call__(self, s):
        c = self.coeffs
        acc = c[-1]
        for k in range(len(c) - 2, -1, -1):
            acc = acc * s + c[k]
        if isinstance(s, np.ndarray) and len(c) == 1:
            return np.full_like(s, acc, dtype=float)
        return acc

    def scaled(self, lam):
        return Polynomial(tuple(lam * c for c in self.coeffs), self.direction)

    def describe(self):
        return {"family": "polynomial", "coeffs": list(self.coeffs)}


@dataclass(frozen=True)
class Affine(MonotoneFn):
    intercept: float
    slope: float
    direction: str = INCREASING
    family: str = field(default="affine", init=False)

    def __call__(self, s):
        return self.intercept + self.slope * s

    def scaled(self, lam):
        return Affine(lam * self.intercept, lam * self.slope, self.direction)

    def describe(self):
        return {"family": "affine", "intercept": self.intercept, "slope": self.slope}


@dataclass(frozen=True)
class Table(MonotoneFn):
    """Piecewise-linear interpolation through strictly monotone breakpoints.

    Breakpoints must start at 0 and end at 1.
    """

    xs: tuple
    ys: tuple
    direction: str = INCREASING
    family: str = field(default="table", init=False)

    def __post_init__(self):
        xs = tuple(float(x) for x in self.xs)
        ys = tuple(float(y) for y in self.ys)
        if len(xs) < 2 or len(xs) != len(ys):
            raise BadParams("table needs matching x/y lists with at least two points")
        if xs[0] != 0.0 or xs[-1] != 1.0:
            raise BadParams("table breakpoints must span [0, 1]")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise BadParams("table x values must be strictly increasing")
        sign = 1.0 if self.direction == INCREASING else -1.0
        if any(sign * (b - a) <= 0 for a, b in zip(ys, ys[1:])):
            raise BadParams(f"table y values must be strictly {self.direction}")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    def __call__(self, s):
        if isinstance(s, np.ndarray):
            return np.interp(s, self.xs, self.ys)
        xs, ys = self.xs, self.ys
        i = min(max(bisect.bisect_right(xs, s) - 1, 0), len(xs) - 2)
        frac = (s - xs[i]) / (xs[i + 1] - xs[i])
        return ys[i] + frac * (ys[i + 1] - ys[i])

    def scaled(self, lam):
        return Table(self.xs, tuple(lam * y for y in self.ys), self.direction)

    def describe(self):
        return {"family": "table", "x": list(self.xs), "y": list(self.ys)}


# --- microfounded closed forms -------------------------------------------

def _appr_k(p, q):
    return 1.0 / (q - p)


def apprenticeship_pi(s, p, q):
    return _appr_k(p, q) * q / 16.0 * (s * s + 2.0 * s + 9.0)


def apprenticeship_w(s, p, q):
    return _appr_k(p, q) * p / 32.0 * (3.0 - s) ** 2


def apprenticeship_v(s, p, q):
    return _appr_k(p, q) * p / 32.0 * (1.0 + s) ** 2


def apprenticeship_shares(s):
    """Optimal task shares (expert, novice) under K(q - p) = 1, g(s) = (1+s)/2."""
    return (3.0 - s) / 4.0, (1.0 + s) / 4.0


def cournot_equilibrium(s, A, beta):
    """Stage-game Cournot quantities of the foreign and local firm."""
    q1 = (A - beta + (1.0 - s)) / 3.0
    q2 = (A - beta - 2.0 * (1.0 - s)) / 3.0
    return q1, q2


def cournot_tax(s, A, beta):
    return beta * (2.0 * (A - beta) - (1.0 - s)) / 3.0


def cournot_cs(s, A, beta):
    return 0.5 * ((2.0 * (A - beta) - (1.0 - s)) / 3.0) ** 2


def cournot_w(s, A, beta):
    return ((A - beta + (1.0 - s)) / 3.0) ** 2


def cournot_v(s, A, beta):
    return ((A - beta - 2.0 * (1.0 - s)) / 3.0) ** 2


def cournot_pi(s, A, beta):
    return cournot_tax(s, A, beta) + cournot_cs(s, A, beta)


def bertrand_prices(s, A):
    return (5.0 * A + 2.0 * (1.0 - s)) / 15.0, (5.0 * A - 7.0 * (1.0 - s)) / 15.0


def bertrand_tax(s, A, gamma):
    a = 5.0 * A + 2.0 * (1.0 - s)
    b = 5.0 * A - 7.0 * (1.0 - s)
    return 2.0 * gamma * (a * a + b * b) / 225.0


def bertrand_cs(s, A, gamma):
    u = 1.0 - s
    return (100.0 * A * A - 100.0 * A * u + 52.0 * u * u) / 225.0


def bertrand_w(s, A, gamma):
    return 2.0 * (1.0 - gamma) * (5.0 * A + 2.0 * (1.0 - s)) ** 2 / 225.0


def bertrand_v(s, A, gamma):
    return 2.0 * (1.0 - gamma) * (5.0 * A - 7.0 * (1.0 - s)) ** 2 / 225.0


def bertrand_pi(s, A, gamma):
    return bertrand_tax(s, A, gamma) + bertrand_cs(s, A, gamma)


COMPOSITES: dict[str, Callable] = {
    "apprenticeship_pi": apprenticeship_pi,
    "apprenticeship_w": apprenticeship_w,
    "apprenticeship_v": apprenticeship_v,
    "cournot_pi": cournot_pi,
    "cournot_w": cournot_w,
    "cournot_v": cournot_v,
    "bertrand_pi": bertrand_pi,
    "bertrand_w": bertrand_w,
    "bertrand_v": bertrand_v,
}


@dataclass(frozen=True)
class Composite(MonotoneFn):
    """A named microfoundation closed form with keyword parameters."""

    name: str
    params: tuple  # sorted (key, value) pairs, kept hashable
    direction: str = INCREASING
    scale: float = 1.0
    family: str = field(default="composite", init=False)

    def __post_init__(self):
        if self.name not in COMPOSITES:
            raise BadParams(f"unknown closed form {self.name!r}")
        if isinstance(self.params, dict):
            object.__setattr__(self, "params", tuple(sorted(self.params.items())))
        object.__setattr__(self, "_fn", COMPOSITES[self.name])
        object.__setattr__(self, "_kw", dict(self.params))

    def __call__(self, s):
        return self.scale * self._fn(s, **self._kw)

    def scaled(self, lam):
        return Composite(self.name, self.params, self.direction, self.scale * lam)

    def describe(self):
        return {"family": "composite", "name": self.name, "params": dict(self.params),
                "scale": self.scale}


# --- environment ----------------------------------------------------------

@dataclass(frozen=True)
class PayoffEnv:
    pi: MonotoneFn
    w: MonotoneFn
    v: MonotoneFn
    delta: float
    s0: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.delta < 1.0):
            raise BadDelta(f"discount factor must lie in (0, 1), got {self.delta}")
        if not (0.0 <= self.s0 < 1.0):
            raise BadParams(f"initial knowledge must lie in [0, 1), got {self.s0}")

    def G(self, s):
        """Bilateral principal-expert surplus pi + w."""
        return self.pi(s) + self.w(s)

    def with_delta(self, delta: float) -> "PayoffEnv":
        return replace(self, delta=delta)


@dataclass(frozen=True)
class Violation:
    constraint: str
    pair: tuple
    values: tuple


@dataclass
class ValidationReport:
    passed: bool
    violations: list = field(default_factory=list)


def validate_assumption_one(env: PayoffEnv, n_grid: int = N_GRID,
                            eps_mono: float = EPS_MONO) -> ValidationReport:
    """Check strict monotonicity of pi (up), w (down), v (up) and G (up).

    Adjacent differences on an equally spaced grid must exceed ``eps_mono``
    in the declared direction.  Only the first offending pair per function is
    recorded.
    """
    if n_grid < 2:
        raise ValueError("n_grid must be at least 2")
    grid = np.linspace(0.0, 1.0, n_grid)
    checks = [("pi", env.pi, 1.0), ("w", env.w, -1.0), ("v", env.v, 1.0),
              ("G", env.G, 1.0)]
    violations = []
    for name, fn, sign in checks:
        vals = np.asarray(fn(grid), dtype=float)
        bad = np.flatnonzero(sign * np.diff(vals) <= eps_mono)
        if bad.size:
            i = int(bad[0])
            violations.append(Violation(name, (float(grid[i]), float(grid[i + 1])),
                                        (float(vals[i]), float(vals[i + 1]))))
    return ValidationReport(passed=not violations, violations=violations)


def make_env(pi: MonotoneFn, w: MonotoneFn, v: MonotoneFn, delta: float,
             s0: float = 0.0, n_grid: int = N_GRID) -> PayoffEnv:
    """Build an environment and refuse it unless the monotonicity checks pass on the grid."""
    env = PayoffEnv(pi, w, v, float(delta), float(s0))
    report = validate_assumption_one(env, n_grid)
    if not report.passed:
        first = report.violations[0]
        raise AssumptionViolated(
            f"{first.constraint} fails its monotonicity requirement between "
            f"s={first.pair[0]:.6g} and s={first.pair[1]:.6g} "
            f"(values {first.values[0]:.12g}, {first.values[1]:.12g})")
    return env


def make_polynomial_env(pi_coeffs: Sequence[float], w_coeffs: Sequence[float],
                        v_coeffs: Sequence[float], delta: float) -> PayoffEnv:
    if not (0.0 < delta < 1.0):
        raise BadDelta(f"discount factor must lie in (0, 1), got {delta}")
    return make_env(Polynomial(tuple(pi_coeffs), INCREASING),
                    Polynomial(tuple(w_coeffs), DECREASING),
                    Polynomial(tuple(v_coeffs), INCREASING), delta)


def make_apprenticeship_env(p: float, q: float, delta: float) -> PayoffEnv:
    """Task-assignment microfoundation with K(q - p) = 1."""
    if not (q > 2 * p > 0):
        raise BadParams(f"apprenticeship requires q > 2p > 0, got p={p}, q={q}")
    kw = {"p": float(p), "q": float(q)}
    return make_env(Composite("apprenticeship_pi", kw, INCREASING),
                    Composite("apprenticeship_w", kw, DECREASING),
                    Composite("apprenticeship_v", kw, INCREASING), delta)


def make_cournot_env(A: float, beta: float, delta: float) -> PayoffEnv:
    """Homogeneous-product Cournot duopoly with a marginal-cost shifter."""
    if A < 2 + beta:
        raise BadParams(f"Cournot requires A >= 2 + beta, got A={A}, beta={beta}")
    if beta < 1:
        raise BadParams(f"Cournot requires beta >= 1, got beta={beta}")
    kw = {"A": float(A), "beta": float(beta)}
    return make_env(Composite("cournot_pi", kw, INCREASING),
                    Composite("cournot_w", kw, DECREASING),
                    Composite("cournot_v", kw, INCREASING), delta)


def make_bertrand_env(A: float, gamma: float, delta: float) -> PayoffEnv:
    """Differentiated-product Bertrand duopoly with a demand shifter."""
    if A < 2:
        raise BadParams(f"Bertrand requires A >= 2, got A={A}")
    if not (0 <= gamma < 1):
        raise BadParams(f"Bertrand requires gamma in [0, 1), got gamma={gamma}")
    kw = {"A": float(A), "gamma": float(gamma)}
    return make_env(Composite("bertrand_pi", kw, INCREASING),
                    Composite("bertrand_w", kw, DECREASING),
                    Composite("bertrand_v", kw, INCREASING), delta)


def inverse_increasing(f: Callable[[float], float], y: float, lo: float = 0.0,
                       hi: float = 1.0, eps: float = EPS_ROOT,
                       max_iter: int = BISECT_CAP) -> float:
    """Solve f(s) = y for strictly increasing f on [lo, hi] by bisection.

    Raises OutOfRange when y lies outside [f(lo), f(hi)] by more than eps.
    Bisection runs to machine resolution (or ``max_iter``); the endpoint with
    the smaller residual is returned.
    """
    flo, fhi = f(lo), f(hi)
    if y < flo - eps or y > fhi + eps:
        raise OutOfRange(f"value {y:.12g} outside [{flo:.12g}, {fhi:.12g}]")
    if y <= flo:
        return lo
    if y >= fhi:
        return hi
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = f(mid)
        if fm < y:
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    return lo if abs(flo - y) <= abs(fhi - y) else hi


def inverse_pi(env: PayoffEnv, y: float, eps_root: float = EPS_ROOT) -> float:
    return inverse_increasing(env.pi, y, 0.0, 1.0, eps_root)

