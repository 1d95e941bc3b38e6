import time

import mpmath
import numpy as np
import pytest

from knowtransfer.baseline import (ContractPath, be_step, delta_thresholds, frontload_payments,
                                   generate_sequence, knowledge_gift, locate_smallest_max,
                                   pareto_frontier, patience_limit_gift, smallest_maximizer,
                                   solve_optimal)
from knowtransfer.config import SolverConfig
from knowtransfer.errors import NoSolution, TrivialContract
from knowtransfer.payoff_env import make_cournot_env, make_polynomial_env

from conftest import bench_env, linear_env


def bench_oracle(n, delta=mpmath.mpf("0.8")):
    """First n+1 knowledge levels from the break-even recursion in 50-digit arithmetic.

    With pi(s) = s the recursion is explicit: s_{t+1} = s_t + 0.5 (s_t^2 - s_{t-1}^2) / delta,
    and the peak of delta*s + 0.6 - 0.5 s^2 sits at s = delta.
    """
    mpmath.mp.dps = 50
    M = delta * delta + mpmath.mpf("0.6") - delta * delta / 2
    s = [mpmath.mpf(0), (M - mpmath.mpf("0.6")) / delta]
    while len(s) <= n:
        s.append(s[-1] + (s[-1] ** 2 - s[-2] ** 2) / (2 * delta))
    return [float(x) for x in s], float(M)


def test_bench_argmax(env):
    sbar, M = smallest_maximizer(env)
    assert abs(sbar - 0.8) <= 1e-9
    assert abs(M - 0.92) <= 1e-11


def test_strictly_decreasing_objective_gives_zero():
    sbar, M = smallest_maximizer(linear_env(0.2))
    assert sbar == 0.0 and M == pytest.approx(0.6, abs=1e-15)


def test_plateau_resolves_left():
    env = make_polynomial_env([0, 1], [0.6, -0.5], [0, 1], 0.5)
    sbar, M = smallest_maximizer(env)
    assert sbar == 0.0 and M == pytest.approx(0.6, abs=1e-12)


def test_locate_smallest_max_two_peaks():
    # equal peaks at 0.25 and 0.75: the left one wins
    f = lambda x: -np.minimum((x - 0.25) ** 2, (x - 0.75) ** 2)
    x, fx = locate_smallest_max(f, 0.0, 1.0, 1001, 1e-11)
    assert abs(x - 0.25) <= 1e-9 and fx == pytest.approx(0.0, abs=1e-15)


def test_knowledge_gift(env):
    assert abs(knowledge_gift(env, 0.8, 0.92) - 0.4) <= 1e-12
    assert knowledge_gift(env, 0.0, 0.6) == 0.0
    # pi = s, w = 0.6 - 0.3 s, delta = 0.4: peak at 1 with value 0.7
    assert abs(knowledge_gift(linear_env(0.4), 1.0, 0.7) - 0.25) <= 1e-12


def test_be_step(env):
    assert abs(be_step(env, 0.0, 0.4) - 0.5) <= 1e-12
    assert abs(be_step(env, 0.4, 0.5) - 0.55625) <= 1e-12
    for x in (0.0, 0.3, 0.9):
        assert be_step(env, x, x) == x
    with pytest.raises(NoSolution):
        be_step(env, 0.0, 0.95)


def test_generate_sequence_matches_high_precision(env):
    ref, _ = bench_oracle(60)
    path = generate_sequence(env, 0.4)
    assert np.max(np.abs(path.s[:61] - ref)) <= 1e-9
    assert path.s_limit == pytest.approx(0.8, abs=1e-9)
    assert path.truncated and path.T == 10000


def test_generate_sequence_constant(env):
    path = generate_sequence(env, 0.0)
    assert list(path.s) == [0.0, 0.0] and path.s_limit == 0.0 and not path.truncated


def test_generate_sequence_infeasible_gift(env):
    with pytest.raises(NoSolution):
        generate_sequence(env, 0.75)


def test_frontload_payments(opt):
    p = opt.path.p
    assert p[0] == 0.0
    assert abs(p[1] - (0.6 - 0.52) / 0.2) <= 1e-12
    assert abs(p[2] - (0.52 - 0.475) / 0.2) <= 1e-12
    flat = frontload_payments(bench_env(), ContractPath(np.full(4, 0.3), 0.3, np.zeros(4)))
    assert np.all(flat.p == 0.0)


def test_solve_optimal_bench(opt):
    ref, M = bench_oracle(3)
    assert abs(opt.s1_star - 0.4) <= 1e-9
    assert np.max(np.abs(opt.path.s[:4] - ref)) <= 1e-9
    assert abs(opt.Pi0 - 1.6) <= 1e-9 and abs(opt.W0 - 3.0) <= 1e-12
    assert abs(opt.M_star - M) <= 1e-11 and not opt.trivial


def test_solve_optimal_runtime(env):
    t0 = time.perf_counter()
    solve_optimal(env)
    assert time.perf_counter() - t0 < 1.0


def test_trivial_contract():
    opt = solve_optimal(linear_env(0.2))
    assert opt.trivial and opt.s1_star == 0.0 and opt.Pi0 == 0.0
    assert np.all(opt.path.s == 0.0) and np.all(opt.path.p == 0.0)
    with pytest.raises(TrivialContract):
        pareto_frontier(linear_env(0.2), opt)


def test_cournot_limit_matches_argmax():
    env = make_cournot_env(4, 1, 0.9)
    opt = solve_optimal(env)
    assert abs(opt.path.s_limit - opt.sbar_star) <= 1e-9


def test_delta_thresholds():
    lo, hi = delta_thresholds(linear_env)
    assert abs(lo - 0.3) <= 1e-6 and abs(hi - 0.3) <= 1e-6
    lo, hi = delta_thresholds(bench_env)
    assert lo == 0.0 and hi == 1.0


def test_sbar_monotone_in_delta():
    assert smallest_maximizer(bench_env(0.9))[0] >= smallest_maximizer(bench_env(0.8))[0]


def test_patience_limit_gift():
    assert abs(patience_limit_gift(bench_env()) - 0.5) <= 1e-12
    assert abs(patience_limit_gift(linear_env(0.5)) - 0.7) <= 1e-12
    assert patience_limit_gift(linear_env(0.5)) > 0.0


def test_pareto_frontier(env, opt):
    pts = pareto_frontier(env, opt, 101)
    assert len(pts) == 101
    assert (pts[0].p0, pts[0].Pi0, pts[0].W0) == pytest.approx((0, 1.6, 3.0), abs=1e-9)
    assert (pts[-1].p0, pts[-1].Pi0, pts[-1].W0) == pytest.approx((1.6, 0, 4.6), abs=1e-9)
    tot = np.array([q.Pi0 + q.W0 for q in pts])
    assert tot.max() - tot.min() <= 1e-9
    one = pareto_frontier(env, opt, 1)
    assert len(one) == 1 and one[0].p0 == 0.0 and one[0].Pi0 == opt.Pi0


def test_config_overrides_apply(env):
    opt = solve_optimal(env, SolverConfig(max_periods=50))
    assert opt.path.T == 50 and opt.path.truncated
