import numpy as np
import pytest

from knowtransfer.errors import CapExceeded
from knowtransfer.oracle import FULL, GridSpec, enumerate_envelope, oracle_retirement
from knowtransfer.payoff_env import DECREASING, Polynomial
from knowtransfer.retirement import RetirementEnv

from conftest import cost, linear_env


def test_gridspec():
    g = GridSpec(21, 4)
    assert g.h == pytest.approx(0.05) and g.count() == 10626
    with pytest.raises(ValueError):
        GridSpec(1, 4)
    with pytest.raises(ValueError):
        GridSpec(5, 0)


def test_envelope_dominance(env, opt):
    h = 0.05
    e = enumerate_envelope(env, GridSpec(21, 4))
    assert np.all(e <= opt.path.s[1:5] + h)


def test_stationary_tail_admits_only_constant_path(env):
    # holding s_T forever makes the surplus constraint at T demand s_{T-1} = s_T,
    # and the same argument runs back to period 1
    assert np.all(enumerate_envelope(env, GridSpec(21, 4)) == 0.0)


def test_full_tail_envelope(env, opt):
    e = enumerate_envelope(env, GridSpec(21, 4), tail=FULL)
    assert e == pytest.approx([0.4, 0.5, 0.55, 0.6], abs=1e-12)
    assert np.all(e <= opt.path.s[1:5] + 0.05)


def test_trivial_env_envelope():
    e = enumerate_envelope(linear_env(0.2), GridSpec(21, 4))
    assert np.all(e == 0.0)
    # the full-knowledge tail is only a relaxation: it admits prefixes here
    # that no infinite path could complete
    assert np.any(enumerate_envelope(linear_env(0.2), GridSpec(11, 3), tail=FULL) > 0.0)


@pytest.mark.parametrize("tail", ["stationary", FULL])
def test_refinement(env, tail):
    coarse = enumerate_envelope(env, GridSpec(21, 4), tail=tail)
    fine = enumerate_envelope(env, GridSpec(41, 4), tail=tail)
    assert np.all(fine >= coarse - 0.05)


def test_envelope_deterministic(env):
    a = enumerate_envelope(env, GridSpec(21, 3), tail=FULL)
    b = enumerate_envelope(env, GridSpec(21, 3), tail=FULL)
    assert np.array_equal(a, b)


def test_cap(env):
    with pytest.raises(CapExceeded):
        enumerate_envelope(env, GridSpec(101, 10))
    with pytest.raises(CapExceeded):
        enumerate_envelope(env, GridSpec(21, 4), cap=1000)


def test_unknown_tail(env):
    with pytest.raises(ValueError):
        enumerate_envelope(env, GridSpec(5, 2), tail="bogus")


def test_retirement_oracle_agrees(envR, rc):
    best, seq = oracle_retirement(envR, GridSpec(101, 2))
    assert abs(best - rc.Pi0R) <= 0.02
    # frozen from the enumeration: s1 = 0.61 is the largest grid gift below the root
    assert best == pytest.approx(0.8 * (0.61 - 0.5 * 0.61 ** 2), abs=1e-12)
    assert seq == pytest.approx([0, 0.61, 1.0])


def test_retirement_oracle_gap_shrinks(envR, rc):
    gaps = [abs(oracle_retirement(envR, GridSpec(m, 2))[0] - rc.Pi0R) for m in (11, 101, 1001)]
    assert gaps[0] >= gaps[1] >= gaps[2]


def test_retirement_two_levels(envR):
    best, seq = oracle_retirement(envR, GridSpec(2, 2))
    assert best == 0.0 and list(seq) == [0.0, 0.0, 1.0]


def test_retirement_zero_cost_transfers_nothing_early(env):
    envR = RetirementEnv(env, 2, Polynomial((0.0,), DECREASING))
    best, seq = oracle_retirement(envR, GridSpec(21, 2))
    assert seq[1] == 0.0 and best == 0.0


def test_retirement_oracle_k3(env):
    from knowtransfer.retirement import solve_retirement
    envR = RetirementEnv(env, 3, cost())
    best, _ = oracle_retirement(envR, GridSpec(41, 3))
    assert abs(best - solve_retirement(envR).Pi0R) <= 0.02


def test_retirement_grid_horizon_must_match(envR):
    with pytest.raises(ValueError):
        oracle_retirement(envR, GridSpec(11, 3))
