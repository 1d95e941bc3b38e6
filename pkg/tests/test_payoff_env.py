from fractions import Fraction

import numpy as np
import pytest

from knowtransfer.errors import AssumptionViolated, BadDelta, BadParams, OutOfRange
from knowtransfer.payoff_env import (DECREASING, INCREASING, Affine, PayoffEnv, Polynomial,
                                     Table, apprenticeship_shares, bertrand_prices,
                                     inverse_pi, make_apprenticeship_env, make_bertrand_env,
                                     make_cournot_env, make_env, make_polynomial_env,
                                     validate_assumption_one)

from conftest import bench_env


def test_bench_values():
    env = bench_env()
    assert env.pi(0.8) == pytest.approx(0.8, abs=1e-15)
    assert env.w(0.8) == pytest.approx(0.28, abs=1e-15)


def test_linear_env_origin():
    env = make_polynomial_env([0, 1], [0.6, -0.3], [0, 1], 0.5)
    assert env.pi(0.0) == 0.0


def test_increasing_expert_payoff_rejected():
    with pytest.raises(AssumptionViolated):
        make_polynomial_env([0, 1], [0, 1], [0, 1], 0.8)


@pytest.mark.parametrize("delta", [0.0, 1.0, -0.2, 1.5])
def test_bad_delta(delta):
    with pytest.raises(BadDelta):
        make_polynomial_env([0, 1], [0.6, -0.3], [0, 1], delta)


def test_validation_passes_bench():
    rep = validate_assumption_one(bench_env(), 10001)
    assert rep.passed and rep.violations == []


def test_validation_flags_increasing_w():
    env = PayoffEnv(Affine(0, 1), Affine(0.6, 0.1, DECREASING), Affine(0, 1), 0.8)
    rep = validate_assumption_one(env, 101)
    assert not rep.passed
    assert rep.violations[0].constraint == "w"
    assert rep.violations[0].pair == (0.0, 0.01)


def test_validation_flags_decreasing_pi():
    env = PayoffEnv(Affine(0, -1), Affine(0.6, -0.3, DECREASING), Affine(0, 1), 0.8)
    rep = validate_assumption_one(env, 101)
    assert "pi" in [v.constraint for v in rep.violations]


def test_validation_flags_flat_surplus():
    # pi + w constant: G is not strictly increasing
    env = PayoffEnv(Affine(0, 0.5), Affine(0.6, -0.5, DECREASING), Affine(0, 1), 0.8)
    rep = validate_assumption_one(env, 101)
    assert [v.constraint for v in rep.violations] == ["G"]
    with pytest.raises(AssumptionViolated, match="G"):
        make_env(env.pi, env.w, env.v, 0.8)


def test_validation_needs_two_points():
    with pytest.raises(ValueError):
        validate_assumption_one(bench_env(), 1)


def test_inverse_pi_examples():
    env = bench_env()
    assert inverse_pi(env, 0.4) == pytest.approx(0.4, abs=1e-12)
    assert inverse_pi(env, env.pi(0.0)) == 0.0
    with pytest.raises(OutOfRange):
        inverse_pi(env, 1.2)


def test_inverse_pi_nonlinear():
    env = make_polynomial_env([0, 0.5, 0.5], [0.6, -0.3], [0, 1], 0.5)
    y = 0.5 * 0.3 + 0.5 * 0.09
    assert abs(env.pi(inverse_pi(env, y)) - y) <= 1e-12


def test_apprenticeship_values():
    # exact rational evaluation of the closed forms with K = 1/(q-p) = 10/3
    p, q = Fraction(1, 5), Fraction(1, 2)
    K = 1 / (q - p)
    pi0 = K * q * 9 / 16
    w0 = K * p * 9 / 32
    w1 = K * p * 4 / 32
    env = make_apprenticeship_env(0.2, 0.5, 0.8)
    assert env.pi(0.0) == pytest.approx(float(pi0), abs=1e-12)
    assert env.w(0.0) == pytest.approx(float(w0), abs=1e-12)
    assert env.w(1.0) == pytest.approx(float(w1), abs=1e-12)
    assert float(pi0) == 0.9375 and float(w0) == 0.1875


def test_apprenticeship_bad_params():
    with pytest.raises(BadParams):
        make_apprenticeship_env(0.3, 0.5, 0.8)


def test_apprenticeship_full_assignment():
    s = np.linspace(0, 1, 101)
    a1, a2 = apprenticeship_shares(s)
    assert np.all(a1 + a2 == 1.0)


def test_cournot_spot_value():
    env = make_cournot_env(4, 1, 0.9)
    assert abs(env.w(0.0) - 16 / 9) <= 1e-12


@pytest.mark.parametrize("A,beta", [(2.5, 1), (4, 0.5)])
def test_cournot_bad_params(A, beta):
    with pytest.raises(BadParams):
        make_cournot_env(A, beta, 0.9)


def test_bertrand_spot_values():
    env = make_bertrand_env(2, 0.2, 0.9)
    assert abs(env.w(1.0) - 160 / 225) <= 1e-12
    p1, p2 = bertrand_prices(1.0, 2)
    assert p1 == pytest.approx(2 / 3, abs=1e-15) and p2 == pytest.approx(2 / 3, abs=1e-15)


@pytest.mark.parametrize("A,gamma", [(1.5, 0.2), (2, 1.0), (2, -0.1)])
def test_bertrand_bad_params(A, gamma):
    with pytest.raises(BadParams):
        make_bertrand_env(A, gamma, 0.9)


@pytest.mark.parametrize("make,args", [(make_apprenticeship_env, (0.2, 0.5)),
                                       (make_cournot_env, (4, 1)),
                                       (make_bertrand_env, (2, 0.2))])
def test_constructors_pass_validation(make, args):
    assert validate_assumption_one(make(*args, 0.8), 10001).passed


def test_table_interpolation_and_checks():
    t = Table((0, 0.5, 1), (0, 0.8, 1), INCREASING)
    assert t(0.25) == pytest.approx(0.4)
    assert np.allclose(t(np.array([0.25, 0.75])), [0.4, 0.9])
    with pytest.raises(BadParams):
        Table((0, 0.5), (0, 1), INCREASING)
    with pytest.raises(BadParams):
        Table((0, 0.5, 1), (1, 0.5, 0.7), DECREASING)


def test_polynomial_scaling_and_arrays():
    f = Polynomial((1.0, -1.0), DECREASING)
    assert f.scaled(3)(0.5) == pytest.approx(1.5)
    const = Polynomial((2.0,))
    assert np.all(const(np.zeros(3)) == 2.0)
    with pytest.raises(BadParams):
        Polynomial(())
