import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaptlab.dynamics import (
    BUILTIN_SYSTEMS,
    EXAMPLE1_A,
    TrueParameters,
    eval_plant,
    example1_features,
    in_input_span,
    make_example1,
    make_example2,
    make_example3,
    make_scalar_example,
    make_system,
    true_parameters,
)
from adaptlab.errors import NonFiniteDynamics, ValidationError

finite = st.floats(-3, 3, allow_nan=False)


def test_scalar_plant_values():
    sys = make_scalar_example()
    assert eval_plant(sys, np.array([1.0]), np.array([0.5]), np.array([0.0]))[0] == 0.5
    assert eval_plant(sys, np.array([-2.0]), np.array([1.0]), np.array([0.0]))[0] == 2.0
    assert eval_plant(sys, np.array([0.0]), np.array([7.0]), np.array([0.0]))[0] == 0.0
    assert eval_plant(sys, np.array([1.0]), np.array([0.5]), np.array([-0.5]))[0] == 0.0


def test_example1_against_hand_evaluation():
    x = np.array([1.0, 1.5, 1.5, 1.5])
    theta = np.array([0.5, 1.0, 1.0, 1.0])
    # Ax by rows, then the matched term enters x4 only
    ax = [1.5 + 1.5, -1.5 + 1.5 + 1.5, -1.5 + 1.5, 0.0]
    phi_theta = 0.5 * 1.0 + math.atan(1.5) + 1.5 + math.atan(1.5)
    expected = np.array(ax) + np.array([0, 0, 0, phi_theta])
    got = eval_plant(make_example1(), x, theta, np.zeros(1))
    np.testing.assert_allclose(got, expected, rtol=1e-14)


def test_example1_features_and_matching():
    np.testing.assert_allclose(example1_features(np.ones(4)), [1, math.pi / 4, 1, math.pi / 4])
    sys = make_example1()
    rng = np.random.default_rng(1)
    for _ in range(100):
        x = rng.uniform(-3, 3, 4)
        theta = rng.uniform(-2, 2, 4)
        assert in_input_span(sys, x, sys.uncertainty(x, theta))


def test_example2_structure():
    sys = make_example2()
    theta = np.array([1.0, 0.0, 0.0, 0.0])
    assert not in_input_span(sys, np.array([1.0, 0.0]), sys.uncertainty(np.array([1.0, 0.0]), theta))
    x = np.array([math.pi / 2, 0.3])
    unc = sys.uncertainty(x, np.array([1.0, 1.0, 0.0, 0.0]))
    assert unc[0] == pytest.approx(1.0 + math.atan(math.pi / 2), abs=1e-15)
    assert unc[1] == 0.0


def test_example3_hand_evaluation():
    sys = make_example3()
    x = np.array([math.pi / 2, 0.0, 1.0, 0.0])
    xdot = eval_plant(sys, x, np.array([1.0, 2.0, 3.0, 0.5]), np.zeros(1))
    assert xdot[1] == pytest.approx(1.0 + 2.0 * (1.0 - math.pi / 2), abs=1e-14)
    assert xdot[3] == pytest.approx(3.0 * (math.pi / 2 - 1.0), abs=1e-14)
    np.testing.assert_array_equal(eval_plant(sys, np.zeros(4), np.ones(4), np.zeros(1)), np.zeros(4))


@pytest.mark.parametrize("name", sorted(BUILTIN_SYSTEMS))
def test_regressor_vanishes_at_origin_and_shapes(name):
    sys = make_system(name)
    n, p, m = sys.state_dim, sys.param_dim, sys.input_dim
    np.testing.assert_array_equal(sys.regressor(np.zeros(n)), np.zeros((p, n)))
    x = np.random.default_rng(0).uniform(-1, 1, n)
    assert sys.regressor(x).shape == (p, n)
    assert sys.input_map(x).shape == (n, m)
    assert sys.drift(x).shape == (n,)


@pytest.mark.parametrize("name", sorted(BUILTIN_SYSTEMS))
@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), alpha=finite, beta=finite)
def test_plant_affine_in_u_and_theta(name, seed, alpha, beta):
    sys = make_system(name)
    rng = np.random.default_rng(seed)
    x = rng.uniform(-2, 2, sys.state_dim)
    th1, th2 = rng.uniform(-2, 2, (2, sys.param_dim))
    u1, u2 = rng.uniform(-2, 2, (2, sys.input_dim))
    zero_u = np.zeros(sys.input_dim)

    def ev(th, u):
        return eval_plant(sys, x, th, u)

    lhs = ev(th1, alpha * u1 + beta * u2)
    rhs = alpha * ev(th1, u1) + beta * ev(th1, u2) - (alpha + beta - 1) * ev(th1, zero_u)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12 * (1 + np.abs(rhs).max()) * 10)
    lhs = ev(alpha * th1 + beta * th2, u1)
    zero_th = np.zeros(sys.param_dim)
    rhs = alpha * ev(th1, u1) + beta * ev(th2, u1) - (alpha + beta - 1) * ev(zero_th, u1)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12 * (1 + np.abs(rhs).max()) * 10)


def test_exact_cancellation():
    sys = make_scalar_example()
    x, theta = np.array([-1.3]), np.array([0.7])
    u = -(sys.drift(x) + sys.uncertainty(x, theta))
    assert eval_plant(sys, x, theta, u)[0] == 0.0


def test_non_finite_output_raises_with_state():
    sys = make_example1()
    with np.errstate(invalid="ignore"), pytest.raises(NonFiniteDynamics) as info:
        eval_plant(sys, np.array([np.inf, 0, 0, 0]), np.ones(4), np.zeros(1))
    assert np.isinf(info.value.x[0])


def test_true_parameters_box():
    tp = true_parameters("example3", [0.0, 1.0, 0.0, 0.0])
    lo, hi = tp.inflated(1.5)
    np.testing.assert_allclose(lo, [-4.5, -0.125, -4.5, -4.5])
    np.testing.assert_allclose(hi, [4.5, 3.625, 4.5, 4.5])
    with pytest.raises(ValidationError):
        true_parameters("example3", [0.0, 0.1, 0.0, 0.0])
    with pytest.raises(ValidationError):
        TrueParameters(np.zeros(2), lower=np.zeros(2))
    with pytest.raises(ValidationError):
        make_system("pendulum")
