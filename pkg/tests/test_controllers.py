import numpy as np
import pytest

from adaptlab.clf import make_quadratic_clf
from adaptlab.controllers import (
    min_norm_control,
    min_norm_from_terms,
    scalar_example_control,
    scalar_explicit_control,
)
from adaptlab.dynamics import UncertainSystem, make_scalar_example
from adaptlab.errors import ClfViolation

from conftest import PAIR_NAMES, sample_point, system_clf_pair
from oracles import brute_force_min_norm

HALF_SQUARE = make_quadratic_clf([[0.5]], 1.0)


def test_scalar_min_norm_point():
    d = min_norm_control(make_scalar_example(), HALF_SQUARE, np.array([1.0]), np.zeros(1))
    assert d.drift_rate == 0.0 and d.input_gain[0] == 1.0
    assert d.u[0] == pytest.approx(-0.5, abs=1e-15)
    assert d.u[0] == pytest.approx(brute_force_min_norm(0.0, [1.0], 0.5, 1.0), abs=1e-9)


def test_origin_gives_zero_input():
    d = min_norm_control(make_scalar_example(), HALF_SQUARE, np.zeros(1), np.array([3.0]))
    assert d.u[0] == 0.0 and d.constraint_slack == 0.0


def test_stable_drift_needs_no_input():
    sys = UncertainSystem(
        name="damped",
        state_dim=1,
        input_dim=1,
        param_dim=1,
        drift=lambda x: -2.0 * x,
        regressor=lambda x: np.zeros((1, 1)),
        input_map=lambda x: np.ones((1, 1)),
    )
    d = min_norm_control(sys, HALF_SQUARE, np.array([1.0]), np.zeros(1))
    assert d.drift_rate == -2.0 and d.u[0] == 0.0


def test_degenerate_gain_is_a_violation():
    with pytest.raises(ClfViolation):
        min_norm_from_terms(1.0, np.array([1.0, 0.0]), np.array([1.0, 0.0]), np.array([[0.0], [1.0]]), 1.0)


def test_scalar_example_law():
    assert scalar_example_control(2.0, 1.0) == -3.0
    assert scalar_example_control(0.0, 5.0) == 0.0
    sys = make_scalar_example()
    d = scalar_explicit_control(sys, HALF_SQUARE, np.array([-0.4]), np.array([0.7]))
    assert d.u[0] == pytest.approx(scalar_example_control(-0.4, 0.7), abs=1e-16)
    assert d.constraint_slack >= -1e-15


@pytest.mark.parametrize("name", PAIR_NAMES)
def test_constraint_and_brute_force(name, rng):
    sys, clf = system_clf_pair(name)
    for _ in range(300):
        x, th = sample_point(rng, sys, clf)
        d = min_norm_control(sys, clf, x, th)
        assert d.constraint_slack >= -1e-9
        u_star = brute_force_min_norm(d.drift_rate, d.input_gain, clf.value(x, th), clf.lam)
        assert abs(d.u[0] - u_star) <= 1e-6 * max(1.0, abs(u_star))


@pytest.mark.parametrize("name", PAIR_NAMES)
def test_minimality_against_feasible_perturbations(name, rng):
    sys, clf = system_clf_pair(name)
    x, th = sample_point(rng, sys, clf)
    d = min_norm_control(sys, clf, x, th)
    V = clf.value(x, th)
    b = d.input_gain
    for _ in range(100):
        u2 = d.u + rng.normal(size=d.u.shape)
        excess = d.drift_rate + float(b @ u2) + clf.lam * V
        if excess > 0:
            u2 = u2 - excess / float(b @ b) * b  # project back onto the constraint
        assert np.linalg.norm(d.u) <= np.linalg.norm(u2) + 1e-9


@pytest.mark.parametrize("name", PAIR_NAMES)
def test_lipschitz_away_from_switching(name, rng):
    sys, clf = system_clf_pair(name)
    h = 1e-6
    for _ in range(50):
        x, th = sample_point(rng, sys, clf)
        d = min_norm_control(sys, clf, x, th)
        if abs(d.drift_rate + clf.lam * clf.value(x, th)) < 1e-3:
            continue
        step = rng.normal(size=x.shape)
        step *= h / np.linalg.norm(step)
        d2 = min_norm_control(sys, clf, x + step, th)
        d4 = min_norm_control(sys, clf, x + 2 * step, th)
        # difference quotients at two step sizes agree: no jump inside
        q1 = np.linalg.norm(d2.u - d.u) / h
        q2 = np.linalg.norm(d4.u - d.u) / (2 * h)
        assert q1 <= 2 * q2 + 1e-3 and q2 <= 2 * q1 + 1e-3
