import numpy as np
import pytest

from adaptlab.clf import make_backstepping_clf, make_feedback_linearization_clf, make_quadratic_clf
from adaptlab.clf_synthesis import synthesize_P
from adaptlab.dynamics import (
    EXAMPLE1_A,
    EXAMPLE1_B,
    EXAMPLE3_B,
    EXAMPLE3_CHAIN_A,
    make_example1,
    make_example2,
    make_example3,
    make_scalar_example,
)


def example1_clf(lam=1.0):
    return make_quadratic_clf(np.linalg.inv(synthesize_P(EXAMPLE1_A, EXAMPLE1_B, lam).P), lam, param_dim=4)


def example3_clf(lam=1.0):
    return make_feedback_linearization_clf(np.linalg.inv(synthesize_P(EXAMPLE3_CHAIN_A, EXAMPLE3_B, lam).P), lam)


_PAIRS = {}


def system_clf_pair(name):
    """(system, clf) for each built-in scenario, built once per session."""
    if name not in _PAIRS:
        _PAIRS[name] = {
            "scalar": lambda: (make_scalar_example(), make_quadratic_clf([[0.5]], 1.0)),
            "example1": lambda: (make_example1(), example1_clf()),
            "example2": lambda: (make_example2(), make_backstepping_clf(1.0)),
            "example3": lambda: (make_example3(), example3_clf()),
        }[name]()
    return _PAIRS[name]


PAIR_NAMES = ("scalar", "example1", "example2", "example3")


def sample_point(rng, sys, clf, x_scale=2.0):
    x = rng.uniform(-x_scale, x_scale, sys.state_dim)
    if clf.theta_box is not None:
        lo, hi = clf.theta_box
        th = rng.uniform(lo, hi)
    else:
        th = rng.uniform(-3, 3, sys.param_dim)
    return x, th


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# (criterion number, line) pairs filled by test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
