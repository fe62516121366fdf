"""Certainty-equivalence controllers enforcing the CLF decrease condition.

Any controller can drive the closed loop as long as it returns a
ControlDecision whose slack is non-negative, i.e.
``dV/dx (f + Delta^T theta_hat + B u) <= -lam V``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ClfViolation, ValidationError

ACTIVE_TOL = 1e-12


@dataclass(frozen=True)
class ControlDecision:
    u: np.ndarray
    drift_rate: float
    input_gain: np.ndarray
    constraint_slack: float


def _decision(u, a, b, V, lam):
    return ControlDecision(u=u, drift_rate=a, input_gain=b, constraint_slack=-lam * V - (a + float(b @ u)))


def min_norm_from_terms(V, grad_x, nominal_rate, B, lam):
    """Closed-form solution of ``min |u|^2  s.t.  a + b^T u <= -lam V``.

    ``nominal_rate`` is ``f(x) + Delta(x)^T theta_hat``.
    """
    a = float(grad_x @ nominal_rate)
    b = B.T @ grad_x
    excess = a + lam * V
    if excess <= 0.0:
        return _decision(np.zeros(B.shape[1]), a, b, V, lam)
    bb = float(b @ b)
    if bb <= ACTIVE_TOL * ACTIVE_TOL:
        if excess > ACTIVE_TOL:
            raise ClfViolation(f"a + lam V = {excess:.3e} > 0 with |b| = {np.sqrt(bb):.3e}")
        return _decision(np.zeros(B.shape[1]), a, b, V, lam)
    return _decision(-(excess / bb) * b, a, b, V, lam)


def min_norm_control(sys, clf, x, theta_hat):
    """Pointwise min-norm controller; ``u = 0`` at the origin."""
    x = np.asarray(x, dtype=float)
    theta_hat = np.asarray(theta_hat, dtype=float)
    B = sys.input_map(x)
    if not np.any(x):
        return ControlDecision(u=np.zeros(sys.input_dim), drift_rate=0.0, input_gain=np.zeros(sys.input_dim), constraint_slack=0.0)
    V, gx, _ = clf.evaluate(x, theta_hat)
    nominal = sys.drift(x) + sys.regressor(x).T @ theta_hat
    return min_norm_from_terms(V, gx, nominal, B, clf.lam)


def scalar_example_control(x, theta_hat):
    """``u = -theta_hat |x| - x / 2`` for ``xdot = theta |x| + u``."""
    return -theta_hat * abs(x) - 0.5 * x


def scalar_explicit_control(sys, clf, x, theta_hat):
    """Cancel the estimated uncertainty and add ``-x/2`` (scalar plants only).

    For ``xdot = theta |x| + u`` this is exactly ``scalar_example_control``.
    """
    if sys.state_dim != 1 or sys.input_dim != 1:
        raise ValidationError({"controller": "scalar_explicit needs a scalar plant"})
    x = np.asarray(x, dtype=float)
    nominal = sys.drift(x) + sys.regressor(x).T @ theta_hat
    u = -nominal - 0.5 * x
    V, gx, _ = clf.evaluate(x, theta_hat)
    a = float(gx @ nominal)
    b = sys.input_map(x).T @ gx
    return _decision(u, a, b, V, clf.lam)


CONTROLLERS = {
    "min_norm": min_norm_control,
    "scalar_explicit": scalar_explicit_control,
}
