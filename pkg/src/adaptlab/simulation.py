"""Closed-loop simulation: plant + CE controller + estimator on one augmented state.

Augmented state layout: ``[x (n), theta_hat (p), rho, a_hat (p, momentum only)]``.
Every law carries ``rho``; laws without modulation keep it constant.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import metrics
from .clf import vanishing_degree_probe
from .controllers import ACTIVE_TOL, CONTROLLERS, min_norm_from_terms
from .errors import (
    AdaptlabError,
    ClfViolation,
    NonFiniteDynamics,
    NonFiniteStage,
    NonFiniteUpdate,
    ValidationError,
)
from .estimators import (
    ESTIMATORS,
    GainConfig,
    limiting_form_update,
    momentum_rates,
    normalized_rates,
    scalar_normalized_update,
    standard_update,
)

LIMITING_STYLES = {"scalar": "nonsmooth", "scalar_sq": "smooth-cubic"}


@dataclass(frozen=True)
class ClosedLoop:
    """Fully resolved simulation problem (objects, not names)."""

    sys: object
    clf: object
    controller: str
    estimator: str
    gains: GainConfig
    theta_true: np.ndarray
    x0: np.ndarray
    theta_hat0: np.ndarray
    rho0: float = 0.0
    a_hat0: Optional[np.ndarray] = None
    t_final: float = 10.0
    dt: float = 1e-3
    conv_tol: float = 1e-12
    conv_window: int = 100
    validate_r: bool = True

    @property
    def momentum(self):
        return self.estimator == "momentum"

    def validate(self):
        sys, errors = self.sys, {}
        n, p = sys.state_dim, sys.param_dim
        if np.shape(self.x0) != (n,):
            errors["initial.x0"] = f"expected {n} entries, got {np.size(self.x0)}"
        if np.shape(self.theta_true) != (p,):
            errors["initial.theta_true"] = f"expected {p} entries, got {np.size(self.theta_true)}"
        if np.shape(self.theta_hat0) != (p,):
            errors["initial.theta_hat0"] = f"expected {p} entries, got {np.size(self.theta_hat0)}"
        if self.gains.Gamma.shape != (p, p):
            errors["gains.gamma"] = f"expected {p}x{p} adaptation gain, got {self.gains.Gamma.shape}"
        if self.clf.state_dim != n or self.clf.param_dim != p:
            errors["clf"] = f"CLF dimensions ({self.clf.state_dim}, {self.clf.param_dim}) do not match system ({n}, {p})"
        if self.controller not in CONTROLLERS:
            errors["scenario.controller"] = f"unknown controller {self.controller!r}"
        elif self.controller == "scalar_explicit" and (n != 1 or sys.input_dim != 1):
            errors["scenario.controller"] = "scalar_explicit needs a scalar plant"
        if self.estimator not in ESTIMATORS:
            errors["scenario.estimator"] = f"unknown estimator {self.estimator!r}"
        elif self.estimator in ("scalar_normalized", "limiting") and sys.name not in LIMITING_STYLES:
            errors["scenario.estimator"] = f"{self.estimator} is defined for the scalar and scalar_sq plants only"
        elif self.momentum:
            if not self.clf.is_quadratic:
                errors["scenario.estimator"] = "momentum law needs a quadratic-form CLF"
            if self.a_hat0 is None:
                errors["initial.a_hat0"] = "momentum law needs a_hat0"
            elif np.shape(self.a_hat0) != (p,):
                errors["initial.a_hat0"] = f"expected {p} entries"
        if not (self.dt > 0 and math.isfinite(self.dt)):
            errors["integration.dt"] = "dt must be positive"
        if not (self.t_final > 0 and math.isfinite(self.t_final)):
            errors["integration.t_final"] = "t_final must be positive"
        if self.conv_window < 1:
            errors["integration.conv_window"] = "conv_window must be >= 1"
        for name in ("x0", "theta_true", "theta_hat0"):
            if not np.all(np.isfinite(getattr(self, name))):
                errors[f"initial.{name}"] = "entries must be finite"
        if errors:
            raise ValidationError(errors)
        if self.validate_r and self.estimator in ("normalized", "momentum") and self.gains.r > 1.0:
            thetas = [self.theta_hat0, self.theta_true]
            if self.clf.theta_box is not None:
                lo, hi = self.clf.theta_box
                thetas += [lo, hi, 0.5 * (lo + hi)]
            verdict = vanishing_degree_probe(sys, self.clf, thetas, self.gains.r)
            if not verdict.finite:
                raise ValidationError({"gains.r": f"r = {self.gains.r:g} exceeds the probed vanishing degree"})

    def layout(self):
        n, p = self.sys.state_dim, self.sys.param_dim
        return StateLayout(n=n, p=p, m=self.sys.input_dim, momentum=self.momentum)

    def initial_state(self):
        parts = [self.x0, self.theta_hat0, [self.rho0]]
        if self.momentum:
            parts.append(self.a_hat0)
        return np.concatenate([np.asarray(v, dtype=float) for v in parts])


@dataclass(frozen=True)
class StateLayout:
    n: int
    p: int
    m: int
    momentum: bool

    @property
    def dim(self):
        return self.n + self.p + 1 + (self.p if self.momentum else 0)

    def columns(self):
        cols = ["t"] + [f"x{i + 1}" for i in range(self.n)] + [f"theta_hat{i + 1}" for i in range(self.p)] + ["rho"]
        if self.momentum:
            cols += [f"a_hat{i + 1}" for i in range(self.p)]
        return cols + [f"u{i + 1}" for i in range(self.m)] + ["V", "Q"]


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    u: np.ndarray
    V: np.ndarray
    Q: np.ndarray
    slack: np.ndarray
    layout: StateLayout
    terminated: str
    error: Optional[str] = None
    meta: dict = field(default_factory=dict)

    @property
    def x(self):
        return self.states[:, : self.layout.n]

    @property
    def theta_hat(self):
        n, p = self.layout.n, self.layout.p
        return self.states[:, n : n + p]

    @property
    def rho(self):
        return self.states[:, self.layout.n + self.layout.p]

    @property
    def a_hat(self):
        if not self.layout.momentum:
            return None
        start = self.layout.n + self.layout.p + 1
        return self.states[:, start : start + self.layout.p]

    def table(self):
        """Rows in CSV column order (see ``StateLayout.columns``)."""
        return np.column_stack([self.times, self.states, self.u, self.V, self.Q])


class ClosedLoopRhs:
    """Right-hand side of the augmented ODE on numpy vectors.

    The controller is re-evaluated at every call, i.e. at each RK4 stage.
    """

    def __init__(self, loop):
        self.loop = loop
        self.sys = loop.sys
        self.clf = loop.clf
        self.cfg = loop.gains
        self.theta = np.asarray(loop.theta_true, dtype=float)
        self.n = loop.sys.state_dim
        self.p = loop.sys.param_dim
        self.dim = loop.layout().dim
        self.controller = loop.controller
        self.estimator = loop.estimator
        self.lam = loop.clf.lam
        self.gamma = float(loop.gains.Gamma[0, 0])
        self.style = LIMITING_STYLES.get(loop.sys.name)
        self._control = CONTROLLERS[loop.controller]

    def _decide(self, x, th, V, gx, nominal, B):
        if self.controller == "min_norm":
            if not x.any():
                return np.zeros(B.shape[1]), 0.0
            d = min_norm_from_terms(V, gx, nominal, B, self.lam)
        elif self.controller == "scalar_explicit":
            u = -nominal - 0.5 * x
            a = float(gx @ nominal)
            return u, -self.lam * V - (a + float(gx @ (B @ u)))
        else:
            d = self._control(self.sys, self.clf, x, th)
        return d.u, d.constraint_slack

    def _estimator_rates(self, x, th, rho, a_hat, V, gx, gth, Delta):
        est = self.estimator
        if est == "normalized":
            return normalized_rates(V, gx, gth, Delta, rho, self.cfg, self.clf.param_dependent) + (None,)
        if est == "momentum":
            P = self.clf.quad_matrix(th)
            da, dth, drho = momentum_rates(V, gx, gth, Delta, P, th, a_hat, rho, self.cfg, self.lam, self.clf.param_dependent)
            return dth, drho, da
        if est == "standard":
            return standard_update(Delta, gx, self.cfg.Gamma), 0.0, None
        xs = float(x[0])
        if est == "scalar_normalized":
            return np.array([_scalar_normalized(xs, self.gamma, self.cfg.r, self.style)]), 0.0, None
        return np.array([limiting_form_update(xs, self.gamma, self.style)]), 0.0, None

    def evaluate(self, s):
        """Return ``(ds, u, V, slack)`` at augmented state ``s``."""
        n, p = self.n, self.p
        x = s[:n]
        th = s[n : n + p]
        rho = float(s[n + p])
        a_hat = s[n + p + 1 :] if self.loop.momentum else None
        Delta = self.sys.regressor(x)
        B = self.sys.input_map(x)
        f = self.sys.drift(x)
        nominal = f + Delta.T @ th
        V, gx, gth = self.clf.evaluate(x, th)
        u, slack = self._decide(x, th, V, gx, nominal, B)
        ds = np.empty(self.dim)
        ds[:n] = f + Delta.T @ self.theta + B @ u
        if not np.isfinite(ds[:n]).all():
            raise NonFiniteDynamics(x)
        dth, drho, da = self._estimator_rates(x, th, rho, a_hat, V, gx, gth, Delta)
        ds[n : n + p] = dth
        ds[n + p] = drho
        if da is not None:
            ds[n + p + 1 :] = da
        if not np.isfinite(ds).all():
            raise NonFiniteUpdate(x, th)
        return ds, u, V, slack

    def __call__(self, t, s):
        return self.evaluate(s)[0]

    def advance(self, s, t, h, k1):
        return _rk4_tail(_staged(self), s, t, h, k1)

    def q_value(self, s, V):
        n, p, cfg = self.n, self.p, self.cfg
        x, th, rho = s[:n], s[n : n + p], float(s[n + p])
        est = self.estimator
        if est == "scalar_normalized":
            return metrics.q_prop1(float(x[0]), float(th[0]), float(self.theta[0]), self.gamma, cfg.r)
        if est == "normalized":
            return metrics.q_thm1(V, th, rho, self.theta, cfg)
        if est == "momentum":
            return metrics.q_thm3(V, s[n + p + 1 :], th, rho, self.theta, cfg)
        if est == "standard":
            return metrics.q_standard(V, th, self.theta, cfg.Gamma_inv)
        return math.nan


def _scalar_normalized(x, gamma, r, style):
    if style == "nonsmooth":
        return scalar_normalized_update(x, gamma, r)
    # x^2 regressor: gamma (x^3 + x |x|^{2/r})
    return gamma * (x * x * x + x * abs(x) ** (2.0 / r))


class ScalarClosedLoopRhs:
    """Float-only twin of ClosedLoopRhs for 1-D plants with a quadratic CLF.

    The augmented state is a tuple ``(x, theta_hat, rho[, a_hat])``.  Small
    numpy arrays cost more than the arithmetic here, so this path exists for
    speed; it agrees with the vector path to rounding.
    """

    def __init__(self, loop):
        self.loop = loop
        self.f, self.reg, self.b = loop.sys.scalar_fns
        self.M = float(loop.clf.quad_matrix(None)[0, 0])
        self.cfg = loop.gains
        self.G = float(loop.gains.Gamma[0, 0])
        self.theta = float(loop.theta_true[0])
        self.lam = float(loop.clf.lam)
        self.controller = loop.controller
        self.estimator = loop.estimator
        self.style = LIMITING_STYLES.get(loop.sys.name)

    @staticmethod
    def supports(loop):
        sys = loop.sys
        return (
            getattr(sys, "scalar_fns", None) is not None
            and sys.state_dim == sys.param_dim == sys.input_dim == 1
            and loop.clf.is_quadratic
            and not loop.clf.param_dependent
            and loop.controller in ("min_norm", "scalar_explicit")
        )

    def evaluate(self, s):
        x, th, rho = s[0], s[1], s[2]
        fx, dx, bx = self.f(x), self.reg(x), self.b(x)
        nominal = fx + dx * th
        V = 0.5 * self.M * x * x
        gx = self.M * x
        lam = self.lam
        if self.controller == "scalar_explicit":
            u = -nominal - 0.5 * x
            slack = -lam * V - (gx * nominal + gx * bx * u)
        else:
            u, slack = self._min_norm(x, V, gx, nominal, bx)
        xdot = fx + dx * self.theta + bx * u
        if not math.isfinite(xdot):
            raise NonFiniteDynamics([x])
        est = self.estimator
        da = None
        if est == "scalar_normalized":
            dth = _scalar_normalized(x, self.G, self.cfg.r, self.style)
        elif est == "standard":
            dth = self.G * (dx * gx)
        elif est == "limiting":
            dth = limiting_form_update(x, self.G, self.style)
        else:
            cfg = self.cfg
            w = cfg.omega(rho) * max(V, cfg.v_floor) ** (1.0 / cfg.r - 1.0)
            if est == "normalized":
                dth = w * (self.G * (dx * gx))
            else:
                da = w * (self.G * (dx * gx))
                dth = (w / lam) * (self.G * (dx * (self.M * (dx * (s[3] - th)))))
        ds = (xdot, dth, 0.0) if da is None else (xdot, dth, 0.0, da)
        if not all(math.isfinite(v) for v in ds):
            raise NonFiniteUpdate([x], [th])
        return ds, (u,), V, slack

    def _min_norm(self, x, V, gx, nominal, bx):
        lam = self.lam
        if x == 0.0:
            return 0.0, 0.0
        a = gx * nominal
        b = bx * gx
        excess = a + lam * V
        u = 0.0
        if excess > 0.0:
            if b * b <= ACTIVE_TOL * ACTIVE_TOL:
                if excess > ACTIVE_TOL:
                    raise ClfViolation(f"a + lam V = {excess:.3e} > 0 with |b| = {abs(b):.3e}")
            else:
                u = -excess / b
        return u, -lam * V - (a + b * u)

    def __call__(self, t, s):
        return self.evaluate(s)[0]

    def advance(self, s, t, h, k1):
        stage = _staged(self)
        h2 = 0.5 * h
        k2 = stage(2, t + h2, tuple(a + h2 * b for a, b in zip(s, k1)))
        k3 = stage(3, t + h2, tuple(a + h2 * b for a, b in zip(s, k2)))
        k4 = stage(4, t + h, tuple(a + h * b for a, b in zip(s, k3)))
        h6 = h / 6.0
        return tuple(a + h6 * (b1 + 2.0 * b2 + 2.0 * b3 + b4) for a, b1, b2, b3, b4 in zip(s, k1, k2, k3, k4))

    def q_value(self, s, V):
        x, th, rho = s[0], s[1], s[2]
        cfg, est = self.cfg, self.estimator
        err = th - self.theta
        if est == "scalar_normalized":
            return metrics.q_prop1(x, th, self.theta, self.G, cfg.r)
        if est == "standard":
            return V + 0.5 * err * err / self.G
        if est == "limiting":
            return math.nan
        head = cfg.omega(rho) * (cfg.r * V ** (1.0 / cfg.r) + cfg.epsilon)
        if est == "normalized":
            return head + 0.5 * err * err / self.G
        ea, ed = s[3] - self.theta, th - s[3]
        return head + 0.5 * (ea * ea + ed * ed) / self.G


def make_rhs(loop, fast=True):
    if fast and ScalarClosedLoopRhs.supports(loop):
        return ScalarClosedLoopRhs(loop)
    return ClosedLoopRhs(loop)


def _staged(rhs):
    def stage(k, tt, ss):
        try:
            return rhs(tt, ss)
        except (NonFiniteDynamics, NonFiniteUpdate) as exc:
            raise NonFiniteStage(k, tt, exc) from exc

    return stage


def rk4_step(rhs, s, t, dt):
    """One classical Runge-Kutta step of ``s' = rhs(t, s)``.

    Raises NonFiniteStage naming the first stage whose derivative is not finite.
    """

    def stage(k, tt, ss):
        try:
            d = np.asarray(rhs(tt, ss), dtype=float)
        except (NonFiniteDynamics, NonFiniteUpdate) as exc:
            raise NonFiniteStage(k, tt, exc) from exc
        if not np.isfinite(d).all():
            raise NonFiniteStage(k, tt)
        return d

    s = np.asarray(s, dtype=float)
    return _rk4_tail(stage, s, t, dt, stage(1, t, s))


def _rk4_tail(stage, s, t, dt, k1):
    h2 = 0.5 * dt
    k2 = stage(2, t + h2, s + h2 * k1)
    k3 = stage(3, t + h2, s + h2 * k2)
    k4 = stage(4, t + dt, s + dt * k3)
    return s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def time_grid(t_final, dt):
    """Uniform grid ``0, dt, 2dt, ...`` ending exactly at ``t_final``."""
    steps = int(round(t_final / dt))
    if steps * dt < t_final * (1 - 1e-12):
        steps += 1
    return np.minimum(np.arange(steps + 1) * dt, t_final)


def simulate(loop, validate=True, fast=True):
    """Integrate ``loop`` from 0 to ``t_final`` with fixed-step RK4.

    Stops early with ``terminated='converged'`` once ``V < conv_tol`` for
    ``conv_window`` consecutive samples (``conv_tol <= 0`` disables this), or
    with ``'non_finite'`` when the plant or the estimator stops producing
    finite values or the CLF cannot be evaluated.
    """
    if hasattr(loop, "build"):
        loop = loop.build()
    if validate:
        loop.validate()
    rhs = make_rhs(loop, fast=fast)
    layout = loop.layout()
    grid = time_grid(float(loop.t_final), float(loop.dt))
    size = grid.size
    states = np.empty((size, layout.dim))
    us = np.empty((size, layout.m))
    Vs = np.empty(size)
    Qs = np.empty(size)
    slacks = np.empty(size)

    s = loop.initial_state()
    if isinstance(rhs, ScalarClosedLoopRhs):
        s = tuple(float(v) for v in s)
    terminated, error = "horizon", None
    below = 0
    count = 0
    for k in range(size):
        try:
            d1, u, V, slack = rhs.evaluate(s)
        except AdaptlabError as exc:
            terminated, error = "non_finite", str(exc)
            break
        states[k] = s
        us[k] = u
        Vs[k] = V
        Qs[k] = rhs.q_value(s, V)
        slacks[k] = slack
        count = k + 1
        if loop.conv_tol > 0:
            below = below + 1 if V < loop.conv_tol else 0
            if below >= loop.conv_window:
                terminated = "converged"
                break
        if k == size - 1:
            break
        try:
            s = rhs.advance(s, grid[k], grid[k + 1] - grid[k], d1)
        except AdaptlabError as exc:
            terminated, error = "non_finite", str(exc)
            break
    return Trajectory(
        times=grid[:count].copy(),
        states=states[:count],
        u=us[:count],
        V=Vs[:count],
        Q=Qs[:count],
        slack=slacks[:count],
        layout=layout,
        terminated=terminated,
        error=error,
    )
