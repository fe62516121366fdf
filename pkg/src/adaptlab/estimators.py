"""Parameter estimation laws.

Covered laws: the classical gradient law, the scalar normalized law with
``|x|^{2/r}`` boost, the general normalized law with the rho-modulated gain
``omega(rho)``, its momentum extension, and the r -> infinity limits of the
scalar laws.

Normalization multiplies by ``V^{1/r - 1}``, which blows up as ``V -> 0`` for
``r > 1``.  Every law evaluates it at ``max(V, v_floor)``.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import MissingAuxState, NonFiniteUpdate, ValidationError

OMEGA_KINDS = ("arctan", "exp")


@dataclass(frozen=True)
class GainConfig:
    Gamma: np.ndarray
    r: float = 1.0
    epsilon: float = 0.5
    omega_kind: str = "arctan"
    omega_scale: float = 0.5
    omega_offset: float = 0.0
    v_floor: float = 1e-12

    def __post_init__(self):
        G = np.atleast_2d(np.asarray(self.Gamma, dtype=float))
        object.__setattr__(self, "Gamma", G)
        errors = {}
        if G.shape[0] != G.shape[1] or not np.allclose(G, G.T) or np.linalg.eigvalsh(0.5 * (G + G.T))[0] <= 0:
            errors["gains.gamma"] = "adaptation gain must be symmetric positive definite"
        if not self.r >= 1.0:
            errors["gains.r"] = f"root index must be >= 1, got {self.r}"
        if not self.epsilon > 0.0:
            errors["gains.epsilon"] = "epsilon must be positive"
        if self.omega_kind not in OMEGA_KINDS:
            errors["gains.omega"] = f"omega must be one of {OMEGA_KINDS}"
        if not self.omega_scale > 0.0:
            errors["gains.omega_scale"] = "omega_scale must be positive"
        if self.omega_kind == "exp" and self.omega_offset < 0.0:
            errors["gains.omega_offset"] = "exp omega needs a non-negative offset"
        if not self.v_floor > 0.0:
            errors["gains.v_floor"] = "v_floor must be positive"
        if errors:
            raise ValidationError(errors)
        object.__setattr__(self, "_Gamma_inv", np.linalg.inv(G))

    @property
    def Gamma_inv(self):
        return self._Gamma_inv

    def omega(self, rho):
        if self.omega_kind == "arctan":
            return 0.5 * math.pi + math.atan(self.omega_scale * rho)
        return math.exp(self.omega_scale * rho) + self.omega_offset

    def omega_rho(self, rho):
        k = self.omega_scale
        if self.omega_kind == "arctan":
            return k / (1.0 + (k * rho) ** 2)
        return k * math.exp(k * rho)

    def scaled(self, alpha):
        return GainConfig(
            Gamma=alpha * self.Gamma,
            r=self.r,
            epsilon=self.epsilon,
            omega_kind=self.omega_kind,
            omega_scale=self.omega_scale,
            omega_offset=self.omega_offset,
            v_floor=self.v_floor,
        )


@dataclass(frozen=True)
class EstimatorState:
    theta_hat: np.ndarray
    rho: float = 0.0
    a_hat: Optional[np.ndarray] = None


def sign(v):
    return float(v > 0) - float(v < 0)


def _check(x, theta_hat, *arrays):
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise NonFiniteUpdate(x, theta_hat)


# -- scalar laws ------------------------------------------------------------


def standard_update(regressor, grad_x, Gamma):
    """Classical gradient law ``Gamma Delta(x) (dV/dx)^T``."""
    return Gamma @ (regressor @ grad_x)


def scalar_normalized_update(x, gamma, r):
    """``gamma sign(x) (x^2 + |x|^{2/r})``; zero at the origin."""
    if r < 1.0 or gamma <= 0.0:
        raise ValidationError({"gains": "need r >= 1 and gamma > 0"})
    ax = abs(x)
    return gamma * sign(x) * (x * x + ax ** (2.0 / r))


def limiting_form_update(x, gamma, style):
    """r -> infinity limit of the scalar normalized laws.

    ``nonsmooth`` belongs to ``xdot = theta |x| + u``:
    ``gamma sign(x) (x^2 + 1[x != 0])``.  ``smooth-cubic`` belongs to
    ``xdot = theta x^2 + u``: ``gamma (x^3 + x)``.
    """
    if style == "nonsmooth":
        return gamma * sign(x) * (x * x + (1.0 if x != 0 else 0.0))
    if style == "smooth-cubic":
        return gamma * (x * x * x + x)
    raise ValidationError({"estimator.style": f"unknown limiting style {style!r}"})


# -- normalized law with rho modulation ------------------------------------


def normalized_rates(V, grad_x, grad_theta, regressor, rho, cfg, param_dependent):
    """Core of the normalized law on precomputed CLF terms; returns ``(dtheta, drho)``."""
    Vt = max(V, cfg.v_floor)
    inv_r = 1.0 / cfg.r
    w = cfg.omega(rho) * Vt ** (inv_r - 1.0)
    dtheta = w * (cfg.Gamma @ (regressor @ grad_x))
    if not param_dependent:
        return dtheta, 0.0
    denom = cfg.omega_rho(rho) * (cfg.r * Vt**inv_r + cfg.epsilon)
    drho = -(w / denom) * float(grad_theta @ dtheta)
    return dtheta, drho


def normalized_update(sys, clf, state, x, cfg):
    """``(dtheta_hat/dt, drho/dt)`` of the rho-modulated normalized law."""
    V, gx, gth = clf.evaluate(x, state.theta_hat)
    dtheta, drho = normalized_rates(V, gx, gth, sys.regressor(x), state.rho, cfg, clf.param_dependent)
    _check(x, state.theta_hat, dtheta, [drho])
    return dtheta, drho


def momentum_rates(V, grad_x, grad_theta, regressor, P, theta_hat, a_hat, rho, cfg, lam, param_dependent):
    """Core of the momentum law; returns ``(da_hat, dtheta_hat, drho)``."""
    Vt = max(V, cfg.v_floor)
    inv_r = 1.0 / cfg.r
    w = cfg.omega(rho) * Vt ** (inv_r - 1.0)
    da = w * (cfg.Gamma @ (regressor @ grad_x))
    dtheta = (w / lam) * (cfg.Gamma @ (regressor @ (P @ (regressor.T @ (a_hat - theta_hat)))))
    if not param_dependent:
        return da, dtheta, 0.0
    denom = cfg.omega_rho(rho) * (cfg.r * Vt**inv_r + cfg.epsilon)
    drho = -(w / denom) * float(grad_theta @ dtheta)
    return da, dtheta, drho


def momentum_update(sys, clf, state, x, cfg, lam):
    """``(da_hat/dt, dtheta_hat/dt, drho/dt)`` of the momentum law.

    Needs a CLF of the form ``V = 0.5 x^T P(theta_hat) x``; the theta_hat
    equation uses ``P`` evaluated at the current estimate.
    """
    if state.a_hat is None:
        raise MissingAuxState("momentum law needs a_hat in the estimator state")
    if not clf.is_quadratic:
        raise ValidationError({"clf": "momentum law needs a quadratic-form CLF"})
    V, gx, gth = clf.evaluate(x, state.theta_hat)
    out = momentum_rates(
        V, gx, gth, sys.regressor(x), clf.quad_matrix(state.theta_hat),
        state.theta_hat, state.a_hat, state.rho, cfg, lam, clf.param_dependent,
    )
    _check(x, state.theta_hat, out[0], out[1], [out[2]])
    return out


ESTIMATORS = ("standard", "scalar_normalized", "normalized", "momentum", "limiting")
