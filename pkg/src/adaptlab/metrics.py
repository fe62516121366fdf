"""Lyapunov monitors and trajectory statistics.

The Q functions need the true parameter vector, so they are diagnostics for
simulations only, never controller inputs.
"""

import numpy as np
from scipy.integrate import cumulative_trapezoid


def q_prop1(x, theta_hat, theta, gamma, r):
    """``x^2 + r |x|^{2/r} + (theta_hat - theta)^2 / gamma``."""
    err = theta_hat - theta
    return x * x + r * abs(x) ** (2.0 / r) + err * err / gamma


def _quad(err, Gamma_inv):
    return 0.5 * float(err @ Gamma_inv @ err)


def q_standard(V, theta_hat, theta, Gamma_inv):
    """``V + 0.5 e^T Gamma^{-1} e`` with ``e = theta_hat - theta``."""
    return V + _quad(np.asarray(theta_hat) - theta, Gamma_inv)


def q_thm1(V, theta_hat, rho, theta, cfg):
    """``omega(rho) (r V^{1/r} + eps) + 0.5 e^T Gamma^{-1} e``."""
    return cfg.omega(rho) * (cfg.r * V ** (1.0 / cfg.r) + cfg.epsilon) + _quad(np.asarray(theta_hat) - theta, cfg.Gamma_inv)


def q_thm3(V, a_hat, theta_hat, rho, theta, cfg):
    """Momentum monitor: the normalized part plus quadratic terms in ``a_hat - theta`` and ``theta_hat - a_hat``."""
    a_hat = np.asarray(a_hat)
    return (
        cfg.omega(rho) * (cfg.r * V ** (1.0 / cfg.r) + cfg.epsilon)
        + _quad(a_hat - theta, cfg.Gamma_inv)
        + _quad(np.asarray(theta_hat) - a_hat, cfg.Gamma_inv)
    )


def monotonicity_report(values, tol_per_step):
    """Largest step increase beyond ``tol_per_step`` (clipped at 0) and where it happens.

    Index ``k`` in the result flags the step from ``values[k]`` to ``values[k+1]``.
    """
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return 0.0, np.zeros(0, dtype=int)
    excess = np.diff(values) - tol_per_step
    bad = np.flatnonzero(excess > 0.0)
    return (float(excess.max()) if bad.size else 0.0), bad


def q_tolerance(q0, dt):
    """Per-step slack for a provably non-increasing Q sampled from an RK4 run."""
    return max(1e-8, 10.0 * dt * dt * q0)


def _norms(x):
    x = np.asarray(x, dtype=float)
    return np.abs(x) if x.ndim == 1 else np.linalg.norm(x, axis=1)


def partial_r_root_integrals(times, x, r):
    """Cumulative trapezoid of ``||x(t)||^{2/r}``; first entry is 0."""
    integrand = _norms(x) ** (2.0 / r)
    return cumulative_trapezoid(integrand, np.asarray(times, dtype=float), initial=0.0)


def r_root_integral(times, x, r):
    """``(integral over [0, T], share of it collected on [T/2, T])``.

    The share is defined as 0 when the whole integral vanishes.
    """
    times = np.asarray(times, dtype=float)
    partial = partial_r_root_integrals(times, x, r)
    total = float(partial[-1])
    if total == 0.0:
        return 0.0, 0.0
    half = np.interp(0.5 * (times[0] + times[-1]), times, partial)
    return total, float((total - half) / total)


def convergence_time(times, x, level):
    """First sample time after which ``||x||`` stays below ``level``; None if it never settles."""
    if level <= 0:
        raise ValueError("level must be positive")
    above = np.flatnonzero(_norms(x) >= level)
    if above.size == 0:
        return float(times[0])
    last = above[-1]
    if last + 1 >= len(times):
        return None
    return float(times[last + 1])
