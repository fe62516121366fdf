"""Control Lyapunov functions and the numeric vanishing-degree probe."""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.stats import qmc

from .dynamics import PARAMETER_BOXES, TrueParameters, example2_phi1
from .errors import DegenerateTransform, NotPositiveDefinite, ProbeDomainError

PD_TOL = 1e-10
THETA2_FLOOR = 0.1


@dataclass(frozen=True)
class Clf:
    """``V(x, theta_hat)`` with both gradients and the quadratic-bound constants.

    ``evaluate`` returns ``(V, dV/dx, dV/dtheta)`` in one call; the single-output
    accessors are thin wrappers around it.  ``quad_matrix``, when present,
    returns ``P(theta_hat)`` such that ``V = 0.5 x^T P x``.
    """

    name: str
    evaluate: Callable
    c1: float
    c2: float
    lam: float
    param_dependent: bool
    state_dim: int
    param_dim: int
    quad_matrix: Optional[Callable] = None
    state_box: float = 10.0
    theta_box: Optional[tuple] = field(default=None)

    def value(self, x, theta_hat):
        return self.evaluate(x, theta_hat)[0]

    def grad_x(self, x, theta_hat):
        return self.evaluate(x, theta_hat)[1]

    def grad_theta(self, x, theta_hat):
        return self.evaluate(x, theta_hat)[2]

    @property
    def is_quadratic(self):
        return self.quad_matrix is not None


def _check_spd(Pinv):
    Pinv = np.asarray(Pinv, dtype=float)
    if Pinv.ndim != 2 or Pinv.shape[0] != Pinv.shape[1]:
        raise NotPositiveDefinite("matrix must be square")
    if not np.allclose(Pinv, Pinv.T, rtol=0, atol=1e-12 * max(1.0, np.abs(Pinv).max())):
        raise NotPositiveDefinite("matrix must be symmetric")
    eig = np.linalg.eigvalsh(Pinv)
    if eig[0] <= PD_TOL:
        raise NotPositiveDefinite(f"minimum eigenvalue {eig[0]:.3e} <= {PD_TOL}")
    return 0.5 * (Pinv + Pinv.T), eig


def make_quadratic_clf(Pinv, lam, param_dim=1, scale=1.0):
    """``V(x) = scale * x^T Pinv x``; independent of the parameter estimate.

    ``scale=0.5`` gives the ``0.5 x^T P x`` convention; the default matches
    the ``x^T P^{-1} x`` form.
    """
    Pinv, eig = _check_spd(Pinv)
    n = Pinv.shape[0]
    M = 2.0 * scale * Pinv
    zeros = np.zeros(param_dim)

    def evaluate(x, theta_hat):
        Mx = M @ x
        return 0.5 * float(x @ Mx), Mx, zeros

    return Clf(
        name="quadratic",
        evaluate=evaluate,
        c1=scale * float(eig[0]),
        c2=scale * float(eig[-1]),
        lam=float(lam),
        param_dependent=False,
        state_dim=n,
        param_dim=param_dim,
        quad_matrix=lambda theta_hat: M,
    )


def sampled_bounds(evaluate, n, state_box, theta_lo, theta_hi, log2_samples=14, relax=2.0, seed=0):
    """Estimate ``c1, c2`` from ``V / ||x||^2`` over a low-discrepancy sample.

    States are box points shrunk by a log-uniform factor in [1e-3, 1] so the
    neighbourhood of the origin is represented.  Bounds are relaxed by
    ``relax`` in each direction.
    """
    theta_lo = np.asarray(theta_lo, dtype=float)
    theta_hi = np.asarray(theta_hi, dtype=float)
    p = theta_lo.size
    u = qmc.Sobol(n + p + 1, scramble=True, seed=seed).random_base2(log2_samples)
    ratios = []
    for row in u:
        x = state_box * (2.0 * row[:n] - 1.0) * 10.0 ** (-3.0 * row[n])
        th = theta_lo + (theta_hi - theta_lo) * row[n + 1 :]
        nx2 = float(x @ x)
        if nx2 == 0.0:
            continue
        ratios.append(evaluate(x, th)[0] / nx2)
    ratios = np.array(ratios)
    return float(ratios.min()) / relax, float(ratios.max()) * relax


def _estimate_box(system, theta_lo, theta_hi, factor=1.5):
    if theta_lo is not None and theta_hi is not None:
        return np.asarray(theta_lo, dtype=float), np.asarray(theta_hi, dtype=float)
    lo, hi = PARAMETER_BOXES[system]
    box = TrueParameters(0.5 * (np.array(lo) + np.array(hi)), np.array(lo), np.array(hi))
    return box.inflated(factor)


def make_backstepping_clf(lam, theta_lo=None, theta_hi=None, state_box=10.0):
    """Backstepping CLF for the strict-feedback plant (two states, four parameters).

    ``V = 0.5 x1^2 + 0.5 (x2 + theta_hat^T phi1(x1) + lam x1)^2``.  The bound
    constants are sampled over the estimate box, by default the admissible
    parameter box inflated by 50%.
    """
    lam = float(lam)
    theta_lo, theta_hi = _estimate_box("example2", theta_lo, theta_hi)

    def evaluate(x, theta_hat):
        x1, x2 = x[0], x[1]
        s1, c1_, a1 = np.sin(x1), np.cos(x1), np.arctan(x1)
        z = x2 + theta_hat[0] * s1 + theta_hat[1] * a1 + lam * x1
        dz_dx1 = theta_hat[0] * c1_ + theta_hat[1] / (1.0 + x1 * x1) + lam
        V = 0.5 * x1 * x1 + 0.5 * z * z
        gx = np.array([x1 + z * dz_dx1, z])
        gth = np.array([z * s1, z * a1, 0.0, 0.0])
        return V, gx, gth

    c1, c2 = sampled_bounds(evaluate, 2, state_box, theta_lo, theta_hi)
    return Clf(
        name="backstepping",
        evaluate=evaluate,
        c1=c1,
        c2=c2,
        lam=lam,
        param_dependent=True,
        state_dim=2,
        param_dim=4,
        state_box=state_box,
        theta_box=(theta_lo, theta_hi),
    )


def backstepping_z(x, theta_hat, lam):
    return x[1] + theta_hat @ example2_phi1(x[0]) + lam * x[0]


def fl_transform(x, theta_hat):
    """Feedback-linearizing coordinates of the flexible-joint manipulator and their Jacobians."""
    x1, x2, x3, x4 = x
    t1, t2 = theta_hat[0], theta_hat[1]
    s, c = np.sin(x1), np.cos(x1)
    psi = np.array([x1, x2, t1 * s + t2 * (x3 - x1), t1 * x2 * c + t2 * (x4 - x2)])
    jx = np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [t1 * c - t2, 0.0, t2, 0.0],
            [-t1 * x2 * s, t1 * c - t2, 0.0, t2],
        ]
    )
    jth = np.array(
        [
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
            [s, x3 - x1, 0.0, 0.0],
            [x2 * c, x4 - x2, 0.0, 0.0],
        ]
    )
    return psi, jx, jth


def make_feedback_linearization_clf(Pinv, lam, theta_lo=None, theta_hi=None, state_box=10.0, theta2_floor=THETA2_FLOOR):
    """``V = Psi(x, theta_hat)^T Pinv Psi(x, theta_hat)`` for the manipulator.

    Psi is only a diffeomorphism while ``theta_hat[1] > 0``; evaluation raises
    DegenerateTransform once ``|theta_hat[1]|`` drops under ``theta2_floor``.
    """
    Pinv, _ = _check_spd(Pinv)
    if Pinv.shape != (4, 4):
        raise NotPositiveDefinite("Pinv must be 4x4")
    M = 2.0 * Pinv
    theta_lo, theta_hi = _estimate_box("example3", theta_lo, theta_hi)
    theta_lo = theta_lo.copy()
    theta_lo[1] = max(theta_lo[1], theta2_floor)

    def evaluate(x, theta_hat):
        if abs(theta_hat[1]) < theta2_floor:
            raise DegenerateTransform(f"|theta_hat[1]| = {abs(theta_hat[1]):.3g} below floor {theta2_floor}")
        psi, jx, jth = fl_transform(x, theta_hat)
        w = M @ psi
        return 0.5 * float(psi @ w), w @ jx, w @ jth

    c1, c2 = sampled_bounds(evaluate, 4, state_box, theta_lo, theta_hi)
    return Clf(
        name="feedback_linearization",
        evaluate=evaluate,
        c1=c1,
        c2=c2,
        lam=float(lam),
        param_dependent=True,
        state_dim=4,
        param_dim=4,
        state_box=state_box,
        theta_box=(theta_lo, theta_hi),
    )


# -- vanishing degree ------------------------------------------------------


@dataclass(frozen=True)
class VanishingDegreeVerdict:
    r_tested: float
    finite: bool
    sup_observed: float
    scales: np.ndarray
    # probe values, shape (n_theta, n_directions, n_scales)
    values: np.ndarray = field(repr=False, default=None)


def default_directions(n, count=16, seed=0):
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((count, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return np.vstack([np.eye(n), d])


def default_scales(count=8, start=1e-1, stop=1e-5):
    return np.geomspace(start, stop, count)


def probe_value(sys, clf, x, theta_hat, r):
    """``|| V^{1/r - 1} dV/dx Delta(x)^T ||_inf`` at one point."""
    V, gx, _ = clf.evaluate(x, theta_hat)
    if V <= 0.0:
        raise ProbeDomainError(f"V = {V} at nonzero probe point {np.asarray(x).tolist()}")
    row = (gx @ sys.regressor(x).T) * V ** (1.0 / r - 1.0)
    return float(np.max(np.abs(row)))


def vanishing_degree_probe(sys, clf, theta_samples, r, directions=None, scales=None):
    """Discretised test of whether ``V^{1/r-1} dV/dx Delta^T`` stays bounded as ``x -> 0``.

    For every parameter sample and direction, the sequence over decreasing
    scales must stay below ``max(10 g(first), 1)`` and its last value must not
    exceed twice the median of the last three.
    """
    if directions is None:
        directions = default_directions(sys.state_dim)
    if scales is None:
        scales = default_scales()
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    scales = np.asarray(scales, dtype=float)
    if np.any(scales <= 0) or np.any(np.diff(scales) >= 0):
        raise ValueError("scales must be positive and strictly decreasing")
    if not np.allclose(np.linalg.norm(directions, axis=1), 1.0, atol=1e-12):
        raise ValueError("directions must have unit norm")
    thetas = [np.asarray(t, dtype=float) for t in theta_samples]
    values = np.empty((len(thetas), len(directions), len(scales)))
    finite = True
    for i, th in enumerate(thetas):
        for j, d in enumerate(directions):
            for k, s in enumerate(scales):
                values[i, j, k] = probe_value(sys, clf, s * d, th, r)
            seq = values[i, j]
            if not np.all(np.isfinite(seq)):
                finite = False
                continue
            bounded = np.all(seq <= max(10.0 * seq[0], 1.0))
            settled = seq[-1] <= 2.0 * np.median(seq[-3:])
            finite = finite and bool(bounded and settled)
    sup = float(values.max()) if np.all(np.isfinite(values)) else np.inf
    return VanishingDegreeVerdict(r_tested=float(r), finite=finite, sup_observed=sup, scales=scales, values=values)
