"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` (the lines are repeated
in an "acceptance criteria" section of the summary) or as a script with
``python tests/test_acceptance.py``.
"""

import math
import sys
import time

import numpy as np
import pytest

from adaptlab import metrics
from adaptlab.clf import make_quadratic_clf, vanishing_degree_probe
from adaptlab.clf_synthesis import annihilator, solve_lyapunov, synthesize_P
from adaptlab.controllers import min_norm_control, scalar_example_control
from adaptlab.dynamics import EXAMPLE1_A, EXAMPLE1_B, eval_plant, make_scalar_custom, make_scalar_example
from adaptlab.experiments import builtin_config, sweep
from adaptlab.experiments.io import trajectory_csv
from adaptlab.experiments.runner import probe_thetas
from adaptlab.simulation import rk4_step, simulate

from conftest import ACCEPTANCE_LINES, PAIR_NAMES, sample_point, system_clf_pair
from oracles import brute_force_min_norm
from regen_goldens import GOLDEN_SCENARIOS, read_golden

_RUNS = {}


def full_run(name):
    """Shipped scenario run, cached across criteria."""
    if name not in _RUNS:
        _RUNS[name] = simulate(builtin_config(name))
    return _RUNS[name]


def report(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} -- {detail}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    assert ok, line


def test_criterion_01_decay_ordering_in_r():
    start = time.perf_counter()
    arts, errors, _ = sweep(builtin_config("s0"), "r", [1, 2, 4, 8, 16])
    elapsed = time.perf_counter() - start
    v10 = [float(np.interp(10.0, a.trajectory.times, a.trajectory.V)) for a in arts]
    x20 = [abs(a.trajectory.x[-1, 0]) for a in arts]
    decreasing = all(b < a for a, b in zip(v10, v10[1:]))
    ratio = x20[0] / x20[-1] if x20[-1] > 0 else math.inf
    ok = not errors and decreasing and ratio >= 10 and elapsed < 5.0 and all(a.trajectory.times[-1] == 20.0 for a in arts)
    detail = f"V(10)={['%.2e' % v for v in v10]}, |x(20)| r=1/r=16 ratio {ratio:.2e}, {elapsed:.2f}s"
    report(1, "faster decay for larger r", ok, detail)


def test_criterion_02_q_monotonicity():
    start = time.perf_counter()
    worst = {}
    for name in ("s0", "s1", "s2", "s1_momentum"):
        traj = full_run(name)
        dt = float(traj.times[1] - traj.times[0])
        worst[name] = metrics.monotonicity_report(traj.Q, metrics.q_tolerance(float(traj.Q[0]), dt))[0]
    elapsed = time.perf_counter() - start
    ok = all(v == 0.0 for v in worst.values()) and elapsed < 30.0
    detail = ", ".join(f"{k} max violation {v:.3g}" for k, v in worst.items()) + f", {elapsed:.1f}s"
    report(2, "Q monotone along S0, S1, S2 and momentum S1", ok, detail)


def test_criterion_03_integrability():
    traj = simulate(builtin_config("s1").with_updates(conv_tol=0.0))
    partial = metrics.partial_r_root_integrals(traj.times, traj.x, 8)
    total, tail = metrics.r_root_integral(traj.times, traj.x, 8)
    t = np.linspace(0.0, 20.0, 20001)
    _, control_tail = metrics.r_root_integral(t, 1.0 / (t + 1.0), 2)
    ok = bool(np.all(np.diff(partial) >= 0)) and tail < 0.2 and control_tail >= 0.3 and traj.times[-1] == 20.0
    detail = f"S1 integral {total:.4f}, tail fraction {tail:.4f}; control 1/(t+1) tail fraction {control_tail:.4f} (needs >= 0.3)"
    report(3, "r-th-root integrability and control", ok, detail)


def test_criterion_04_min_norm_optimality():
    rng = np.random.default_rng(2024)
    worst_gap, worst_slack = 0.0, math.inf
    for name in PAIR_NAMES:
        sys_, clf = system_clf_pair(name)
        for _ in range(1000):
            x, th = sample_point(rng, sys_, clf)
            d = min_norm_control(sys_, clf, x, th)
            u_star = brute_force_min_norm(d.drift_rate, d.input_gain, clf.value(x, th), clf.lam)
            worst_gap = max(worst_gap, float(np.linalg.norm(d.u - u_star)))
            worst_slack = min(worst_slack, d.constraint_slack)
    ok = worst_gap <= 1e-6 and worst_slack >= -1e-9
    report(4, "min-norm vs brute force", ok, f"max |u-u*| {worst_gap:.2e}, min slack {worst_slack:.2e}")


def test_criterion_05_finsler_certificate():
    cert = synthesize_P(EXAMPLE1_A, EXAMPLE1_B, 1.0)
    Bp = annihilator(EXAMPLE1_B)
    ann = max(np.abs(Bp @ EXAMPLE1_B).max(), np.abs(Bp @ Bp.T - np.eye(3)).max())
    M = EXAMPLE1_A + EXAMPLE1_B @ cert.K + 0.5 * np.eye(4)
    P = solve_lyapunov(M, np.eye(4))
    lyap = np.abs(M @ P + P @ M.T + np.eye(4)).max()
    ok = cert.max_eig_residual <= 1e-8 and ann <= 1e-12 and lyap <= 1e-9
    report(5, "Finsler certificate for Example 1", ok, f"max certificate eigenvalue {cert.max_eig_residual:.3g}, annihilator {ann:.1e}, Lyapunov {lyap:.1e}")


def test_criterion_06_vanishing_degree():
    r_all = [1, 2, 4, 8, 16, 32]
    quad3 = make_quadratic_clf([[1.0]], 1.0, param_dim=3)
    quad4 = make_quadratic_clf([[1.0]], 1.0, param_dim=4)
    smooth = make_scalar_custom(("sin", "id", "sq"))
    with_cos = make_scalar_custom(("sin", "id", "sq", "cos"))
    a = all(vanishing_degree_probe(smooth, quad3, [np.zeros(3)], r).finite for r in r_all)
    b2 = vanishing_degree_probe(with_cos, quad4, [np.zeros(4)], 2).finite
    b4 = vanishing_degree_probe(with_cos, quad4, [np.zeros(4)], 4).finite
    examples = {}
    for name in ("s1", "s2", "s3"):
        loop = builtin_config(name).build()
        examples[name] = all(vanishing_degree_probe(loop.sys, loop.clf, probe_thetas(loop), r).finite for r in r_all)
    ok = a and b2 and not b4 and all(examples.values())
    detail = f"(sin,x,x^2) finite to 32: {a}; with cos r=2 {b2}, r=4 {b4}; examples {examples}"
    report(6, "vanishing-degree verdicts", ok, detail)


def test_criterion_07_known_parameter_loop():
    sys_ = make_scalar_example()
    theta = np.array([1.0])

    def rhs(t, s):
        return eval_plant(sys_, s, theta, np.array([scalar_example_control(s[0], theta[0])]))

    s, dt = np.array([1.0]), 1e-4
    for k in range(10000):
        s = rk4_step(rhs, s, k * dt, dt)
    rel = abs(0.5 * s[0] ** 2 / (0.5 * math.exp(-1.0)) - 1.0)
    report(7, "known-parameter exponential decay", rel < 1e-6, f"relative error at t=1 {rel:.2e}")


def test_criterion_08_step_halving():
    details, ok = [], True
    for name in GOLDEN_SCENARIOS:
        base = builtin_config(name).with_updates(t_final=5.0, conv_tol=0.0)
        ends = []
        for dt in (1e-3, 5e-4, 2.5e-4):
            traj = simulate(base.with_updates(dt=dt))
            ends.append(traj.x[-1] if traj.times[-1] == 5.0 else np.full(traj.layout.n, np.nan))
        e1 = float(np.linalg.norm(ends[0] - ends[1]))
        e2 = float(np.linalg.norm(ends[1] - ends[2]))
        passed = e1 <= 16 * e2 + 1e-10
        ok = ok and passed
        details.append(f"{name} {e1:.1e}/{e2:.1e}")
    report(8, "step-halving contraction", ok, ", ".join(details))


def test_criterion_09_boundedness():
    details, ok = [], True
    for name in ("s0", "s1", "s1_momentum", "s2", "s3"):
        traj = full_run(name)
        s0 = np.linalg.norm(traj.states[0])
        sup = max(np.abs(traj.x).max(), np.linalg.norm(traj.theta_hat, axis=1).max(), np.abs(traj.rho).max())
        passed = traj.terminated != "non_finite" and np.all(np.isfinite(traj.states)) and sup < 1e3 * s0
        ok = ok and passed
        details.append(f"{name} {traj.terminated} sup {sup:.3g}")
    report(9, "bounded closed-loop signals", ok, ", ".join(details))


def test_criterion_10_golden_determinism():
    mismatched = [name for name in GOLDEN_SCENARIOS if trajectory_csv(full_run(name)) != read_golden(name)]
    report(10, "golden CSVs reproduce bit for bit", not mismatched, f"mismatched: {mismatched or 'none'}")


def test_floor_only_engages_in_terminal_tail():
    for name in ("s1", "s2", "s3"):
        traj = full_run(name)
        loop = builtin_config(name).build()
        vf = loop.gains.v_floor
        floor_hit = traj.V < vf
        far = np.linalg.norm(traj.x, axis=1) > 10 * math.sqrt(vf / loop.clf.c1)
        assert not np.any(floor_hit & far), name


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
