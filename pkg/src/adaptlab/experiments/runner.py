"""Run scenarios, sweeps and law comparisons; write CSV, config echo and summaries."""

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .. import metrics
from ..clf import vanishing_degree_probe
from ..errors import ValidationError
from ..simulation import simulate
from .config import render_config
from .io import csv_text, read_csv, trajectory_csv, write_text
from .svg import decimate, line_plot

CONVERGENCE_LEVEL = 1e-3
PROBE_FRACTIONS = (0.25, 0.5, 0.75, 1.0)
SWEEP_PARAMS = ("r", "gamma", "lambda")
LAW_OPTIONS = ("r", "gamma", "epsilon")


@dataclass(frozen=True)
class RunArtifact:
    config_echo: str
    csv_path: str
    summary: dict
    trajectory: object = None


def summarize(traj, r):
    """Headline numbers of one run; NaN-free except where a quantity is undefined."""
    total, tail = metrics.r_root_integral(traj.times, traj.x, r) if traj.times.size > 1 else (0.0, 0.0)
    q = traj.Q
    if q.size > 1 and np.all(np.isfinite(q)):
        tol = metrics.q_tolerance(float(q[0]), float(traj.times[1] - traj.times[0]))
        max_violation = metrics.monotonicity_report(q, tol)[0]
    else:
        max_violation = None
    return {
        "terminated": traj.terminated,
        "error": traj.error,
        "t_end": float(traj.times[-1]) if traj.times.size else 0.0,
        "convergence_time": metrics.convergence_time(traj.times, traj.x, CONVERGENCE_LEVEL) if traj.times.size else None,
        "r_root_integral": total,
        "tail_fraction": tail,
        "max_Q_violation": max_violation,
    }


def run_scenario(cfg, out_dir=None, stem=None):
    """Simulate ``cfg``; with ``out_dir`` also write ``<stem>.csv/.ini/.json``."""
    traj = simulate(cfg.build())
    summary = summarize(traj, cfg.r)
    echo = render_config(cfg)
    csv_path = None
    if out_dir is not None:
        stem = stem or cfg.name
        os.makedirs(out_dir, exist_ok=True)
        csv_path = os.path.join(out_dir, f"{stem}.csv")
        write_text(csv_path, trajectory_csv(traj))
        write_text(os.path.join(out_dir, f"{stem}.ini"), echo)
        write_text(os.path.join(out_dir, f"{stem}.json"), json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return RunArtifact(config_echo=echo, csv_path=csv_path, summary=summary, trajectory=traj)


def probe_times(t_final):
    return [f * t_final for f in PROBE_FRACTIONS]


def value_at(traj, t):
    """V at time ``t``; a run that stopped as converged holds its last value."""
    if traj.times.size == 0:
        return math.nan
    if t <= traj.times[-1]:
        return float(np.interp(t, traj.times, traj.V))
    return float(traj.V[-1]) if traj.terminated == "converged" else math.nan


def sweep_config(cfg, param, value):
    if param == "r":
        return cfg.with_updates(r=float(value))
    if param == "gamma":
        p = len(cfg.theta_true)
        return cfg.with_updates(gamma=tuple(tuple(float(value) if i == j else 0.0 for j in range(p)) for i in range(p)))
    if param == "lambda":
        return cfg.with_updates(lam=float(value))
    raise ValidationError({"param": f"sweep parameter must be one of {SWEEP_PARAMS}"})


def _comparison(cfg, label_name, runs, out_dir, name):
    times = probe_times(cfg.t_final)
    header = [label_name, "terminated", "convergence_time"] + [f"V@{t:g}" for t in times]
    rows = []
    for label, art, err in runs:
        if art is None:
            rows.append([label, err, "nan"] + ["nan"] * len(times))
            continue
        ct = art.summary["convergence_time"]
        rows.append([label, art.summary["terminated"], math.nan if ct is None else ct] + [value_at(art.trajectory, t) for t in times])
    text = csv_text(header, rows)
    path = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, name)
        write_text(path, text)
    return header, rows, path


def sweep(cfg, param, values, out_dir=None):
    """One run per value; errors are recorded per run and do not stop the sweep.

    Returns ``(artifacts, errors, comparison_path)`` where ``errors`` maps the
    value label to the ValidationError raised for it.
    """
    if param not in SWEEP_PARAMS:
        raise ValidationError({"param": f"sweep parameter must be one of {SWEEP_PARAMS}"})
    runs, errors, artifacts = [], {}, []
    for value in values:
        label = f"{float(value):g}"
        try:
            member = sweep_config(cfg, param, value)
            art = run_scenario(member, out_dir, stem=f"{cfg.name}_{param}={label}")
        except ValidationError as exc:
            errors[label] = exc
            runs.append((label, None, "invalid"))
            continue
        artifacts.append(art)
        runs.append((label, art, None))
    _, _, path = _comparison(cfg, param, runs, out_dir, f"{cfg.name}_sweep_{param}.csv")
    return artifacts, errors, path


def parse_law(spec):
    """``name[:key=value[:key=value]]`` with keys from LAW_OPTIONS."""
    parts = spec.strip().split(":")
    name, options = parts[0], {}
    for part in parts[1:]:
        key, sep, raw = part.partition("=")
        if not sep or key not in LAW_OPTIONS:
            raise ValidationError({"laws": f"bad law option {part!r} in {spec!r}"})
        try:
            options[key] = float(raw)
        except ValueError:
            raise ValidationError({"laws": f"bad value {raw!r} in {spec!r}"}) from None
    return name, options


def law_config(cfg, spec):
    name, options = parse_law(spec)
    out = cfg.with_updates(estimator=name)
    if name == "momentum" and out.a_hat0 is None:
        out = out.with_updates(a_hat0=out.theta_hat0)
    if name != "momentum":
        out = out.with_updates(a_hat0=None)
    for key, value in options.items():
        out = out.with_updates(epsilon=value) if key == "epsilon" else sweep_config(out, key, value)
    return out


def compare(cfg, laws, out_dir=None):
    """Same scenario under several estimation laws; isolated like ``sweep``."""
    runs, errors, artifacts = [], {}, []
    for spec in laws:
        label = spec.strip().replace(":", "_")
        try:
            member = law_config(cfg, spec)
            art = run_scenario(member, out_dir, stem=f"{cfg.name}_{label}")
        except ValidationError as exc:
            errors[spec] = exc
            runs.append((spec, None, "invalid"))
            continue
        artifacts.append(art)
        runs.append((spec, art, None))
    _, _, path = _comparison(cfg, "law", runs, out_dir, f"{cfg.name}_compare.csv")
    return artifacts, errors, path


def probe_thetas(loop):
    thetas = [loop.theta_hat0, loop.theta_true]
    if loop.clf.theta_box is not None:
        lo, hi = loop.clf.theta_box
        thetas += [lo, hi, 0.5 * (lo + hi)]
    return thetas


def probe_vd(cfg, r_list, out_dir=None):
    """Vanishing-degree verdicts of the config's system and CLF for each r."""
    loop = cfg.build()
    thetas = probe_thetas(loop)
    verdicts = [vanishing_degree_probe(loop.sys, loop.clf, thetas, float(r)) for r in r_list]
    rows = [[v.r_tested, "true" if v.finite else "false", v.sup_observed] for v in verdicts]
    text = csv_text(["r", "finite", "sup_observed"], rows)
    path = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, f"{cfg.name}_probe_vd.csv")
        write_text(path, text)
    return verdicts, text, path


def plot_csvs(paths, columns, log_y=False):
    """SVG text with one polyline per (file, column)."""
    if not columns:
        raise ValidationError({"columns": "select at least one column"})
    series = []
    for path in paths:
        header, data = read_csv(path)
        if "t" not in header:
            raise ValidationError({"csv": f"{path} has no t column"})
        stem = os.path.splitext(os.path.basename(path))[0]
        for col in columns:
            if col not in header:
                raise ValidationError({"columns": f"{path} has no column {col!r}"})
            t, y = decimate(data[:, header.index("t")], data[:, header.index(col)])
            label = stem if len(columns) == 1 else f"{stem} {col}"
            series.append((label, t, y))
    y_label = ("log10 " if log_y else "") + ", ".join(columns)
    return line_plot(series, log_y=log_y, y_label=y_label)
