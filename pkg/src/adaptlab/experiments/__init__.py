"""Scenario configs, runners, CSV/SVG output and the command line."""

from .config import ScenarioConfig, load_config, parse_config, render_config
from .runner import RunArtifact, compare, plot_csvs, probe_vd, run_scenario, summarize, sweep
from .scenarios import SCENARIOS, builtin_config, scenario_path

__all__ = [
    "ScenarioConfig",
    "RunArtifact",
    "SCENARIOS",
    "builtin_config",
    "compare",
    "load_config",
    "parse_config",
    "plot_csvs",
    "probe_vd",
    "render_config",
    "run_scenario",
    "scenario_path",
    "summarize",
    "sweep",
]
