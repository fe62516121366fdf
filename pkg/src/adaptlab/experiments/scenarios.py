"""The shipped scenario configs (S0 to S3 plus the momentum variant of S1)."""

from importlib import resources

from ..errors import ValidationError
from .config import parse_config

SCENARIOS = ("s0", "s1", "s1_momentum", "s2", "s3")


def scenario_text(name):
    if name not in SCENARIOS:
        raise ValidationError({"scenario": f"unknown built-in scenario {name!r}"})
    return resources.files(__package__).joinpath("configs", f"{name}.ini").read_text(encoding="utf-8")


def builtin_config(name):
    return parse_config(scenario_text(name))


def scenario_path(name):
    """Filesystem path of a shipped config (for the CLI's --config)."""
    scenario_text(name)
    return str(resources.files(__package__).joinpath("configs", f"{name}.ini"))
