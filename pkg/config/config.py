"""
Configuration Settings
=====================
Central configuration for the pseudo-differential operator kernel and its CLI.
"""

import logging
import os
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional

import yaml
from dotenv import load_dotenv

from models.errors import ConfigError

logger = logging.getLogger(__name__)

# Application Configuration
APP_CONFIG = {
    "name": "psdo",
    "version": "1.0.0",
    "description": "Formal pseudo-differential operators over iterated Laurent series",
}

# Session defaults (overridden by config file, environment and flags)
SESSION_DEFAULTS = {
    "n": 1,
    "xmax": [8],
    "dfloor": [-6],
    "seed": 0,
    "output": "text",
}

# Performance Configuration
PERFORMANCE_CONFIG = {
    "max_series_steps": 512,   # geometric/binomial series and correction loops
    "max_exponent": 64,        # largest |exponent| accepted by the parser
    "check_workers": 4,
}

# Property suite sizes for the `check` subcommand
CHECK_CONFIG = {
    "algebra_cases": 200,
    "root_cases": 50,
    "dressing_cases": 25,
    "order_cases": 100,
    "pairing_cases": 100,
    "soundness_cases": 50,
    "roundtrip_cases": 100,
    "hierarchy_cases": 5,
    "poisson_cases": 10,
    "max_terms": 3,
    "max_xdeg": 2,
}

# Report Configuration
REPORT_CONFIG = {
    "schema": 1,
    "json_indent": 2,
}

# Logging Configuration
LOGGING_CONFIG = {
    "level": "WARNING",
    "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
}


def get_config(section: str) -> Dict:
    """
    Get configuration for a specific section.

    Args:
        section (str): Configuration section name

    Returns:
        Dict: Configuration dictionary
    """
    configs = {
        "app": APP_CONFIG,
        "session": SESSION_DEFAULTS,
        "performance": PERFORMANCE_CONFIG,
        "check": CHECK_CONFIG,
        "report": REPORT_CONFIG,
        "logging": LOGGING_CONFIG,
    }

    return configs.get(section, {})


def get_environment_config() -> Dict:
    """
    Get environment-specific configuration.

    Only variables that are actually set are returned, so the result can be
    layered over file values.

    Returns:
        Dict: Environment configuration
    """
    load_dotenv()
    env_config = {}
    if os.getenv("PSDO_N"):
        env_config["n"] = int(os.environ["PSDO_N"])
    if os.getenv("PSDO_XMAX"):
        env_config["xmax"] = parse_int_list(os.environ["PSDO_XMAX"])
    if os.getenv("PSDO_DFLOOR"):
        env_config["dfloor"] = parse_int_list(os.environ["PSDO_DFLOOR"])
    if os.getenv("PSDO_SEED"):
        env_config["seed"] = int(os.environ["PSDO_SEED"])
    if os.getenv("PSDO_OUTPUT"):
        env_config["output"] = os.environ["PSDO_OUTPUT"]
    return env_config


def configure_logging(verbose: bool = False):
    """Apply LOGGING_CONFIG to the root logger."""
    level = logging.DEBUG if verbose else getattr(logging, LOGGING_CONFIG["level"])
    logging.basicConfig(level=level, format=LOGGING_CONFIG["format"])
    logging.getLogger().setLevel(level)


def parse_int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in str(text).split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from exc


@dataclass(frozen=True)
class SessionConfig:
    """Validated session settings shared by every subcommand."""

    n: int = 1
    xmax: tuple = (8,)
    dfloor: tuple = (-6,)
    seed: int = 0
    output: str = "text"
    max_exponent: int = field(default=PERFORMANCE_CONFIG["max_exponent"])

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ConfigError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "xmax", _broadcast("xmax", self.xmax, self.n))
        object.__setattr__(self, "dfloor", _broadcast("dfloor", self.dfloor, self.n))
        if any(cap < 0 for cap in self.xmax):
            raise ConfigError("x-degree caps must be >= 0")
        if any(floor > 0 for floor in self.dfloor):
            raise ConfigError("d-floors must be <= 0")
        if self.output not in ("text", "json"):
            raise ConfigError(f"output must be 'text' or 'json', got {self.output!r}")

    def to_dict(self) -> Dict:
        return {
            "n": self.n,
            "xmax": list(self.xmax),
            "dfloor": list(self.dfloor),
            "seed": self.seed,
            "output": self.output,
        }

    def with_overrides(self, **overrides) -> "SessionConfig":
        overrides = {key: value for key, value in overrides.items() if value is not None}
        return replace(self, **overrides)


def _broadcast(name: str, values, n: int) -> tuple:
    if isinstance(values, (int, str)):
        values = [values]
    values = [int(v) for v in values]
    if len(values) == 1:
        values = values * n
    if len(values) != n:
        raise ConfigError(f"{name} needs 1 or {n} entries, got {len(values)}")
    return tuple(values)


def load_session_config(path: Optional[str] = None, **overrides) -> SessionConfig:
    """
    Build the session configuration.

    Precedence, lowest first: SESSION_DEFAULTS, the config file, PSDO_*
    environment variables, explicit overrides (command-line flags).

    Args:
        path (str, optional): flat JSON (or YAML) config file
        **overrides: values that win over everything else; None is ignored

    Returns:
        SessionConfig: validated configuration
    """
    values = dict(SESSION_DEFAULTS)
    if path:
        try:
            with open(path, "r", encoding="utf-8") as handle:
                loaded = yaml.safe_load(handle) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"config file {path} must hold a flat object")
        unknown = set(loaded) - set(SESSION_DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        values.update(loaded)
        logger.debug("loaded config file %s", path)
    values.update(get_environment_config())
    values.update({key: value for key, value in overrides.items() if value is not None})

    n = values["n"]
    # defaults are given for n = 1; broadcast scalars and single entries
    for key in ("xmax", "dfloor"):
        entry = values[key]
        if isinstance(entry, str):
            entry = parse_int_list(entry)
        if isinstance(entry, (list, tuple)) and len(entry) == 1:
            entry = list(entry) * n
        values[key] = entry
    return SessionConfig(
        n=n,
        xmax=values["xmax"],
        dfloor=values["dfloor"],
        seed=int(values["seed"]),
        output=values["output"],
    )


if __name__ == "__main__":
    print("Configuration Testing")
    print("=" * 40)
    print(f"App Name: {get_config('app')['name']}")
    print(f"Session: {load_session_config().to_dict()}")
