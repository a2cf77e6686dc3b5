"""
Central configuration module.

Holds the built-in defaults and loads flat key=value config files.
Flags override file values, which override the defaults below.
"""

from functools import lru_cache
from pathlib import Path

from dotenv import dotenv_values

from ferex.errors import ConfigurationError

# Keys accepted in a config file. Values are strings until the typed getters convert them.
CONFIG_KEYS = frozenset(
    {
        "seed",
        "data",
        "synth",
        "out",
        "history",
        "curve",
        "confusion",
        "svg",
        "epochs",
        "learning_rate",
        "momentum",
        "batch_size",
        "shuffle_each_epoch",
        "eval_every",
        "input_size",
        "conv_channels",
        "fc_widths",
        "crop_fraction",
        "train_fraction",
        "split_by_subject",
        "workers",
        "log_level",
    }
)


def get_bool(values: dict[str, str], key: str, default: bool = False) -> bool:
    """Get boolean from config values (supports true/false/1/0)."""
    value = values.get(key)
    if value is None:
        return default
    return value.lower() in ("true", "1", "yes", "on")


def get_int(values: dict[str, str], key: str, default: int | None) -> int | None:
    """Get integer from config values."""
    value = values.get(key)
    if value is None:
        return default
    try:
        return int(value)
    except ValueError:
        raise ConfigurationError(f"config key '{key}' expects an integer, got '{value}'")


def get_float(values: dict[str, str], key: str, default: float | None) -> float | None:
    """Get float from config values."""
    value = values.get(key)
    if value is None:
        return default
    try:
        return float(value)
    except ValueError:
        raise ConfigurationError(f"config key '{key}' expects a number, got '{value}'")


def get_str(values: dict[str, str], key: str, default: str | None = None) -> str | None:
    """Get string from config values."""
    return values.get(key, default)


def load_config_file(path: Path) -> dict[str, str]:
    """Parse a key=value config file, rejecting unknown keys."""
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    raw = dotenv_values(path)
    unknown = sorted(key for key in raw if key not in CONFIG_KEYS)
    if unknown:
        raise ConfigurationError(f"unknown config key(s) in {path}: {', '.join(unknown)}")
    return {key: value for key, value in raw.items() if value is not None}


@lru_cache(maxsize=1)
class Settings:
    """Built-in defaults."""

    # === Seeding ===
    SEED: int = 42

    # === Preprocessing ===
    INPUT_SIZE: int = 96
    CROP_FRACTION: float = 0.85

    # === Dataset ===
    TRAIN_FRACTION: float = 0.75
    IMAGE_SUFFIXES: tuple[str, ...] = (".png", ".pgm", ".ppm")

    # === Optimisation ===
    EPOCHS: int = 100
    LEARNING_RATE: float = 0.01
    MOMENTUM: float = 0.9
    BATCH_SIZE: int = 16

    # === Evaluation / parallelism ===
    EVAL_BATCH_SIZE: int = 64
    WORKERS: int = 1

    # === Reporting ===
    CHANCE_ACCURACY: float = 1.0 / 3.0


# Convenience exports
settings = Settings()
