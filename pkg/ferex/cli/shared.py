"""
Shared CLI helpers.

Contains:
- RunConfig assembly (flag > config file > default)
- data loading for train/eval
- scoring a list of examples with a checkpointed model
"""

import argparse
import logging
from pathlib import Path

from pydantic import ValidationError

from ferex.config import get_bool, get_float, get_int, get_str, load_config_file
from ferex.core.network import Parameters
from ferex.errors import ConfigurationError, UsageError
from ferex.models.schemas import ModelConfig, PreprocessConfig, RunConfig
from ferex.services.dataset import LabeledExample, scan_dir, stack
from ferex.services.metrics import EvalReport, evaluate, predict
from ferex.services.synth import synth_generate

logger = logging.getLogger(__name__)


def _first(*values):
    """First value that is not None."""
    for value in values:
        if value is not None:
            return value
    return None


def _file_bool(values: dict[str, str], key: str) -> bool | None:
    return get_bool(values, key) if key in values else None


def _file_int_list(values: dict[str, str], key: str) -> tuple[int, ...] | None:
    raw = get_str(values, key)
    if raw is None:
        return None
    try:
        return tuple(int(part) for part in raw.split(","))
    except ValueError:
        raise ConfigurationError(f"config key '{key}' expects comma-separated integers, got '{raw}'")


def _drop_none(values: dict) -> dict:
    return {key: value for key, value in values.items() if value is not None}


def _describe(error: ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(part) for part in err['loc']) or 'config'}: {err['msg']}"
        for err in error.errors()
    )


def build_run_config(args: argparse.Namespace) -> RunConfig:
    """Merge command-line flags over an optional config file over built-in defaults."""

    def flag(name: str):
        return getattr(args, name, None)

    try:
        file = load_config_file(Path(args.config)) if flag("config") else {}
        seed = _first(flag("seed"), get_int(file, "seed", None))
        input_size = _first(flag("input_size"), get_int(file, "input_size", None))

        model = _drop_none(
            {
                "input_size": input_size,
                "conv_channels": _first(flag("conv_channels"), _file_int_list(file, "conv_channels")),
                "fc_widths": _first(flag("fc_widths"), _file_int_list(file, "fc_widths")),
            }
        )
        sgd = _drop_none(
            {
                "learning_rate": _first(flag("learning_rate"), get_float(file, "learning_rate", None)),
                "momentum": _first(flag("momentum"), get_float(file, "momentum", None)),
                "batch_size": _first(flag("batch_size"), get_int(file, "batch_size", None)),
            }
        )
        train = _drop_none(
            {
                "epochs": _first(flag("epochs"), get_int(file, "epochs", None)),
                "seed": seed,
                "shuffle_each_epoch": _first(
                    flag("shuffle_each_epoch"), _file_bool(file, "shuffle_each_epoch")
                ),
                "eval_every": _first(flag("eval_every"), get_int(file, "eval_every", None)),
                "workers": _first(flag("workers"), get_int(file, "workers", None)),
                "sgd": sgd,
            }
        )
        preprocess = _drop_none(
            {
                "crop_fraction": _first(flag("crop_fraction"), get_float(file, "crop_fraction", None)),
                "input_size": input_size,
            }
        )
        data = _first(flag("data"), get_str(file, "data"))
        synth = _first(flag("synth"), get_int(file, "synth", None))
        if flag("data") is not None:
            synth = None
        elif flag("synth") is not None:
            data = None

        config = RunConfig(
            **_drop_none(
                {
                    "data": data,
                    "synth": synth,
                    "seed": seed,
                    "out": _first(flag("out"), get_str(file, "out")),
                    "history": _first(flag("history"), get_str(file, "history")),
                    "curve": _first(flag("curve"), get_str(file, "curve")),
                    "confusion": _first(flag("confusion"), get_str(file, "confusion")),
                    "svg": _first(flag("svg"), get_str(file, "svg")),
                    "train_fraction": _first(
                        flag("train_fraction"), get_float(file, "train_fraction", None)
                    ),
                    "split_by_subject": _first(
                        flag("split_by_subject"), _file_bool(file, "split_by_subject")
                    ),
                    "log_level": _first(flag("log_level"), get_str(file, "log_level")),
                    "model": model,
                    "train": train,
                    "preprocess": preprocess,
                }
            )
        )
    except ValidationError as e:
        raise UsageError(f"invalid configuration: {_describe(e)}")
    except UsageError:
        raise
    except ConfigurationError as e:
        raise UsageError(str(e))

    if config.data is not None and config.synth is not None:
        raise UsageError("data and synth are mutually exclusive; set only one")
    logging.getLogger().setLevel(config.log_level.upper())
    logger.debug("[CLI] Run config: %s", config.model_dump_json())
    return config


def require_source(config: RunConfig) -> None:
    if not config.has_source:
        raise UsageError("no data: pass --data DIR or --synth N (or set data/synth in --config)")


def load_examples(
    config: RunConfig, model_config: ModelConfig, preprocess: PreprocessConfig
) -> list[LabeledExample]:
    """Synthetic examples at the model's input size, or a scanned directory."""
    require_source(config)
    if config.synth is not None:
        return synth_generate(
            config.synth, model_config.input_size, config.seed, preprocess.crop_fraction
        )
    return scan_dir(config.data, preprocess, workers=config.train.workers)


def score(
    model_config: ModelConfig,
    params: Parameters,
    examples: list[LabeledExample],
    batch_size: int,
) -> EvalReport:
    images, labels = stack(examples)
    return evaluate(predict(params, model_config, images, batch_size=batch_size), labels)
