from .commands import COMMANDS, cmd_eval, cmd_plot, cmd_predict, cmd_synth, cmd_train
from .parser import build_parser
from .shared import build_run_config

__all__ = [
    "COMMANDS",
    "cmd_eval",
    "cmd_plot",
    "cmd_predict",
    "cmd_synth",
    "cmd_train",
    "build_parser",
    "build_run_config",
]
