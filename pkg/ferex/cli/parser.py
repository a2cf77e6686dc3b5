"""
Command-line parser - one subparser per command.

Commands:
- train: build data, split, fit, write checkpoint + history
- eval: score a checkpoint on a split, write confusion CSV (+ heatmap)
- predict: classify individual image files
- synth: write the synthetic expression dataset to disk
- plot: re-render SVG figures from CSV artifacts

Every value flag defaults to None so the config file and the built-in
defaults can fill in whatever the command line leaves unset.
"""

import argparse

from ferex import __version__


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=str, help="key=value config file")
    parser.add_argument("--seed", type=int, help="master seed (default 42)")
    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="log verbosity on standard error (default INFO)",
    )
    parser.add_argument("--workers", type=int, help="threads for preprocessing and evaluation")


def _add_data_source(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--data", type=str, help="root with negative/ neutral/ positive/ subdirectories")
    source.add_argument("--synth", type=int, metavar="N", help="generate N synthetic subjects per class")
    parser.add_argument("--train-fraction", type=float, help="share of images in the train split")
    parser.add_argument(
        "--split-by-subject",
        action="store_true",
        default=None,
        help="keep every subject (filename prefix) on one side of the split",
    )
    parser.add_argument("--crop-fraction", type=float, help="centre crop side as a fraction of the short edge")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ferex",
        description="Train and evaluate a small CNN for three-class facial expression recognition.",
    )
    parser.add_argument("--version", action="version", version=f"ferex {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    # --- train ---
    train = sub.add_parser("train", help="train a model and write checkpoint + history")
    _add_common(train)
    _add_data_source(train)
    train.add_argument("--out", type=str, help="checkpoint path (default model.ck)")
    train.add_argument("--history", type=str, help="history CSV path (default history.csv)")
    train.add_argument("--curve", type=str, help="also write the accuracy curve SVG here")
    train.add_argument("--epochs", type=int)
    train.add_argument("--learning-rate", "--lr", dest="learning_rate", type=float)
    train.add_argument("--momentum", type=float)
    train.add_argument("--batch-size", type=int)
    train.add_argument("--eval-every", type=int, help="evaluate accuracy every K epochs")
    train.add_argument(
        "--no-shuffle",
        dest="shuffle_each_epoch",
        action="store_false",
        default=None,
        help="keep the train order fixed across epochs",
    )
    train.add_argument("--input-size", type=int, help="network input side S (multiple of 16)")
    train.add_argument("--conv-channels", type=_int_list, help="four conv widths, e.g. 16,32,64,128")
    train.add_argument("--fc-widths", type=_int_list, help="two hidden fc widths, e.g. 256,64")

    # --- eval ---
    evaluate = sub.add_parser("eval", help="evaluate a checkpoint on labelled data")
    _add_common(evaluate)
    _add_data_source(evaluate)
    evaluate.add_argument("--model", type=str, help="checkpoint path (default model.ck)")
    evaluate.add_argument(
        "--split", choices=["train", "test", "all"], default="test", help="partition to score"
    )
    evaluate.add_argument("--confusion", type=str, help="confusion CSV path (default confusion.csv)")
    evaluate.add_argument("--svg", type=str, help="also write the confusion heatmap SVG here")

    # --- predict ---
    predict = sub.add_parser("predict", help="classify image files")
    _add_common(predict)
    predict.add_argument("--model", type=str, help="checkpoint path (default model.ck)")
    predict.add_argument("--image", nargs="+", required=True, help="image files to classify")
    predict.add_argument("--crop-fraction", type=float)

    # --- synth ---
    synth = sub.add_parser("synth", help="write the synthetic dataset to a directory")
    _add_common(synth)
    synth.add_argument("--count", type=int, required=True, help="subjects (images) per class")
    synth.add_argument("--out", type=str, required=True, help="output directory")
    synth.add_argument("--input-size", type=int, help="network input side the frames are cropped to")
    synth.add_argument(
        "--crop-fraction", type=float, help="centre crop the frames are framed for (default 0.85)"
    )

    # --- plot ---
    plot = sub.add_parser("plot", help="render SVG figures from history / confusion CSVs")
    plot.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    plot.add_argument("--history", type=str, help="history CSV to plot")
    plot.add_argument("--curve", type=str, help="accuracy curve SVG output")
    plot.add_argument("--confusion", type=str, help="confusion CSV to plot")
    plot.add_argument("--svg", type=str, help="confusion heatmap SVG output")

    return parser
