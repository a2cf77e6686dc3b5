"""
Subcommand handlers. Each takes the parsed arguments and returns an exit code;
library errors propagate to main(), which maps them to status 1 or 2.
"""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from ferex.core.network import init_params, predict_proba
from ferex.errors import ImageDecodeError, UsageError
from ferex.models.schemas import PreprocessConfig
from ferex.services.charts import emit_curve_svg, emit_heatmap_svg
from ferex.services.checkpoint import load_checkpoint, save_checkpoint
from ferex.services.dataset import split
from ferex.services.imaging import preprocess
from ferex.services.metrics import (
    argmax_labels,
    read_confusion_csv,
    render_report,
    write_confusion_csv,
)
from ferex.services.synth import render_faces, write_synth
from ferex.services.training import fit, read_history_csv, write_history_csv

from .shared import build_run_config, load_examples, require_source, score

logger = logging.getLogger(__name__)


def cmd_train(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    require_source(config)

    examples = load_examples(config, config.model, config.preprocess)
    data = split(examples, config.train_fraction, config.seed, config.split_by_subject)
    params = init_params(config.model, config.seed)
    params, history = fit(config.model, params, data, config.train)

    # Artifacts are only written once training has finished cleanly
    digest = save_checkpoint(params, config.model, config.out)
    write_history_csv(history, config.history)
    if config.curve is not None:
        emit_curve_svg(history, config.curve)
    logger.info("[CLI] Training finished, checkpoint %s (digest %s)", config.out, digest[:12])

    for part in ("train", "test"):
        report = score(config.model, params, data.part(part), config.train.eval_batch_size)
        print(render_report(report, title=f"{part} set"))
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    require_source(config)
    model_path = Path(args.model) if args.model else config.out

    params, model_config = load_checkpoint(model_path)
    prep = PreprocessConfig(
        crop_fraction=config.preprocess.crop_fraction, input_size=model_config.input_size
    )
    examples = load_examples(config, model_config, prep)
    data = split(examples, config.train_fraction, config.seed, config.split_by_subject)

    report = score(model_config, params, data.part(args.split), config.train.eval_batch_size)
    write_confusion_csv(report.confusion, config.confusion)
    if config.svg is not None:
        emit_heatmap_svg(report.confusion, config.svg)
    print(render_report(report, title=f"{args.split} set"))
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    model_path = Path(args.model) if args.model else config.out

    params, model_config = load_checkpoint(model_path)
    prep = PreprocessConfig(
        crop_fraction=config.preprocess.crop_fraction, input_size=model_config.input_size
    )
    failed = 0
    for path in args.image:
        try:
            image = preprocess(Path(path), prep)
        except ImageDecodeError as e:
            print(f"error: {e}", file=sys.stderr)
            failed += 1
            continue
        logits, probs = predict_proba(model_config, params, image[np.newaxis])
        label = argmax_labels(logits)[0]
        probabilities = ",".join(f"{p:.4f}" for p in probs[0])
        print(f"{path}\t{label.slug}\t{probabilities}")

    if failed:
        logger.warning("[CLI] %d of %d images could not be read", failed, len(args.image))
        return 1
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    if args.count < 1:
        raise UsageError(f"--count must be at least 1, got {args.count}")
    config = build_run_config(args)
    faces = render_faces(
        args.count, config.model.input_size, config.seed, config.preprocess.crop_fraction
    )
    manifest = write_synth(faces, Path(args.out), config.seed)
    print(manifest)
    return 0


def cmd_plot(args: argparse.Namespace) -> int:
    curve_pair = (args.history, args.curve)
    heatmap_pair = (args.confusion, args.svg)
    for pair, names in ((curve_pair, "--history/--curve"), (heatmap_pair, "--confusion/--svg")):
        if (pair[0] is None) != (pair[1] is None):
            raise UsageError(f"{names} must be given together")
    if args.history is None and args.confusion is None:
        raise UsageError("nothing to plot: pass --history/--curve and/or --confusion/--svg")

    if args.history is not None:
        emit_curve_svg(read_history_csv(Path(args.history)), Path(args.curve))
        print(args.curve)
    if args.confusion is not None:
        emit_heatmap_svg(read_confusion_csv(Path(args.confusion)), Path(args.svg))
        print(args.svg)
    return 0


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "predict": cmd_predict,
    "synth": cmd_synth,
    "plot": cmd_plot,
}
