"""
Training loop: seeded minibatch SGD over the train split with full train/test
accuracy evaluation after each epoch.
"""

import csv
import io
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ferex.core.layers import softmax_xent
from ferex.core.network import Parameters, backward, forward, predict_proba
from ferex.core.optim import OptimState, sgd_step
from ferex.core.rng import STREAM_SHUFFLE, make_rng
from ferex.core.tensor import Tensor
from ferex.errors import (
    ConfigurationError,
    DataValidationError,
    NonFiniteError,
    TrainingDivergedError,
)
from ferex.models.schemas import ModelConfig, TrainConfig
from ferex.services.artifacts import atomic_write_text
from ferex.services.dataset import DatasetSplit, LabeledExample, stack

logger = logging.getLogger(__name__)

HISTORY_HEADER = ["epoch", "train_acc", "test_acc", "mean_loss"]


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_accuracy: float
    test_accuracy: float
    mean_loss: float
    # False when eval_every skipped this epoch and accuracies were carried forward
    evaluated: bool = True


@dataclass
class TrainingHistory:
    records: list[EpochRecord] = field(default_factory=list)
    final_params_digest: str = ""

    def __len__(self) -> int:
        return len(self.records)

    @property
    def train_curve(self) -> list[float]:
        return [r.train_accuracy for r in self.records]

    @property
    def test_curve(self) -> list[float]:
        return [r.test_accuracy for r in self.records]

    def first_perfect_epoch(self) -> int | None:
        """First epoch whose train accuracy is 1.0, if any."""
        for r in self.records:
            if r.train_accuracy >= 1.0:
                return r.epoch
        return None


def accuracy(
    config: ModelConfig,
    params: Parameters,
    images: Tensor,
    labels: np.ndarray,
    batch_size: int = 64,
    workers: int = 1,
) -> float:
    """Fraction of images whose argmax prediction matches the label."""
    starts = list(range(0, images.shape[0], batch_size))

    def _correct(start: int) -> int:
        logits, _ = predict_proba(
            config, params, images[start : start + batch_size], batch_size=batch_size
        )
        return int(np.sum(np.argmax(logits, axis=1) == labels[start : start + batch_size]))

    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            correct = sum(pool.map(_correct, starts))
    else:
        correct = sum(_correct(s) for s in starts)
    return correct / images.shape[0]


def _check_examples(config: ModelConfig, examples: list[LabeledExample], part: str) -> None:
    if not examples:
        raise ConfigurationError(f"{part} set is empty")
    expected = (1, config.input_size, config.input_size)
    for ex in examples:
        if ex.image.shape != expected:
            raise ConfigurationError(
                f"{part} image {ex.source_id} has shape {list(ex.image.shape)}, "
                f"model expects {list(expected)}"
            )


def fit(
    model_config: ModelConfig,
    params: Parameters,
    split: DatasetSplit,
    train_config: TrainConfig,
) -> tuple[Parameters, TrainingHistory]:
    """
    Train for train_config.epochs epochs.

    Each epoch shuffles the train set (seeded), runs forward/backward/sgd_step
    over every minibatch including a short final one, then records accuracy on
    the full train and test sets.
    """
    _check_examples(model_config, split.train, "train")
    _check_examples(model_config, split.test, "test")
    train_x, train_y = stack(split.train)
    test_x, test_y = stack(split.test)
    sgd = train_config.sgd
    n = train_x.shape[0]
    n_batches = math.ceil(n / sgd.batch_size)

    logger.info(
        "[Train] Starting: %d train / %d test, %d epochs, batch=%d, lr=%g, momentum=%g, seed=%d",
        n,
        test_x.shape[0],
        train_config.epochs,
        sgd.batch_size,
        sgd.learning_rate,
        sgd.momentum,
        train_config.seed,
    )

    rng = make_rng(train_config.seed, STREAM_SHUFFLE)
    state = OptimState.zeros_like(params)
    history = TrainingHistory()
    train_acc = test_acc = 0.0
    start_time = time.time()

    for epoch in range(1, train_config.epochs + 1):
        epoch_start = time.perf_counter()
        order = rng.permutation(n) if train_config.shuffle_each_epoch else np.arange(n)
        loss_sum = 0.0
        for b in range(n_batches):
            idx = order[b * sgd.batch_size : (b + 1) * sgd.batch_size]
            try:
                logits, caches = forward(model_config, params, train_x[idx])
                loss, grad_logits, _ = softmax_xent(logits, train_y[idx])
            except NonFiniteError:
                loss = math.nan
            if not math.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}, batch {b + 1}/{n_batches}; "
                    f"try a smaller learning rate (currently {sgd.learning_rate})"
                )
            grads = backward(model_config, params, grad_logits, caches)
            params, state = sgd_step(params, grads, state, sgd)
            if not all(np.isfinite(t).all() for t in params.tensors()):
                raise TrainingDivergedError(
                    f"non-finite parameters at epoch {epoch}, batch {b + 1}/{n_batches}; "
                    f"try a smaller learning rate (currently {sgd.learning_rate})"
                )
            loss_sum += loss * len(idx)
            logger.debug("[Train] Epoch %d batch %d/%d: loss=%.4f", epoch, b + 1, n_batches, loss)

        mean_loss = loss_sum / n
        evaluated = (
            epoch == 1 or epoch == train_config.epochs or epoch % train_config.eval_every == 0
        )
        if evaluated:
            kwargs = {"batch_size": train_config.eval_batch_size, "workers": train_config.workers}
            train_acc = accuracy(model_config, params, train_x, train_y, **kwargs)
            test_acc = accuracy(model_config, params, test_x, test_y, **kwargs)
        history.records.append(
            EpochRecord(
                epoch=epoch,
                train_accuracy=train_acc,
                test_accuracy=test_acc,
                mean_loss=mean_loss,
                evaluated=evaluated,
            )
        )
        logger.info(
            "[Train] Epoch %d/%d: loss=%.4f, train=%.1f%%, test=%.1f%% (%.2fs)",
            epoch,
            train_config.epochs,
            mean_loss,
            train_acc * 100,
            test_acc * 100,
            time.perf_counter() - epoch_start,
        )

    history.final_params_digest = params.digest()
    elapsed = time.time() - start_time
    logger.info(
        "[Train] Complete: %d epochs in %.1fs, final train=%.1f%%, test=%.1f%%, first 100%% train epoch=%s",
        train_config.epochs,
        elapsed,
        train_acc * 100,
        test_acc * 100,
        history.first_perfect_epoch(),
    )
    return params, history


def history_to_csv(history: TrainingHistory) -> str:
    buffer = io.StringIO(newline="")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(HISTORY_HEADER)
    for r in history.records:
        writer.writerow(
            [r.epoch, f"{r.train_accuracy:.6f}", f"{r.test_accuracy:.6f}", f"{r.mean_loss:.6f}"]
        )
    return buffer.getvalue()


def write_history_csv(history: TrainingHistory, path: Path) -> None:
    atomic_write_text(Path(path), history_to_csv(history))
    logger.info("[Train] Wrote %d-epoch history to %s", len(history), path)


def read_history_csv(path: Path) -> TrainingHistory:
    with Path(path).open(newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    if not rows or rows[0] != HISTORY_HEADER:
        raise DataValidationError(f"{path}: expected header {','.join(HISTORY_HEADER)}")
    history = TrainingHistory()
    for row in rows[1:]:
        try:
            epoch, train_acc, test_acc, loss = row
            history.records.append(
                EpochRecord(int(epoch), float(train_acc), float(test_acc), float(loss))
            )
        except ValueError:
            raise DataValidationError(f"{path}: malformed history row {row}")
    if not history.records:
        raise DataValidationError(f"{path}: history has no epochs")
    return history
