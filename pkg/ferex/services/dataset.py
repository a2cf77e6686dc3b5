"""
Labelled dataset handling: directory scanning and the seeded train/test split.

Directory layout: <root>/{negative,neutral,positive}/*.png|*.pgm|*.ppm
"""

import logging
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ferex.config import settings
from ferex.core.rng import STREAM_SPLIT, make_rng
from ferex.core.tensor import Tensor
from ferex.errors import (
    DataValidationError,
    DatasetLayoutError,
    EmptyDatasetError,
    ImageDecodeError,
)
from ferex.models.schemas import CLASS_SLUGS, ClassLabel, PreprocessConfig
from ferex.services.imaging import preprocess_many

logger = logging.getLogger(__name__)

# Subject id is the filename prefix before the first '_' or '-'.
SUBJECT_PATTERN = re.compile(r"^([^_\-]+)[_\-]")


@dataclass(frozen=True)
class LabeledExample:
    image: Tensor  # [1, S, S], values in [0, 1]
    label: ClassLabel
    source_id: str

    @property
    def subject_id(self) -> str:
        return subject_of(self.source_id)


@dataclass(frozen=True)
class DatasetSplit:
    train: list[LabeledExample]
    test: list[LabeledExample]
    seed: int
    train_fraction: float
    by_subject: bool = False

    def part(self, name: str) -> list[LabeledExample]:
        if name == "train":
            return self.train
        if name == "test":
            return self.test
        if name == "all":
            return [*self.train, *self.test]
        raise DataValidationError(f"unknown split part '{name}' (expected train, test or all)")


def subject_of(source_id: str) -> str:
    stem = Path(source_id).stem
    match = SUBJECT_PATTERN.match(stem)
    return match.group(1) if match else stem


def stack(examples: list[LabeledExample]) -> tuple[Tensor, np.ndarray]:
    """Batch examples into images [N,1,S,S] and integer labels [N]."""
    if not examples:
        raise EmptyDatasetError("cannot stack an empty example list")
    images = np.stack([ex.image for ex in examples]).astype(np.float32, copy=False)
    labels = np.array([int(ex.label) for ex in examples], dtype=np.int64)
    return images, labels


def scan_dir(root: Path, config: PreprocessConfig, workers: int = 1) -> list[LabeledExample]:
    """Preprocess every decodable image under the three class directories, in lexicographic order."""
    root = Path(root)
    missing = [slug for slug in CLASS_SLUGS if not (root / slug).is_dir()]
    if missing:
        raise DatasetLayoutError(
            f"{root} must contain subdirectories {', '.join(CLASS_SLUGS)}; "
            f"missing: {', '.join(missing)}"
        )

    entries: list[tuple[ClassLabel, Path]] = []
    for label in ClassLabel:
        class_dir = root / label.slug
        files = sorted(
            p
            for p in class_dir.iterdir()
            if p.is_file() and p.suffix.lower() in settings.IMAGE_SUFFIXES
        )
        entries.extend((label, p) for p in files)

    results = preprocess_many([p for _, p in entries], config, workers=workers)
    examples = []
    skipped = 0
    for (label, path), result in zip(entries, results):
        if isinstance(result, ImageDecodeError):
            logger.warning("[Dataset] Skipping undecodable image %s", result)
            skipped += 1
            continue
        examples.append(
            LabeledExample(image=result, label=label, source_id=f"{label.slug}/{path.name}")
        )

    if not examples:
        raise EmptyDatasetError(f"no decodable images found under {root}")
    counts = {label.slug: sum(ex.label == label for ex in examples) for label in ClassLabel}
    logger.info(
        "[Dataset] Scanned %s: %d images (%s), %d skipped",
        root,
        len(examples),
        ", ".join(f"{k}={v}" for k, v in counts.items()),
        skipped,
    )
    return examples


def train_count(n: int, train_fraction: float) -> int:
    """round(fraction * n), halves rounded up."""
    return int(math.floor(train_fraction * n + 0.5))


def _check_unique_ids(examples: list[LabeledExample]) -> None:
    seen: set[str] = set()
    for ex in examples:
        if ex.source_id in seen:
            raise DataValidationError(f"duplicate source_id '{ex.source_id}'")
        seen.add(ex.source_id)


def split(
    examples: list[LabeledExample],
    train_fraction: float = settings.TRAIN_FRACTION,
    seed: int = settings.SEED,
    by_subject: bool = False,
) -> DatasetSplit:
    """
    Seeded uniform shuffle, first round(f*N) examples to train.

    Examples are put in source_id order before shuffling, so the split depends
    on the example set and seed only, not on the order the caller passes them in.

    With by_subject, whole subjects are moved to train in shuffled order until
    the train side holds at least round(f*N) images, so no subject is on both sides.
    """
    n = len(examples)
    if n < 2:
        raise DataValidationError(f"need at least 2 examples to split, got {n}")
    if not 0.0 < train_fraction < 1.0:
        raise DataValidationError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    _check_unique_ids(examples)
    examples = sorted(examples, key=lambda ex: ex.source_id)
    target = train_count(n, train_fraction)
    if target == 0 or target == n:
        raise DataValidationError(
            f"train_fraction {train_fraction} over {n} examples leaves an empty train or test set"
        )

    rng = make_rng(seed, STREAM_SPLIT)
    if not by_subject:
        order = rng.permutation(n)
        train = [examples[i] for i in order[:target]]
        test = [examples[i] for i in order[target:]]
    else:
        subjects = sorted({ex.subject_id for ex in examples})
        chosen: set[str] = set()
        taken = 0
        for idx in rng.permutation(len(subjects)):
            if taken >= target:
                break
            subject = subjects[idx]
            chosen.add(subject)
            taken += sum(ex.subject_id == subject for ex in examples)
        train = [ex for ex in examples if ex.subject_id in chosen]
        test = [ex for ex in examples if ex.subject_id not in chosen]
        if not train or not test:
            raise DataValidationError(
                f"subject-level split of {len(subjects)} subjects leaves an empty train or test set"
            )

    logger.info(
        "[Dataset] Split %d examples -> %d train / %d test (seed=%d, fraction=%.2f%s)",
        n,
        len(train),
        len(test),
        seed,
        train_fraction,
        ", by subject" if by_subject else "",
    )
    return DatasetSplit(
        train=train, test=test, seed=seed, train_fraction=train_fraction, by_subject=by_subject
    )
