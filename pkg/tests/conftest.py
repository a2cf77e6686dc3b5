"""
Shared fixtures: a tiny network configuration and a small image tree.
"""

from pathlib import Path

import numpy as np
import pytest

from ferex.core.network import init_params
from ferex.models.schemas import CLASS_SLUGS, ModelConfig
from tests.helpers import pgm_bytes


@pytest.fixture
def tiny_config() -> ModelConfig:
    """S=16 network with two channels per conv and fc widths 8, 4."""
    return ModelConfig(input_size=16, conv_channels=(2, 2, 2, 2), fc_widths=(8, 4))


@pytest.fixture
def tiny_params(tiny_config):
    return init_params(tiny_config, seed=7)


@pytest.fixture
def image_tree(tmp_path) -> Path:
    """Dataset root with three 8x8 PGM files per class, each a flat grey level."""
    root = tmp_path / "faces"
    for c, slug in enumerate(CLASS_SLUGS):
        class_dir = root / slug
        class_dir.mkdir(parents=True)
        for i in range(3):
            level = 40 + 60 * c + 5 * i
            (class_dir / f"p{i}_{slug}.pgm").write_bytes(
                pgm_bytes(np.full((8, 8), level, dtype=np.uint8))
            )
    return root
