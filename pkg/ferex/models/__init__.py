from .schemas import (
    CLASS_LABELS,
    CLASS_SLUGS,
    ClassLabel,
    ModelConfig,
    PreprocessConfig,
    RunConfig,
    SgdConfig,
    TrainConfig,
)

__all__ = [
    "CLASS_LABELS",
    "CLASS_SLUGS",
    "ClassLabel",
    "ModelConfig",
    "PreprocessConfig",
    "RunConfig",
    "SgdConfig",
    "TrainConfig",
]
