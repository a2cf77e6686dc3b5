from enum import IntEnum
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ferex.config import settings

# Number of 2x2 pooling stages; input_size must be divisible by 2**POOL_STAGES.
POOL_STAGES = 4


class ClassLabel(IntEnum):
    """Expression class. Index order is alphabetical and fixes confusion-matrix axes."""

    NEGATIVE = 0
    NEUTRAL = 1
    POSITIVE = 2

    @property
    def slug(self) -> str:
        return self.name.lower()

    @classmethod
    def from_slug(cls, slug: str) -> "ClassLabel":
        return cls[slug.strip().upper()]


CLASS_LABELS: tuple[ClassLabel, ...] = tuple(ClassLabel)
CLASS_SLUGS: tuple[str, ...] = tuple(label.slug for label in ClassLabel)


class ModelConfig(BaseModel):
    """Network architecture: 4 x (conv -> relu -> pool), then fc -> relu -> fc -> relu -> fc."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    input_size: int = Field(default=settings.INPUT_SIZE, ge=2**POOL_STAGES)
    conv_channels: tuple[int, ...] = (16, 32, 64, 128)
    kernel_size: int = Field(default=3, ge=1)
    stride: int = 1
    padding: int = 1
    pool_size: int = 2
    fc_widths: tuple[int, ...] = (256, 64)
    num_classes: int = len(ClassLabel)

    @model_validator(mode="after")
    def _check_architecture(self) -> "ModelConfig":
        if len(self.conv_channels) != POOL_STAGES:
            raise ValueError(
                f"conv_channels must have exactly {POOL_STAGES} entries, got {len(self.conv_channels)}"
            )
        if len(self.fc_widths) != 2:
            raise ValueError(f"fc_widths must have exactly 2 hidden widths, got {len(self.fc_widths)}")
        if any(c < 1 for c in (*self.conv_channels, *self.fc_widths)):
            raise ValueError("channel and width counts must be positive")
        if self.input_size % 2**POOL_STAGES:
            raise ValueError(
                f"input_size {self.input_size} must be divisible by {2**POOL_STAGES}"
            )
        if self.stride != 1 or 2 * self.padding != self.kernel_size - 1:
            raise ValueError(
                "convolutions must preserve spatial size (stride 1, padding == (kernel_size - 1) / 2)"
            )
        if self.pool_size != 2:
            raise ValueError("only 2x2 stride-2 pooling is supported")
        if self.num_classes != len(ClassLabel):
            raise ValueError(f"num_classes must be {len(ClassLabel)}")
        return self

    @property
    def final_spatial(self) -> int:
        return self.input_size // 2**POOL_STAGES

    @property
    def flatten_width(self) -> int:
        return self.conv_channels[-1] * self.final_spatial**2

    def conv_shapes(self) -> list[tuple[int, int, int, int]]:
        """Weight shapes [C_out, C_in, k, k] of the convolution layers, input first."""
        shapes = []
        c_in = 1
        for c_out in self.conv_channels:
            shapes.append((c_out, c_in, self.kernel_size, self.kernel_size))
            c_in = c_out
        return shapes

    def fc_shapes(self) -> list[tuple[int, int]]:
        """Weight shapes [out, in] of the fully connected layers; the last is the class head."""
        widths = [self.flatten_width, *self.fc_widths, self.num_classes]
        return [(widths[i + 1], widths[i]) for i in range(len(widths) - 1)]


class SgdConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    learning_rate: float = Field(default=settings.LEARNING_RATE, ge=0.0)
    momentum: float = Field(default=settings.MOMENTUM, ge=0.0, lt=1.0)
    batch_size: int = Field(default=settings.BATCH_SIZE, ge=1)


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    epochs: int = Field(default=settings.EPOCHS, ge=1)
    sgd: SgdConfig = Field(default_factory=SgdConfig)
    seed: int = settings.SEED
    shuffle_each_epoch: bool = True
    eval_every: int = Field(default=1, ge=1)
    eval_batch_size: int = Field(default=settings.EVAL_BATCH_SIZE, ge=1)
    workers: int = Field(default=settings.WORKERS, ge=1)


class PreprocessConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    crop_fraction: float = Field(default=settings.CROP_FRACTION, gt=0.0, le=1.0)
    input_size: int = Field(default=settings.INPUT_SIZE, ge=1)


class RunConfig(BaseModel):
    """Settings for one CLI invocation, merged from defaults, config file and flags."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    data: Path | None = None
    synth: int | None = Field(default=None, ge=1)
    seed: int = settings.SEED
    out: Path = Path("model.ck")
    history: Path = Path("history.csv")
    curve: Path | None = None
    confusion: Path = Path("confusion.csv")
    svg: Path | None = None
    train_fraction: float = Field(default=settings.TRAIN_FRACTION, gt=0.0, lt=1.0)
    split_by_subject: bool = False
    log_level: str = "INFO"
    model: ModelConfig = Field(default_factory=ModelConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    preprocess: PreprocessConfig = Field(default_factory=PreprocessConfig)

    @model_validator(mode="after")
    def _check_sizes(self) -> "RunConfig":
        if self.preprocess.input_size != self.model.input_size:
            raise ValueError(
                f"preprocess input_size {self.preprocess.input_size} does not match "
                f"model input_size {self.model.input_size}"
            )
        return self

    @property
    def has_source(self) -> bool:
        return self.data is not None or self.synth is not None
