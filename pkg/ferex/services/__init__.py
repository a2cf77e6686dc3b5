from .charts import emit_curve_svg, emit_heatmap_svg
from .checkpoint import load_checkpoint, save_checkpoint
from .dataset import DatasetSplit, LabeledExample, scan_dir, split
from .imaging import (
    GrayImage,
    RgbImage,
    center_crop,
    decode,
    preprocess,
    resize_bilinear,
    to_gray,
)
from .metrics import (
    ConfusionMatrix,
    EvalReport,
    evaluate,
    predict,
    render_report,
)
from .synth import SynthFace, render_faces, synth_generate, write_synth
from .training import EpochRecord, TrainingHistory, fit

__all__ = [
    "emit_curve_svg",
    "emit_heatmap_svg",
    "load_checkpoint",
    "save_checkpoint",
    "DatasetSplit",
    "LabeledExample",
    "scan_dir",
    "split",
    "GrayImage",
    "RgbImage",
    "center_crop",
    "decode",
    "preprocess",
    "resize_bilinear",
    "to_gray",
    "ConfusionMatrix",
    "EvalReport",
    "evaluate",
    "predict",
    "render_report",
    "SynthFace",
    "render_faces",
    "synth_generate",
    "write_synth",
    "EpochRecord",
    "TrainingHistory",
    "fit",
]
