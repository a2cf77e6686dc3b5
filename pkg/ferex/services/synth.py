"""
Procedural face-like expression images for desk-scale runs.

Each synthetic subject gets one head geometry (position, scale, eye spacing)
and appears once per class, differing in the mouth curve:
downward arc = negative, flat segment = neutral, upward arc = positive.
Mouth placement and width, stroke intensity, background level and pixel noise
are jittered per image. A share of negative and positive images carry only a
faint arc inside the neutral band, so those cannot be told from neutral faces
without memorising them.

Faces are rendered as 8-bit camera frames sized so the centre crop frames the
head, then run through the same to_gray -> crop -> resize path as image files.
A tree written by write_synth preprocesses to exactly the tensors that
synth_generate returns for the same seed and crop fraction.
"""

import csv
import io
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ferex.config import settings
from ferex.core.rng import STREAM_SYNTH, make_rng
from ferex.models.schemas import ClassLabel, PreprocessConfig
from ferex.services.dataset import LabeledExample
from ferex.services.imaging import crop_window, encode_pgm, preprocess_image, rgb_from_gray

logger = logging.getLogger(__name__)

# Image rows grow downward, so a positive curvature drops the middle of the
# mouth below its corners (a smile).
MOUTH_SIGN = {
    ClassLabel.NEGATIVE: -1.0,
    ClassLabel.NEUTRAL: 0.0,
    ClassLabel.POSITIVE: 1.0,
}

# Curvature magnitudes, in face-frame units before head scale
NEUTRAL_AMPLITUDE = 0.01
CLEAR_AMPLITUDE = (0.06, 0.11)
FAINT_AMPLITUDE = (0.0, NEUTRAL_AMPLITUDE)
FAINT_SHARE = 0.12

MANIFEST_NAME = "manifest.csv"


@dataclass(frozen=True)
class FaceGeometry:
    cx: float
    cy: float
    scale: float
    eye_spacing: float


@dataclass(frozen=True)
class SynthFace:
    subject: int
    label: ClassLabel
    curvature: float
    pixels: np.ndarray  # uint8 [C, C] camera frame, C = canvas_size(S, crop)

    @property
    def source_id(self) -> str:
        return synth_id(self.subject, self.label)


def synth_id(subject: int, label: ClassLabel) -> str:
    """Relative path the face is written to; matches scan_dir's source ids."""
    return f"{label.slug}/s{subject:04d}_{label.slug}.pgm"


def canvas_size(input_size: int, crop_fraction: float) -> int:
    """Smallest frame whose centre crop still holds input_size pixels."""
    return math.ceil(input_size / crop_fraction)


def mouth_curvature(label: ClassLabel, rng: np.random.Generator) -> float:
    if label is ClassLabel.NEUTRAL:
        return float(rng.uniform(-NEUTRAL_AMPLITUDE, NEUTRAL_AMPLITUDE))
    low, high = FAINT_AMPLITUDE if rng.random() < FAINT_SHARE else CLEAR_AMPLITUDE
    return MOUTH_SIGN[label] * float(rng.uniform(low, high))


def _coverage(distance: np.ndarray, half_width: float, pixel: float) -> np.ndarray:
    """Anti-aliased stroke coverage: 1 inside half_width, fading to 0 over one pixel."""
    return np.clip(1.0 - (distance - half_width) / pixel, 0.0, 1.0)


def _draw_face(
    canvas: int,
    crop_fraction: float,
    geom: FaceGeometry,
    curvature: float,
    rng: np.random.Generator,
) -> np.ndarray:
    # face-frame coordinates: the crop window spans [0, 1] on both axes
    left, top, crop_w, crop_h = crop_window(canvas, canvas, crop_fraction)
    pixel = 1.0 / crop_w
    u_axis = (np.arange(canvas, dtype=np.float64) - left + 0.5) / crop_w
    v_axis = (np.arange(canvas, dtype=np.float64) - top + 0.5) / crop_h
    v, u = np.meshgrid(v_axis, u_axis, indexing="ij")

    background = rng.uniform(0.80, 0.92)
    face_level = rng.uniform(0.52, 0.68)
    ink = rng.uniform(0.05, 0.20)
    noise_std = rng.uniform(0.02, 0.05)
    mouth_dy = rng.uniform(-0.012, 0.012)
    mouth_width = rng.uniform(0.9, 1.1)

    img = np.full((canvas, canvas), background)

    # head: filled ellipse with a dark outline
    a, b = 0.32 * geom.scale, 0.40 * geom.scale
    radial = np.sqrt(((u - geom.cx) / a) ** 2 + ((v - geom.cy) / b) ** 2)
    inside = _coverage((radial - 1.0) * min(a, b), 0.0, pixel)
    img = img * (1.0 - inside) + face_level * inside
    outline = _coverage(np.abs(radial - 1.0) * min(a, b), 0.012, pixel)
    img = img * (1.0 - outline) + ink * outline

    # eyes
    eye_y = geom.cy - 0.08 * geom.scale
    eye_r = 0.045 * geom.scale
    for side in (-1.0, 1.0):
        ex = geom.cx + side * geom.eye_spacing * geom.scale
        dist = np.sqrt((u - ex) ** 2 + (v - eye_y) ** 2)
        eye = _coverage(dist, eye_r, pixel)
        img = img * (1.0 - eye) + ink * eye

    # mouth: y(t) = my + c * (0.5 - t^2), t in [-1, 1] across the mouth width
    my = geom.cy + (0.18 + mouth_dy) * geom.scale
    half_w = 0.12 * mouth_width * geom.scale
    c = curvature * geom.scale
    t = (u - geom.cx) / half_w
    curve_y = my + c * (0.5 - t**2)
    slope = -2.0 * c * t / half_w
    vertical = np.abs(v - curve_y) / np.sqrt(1.0 + slope**2)
    beyond = np.maximum(np.abs(u - geom.cx) - half_w, 0.0)
    mouth = _coverage(np.sqrt(vertical**2 + beyond**2), 0.018, pixel)
    img = img * (1.0 - mouth) + ink * mouth

    img = img + rng.normal(0.0, noise_std, size=img.shape)
    return np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)


def _subject_geometry(seed: int, subject: int) -> FaceGeometry:
    rng = make_rng(seed, STREAM_SYNTH, subject)
    return FaceGeometry(
        cx=0.5 + rng.uniform(-0.03, 0.03),
        cy=0.5 + rng.uniform(-0.03, 0.03),
        scale=rng.uniform(0.92, 1.08),
        eye_spacing=rng.uniform(0.11, 0.13),
    )


def render_faces(
    count_per_class: int,
    input_size: int,
    seed: int,
    crop_fraction: float = settings.CROP_FRACTION,
) -> list[SynthFace]:
    """Camera frames for count_per_class subjects, each drawn once per class."""
    if count_per_class < 1:
        raise ValueError(f"count_per_class must be at least 1, got {count_per_class}")
    canvas = canvas_size(input_size, crop_fraction)
    faces = []
    for subject in range(count_per_class):
        geom = _subject_geometry(seed, subject)
        for label in ClassLabel:
            rng = make_rng(seed, STREAM_SYNTH, subject, int(label) + 1)
            curvature = mouth_curvature(label, rng)
            pixels = _draw_face(canvas, crop_fraction, geom, curvature, rng)
            faces.append(SynthFace(subject=subject, label=label, curvature=curvature, pixels=pixels))
    logger.debug("[Synth] Rendered %d frames at %dx%d", len(faces), canvas, canvas)
    return faces


def synth_generate(
    count_per_class: int,
    size: int,
    seed: int,
    crop_fraction: float = settings.CROP_FRACTION,
) -> list[LabeledExample]:
    """Preprocessed [1,S,S] examples; deterministic per (seed, size, crop_fraction)."""
    prep = PreprocessConfig(crop_fraction=crop_fraction, input_size=size)
    examples = [
        LabeledExample(
            image=preprocess_image(rgb_from_gray(face.pixels), prep),
            label=face.label,
            source_id=face.source_id,
        )
        for face in render_faces(count_per_class, size, seed, crop_fraction)
    ]
    logger.info(
        "[Synth] Generated %d images (%d per class, %dx%d, seed=%d)",
        len(examples),
        count_per_class,
        size,
        size,
        seed,
    )
    return examples


def write_synth(faces: list[SynthFace], out_dir: Path, seed: int) -> Path:
    """Write PGM files under <out_dir>/<class>/ plus manifest.csv (filename,label,seed)."""
    out_dir = Path(out_dir)
    rows = []
    for face in faces:
        path = out_dir / face.source_id
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(encode_pgm(face.pixels / 255.0))
        rows.append((face.source_id, face.label.slug, seed))

    buffer = io.StringIO(newline="")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["filename", "label", "seed"])
    writer.writerows(rows)
    manifest = out_dir / MANIFEST_NAME
    manifest.write_text(buffer.getvalue(), encoding="utf-8")
    logger.info("[Synth] Wrote %d images and %s", len(rows), manifest)
    return manifest
