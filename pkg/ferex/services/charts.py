"""
Self-contained SVG figures: the accuracy-over-epoch curve and the
row-normalised confusion heatmap. Output is byte-identical for identical input.
"""

import logging
from pathlib import Path
from xml.sax.saxutils import escape, quoteattr

from ferex.config import settings
from ferex.errors import DataValidationError
from ferex.models.schemas import CLASS_LABELS, CLASS_SLUGS
from ferex.services.artifacts import atomic_write_text
from ferex.services.metrics import ConfusionMatrix
from ferex.services.training import TrainingHistory

logger = logging.getLogger(__name__)

TRAIN_COLOR = "#1f77b4"
TEST_COLOR = "#d62728"
CHANCE_COLOR = "#7f7f7f"
FONT = 'font-family="sans-serif"'

# Heatmap ramp endpoints: white (0.0) to dark blue (1.0)
LOW_RGB = (247, 251, 255)
HIGH_RGB = (8, 48, 107)


class SvgBuilder:
    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self.parts: list[str] = []

    def rect(self, x: float, y: float, w: float, h: float, fill: str, extra: str = "") -> None:
        attrs = f' {extra}' if extra else ""
        self.parts.append(
            f'<rect x="{x:.2f}" y="{y:.2f}" width="{w:.2f}" height="{h:.2f}" fill="{fill}"{attrs}/>'
        )

    def line(self, x1: float, y1: float, x2: float, y2: float, stroke: str, extra: str = "") -> None:
        attrs = f' {extra}' if extra else ""
        self.parts.append(
            f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" stroke="{stroke}"{attrs}/>'
        )

    def polyline(self, points: list[tuple[float, float]], stroke: str, extra: str = "") -> None:
        coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
        attrs = f' {extra}' if extra else ""
        self.parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{stroke}" stroke-width="2"{attrs}/>'
        )

    def text(self, x: float, y: float, content: str, extra: str = "") -> None:
        attrs = f' {extra}' if extra else ""
        self.parts.append(f'<text x="{x:.2f}" y="{y:.2f}" {FONT}{attrs}>{escape(content)}</text>')

    def render(self, title: str) -> str:
        head = (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{self.width}" '
            f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">\n'
            f"<title>{escape(title)}</title>\n"
            f'<rect x="0" y="0" width="{self.width}" height="{self.height}" fill="#ffffff"/>\n'
        )
        return head + "\n".join(self.parts) + "\n</svg>\n"


def curve_svg(history: TrainingHistory, width: int = 720, height: int = 440) -> str:
    """Train and test accuracy (%) per epoch with a dashed chance line."""
    if not history.records:
        raise DataValidationError("cannot plot an empty training history")
    left, right, top, bottom = 70, 150, 40, 60
    plot_w = width - left - right
    plot_h = height - top - bottom
    epochs = [r.epoch for r in history.records]
    first, last = epochs[0], epochs[-1]
    span = max(last - first, 1)

    def px(epoch: float) -> float:
        return left + (epoch - first) / span * plot_w

    def py(acc: float) -> float:
        return top + (1.0 - acc) * plot_h

    svg = SvgBuilder(width, height)
    svg.text(width / 2, 24, "Accuracy per epoch", 'text-anchor="middle" font-size="16"')

    # grid + y ticks
    for pct in range(0, 101, 20):
        y = py(pct / 100)
        svg.line(left, y, left + plot_w, y, "#e0e0e0")
        svg.text(left - 8, y + 4, f"{pct}", 'text-anchor="end" font-size="11"')
    # x ticks
    n_ticks = min(10, last - first)
    for k in range(n_ticks + 1):
        epoch = first + round(k * span / n_ticks) if n_ticks else first
        x = px(epoch)
        svg.line(x, top + plot_h, x, top + plot_h + 5, "#000000")
        svg.text(x, top + plot_h + 18, f"{epoch}", 'text-anchor="middle" font-size="11"')

    svg.line(left, top, left, top + plot_h, "#000000")
    svg.line(left, top + plot_h, left + plot_w, top + plot_h, "#000000")
    svg.text(left + plot_w / 2, height - 18, "epoch", 'text-anchor="middle" font-size="13"')
    svg.text(
        18,
        top + plot_h / 2,
        "accuracy (%)",
        f'text-anchor="middle" font-size="13" transform="rotate(-90 18 {top + plot_h / 2:.2f})"',
    )

    chance_y = py(settings.CHANCE_ACCURACY)
    svg.line(
        left, chance_y, left + plot_w, chance_y, CHANCE_COLOR,
        'stroke-dasharray="6,4" stroke-width="1.5" class="chance"',
    )

    perfect = history.first_perfect_epoch()
    if perfect is not None:
        x = px(perfect)
        svg.line(x, top, x, top + plot_h, "#2ca02c", 'stroke-dasharray="2,3" class="perfect-train"')
        svg.text(x + 4, top + 12, f"train 100% @ {perfect}", 'font-size="10" fill="#2ca02c"')

    svg.polyline(
        [(px(r.epoch), py(r.train_accuracy)) for r in history.records], TRAIN_COLOR, 'class="train"'
    )
    svg.polyline(
        [(px(r.epoch), py(r.test_accuracy)) for r in history.records], TEST_COLOR, 'class="test"'
    )

    # legend
    lx, ly = left + plot_w + 16, top + 10
    for i, (label, color, dash) in enumerate(
        (
            ("train", TRAIN_COLOR, ""),
            ("test", TEST_COLOR, ""),
            ("chance (33.3%)", CHANCE_COLOR, 'stroke-dasharray="6,4"'),
        )
    ):
        y = ly + i * 20
        extra = f'stroke-width="2" {dash}'.strip()
        svg.line(lx, y, lx + 24, y, color, extra)
        svg.text(lx + 30, y + 4, label, 'font-size="12"')

    return svg.render("Accuracy per epoch")


def _shade(value: float) -> str:
    v = min(max(value, 0.0), 1.0)
    rgb = (round(lo + (hi - lo) * v) for lo, hi in zip(LOW_RGB, HIGH_RGB))
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def heatmap_svg(confusion: ConfusionMatrix, cell: int = 110) -> str:
    """Row-normalised confusion heatmap; darker cells hold larger fractions."""
    norm = confusion.normalized()
    rows = confusion.row_totals
    left, top = 120, 70
    legend_w = 90
    width = left + cell * len(CLASS_LABELS) + legend_w + 30
    height = top + cell * len(CLASS_LABELS) + 60

    svg = SvgBuilder(width, height)
    svg.text(width / 2, 24, "Confusion matrix (row-normalized)", 'text-anchor="middle" font-size="16"')
    grid_w = cell * len(CLASS_LABELS)
    svg.text(left + grid_w / 2, top - 30, "predicted label", 'text-anchor="middle" font-size="13"')
    svg.text(
        20,
        top + grid_w / 2,
        "true label",
        f'text-anchor="middle" font-size="13" transform="rotate(-90 20 {top + grid_w / 2:.2f})"',
    )

    for j, slug in enumerate(CLASS_SLUGS):
        svg.text(left + j * cell + cell / 2, top - 8, slug, 'text-anchor="middle" font-size="12"')
    for i, label in enumerate(CLASS_LABELS):
        y = top + i * cell
        name = label.slug + (" (n=0)" if rows[label] == 0 else "")
        svg.text(left - 8, y + cell / 2 + 4, name, 'text-anchor="end" font-size="12"')
        for j in range(len(CLASS_LABELS)):
            value = float(norm[i, j])
            x = left + j * cell
            svg.rect(
                x, y, cell, cell, _shade(value),
                f'stroke="#ffffff" class="cell" id="cell-{i}-{j}" data-value={quoteattr(f"{value:.4f}")}',
            )
            text_color = "#ffffff" if value > 0.5 else "#000000"
            svg.text(
                x + cell / 2,
                y + cell / 2 + 5,
                f"{value:.2f}",
                f'text-anchor="middle" font-size="15" fill="{text_color}"',
            )

    # colour legend, dark = high
    lx = left + grid_w + 30
    steps = 10
    step_h = grid_w / steps
    for k in range(steps):
        value = 1.0 - (k + 0.5) / steps
        svg.rect(lx, top + k * step_h, 20, step_h, _shade(value))
    svg.text(lx + 26, top + 8, "1.0", 'font-size="11"')
    svg.text(lx + 26, top + grid_w, "0.0", 'font-size="11"')

    return svg.render("Confusion matrix")


def emit_curve_svg(history: TrainingHistory, path: Path) -> None:
    atomic_write_text(Path(path), curve_svg(history))
    logger.info("[Charts] Wrote accuracy curve to %s", path)


def emit_heatmap_svg(confusion: ConfusionMatrix, path: Path) -> None:
    atomic_write_text(Path(path), heatmap_svg(confusion))
    logger.info("[Charts] Wrote confusion heatmap to %s", path)
