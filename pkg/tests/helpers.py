"""Image-file builders shared by the test modules."""

import io

import numpy as np
import png


def png_bytes(rgb: np.ndarray) -> bytes:
    """Encode a uint8 [H,W,3] array as an RGB PNG."""
    height, width, _ = rgb.shape
    buffer = io.BytesIO()
    writer = png.Writer(width=width, height=height, greyscale=False, bitdepth=8)
    writer.write(buffer, rgb.reshape(height, width * 3).tolist())
    return buffer.getvalue()


def pgm_bytes(gray: np.ndarray) -> bytes:
    """Encode a uint8 [H,W] array as a binary P5 PGM."""
    height, width = gray.shape
    return f"P5\n{width} {height}\n255\n".encode("ascii") + gray.astype(np.uint8).tobytes()
