"""PNG and binary PPM (P6) reading/writing through Pillow."""

from pathlib import Path

import numpy as np
from PIL import Image

from .errors import FormatError


def read_image(path) -> np.ndarray:
    """Load any Pillow-readable image as an (H, W, 3) uint8 array."""
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("RGB"), dtype=np.uint8).copy()
    except (OSError, SyntaxError, ValueError) as exc:
        if isinstance(exc, FileNotFoundError):
            raise
        raise FormatError(f"cannot read image {path}: {exc}") from exc


def write_image(path, img) -> None:
    """Write PNG, or binary PPM when the suffix is .ppm/.pnm."""
    img = np.asarray(img, dtype=np.uint8)
    fmt = "PPM" if Path(path).suffix.lower() in (".ppm", ".pnm") else "PNG"
    Image.fromarray(img).save(path, format=fmt)
