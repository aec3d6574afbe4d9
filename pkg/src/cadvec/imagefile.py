"""Grayscale PGM (P2/P5) and PNG reading and writing through Pillow."""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

Image.MAX_IMAGE_PIXELS = None  # survey sheets are legitimately huge

_FORMATS = {"PPM", "PNG"}  # Pillow reports PGM files as PPM


class ImageFormatError(ValueError):
    pass


def _to_gray8(im: Image.Image) -> np.ndarray:
    if im.mode in ("I", "I;16", "I;16B"):
        # 16-bit samples arrive scaled to 0..65535
        arr = np.asarray(im, dtype=np.int64)
        return ((arr * 255 + 32767) // 65535).clip(0, 255).astype(np.uint8)
    if im.mode not in ("L", "1", "P", "LA", "RGB", "RGBA"):
        raise ImageFormatError(f"unsupported image mode {im.mode}")
    return np.asarray(im.convert("L"), dtype=np.uint8)


def _decode(source, name) -> np.ndarray:
    try:
        with Image.open(source) as im:
            if im.format not in _FORMATS or (im.format == "PPM" and im.mode not in ("L", "1", "I", "I;16", "I;16B")):
                raise ImageFormatError(f"{name}: unsupported image format (grayscale PGM and PNG only)")
            return _to_gray8(im)
    except ImageFormatError:
        raise
    except (UnidentifiedImageError, OSError, ValueError, SyntaxError) as exc:
        raise ImageFormatError(f"{name}: {exc}") from exc


def parse_pgm(data: bytes) -> np.ndarray:
    """Decode PGM bytes; samples are rescaled to 0..255 when maxval != 255."""
    return _decode(io.BytesIO(data), "PGM data")


def encode_pgm(img: np.ndarray, plain: bool = False) -> bytes:
    img = np.asarray(img)
    if img.dtype == bool:
        img = np.where(img, 0, 255)
    img = img.astype(np.uint8)
    if plain:  # Pillow only writes the binary variant
        height, width = img.shape
        rows = "\n".join(" ".join(map(str, row)) for row in img.tolist())
        return f"P2\n{width} {height}\n255\n{rows}\n".encode()
    buf = io.BytesIO()
    Image.fromarray(img).save(buf, format="PPM")
    return buf.getvalue()


def read_image(path) -> np.ndarray:
    """Load a PGM or PNG file as a 2D uint8 array."""
    return _decode(Path(path), str(path))


def write_image(path, img: np.ndarray) -> None:
    """Write PGM or PNG by extension. Boolean rasters become black ink on white."""
    path = Path(path)
    img = np.asarray(img)
    if img.dtype == bool:
        img = np.where(img, 0, 255)
    fmt = "PNG" if path.suffix.lower() == ".png" else "PPM"
    Image.fromarray(img.astype(np.uint8)).save(path, format=fmt)
