"""Raster file I/O (portable anymap family and PNG) via Pillow.

Colour input is reduced to grey with the ITU-R BT.601 luma weights
0.299 R + 0.587 G + 0.114 B, rounded half-to-even, so results do not
depend on a decoder's own conversion.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .imaging import BinaryMask, GrayImage

__all__ = ["LUMA", "to_gray", "load_gray", "save_gray", "save_mask", "load_mask", "SUFFIXES"]

LUMA = (0.299, 0.587, 0.114)
SUFFIXES = (".pgm", ".ppm", ".pnm", ".pbm", ".png")


def to_gray(arr: np.ndarray) -> GrayImage:
    arr = np.asarray(arr)
    if arr.ndim == 2:
        if arr.dtype == bool:
            return GrayImage(arr.astype(np.uint8) * 255)
        return GrayImage(arr.astype(np.uint8))
    if arr.ndim == 3 and arr.shape[2] in (3, 4):
        rgb = arr[..., :3].astype(np.float64)
        grey = rgb[..., 0] * LUMA[0] + rgb[..., 1] * LUMA[1] + rgb[..., 2] * LUMA[2]
        return GrayImage(np.clip(np.rint(grey), 0, 255).astype(np.uint8))
    raise ValueError(f"unsupported image array shape {arr.shape}")


def load_gray(path) -> GrayImage:
    """Read a raster file as an 8-bit grey image."""
    with Image.open(path) as im:
        im.load()
        if im.mode == "L":
            return GrayImage(np.asarray(im))
        if im.mode == "1":
            return GrayImage(np.asarray(im, dtype=np.uint8) * 255)
        if im.mode not in ("RGB", "RGBA"):
            im = im.convert("RGB")
        return to_gray(np.asarray(im))


def _write(path, arr: np.ndarray) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fmt = "PPM" if path.suffix.lower() in (".pgm", ".ppm", ".pnm") else None
    Image.fromarray(np.ascontiguousarray(arr, dtype=np.uint8)).save(path, format=fmt)
    return path


def save_gray(path, image: GrayImage) -> Path:
    return _write(path, np.ascontiguousarray(image.pixels))


def save_mask(path, mask: BinaryMask) -> Path:
    """Write a mask as a grey raster holding only 0 and 255."""
    return _write(path, mask.bits.astype(np.uint8) * 255)


def load_mask(path, level: int = 127) -> BinaryMask:
    return BinaryMask(load_gray(path).pixels > level)
