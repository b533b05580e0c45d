"""Image containers, change gating and foreground extraction.

Everything here is a pure function of its inputs. ``GrayImage`` and
``BinaryMask`` hold read-only numpy arrays so instances can be shared
between threads and worker processes without copying.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ConfigError, DegenerateImage, DimensionMismatch

__all__ = [
    "GrayImage",
    "BinaryMask",
    "ComponentStats",
    "correlation",
    "change_detected",
    "diff_mask",
    "clean_mask",
    "connected_components",
    "label_components",
    "largest_object",
]

_EIGHT = np.ones((3, 3), dtype=bool)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit intensity grid, indexed ``pixels[row, col]``."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"GrayImage needs a non-empty 2-D array, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if np.any(arr < 0) or np.any(arr > 255):
                raise ValueError("GrayImage intensities must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        object.__setattr__(self, "pixels", _frozen(arr))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    @property
    def data(self) -> list[int]:
        """Row-major intensity values."""
        return self.pixels.ravel().tolist()

    def __eq__(self, other):
        return isinstance(other, GrayImage) and np.array_equal(self.pixels, other.pixels)


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Boolean foreground grid, ``True`` is foreground (white)."""

    bits: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.bits)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"BinaryMask needs a non-empty 2-D array, got shape {arr.shape}")
        object.__setattr__(self, "bits", _frozen(arr.astype(bool)))

    @classmethod
    def zeros(cls, height: int, width: int) -> "BinaryMask":
        return cls(np.zeros((height, width), dtype=bool))

    @classmethod
    def from_points(cls, points, shape) -> "BinaryMask":
        arr = np.zeros(shape, dtype=bool)
        for r, c in points:
            arr[r, c] = True
        return cls(arr)

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.bits.shape

    @property
    def foreground_count(self) -> int:
        return int(np.count_nonzero(self.bits))

    def points(self) -> list[tuple[int, int]]:
        """Foreground pixels in raster order."""
        rows, cols = np.nonzero(self.bits)
        return list(zip(rows.tolist(), cols.tolist()))

    def __eq__(self, other):
        return isinstance(other, BinaryMask) and np.array_equal(self.bits, other.bits)


@dataclass(frozen=True)
class ComponentStats:
    label: int
    area: int
    bbox: tuple[int, int, int, int]  # min_row, min_col, max_row, max_col (inclusive)
    centroid: tuple[float, float]

    @property
    def bbox_area(self) -> int:
        r0, c0, r1, c1 = self.bbox
        return (r1 - r0 + 1) * (c1 - c0 + 1)


def _check_same_shape(a, b):
    if a.shape != b.shape:
        raise DimensionMismatch(f"image sizes differ: {a.shape} vs {b.shape}")


def correlation(a: GrayImage, b: GrayImage) -> float:
    """Pearson correlation coefficient between two equally sized images.

    Raises
    ------
    DimensionMismatch
        If the images differ in size.
    DegenerateImage
        If either image is constant; callers should then compare the
        pixels directly.
    """
    _check_same_shape(a, b)
    da = a.pixels.astype(np.float64)
    db = b.pixels.astype(np.float64)
    da -= da.mean()
    db -= db.mean()
    saa = float(np.sum(da * da))
    sbb = float(np.sum(db * db))
    if saa == 0.0 or sbb == 0.0:
        raise DegenerateImage("correlation undefined for a constant image")
    r = float(np.sum(da * db)) / np.sqrt(saa * sbb)
    return float(min(1.0, max(-1.0, r)))


def check_r_threshold(r_threshold: float) -> None:
    if not (-1.0 < r_threshold <= 1.0):
        raise ConfigError(f"r_threshold must lie in (-1, 1], got {r_threshold}")


def change_detected(background: GrayImage, frame: GrayImage, r_threshold: float = 0.95) -> bool:
    """True when the frame departs from the background.

    The test is ``correlation < r_threshold``. A constant image falls back
    to exact pixel comparison.
    """
    check_r_threshold(r_threshold)
    try:
        return correlation(background, frame) < r_threshold
    except DegenerateImage:
        return not np.array_equal(background.pixels, frame.pixels)


def diff_mask(background: GrayImage, frame: GrayImage, intensity_tolerance: int = 25) -> BinaryMask:
    """White wherever ``|frame - background| > intensity_tolerance``.

    A tolerance of 0 marks every non-zero difference.
    """
    _check_same_shape(background, frame)
    if not 0 <= intensity_tolerance <= 255:
        raise ConfigError(f"intensity_tolerance must lie in [0, 255], got {intensity_tolerance}")
    delta = np.abs(frame.pixels.astype(np.int16) - background.pixels.astype(np.int16))
    return BinaryMask(delta > intensity_tolerance)


def _square(radius: int) -> np.ndarray:
    return np.ones((2 * radius + 1, 2 * radius + 1), dtype=bool)


def clean_mask(mask: BinaryMask, open_radius: int = 1, close_radius: int = 2) -> BinaryMask:
    """Opening then closing with square structuring elements.

    The image is zero-padded so that the closing does not erode shapes
    touching the border.
    """
    if open_radius < 0 or close_radius < 0:
        raise ConfigError("morphology radii must be >= 0")
    bits = mask.bits
    if open_radius > 0:
        bits = ndimage.binary_opening(bits, structure=_square(open_radius))
    if close_radius > 0:
        pad = close_radius
        padded = np.pad(bits, pad)
        padded = ndimage.binary_closing(padded, structure=_square(close_radius))
        bits = padded[pad:-pad, pad:-pad]
    return BinaryMask(bits)


def label_components(mask: BinaryMask) -> tuple[np.ndarray, list[ComponentStats]]:
    """8-connected labeling plus per-component statistics.

    The stats list is sorted by area descending, ties by label.
    """
    labels, n = ndimage.label(mask.bits, structure=_EIGHT)
    if n == 0:
        return labels, []
    flat = labels.ravel()
    areas = np.bincount(flat, minlength=n + 1)
    rows, cols = np.indices(labels.shape)
    row_sums = np.bincount(flat, weights=rows.ravel(), minlength=n + 1)
    col_sums = np.bincount(flat, weights=cols.ravel(), minlength=n + 1)
    stats = []
    for idx, sl in enumerate(ndimage.find_objects(labels), start=1):
        area = int(areas[idx])
        stats.append(
            ComponentStats(
                label=idx,
                area=area,
                bbox=(sl[0].start, sl[1].start, sl[0].stop - 1, sl[1].stop - 1),
                centroid=(float(row_sums[idx] / area), float(col_sums[idx] / area)),
            )
        )
    stats.sort(key=lambda s: (-s.area, s.label))
    return labels, stats


def connected_components(mask: BinaryMask) -> list[ComponentStats]:
    return label_components(mask)[1]


def largest_object(mask: BinaryMask, min_area: int) -> BinaryMask | None:
    """Keep only the largest component, or ``None`` if it is below ``min_area``."""
    if min_area < 1:
        raise ConfigError("min_area must be >= 1")
    labels, stats = label_components(mask)
    if not stats or stats[0].area < min_area:
        return None
    return BinaryMask(labels == stats[0].label)
