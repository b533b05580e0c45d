"""Scoring, alert categories and movement tracking.

Scores are kept as integer tenths internally ({0, 4, 8, 10, 14, 18}) so the
category lookup is an exact dictionary match.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .errors import ConfigError, InvalidScore, NonMonotoneFrameId

__all__ = [
    "Category",
    "Movement",
    "DetectionReport",
    "TrackState",
    "possibility_flag",
    "shape_pos_score",
    "shape_pos_tenths",
    "final_score_tenths",
    "map_category",
    "category_for_tenths",
    "update_track",
]


class Category(str, Enum):
    NO_CHANGE = "NoChange"
    CHANGE_NOT_HUMAN = "ChangeNotHuman"
    ALERT_PROBABLY_NOT_HUMAN = "AlertProbablyNotHuman"
    ALERT_MOST_PROBABLY_HUMAN = "AlertMostProbablyHuman"
    ALERT_HUMAN = "AlertHuman"
    ALERT_DEFINITE_HUMAN = "AlertDefiniteHuman"

    @property
    def alert(self) -> bool:
        return _ALERTS[self]


class Movement(str, Enum):
    NONE = "None"
    LEFT = "Left"
    RIGHT = "Right"
    APPROACHING = "Approaching"
    RECEDING = "Receding"
    STATIONARY = "Stationary"


_TABLE = {
    0: Category.NO_CHANGE,
    4: Category.CHANGE_NOT_HUMAN,
    8: Category.ALERT_PROBABLY_NOT_HUMAN,
    10: Category.ALERT_MOST_PROBABLY_HUMAN,
    14: Category.ALERT_HUMAN,
    18: Category.ALERT_DEFINITE_HUMAN,
}
_ALERTS = {cat: tenths >= 8 for tenths, cat in _TABLE.items()}


def possibility_flag(ratio: float, threshold: float = 2.3, upper: float | None = None) -> int:
    """1 if the height/width ratio is strictly above ``threshold``.

    ``inf`` (zero horizontal shift) counts as above any threshold. An
    optional ``upper`` bound turns the test into ``threshold < ratio <= upper``.
    """
    if threshold <= 0:
        raise ConfigError("ratio threshold must be > 0")
    if upper is not None and upper < threshold:
        raise ConfigError("ratio upper bound below threshold")
    if not ratio > threshold:
        return 0
    if upper is not None and ratio > upper:
        return 0
    return 1


def _flag(v) -> int:
    if v not in (0, 1):
        raise ValueError(f"flag must be 0 or 1, got {v!r}")
    return int(v)


def shape_pos_tenths(shapeneck: int, shapewaist: int) -> int:
    return 4 * (_flag(shapeneck) + _flag(shapewaist))


def shape_pos_score(shapeneck: int, shapewaist: int) -> float:
    return shape_pos_tenths(shapeneck, shapewaist) / 10


def final_score_tenths(possibility: int, shapeneck: int, shapewaist: int) -> int:
    return 10 * _flag(possibility) + shape_pos_tenths(shapeneck, shapewaist)


def category_for_tenths(tenths: int) -> Category:
    try:
        return _TABLE[tenths]
    except (KeyError, TypeError):
        raise InvalidScore(f"no category for score {tenths}/10") from None


def map_category(final_score) -> Category:
    """Category for a Final_Score in {0, 0.4, 0.8, 1.0, 1.4, 1.8}."""
    try:
        scaled = float(final_score) * 10
    except (TypeError, ValueError):
        raise InvalidScore(f"not a score: {final_score!r}") from None
    if not math.isfinite(scaled):
        raise InvalidScore(f"not a score: {final_score!r}")
    tenths = round(scaled)
    if abs(scaled - tenths) > 1e-9:
        raise InvalidScore(f"no category for score {final_score!r}")
    return category_for_tenths(tenths)


@dataclass(frozen=True)
class TrackState:
    """Recent (frame_id, centroid, bbox_area) observations of one object."""

    capacity: int = 10
    history: tuple = ()

    def __post_init__(self):
        if self.capacity < 2:
            raise ConfigError("track window must hold at least 2 observations")


def update_track(
    state: TrackState,
    frame_id: int,
    centroid: tuple[float, float],
    bbox_area: float,
    epsilon_col: float = 2.0,
    epsilon_area: float = 0.05,
) -> tuple[TrackState, Movement]:
    """Append an observation and classify the motion over the window.

    Column velocity and relative bbox-area growth are averaged over the
    consecutive pairs in the window, each normalised per frame. Sideways
    motion wins over depth motion.
    """
    if state.history and frame_id <= state.history[-1][0]:
        raise NonMonotoneFrameId(f"frame {frame_id} does not follow {state.history[-1][0]}")
    if bbox_area <= 0:
        raise ValueError("bbox_area must be positive")
    history = (state.history + ((frame_id, tuple(centroid), float(bbox_area)),))[-state.capacity :]
    new_state = TrackState(state.capacity, history)
    if len(history) < 2:
        return new_state, Movement.NONE
    col_v, growth = [], []
    for (f0, c0, a0), (f1, c1, a1) in zip(history, history[1:]):
        dt = f1 - f0
        col_v.append((c1[1] - c0[1]) / dt)
        growth.append((a1 / a0) ** (1.0 / dt) - 1.0)
    mean_col = sum(col_v) / len(col_v)
    mean_growth = sum(growth) / len(growth)
    if mean_col < -epsilon_col:
        return new_state, Movement.LEFT
    if mean_col > epsilon_col:
        return new_state, Movement.RIGHT
    if mean_growth > epsilon_area:
        return new_state, Movement.APPROACHING
    if mean_growth < -epsilon_area:
        return new_state, Movement.RECEDING
    return new_state, Movement.STATIONARY


def _fmt_score(tenths: int) -> float:
    return round(tenths / 10, 1)


@dataclass
class DetectionReport:
    frame_id: int
    changed: bool = False
    possibility: int = 0
    shapeneck: int = 0
    shapewaist: int = 0
    shape_pos_tenths: int = 0
    final_score_tenths: int = 0
    category: Category = Category.NO_CHANGE
    centroid: tuple | None = None
    bbox: tuple | None = None
    movement: Movement = Movement.NONE
    diagnostics: dict = field(default_factory=dict)

    @property
    def shape_pos(self) -> float:
        return _fmt_score(self.shape_pos_tenths)

    @property
    def final_score(self) -> float:
        return _fmt_score(self.final_score_tenths)

    def to_dict(self) -> dict:
        return {
            "frame_id": self.frame_id,
            "changed": self.changed,
            "possibility": self.possibility,
            "shapeneck": self.shapeneck,
            "shapewaist": self.shapewaist,
            "shape_pos": self.shape_pos,
            "final_score": self.final_score,
            "category": self.category.value,
            "centroid": None if self.centroid is None else [round(v, 3) for v in self.centroid],
            "bbox": None if self.bbox is None else list(self.bbox),
            "movement": self.movement.value,
            "diagnostics": self.diagnostics,
        }
