"""Pipeline configuration and its key = value text format.

Example file::

    # comments and blank lines are ignored
    r_threshold = 0.95
    neck_range = 5.0, 8.0
    alert_directions = Approaching, Left
    ratio_upper = none
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .classify import Movement
from .errors import ConfigError
from .imaging import check_r_threshold
from .skeleton import SQRT2

__all__ = ["PipelineConfig"]

_STEP_METRICS = ("geodesic", "unit")


@dataclass(frozen=True)
class PipelineConfig:
    r_threshold: float = 0.95
    intensity_tolerance: int = 25
    min_area: int = 200
    open_radius: int = 1
    close_radius: int = 2
    prune_relative: float = 0.05
    prune_absolute: float = 5.0
    ratio_threshold: float = 2.3
    ratio_upper: float | None = None
    neck_range: tuple[float, float] = (5.0, 8.0)
    waist_range: tuple[float, float] = (1.0, 2.0)
    track_window: int = 10
    epsilon_col: float = 2.0
    epsilon_area: float = 0.05
    alert_directions: frozenset = field(default_factory=lambda: frozenset({Movement.APPROACHING}))
    step_metric: str = "geodesic"

    def __post_init__(self):
        object.__setattr__(self, "neck_range", tuple(float(v) for v in self.neck_range))
        object.__setattr__(self, "waist_range", tuple(float(v) for v in self.waist_range))
        object.__setattr__(self, "alert_directions", frozenset(Movement(m) for m in self.alert_directions))
        self.validate()

    def validate(self) -> None:
        check_r_threshold(self.r_threshold)
        if not 0 <= self.intensity_tolerance <= 255:
            raise ConfigError("intensity_tolerance must lie in [0, 255]")
        if self.min_area < 1:
            raise ConfigError("min_area must be >= 1")
        if self.open_radius < 0 or self.close_radius < 0:
            raise ConfigError("morphology radii must be >= 0")
        if self.prune_relative < 0 or self.prune_absolute < 0:
            raise ConfigError("prune thresholds must be >= 0")
        if self.ratio_threshold <= 0:
            raise ConfigError("ratio_threshold must be > 0")
        if self.ratio_upper is not None and self.ratio_upper < self.ratio_threshold:
            raise ConfigError("ratio_upper must be >= ratio_threshold")
        for name in ("neck_range", "waist_range"):
            rng = getattr(self, name)
            if len(rng) != 2 or not 0 < rng[0] <= rng[1]:
                raise ConfigError(f"{name} must be 'lo, hi' with 0 < lo <= hi")
        if self.track_window < 2:
            raise ConfigError("track_window must be >= 2")
        if self.epsilon_col <= 0 or self.epsilon_area <= 0:
            raise ConfigError("movement epsilons must be > 0")
        if self.step_metric not in _STEP_METRICS:
            raise ConfigError(f"step_metric must be one of {_STEP_METRICS}")

    @property
    def diagonal_cost(self) -> float:
        return SQRT2 if self.step_metric == "geodesic" else 1.0

    def replace(self, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)

    # text format

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if value is None:
                text = "none"
            elif isinstance(value, tuple):
                text = ", ".join(repr(v) for v in value)
            elif isinstance(value, frozenset):
                text = ", ".join(sorted(m.value for m in value))
            else:
                text = repr(value) if not isinstance(value, str) else value
            lines.append(f"{f.name} = {text}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PipelineConfig":
        types = {f.name: f for f in dataclasses.fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or key not in types:
                raise ConfigError(f"line {lineno}: unknown or malformed entry {raw.strip()!r}")
            try:
                values[key] = _parse(key, value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
        return cls(**values)

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        return cls.from_text(Path(path).read_text())

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_text())
        return path


def _parse(key: str, value: str):
    if key in ("intensity_tolerance", "min_area", "open_radius", "close_radius", "track_window"):
        return int(value)
    if key == "ratio_upper":
        return None if value.lower() in ("none", "") else float(value)
    if key in ("neck_range", "waist_range"):
        parts = [p for p in value.replace(" ", "").split(",") if p]
        if len(parts) != 2:
            raise ValueError("expected 'lo, hi'")
        return tuple(float(p) for p in parts)
    if key == "alert_directions":
        return frozenset(Movement(p.strip()) for p in value.split(",") if p.strip())
    if key == "step_metric":
        return value
    return float(value)
