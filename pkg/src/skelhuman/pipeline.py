"""End-to-end frame processing: background gate, object, skeleton, score, track."""
from __future__ import annotations

import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import classify, features, imaging, skeleton
from .classify import DetectionReport, TrackState
from .config import PipelineConfig
from .errors import DegenerateImage, DimensionMismatch, TooFewEndpoints
from .imaging import BinaryMask, GrayImage
from .raster import SUFFIXES, load_gray

__all__ = [
    "ObjectAnalysis",
    "FrameResult",
    "select_background",
    "extract_object",
    "analyze_object",
    "process_frame",
    "frame_stream",
    "run_pipeline",
]


@dataclass(frozen=True, eq=False)
class ObjectAnalysis:
    skeleton: skeleton.SkeletonGraph
    features: features.ShapeFeatures | None
    possibility: int
    shapeneck: int
    shapewaist: int
    note: str | None = None

    @property
    def final_score_tenths(self) -> int:
        return classify.final_score_tenths(self.possibility, self.shapeneck, self.shapewaist)


@dataclass(frozen=True, eq=False)
class FrameResult:
    """Everything about one frame except its movement, which needs the track."""

    report: DetectionReport
    bbox_area: int | None


def select_background(backgrounds: Sequence[GrayImage], frame: GrayImage) -> tuple[int, float | None]:
    """Index of the best-correlating background and its r.

    A constant background or frame has no r; an exact pixel match then
    counts as r = 1, anything else is ranked last.
    """
    best, best_r = 0, None
    for i, bg in enumerate(backgrounds):
        if bg.shape != frame.shape:
            raise DimensionMismatch(f"background {i} is {bg.shape}, frame is {frame.shape}")
        try:
            r = imaging.correlation(bg, frame)
        except DegenerateImage:
            r = 1.0 if np.array_equal(bg.pixels, frame.pixels) else None
        if r is not None and (best_r is None or r > best_r):
            best, best_r = i, r
    return best, best_r


def extract_object(background: GrayImage, frame: GrayImage, config: PipelineConfig):
    """DIFF mask, cleaned mask, components and the isolated object (or None)."""
    diff = imaging.diff_mask(background, frame, config.intensity_tolerance)
    cleaned = imaging.clean_mask(diff, config.open_radius, config.close_radius)
    _, comps = imaging.label_components(cleaned)
    obj = imaging.largest_object(cleaned, config.min_area)
    return diff, cleaned, comps, obj


def analyze_object(mask: BinaryMask, config: PipelineConfig) -> ObjectAnalysis:
    """Thin, prune, measure and flag one object mask."""
    graph = skeleton.build_graph(skeleton.thin(mask), config.diagonal_cost)
    graph = skeleton.prune(graph, config.prune_relative, config.prune_absolute)
    try:
        feats = features.compute_features(graph, config.neck_range, config.waist_range)
    except TooFewEndpoints as exc:
        return ObjectAnalysis(graph, None, 0, 0, 0, note=f"too few endpoints: {exc}")
    possibility = classify.possibility_flag(feats.ratio, config.ratio_threshold, config.ratio_upper)
    return ObjectAnalysis(graph, feats, possibility, feats.shapeneck, feats.shapewaist)


def _ms(t0: float) -> float:
    return round((time.perf_counter() - t0) * 1000.0, 3)


def process_frame(
    frame_id: int,
    frame: GrayImage,
    backgrounds: Sequence[GrayImage],
    config: PipelineConfig,
    timing: bool = False,
) -> FrameResult:
    """Score one frame. Unchanged frames stop right after the correlation gate."""
    stages, times = [], {}
    t0 = time.perf_counter()
    idx, r = select_background(backgrounds, frame)
    stages.append("correlate")
    times["correlate"] = _ms(t0)
    background = backgrounds[idx]
    diag = {"background": idx, "r": None if r is None else round(r, 9), "stages": stages}

    if r is not None:
        changed = r < config.r_threshold
    else:
        changed = imaging.change_detected(background, frame, config.r_threshold)
    report = DetectionReport(frame_id=frame_id, changed=changed, diagnostics=diag)
    if not changed:
        diag["alert"] = False
        if timing:
            diag["timing_ms"] = times
        return FrameResult(report, None)

    t0 = time.perf_counter()
    _, _, comps, obj = extract_object(background, frame, config)
    stages.append("extract")
    times["extract"] = _ms(t0)
    diag["components"] = [c.area for c in comps]
    if obj is None:
        diag["note"] = f"no component reaches min_area={config.min_area}"
        diag["alert"] = False
        if timing:
            diag["timing_ms"] = times
        return FrameResult(report, None)

    stats = comps[0]
    report.centroid = stats.centroid
    report.bbox = stats.bbox
    diag["object_area"] = stats.area

    t0 = time.perf_counter()
    analysis = analyze_object(obj, config)
    stages.extend(["thin", "prune", "features"])
    times["skeleton_features"] = _ms(t0)

    feats = analysis.features
    if feats is not None:
        diag.update(
            T=list(feats.extremal.T),
            B=list(feats.extremal.B),
            V=feats.V,
            H=feats.H,
            ratio="inf" if feats.ratio == float("inf") else round(feats.ratio, 6),
            fork_shapes=[round(f.shape, 6) for f in feats.fork_ratios],
        )
        if feats.skipped_forks:
            diag["skipped_forks"] = [list(p) for p in feats.skipped_forks]
    if analysis.note:
        diag["note"] = analysis.note

    report.possibility = analysis.possibility
    report.shapeneck = analysis.shapeneck
    report.shapewaist = analysis.shapewaist
    report.shape_pos_tenths = classify.shape_pos_tenths(analysis.shapeneck, analysis.shapewaist)
    report.final_score_tenths = analysis.final_score_tenths
    report.category = classify.category_for_tenths(report.final_score_tenths)
    diag["alert"] = report.category.alert
    if timing:
        diag["timing_ms"] = times
    return FrameResult(report, stats.bbox_area)


_DIGITS = re.compile(r"(\d+)")


def frame_stream(source) -> list[tuple[int, Path]]:
    """Numbered frame files, ordered by the last integer in each file name.

    ``source`` is a directory or an iterable of paths.
    """
    if isinstance(source, (str, Path)) and Path(source).is_dir():
        paths = [p for p in Path(source).iterdir() if p.suffix.lower() in SUFFIXES]
    else:
        paths = [Path(p) for p in ([source] if isinstance(source, (str, Path)) else source)]
    numbered = []
    for p in paths:
        digits = _DIGITS.findall(p.stem)
        if not digits:
            raise ValueError(f"frame file {p.name} carries no sequence number")
        numbered.append((int(digits[-1]), p))
    numbered.sort(key=lambda t: (t[0], str(t[1])))
    for (a, pa), (b, pb) in zip(numbered, numbered[1:]):
        if a == b:
            raise ValueError(f"duplicate frame number {a}: {pa.name}, {pb.name}")
    return numbered


# worker-side state for the process pool
_WORKER: dict = {}


def _init_worker(backgrounds, config, timing):
    _WORKER.update(backgrounds=backgrounds, config=config, timing=timing)


def _job(item):
    frame_id, source = item
    try:
        frame = source if isinstance(source, GrayImage) else load_gray(source)
        return process_frame(frame_id, frame, _WORKER["backgrounds"], _WORKER["config"], _WORKER["timing"])
    except Exception as exc:  # reported in-stream; the run continues
        return {"frame_id": frame_id, "error": f"{type(exc).__name__}: {exc}"}


def run_pipeline(
    backgrounds: Sequence[GrayImage],
    frames: Iterable[tuple[int, object]],
    config: PipelineConfig | None = None,
    jobs: int = 1,
    timing: bool = False,
) -> Iterator[dict]:
    """Yield one JSON-ready record per frame, in frame order.

    ``frames`` holds ``(frame_id, path_or_GrayImage)`` pairs with strictly
    increasing ids. Frames are decoded and scored by up to ``jobs`` worker
    processes; the tracker is updated serially in frame order so the output
    does not depend on ``jobs``.
    """
    config = config or PipelineConfig()
    if not backgrounds:
        raise ValueError("at least one background image is required")
    shape = backgrounds[0].shape
    if any(bg.shape != shape for bg in backgrounds):
        raise DimensionMismatch("background images differ in size")
    frames = list(frames)
    for (a, _), (b, _) in zip(frames, frames[1:]):
        if b <= a:
            raise ValueError(f"frame ids must increase strictly: {a} then {b}")

    if jobs > 1:
        pool = ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(backgrounds, config, timing))
        results = pool.map(_job, frames, chunksize=1)
    else:
        pool = None
        _init_worker(backgrounds, config, timing)
        results = map(_job, frames)

    track = TrackState(config.track_window)
    try:
        for result in results:
            if isinstance(result, dict):
                yield result
                continue
            report = result.report
            if report.centroid is not None and result.bbox_area is not None:
                track, report.movement = classify.update_track(
                    track, report.frame_id, report.centroid, result.bbox_area,
                    config.epsilon_col, config.epsilon_area,
                )
            report.diagnostics["movement_alert"] = report.movement in config.alert_directions
            yield report.to_dict()
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
