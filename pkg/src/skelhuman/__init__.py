"""Skeleton-based human shape detection for static-camera frame streams."""
from .classify import Category, DetectionReport, Movement, TrackState, map_category, update_track
from .config import PipelineConfig
from .features import ShapeFeatures, compute_features
from .imaging import BinaryMask, GrayImage
from .pipeline import process_frame, run_pipeline
from .skeleton import SkeletonGraph, build_graph, prune, thin

__version__ = "0.1.0"

__all__ = [
    "BinaryMask",
    "Category",
    "DetectionReport",
    "GrayImage",
    "Movement",
    "PipelineConfig",
    "ShapeFeatures",
    "SkeletonGraph",
    "TrackState",
    "build_graph",
    "compute_features",
    "map_category",
    "process_frame",
    "prune",
    "run_pipeline",
    "thin",
    "update_track",
]
