"""Posture and fork-ratio features measured on a pruned skeleton graph."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

from .errors import ConfigError, TooFewEndpoints, Unreachable
from .skeleton import SkeletonGraph, step_cost

__all__ = [
    "ExtremalPoints",
    "ForkRatio",
    "ShapeFeatures",
    "extremal_points",
    "posture_ratio",
    "shortest_path",
    "fork_ratios",
    "shape_flags",
    "compute_features",
]

_TOL = 1e-9
_STEPS = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))


@dataclass(frozen=True)
class ExtremalPoints:
    T: tuple[int, int]
    B: tuple[int, int]
    L: tuple[int, int]
    R: tuple[int, int]


@dataclass(frozen=True)
class ForkRatio:
    fork: tuple[int, int]
    shape1: float  # geodesic length T -> fork along the path
    shape2: float  # fork -> B
    shape: float  # shape2 / shape1


@dataclass(frozen=True)
class ShapeFeatures:
    extremal: ExtremalPoints
    V: float
    H: float
    ratio: float  # math.inf when H == 0
    path: tuple
    path_length: float
    fork_ratios: tuple
    shapeneck: int
    shapewaist: int
    skipped_forks: tuple = field(default=())

    def to_dict(self) -> dict:
        return {
            "extremal": {k: list(getattr(self.extremal, k)) for k in "TBLR"},
            "V": self.V,
            "H": self.H,
            "ratio": "inf" if math.isinf(self.ratio) else round(self.ratio, 6),
            "path_length": round(self.path_length, 6),
            "fork_ratios": [
                {
                    "fork": list(f.fork),
                    "shape1": round(f.shape1, 6),
                    "shape2": round(f.shape2, 6),
                    "shape": round(f.shape, 6),
                }
                for f in self.fork_ratios
            ],
            "shapeneck": self.shapeneck,
            "shapewaist": self.shapewaist,
            "skipped_forks": [list(p) for p in self.skipped_forks],
        }


def extremal_points(graph: SkeletonGraph) -> ExtremalPoints:
    """Topmost, bottommost, leftmost and rightmost endpoints.

    Ties go to the smaller column for T/B and to the smaller row for L/R.
    """
    ends = [t.position for t in graph.endpoints()]
    if len(ends) < 2:
        raise TooFewEndpoints(f"need at least 2 endpoints, skeleton has {len(ends)}")
    return ExtremalPoints(
        T=min(ends, key=lambda p: (p[0], p[1])),
        B=min(ends, key=lambda p: (-p[0], p[1])),
        L=min(ends, key=lambda p: (p[1], p[0])),
        R=min(ends, key=lambda p: (-p[1], p[0])),
    )


def posture_ratio(extremal: ExtremalPoints) -> tuple[float, float, float]:
    """Vertical shift, horizontal shift and their ratio (``inf`` when H is 0)."""
    v = float(extremal.B[0] - extremal.T[0])
    h = float(extremal.R[1] - extremal.L[1])
    return v, h, (v / h if h > 0 else math.inf)


def _distances_from(source, pixels, diagonal_cost):
    dist = {source: 0.0}
    heap = [(0.0, source)]
    while heap:
        d, p = heapq.heappop(heap)
        if d > dist[p]:
            continue
        for dr, dc in _STEPS:
            q = (p[0] + dr, p[1] + dc)
            if q not in pixels:
                continue
            nd = d + step_cost(p, q, diagonal_cost)
            if nd < dist.get(q, math.inf) - _TOL:
                dist[q] = nd
                heapq.heappush(heap, (nd, q))
    return dist


def shortest_path(graph: SkeletonGraph, source, target, diagonal_cost: float | None = None):
    """Minimum-geodesic path between two skeleton pixels.

    Among equally short paths the lexicographically smallest pixel sequence
    is returned.

    Returns
    -------
    (tuple of pixels, float length)
    """
    if diagonal_cost is None:
        diagonal_cost = graph.diagonal_cost
    source, target = tuple(source), tuple(target)
    pixels = graph.pixel_set
    for p in (source, target):
        if p not in pixels:
            raise ValueError(f"pixel {p} is not on the skeleton")
    to_target = _distances_from(target, pixels, diagonal_cost)
    if source not in to_target:
        raise Unreachable(f"{source} and {target} lie in different components")
    path = [source]
    cur = source
    while cur != target:
        # tight edges only; sorted steps give the lexicographic choice
        for dr, dc in _STEPS:
            q = (cur[0] + dr, cur[1] + dc)
            if q in to_target and abs(step_cost(cur, q, diagonal_cost) + to_target[q] - to_target[cur]) < 1e-7:
                cur = q
                break
        path.append(cur)
    return tuple(path), to_target[source]


def _cumulative(path, diagonal_cost):
    out = [0.0]
    for p, q in zip(path, path[1:]):
        out.append(out[-1] + step_cost(p, q, diagonal_cost))
    return out


def fork_ratios(graph: SkeletonGraph, path, skipped: list | None = None) -> list[ForkRatio]:
    """Split the T->B path at every fork node it passes through.

    A merged fork is on the path if any of its pixels is; the split point is
    the representative pixel, or the on-path cluster pixel nearest to it.
    Forks that coincide with either end (zero length on one side) are left
    out and, if ``skipped`` is given, appended to it.
    """
    path = tuple(tuple(p) for p in path)
    if len(path) < 2:
        return []
    cum = _cumulative(path, graph.diagonal_cost)
    total = cum[-1]
    index = {}
    for i, p in enumerate(path):
        index.setdefault(p, i)
    out = []
    for fork in graph.forks():
        hits = [index[p] for p in fork.pixels if p in index]
        if not hits:
            continue
        if fork.position in index:
            i = index[fork.position]
        else:
            r, c = fork.position
            i = min(hits, key=lambda j: ((path[j][0] - r) ** 2 + (path[j][1] - c) ** 2, j))
        shape1, shape2 = cum[i], total - cum[i]
        if shape1 <= _TOL or shape2 <= _TOL:
            if skipped is not None:
                skipped.append(fork.position)
            continue
        out.append(ForkRatio(fork.position, shape1, shape2, shape2 / shape1))
    out.sort(key=lambda f: (f.shape1, f.fork))
    return out


def _check_range(name, rng):
    lo, hi = rng
    if not (0 < lo <= hi):
        raise ConfigError(f"{name} must satisfy 0 < lo <= hi, got {rng}")


def shape_flags(ratios, neck_range=(5.0, 8.0), waist_range=(1.0, 2.0)) -> tuple[int, int]:
    """(shapeneck, shapewaist): 1 if any fork shape falls in the closed range."""
    _check_range("neck_range", neck_range)
    _check_range("waist_range", waist_range)
    shapes = [f.shape if isinstance(f, ForkRatio) else float(f) for f in ratios]
    neck = int(any(neck_range[0] <= s <= neck_range[1] for s in shapes))
    waist = int(any(waist_range[0] <= s <= waist_range[1] for s in shapes))
    return neck, waist


def compute_features(graph: SkeletonGraph, neck_range=(5.0, 8.0), waist_range=(1.0, 2.0)) -> ShapeFeatures:
    extremal = extremal_points(graph)
    v, h, ratio = posture_ratio(extremal)
    path, length = shortest_path(graph, extremal.T, extremal.B)
    skipped = []
    ratios = fork_ratios(graph, path, skipped)
    neck, waist = shape_flags(ratios, neck_range, waist_range)
    return ShapeFeatures(
        extremal=extremal,
        V=v,
        H=h,
        ratio=ratio,
        path=path,
        path_length=length,
        fork_ratios=tuple(ratios),
        shapeneck=neck,
        shapewaist=waist,
        skipped_forks=tuple(skipped),
    )
