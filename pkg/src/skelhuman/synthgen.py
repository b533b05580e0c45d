"""Deterministic synthetic silhouettes with known landmarks.

Figures are unions of capsules (thick segments with round caps) and disks
rasterised by distance test, so the output depends only on the inputs.

Humanoid layout
---------------
The stick axis runs from the head centre down to the neck joint, down the
trunk to the waist joint, sideways along the hip to the leg, and down to
the foot. ``neck_fraction`` and ``waist_fraction`` are positions along that
axis, which is where a thinned silhouette puts its topmost endpoint, its
forks and its foot endpoint. The expected fork shapes are therefore
``(1 - f) / f`` exactly for the upright poses. Arms hang from a shoulder
bar through the neck joint so the neck fork is a clean crossing rather
than an acute wedge that would drag the fork downward.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigError, SpecTooSmall
from .imaging import BinaryMask, GrayImage

__all__ = [
    "Pose",
    "RigidKind",
    "HumanoidSpec",
    "FigureGroundTruth",
    "render_humanoid",
    "render_quadruped",
    "render_rigid",
    "make_background",
    "composite",
    "upscale",
]


class Pose(str, Enum):
    ARMS_DOWN = "ArmsDown"
    ARMS_OUT = "ArmsOut"
    SLIGHT_BEND = "SlightBend"


class RigidKind(str, Enum):
    BOX = "Box"
    CAR_LIKE = "CarLike"


@dataclass(frozen=True)
class HumanoidSpec:
    height_px: int = 160
    neck_fraction: float = 0.125
    waist_fraction: float = 0.42
    arm_span_fraction: float = 0.30
    limb_thickness: int | None = None  # None: max(3, round(height / 32))
    pose: Pose = Pose.ARMS_DOWN
    jitter_px: float = 0.0

    @property
    def thickness(self) -> int:
        if self.limb_thickness is not None:
            return self.limb_thickness
        return max(3, round(self.height_px / 32))

    @property
    def expected_neck_shape(self) -> float:
        return (1 - self.neck_fraction) / self.neck_fraction

    @property
    def expected_waist_shape(self) -> float:
        return (1 - self.waist_fraction) / self.waist_fraction


@dataclass(frozen=True, eq=False)
class FigureGroundTruth:
    mask: BinaryMask
    landmarks: dict
    expected_ratio_VH: float
    expected_fork_shapes: tuple
    name: str = "figure"
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def enc(v):
            if isinstance(v, tuple) and len(v) == 2 and not isinstance(v[0], tuple):
                return [int(v[0]), int(v[1])]
            return [enc(x) for x in v]

        return {
            "name": self.name,
            "shape": list(self.mask.shape),
            "params": self.params,
            "landmarks": {k: enc(v) for k, v in self.landmarks.items()},
            "expected_ratio_VH": self.expected_ratio_VH,
            "expected_fork_shapes": list(self.expected_fork_shapes),
        }


class _Canvas:
    def __init__(self, height, width):
        self.bits = np.zeros((height, width), dtype=bool)
        self.rows, self.cols = np.indices((height, width), dtype=np.float64)

    def capsule(self, p, q, thickness):
        (r0, c0), (r1, c1) = p, q
        dr, dc = r1 - r0, c1 - c0
        seg2 = dr * dr + dc * dc
        pr, pc = self.rows - r0, self.cols - c0
        t = np.zeros_like(pr) if seg2 == 0 else np.clip((pr * dr + pc * dc) / seg2, 0.0, 1.0)
        d2 = (pr - t * dr) ** 2 + (pc - t * dc) ** 2
        self.bits |= d2 <= (thickness / 2.0) ** 2 + 1e-9

    def disk(self, centre, radius):
        # (r + 1/2)^2 avoids the one-pixel bumps at the compass points that
        # d^2 <= r^2 leaves, which turn into spurious branches when upscaled
        self.bits |= (self.rows - centre[0]) ** 2 + (self.cols - centre[1]) ** 2 < (radius + 0.5) ** 2

    def rect(self, r0, c0, r1, c1):
        self.bits[r0 : r1 + 1, c0 : c1 + 1] = True


def _ipt(p):
    return (int(round(p[0])), int(round(p[1])))


def render_humanoid(spec: HumanoidSpec = HumanoidSpec(), seed: int = 0) -> FigureGroundTruth:
    """Rasterise a stick humanoid and its ground truth.

    ``seed`` only matters when ``spec.jitter_px > 0``.
    """
    h, t = spec.height_px, spec.thickness
    if h < 60 or t < 3:
        raise SpecTooSmall(f"humanoid needs height >= 60 and thickness >= 3, got {h}, {t}")
    if not 0 < spec.neck_fraction < spec.waist_fraction < 1:
        raise ConfigError("need 0 < neck_fraction < waist_fraction < 1")
    if spec.arm_span_fraction <= 0:
        raise ConfigError("arm_span_fraction must be > 0")

    head_r = max(t, round(0.05 * h))
    hip = max(round(0.06 * h), t + 3)
    half_span = spec.arm_span_fraction * h / 2.0
    if half_span < hip + t + 3:
        raise ConfigError("arm span too narrow: arms would merge with the legs")
    drop = h - head_r - t / 2.0  # head centre to foot axis end
    axis = drop + hip
    neck_at = spec.neck_fraction * axis
    waist_at = spec.waist_fraction * axis
    if neck_at < head_r + t:
        raise SpecTooSmall("neck joint falls inside the head")
    if waist_at - neck_at < 2 * t:
        raise ConfigError("neck and waist joints too close")
    if waist_at > drop - 2 * t:
        raise ConfigError("waist joint too close to the feet")

    rng = np.random.default_rng(seed)

    def jit():
        return float(rng.uniform(-spec.jitter_px, spec.jitter_px)) if spec.jitter_px > 0 else 0.0

    margin = head_r + t + 4
    width = int(math.ceil(2 * (max(half_span, hip) + margin)))
    height = int(math.ceil(h + 2 * margin))
    cx = width // 2
    top = float(margin + head_r)  # head centre row

    lean = 0.0
    if spec.pose is Pose.SLIGHT_BEND:
        lean = math.tan(math.radians(8.0)) * (waist_at - neck_at)
    waist = (top + waist_at, float(cx))
    neck = (top + neck_at, cx + lean + jit())
    head = (top, neck[1] + jit())
    foot_row = top + drop
    hip_l, hip_r = (waist[0], cx - hip), (waist[0], cx + hip)
    foot_l, foot_r = (foot_row, cx - hip + jit()), (foot_row, cx + hip + jit())

    if spec.pose is Pose.ARMS_OUT:
        hand_l = (neck[0], neck[1] - half_span)
        hand_r = (neck[0], neck[1] + half_span)
        shoulder_l, shoulder_r = hand_l, hand_r
    else:
        arm = 0.35 * h
        shoulder_l = (neck[0], neck[1] - half_span)
        shoulder_r = (neck[0], neck[1] + half_span)
        hand_l = (neck[0] + arm, shoulder_l[1] + jit())
        hand_r = (neck[0] + arm, shoulder_r[1] + jit())

    pts = {k: _ipt(v) for k, v in dict(
        head=head, neck=neck, waist=waist, hip_l=hip_l, hip_r=hip_r, foot_l=foot_l,
        foot_r=foot_r, shoulder_l=shoulder_l, shoulder_r=shoulder_r, hand_l=hand_l, hand_r=hand_r,
    ).items()}
    canvas = _Canvas(height, width)
    canvas.disk(pts["head"], head_r)
    for a, b in [
        ("head", "neck"), ("neck", "waist"), ("hip_l", "hip_r"), ("hip_l", "foot_l"),
        ("hip_r", "foot_r"), ("shoulder_l", "shoulder_r"), ("shoulder_l", "hand_l"),
        ("shoulder_r", "hand_r"),
    ]:
        canvas.capsule(pts[a], pts[b], t)

    half_t = t // 2
    landmarks = {
        "head_tip": (pts["head"][0] - head_r, pts["head"][1]),
        "head_centre": pts["head"],
        "neck_joint": pts["neck"],
        "waist_joint": pts["waist"],
        "foot_tip": (pts["foot_l"][0] + half_t, pts["foot_l"][1]),
        "foot_tips": ((pts["foot_l"][0] + half_t, pts["foot_l"][1]), (pts["foot_r"][0] + half_t, pts["foot_r"][1])),
        "foot_axis_ends": (pts["foot_l"], pts["foot_r"]),
        "hand_tips": (pts["hand_l"], pts["hand_r"]),
    }

    # expected values measured along the stick axis, as the skeleton sees it
    def seg(a, b):
        return math.dist(pts[a], pts[b])

    upper = seg("head", "neck")
    trunk = seg("neck", "waist")
    lower = seg("waist", "hip_l") + seg("hip_l", "foot_l")
    total = upper + trunk + lower
    shapes = ((total - upper) / upper, lower / (upper + trunk))
    ends = [pts["hand_l"], pts["hand_r"], pts["foot_l"], pts["foot_r"], pts["head"]]
    v = max(p[0] for p in ends) - pts["head"][0]
    span = max(p[1] for p in ends) - min(p[1] for p in ends)
    return FigureGroundTruth(
        mask=BinaryMask(canvas.bits),
        landmarks=landmarks,
        expected_ratio_VH=v / span,
        expected_fork_shapes=shapes,
        name="humanoid",
        params={
            "height_px": h, "neck_fraction": spec.neck_fraction, "waist_fraction": spec.waist_fraction,
            "arm_span_fraction": spec.arm_span_fraction, "limb_thickness": t, "pose": spec.pose.value,
            "jitter_px": spec.jitter_px, "seed": seed,
        },
    )


def render_quadruped(body_length_px: int = 120, leg_length_px: int = 40, thickness: int | None = None) -> FigureGroundTruth:
    """Four-legged silhouette: horizontal body, legs, raised neck and head."""
    if not body_length_px > leg_length_px >= 10:
        raise SpecTooSmall("need body_length_px > leg_length_px >= 10")
    L, legs = body_length_px, leg_length_px
    t = thickness if thickness is not None else max(3, round(L / 24))
    head_r = max(t, round(0.06 * L))
    neck_rise, neck_reach = 0.2 * L, 0.1 * L
    margin = head_r + t + 4
    height = int(math.ceil(neck_rise + legs + 2 * margin + head_r))
    width = int(math.ceil(L + neck_reach + 2 * margin + head_r))
    body_row = float(margin + head_r + neck_rise)
    rear, front = float(margin), float(margin + L)
    head = (body_row - neck_rise, front + neck_reach)

    canvas = _Canvas(height, width)
    canvas.capsule(_ipt((body_row, rear)), _ipt((body_row, front)), t)
    feet = []
    for frac in (0.12, 0.25, 0.8, 0.92):
        top = _ipt((body_row, rear + frac * L))
        foot = _ipt((body_row + legs, rear + frac * L))
        canvas.capsule(top, foot, t)
        feet.append(foot)
    canvas.capsule(_ipt((body_row, front)), _ipt(head), t)
    canvas.disk(_ipt(head), head_r)

    v = feet[0][0] - _ipt(head)[0]
    h = _ipt(head)[1] - int(round(rear))
    return FigureGroundTruth(
        mask=BinaryMask(canvas.bits),
        landmarks={"head_centre": _ipt(head), "rear_end": _ipt((body_row, rear)), "foot_tips": tuple(feet)},
        expected_ratio_VH=v / h,
        expected_fork_shapes=(),
        name="quadruped",
        params={"body_length_px": L, "leg_length_px": legs, "thickness": t},
    )


def render_rigid(kind: RigidKind | str = RigidKind.BOX, w: int = 100, h: int = 40) -> FigureGroundTruth:
    """Solid box, or a car-like body with cabin and wheels.

    ``expected_ratio_VH`` is the bounding-box proportion ``h / w``.
    """
    kind = RigidKind(kind)
    if w < 10 or h < 10:
        raise SpecTooSmall("rigid shapes need w, h >= 10")
    margin = 4
    canvas = _Canvas(h + 2 * margin, w + 2 * margin)
    r0, c0 = margin, margin
    if kind is RigidKind.BOX:
        canvas.rect(r0, c0, r0 + h - 1, c0 + w - 1)
    else:
        wheel = max(2, round(0.2 * h))
        cabin_h = round(0.35 * h)
        body_bottom = r0 + h - 1 - wheel
        canvas.rect(r0 + cabin_h, c0, body_bottom, c0 + w - 1)
        canvas.rect(r0, c0 + round(0.25 * w), r0 + cabin_h, c0 + round(0.75 * w))
        for fc in (0.2, 0.8):
            canvas.disk((body_bottom, c0 + round(fc * (w - 1))), wheel)
    return FigureGroundTruth(
        mask=BinaryMask(canvas.bits),
        landmarks={"top_left": (r0, c0), "bottom_right": (r0 + h - 1, c0 + w - 1)},
        expected_ratio_VH=h / w,
        expected_fork_shapes=(),
        name=kind.value,
        params={"kind": kind.value, "w": w, "h": h},
    )


def upscale(mask: BinaryMask, factor: int) -> BinaryMask:
    """Nearest-neighbour integer upscaling."""
    return BinaryMask(np.kron(mask.bits, np.ones((factor, factor), dtype=bool)))


def make_background(height: int, width: int, seed: int = 0, level: int = 170, noise: float = 6.0) -> GrayImage:
    """Flat mid-grey scene with a mild gradient and fixed texture."""
    rng = np.random.default_rng(seed)
    rows, cols = np.indices((height, width), dtype=np.float64)
    base = level + 10.0 * (cols / max(width - 1, 1) - 0.5) + 5.0 * (rows / max(height - 1, 1) - 0.5)
    img = base + rng.normal(0.0, noise, size=(height, width))
    return GrayImage(np.clip(np.rint(img), 0, 255).astype(np.uint8))


def composite(
    background: GrayImage,
    mask: BinaryMask,
    offset: tuple[int, int] = (0, 0),
    intensity: int = 40,
    noise: float = 0.0,
    seed: int = 0,
) -> GrayImage:
    """Paint ``mask`` at ``offset`` (top-left, row/col) onto a copy of the background.

    Parts of the figure falling outside the frame are clipped. ``noise``
    adds Gaussian sensor noise to the whole frame.
    """
    out = background.pixels.astype(np.float64)
    r0, c0 = offset
    H, W = out.shape
    mh, mw = mask.shape
    rs, cs = max(r0, 0), max(c0, 0)
    re, ce = min(r0 + mh, H), min(c0 + mw, W)
    if rs < re and cs < ce:
        sub = mask.bits[rs - r0 : re - r0, cs - c0 : ce - c0]
        region = out[rs:re, cs:ce]
        region[sub] = intensity
    if noise > 0:
        out += np.random.default_rng(seed).normal(0.0, noise, size=out.shape)
    return GrayImage(np.clip(np.rint(out), 0, 255).astype(np.uint8))
