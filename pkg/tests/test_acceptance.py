"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the terminal
summary) or ``python tests/test_acceptance.py``.
"""
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import (
    brute_correlation,
    humanoid_scene,
    min_simple_path,
    random_blob,
    random_small_skeleton,
    write_sequence,
)
from skelhuman import synthgen
from skelhuman.classify import Category, Movement, TrackState, final_score_tenths, map_category, update_track
from skelhuman.config import PipelineConfig
from skelhuman.errors import InvalidScore
from skelhuman.features import shortest_path
from skelhuman.imaging import BinaryMask, GrayImage, change_detected, connected_components, correlation
from skelhuman.pipeline import analyze_object, process_frame, run_pipeline
from skelhuman.skeleton import build_graph, has_block, prune, thin

RESULTS = []


def record(name, ok, detail=""):
    line = f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else "")
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_01_correlation_oracle():
    rng = np.random.default_rng(2024)
    pairs = [(rng.integers(0, 256, (8, 8)), rng.integers(0, 256, (8, 8))) for _ in range(1000)]
    images = [(GrayImage(a.astype(np.uint8)), GrayImage(b.astype(np.uint8))) for a, b in pairs]
    t0 = time.perf_counter()
    got = [correlation(a, b) for a, b in images]
    elapsed = time.perf_counter() - t0
    worst = max(abs(r - brute_correlation(a.tolist(), b.tolist())) for r, (a, b) in zip(got, pairs))
    record("1 correlation oracle", worst <= 1e-12 and elapsed < 1.0, f"max err {worst:.2e}, {elapsed:.3f} s")


def _blend(bg, other, alpha):
    mix = (1 - alpha) * bg.pixels.astype(np.float64) + alpha * other.pixels.astype(np.float64)
    return GrayImage(np.clip(np.rint(mix), 0, 255).astype(np.uint8))


def test_02_change_gate():
    cfg = PipelineConfig()
    bg, _ = humanoid_scene()
    same = process_frame(0, bg, [bg], cfg).report
    r_same = correlation(bg, bg)
    ok = abs(r_same - 1.0) <= 1e-12 and same.category is Category.NO_CHANGE and not same.changed

    # blend towards an unrelated scene until r crosses 0.95
    other = synthgen.make_background(*bg.shape, seed=991)
    samples = []
    for alpha in np.linspace(0.0, 0.5, 501):
        frame = _blend(bg, other, alpha)
        samples.append((correlation(bg, frame), frame))
    above = min((s for s in samples if s[0] >= 0.95), key=lambda s: s[0])
    below = max((s for s in samples if s[0] < 0.95), key=lambda s: s[0])
    ok = ok and 0.95 - below[0] < 0.005 and above[0] - 0.95 < 0.005
    ok = ok and change_detected(bg, above[1]) is False and change_detected(bg, below[1]) is True
    ok = ok and process_frame(1, above[1], [bg], cfg).report.changed is False
    ok = ok and process_frame(2, below[1], [bg], cfg).report.changed is True
    record("2 change gate", ok, f"r=1 identical; straddle r={above[0]:.4f} / {below[0]:.4f}")


def test_03_skeleton_soundness():
    rng = np.random.default_rng(7)
    blobs = [random_blob(rng) for _ in range(200)]
    failures = []
    t0 = time.perf_counter()
    for i, bits in enumerate(blobs):
        mask = BinaryMask(bits)
        skel = thin(mask)
        if len(connected_components(skel)) != len(connected_components(mask)):
            failures.append((i, "components"))
        if has_block(skel.bits):
            failures.append((i, "2x2 block"))
        pruned = prune(build_graph(skel))
        if not pruned.branches or pruned.mask.foreground_count == 0:
            failures.append((i, "empty"))
        if prune(pruned) != pruned:
            failures.append((i, "not idempotent"))
    elapsed = time.perf_counter() - t0
    areas = [int(b.sum()) for b in blobs]
    ok = not failures and elapsed < 30.0 and min(areas) >= 100 and max(areas) <= 5000
    record("3 skeleton soundness", ok, f"200 blobs, {len(failures)} failures, {elapsed:.2f} s")


def test_04_shortest_path_oracle():
    rng = np.random.default_rng(4)
    cases = []
    for _ in range(100):
        skel = random_small_skeleton(rng)
        pts = sorted(skel.points())
        a = pts[int(rng.integers(len(pts)))]
        b = pts[int(rng.integers(len(pts)))]
        cases.append((skel, a, b))
    t0 = time.perf_counter()
    worst = 0.0
    for skel, a, b in cases:
        _, length = shortest_path(build_graph(skel), a, b)
        worst = max(worst, abs(length - min_simple_path(set(skel.points()), a, b)))
    elapsed = time.perf_counter() - t0
    sizes = [c[0].foreground_count for c in cases]
    ok = worst < 1e-9 and elapsed < 10.0 and max(sizes) <= 30
    record("4 shortest-path oracle", ok, f"100 skeletons of {min(sizes)}-{max(sizes)} px, max err {worst:.1e}, {elapsed:.2f} s")


def test_05_humanoid_recovery():
    cfg = PipelineConfig()
    spec = synthgen.HumanoidSpec()
    bad = []
    necks, waists = [], []
    for i in range(20):
        scale = 1 + i % 3
        offset = (5 + (7 * i) % 50, 3 + (13 * i) % 80)
        bg, frame = humanoid_scene(scale=scale, offset=offset, seed=i)
        report = process_frame(i, frame, [bg], cfg).report
        shapes = report.diagnostics.get("fork_shapes", [])
        neck = [s for s in shapes if 5 <= s <= 8]
        waist = [s for s in shapes if 1 <= s <= 2]
        necks += neck
        waists += waist
        ok = (
            (report.possibility, report.shapeneck, report.shapewaist) == (1, 1, 1)
            and report.final_score == 1.8
            and report.category is Category.ALERT_DEFINITE_HUMAN
            and any(abs(s - spec.expected_neck_shape) <= 0.5 for s in neck)
            and any(abs(s - spec.expected_waist_shape) <= 0.1 for s in waist)
        )
        if not ok:
            bad.append((i, scale, offset))
    detail = f"20 placements x1-x3, neck {min(necks, default=0):.2f}-{max(necks, default=0):.2f}, " \
             f"waist {min(waists, default=0):.2f}-{max(waists, default=0):.2f}, failures {bad}"
    record("5 humanoid recovery", not bad, detail)


def test_06_non_human_rejection():
    cfg = PipelineConfig()
    quad = analyze_object(synthgen.render_quadruped().mask, cfg)
    box = analyze_object(synthgen.render_rigid("Box", 100, 40).mask, cfg)
    quad_score = quad.final_score_tenths / 10
    ok = quad.possibility == 0 and quad_score <= 0.8
    ok = ok and map_category(quad_score) not in (Category.ALERT_HUMAN, Category.ALERT_DEFINITE_HUMAN)
    ok = ok and (box.shapeneck, box.shapewaist) == (0, 0)
    record("6 non-human rejection", ok,
           f"quadruped score {quad_score}, box flags ({box.shapeneck},{box.shapewaist})")


def test_07_score_table():
    expected = {
        0.0: Category.NO_CHANGE,
        0.4: Category.CHANGE_NOT_HUMAN,
        0.8: Category.ALERT_PROBABLY_NOT_HUMAN,
        1.0: Category.ALERT_MOST_PROBABLY_HUMAN,
        1.4: Category.ALERT_HUMAN,
        1.8: Category.ALERT_DEFINITE_HUMAN,
    }
    ok = all(map_category(s) is c for s, c in expected.items())
    # every flag combination lands in the table
    for p in (0, 1):
        for n in (0, 1):
            for w in (0, 1):
                ok = ok and map_category(final_score_tenths(p, n, w) / 10) in expected.values()
    # everything else on a fine grid, plus non-numbers, is rejected
    rejected = 0
    illegal = [round(k * 0.01, 2) for k in range(-300, 301)]
    illegal = [v for v in illegal if v not in expected] + [float("nan"), float("inf"), -float("inf"), None, "1.8x"]
    for v in illegal:
        try:
            map_category(v)
        except InvalidScore:
            rejected += 1
    ok = ok and rejected == len(illegal)
    record("7 score table", ok, f"6 legal scores mapped, {rejected}/{len(illegal)} illegal values rejected")


def _first_hit(moves, target):
    return next((i for i, m in enumerate(moves) if m is target), None)


def test_08_movement():
    state, left = TrackState(), []
    for i in range(12):
        state, m = update_track(state, i, (100.0, 300.0 - 10 * i), 2000.0)
        left.append(m)
    state, closer = TrackState(), []
    for i in range(12):
        state, m = update_track(state, i, (100.0, 150.0), 2000.0 * 1.1 ** i)
        closer.append(m)
    # same two drifts through the full pipeline
    mask = synthgen.render_humanoid().mask
    h, w = mask.shape
    bg = synthgen.make_background(h + 40, w + 80, seed=8)
    walk = [(i, synthgen.composite(bg, mask, offset=(20, 60 - 10 * i))) for i in range(6)]
    walk_moves = [Movement(r["movement"]) for r in run_pipeline([bg], walk)]
    bg2 = synthgen.make_background(140, 140, seed=8)
    grow = []
    for i in range(6):
        side = int(round(40 * 1.1 ** (i / 2)))
        box = BinaryMask(np.ones((side, side), dtype=bool))
        grow.append((i, synthgen.composite(bg2, box, offset=(70 - side // 2, 70 - side // 2))))
    grow_moves = [Movement(r["movement"]) for r in run_pipeline([bg2], grow)]

    onset = 0
    hits = {
        "left": _first_hit(left, Movement.LEFT),
        "approaching": _first_hit(closer, Movement.APPROACHING),
        "pipeline left": _first_hit(walk_moves, Movement.LEFT),
        "pipeline approaching": _first_hit(grow_moves, Movement.APPROACHING),
    }
    ok = all(v is not None and v - onset <= 2 for v in hits.values())
    ok = ok and all(m is Movement.LEFT for m in left[hits["left"]:])
    ok = ok and all(m is Movement.APPROACHING for m in closer[hits["approaching"]:])
    record("8 movement", ok, ", ".join(f"{k} at frame {v}" for k, v in hits.items()))


@pytest.fixture(scope="module")
def sequence(tmp_path_factory):
    return write_sequence(tmp_path_factory.mktemp("seq"), n_frames=40)


def _run_cli(bg, frames, jobs):
    proc = subprocess.run(
        [sys.executable, "-m", "skelhuman", "run", "--background", str(bg), "--frames", str(frames),
         "--jobs", str(jobs)],
        capture_output=True, check=False,
    )
    assert proc.returncode == 0, proc.stderr.decode()
    return proc.stdout


def test_09_determinism(sequence):
    bg, frames = sequence
    serial_a = _run_cli(bg, frames, 1)
    serial_b = _run_cli(bg, frames, 1)
    parallel = _run_cli(bg, frames, 3)
    lines = serial_a.decode().splitlines()
    ok = serial_a == serial_b == parallel and len(lines) == 40
    digest = f"{len(serial_a)} bytes, {len(lines)} records"
    record("9 determinism", ok, f"jobs 1 vs 1 vs 3 byte-identical: {ok}; {digest}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
