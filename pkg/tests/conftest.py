"""Shared generators and brute-force oracles for the test suite."""
import math
from pathlib import Path

import numpy as np
from scipy import ndimage

from skelhuman import synthgen
from skelhuman.imaging import BinaryMask
from skelhuman.raster import save_gray
from skelhuman.skeleton import thin

EIGHT = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


def random_blob(rng, lo=100, hi=5000):
    """One 8-connected blob with area in [lo, hi] from a smoothed noise field."""
    size = int(rng.integers(40, 110))
    while True:
        field = ndimage.gaussian_filter(rng.standard_normal((size, size)), sigma=rng.uniform(2, 6))
        bits = field > np.quantile(field, rng.uniform(0.5, 0.9))
        labels, n = ndimage.label(bits, np.ones((3, 3)))
        if n == 0:
            continue
        areas = np.bincount(labels.ravel())[1:]
        k = int(np.argmax(areas)) + 1
        if lo <= areas[k - 1] <= hi:
            return labels == k


def _closes_block(cells, p):
    r, c = p
    for dr in (-1, 0):
        for dc in (-1, 0):
            square = {(r + dr + i, c + dc + j) for i in (0, 1) for j in (0, 1)}
            if square - {p} <= cells:
                return True
    return False


def random_small_skeleton(rng, max_pixels=30):
    """Random 8-connected thin pixel set (no 2x2 block) of 2..max_pixels pixels.

    Grown from momentum random walks that branch off existing pixels, so the
    sets mix chains, forks and small loops.
    """
    size = int(rng.integers(7, 13))
    target = int(rng.integers(2, max_pixels + 1))
    r, c = size // 2, size // 2
    cells = {(r, c)}
    stalls = 0
    while len(cells) < target and stalls < 200:
        r, c = sorted(cells)[int(rng.integers(len(cells)))]
        dr, dc = EIGHT[int(rng.integers(8))]
        for _ in range(int(rng.integers(2, 10))):
            if rng.random() < 0.3:
                dr, dc = EIGHT[int(rng.integers(8))]
            q = (r + dr, c + dc)
            if not (0 <= q[0] < size and 0 <= q[1] < size) or _closes_block(cells, q):
                stalls += 1
                break
            r, c = q
            cells.add(q)
            if len(cells) >= target:
                break
    return BinaryMask.from_points(cells, (size, size))


def brute_correlation(a, b):
    """Pearson r by explicit double loops over rows and columns."""
    h, w = len(a), len(a[0])
    n = h * w
    ma = sum(a[i][j] for i in range(h) for j in range(w)) / n
    mb = sum(b[i][j] for i in range(h) for j in range(w)) / n
    num = saa = sbb = 0.0
    for i in range(h):
        for j in range(w):
            da, db = a[i][j] - ma, b[i][j] - mb
            num += da * db
            saa += da * da
            sbb += db * db
    return num / math.sqrt(saa * sbb)


def min_simple_path(pixels, source, target, diagonal=math.sqrt(2)):
    """Shortest length over every simple 8-connected path (exhaustive DFS)."""
    best = [math.inf]
    seen = {source}

    def walk(p, acc):
        if acc >= best[0]:
            return
        if p == target:
            best[0] = acc
            return
        for dr, dc in EIGHT:
            q = (p[0] + dr, p[1] + dc)
            if q in pixels and q not in seen:
                seen.add(q)
                walk(q, acc + (diagonal if dr and dc else 1.0))
                seen.discard(q)

    walk(source, 0.0)
    return best[0]


def humanoid_scene(scale=1, offset=(30, 40), seed=0, margin=(60, 90)):
    """(background, frame) with the default humanoid composited at ``offset``."""
    mask = synthgen.render_humanoid().mask
    if scale > 1:
        mask = synthgen.upscale(mask, scale)
    h, w = mask.shape
    bg = synthgen.make_background(h + margin[0], w + margin[1], seed=seed)
    return bg, synthgen.composite(bg, mask, offset=offset, seed=seed)


def write_sequence(directory, n_frames=40, seed=3):
    """Numbered frames of a humanoid walking left, with empty frames mixed in.

    Returns the background path and the frame directory.
    """
    directory = Path(directory)
    mask = synthgen.render_humanoid().mask
    h, w = mask.shape
    height, width = h + 40, w + 4 * n_frames + 40
    bg = synthgen.make_background(height, width, seed=seed)
    frames = directory / "frames"
    frames.mkdir(parents=True)
    for i in range(n_frames):
        if i % 9 == 4:
            frame = synthgen.composite(bg, BinaryMask.zeros(h, w), offset=(20, 20), seed=seed + i)
        else:
            col = width - w - 20 - 4 * i
            frame = synthgen.composite(bg, mask, offset=(20, col), seed=seed + i)
        save_gray(frames / f"frame_{i:03d}.png", frame)
    bg_path = save_gray(directory / "background.png", bg)
    return bg_path, frames


def pytest_terminal_summary(terminalreporter):
    import sys

    acceptance = sys.modules.get("test_acceptance")
    lines = getattr(acceptance, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
