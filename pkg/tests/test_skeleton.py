import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_blob
from skelhuman.errors import ConfigError, EmptyMask, NotThin
from skelhuman.imaging import BinaryMask, connected_components
from skelhuman.skeleton import (
    SQRT2,
    PointKind,
    build_graph,
    classify_points,
    has_block,
    longest_endpoint_geodesic,
    prune,
    step_cost,
    thin,
)


def mask_of(points, shape):
    return BinaryMask.from_points(points, shape)


def kinds(skel):
    out = {}
    for p in classify_points(skel):
        out[p.kind] = out.get(p.kind, 0) + 1
    return out


def t_shape(bar=21, stem=20):
    """Horizontal bar on row 1 with a stem hanging from its middle."""
    mid = bar // 2
    pts = [(1, c) for c in range(bar)] + [(r, mid) for r in range(2, 2 + stem)]
    return mask_of(pts, (stem + 3, bar))


def plus_shape(arm=6):
    n = 2 * arm + 1
    pts = {(arm, c) for c in range(n)} | {(r, arm) for r in range(n)}
    return mask_of(pts, (n, n))


# thinning


def test_thin_line_is_fixed_point():
    line = mask_of([(r, 3) for r in range(20)], (20, 7))
    assert thin(line) == line


def test_thin_bar():
    bits = np.zeros((9, 27), dtype=bool)
    bits[3:6, 3:24] = True
    skel = thin(BinaryMask(bits))
    rows = {r for r, _ in skel.points()}
    assert len(rows) == 1
    assert 17 <= skel.foreground_count <= 21
    assert kinds(skel) == {PointKind.ENDPOINT: 2, PointKind.REGULAR: skel.foreground_count - 2}


def test_thin_disk_collapses():
    rr, cc = np.indices((25, 25))
    disk = (rr - 12) ** 2 + (cc - 12) ** 2 <= 100
    skel = thin(BinaryMask(disk))
    assert 1 <= skel.foreground_count <= 5


def test_thin_keeps_ring():
    rr, cc = np.indices((30, 30))
    d2 = (rr - 15) ** 2 + (cc - 15) ** 2
    ring = (d2 <= 144) & (d2 >= 36)
    skel = thin(BinaryMask(ring))
    graph = build_graph(skel)
    assert len(graph.branches) == 1 and graph.branches[0].is_loop


def test_thin_empty_raises():
    with pytest.raises(EmptyMask):
        thin(BinaryMask.zeros(5, 5))


def test_thin_random_blobs_sound():
    rng = np.random.default_rng(5)
    for _ in range(25):
        bits = random_blob(rng)
        skel = thin(BinaryMask(bits))
        assert len(connected_components(skel)) == len(connected_components(BinaryMask(bits)))
        assert not has_block(skel.bits)
        assert not (skel.bits & ~bits).any()


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 11), st.integers(0, 11)), min_size=1, max_size=80))
def test_thin_properties(points):
    mask = mask_of(points, (12, 12))
    skel = thin(mask)
    assert not has_block(skel.bits)
    assert not (skel.bits & ~mask.bits).any()
    assert len(connected_components(skel)) == len(connected_components(mask))
    assert thin(skel) == skel


# point classification


def test_classify_line():
    line = mask_of([(2, c) for c in range(5)], (5, 5))
    assert kinds(line) == {PointKind.ENDPOINT: 2, PointKind.REGULAR: 3}


def test_classify_minimal_t():
    # arms two pixels long so that no arm touches another diagonally
    skel = mask_of([(0, 0), (0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (2, 2)], (3, 5))
    pts = {p.position: p for p in classify_points(skel)}
    assert pts[(0, 2)].kind is PointKind.FORK and pts[(0, 2)].degree == 3
    assert [p.kind for p in pts.values()].count(PointKind.ENDPOINT) == 3


def test_classify_plus_cluster():
    # per-pixel degree gives a fork at the centre of degree 4
    pts = {p.position: p for p in classify_points(plus_shape(3))}
    assert pts[(3, 3)].degree == 4 and pts[(3, 3)].kind is PointKind.FORK
    assert sum(p.kind is PointKind.ENDPOINT for p in pts.values()) == 4


def test_classify_rejects_block():
    with pytest.raises(NotThin):
        classify_points(mask_of([(0, 0), (0, 1), (1, 0), (1, 1)], (2, 2)))


def test_classify_isolated_pixel():
    (p,) = classify_points(mask_of([(1, 1)], (3, 3)))
    assert p.kind is PointKind.ISOLATED


# graph construction


def test_step_cost():
    assert step_cost((0, 0), (0, 1)) == 1.0
    assert step_cost((0, 0), (1, 1)) == SQRT2
    assert step_cost((0, 0), (1, 1), 1.0) == 1.0


def test_graph_line():
    g = build_graph(mask_of([(r, 2) for r in range(10)], (10, 5)))
    assert len(g.branches) == 1
    assert len(g.endpoints()) == 2 and not g.forks()
    assert g.branches[0].geodesic_length == 9.0


def test_graph_t_arms():
    g = build_graph(t_shape(21, 20))
    (fork,) = g.forks()
    assert fork.position == (1, 10) and fork.degree == 3
    lengths = sorted(b.geodesic_length for b in g.branches)
    assert lengths == pytest.approx([10, 10, 20], abs=1)


def test_graph_plus_merges_fork():
    g = build_graph(plus_shape(6))
    assert len(g.forks()) == 1
    assert g.forks()[0].degree == 4
    assert len(g.branches) == 4


def test_graph_ring_self_loop():
    ring = [(0, 1), (0, 2), (1, 3), (2, 3), (3, 2), (3, 1), (2, 0), (1, 0)]
    g = build_graph(mask_of(ring, (4, 4)))
    assert len(g.branches) == 1 and g.branches[0].is_loop
    assert not g.endpoints() and not g.forks()
    assert g.branches[0].geodesic_length == pytest.approx(4 + 4 * SQRT2)


def test_graph_diagonal_cost():
    diag = mask_of([(i, i) for i in range(6)], (6, 6))
    assert build_graph(diag).branches[0].geodesic_length == pytest.approx(5 * SQRT2)
    assert build_graph(diag, 1.0).branches[0].geodesic_length == 5.0


def test_graph_branches_cover_skeleton():
    rng = np.random.default_rng(9)
    for _ in range(15):
        skel = thin(BinaryMask(random_blob(rng)))
        g = build_graph(skel)
        covered = set()
        for b in g.branches:
            covered.update(b.path)
        assert covered == set(skel.points())


def test_graph_to_dict_roundtrip_keys():
    d = build_graph(t_shape()).to_dict()
    assert set(d) == {"shape", "points", "terminals", "branches"}
    assert all({"a", "b", "geodesic_length", "path"} <= set(b) for b in d["branches"])


# pruning


def test_prune_line_unchanged():
    g = build_graph(mask_of([(0, c) for c in range(4)], (1, 4)))
    assert prune(g) == g


def test_prune_removes_short_spur():
    pts = [(r, 5) for r in range(101)] + [(50, 6), (50, 7), (50, 8)]
    g = prune(build_graph(mask_of(pts, (101, 10))))
    assert len(g.branches) == 1
    assert not g.forks()
    assert g.pixel_set == frozenset((r, 5) for r in range(101))


def test_prune_keeps_long_arms():
    g = build_graph(t_shape(41, 40))
    assert prune(g) == g


def test_prune_threshold_validation():
    with pytest.raises(ConfigError):
        prune(build_graph(t_shape()), -0.1, 5)


def test_prune_idempotent_and_nonempty_on_blobs():
    rng = np.random.default_rng(21)
    for _ in range(20):
        g = prune(build_graph(thin(BinaryMask(random_blob(rng)))))
        assert g.branches
        assert prune(g) == g


def test_longest_endpoint_geodesic():
    g = build_graph(t_shape(21, 20))
    # bar end to stem end: 10 along the bar plus 20 down the stem
    assert longest_endpoint_geodesic(g) == pytest.approx(30.0)
    ring = [(0, 1), (0, 2), (1, 3), (2, 3), (3, 2), (3, 1), (2, 0), (1, 0)]
    assert longest_endpoint_geodesic(build_graph(mask_of(ring, (4, 4)))) == 0.0


def test_prune_of_star_keeps_stem_to_centre():
    stem = [(r, 10) for r in range(10, 60)]
    star = [(10 - k, 10) for k in range(1, 4)] + [(10 - k, 10 - k) for k in range(1, 4)]
    star += [(10 - k, 10 + k) for k in range(1, 4)]
    g = prune(build_graph(mask_of(stem + star, (60, 20))))
    assert len(g.branches) == 1
    top, bottom = sorted(t.position for t in g.endpoints())
    assert bottom == (59, 10)
    # the stem now stops at the former star centre, give or take one pixel
    assert max(abs(top[0] - 10), abs(top[1] - 10)) <= 1
