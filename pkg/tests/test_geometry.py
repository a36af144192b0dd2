"""Scene geometry: point processes, segment intersection, LoS masks."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from riscov.geometry import (
    Point2D,
    Scene,
    Segment2D,
    is_los,
    los_mask,
    sample_blockage_arrays,
    sample_blockages,
    sample_disc_points,
    sample_poisson_count,
    sample_ppp_disc,
    segment_hit_mask,
    segments_intersect,
)

coord = st.floats(min_value=-50.0, max_value=50.0,
                  allow_nan=False, allow_infinity=False)


def test_poisson_count_moments(rng):
    counts = np.array([sample_poisson_count(2e-3, math.pi * 100.0 ** 2, rng)
                       for _ in range(4000)])
    mean = 2e-3 * math.pi * 1e4
    assert counts.mean() == pytest.approx(mean, rel=0.03)
    assert counts.var() == pytest.approx(mean, rel=0.08)


def test_disc_points_radial_law(rng):
    pts = sample_disc_points(40_000, 10.0, rng)
    r = np.hypot(pts[:, 0], pts[:, 1])
    assert np.all(r <= 10.0)
    # F(r) = (r/R)^2; KS against it
    grid = np.sort(r) / 10.0
    ks = np.max(np.abs(grid ** 2 - np.arange(1, r.size + 1) / r.size))
    assert ks < 0.012


def test_disc_points_isotropy(rng):
    pts = sample_disc_points(40_000, 5.0, rng)
    theta = np.arctan2(pts[:, 1], pts[:, 0])
    hist, _ = np.histogram(theta, bins=8, range=(-math.pi, math.pi))
    expected = pts.shape[0] / 8.0
    chi2 = np.sum((hist - expected) ** 2 / expected)
    assert chi2 < 30.0  # 7 dof, far tail


def test_blockage_length_distribution(rng):
    _, lengths, angles = sample_blockage_arrays(5e-3, 120.0, 10.0, 20.0, rng)
    assert lengths.size > 150
    assert np.all((lengths >= 10.0) & (lengths <= 20.0))
    assert lengths.mean() == pytest.approx(15.0, abs=0.5)
    assert np.all((angles >= 0.0) & (angles < 2.0 * math.pi))


def test_blockage_arrays_match_object_form(rng):
    seed_state = np.random.default_rng(77)
    centers, lengths, angles = sample_blockage_arrays(
        1e-3, 60.0, 10.0, 20.0, seed_state)
    segs = sample_blockages(1e-3, 60.0, 10.0, 20.0,
                            np.random.default_rng(77))
    assert len(segs) == lengths.size
    for seg, c, ln in zip(segs, centers, lengths):
        assert seg.center.x == pytest.approx(c[0])
        assert seg.length == pytest.approx(ln)


def test_blockage_rejects_bad_lengths(rng):
    with pytest.raises(ValueError):
        sample_blockage_arrays(1e-3, 60.0, 0.0, 20.0, rng)
    with pytest.raises(ValueError):
        sample_blockage_arrays(1e-3, 60.0, 30.0, 20.0, rng)


def test_segments_intersect_examples():
    # crossing
    assert segments_intersect((0, 0), (2, 2), (0, 2), (2, 0))
    # disjoint parallel
    assert not segments_intersect((0, 0), (1, 0), (0, 1), (1, 1))
    # shared endpoint counts (closed segments)
    assert segments_intersect((0, 0), (1, 1), (1, 1), (2, 0))
    # T-touch counts
    assert segments_intersect((0, 0), (2, 0), (1, 0), (1, 5))
    # collinear overlap
    assert segments_intersect((0, 0), (3, 0), (1, 0), (2, 0))
    # collinear disjoint
    assert not segments_intersect((0, 0), (1, 0), (2, 0), (3, 0))


@given(coord, coord, coord, coord, coord, coord, coord, coord)
def test_segments_intersect_symmetry(ax, ay, bx, by, cx, cy, dx, dy):
    a, b, c, d = (ax, ay), (bx, by), (cx, cy), (dx, dy)
    first = segments_intersect(a, b, c, d)
    assert first == segments_intersect(c, d, a, b)
    assert first == segments_intersect(b, a, d, c)


@given(coord, coord, coord, coord)
def test_segment_meets_itself(ax, ay, bx, by):
    assert segments_intersect((ax, ay), (bx, by), (ax, ay), (bx, by))


def test_los_mask_matches_scalar_oracle(rng):
    n, m = 60, 25
    link_a = rng.uniform(-30, 30, (n, 2))
    link_b = rng.uniform(-30, 30, (n, 2))
    seg_a = rng.uniform(-30, 30, (m, 2))
    seg_b = rng.uniform(-30, 30, (m, 2))
    mask = los_mask(link_a, link_b, seg_a, seg_b)
    for i in range(n):
        blocked = any(
            segments_intersect(link_a[i], link_b[i], seg_a[j], seg_b[j])
            for j in range(m))
        assert mask[i] == (not blocked)


def test_los_mask_empty_inputs():
    empty = np.empty((0, 2))
    links = np.array([[0.0, 0.0]]), np.array([[1.0, 1.0]])
    assert los_mask(links[0], links[1], empty, empty).tolist() == [True]
    assert los_mask(empty, empty, links[0], links[1]).shape == (0,)


def test_segment_hit_mask_matches_pairwise(rng):
    m = 40
    seg_a = rng.uniform(-20, 20, (m, 2))
    seg_b = rng.uniform(-20, 20, (m, 2))
    p, q = np.array([-25.0, 0.0]), np.array([25.0, 0.0])
    hits = segment_hit_mask(p, q, seg_a, seg_b)
    for j in range(m):
        assert hits[j] == segments_intersect(p, q, seg_a[j], seg_b[j])


def test_is_los_with_segment_objects():
    wall = Segment2D(Point2D(1.0, 0.0), 2.0, math.pi / 2.0)
    assert not is_los(Point2D(0.0, 0.0), Point2D(2.0, 0.0), [wall])
    assert is_los(Point2D(0.0, 0.0), Point2D(0.0, 2.0), [wall])


def test_scene_validation():
    with pytest.raises(ValueError):
        Scene(cell_radius=10.0, blockages=(),
              ris_points=(Point2D(11.0, 0.0),), user_points=())
    margin_ok = Segment2D(Point2D(10.5, 0.0), 2.0, 0.0)
    Scene(cell_radius=10.0, blockages=(margin_ok,), ris_points=(),
          user_points=())
    with pytest.raises(ValueError):
        too_far = Segment2D(Point2D(11.5, 0.0), 2.0, 0.0)
        Scene(cell_radius=10.0, blockages=(too_far,), ris_points=(),
              user_points=())


def test_ppp_disc_returns_points_inside(rng):
    pts = sample_ppp_disc(3e-3, 40.0, rng)
    assert all(math.hypot(p.x, p.y) <= 40.0 for p in pts)


def test_empirical_los_law():
    """Scene-level LoS frequency must track exp(-2 lambda E[L] d / pi).

    This bridges the geometric sampler to the closed-form survival law:
    isotropic line segments of mean length E[L] cross a test link of
    length d with Poisson count of mean 2 lambda E[L] d / pi.
    """
    lam, l_min, l_max, d = 2e-3, 10.0, 20.0, 60.0
    mean_len = 0.5 * (l_min + l_max)
    rng = np.random.default_rng(2024)
    n_scenes = 20_000
    p = np.array([0.0, 0.0])
    q = np.array([d, 0.0])
    region = d + 0.5 * l_max + 1.0
    clear = 0
    for _ in range(n_scenes):
        centers, lengths, angles = sample_blockage_arrays(
            lam, region, l_min, l_max, rng)
        # recenter region on the link midpoint
        centers = centers + np.array([d / 2.0, 0.0])
        half = 0.5 * lengths[:, None]
        u = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        hits = segment_hit_mask(p, q, centers - half * u, centers + half * u)
        clear += not hits.any()
    target = math.exp(-2.0 * lam * mean_len * d / math.pi)
    se = math.sqrt(target * (1.0 - target) / n_scenes)
    assert abs(clear / n_scenes - target) < max(3.0 * se, 0.01)
