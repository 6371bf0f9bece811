import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from advscen.geometry import (
    box_corners,
    boxes_overlap,
    points_in_box,
    polygon_overlap,
    project_to_polyline,
    rigid_transform,
)

coord = st.floats(-20, 20, allow_nan=False)
size = st.floats(0.2, 6.0, allow_nan=False)
angle = st.floats(-np.pi, np.pi, allow_nan=False)
rect = st.tuples(size, size, coord, coord, angle)


def mc_overlap(a, b, n, rng):
    """Sample points inside ``a`` and look for one that falls inside ``b``."""
    u = rng.uniform(-0.5, 0.5, (n, 2)) * np.array(a[:2])
    c, s = np.cos(a[4]), np.sin(a[4])
    pts = np.column_stack([a[2] + c * u[:, 0] - s * u[:, 1], a[3] + s * u[:, 0] + c * u[:, 1]])
    return bool(points_in_box(pts, np.array(b[2:5]), np.array(b[:2])).any())


def test_identical_rectangles_overlap():
    assert polygon_overlap((4, 2, 1, 1, 0.3), (4, 2, 1, 1, 0.3))


def test_distant_unit_squares_do_not_overlap():
    assert not polygon_overlap((1, 1, 0, 0, 0), (1, 1, 10, 0, 0))


def test_crossing_rectangles_at_45_degrees():
    a = (4.0, 2.0, 0.0, 0.0, np.pi / 4)
    b = (4.0, 2.0, 1.0, 0.0, -np.pi / 4)
    rng = np.random.default_rng(0)
    assert mc_overlap(a, b, 100_000, rng)
    assert polygon_overlap(a, b)


def test_sat_agrees_with_monte_carlo_on_random_pairs():
    rng = np.random.default_rng(1)
    for _ in range(300):
        a = (*rng.uniform(0.5, 5, 2), *rng.uniform(-4, 4, 2), rng.uniform(-np.pi, np.pi))
        b = (*rng.uniform(0.5, 5, 2), *rng.uniform(-4, 4, 2), rng.uniform(-np.pi, np.pi))
        hit = mc_overlap(a, b, 20_000, rng) or mc_overlap(b, a, 20_000, rng)
        sat = polygon_overlap(a, b)
        # sampling can only miss thin overlaps, never invent one
        if hit:
            assert sat
        if not sat:
            assert not hit


def test_non_finite_rejected():
    import pytest

    with pytest.raises(ValueError):
        polygon_overlap((1, 1, np.nan, 0, 0), (1, 1, 0, 0, 0))


@given(rect, rect)
def test_overlap_symmetric(a, b):
    assert polygon_overlap(a, b) == polygon_overlap(b, a)


@given(rect, rect, angle, coord, coord)
def test_overlap_rigid_invariant(a, b, rot, tx, ty):
    def move(r):
        xy, th = rigid_transform(np.array(r[2:4]), r[4], rot, (tx, ty))
        return (r[0], r[1], xy[0], xy[1], float(th))

    before = polygon_overlap(a, b)
    after = polygon_overlap(move(a), move(b))
    if before != after:
        # only tolerated on a numerically touching boundary
        grown = (a[0] + 1e-6, a[1] + 1e-6, *a[2:])
        shrunk = (a[0] - 1e-6, a[1] - 1e-6, *a[2:])
        assert polygon_overlap(grown, b) != polygon_overlap(shrunk, b)


def test_box_corners_area_and_center():
    c = box_corners(np.array([3.0, -1.0, 0.7]), np.array([4.0, 2.0]))
    assert np.allclose(c.mean(axis=0), [3.0, -1.0])
    x, y = c[:, 0], c[:, 1]
    area = 0.5 * (np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
    assert np.isclose(area, 8.0)


def test_boxes_overlap_broadcasts():
    poses = np.zeros((3, 5, 3))
    poses[..., 0] = np.arange(5) * 3.0
    out = boxes_overlap(poses, [4.0, 2.0], np.array([0.0, 0.0, 0.0]), [4.0, 2.0])
    assert out.shape == (3, 5)
    assert out[:, :2].all() and not out[:, 2:].any()


def test_project_to_polyline_signed_offset():
    line = np.array([[0.0, 0.0], [10.0, 0.0], [10.0, 10.0]])
    st_, off, dist, head = project_to_polyline([[5.0, 1.0], [11.0, 5.0]], line)
    assert np.allclose(st_, [5.0, 15.0])
    assert np.allclose(off, [1.0, -1.0])
    assert np.allclose(dist, [1.0, 1.0])
    assert np.allclose(head, [0.0, np.pi / 2])
