import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from advscen.geometry import rigid_transform
from advscen.kinematics import (
    DEFAULT_BOUNDS,
    PhysicalBounds,
    check_bounds,
    decode,
    decode_batch,
    delta_dim,
    encode,
    rollout,
    rollout_batch,
)

DT = 0.5
unit = st.floats(-1.0, 1.0, allow_nan=False)
controls_st = arrays(float, (10, 2), elements=st.floats(-5.0, 5.0, allow_nan=False))
state_st = st.tuples(
    st.floats(-50, 50), st.floats(-50, 50), st.floats(-np.pi, np.pi), st.floats(0, 15), st.floats(-0.02, 0.02),
    st.floats(-2, 2),
)


def fit_circle(xy):
    """Algebraic least-squares circle: returns center and radius."""
    A = np.column_stack([2 * xy[:, 0], 2 * xy[:, 1], np.ones(len(xy))])
    b = (xy**2).sum(axis=1)
    cx, cy, c = np.linalg.lstsq(A, b, rcond=None)[0]
    return np.array([cx, cy]), np.sqrt(c + cx**2 + cy**2)


def test_straight_line_example():
    traj = rollout([0, 0, 0, 1, 0, 0], np.zeros((4, 2)), DT).trajectory
    assert np.allclose(traj.xy[1:], [[0.5, 0], [1, 0], [1.5, 0], [2, 0]], atol=1e-12)


def test_constant_curvature_circle():
    traj = rollout([0, 0, 0, 2, 0.1, 0], np.zeros((40, 2)), DT).trajectory
    xy = traj.xy
    center, radius = fit_circle(xy)
    dist = np.hypot(*(xy - center).T)
    assert np.max(np.abs(dist - radius)) < 1e-9  # Euler traces a regular polygon
    assert abs(radius - 10.0) / 10.0 < 0.02
    chords = np.hypot(*np.diff(xy, axis=0).T)
    analytic = 2 * 10.0 * np.sin(0.5 * 2 * 0.1 * DT)
    assert np.max(np.abs(chords - analytic)) / analytic < 0.02


def test_speed_saturates():
    controls = np.tile([2.0, 0.0], (10, 1))
    traj = rollout([0, 0, 0, 14.5, 0, 2.0], controls, DT).trajectory
    assert traj.states[:, 3].max() == 15.0
    assert np.all(traj.states[1:, 3] == 15.0)


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        rollout([0, 0, np.nan, 1, 0, 0], np.zeros((2, 2)), DT)


def test_decode_examples():
    base = [3.0, 1.0, 0.2, 8.0, 0.0, 0.0]
    s0, controls = decode(np.zeros(24), base)
    assert np.allclose(s0, base) and not controls.any()
    d = np.zeros(24)
    d[3] = 1.0
    assert decode(d, base)[0].v == 13.0
    assert decode(d, [0, 0, 0, 12.0, 0, 0])[0].v == 15.0
    with pytest.raises(ValueError):
        decode(np.zeros(23), base)
    assert delta_dim(10) == 24


def test_decode_endpoints_and_monotone():
    base = np.array([0.0, 0.0, 0.0, 7.0, 0.0, 0.0])
    scale = DEFAULT_BOUNDS.delta_scale(10)
    for i in range(24):
        vals = []
        for u in np.linspace(-1, 1, 21):
            d = np.zeros(24)
            d[i] = u
            s0, c = decode(d, base)
            flat = np.concatenate([np.asarray(s0)[:4], c.ravel()])
            vals.append(flat[i])
            if u in (-1.0, 0.0, 1.0):
                assert flat[i] == pytest.approx(base[i] + u * scale[i] if i < 4 else u * scale[i], abs=1e-12)
        assert np.all(np.diff(vals) >= 0)


def test_encode_decode_round_trip():
    rng = np.random.default_rng(0)
    base = np.array([10.0, -2.0, 0.1, 7.5, 0.0, 0.0])
    deltas = rng.uniform(-1, 1, (1000, 24))
    for d in deltas:
        s0, controls = decode(d, base)
        assert np.allclose(encode(s0, controls, base), d, atol=1e-12)


def test_check_bounds_reports_violation():
    traj = rollout([0, 0, 0, 2, 0, 0], np.zeros((10, 2)), DT).trajectory
    states = np.array(traj.states)
    states[4, 4] = 0.3
    res = check_bounds(states, DT)
    assert not res and res.index == 4 and res.field == "kappa"


def test_bounds_file(tmp_path):
    p = tmp_path / "b.yaml"
    p.write_text("bounds:\n  max_speed: 20\n")
    assert PhysicalBounds.from_file(p).max_speed == 20.0
    p.write_text("max_sped: 20\n")
    with pytest.raises(ValueError):
        PhysicalBounds.from_file(p)


@given(state_st, controls_st)
def test_rollout_respects_bounds(s0, controls):
    s0 = np.array(s0)
    s0[4] = np.clip(s0[4], -3 / max(s0[3], 1e-9) ** 2, 3 / max(s0[3], 1e-9) ** 2)
    traj, _ = rollout(s0, controls, DT)
    assert check_bounds(traj.states[1:], DT)


@given(st.floats(0, 15), st.floats(-np.pi, np.pi))
def test_zero_controls_collinear(v, theta):
    traj = rollout([1.0, 2.0, theta, v, 0, 0], np.zeros((10, 2)), DT).trajectory
    d = traj.xy - traj.xy[0]
    lateral = -d[:, 0] * np.sin(theta) + d[:, 1] * np.cos(theta)
    assert np.max(np.abs(lateral)) < 1e-9


@given(arrays(float, (10, 2), elements=st.floats(-0.8, 0.8)), st.floats(3, 10))
def test_arc_length_matches_speed_sum(controls, v):
    controls = controls * [1.0, 0.01]
    traj, n_clamped = rollout([0, 0, 0, v, 0, 0], controls, DT)
    if n_clamped:
        return
    steps = np.hypot(*np.diff(traj.xy, axis=0).T)
    assert abs(steps.sum() - np.sum(traj.states[:-1, 3]) * DT) < 1e-9


@given(state_st, controls_st, st.floats(-np.pi, np.pi), st.floats(-100, 100), st.floats(-100, 100))
def test_rollout_rigid_equivariance(s0, controls, rot, tx, ty):
    s0 = np.array(s0)
    a = rollout(s0, controls, DT).trajectory.states
    moved = s0.copy()
    xy, th = rigid_transform(s0[:2], s0[2], rot, (tx, ty))
    moved[:2], moved[2] = xy, th
    b = rollout(moved, controls, DT).trajectory.states
    xy_a, th_a = rigid_transform(a[:, :2], a[:, 2], rot, (tx, ty))
    assert np.allclose(b[:, :2], xy_a, atol=1e-9)
    assert np.allclose(b[:, 2], th_a, atol=1e-9)
    assert np.allclose(b[:, 3:], a[:, 3:], atol=1e-12)


def test_batch_matches_single():
    rng = np.random.default_rng(2)
    deltas = rng.uniform(-1, 1, (20, 24))
    base = [0, 0, 0, 8, 0, 0]
    s0, controls = decode_batch(deltas, base)
    batch, _ = rollout_batch(s0, controls, DT)
    for i in range(20):
        assert np.array_equal(batch[i], rollout(s0[i], controls[i], DT).trajectory.states)
