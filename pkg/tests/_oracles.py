"""Slow scalar re-implementations used as test oracles."""

import numpy as np

from advscen.geometry import polygon_overlap


def smooth_l1(d):
    d = abs(d)
    return 0.5 * d * d if d < 1.0 else d - 0.5


def imitation(plan_states, expert_states):
    return sum(smooth_l1(np.hypot(p[0] - e[0], p[1] - e[1])) for p, e in zip(plan_states, expert_states))


def collision_steps(plan_states, world):
    now = world.current_index
    steps = []
    for t, p in enumerate(plan_states):
        hit = False
        for a in world.actors:
            q = a.trajectory.states[now + 1 + t]
            hit |= polygon_overlap((world.sdv_length, world.sdv_width, p[0], p[1], p[2]),
                                   (a.length, a.width, q[0], q[1], q[2]))
        steps.append(hit)
    return steps


def straight_lane_offroad(xy, lane_ys, width):
    return [0.0 if min(abs(y - ly) for ly in lane_ys) <= width / 2 else 1.0 for _, y in xy]


def safety(full_states, lane_ys, width, dt):
    fut = full_states[1:]
    total = sum(straight_lane_offroad(fut[:, :2], lane_ys, width))
    total += sum(max(0.0, abs(s[3] ** 2 * s[4]) - 3.0) for s in fut)
    v = full_states[:, 3]
    for i in range(1, len(v) - 1):
        total += max(0.0, abs((v[i + 1] - 2 * v[i] + v[i - 1]) / dt**2) - 2.0)
    return total
