"""Static figures: best-so-far curves and top-down scenario renders."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Polygon  # noqa: E402

from ..geometry import box_corners  # noqa: E402


def plot_best_so_far(records: dict, path, title: str = "") -> None:
    """One monotone curve per named AttackRecord."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, rec in records.items():
        curve = rec.best_so_far()
        ax.step(np.arange(1, len(curve) + 1), curve, where="post", label=name)
    ax.set_xscale("log")
    ax.set_xlabel("query")
    ax.set_ylabel("best objective so far")
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _box(ax, pose, dims, **kw):
    ax.add_patch(Polygon(box_corners(np.asarray(pose, dtype=float), np.asarray(dims, dtype=float)), closed=True, **kw))


def plot_scenario(scenario, path, plan=None, sweep=None, highlight=(), title: str = "") -> None:
    """Top-down view: lanes, obstacles, actor paths, the expert path and an optional plan and sweep."""
    fig, ax = plt.subplots(figsize=(10, 4))
    for lane in scenario.map.lanes:
        ax.plot(*lane.centerline.T, color="0.8", lw=1, ls="--")
    for poly in scenario.map.obstacles:
        ax.add_patch(Polygon(poly, closed=True, color="0.6"))
    now = scenario.current_index
    for a in scenario.actors:
        color = "tab:red" if a.id in highlight else "tab:blue"
        ax.plot(*a.trajectory.xy.T, color=color, lw=1)
        _box(ax, a.trajectory.poses[now], a.dims, fill=False, ec=color)
        ax.annotate(str(a.id), a.trajectory.xy[now], fontsize=7)
    ax.plot(*scenario.sdv_expert.xy.T, color="k", lw=1, label="expert")
    _box(ax, scenario.sdv_expert.poses[now], scenario.sdv_dims, fill=False, ec="k")
    if plan is not None:
        traj = getattr(plan, "trajectory", plan)
        ax.plot(*traj.xy.T, color="tab:green", lw=2, label="plan")
    if sweep is not None:
        pts = sweep.world_points()
        ax.scatter(pts[:, 0], pts[:, 1], s=1, color="tab:orange")
    xy = np.concatenate([scenario.sdv_expert.xy] + [a.trajectory.xy for a in scenario.actors])
    ax.set_xlim(xy[:, 0].min() - 10, xy[:, 0].max() + 10)
    ax.set_ylim(xy[:, 1].min() - 10, xy[:, 1].max() + 10)
    ax.set_aspect("equal")
    ax.legend(loc="upper right", fontsize=7)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
