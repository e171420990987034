"""Figure rendering for CLI reports (norm-vs-time and state trajectories)."""

from __future__ import annotations

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def save_trajectory_figure(trajectories, path, title=None):
    """Two-panel figure: state components (or 3D paths) and norm vs time.

    ``trajectories`` is a list of Trajectory objects; the figure is written
    to ``path`` (format from the extension).  Returns the path.
    """
    plt = _pyplot()
    n = trajectories[0].states.shape[1]
    three_d = n == 3
    fig = plt.figure(figsize=(10, 4))
    if three_d:
        ax1 = fig.add_subplot(1, 2, 1, projection="3d")
        for traj in trajectories:
            xs = traj.states
            ax1.plot(xs[:, 0], xs[:, 1], xs[:, 2], lw=0.8)
        ax1.set_xlabel("x1")
        ax1.set_ylabel("x2")
        ax1.set_zlabel("x3")
    else:
        ax1 = fig.add_subplot(1, 2, 1)
        for traj in trajectories:
            for j in range(n):
                ax1.plot(traj.times, traj.states[:, j], lw=0.8)
        ax1.set_xlabel("t")
        ax1.set_ylabel("state components")
    ax2 = fig.add_subplot(1, 2, 2)
    span_max = 0.0
    span_min = np.inf
    for traj in trajectories:
        norms = traj.norms()
        ax2.plot(traj.times, norms, lw=0.9)
        positive = norms[norms > 0]
        if positive.size:
            span_max = max(span_max, positive.max())
            span_min = min(span_min, positive.min())
    if span_max > 0 and span_min > 0 and span_max / span_min > 1e3:
        ax2.set_yscale("log")
    ax2.set_xlabel("t")
    ax2.set_ylabel("||x(t)||")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
