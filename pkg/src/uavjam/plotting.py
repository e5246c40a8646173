"""Static SVG figures: a deployment map and SINR-versus-M curves.

Each drawing function returns the figure together with the exact rows that
were plotted, so callers can write them next to the graphic.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import Wedge  # noqa: E402

__all__ = ["plot_deployment", "plot_curves", "save_svg"]

plt.rcParams["svg.hashsalt"] = "uavjam"


def plot_deployment(uavs, half_beamwidth, targets=(), control_center=None, x_max=None,
                    wedge_radius=None):
    """Draw UAV markers with heading arrows and main-lobe wedges.

    ``uavs`` is a sequence of ``(uav_id, x, y, psi_rad)``; ``targets`` a
    sequence of ``(target_id, x, y)``.
    """
    uavs = list(uavs)
    targets = list(targets)
    xs = [u[1] for u in uavs] + [t[1] for t in targets]
    ys = [u[2] for u in uavs] + [t[2] for t in targets]
    if control_center is not None:
        xs.append(control_center[0])
        ys.append(control_center[1])
    extent = max(max(xs) - min(xs), max(ys) - min(ys), 1.0)
    r = wedge_radius if wedge_radius is not None else 0.15 * extent

    fig, ax = plt.subplots(figsize=(6.4, 5.0))
    rows = []
    deg = math.degrees(half_beamwidth)
    for uid, x, y, psi in uavs:
        h = math.degrees(psi)
        ax.add_patch(Wedge((x, y), r, h - deg, h + deg, alpha=0.25, color="tab:blue"))
        ax.annotate("", xy=(x + r * math.cos(psi), y + r * math.sin(psi)), xytext=(x, y),
                    arrowprops={"arrowstyle": "->", "color": "tab:blue"})
        rows.append({"kind": "uav", "id": uid, "x": x, "y": y, "heading_rad": psi,
                     "half_angle_rad": half_beamwidth})
    ax.plot([u[1] for u in uavs], [u[2] for u in uavs], "^", color="tab:blue", label="UAV")
    if targets:
        ax.plot([t[1] for t in targets], [t[2] for t in targets], "x", color="tab:red", label="target")
        rows += [{"kind": "target", "id": tid, "x": x, "y": y, "heading_rad": "", "half_angle_rad": ""}
                 for tid, x, y in targets]
    if control_center is not None:
        ax.plot([control_center[0]], [control_center[1]], "s", color="tab:green", label="control center")
        rows.append({"kind": "control_center", "id": 0, "x": control_center[0], "y": control_center[1],
                     "heading_rad": "", "half_angle_rad": ""})
    if x_max is not None:
        ax.axvline(x_max, color="gray", linestyle="--", label="x_max")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="best")
    return fig, rows


def plot_curves(points):
    """One line per scheme through ``(scheme, M, value_db)`` points."""
    by_scheme = {}
    for scheme, m, v in points:
        by_scheme.setdefault(scheme, []).append((m, v))
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    rows = []
    for scheme in sorted(by_scheme):
        pts = sorted(by_scheme[scheme])
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=scheme)
        rows += [{"scheme": scheme, "M": m, "avg_sinr_db": v} for m, v in pts]
    ax.set_xlabel("number of UAVs M")
    ax.set_ylabel("average SINR (dB)")
    ax.grid(True, alpha=0.3)
    ax.legend()
    return fig, rows


def save_svg(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
