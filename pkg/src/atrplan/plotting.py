"""SVG rendering of plans: map view for 2-D scenarios, value-vs-time for 1-D."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Polygon as MplPolygon  # noqa: E402

from .scenario import Scenario  # noqa: E402
from .stl import Always, Eventually, leaves  # noqa: E402
from .trajectory import SampledSignal  # noqa: E402


def _poly(ax, poly, **kw):
    ax.add_patch(MplPolygon(poly.vertices, closed=True, **kw))


def plot_plan(signal: SampledSignal, scenario: Scenario, path, title: str | None = None) -> None:
    fig, ax = plt.subplots(figsize=(6, 5) if scenario.dim == 2 else (8, 4))
    if scenario.dim == 2:
        _poly(ax, scenario.workspace, fill=False, edgecolor="black", linewidth=1.2)
        for obs in scenario.obstacles:
            _poly(ax, obs, facecolor="0.35", edgecolor="black", alpha=0.8)
        for name, reg in scenario.regions.items():
            _poly(ax, reg, facecolor="tab:green", alpha=0.2, edgecolor="tab:green")
            c = reg.centroid
            ax.text(c[0], c[1], name, ha="center", va="center")
        for k in range(signal.n_agents):
            xy = signal.values[k]
            ax.plot(xy[:, 0], xy[:, 1], label=f"agent {k + 1}")
            ax.plot(*xy[0], "o", color=ax.lines[-1].get_color())
        box = scenario.workspace.bounding_box()
        ax.set_xlim(box.lo[0], box.hi[0])
        ax.set_ylim(box.lo[1], box.hi[1])
        ax.set_aspect("equal")
        ax.set_xlabel("x")
        ax.set_ylabel("y")
    else:
        for k in range(signal.n_agents):
            ax.plot(signal.times, signal.values[k, :, 0], label=f"agent {k + 1}")
        # predicate bands: half-spaces over a single agent drawn over their interval
        for leaf in leaves(scenario.formula()):
            if not isinstance(leaf, (Always, Eventually)):
                continue
            iv = leaf.interval
            for atom in leaf.pred.atoms:
                if len(atom.coeffs) != 1:
                    continue
                a = float(atom.coeffs[0][1][0])
                if a == 0:
                    continue
                bound = -atom.offset / a
                ylo, yhi = (bound, bound + 1e9) if a > 0 else (bound - 1e9, bound)
                ax.fill_between([iv.lo, iv.hi], [ylo] * 2, [yhi] * 2, alpha=0.15,
                                color="tab:green" if isinstance(leaf, Always) else "tab:orange")
        vals = signal.values[..., 0]
        pad = 0.1 * max(1.0, float(np.ptp(vals)))
        ax.set_ylim(vals.min() - pad, vals.max() + pad)
        ax.set_xlabel("t [s]")
        ax.set_ylabel("position")
    if title:
        ax.set_title(title)
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
