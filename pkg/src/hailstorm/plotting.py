"""PNG figures rendered from the same arrays written to plotdata/*.csv."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.collections import PatchCollection  # noqa: E402
from matplotlib.patches import Circle, Rectangle  # noqa: E402
import numpy as np  # noqa: E402

_META = {"Software": None}


def _save(fig, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight", metadata=_META)
    plt.close(fig)


def growth(path: Path, t, values: np.ndarray, estimate, title: str) -> None:
    """Replicate traces, their mean and the fitted increment line."""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    t = np.asarray(t)
    for row in values[:50]:
        ax.plot(t, row, color="0.75", lw=0.6)
    mean = values.mean(axis=0)
    ax.plot(t, mean, "o-", color="C0", lw=1.5, label="mean")
    ax.plot(t, mean[0] + estimate.slope * (t - t[0]), "--", color="C3", label=f"slope {estimate.slope:.3g}")
    ax.set_xlabel("t")
    ax.set_ylabel("value")
    ax.set_title(title, fontsize=9)
    ax.legend(frameon=False, fontsize=8)
    _save(fig, path)


def phase(path: Path, cells, bracket) -> None:
    phis = np.array([c[0] for c in cells])
    est = np.array([c[1] for c in cells])
    se = np.nan_to_num(np.array([c[2] for c in cells]))
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.errorbar(phis, est, yerr=3 * se, fmt="o-", capsize=3)
    ax.axvspan(bracket.phi_lo, bracket.phi_hi, color="C1", alpha=0.2, label="bracket")
    ax.set_xlabel("phi")
    ax.set_ylabel("rate")
    ax.legend(frameon=False, fontsize=8)
    _save(fig, path)


def heap_profile(path: Path, state) -> None:
    """d=1: stones as bars at their tops. d=2: footprints shaded by top."""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    if state.d == 1:
        for s in state.placed:
            lo, hi = s.footprint.bbox()
            ax.add_patch(Rectangle((lo[0], s.top - s.arrival.sigma), hi[0] - lo[0], s.arrival.sigma,
                                   fc="C0", ec="k", lw=0.3, alpha=0.6))
        ax.autoscale_view()
        ax.set_xlabel("x")
        ax.set_ylabel("height")
    elif state.d == 2:
        patches = []
        for s in state.placed:
            fp = s.footprint
            if fp.kind == "ball":
                patches.append(Circle(fp.center, fp.radius))
            else:
                lo, hi = fp.bbox()
                patches.append(Rectangle(lo, hi[0] - lo[0], hi[1] - lo[1]))
        pc = PatchCollection(patches, cmap="viridis", alpha=0.7)
        pc.set_array(np.asarray(state.tops))
        ax.add_collection(pc)
        ax.autoscale_view()
        ax.set_aspect("equal")
        fig.colorbar(pc, ax=ax, label="top")
    else:
        ax.hist(state.tops, bins=30)
        ax.set_xlabel("top")
    _save(fig, path)


def lines(path: Path, x, ys: dict, xlabel: str, ylabel: str) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for label, y in ys.items():
        ax.plot(x, y, "o-", ms=3, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend(frameon=False, fontsize=8)
    _save(fig, path)
