"""Static SVG figures. Output is byte-stable for identical inputs."""
from __future__ import annotations

from pathlib import Path
from typing import Callable, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams["svg.hashsalt"] = "quva"
_META = {"Date": None, "Creator": None}


def _save(fig, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)
    return path


def solution_plot(path: Path, candidate: np.ndarray, reference: Optional[np.ndarray], title: str = "") -> Path:
    """Candidate amplitudes as bars, the oracle samples as a line."""
    dim = candidate.shape[0]
    g = np.arange(dim)
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.bar(g, candidate, width=0.6, color="#4c72b0", label="candidate")
    if reference is not None:
        ax.plot(g, reference, "o-", color="#c44e52", label="oracle")
    ax.axhline(0.0, color="0.6", lw=0.6)
    ax.set_xticks(g)
    ax.set_xticklabels([f"{k}/{dim}" for k in g], fontsize=7)
    ax.set_xlabel("x")
    ax.set_ylabel("amplitude")
    ax.set_title(title, fontsize=9)
    ax.legend(fontsize=7, frameon=False)
    fig.tight_layout()
    return _save(fig, path)


def landscape_plot(
    path: Path,
    center: np.ndarray,
    total_fn: Callable[[np.ndarray], float],
    p_c: float,
    n_points: int = 49,
) -> Path:
    """<O_tot> along each single-angle slice through ``center``."""
    grid = np.linspace(0.0, 2.0 * np.pi, n_points)
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    for j in range(center.shape[0]):
        vals = []
        for t in grid:
            lam = center.copy()
            lam[j] = t
            vals.append(total_fn(lam))
        ax.plot(grid, vals, lw=1.0, label=f"lambda_{j + 1}")
    ax.axhspan(-p_c, p_c, color="0.85", zorder=0)
    ax.set_xlabel("angle (rad)")
    ax.set_ylabel("<O_tot>")
    ax.legend(fontsize=6, frameon=False, ncol=3)
    fig.tight_layout()
    return _save(fig, path)


def correlation_plot(path: Path, total: np.ndarray, res_q: np.ndarray, depth: int, spearman: float) -> Path:
    fig, ax = plt.subplots(figsize=(4.0, 3.2))
    ax.scatter(np.abs(total), res_q, s=4, color="#4c72b0")
    ax.set_xscale("symlog")
    ax.set_yscale("symlog")
    ax.set_xlabel("|<O_tot>|")
    ax.set_ylabel("Res_Q")
    ax.set_title(f"d = {depth}, Spearman {spearman:.3f}", fontsize=9)
    fig.tight_layout()
    return _save(fig, path)


def search_trace_plot(path: Path, totals: Sequence[float], flagged: Sequence[bool], n_random: int) -> Path:
    """Totals in evaluation order; flagged candidates highlighted."""
    idx = np.arange(len(totals))
    t = np.asarray(totals, dtype=float)
    f = np.asarray(flagged, dtype=bool)
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.scatter(idx[~f], t[~f], s=3, color="0.6")
    ax.scatter(idx[f], t[f], s=8, color="#c44e52", label="flagged")
    ax.axvline(n_random - 0.5, color="k", lw=0.6, ls="--")
    ax.set_yscale("symlog")
    ax.set_xlabel("evaluation")
    ax.set_ylabel("<O_tot>")
    ax.legend(fontsize=7, frameon=False)
    fig.tight_layout()
    return _save(fig, path)
