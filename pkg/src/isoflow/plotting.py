"""SVG line plots of experiment results.

Figures are written with the Agg backend, a fixed SVG hash salt and no
date stamp, so repeated runs produce identical files.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "svg.hashsalt": "isoflow",
    "svg.fonttype": "path",
    "font.size": 9,
    "axes.linewidth": 0.6,
    "lines.linewidth": 1.0,
    "axes.spines.top": False,
    "axes.spines.right": False,
}
MAX_PANELS = 6


def _save(fig, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def _pick(count: int, limit: int) -> list[int]:
    if count <= limit:
        return list(range(count))
    return sorted(set(np.linspace(0, count - 1, limit).round().astype(int).tolist()))


def plot_profiles(path: str | Path, q: np.ndarray, s_values: Sequence[float], values: Sequence[np.ndarray], title: str) -> Path:
    """Stacked panels of ``u(q) = -V(q, s)``, one per selected snapshot."""
    idx = _pick(len(s_values), MAX_PANELS)
    top = max(float(np.max(-np.asarray(values[j]))) for j in idx)
    bottom = min(float(np.min(-np.asarray(values[j]))) for j in idx)
    pad = 0.08 * max(top - bottom, 1e-12)
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(len(idx), 1, figsize=(5.0, 1.1 * len(idx) + 0.6), sharex=True, squeeze=False)
        for ax, j in zip(axes[:, 0], idx):
            ax.plot(q, -np.asarray(values[j]), color="k")
            ax.set_ylim(bottom - pad, top + pad)
            ax.set_ylabel("u")
            ax.text(0.99, 0.85, f"s = {s_values[j]:.4g}", transform=ax.transAxes, ha="right", va="top")
        axes[-1, 0].set_xlabel("q")
        axes[0, 0].set_title(title)
        fig.tight_layout()
        return _save(fig, Path(path))


def plot_eigenvalues(path: str | Path, s_values, eigenvalues: np.ndarray) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 3.0))
        for i in range(eigenvalues.shape[1]):
            ax.plot(s_values, eigenvalues[:, i], marker="o", markersize=2.5, label=f"E{i}")
        ax.set_xlabel("s")
        ax.set_ylabel("eigenvalue")
        ax.set_title("Lowest eigenvalues of -d^2/dq^2 + V(q, s)")
        ax.legend(frameon=False)
        fig.tight_layout()
        return _save(fig, Path(path))


def plot_phase(path: str | Path, s_values, k_values, phase: np.ndarray, rate, prefactor: float, fit_range) -> Path:
    """Left: phase of b(k, s) relative to s = 0. Right: fitted phase rate against c k^3."""
    with plt.rc_context(STYLE):
        fig, (left, right) = plt.subplots(1, 2, figsize=(7.5, 3.0))
        valid = np.nonzero(np.isfinite(rate))[0]
        for i in valid[_pick(len(valid), 5)] if len(valid) else []:
            left.plot(s_values, phase[:, i], label=f"k = {k_values[i]:.3g}")
        left.set_xlabel("s")
        left.set_ylabel("arg b(k,s) - arg b(k,0)")
        if len(valid):
            left.legend(frameon=False, fontsize=7)
        right.plot(k_values[valid], rate[valid], "o", color="k", markersize=3, label="measured")
        if np.isfinite(prefactor):
            kk = np.linspace(fit_range[0], fit_range[1], 200)
            right.plot(kk, prefactor * kk**3, color="C3", label=f"{prefactor:.6g} k^3")
        right.set_xlabel("k")
        right.set_ylabel("phase rate")
        right.legend(frameon=False, fontsize=7)
        fig.tight_layout()
        return _save(fig, Path(path))


def plot_convergence(path: str | Path, deltas, residuals, label: str = "Lax residual") -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3.0))
        d = np.asarray(deltas, dtype=float)
        r = np.asarray(residuals, dtype=float)
        ax.loglog(d, r, "o-", color="k", markersize=3, label=label)
        if len(d) and r[0] > 0:
            ax.loglog(d, r[0] * (d / d[0]) ** 2, "--", color="0.5", label="slope 2")
        ax.set_xlabel("delta")
        ax.set_ylabel("relative residual")
        ax.legend(frameon=False)
        fig.tight_layout()
        return _save(fig, Path(path))


def plot_series(path: str | Path, s_values, series: dict, ylabel: str, log: bool = False) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3.0))
        for name, ys in series.items():
            ys = np.asarray(ys, dtype=float)
            if log:
                ys = np.where(ys > 0, ys, np.nan)
            ax.plot(s_values, ys, marker="o", markersize=2.5, label=name)
        if log:
            ax.set_yscale("log")
        ax.set_xlabel("s")
        ax.set_ylabel(ylabel)
        ax.legend(frameon=False)
        fig.tight_layout()
        return _save(fig, Path(path))


def plot_rotated_potential(path: str | Path, axis: np.ndarray, values: np.ndarray, s: float) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.2, 3.6))
        cs = ax.contourf(axis, axis, values.T, levels=20, cmap="viridis")
        fig.colorbar(cs, ax=ax, label="V")
        ax.set_xlabel("q1")
        ax.set_ylabel("q2")
        ax.set_title(f"Rotated potential at s = {s:.4g}")
        fig.tight_layout()
        return _save(fig, Path(path))
