"""Render figures from assimilation-run CSV files.

Four figure kinds cover the standard comparisons: error decay against
simulation time or CPU time (log-linear, one labeled curve per run), shell
energy spectra with the dealiasing cutoff marked, and observer trajectory
overlays (start marked with ``*``, path in black, end marked with ``x``).
Rendering only reads the CSVs; it never touches the runs that produced
them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FIGURE_KINDS = ("error-vs-time", "error-vs-cpu", "spectrum", "trajectories")

ERROR_Y_LABELS = {
    "err_psi_l2": "streamfunction error (L2)",
    "err_omega_l2": "vorticity error (L2)",
    "err_omega_linf": "vorticity error (Linf)",
}

__all__ = ["FIGURE_KINDS", "FigureSpec", "read_csv", "render"]


@dataclass(frozen=True)
class FigureSpec:
    """One figure: input CSVs with labels, the kind, and the output path."""

    kind: str
    inputs: tuple[tuple[str, str], ...]
    output: str
    y_column: str = "err_psi_l2"
    grid_n: int | None = field(default=None)

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"kind must be one of {FIGURE_KINDS}, got {self.kind!r}")
        if not self.inputs:
            raise ValueError("at least one input CSV is required")
        labels = [label for _, label in self.inputs]
        if len(set(labels)) != len(labels):
            raise ValueError(f"labels must be unique, got {labels}")


def read_csv(path) -> dict[str, np.ndarray]:
    """Read a headered CSV into named columns."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"input CSV {path} does not exist")
    data = np.genfromtxt(path, delimiter=",", names=True)
    if data.size == 0:
        raise ValueError(f"{path}: no data rows")
    data = np.atleast_1d(data)
    return {name: np.asarray(data[name], dtype=float) for name in data.dtype.names}


def _require(columns: dict, names, path) -> None:
    missing = [n for n in names if n not in columns]
    if missing:
        raise ValueError(f"{path}: missing columns {missing}; has {sorted(columns)}")


def _render_error_curves(spec: FigureSpec, x_column: str, x_label: str, ax) -> None:
    for path, label in spec.inputs:
        cols = read_csv(path)
        _require(cols, [x_column, spec.y_column], path)
        y = np.maximum(cols[spec.y_column], 1e-300)
        ax.semilogy(cols[x_column], y, label=label)
    ax.set_xlabel(x_label)
    ax.set_ylabel(ERROR_Y_LABELS.get(spec.y_column, spec.y_column))
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)


def _render_spectrum(spec: FigureSpec, ax) -> None:
    for path, label in spec.inputs:
        cols = read_csv(path)
        _require(cols, ["shell", "energy"], path)
        keep = cols["shell"] >= 1
        ax.loglog(cols["shell"][keep], np.maximum(cols["energy"][keep], 1e-300),
                  label=label)
    if spec.grid_n is not None:
        cutoff = (2.0 / 3.0) * (spec.grid_n / 2.0)
        ax.axvline(cutoff, color="red", linestyle="--",
                   label=f"2/3 cutoff = {cutoff:.1f}")
    ax.set_xlabel("wavenumber shell")
    ax.set_ylabel("shell energy")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)


def _split_on_wraps(x: np.ndarray, y: np.ndarray):
    """Break a trajectory into segments wherever it wraps across the seam."""
    jumps = np.where((np.abs(np.diff(x)) > np.pi) | (np.abs(np.diff(y)) > np.pi))[0]
    start = 0
    for j in jumps:
        yield x[start:j + 1], y[start:j + 1]
        start = j + 1
    yield x[start:], y[start:]


def _render_trajectories(spec: FigureSpec, ax) -> None:
    for path, _label in spec.inputs:
        cols = read_csv(path)
        _require(cols, ["t", "observer_id", "x", "y"], path)
        ids = np.unique(cols["observer_id"])
        for oid in ids:
            sel = cols["observer_id"] == oid
            order = np.argsort(cols["t"][sel])
            x = cols["x"][sel][order]
            y = cols["y"][sel][order]
            for seg_x, seg_y in _split_on_wraps(x, y):
                if len(seg_x):
                    ax.plot(seg_x, seg_y, color="black", linewidth=0.7)
            ax.plot(x[0], y[0], marker="*", color="tab:blue", markersize=9,
                    linestyle="none")
            ax.plot(x[-1], y[-1], marker="x", color="tab:red", markersize=7,
                    linestyle="none")
    ax.set_xlim(-np.pi, np.pi)
    ax.set_ylim(-np.pi, np.pi)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")


def render(spec: FigureSpec):
    """Render the figure described by ``spec`` and write it to spec.output.

    Returns the matplotlib figure (also saved to disk), so callers and
    tests can inspect artists directly.
    """
    fig, ax = plt.subplots(figsize=(7.0, 5.0), constrained_layout=True)
    if spec.kind == "error-vs-time":
        _render_error_curves(spec, "t", "simulation time", ax)
    elif spec.kind == "error-vs-cpu":
        _render_error_curves(spec, "cpu_seconds", "CPU time (s)", ax)
    elif spec.kind == "spectrum":
        _render_spectrum(spec, ax)
    else:
        _render_trajectories(spec, ax)
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return fig
