"""SVG figures drawn from experiment tables.

Every figure is a view of columns that are also written to CSV, so the
plots never carry numbers the tables do not.  Output is byte-stable: the
SVG id salt is fixed, the date stamp is dropped and text is kept as text.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "svg.hashsalt": "hyperloss",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
    "figure.figsize": (5.0, 3.4),
}


@dataclass
class FigureSpec:
    """Columns of one table to plot: ``x`` against each name in ``y``.

    ``group`` splits rows into separate curves by the value of a column
    (used for long-format tables such as energy traces per frequency).
    """

    name: str
    table: str
    x: str
    y: list
    xlabel: str = ""
    ylabel: str = ""
    title: str = ""
    logx: bool = False
    logy: bool = False
    scatter: bool = False
    group: str | None = None
    fit: tuple | None = None  # (slope, intercept) drawn as a dashed line over x
    labels: dict = field(default_factory=dict)
    z: str | None = None  # heat map of column z over the (x, y[0]) grid when set


def _column(table, name):
    j = table.columns.index(name)
    return np.array([row[j] for row in table.rows], dtype=float)


def _heatmap(ax, spec, table):
    x, y, z = (_column(table, c) for c in (spec.x, spec.y[0], spec.z))
    xs, ys = np.unique(x), np.unique(y)
    grid = np.full((ys.size, xs.size), np.nan)
    grid[np.searchsorted(ys, y), np.searchsorted(xs, x)] = z
    mesh = ax.pcolormesh(xs, ys, grid, shading="nearest", cmap="viridis")
    ax.figure.colorbar(mesh, ax=ax, label=spec.labels.get(spec.z, spec.z))


def render(spec: FigureSpec, table, path) -> None:
    """Draw ``spec`` from ``table`` and write an SVG to ``path``."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        if spec.z is not None:
            _heatmap(ax, spec, table)
            _finish(fig, ax, spec, path, legend=False)
            return
        x = _column(table, spec.x)
        groups = [(None, np.ones(x.size, dtype=bool))]
        if spec.group is not None:
            g = _column(table, spec.group)
            groups = [(v, g == v) for v in np.unique(g)]
        for gv, mask in groups:
            for col in spec.y:
                y = _column(table, col)
                label = spec.labels.get(col, col)
                if gv is not None:
                    label = f"{spec.group}={gv:g}" if len(spec.y) == 1 else f"{label}, {gv:g}"
                style = dict(marker="o", ms=3, ls="none") if spec.scatter else {}
                ax.plot(x[mask], y[mask], label=label, **style)
        if spec.fit is not None:
            xs = np.linspace(np.nanmin(x), np.nanmax(x), 50)
            ax.plot(xs, spec.fit[0] * xs + spec.fit[1], "k--", lw=0.8,
                    label=f"fit, slope {spec.fit[0]:.4g}")
        _finish(fig, ax, spec, path, legend=len(groups) * len(spec.y) <= 12)


def _finish(fig, ax, spec, path, legend):
    if spec.logx:
        ax.set_xscale("log")
    if spec.logy:
        ax.set_yscale("log")
    ax.set_xlabel(spec.xlabel or spec.x)
    ax.set_ylabel(spec.ylabel or ", ".join(spec.y))
    if spec.title:
        ax.set_title(spec.title)
    if legend:
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
