"""Static SVG figures: density with estimate bands, coverage chart, and
per-parameter credible-interval panels.

Artists that tests and readers care about carry SVG ids (matplotlib ``gid``):
``density-*``, ``estimate-*``, ``band-*``, ``endpoint-*``, ``glyph-*``,
``interval-*``, ``flag-*``, ``nominal-*``. Output bytes are deterministic:
the SVG hash salt is fixed and no date is written.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .estimation import SampleMatrix, silverman_bandwidth  # noqa: E402
from .exceptions import PairingError, SpecError  # noqa: E402
from .fileio import Report  # noqa: E402
from .region import ConfidenceRegion, RegionMethod  # noqa: E402

STYLE = {
    "svg.hashsalt": "simerr",
    "svg.fonttype": "path",
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 100,
}
BAND_COLOR = "#7aa6d6"
ESTIMATE_COLOR = "#6a3d9a"
CURVE_COLOR = "#222222"
LEVEL_STYLE = {0: ("o", "#1f4e9a"), 1: ("s", "#8b1a1a"), 2: ("^", "#3b7d23"), 3: ("D", "#8a6d00")}


def kde_curve(x: np.ndarray, bandwidth: float | None = None, grid_size: int = 512):
    """Gaussian KDE on an even grid via linear binning and a discrete convolution."""
    x = np.asarray(x, dtype=float)
    bw = silverman_bandwidth(x) if bandwidth is None else bandwidth
    if not bw > 0:
        bw = max(abs(float(x[0])), 1.0) * 1e-3
    lo, hi = float(x.min()) - 3 * bw, float(x.max()) + 3 * bw
    n_bins = 4096
    edges_dx = (hi - lo) / (n_bins - 1)
    pos = (x - lo) / edges_dx
    left = np.clip(np.floor(pos).astype(np.int64), 0, n_bins - 2)
    frac = pos - left
    counts = np.bincount(left, weights=1 - frac, minlength=n_bins)
    counts += np.bincount(left + 1, weights=frac, minlength=n_bins)
    half = int(math.ceil(5 * bw / edges_dx))
    offsets = np.arange(-half, half + 1) * edges_dx
    kernel = np.exp(-0.5 * (offsets / bw) ** 2) / (bw * math.sqrt(2 * math.pi))
    dens = np.convolve(counts, kernel)[half : half + n_bins] / x.size
    grid = lo + edges_dx * np.arange(n_bins)
    step = max(1, n_bins // grid_size)
    return grid[::step], dens[::step]


def _save(fig, path) -> None:
    fig.savefig(Path(path), format="svg", metadata={"Date": None, "Creator": "simerr"})
    plt.close(fig)


def _draw_density(ax, x: np.ndarray, gid: str) -> None:
    grid, dens = kde_curve(x)
    (line,) = ax.plot(grid, dens, color=CURVE_COLOR, lw=1.2)
    line.set_gid(gid)
    ax.set_ylim(bottom=0)


def _report_column_targets(report: Report) -> "OrderedDict[str, list[int]]":
    cols: OrderedDict[str, list[int]] = OrderedDict()
    for i, t in enumerate(report.targets):
        cols.setdefault(t["column"], []).append(i)
    return cols


def plot_density_bands(
    samples: SampleMatrix,
    report: Report,
    path,
    column: str | None = None,
    method: RegionMethod | str = RegionMethod.SIMULTANEOUS,
) -> None:
    """Density of one column with a line per estimate and a band per interval."""
    cols = _report_column_targets(report)
    if column is None:
        if len(cols) != 1:
            raise SpecError(
                f"report covers columns {', '.join(cols)}; choose one with an explicit column"
            )
        column = next(iter(cols))
    if column not in cols:
        raise SpecError(f"report has no targets on column {column!r}")
    region = report.region(method)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6.0, 3.6))
        _draw_density(ax, samples.column(column), "density-0")
        for i in cols[column]:
            lo, hi = region.lower[i], region.upper[i]
            ax.axvspan(lo, hi, color=BAND_COLOR, alpha=0.55, lw=0).set_gid(f"band-{i}")
            ax.axvline(region.estimate[i], color=ESTIMATE_COLOR, lw=1.0).set_gid(f"estimate-{i}")
        ax.set_xlabel(column)
        ax.set_ylabel("density")
        ax.set_title(
            f"{1 - region.alpha:.0%} {region.method.value} intervals (n = {report.n})",
            fontsize=9,
        )
        _save(fig, path)


def _parse_cell_label(label: str) -> tuple[str, float]:
    tag, _, level = label.partition("@")
    return tag, float(level)


def plot_coverage_chart(summary: ConfidenceRegion, path) -> None:
    """Point-and-interval glyph per (method, level) cell with nominal reference lines."""
    cells = [_parse_cell_label(l) for l in summary.labels]
    tags = list(OrderedDict.fromkeys(t for t, _ in cells))
    levels = sorted({lv for _, lv in cells}, reverse=True)
    width = 0.5 / max(1, len(levels))
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.2, 3.6))
        for k, level in enumerate(levels):
            ax.axhline(level, color="0.55", lw=0.8, ls="--").set_gid(f"nominal-{level:g}")
        for i, (tag, level) in enumerate(cells):
            k = levels.index(level)
            marker, color = LEVEL_STYLE[k % len(LEVEL_STYLE)]
            x = tags.index(tag) + (k - (len(levels) - 1) / 2) * width
            est, lo, hi = summary.estimate[i], summary.lower[i], summary.upper[i]
            ax.vlines(x, lo, hi, color=color, lw=1.6).set_gid(f"interval-{i}")
            (pt,) = ax.plot([x], [est], marker=marker, color=color, ms=5, ls="none",
                            label=f"{level:g} nominal" if tags.index(tag) == 0 else None)
            pt.set_gid(f"glyph-{i}")
            if summary.degenerate[i]:
                (fl,) = ax.plot([x + 0.08], [est], marker="x", color="black", ms=5, ls="none")
                fl.set_gid(f"flag-{i}")
        ax.set_xticks(range(len(tags)))
        ax.set_xticklabels(tags)
        ax.set_xlim(-0.6, len(tags) - 0.4)
        ax.set_ylabel("empirical coverage")
        ax.set_title(f"simultaneous {1 - summary.alpha:.0%} intervals for coverage", fontsize=9)
        ax.legend(loc="lower right", frameon=False, fontsize=8)
        _save(fig, path)


def credible_pairs(report: Report) -> "OrderedDict[str, list[tuple[int, int]]]":
    """Quantile targets per column, paired outermost-first (lowest with highest)."""
    out: OrderedDict[str, list[tuple[int, int]]] = OrderedDict()
    by_col: OrderedDict[str, list[int]] = OrderedDict()
    for i, t in enumerate(report.targets):
        if t["kind"] == "quantile":
            by_col.setdefault(t["column"], []).append(i)
    if not by_col:
        raise PairingError("report has no quantile targets to draw as credible intervals")
    for col, idx in by_col.items():
        if len(idx) % 2:
            raise PairingError(
                f"column {col!r} has {len(idx)} quantile targets; credible intervals need pairs"
            )
        idx = sorted(idx, key=lambda i: report.targets[i]["q"])
        out[col] = [(idx[k], idx[-1 - k]) for k in range(len(idx) // 2)]
    return out


def plot_credible_panels(
    samples: SampleMatrix,
    report: Report,
    path,
    method: RegionMethod | str = RegionMethod.SIMULTANEOUS,
    ncols: int = 2,
) -> None:
    """One panel per parameter: density, interval endpoints, band per endpoint."""
    pairs = credible_pairs(report)
    region = report.region(method)
    k = len(pairs)
    ncols = min(ncols, k)
    nrows = math.ceil(k / ncols)
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(nrows, ncols, figsize=(3.2 * ncols, 1.9 * nrows), squeeze=False)
        for ax in axes.flat[k:]:
            ax.set_visible(False)
        for ax, (col, col_pairs) in zip(axes.flat, pairs.items()):
            x = samples.column(col)
            _draw_density(ax, x, f"density-{col}")
            for lo_i, hi_i in col_pairs:
                for i in (lo_i, hi_i):
                    ax.axvspan(region.lower[i], region.upper[i], color=BAND_COLOR,
                               alpha=0.6, lw=0).set_gid(f"band-{col}-{i}")
                    ax.axvline(region.estimate[i], color=ESTIMATE_COLOR,
                               lw=0.9).set_gid(f"endpoint-{col}-{i}")
            ax.set_title(col, fontsize=9)
            ax.set_yticks([])
        fig.suptitle(
            f"{1 - region.alpha:.0%} simultaneous bands on credible-interval endpoints "
            f"(n = {report.n})",
            fontsize=9,
        )
        fig.tight_layout()
        _save(fig, path)
