"""
Figures for interval tables, input membership families and the output variable.

Rendering uses matplotlib's Agg backend so the CLI works on headless machines.
"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, Iterable, Optional

import matplotlib

matplotlib.use("Agg")

import numpy as np  # noqa: E402
from matplotlib import figure, pyplot as plt  # noqa: E402

from vibfuzz.tools.fuzzcore import Families, FuzzySet, MembershipFamilySpec, OutputUniverse, defuzzify  # noqa: E402
from vibfuzz.tools.vibdata import StateIntervalTable  # noqa: E402

logger = logging.getLogger(__name__)

CURVE_POINTS = 600
DPI = 150


def plot_state_intervals(table: StateIntervalTable) -> figure.Figure:
    """One horizontal bar per state and spectrum, spanning the state's RMS interval."""
    fig, axes = plt.subplots(1, 2, figsize=(12, 0.6 * len(table) + 1.5))
    codes = [row.state.code for row in table.rows]
    for ax, attr, name in zip(axes, ("iv", "ig"), ("fft_v", "fft_g")):
        for i, row in enumerate(table.rows):
            interval = getattr(row, attr)
            ax.barh(i, interval.width, left=interval.lo, height=0.6, color=f"C{row.state.severity}")
        ax.set_yticks(range(len(codes)))
        ax.set_yticklabels(codes)
        ax.invert_yaxis()
        ax.set_xlabel(f"RMS of {name}")
        ax.set_title(f"{name} intervals")
    fig.tight_layout()
    return fig


def plot_family(families: Families) -> figure.Figure:
    fig, (ax_v, ax_g) = plt.subplots(2, 1, figsize=(10, 6))
    _draw_terms(ax_v, families.v, "RMS of fft_v")
    _draw_terms(ax_g, families.g, "RMS of fft_g")
    fig.suptitle(f"{families.kind.capitalize()} membership functions")
    fig.tight_layout()
    return fig


def plot_output(universe: OutputUniverse, aggregated: Optional[FuzzySet] = None) -> figure.Figure:
    fig, ax = plt.subplots(figsize=(10, 3.5))
    for state, degrees in zip(universe.levels, universe.terms):
        ax.plot(universe.grid, degrees, label=state.code)
    if aggregated is not None and not aggregated.is_empty:
        ax.fill_between(aggregated.grid, aggregated.degrees, alpha=0.35, color="k", label="aggregated")
        ax.axvline(defuzzify(aggregated), color="k", linestyle="--", linewidth=1)
    ax.set_xlabel("diagnosis score")
    ax.set_ylabel("membership degree")
    ax.set_ylim(0, 1.05)
    ax.legend(ncol=len(universe.levels) + 1, fontsize="small")
    fig.tight_layout()
    return fig


def save_figure(fig: figure.Figure, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=DPI, bbox_inches="tight")
    plt.close(fig)
    logger.info("wrote %s", path)
    return path


def render_all(
    out_dir: Path,
    table: Optional[StateIntervalTable],
    families: Iterable[Families],
    universe: OutputUniverse,
    aggregated: Optional[FuzzySet] = None,
) -> Dict[str, Path]:
    out_dir = Path(out_dir)
    written: Dict[str, Path] = {}
    if table is not None:
        written["intervals"] = save_figure(plot_state_intervals(table), out_dir / "intervals.png")
    for family in families:
        written[family.kind] = save_figure(plot_family(family), out_dir / f"membership-{family.kind}.png")
    written["output"] = save_figure(plot_output(universe, aggregated), out_dir / "output.png")
    return written


def _draw_terms(ax, spec: MembershipFamilySpec, xlabel: str) -> None:
    lo, hi = spec.support()
    pad = 0.05 * (hi - lo or 1.0)
    x = np.linspace(lo - pad, hi + pad, CURVE_POINTS)
    for term in spec.terms:
        ax.plot(x, spec.curve(term.label, x), label=term.label)
    if spec.floor > 0:
        ax.axhline(spec.floor, color="grey", linestyle=":", linewidth=1, label="floor")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("membership degree")
    ax.set_ylim(0, 1.05)
    ax.legend(fontsize="small")
