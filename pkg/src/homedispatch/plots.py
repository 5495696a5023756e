"""Standalone SVG figures: scenario fans and probability heatmaps.

Rendering is forced deterministic so repeated runs produce byte-identical
files: element ids are salted with a fixed string and the creation date is
stripped from the metadata.
"""

from __future__ import annotations

import matplotlib
from matplotlib.figure import Figure

from .probability import ProbabilityMatrix
from .scenarios import ScenarioSet

_SVG_RC = {
    "svg.hashsalt": "homedispatch",
    "svg.fonttype": "path",
}


def _save(fig: Figure, path) -> None:
    with matplotlib.rc_context(_SVG_RC):
        fig.savefig(path, format="svg", metadata={"Date": None})


def scenario_fan(scen: ScenarioSet, path, date_label: str = "") -> None:
    """One line per scenario for generation and demand, shaded by probability."""
    hours = range(scen.n_hours)
    p = scen.probs / scen.probs.sum()
    top = int(p.argmax())

    fig = Figure(figsize=(8.0, 6.0))
    ax_gen, ax_dem = fig.subplots(2, 1, sharex=True)
    for s in range(scen.n_scenarios):
        alpha = 0.25 + 0.75 * float(p[s] / p[top])
        width = 1.8 if s == top else 1.0
        ax_gen.plot(hours, scen.gen[s], color="tab:orange", alpha=alpha, lw=width)
        ax_dem.plot(hours, scen.dem[s], color="tab:blue", alpha=alpha, lw=width)

    ax_gen.set_ylabel("PV generation [kW]")
    ax_dem.set_ylabel("demand [kW]")
    ax_dem.set_xlabel("hour of day")
    ax_dem.set_xticks(range(0, 24, 3))
    for ax in (ax_gen, ax_dem):
        ax.grid(True, alpha=0.3)
    title = "scenario fan"
    if date_label:
        title += f" {date_label}"
    ax_gen.set_title(f"{title} ({scen.n_scenarios} kept, bold = most probable)")
    fig.set_layout_engine("tight")
    _save(fig, path)


def matrix_heatmap(matrix: ProbabilityMatrix, path, title: str = "") -> None:
    """Hour-of-day class membership: one probability column per hour."""
    rng = matrix.range
    fig = Figure(figsize=(8.0, 4.5))
    ax = fig.subplots()
    im = ax.imshow(matrix.values, origin="lower", aspect="auto",
                   extent=(-0.5, matrix.values.shape[1] - 0.5, rng.lo, rng.hi),
                   cmap="viridis")
    ax.set_xlabel("hour of day")
    unit = "kW" if matrix.quantity == "demand" else "normalized class value"
    ax.set_ylabel(unit)
    ax.set_xticks(range(0, 24, 3))
    ax.set_title(title or f"{matrix.quantity} distribution ({matrix.kind})")
    fig.colorbar(im, ax=ax, label="probability")
    fig.set_layout_engine("tight")
    _save(fig, path)
