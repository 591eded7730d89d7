"""Report artifacts: CSV archives, tree/region files, plots, trajectories.

All writers are deterministic: fixed float formatting, LF newlines, and
SVG output with a pinned hash salt and no embedded date, so a re-run with
the same seed produces byte-identical files.
"""
from __future__ import annotations

import json
import warnings
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
from matplotlib.patches import Rectangle

from .cart import DecisionTree, Region, format_condition
from .records import EvaluationRecord
from .scenario import ScenarioSpec
from .simulation import SimulationOutput

SVG_RC = {"svg.hashsalt": "scensearch"}
SVG_METADATA = {"Date": None}

NONCRITICAL_STYLE = dict(marker="o", s=12, c="#9bb7d4", label="non-critical")
CRITICAL_STYLE = dict(marker="x", s=30, c="#c1272d", label="critical")


def _fmt(value: float) -> str:
    return f"{value:.6f}"


def write_results_csv(records: Sequence[EvaluationRecord], spec: ScenarioSpec,
                      objective_names: Sequence[str], outdir: Path) -> tuple[Path, Path]:
    """Write all_evaluations.csv and its critical-only subset."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    header = ",".join(["index", *spec.names, *objective_names, "critical"])

    def lines(rows: Iterable[EvaluationRecord]) -> str:
        parts = [header]
        for r in rows:
            fields = [str(r.index)]
            fields += [_fmt(v) for v in r.values]
            fields += [_fmt(v) for v in r.objectives]
            fields.append("true" if r.critical else "false")
            parts.append(",".join(fields))
        return "\n".join(parts) + "\n"

    all_path = outdir / "all_evaluations.csv"
    critical_path = outdir / "critical.csv"
    all_path.write_bytes(lines(records).encode("utf-8"))
    critical_path.write_bytes(lines(r for r in records if r.critical).encode("utf-8"))
    return all_path, critical_path


def write_tree_json(tree: DecisionTree, outdir: Path) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / "tree.json"
    path.write_bytes((json.dumps(tree.to_dict(), indent=2) + "\n").encode("utf-8"))
    return path


def write_regions_txt(regions: Sequence[Region], spec: ScenarioSpec,
                      outdir: Path) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / "regions.txt"
    lines = [
        f"{format_condition(region, spec)}  [support={region.support}, "
        f"purity={region.purity:.3f}]"
        for region in regions
    ]
    path.write_bytes(("\n".join(lines) + "\n" if lines else "").encode("utf-8"))
    return path


def write_design_space_plots(records: Sequence[EvaluationRecord],
                             regions: Sequence[Region], spec: ScenarioSpec,
                             outdir: Path) -> list[Path]:
    """One scatter+region plot (and a CSV twin) per variable pair."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    names = spec.names
    if len(names) < 2:
        warnings.warn("design-space plots need at least two search variables")
        return []
    if not records:
        warnings.warn("no evaluations to plot")
        return []

    written: list[Path] = []
    crit = [r for r in records if r.critical]
    safe = [r for r in records if not r.critical]
    for i, j in combinations(range(len(names)), 2):
        stem = f"design_space_{names[i]}_{names[j]}"
        pi, pj = spec.parameters[i], spec.parameters[j]

        with matplotlib.rc_context(SVG_RC):
            fig, ax = plt.subplots(figsize=(6.0, 4.5))
            if safe:
                ax.scatter([r.values[i] for r in safe], [r.values[j] for r in safe],
                           **NONCRITICAL_STYLE)
            if crit:
                ax.scatter([r.values[i] for r in crit], [r.values[j] for r in crit],
                           **CRITICAL_STYLE)
            for region in regions:
                ax.add_patch(Rectangle(
                    (region.lower[i], region.lower[j]),
                    region.upper[i] - region.lower[i],
                    region.upper[j] - region.lower[j],
                    fill=True, facecolor="#7b2d8b", alpha=0.15,
                    edgecolor="#7b2d8b", linewidth=1.5))
            ax.set_xlim(pi.lower, pi.upper)
            ax.set_ylim(pj.lower, pj.upper)
            ax.set_xlabel(f"{pi.name} [{pi.unit}]" if pi.unit else pi.name)
            ax.set_ylabel(f"{pj.name} [{pj.unit}]" if pj.unit else pj.name)
            ax.set_title(f"design space: {pi.name} vs {pj.name}")
            if safe or crit:
                ax.legend(loc="best")
            fig.tight_layout()
            svg_path = outdir / f"{stem}.svg"
            fig.savefig(svg_path, format="svg", metadata=SVG_METADATA)
            plt.close(fig)
        written.append(svg_path)

        csv_path = outdir / f"{stem}.csv"
        rows = [f"{names[i]},{names[j]},critical"]
        rows += [f"{_fmt(r.values[i])},{_fmt(r.values[j])},"
                 f"{'true' if r.critical else 'false'}" for r in records]
        csv_path.write_bytes(("\n".join(rows) + "\n").encode("utf-8"))
        written.append(csv_path)
    return written


def write_trajectories(pairs: Sequence[tuple[EvaluationRecord, SimulationOutput]],
                       outdir: Path) -> list[Path]:
    """Per-test trajectory JSON files plus a static path-overview figure.

    The JSON mirrors the subprocess-bridge response schema, so exported
    files can be replayed by any consumer of that protocol.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for record, output in pairs:
        path = outdir / f"test_{record.index:05d}.json"
        path.write_bytes((json.dumps(output.to_json_dict(msg_id=record.index))
                          + "\n").encode("utf-8"))
        written.append(path)

    with matplotlib.rc_context(SVG_RC):
        fig, ax = plt.subplots(figsize=(7.0, 4.0))
        for k, (record, output) in enumerate(pairs):
            ego = output.actors["ego"]
            ped = output.actors["pedestrian"]
            ax.plot(ego[:, 1], ego[:, 2], color="#1f4e79", alpha=0.7, linewidth=1.0,
                    label="ego" if k == 0 else None)
            ax.plot(ped[:, 1], ped[:, 2], color="#3c8031", alpha=0.7, linewidth=1.0,
                    label="pedestrian" if k == 0 else None)
            if output.collision and output.collision_time is not None:
                step = int(round(output.collision_time / output.dt))
                marker = ax.plot(ego[step, 1], ego[step, 2], marker="*", markersize=10,
                                 color="#c1272d", linestyle="none")[0]
                marker.set_gid(f"collision-marker-{record.index}")
        ax.set_xlabel("x [m]")
        ax.set_ylabel("y [m]")
        ax.set_title("actor paths")
        if pairs:
            ax.legend(loc="best")
        fig.tight_layout()
        overview = outdir / "overview.svg"
        fig.savefig(overview, format="svg", metadata=SVG_METADATA)
        plt.close(fig)
    written.append(overview)
    return written
