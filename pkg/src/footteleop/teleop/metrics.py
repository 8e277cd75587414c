"""Tracking and transparency metrics over phase groups of a trace."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .scenario import PHASE_GROUPS, SimTrace

AXES = ("x", "y", "z")


def rmse(err) -> float:
    err = np.asarray(err, dtype=float)
    return math.sqrt(float(np.mean(err * err)))


@dataclass
class MetricsReport:
    """``position`` is keyed by ``(side, group, axis)``, ``force`` by ``(side, axis)``.

    A group without any samples maps to ``None``.
    """

    position: dict[tuple[str, str, str], float | None] = field(default_factory=dict)
    force: dict[tuple[str, str], float | None] = field(default_factory=dict)

    def rows(self) -> list[tuple[str, str, str, float]]:
        out = []
        for (side, group, axis), v in self.position.items():
            if v is not None:
                out.append((f"{side}.position_rmse_m", group, axis, v))
        for (side, axis), v in self.force.items():
            if v is not None:
                out.append((f"{side}.force_rmse_n", "contact", axis, v))
        return out

    def to_csv(self) -> str:
        lines = ["metric,phase_group,axis,value"]
        lines += [f"{m},{g},{a},{v:.10g}" for m, g, a, v in self.rows()]
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.to_csv(), encoding="ascii")


def compute_metrics(trace: SimTrace, groups: dict[str, tuple[str, ...]] = PHASE_GROUPS) -> MetricsReport:
    """Per-axis RMSE of ``attractor - x`` per phase group, and of ``F_measured - F_desired`` in contact."""
    if len(trace.data) == 0:
        raise ValueError("empty trace")
    labels = np.array(trace.phases)
    report = MetricsReport()
    for side in trace.side_names:
        err = trace.side_block(side, ("ax", "ay", "az")) - trace.side_block(side, ("x", "y", "z"))
        ferr = trace.side_block(side, ("fx", "fy", "fz")) - trace.side_block(side, ("fdx", "fdy", "fdz"))
        for group, members in groups.items():
            mask = np.isin(labels, members)
            for i, axis in enumerate(AXES):
                report.position[(side, group, axis)] = rmse(err[mask, i]) if mask.any() else None
        mask = np.isin(labels, groups["contact"])
        for i, axis in enumerate(AXES):
            report.force[(side, axis)] = rmse(ferr[mask, i]) if mask.any() else None
    return report
