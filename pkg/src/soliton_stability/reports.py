"""Variation reports, suite execution, and JSON/CSV serialization.

Reports are plain data and serialize deterministically (sorted keys, native
float repr), so identical configuration and seed produce byte-identical
output when run with a single worker.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .charts import AmbientStructure, Chart
from .stability import (
    GridGeometry,
    default_grid_for_support,
    first_variation,
    grid_geometry,
    prepare_variation,
    second_variation_divergence,
    second_variation_fd_oracle,
    second_variation_operator,
    second_variation_square,
    variation_scale,
)
from .variations import (
    OneFormField,
    default_support_box,
    lagrangian_defect,
    random_generic_variation,
    random_hamiltonian_variation,
)

__all__ = [
    "VariationReport",
    "evaluate_variation",
    "run_variation_suite",
    "reports_to_json",
    "reports_to_csv",
]

CSV_COLUMNS = [
    "chart",
    "seed",
    "defect",
    "Fpp_operator",
    "Fpp_divergence",
    "Fpp_square",
    "Fpp_fd",
    "max_pairwise_rel_diff",
]


@dataclass
class VariationReport:
    """All second-variation routes and diagnostics for one variation."""

    chart: str
    seed: int | None
    kind: str
    grid: dict
    F_value: float
    first_var: float
    Fpp_operator: float
    Fpp_divergence: float
    Fpp_square: float
    Fpp_fd: float
    lagrangian_defect: float
    scale: float
    max_pairwise_rel_diff: float
    fd_rel_diff: float
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        out = {
            "chart": self.chart,
            "seed": self.seed,
            "kind": self.kind,
            "grid": self.grid,
            "F_value": self.F_value,
            "first_var": self.first_var,
            "Fpp_operator": self.Fpp_operator,
            "Fpp_divergence": self.Fpp_divergence,
            "Fpp_square": self.Fpp_square,
            "Fpp_fd": self.Fpp_fd,
            "lagrangian_defect": self.lagrangian_defect,
            "scale": self.scale,
            "max_pairwise_rel_diff": self.max_pairwise_rel_diff,
            "fd_rel_diff": self.fd_rel_diff,
        }
        out.update(self.extra)
        return out


def evaluate_variation(
    gg: GridGeometry,
    theta: OneFormField,
    seed: int | None = None,
    fd_steps: tuple[float, float] = (2e-3, 1e-3),
    soliton_tol: float = 1e-8,
) -> VariationReport:
    """Run every route on one variation and bundle the numbers."""
    data = prepare_variation(gg, theta)
    op = second_variation_operator(gg, theta, soliton_tol, data=data)
    dv = second_variation_divergence(gg, theta, soliton_tol, data=data)
    sq = second_variation_square(gg, theta, soliton_tol, data=data)
    fd = second_variation_fd_oracle(gg, theta, fd_steps, soliton_tol, data=data)
    scale = variation_scale(gg, theta, data=data)
    denom = scale if scale > 0 else 1.0
    pairwise = max(abs(op - dv), abs(op - sq), abs(dv - sq)) / denom
    fd_rel = max(abs(fd - op), abs(fd - dv), abs(fd - sq)) / denom
    return VariationReport(
        chart=gg.chart.name,
        seed=seed,
        kind=theta.kind,
        grid=gg.grid.describe(),
        F_value=gg.functional_at_rest,
        first_var=first_variation(gg, theta, data=data),
        Fpp_operator=op,
        Fpp_divergence=dv,
        Fpp_square=sq,
        Fpp_fd=fd,
        lagrangian_defect=data.defect,
        scale=scale,
        max_pairwise_rel_diff=pairwise,
        fd_rel_diff=fd_rel,
    )


def run_variation_suite(
    chart: Chart,
    structure: AmbientStructure,
    count: int = 20,
    base_seed: int = 1,
    support=None,
    cells: int = 40,
    points_per_cell: int = 8,
    degree: int = 4,
    kind: str = "hamiltonian",
    fd_steps: tuple[float, float] = (2e-3, 1e-3),
    soliton_tol: float = 1e-8,
    workers: int = 1,
    geometry: GridGeometry | None = None,
) -> tuple[list[VariationReport], GridGeometry]:
    """Evaluate ``count`` seeded variations; variation i uses seed base+i.

    Geometry is computed once per grid and shared (pass ``geometry`` to reuse
    one across suites).  With ``workers > 1`` the per-variation evaluations
    run on a thread pool; results keep seed order either way.
    """
    if support is None:
        support = default_support_box(chart.domain)
    if geometry is not None:
        gg = geometry
    else:
        grid = default_grid_for_support(chart, support, cells, points_per_cell)
        gg = grid_geometry(chart, structure, grid)
    make = random_hamiltonian_variation if kind == "hamiltonian" else random_generic_variation
    thetas = [(base_seed + i, make(support, base_seed + i, degree)) for i in range(count)]

    def one(item):
        seed, theta = item
        return evaluate_variation(gg, theta, seed, fd_steps, soliton_tol)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(one, thetas))
    else:
        reports = [one(item) for item in thetas]
    return reports, gg


def reports_to_json(reports, extra: dict | None = None) -> str:
    payload: Any
    if isinstance(reports, (list, tuple)):
        payload = [r.to_dict() if hasattr(r, "to_dict") else r for r in reports]
    else:
        payload = reports.to_dict() if hasattr(reports, "to_dict") else reports
    if extra is not None:
        payload = {"summary": extra, "reports": payload}
    return json.dumps(_plain(payload), sort_keys=True, indent=2) + "\n"


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in reports:
        d = r.to_dict()
        writer.writerow(
            [
                d["chart"],
                d["seed"],
                repr(d["lagrangian_defect"]),
                repr(d["Fpp_operator"]),
                repr(d["Fpp_divergence"]),
                repr(d["Fpp_square"]),
                repr(d["Fpp_fd"]),
                repr(d["max_pairwise_rel_diff"]),
            ]
        )
    return buf.getvalue()


def _plain(obj):
    """Recursively convert numpy scalars/arrays for json serialization."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj
