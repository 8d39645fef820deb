"""File emission: histories, VTK snapshots, checkpoints, reports.

All text output formats floats with 17 significant digits so emitted
files are byte-for-byte reproducible for identical configs and seeds.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

import numpy as np

from .meshing import Mesh
from .postprocess import FailureReport, threshold_fields
from .solver import RunResult

__all__ = [
    "write_history_csv", "write_field_snapshot", "save_run_state",
    "load_run_state", "write_failure_report", "save_checkpoint",
    "load_checkpoint", "CHECKPOINT_VERSION",
]

CHECKPOINT_VERSION = 1

HISTORY_COLUMNS = [
    "step", "u_t", "elastic_energy", "fracture_energy", "total_energy",
    "reaction_force", "max_alpha", "altmin_iters", "converged",
]


def _fmt(x) -> str:
    return f"{x:.17g}"


def write_history_csv(history, path) -> None:
    """One row per load step; see HISTORY_COLUMNS."""
    with open(path, "w") as f:
        f.write(",".join(HISTORY_COLUMNS) + "\n")
        for r in history:
            f.write(",".join([
                str(r.step), _fmt(r.u_t), _fmt(r.elastic), _fmt(r.fracture),
                _fmt(r.total), _fmt(r.reaction_top), _fmt(r.max_alpha),
                str(r.altmin_iters), str(int(r.converged)),
            ]) + "\n")


def read_history_csv(path):
    rows = []
    with open(path) as f:
        header = f.readline().strip().split(",")
        for line in f:
            parts = line.strip().split(",")
            rows.append(dict(zip(header, parts)))
    return rows


def write_field_snapshot(mesh: Mesh, u: np.ndarray, alpha: np.ndarray,
                         path, system=None) -> None:
    """VTK legacy ASCII unstructured grid with point and cell data.

    Point data: damage and displacement. Cell data: region tag plus,
    when a FemSystem is supplied, stresses, their invariants and the
    standard visualization masks.
    """
    n, m = mesh.n_nodes, mesh.n_triangles
    with open(path, "w") as f:
        f.write("# vtk DataFile Version 3.0\n")
        f.write("wearsim field snapshot\n")
        f.write("ASCII\n")
        f.write("DATASET UNSTRUCTURED_GRID\n")
        f.write(f"POINTS {n} double\n")
        for x, y in mesh.nodes:
            f.write(f"{_fmt(x)} {_fmt(y)} 0\n")
        f.write(f"CELLS {m} {4 * m}\n")
        for a, b, c in mesh.triangles:
            f.write(f"3 {a} {b} {c}\n")
        f.write(f"CELL_TYPES {m}\n")
        f.write("5\n" * m)

        f.write(f"POINT_DATA {n}\n")
        f.write("SCALARS damage double 1\nLOOKUP_TABLE default\n")
        for a in alpha:
            f.write(_fmt(a) + "\n")
        f.write("VECTORS displacement double\n")
        for i in range(n):
            f.write(f"{_fmt(u[2 * i])} {_fmt(u[2 * i + 1])} 0\n")

        f.write(f"CELL_DATA {m}\n")
        f.write("SCALARS region int 1\nLOOKUP_TABLE default\n")
        for r in mesh.region:
            f.write(f"{r}\n")
        if system is not None:
            fields = threshold_fields(system, u, alpha)
            sig = fields["sigma"]
            for name, col in (("sigma_xx", sig[:, 0]), ("sigma_yy", sig[:, 1]),
                              ("sigma_xy", sig[:, 2]),
                              ("sigma_eq", fields["sigma_eq"]),
                              ("sigma_h", fields["sigma_h"]),
                              ("sigma_eq_clipped",
                               fields["sigma_eq_clipped"]),
                              ("sigma_h_clipped", fields["sigma_h_clipped"])):
                f.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                for v in col:
                    f.write(_fmt(v) + "\n")
            for name in ("mask_damage", "mask_eq", "mask_h_tension",
                         "mask_h_compression"):
                f.write(f"SCALARS {name} int 1\nLOOKUP_TABLE default\n")
                for v in fields[name]:
                    f.write(f"{int(v)}\n")


def save_checkpoint(path, state, du_t: float, meta: Optional[dict] = None):
    """Versioned full-state container for restart."""
    np.savez_compressed(
        path, version=CHECKPOINT_VERSION, step=state.step, u_t=state.u_t,
        u=state.u, alpha=state.alpha, alpha_lower=state.alpha_lower,
        du_t=du_t, meta=json.dumps(meta or {}))


def load_checkpoint(path):
    from .solver import SimulationState
    with np.load(path, allow_pickle=False) as z:
        version = int(z["version"])
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        state = SimulationState(
            step=int(z["step"]), u_t=float(z["u_t"]), u=z["u"],
            alpha=z["alpha"], alpha_lower=z["alpha_lower"])
        return state, float(z["du_t"]), json.loads(str(z["meta"]))


def save_run_state(path, mesh: Mesh, result: RunResult) -> None:
    """Everything needed to re-classify a finished run offline."""
    pre = result.snapshots.get((result.failure_step or 0) - 1)
    np.savez_compressed(
        path, version=CHECKPOINT_VERSION,
        u=result.state.u, alpha=result.state.alpha,
        alpha_lower=result.state.alpha_lower,
        first_cross_tick=result.first_cross_tick,
        first_cross_step=result.first_cross_step,
        failure_step=-1 if result.failure_step is None
        else result.failure_step,
        failure_reason=result.failure_reason,
        u_pre=np.zeros(0) if pre is None else pre[0],
        alpha_pre=np.zeros(0) if pre is None else pre[1],
        u_c_estimate=result.u_c_estimate, du_t=result.du_t)


def load_run_state(path) -> dict:
    with np.load(path, allow_pickle=False) as z:
        out = {k: z[k] for k in z.files}
    out["failure_step"] = (None if int(out["failure_step"]) < 0
                           else int(out["failure_step"]))
    out["failure_reason"] = str(out["failure_reason"])
    return out


def write_failure_report(report: FailureReport, path) -> None:
    """Structured plain-text record of a classified run."""
    lines = [
        f"mode: {report.mode.value}",
        f"failure_step: {report.failure_step}",
        f"split: {report.split}",
        f"detail: {report.detail}",
        "[geometry]",
    ]
    for k, v in report.geometry.items():
        lines.append(f"  {k}: {v}")
    lines.append("[classifier]")
    for k, v in report.classifier.items():
        lines.append(f"  {k}: {v}")
    for i, r in enumerate(report.regions):
        lines.append(f"[region {i}]")
        for k, v in r.items():
            lines.append(f"  {k}: {v}")
    Path(path).write_text("\n".join(lines) + "\n")
