"""Experiment drivers: geometry sweeps, transition fit, interaction maps.

The single-junction chart sweeps a (J, H/D) grid per energy split and
classifies every run. The small-to-large-particle transition follows
J* = C * D/H; C is fitted from per-slenderness brackets (largest J
still failing below the transition, smallest J failing as a large
particle). Junction pairs are swept in the gap Delta and mapped into
real/apparent contact-length coordinates normalized by the projected
critical junction length j_p* = C * D^2 / (2H).
"""

from __future__ import annotations

import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .constitutive import MaterialParams, SplitKind, nucleation_stress
from .geometry import JunctionParams, build_double_junction, build_single_junction
from .meshing import triangulate
from .postprocess import (ClassifierConfig, FailureMode, classify_failure,
                          corner_drive, extract_damage_regions)
from .solver import SolverConfig, run_quasistatic

__all__ = [
    "SweepPoint", "TransitionFit", "InteractionPoint", "run_point",
    "sweep_single", "fit_transition", "theoretical_bound",
    "interaction_coordinates", "sweep_interaction", "wear_rate_label",
    "BELOW_TRANSITION", "ABOVE_TRANSITION", "PRESET_G1", "PRESET_G2",
]

BELOW_TRANSITION = frozenset({
    FailureMode.SLIP, FailureMode.SINGLE_SHEAR_BAND,
    FailureMode.DOUBLE_SHEAR_BAND, FailureMode.SMALL_PARTICLE,
})
ABOVE_TRANSITION = frozenset({
    FailureMode.LARGE_PARTICLE, FailureMode.MACRO_PARTICLE,
})

# regularization-length study presets: shear-driven group (G1) and
# tension-driven group (G2)
PRESET_G1 = {"J": 0.3, "H_over_D": [0.3, 0.4, 0.5, 0.6, 0.7],
             "ell_over_D": [0.005, 0.01, 0.015, 0.02, 0.025, 0.03]}
PRESET_G2 = {"J": 0.7, "H_over_D": [0.2, 0.3, 0.4, 0.5],
             "ell_over_D": [0.005, 0.01, 0.015, 0.02, 0.025, 0.03]}


def wear_rate_label(mode: FailureMode) -> str:
    """Qualitative wear-rate class of a failure mechanism."""
    if mode in (FailureMode.SLIP, FailureMode.SINGLE_SHEAR_BAND,
                FailureMode.DOUBLE_SHEAR_BAND):
        return "low"
    if mode in (FailureMode.SMALL_PARTICLE, FailureMode.LARGE_PARTICLE):
        return "mild"
    if mode is FailureMode.MACRO_PARTICLE:
        return "severe"
    return "unclassified"


@dataclass
class SweepPoint:
    J: float
    H_over_D: float
    ell_over_D: float
    split: str
    mode: FailureMode
    detail: str = ""
    failure_step: Optional[int] = None
    steps: int = 0
    wall_time: float = 0.0
    converged: bool = True
    error: str = ""


@dataclass
class TransitionFit:
    C: float
    brackets: list        # (H_over_D, J_below, J_above, J_star)
    residual: float


@dataclass
class InteractionPoint:
    J: float
    H_over_D: float
    Delta: float
    j_r: float
    j_a: float
    mode: FailureMode
    detail: str = ""
    error: str = ""


def run_point(J: float, H_over_D: float, split: SplitKind,
              ell_over_D: float = 0.02, D: float = 1.0,
              delta_gap: Optional[float] = None,
              fine_length_over_D: Optional[float] = 3.0,
              seed: int = 0, mat: Optional[MaterialParams] = None,
              solver_cfg: Optional[SolverConfig] = None,
              classifier_cfg: Optional[ClassifierConfig] = None):
    """One classified simulation; returns (mode, detail, result, extras).

    The mesh size tracks the regularization length (delta = ell/4) so
    the numerical toughness is identical across sweep points.
    """
    ell = ell_over_D * D
    mat = mat or MaterialParams(ell=ell)
    if abs(mat.ell - ell) > 1e-15:
        raise ValueError("material ell inconsistent with ell_over_D")
    params = JunctionParams(D=D, H_over_D=H_over_D, J=J,
                            delta_gap=delta_gap,
                            fine_length_over_D=fine_length_over_D)
    geom = build_double_junction(params) if delta_gap is not None \
        else build_single_junction(params)
    mesh = triangulate(geom, delta_fine=ell / 4.0, seed=seed, ell=ell)
    cfg = solver_cfg or SolverConfig()
    result = run_quasistatic(mesh, mat, split, cfg)
    ccfg = classifier_cfg or ClassifierConfig()
    regions = extract_damage_regions(
        result.state.alpha, mesh, loc_threshold=ccfg.loc_threshold,
        first_cross=result.first_cross_tick,
        first_cross_step=result.first_cross_step)
    if result.failure_step is None:
        mode, detail = FailureMode.NO_FAILURE, "no failure event"
    else:
        pre = result.snapshots.get(result.failure_step - 1)
        drive = None
        if pre is not None:
            from .fem import FemSystem
            system = FemSystem(mesh, mat, split)
            drive = corner_drive(system, pre[0], geom.landmarks,
                                 ccfg.drive_radius_ell * ell)
        mode, detail = classify_failure(regions, geom.landmarks, geom, ell,
                                        ccfg, drive=drive)
    return mode, detail, result, {"geom": geom, "mesh": mesh,
                                  "regions": regions}


def _sweep_worker(task: dict) -> SweepPoint:
    t0 = time.time()
    try:
        mode, detail, result, _ = run_point(
            J=task["J"], H_over_D=task["H_over_D"],
            split=SplitKind.parse(task["split"]),
            ell_over_D=task["ell_over_D"], seed=task.get("seed", 0),
            fine_length_over_D=task.get("fine_length_over_D", 3.0),
            solver_cfg=task.get("solver_cfg"),
            classifier_cfg=task.get("classifier_cfg"))
        return SweepPoint(
            J=task["J"], H_over_D=task["H_over_D"],
            ell_over_D=task["ell_over_D"], split=task["split"],
            mode=mode, detail=detail, failure_step=result.failure_step,
            steps=len(result.history), wall_time=time.time() - t0,
            converged=all(r.converged for r in result.history))
    except Exception as exc:  # per-point failures recorded, sweep continues
        return SweepPoint(
            J=task["J"], H_over_D=task["H_over_D"],
            ell_over_D=task["ell_over_D"], split=task["split"],
            mode=FailureMode.NO_FAILURE, wall_time=time.time() - t0,
            converged=False, error=f"{type(exc).__name__}: {exc}")


def default_jobs() -> int:
    env = os.environ.get("WEARSIM_JOBS")
    if env:
        return max(1, int(env))
    return max(1, min(2, os.cpu_count() or 1))


def sweep_single(grid, split: SplitKind, ell_over_D: float = 0.02,
                 jobs: Optional[int] = None, seed: int = 0,
                 solver_cfg: Optional[SolverConfig] = None,
                 classifier_cfg: Optional[ClassifierConfig] = None,
                 progress=None) -> list[SweepPoint]:
    """Classified runs over a list of (J, H_over_D) grid points."""
    tasks = [dict(J=float(J), H_over_D=float(HD), split=split.value,
                  ell_over_D=ell_over_D, seed=seed, solver_cfg=solver_cfg,
                  classifier_cfg=classifier_cfg)
             for J, HD in grid]
    points = _run_tasks(tasks, _sweep_worker, jobs, progress)
    points.sort(key=lambda p: (p.H_over_D, p.J, p.ell_over_D))
    return points


def _run_tasks(tasks, worker, jobs, progress=None):
    jobs = jobs or default_jobs()
    out = []
    if jobs <= 1 or len(tasks) <= 1:
        for t in tasks:
            out.append(worker(t))
            if progress:
                progress(out[-1])
        return out
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for p in pool.map(worker, tasks):
            out.append(p)
            if progress:
                progress(p)
    return out


def fit_transition(points: list[SweepPoint], D: float = 1.0) -> TransitionFit:
    """Bracket the transition per slenderness and fit J* = C * D/H.

    The transition estimate for each H/D is the midpoint between the
    largest J classified below the transition and the smallest J
    classified as large-particle; C is the least-squares coefficient of
    J* against D/H through the origin.
    """
    rows: dict[float, list[SweepPoint]] = {}
    for p in points:
        rows.setdefault(p.H_over_D, []).append(p)
    brackets = []
    for hd in sorted(rows):
        below = [p.J for p in rows[hd] if p.mode in BELOW_TRANSITION]
        above = [p.J for p in rows[hd] if p.mode in ABOVE_TRANSITION]
        if not below or not above:
            warnings.warn(f"H/D={hd}: transition not bracketed, row skipped",
                          stacklevel=2)
            continue
        j_lo, j_hi = max(below), min(above)
        if j_lo >= j_hi:
            warnings.warn(f"H/D={hd}: inconsistent bracket "
                          f"(J_below={j_lo} >= J_above={j_hi}), row skipped",
                          stacklevel=2)
            continue
        brackets.append((hd, j_lo, j_hi, 0.5 * (j_lo + j_hi)))
    if len(brackets) < 2:
        raise ValueError(
            f"need >= 2 bracketed slenderness rows, got {len(brackets)}")
    x = np.array([D / hd for hd, *_ in brackets])
    y = np.array([js for *_, js in brackets])
    C = float(np.sum(x * y) / np.sum(x * x))
    residual = float(np.sqrt(np.mean((y - C * x) ** 2)))
    return TransitionFit(C=C, brackets=brackets, residual=residual)


def theoretical_bound(alpha_shape: float, beta_shape: float,
                      mat: MaterialParams, H: float, D: float = 1.0) -> dict:
    """Energy-sufficiency lower bound on the critical junction length.

    Two algebraically identical forms: one in terms of the nucleation
    stress, one in terms of the regularization length. The debris-shape
    factor ``alpha_shape`` scales the detached area, ``beta_shape`` the
    crack path length.
    """
    if alpha_shape <= 0.0 or beta_shape <= 0.0:
        raise ValueError("shape coefficients must be positive")
    sc2 = nucleation_stress(mat) ** 2
    via_strength = (2.0 * beta_shape / alpha_shape) \
        * (mat.E * mat.Gc / sc2) / H
    via_ell = (16.0 * beta_shape / (3.0 * alpha_shape)) \
        * (1.0 - mat.nu ** 2) * mat.ell / H
    return {
        "J_star_lower_bound": via_ell,
        "via_strength": via_strength,
        "via_ell": via_ell,
        "C_equivalent": via_ell * H / D,
    }


def interaction_coordinates(D: float, H: float, J: float, Delta: float,
                            C: float = 0.27):
    """(j_r, j_a): real and apparent contact lengths of a junction pair.

    Normalization is the projected critical junction length
    j_p* = C * D^2 / (2H); j_r = j_p / j_p* with j_p = J*D/2 and
    j_a = (D + Delta/2) / j_p*.
    """
    if min(D, H, J) <= 0.0 or Delta < 0.0 or C <= 0.0:
        raise ValueError("D, H, J, C must be positive and Delta >= 0")
    j_p_star = C * D * D / (2.0 * H)
    j_r = (J * D / 2.0) / j_p_star
    j_a = (D + Delta / 2.0) / j_p_star
    return j_r, j_a


def _interaction_worker(task: dict) -> InteractionPoint:
    j_r, j_a = interaction_coordinates(
        1.0, task["H_over_D"], task["J"], task["Delta"], task["C"])
    try:
        mode, detail, result, _ = run_point(
            J=task["J"], H_over_D=task["H_over_D"],
            split=SplitKind.parse(task["split"]),
            ell_over_D=task["ell_over_D"], delta_gap=task["Delta"],
            fine_length_over_D=task.get("fine_length_over_D"),
            seed=task.get("seed", 0), solver_cfg=task.get("solver_cfg"),
            classifier_cfg=task.get("classifier_cfg"))
        return InteractionPoint(J=task["J"], H_over_D=task["H_over_D"],
                                Delta=task["Delta"], j_r=j_r, j_a=j_a,
                                mode=mode, detail=detail)
    except Exception as exc:
        return InteractionPoint(J=task["J"], H_over_D=task["H_over_D"],
                                Delta=task["Delta"], j_r=j_r, j_a=j_a,
                                mode=FailureMode.NO_FAILURE,
                                error=f"{type(exc).__name__}: {exc}")


def sweep_interaction(geometries, deltas, C: float = 0.27,
                      split: SplitKind = SplitKind.POSITIVE_HYDROSTATIC,
                      ell_over_D: float = 0.02, jobs: Optional[int] = None,
                      seed: int = 0,
                      solver_cfg: Optional[SolverConfig] = None,
                      classifier_cfg: Optional[ClassifierConfig] = None,
                      fine_length_over_D: Optional[float] = None,
                      progress=None) -> list[InteractionPoint]:
    """Double-junction runs over (geometry, Delta) combinations."""
    tasks = []
    for J, HD in geometries:
        for d in deltas:
            tasks.append(dict(
                J=float(J), H_over_D=float(HD), Delta=float(d), C=C,
                split=split.value, ell_over_D=ell_over_D, seed=seed,
                solver_cfg=solver_cfg, classifier_cfg=classifier_cfg,
                fine_length_over_D=fine_length_over_D))
    points = _run_tasks(tasks, _interaction_worker, jobs, progress)
    points.sort(key=lambda p: (p.H_over_D, p.J, p.Delta))
    return points


def write_sweep_csv(points: list[SweepPoint], path) -> None:
    with open(path, "w") as f:
        f.write("J,H_over_D,ell_over_D,split,mode,wear_rate,failure_step,"
                "steps,converged,wall_time,detail,error\n")
        for p in points:
            f.write(",".join([
                f"{p.J:.17g}", f"{p.H_over_D:.17g}", f"{p.ell_over_D:.17g}",
                p.split, p.mode.value, wear_rate_label(p.mode),
                str(p.failure_step), str(p.steps), str(int(p.converged)),
                f"{p.wall_time:.3f}",
                '"' + p.detail.replace('"', "'") + '"',
                '"' + p.error.replace('"', "'") + '"',
            ]) + "\n")


def read_sweep_csv(path) -> list[SweepPoint]:
    import csv

    points = []
    with open(path) as f:
        for row in csv.DictReader(f):
            points.append(SweepPoint(
                J=float(row["J"]), H_over_D=float(row["H_over_D"]),
                ell_over_D=float(row["ell_over_D"]), split=row["split"],
                mode=FailureMode(row["mode"]),
                failure_step=None if row["failure_step"] == "None"
                else int(row["failure_step"]),
                steps=int(row["steps"]),
                converged=bool(int(row["converged"])),
                wall_time=float(row["wall_time"]), detail=row["detail"],
                error=row["error"]))
    return points


def write_interaction_csv(points: list[InteractionPoint], path) -> None:
    with open(path, "w") as f:
        f.write("J,H_over_D,Delta,j_r,j_a,mode,wear_rate,detail,error\n")
        for p in points:
            f.write(",".join([
                f"{p.J:.17g}", f"{p.H_over_D:.17g}", f"{p.Delta:.17g}",
                f"{p.j_r:.17g}", f"{p.j_a:.17g}", p.mode.value,
                wear_rate_label(p.mode),
                '"' + p.detail.replace('"', "'") + '"',
                '"' + p.error.replace('"', "'") + '"',
            ]) + "\n")
