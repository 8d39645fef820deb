"""Quasi-static alternate-minimization driver.

Loading is displacement-controlled with monotone increments. At each
step the energy is minimized by block-coordinate descent: solve the
(sign-linearized, convex) displacement problem at fixed damage, then
the box-constrained quadratic damage problem at fixed displacement
with the irreversibility lower bound, until the damage update falls
under ``tol_alpha`` in sup norm. Energies are tracked across every
half-step so monotonicity can be asserted by the property suite.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import _kernels as kern
from .constitutive import MaterialParams, SplitKind
from .fem import (BoundaryConditions, DisplacementSolver, FemSystem,
                  junction_shear_bcs)
from .meshing import BOTTOM, TOP, Mesh
from .qp import solve_box_qp

__all__ = [
    "SolverConfig", "StepRecord", "SimulationState", "RunResult",
    "StartupError", "alternate_minimize", "damage_step", "run_quasistatic",
    "property_checks",
]


class StartupError(RuntimeError):
    """Raised when the first load steps are not damage-free."""


@dataclass
class SolverConfig:
    du_t: Optional[float] = None      # explicit increment; None = automatic
    du_factor: float = 0.02           # du = u_c * du_factor when automatic
    nucleation_quantile: float = 0.995
    max_steps: int = 200
    tol_alpha: float = 1.0e-4         # altmin sup-norm stop
    altmin_max_iter: int = 100
    cg_tol: float = 1.0e-8
    cg_max_iter: int = 8000
    precond: str = "amg"
    sign_max_iter: int = 50
    damage_kkt_rel: float = 1.0e-8
    damage_max_outer: int = 300
    snapshot_every: int = 0           # 0 = only the failure pair
    stop_on_failure: bool = True
    startup_steps: int = 5
    startup_alpha_tol: float = 1.0e-3
    failure_alpha: float = 0.95
    failure_frac_jump: float = 10.0
    failure_force_drop: float = 0.5
    crossing_threshold: float = 0.5   # element-mean damage for nucleation


@dataclass
class StepRecord:
    step: int
    u_t: float
    elastic: float
    fracture: float
    total: float
    reaction_top: float
    reaction_bottom: float
    max_alpha: float
    altmin_iters: int
    converged: bool
    sign_iters: int = 0
    cg_iters: int = 0
    min_alpha_increment: float = 0.0
    max_energy_increase_rel: float = 0.0


@dataclass
class SimulationState:
    step: int
    u_t: float
    u: np.ndarray
    alpha: np.ndarray
    alpha_lower: np.ndarray


@dataclass
class RunResult:
    history: list
    state: SimulationState
    snapshots: dict            # step -> (u, alpha)
    failure_step: Optional[int]
    failure_reason: str
    first_cross_step: np.ndarray
    first_cross_tick: np.ndarray   # damage-half-step clock; sub-step timing
    u_c_estimate: float
    du_t: float
    meta: dict = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return self.failure_step is not None


def damage_step(system: FemSystem, u, alpha_lower, cfg: SolverConfig,
                alpha_init=None, signs=None):
    """Minimize the damage quadratic under [alpha_lower, 1] bounds."""
    H, lin = system.assemble_damage(u, signs)
    idx = system.damage_nodes
    lo = alpha_lower[idx]
    hi = np.ones(len(idx))
    x0 = alpha_init[idx] if alpha_init is not None else lo
    kkt_tol = cfg.damage_kkt_rel * max(1.0e-30, float(np.max(np.abs(lin))))
    res = solve_box_qp(H, lin, lo, hi, x0=x0, kkt_tol=kkt_tol,
                       max_outer=cfg.damage_max_outer)
    return system.expand_damage(res.x), res


def alternate_minimize(system: FemSystem, dsolver: DisplacementSolver,
                       state: SimulationState, cfg: SolverConfig,
                       damage_callback: Optional[Callable] = None):
    """Relax (u, alpha) at fixed load; returns (state, diagnostics).

    ``damage_callback(alpha)`` fires after every damage half-step; the
    driver uses it to time damage crossings at sub-step resolution
    (within a brutal step the crack front advances over many altmin
    iterations, which is what locates nucleation).
    """
    # the first displacement solve imposes the new boundary values (work
    # input), so energy comparisons start after it
    u, alpha = state.u, state.alpha
    halfstep_energies = []
    K_full = None
    total_sign = total_cg = 0
    converged = False
    iters = 0
    for iters in range(1, cfg.altmin_max_iter + 1):
        u, K_full, info = dsolver.solve(alpha, state.u_t, u_init=u)
        total_sign += info["sign_iters"]
        total_cg += info["cg_iters"]
        signs = system.signs(u)
        halfstep_energies.append(
            system.elastic_energy(u, alpha, signs)
            + system.fracture_energy(alpha))
        alpha_new, qp_res = damage_step(system, u, state.alpha_lower, cfg,
                                        alpha_init=alpha, signs=signs)
        delta = float(np.max(np.abs(alpha_new - alpha))) if len(alpha) else 0.0
        alpha = alpha_new
        if damage_callback is not None:
            damage_callback(alpha)
        halfstep_energies.append(
            system.elastic_energy(u, alpha, signs)
            + system.fracture_energy(alpha))
        if delta < cfg.tol_alpha:
            converged = True
            break
    new_state = replace(state, u=u, alpha=alpha)
    e = np.asarray(halfstep_energies)
    scale = np.maximum(1.0e-30, np.abs(e[:-1]))
    max_increase = float(np.max((e[1:] - e[:-1]) / scale)) if len(e) > 1 else 0.0
    diag = {
        "altmin_iters": iters,
        "converged": converged,
        "sign_iters": total_sign,
        "cg_iters": total_cg,
        "K_full": K_full,
        "halfstep_energies": halfstep_energies,
        "max_energy_increase_rel": max_increase,
    }
    return new_state, diag


def estimate_nucleation_load(system: FemSystem,
                             dsolver: DisplacementSolver,
                             quantile: float) -> float:
    """Elastic estimate of the displacement at damage onset.

    One linear solve at unit load; the driving (degradable) energy
    scales quadratically, so the load where its high quantile reaches
    the AT1 threshold 3*Gc/(16*ell) follows by scaling. The quantile
    (not the max) is used because corner stress concentrations make the
    elementwise maximum mesh-singular.
    """
    alpha0 = np.zeros(system.mesh.n_nodes)
    u, _, _ = dsolver.solve(alpha0, 1.0)
    w0 = system.driving_energy(u)
    w0 = w0[system.damageable]
    wq = float(np.quantile(w0, quantile))
    if wq <= 0.0:
        raise StartupError("no positive driving energy at unit load")
    w_onset = 3.0 * system.mat.Gc / (16.0 * system.mat.ell)
    return float(np.sqrt(w_onset / wq))


def run_quasistatic(mesh: Mesh, mat: MaterialParams, split: SplitKind,
                    cfg: Optional[SolverConfig] = None,
                    bcs: Optional[BoundaryConditions] = None,
                    reaction_tags: tuple[int, int] = (TOP, BOTTOM),
                    resume: Optional[SimulationState] = None,
                    progress: Optional[Callable] = None) -> RunResult:
    """Monotone displacement-driven run until failure or max_steps."""
    cfg = cfg or SolverConfig()
    system = FemSystem(mesh, mat, split)
    if bcs is None:
        bcs = junction_shear_bcs(mesh)
    dsolver = DisplacementSolver(
        system, bcs, cg_tol=cfg.cg_tol, cg_max_iter=cfg.cg_max_iter,
        precond=cfg.precond, sign_max_iter=cfg.sign_max_iter)

    t0 = time.perf_counter()
    if cfg.du_t is not None:
        du = cfg.du_t
        u_c = float("nan")
    else:
        u_c = estimate_nucleation_load(system, dsolver,
                                       cfg.nucleation_quantile)
        du = u_c * cfg.du_factor

    n_nodes = mesh.n_nodes
    if resume is not None:
        state = resume
        start_step = state.step
    else:
        state = SimulationState(
            step=0, u_t=0.0,
            u=np.zeros(2 * n_nodes),
            alpha=np.zeros(n_nodes),
            alpha_lower=np.zeros(n_nodes))
        start_step = 0

    history: list[StepRecord] = []
    snapshots: dict[int, tuple] = {}
    first_cross = np.full(mesh.n_triangles, -1, dtype=np.int64)
    first_tick = np.full(mesh.n_triangles, -1, dtype=np.int64)
    clock = [0]
    failure_step = None
    failure_reason = ""
    prev_snapshot = None
    max_force = 0.0
    frac_prev = system.fracture_energy(state.alpha)
    frac_jumps: list[float] = []

    def on_damage(alpha_now):
        abar = system.alpha_bar(alpha_now)
        newly = (first_tick < 0) & (abar >= cfg.crossing_threshold)
        first_tick[newly] = clock[0]
        clock[0] += 1

    for n in range(start_step + 1, cfg.max_steps + 1):
        state = replace(state, step=n, u_t=n * du)
        prev_alpha = state.alpha.copy()
        state, diag = alternate_minimize(system, dsolver, state, cfg,
                                         damage_callback=on_damage)

        # polish the recorded equilibrium so reactions/energies are tight
        u_pol, K_pol, _ = dsolver.solve(state.alpha, state.u_t,
                                        u_init=state.u, tol=1.0e-12)
        state = replace(state, u=u_pol)
        diag["K_full"] = K_pol

        signs = system.signs(state.u)
        e_el = system.elastic_energy(state.u, state.alpha, signs)
        e_fr = system.fracture_energy(state.alpha)
        r_top = system.horizontal_reaction(diag["K_full"], state.u,
                                           reaction_tags[0])
        r_bot = system.horizontal_reaction(diag["K_full"], state.u,
                                           reaction_tags[1])
        max_alpha = float(np.max(state.alpha)) if n_nodes else 0.0
        min_incr = float(np.min(state.alpha - prev_alpha)) if n_nodes else 0.0

        rec = StepRecord(
            step=n, u_t=state.u_t, elastic=e_el, fracture=e_fr,
            total=e_el + e_fr, reaction_top=r_top, reaction_bottom=r_bot,
            max_alpha=max_alpha, altmin_iters=diag["altmin_iters"],
            converged=diag["converged"], sign_iters=diag["sign_iters"],
            cg_iters=diag["cg_iters"], min_alpha_increment=min_incr,
            max_energy_increase_rel=diag["max_energy_increase_rel"])
        history.append(rec)
        if progress is not None:
            progress(rec)

        if n <= cfg.startup_steps and max_alpha >= cfg.startup_alpha_tol:
            raise StartupError(
                f"damage {max_alpha:.3g} at step {n} during startup; "
                "reduce the load increment (du_t / du_factor)")

        abar = system.alpha_bar(state.alpha)
        newly = (first_cross < 0) & (abar >= cfg.crossing_threshold)
        first_cross[newly] = n

        # failure detection
        jump = e_fr - frac_prev
        pos_jumps = [j for j in frac_jumps if j > 0.0]
        med = float(np.median(pos_jumps)) if pos_jumps else 0.0
        brutal = (max_alpha >= cfg.failure_alpha and jump > 0.0
                  and (med == 0.0 or jump > cfg.failure_frac_jump * med))
        # a force drop with no localized damage anywhere cannot be a
        # fracture event; the guard keeps numerical noise in (nearly)
        # reaction-free setups from registering as failure
        force = abs(r_top)
        dropped = max_force > 0.0 and max_alpha >= 0.5 and \
            force < (1.0 - cfg.failure_force_drop) * max_force
        frac_jumps.append(jump)
        frac_prev = e_fr
        max_force = max(max_force, force)

        take_snap = (cfg.snapshot_every > 0 and n % cfg.snapshot_every == 0)
        if failure_step is None and (brutal or dropped):
            failure_step = n
            failure_reason = "fracture_jump" if brutal else "force_drop"
            if prev_snapshot is not None:
                snapshots[n - 1] = prev_snapshot
            take_snap = True
        if take_snap:
            snapshots[n] = (state.u.copy(), state.alpha.copy())

        state = replace(state, alpha_lower=state.alpha.copy())
        prev_snapshot = (state.u.copy(), state.alpha.copy())

        if failure_step is not None and cfg.stop_on_failure:
            break

    if history and history[-1].step not in snapshots:
        snapshots[history[-1].step] = (state.u.copy(), state.alpha.copy())

    return RunResult(
        history=history, state=state, snapshots=snapshots,
        failure_step=failure_step, failure_reason=failure_reason,
        first_cross_step=first_cross, first_cross_tick=first_tick,
        u_c_estimate=u_c, du_t=du,
        meta={
            "wall_time": time.perf_counter() - t0,
            "kernel_backend": kern.BACKEND,
            "split": split.value,
        })


def property_checks(result: RunResult, system: FemSystem,
                    rng: Optional[np.random.Generator] = None) -> dict:
    """Per-run invariants (irreversibility, energy monotonicity, ...).

    Returns a dict of named check results; each entry is a tuple
    (passed, measured_value, bound).
    """
    checks = {}
    hist = result.history
    if hist:
        min_incr = min(r.min_alpha_increment for r in hist)
        checks["irreversibility"] = (min_incr >= -1.0e-12, min_incr, -1.0e-12)
        max_inc = max(r.max_energy_increase_rel for r in hist)
        checks["altmin_energy_monotone"] = (max_inc <= 1.0e-10, max_inc,
                                            1.0e-10)
        eq = max(abs(r.reaction_top + r.reaction_bottom)
                 / max(abs(r.reaction_top), abs(r.reaction_bottom), 1e-30)
                 for r in hist)
        checks["reaction_equilibrium"] = (eq <= 1.0e-8, eq, 1.0e-8)
        elastic_rows = [r for r in hist if r.max_alpha < 1.0e-6]
        if len(elastic_rows) >= 3:
            ratio = np.array([r.reaction_top / r.u_t for r in elastic_rows])
            dev = float(np.max(np.abs(ratio / ratio[0] - 1.0)))
            checks["elastic_force_linearity"] = (dev <= 1.0e-3, dev, 1.0e-3)

    # pointwise split identity and complementarity on sampled elements
    rng = rng or np.random.default_rng(0)
    eps = system.strains(result.state.u)
    m = len(eps)
    sample = rng.choice(m, size=min(m, 512), replace=False)
    tr = eps[sample, 0] + eps[sample, 1]
    trp = np.maximum(tr, 0.0)
    trm = tr - trp
    comp = float(np.max(np.abs(trp * trm))) if len(sample) else 0.0
    checks["trace_complementarity"] = (comp == 0.0, comp, 0.0)

    mat = system.mat
    abar = system.alpha_bar(result.state.alpha)[sample]
    g = mat.eta + (1.0 - abar) ** 2
    d1 = eps[sample, 0] - eps[sample, 1]
    dev2 = 0.5 * (d1 ** 2 + eps[sample, 2] ** 2)
    w_ph = 0.5 * mat.K * (trm ** 2 + g * trp ** 2) + mat.mu * dev2
    w_hd = 0.5 * mat.K * trm ** 2 + g * (0.5 * mat.K * trp ** 2
                                         + mat.mu * dev2)
    # normalize per sample by the largest partial term: the identity
    # cancels mu*dev2 exactly, so rounding is relative to it
    denom = 1.0 + np.abs(w_hd) + np.abs(w_ph) + mat.mu * dev2
    ident = float(np.max(np.abs(w_hd - w_ph - (g - 1.0) * mat.mu * dev2)
                         / denom)) if len(sample) else 0.0
    checks["split_identity"] = (ident <= 1.0e-12, ident, 1.0e-12)
    return checks
