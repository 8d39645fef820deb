"""Box-constrained convex quadratic minimization.

Solves min 0.5 x^T H x + q^T x subject to lo <= x <= hi for sparse SPD
H, by projected-gradient (Cauchy) steps to settle the active set plus
conjugate-gradient acceleration on the free variables. This is the
damage sub-problem solver: H couples the AT1 gradient stiffness with
the elastic driving term, the lower bound carries irreversibility.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["QpError", "QpResult", "solve_box_qp", "projected_gradient"]

_BOUND_EPS = 1.0e-12


class QpError(RuntimeError):
    def __init__(self, msg, kkt=None):
        super().__init__(msg)
        self.kkt = kkt


@dataclass
class QpResult:
    x: np.ndarray
    kkt: float
    outer_iterations: int
    cg_iterations: int
    converged: bool


def projected_gradient(g, x, lo, hi):
    """KKT residual: gradient with bound-blocked components zeroed."""
    pg = g.copy()
    at_lo = x <= lo + _BOUND_EPS
    at_hi = x >= hi - _BOUND_EPS
    pg[at_lo] = np.minimum(g[at_lo], 0.0)
    pg[at_hi] = np.maximum(g[at_hi], 0.0)
    pg[at_lo & at_hi] = 0.0  # pinned (lo == hi) variables
    return pg


def _objective(H, q, x):
    return 0.5 * float(x @ (H @ x)) + float(q @ x)


def _cauchy_step(H, q, x, g, lo, hi):
    """Projected steepest-descent step with quadratic line search."""
    d = -projected_gradient(g, x, lo, hi)
    if not np.any(d):
        return x, g
    Hd = H @ d
    dHd = float(d @ Hd)
    gd = float(g @ d)
    t = -gd / dHd if dHd > 0.0 else 1.0
    f0 = _objective(H, q, x)
    for _ in range(30):
        x_new = np.clip(x + t * d, lo, hi)
        if _objective(H, q, x_new) <= f0 + 1.0e-15 * abs(f0):
            return x_new, H @ x_new + q
        t *= 0.5
    return x, g


def _reduced_cg(H, g, free, diag, rtol, maxiter):
    """CG on the free block of H d = -g (d zero on active set)."""
    n = len(g)
    d = np.zeros(n)
    r = np.where(free, -g, 0.0)
    norm0 = np.linalg.norm(r)
    if norm0 == 0.0:
        return d, 0
    z = np.where(free, r / diag, 0.0)
    p = z.copy()
    rz = float(r @ z)
    it = 0
    for it in range(1, maxiter + 1):
        Hp = H @ p
        Hp[~free] = 0.0
        pHp = float(p @ Hp)
        if pHp <= 0.0:
            break
        a = rz / pHp
        d += a * p
        r -= a * Hp
        if np.linalg.norm(r) <= rtol * norm0:
            break
        z = np.where(free, r / diag, 0.0)
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    return d, it


def solve_box_qp(H, q, lo, hi, x0=None, kkt_tol=None, max_outer=100,
                 cg_rtol=0.05, cg_maxiter=500) -> QpResult:
    """Minimize 0.5 x^T H x + q^T x over the box [lo, hi].

    ``kkt_tol`` is the absolute sup-norm tolerance on the projected
    gradient; by default 1e-9 relative to ||q||_inf. Raises QpError if
    the tolerance is not met within ``max_outer`` rounds.
    """
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    if np.any(lo > hi + _BOUND_EPS):
        raise QpError("infeasible bounds: lo > hi")
    n = len(q)
    if n == 0:
        return QpResult(np.zeros(0), 0.0, 0, 0, True)
    if kkt_tol is None:
        kkt_tol = 1.0e-9 * max(1.0e-30, float(np.max(np.abs(q))))
    x = np.clip(x0 if x0 is not None else lo, lo, hi)
    diag = np.asarray(H.diagonal())
    if np.any(diag <= 0.0):
        raise QpError("H has non-positive diagonal entries")
    g = H @ x + q
    total_cg = 0
    for outer in range(1, max_outer + 1):
        kkt = float(np.max(np.abs(projected_gradient(g, x, lo, hi))))
        if kkt <= kkt_tol:
            return QpResult(x, kkt, outer - 1, total_cg, True)
        x, g = _cauchy_step(H, q, x, g, lo, hi)
        free = ~(((x <= lo + _BOUND_EPS) & (g > 0.0))
                 | ((x >= hi - _BOUND_EPS) & (g < 0.0)))
        if np.any(free):
            d, cg_it = _reduced_cg(H, g, free, diag, cg_rtol, cg_maxiter)
            total_cg += cg_it
            Hd = H @ d
            dHd = float(d @ Hd)
            gd = float(g @ d)
            if dHd > 0.0 and gd < 0.0:
                t = min(1.0, -gd / dHd)
                f0 = _objective(H, q, x)
                for _ in range(30):
                    x_new = np.clip(x + t * d, lo, hi)
                    if _objective(H, q, x_new) <= f0 + 1.0e-15 * abs(f0):
                        x = x_new
                        break
                    t *= 0.5
                g = H @ x + q
    kkt = float(np.max(np.abs(projected_gradient(g, x, lo, hi))))
    raise QpError(
        f"box QP did not reach KKT tolerance {kkt_tol:.2e} in {max_outer} "
        f"rounds (projected gradient {kkt:.2e})", kkt=kkt)
