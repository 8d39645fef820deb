"""P1 finite elements for the coupled displacement/damage problem.

Displacements are interleaved per node (ux0, uy0, ux1, ...), damage is
one value per node. Strains are element-wise constant; the degradation
of an element uses the nodal-average damage (one-point quadrature of
the coupling term), which keeps the discrete energy, the displacement
operator and the damage quadratic exactly consistent with each other.
Elements in region 1 are undamageable: they assemble with g(0) = 1+eta
and contribute neither coupling nor fracture terms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _kernels as kern
from .constitutive import MaterialParams, SplitKind, degradation
from .geometry import BULK_COARSE
from .meshing import BOTTOM, LEFT, RIGHT, TOP, Mesh

__all__ = [
    "FemError", "SolveError", "BoundaryConditions", "FemSystem",
    "DisplacementSolver", "junction_shear_bcs", "uniaxial_tension_bcs",
    "solve_spd", "element_strain",
]

_SPLIT_CODE = {
    SplitKind.NOSPLIT: kern.NOSPLIT,
    SplitKind.POSITIVE_HYDROSTATIC: kern.PH,
    SplitKind.HYDROSTATIC_DEVIATORIC: kern.HD,
}


class FemError(RuntimeError):
    pass


class SolveError(FemError):
    def __init__(self, msg, residual=None, iterations=None):
        super().__init__(msg)
        self.residual = residual
        self.iterations = iterations


@dataclass
class BoundaryConditions:
    """Dirichlet data: imposed value = scale * load per constrained dof."""

    dofs: np.ndarray
    scale: np.ndarray
    description: str = ""

    def __post_init__(self):
        self.dofs = np.asarray(self.dofs, dtype=np.int64)
        self.scale = np.asarray(self.scale, dtype=np.float64)
        if len(self.dofs) != len(self.scale):
            raise ValueError("dofs and scale must have equal length")
        if len(np.unique(self.dofs)) != len(self.dofs):
            raise ValueError("duplicate constrained dofs")

    def values(self, load: float) -> np.ndarray:
        return self.scale * load


def junction_shear_bcs(mesh: Mesh) -> BoundaryConditions:
    """Relative horizontal displacement of the top and bottom boundaries.

    Top boundary: ux = -load/2, bottom: ux = +load/2 (pressing the upper
    asperity against the lower one); uy = 0 on both.
    """
    top = mesh.boundary_nodes(TOP)
    bot = mesh.boundary_nodes(BOTTOM)
    if len(top) == 0 or len(bot) == 0:
        raise FemError("mesh has no tagged top/bottom boundary")
    dofs = np.concatenate([2 * top, 2 * top + 1, 2 * bot, 2 * bot + 1])
    scale = np.concatenate([
        np.full(len(top), -0.5), np.zeros(len(top)),
        np.full(len(bot), +0.5), np.zeros(len(bot)),
    ])
    return BoundaryConditions(dofs, scale, "junction shear")


def uniaxial_tension_bcs(mesh: Mesh) -> BoundaryConditions:
    """Strip tension: ux = +-load/2 on the right/left ends, uy pinned once."""
    left = mesh.boundary_nodes(LEFT)
    right = mesh.boundary_nodes(RIGHT)
    if len(left) == 0 or len(right) == 0:
        raise FemError("mesh has no tagged left/right boundary")
    center = mesh.nodes.mean(axis=0)
    pin = int(np.argmin(np.sum((mesh.nodes - center) ** 2, axis=1)))
    dofs = np.concatenate([2 * left, 2 * right, [2 * pin + 1]])
    scale = np.concatenate([
        np.full(len(left), -0.5), np.full(len(right), +0.5), [0.0]])
    return BoundaryConditions(dofs, scale, "uniaxial tension")


def _element_geometry(mesh: Mesh):
    p = mesh.nodes[mesh.triangles]
    b = np.empty((mesh.n_triangles, 3))
    c = np.empty((mesh.n_triangles, 3))
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        b[:, i] = p[:, j, 1] - p[:, k, 1]
        c[:, i] = p[:, k, 0] - p[:, j, 0]
    return b, c


def element_strain(u: np.ndarray, mesh: Mesh, e: int) -> np.ndarray:
    """Constant 2x2 strain tensor of element ``e``."""
    area = mesh.areas()[e]
    if area <= 0.0:
        raise FemError(f"degenerate triangle {e}")
    tri = np.ascontiguousarray(mesh.triangles[e:e + 1])
    b, c = _element_geometry(mesh)
    v = kern.element_strains(np.ascontiguousarray(u, dtype=np.float64),
                             tri, np.ascontiguousarray(b[e:e + 1]),
                             np.ascontiguousarray(c[e:e + 1]),
                             np.ascontiguousarray(mesh.areas()[e:e + 1]))[0]
    return np.array([[v[0], 0.5 * v[2]], [0.5 * v[2], v[1]]])


class FemSystem:
    """Precomputed assembly machinery for one mesh/material/split."""

    def __init__(self, mesh: Mesh, mat: MaterialParams, split: SplitKind):
        self.mesh = mesh
        self.mat = mat
        self.split = split
        self.split_code = _SPLIT_CODE[split]
        self.area = np.ascontiguousarray(mesh.areas(), dtype=np.float64)
        if np.any(self.area <= 0.0):
            raise FemError("mesh contains non-positive triangle areas")
        b, c = _element_geometry(mesh)
        self.b = np.ascontiguousarray(b)
        self.c = np.ascontiguousarray(c)
        self.tris = np.ascontiguousarray(mesh.triangles, dtype=np.int64)
        self.damageable = np.ascontiguousarray(mesh.region != BULK_COARSE)

        # displacement scatter indices (m, 6) -> COO rows/cols
        dofs = np.empty((mesh.n_triangles, 6), dtype=np.int64)
        dofs[:, 0::2] = 2 * self.tris
        dofs[:, 1::2] = 2 * self.tris + 1
        self._rows = np.repeat(dofs, 6, axis=1).ravel()
        self._cols = np.tile(dofs, (1, 6)).ravel()
        self.n_dofs = 2 * mesh.n_nodes

        # damage scatter on active (damageable-adjacent) nodes
        self.damage_nodes = np.unique(self.tris[self.damageable])
        self._g2l = -np.ones(mesh.n_nodes, dtype=np.int64)
        self._g2l[self.damage_nodes] = np.arange(len(self.damage_nodes))
        dtris = self._g2l[self.tris[self.damageable]]
        self._drows = np.repeat(dtris, 3, axis=1).ravel()
        self._dcols = np.tile(dtris, (1, 3)).ravel()
        self._dtris_local = dtris

    # -- state helpers ----------------------------------------------------
    def alpha_bar(self, alpha: np.ndarray) -> np.ndarray:
        """Element-average damage; zero on undamageable elements."""
        abar = alpha[self.tris].mean(axis=1)
        abar[~self.damageable] = 0.0
        return abar

    def gbar(self, alpha: np.ndarray) -> np.ndarray:
        return degradation(self.alpha_bar(alpha), self.mat.eta)

    def strains(self, u: np.ndarray) -> np.ndarray:
        return kern.element_strains(
            np.ascontiguousarray(u, dtype=np.float64),
            self.tris, self.b, self.c, self.area)

    def signs(self, u: Optional[np.ndarray]) -> np.ndarray:
        """Per-element tension/compression flags: tr(eps) >= 0."""
        if u is None:
            return np.ones(self.mesh.n_triangles, dtype=np.uint8)
        eps = self.strains(u)
        return ((eps[:, 0] + eps[:, 1]) >= 0.0).astype(np.uint8)

    # -- displacement sub-problem -----------------------------------------
    def assemble_displacement(self, alpha, signs) -> sp.csr_matrix:
        """Full (unconstrained) tangent operator for frozen signs."""
        kv, kd = kern.split_moduli(self.gbar(alpha), signs,
                                   self.split_code, self.mat.K, self.mat.mu)
        vals = kern.stiffness_values(self.b, self.c, self.area, kv, kd)
        K = sp.coo_matrix((vals.ravel(), (self._rows, self._cols)),
                          shape=(self.n_dofs, self.n_dofs)).tocsr()
        return K

    def elastic_energy(self, u, alpha, signs=None) -> float:
        if signs is None:
            signs = self.signs(u)
        w0, wu = kern.elastic_energy_terms(
            self.strains(u), self.area, self.gbar(alpha), signs,
            self.split_code, self.mat.K, self.mat.mu)
        return float(np.sum(self.area * (self.gbar(alpha) * w0 + wu)))

    def fracture_energy(self, alpha) -> float:
        d = self.damageable
        abar = alpha[self.tris[d]].mean(axis=1)
        gx = np.einsum("ij,ij->i", alpha[self.tris[d]], self.b[d]) \
            / (2.0 * self.area[d])
        gy = np.einsum("ij,ij->i", alpha[self.tris[d]], self.c[d]) \
            / (2.0 * self.area[d])
        mat = self.mat
        dens = 0.375 * mat.Gc * (abar / mat.ell
                                 + mat.ell * (gx ** 2 + gy ** 2))
        return float(np.sum(self.area[d] * dens))

    def total_energy(self, u, alpha, signs=None) -> tuple[float, float]:
        return (self.elastic_energy(u, alpha, signs),
                self.fracture_energy(alpha))

    # -- damage sub-problem -------------------------------------------------
    def driving_energy(self, u, signs=None) -> np.ndarray:
        """Degradable elastic density w0 per element (zero where region 1)."""
        if signs is None:
            signs = self.signs(u)
        w0, _ = kern.elastic_energy_terms(
            self.strains(u), self.area,
            np.ones(self.mesh.n_triangles), signs,
            self.split_code, self.mat.K, self.mat.mu)
        w0 = w0.copy()
        w0[~self.damageable] = 0.0
        return w0

    def assemble_damage(self, u, signs=None):
        """Quadratic damage functional 0.5 a^T H a + lin^T a on active nodes."""
        d = self.damageable
        w0 = self.driving_energy(u, signs)[d]
        H_e, lin_e = kern.damage_values(
            np.ascontiguousarray(self.b[d]), np.ascontiguousarray(self.c[d]),
            np.ascontiguousarray(self.area[d]), np.ascontiguousarray(w0),
            self.mat.Gc, self.mat.ell)
        n = len(self.damage_nodes)
        H = sp.coo_matrix((H_e.ravel(), (self._drows, self._dcols)),
                          shape=(n, n)).tocsr()
        lin = np.zeros(n)
        np.add.at(lin, self._dtris_local.ravel(), lin_e.ravel())
        return H, lin

    def damage_objective(self, H, lin, a_local) -> float:
        return 0.5 * float(a_local @ (H @ a_local)) + float(lin @ a_local)

    def expand_damage(self, a_local) -> np.ndarray:
        alpha = np.zeros(self.mesh.n_nodes)
        alpha[self.damage_nodes] = a_local
        return alpha

    # -- reactions ----------------------------------------------------------
    def horizontal_reaction(self, K_full, u, tag: int) -> float:
        nodes = self.mesh.boundary_nodes(tag)
        r = K_full @ u
        return float(np.sum(r[2 * nodes]))


def apply_dirichlet(K: sp.csr_matrix, bcs: BoundaryConditions, load: float):
    """Symmetric elimination; returns (K_ff, rhs_f, free, u_fixed_full)."""
    n = K.shape[0]
    fixed = bcs.dofs
    vals = bcs.values(load)
    mask = np.ones(n, dtype=bool)
    mask[fixed] = False
    free = np.nonzero(mask)[0]
    u_fix = np.zeros(n)
    u_fix[fixed] = vals
    rhs = -(K @ u_fix)[free]
    K_ff = K[free][:, free].tocsr()
    return K_ff, rhs, free, u_fix


def solve_spd(A, b, tol=1.0e-8, max_iter=5000, precond="jacobi", M=None,
              x0=None):
    """Preconditioned CG for an SPD operator; residual <= tol * ||b||.

    Returns (x, iterations). ``M`` overrides the named preconditioner.
    """
    if A.shape[0] == 0:
        return np.zeros(0), 0
    if M is None:
        if precond == "jacobi":
            d = A.diagonal()
            if np.any(d <= 0.0):
                raise SolveError("non-positive diagonal; operator not SPD")
            M = sp.diags(1.0 / d)
        elif precond == "amg":
            import pyamg
            ml = pyamg.smoothed_aggregation_solver(sp.csr_matrix(A))
            M = ml.aspreconditioner(cycle="V")
        elif precond is None or precond == "none":
            M = None
        else:
            raise ValueError(f"unknown preconditioner {precond!r}")
    count = [0]

    def tick(_):
        count[0] += 1

    x, info = spla.cg(A, b, x0=x0, rtol=tol, atol=0.0, maxiter=max_iter,
                      M=M, callback=tick)
    if info != 0:
        res = float(np.linalg.norm(b - A @ x))
        raise SolveError(
            f"CG failed to converge in {max_iter} iterations "
            f"(residual {res:.3e})", residual=res, iterations=count[0])
    return x, count[0]


def _rigid_modes(nodes: np.ndarray) -> np.ndarray:
    n = len(nodes)
    B = np.zeros((2 * n, 3))
    B[0::2, 0] = 1.0
    B[1::2, 1] = 1.0
    B[0::2, 2] = -nodes[:, 1]
    B[1::2, 2] = nodes[:, 0]
    return B


class DisplacementSolver:
    """Sign-set fixed point over the split elastic energy.

    Freezing the tension/compression branch per element makes the
    problem quadratic; the loop re-solves until the sign set is stable.
    A line search on the true (branch-consistent) energy guards the
    rare non-monotone Picard update, so energy never increases across
    outer iterations.
    """

    def __init__(self, system: FemSystem, bcs: BoundaryConditions,
                 cg_tol=1.0e-8, cg_max_iter=5000, precond="amg",
                 sign_max_iter=50, amg_rebuild_iters=150):
        self.sys = system
        self.bcs = bcs
        self.cg_tol = cg_tol
        self.cg_max_iter = cg_max_iter
        self.precond = precond
        self.sign_max_iter = sign_max_iter
        self.amg_rebuild_iters = amg_rebuild_iters
        self._M = None
        self._rigid = _rigid_modes(system.mesh.nodes)

    def _preconditioner(self, K_ff, free, force=False):
        if self.precond != "amg":
            return None  # solve_spd builds jacobi itself
        if self._M is None or force:
            import pyamg
            B = self._rigid[free]
            ml = pyamg.smoothed_aggregation_solver(
                sp.csr_matrix(K_ff), B=B, max_coarse=300)
            self._M = ml.aspreconditioner(cycle="V")
        return self._M

    def _solve_linear(self, K, load, u_init, tol=None):
        K_ff, rhs, free, u_fix = apply_dirichlet(K, self.bcs, load)
        x0 = u_init[free] if u_init is not None else None
        tol = tol if tol is not None else self.cg_tol
        M = self._preconditioner(K_ff, free)
        try:
            x, iters = solve_spd(K_ff, rhs, tol=tol,
                                 max_iter=self.cg_max_iter,
                                 precond=self.precond, M=M, x0=x0)
        except SolveError:
            if self.precond != "amg":
                raise
            M = self._preconditioner(K_ff, free, force=True)
            x, iters = solve_spd(K_ff, rhs, tol=tol,
                                 max_iter=self.cg_max_iter,
                                 precond=self.precond, M=M, x0=x0)
        if self.precond == "amg" and iters > self.amg_rebuild_iters:
            self._M = None  # operator drifted; rebuild next time
        u = u_fix
        u[free] = x
        return u, iters

    def solve(self, alpha, load, u_init=None, tol=None):
        """Returns (u, K_full, info dict).

        ``u_init`` seeds the CG iteration and the initial sign set; it
        may come from a different load level, so energy comparisons
        (which require the current boundary values) only start after
        the first solve.
        """
        sys_ = self.sys
        signs = sys_.signs(u_init) if u_init is not None else \
            np.ones(sys_.mesh.n_triangles, dtype=np.uint8)
        warm = u_init
        u_prev = None
        total_cg = 0
        for it in range(self.sign_max_iter):
            K = sys_.assemble_displacement(alpha, signs)
            u, cg_iters = self._solve_linear(
                K, load, u_prev if u_prev is not None else warm, tol=tol)
            total_cg += cg_iters
            if sys_.split is SplitKind.NOSPLIT:
                return u, K, {"sign_iters": 1, "cg_iters": total_cg}
            new_signs = sys_.signs(u)
            if np.array_equal(new_signs, signs):
                return u, K, {"sign_iters": it + 1, "cg_iters": total_cg}
            # flips whose branch change is energetically negligible (e.g.
            # tr ~ 0, or undamaged elements where the branches differ by
            # eta only) do not warrant another solve
            flipped = new_signs != signs
            eps = sys_.strains(u)
            tr2 = (eps[flipped, 0] + eps[flipped, 1]) ** 2
            gvals = sys_.gbar(alpha)[flipped]
            impact = float(np.sum(np.abs(gvals - 1.0) * 0.5 * sys_.mat.K
                                  * tr2 * sys_.area[flipped]))
            e_new = sys_.elastic_energy(u, alpha, new_signs)
            if impact <= 1.0e-12 * max(abs(e_new), 1.0e-30):
                return u, K, {"sign_iters": it + 1, "cg_iters": total_cg}
            if u_prev is not None:
                e_prev = sys_.elastic_energy(u_prev, alpha)
                if e_new > e_prev + 1.0e-13 * max(1.0, abs(e_prev)):
                    u = self._energy_line_search(u_prev, u, alpha,
                                                 e_prev, e_new)
                    new_signs = sys_.signs(u)
            signs = new_signs
            u_prev = u
        flipped = np.nonzero(flipped)[0]
        raise SolveError(
            f"tension/compression sign set did not stabilize in "
            f"{self.sign_max_iter} iterations; oscillating elements: "
            f"{flipped[:20].tolist()}{'...' if len(flipped) > 20 else ''}")

    def _energy_line_search(self, u0, u1, alpha, e0, e1):
        from scipy.optimize import minimize_scalar
        sys_ = self.sys
        d = u1 - u0

        def f(t):
            return sys_.elastic_energy(u0 + t * d, alpha)

        res = minimize_scalar(f, bounds=(0.0, 1.0), method="bounded",
                              options={"xatol": 1.0e-6})
        t = float(res.x)
        if f(t) > min(e0, e1):
            t = 0.0 if e0 <= e1 else 1.0
        return u0 + t * d
