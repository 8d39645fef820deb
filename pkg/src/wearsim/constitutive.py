"""Regularized brittle-fracture energy densities and derived scalar laws.

The damage variable ``alpha`` lives in [0, 1] (0 = intact, 1 = broken) and
degrades the elastic energy through ``g(alpha) = eta + (1 - alpha)**2``.
The fracture density is the linear (AT1-type) form

    W_fr = (3*Gc/8) * (alpha/ell + ell*|grad alpha|**2)

which dissipates exactly ``Gc`` per unit length of a fully developed crack.
Three couplings between damage and elastic energy are provided:

* ``NOSPLIT``  - the whole elastic energy is degraded (symmetric in
  tension/compression, allows interpenetration),
* ``POSITIVE_HYDROSTATIC`` - only the positive-volume-change spherical
  energy is degraded (mode-I driven),
* ``HYDROSTATIC_DEVIATORIC`` - positive spherical plus deviatoric energy
  are degraded (mode-I and mode-II driven).

Everything is formulated in non-dimensional plane strain with 2D tensors;
the trace runs over the 2x2 strain/stress and the "bulk" modulus K is the
plane-strain one, K = lambda + mu.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SplitKind",
    "MaterialParams",
    "EnergyDensities",
    "degradation",
    "volumetric_split",
    "elastic_density",
    "fracture_density",
    "energy_densities",
    "nucleation_stress",
    "numerical_toughness",
    "stress_criterion",
]


class SplitKind(enum.Enum):
    """Coupling between the damage field and the elastic energy."""

    NOSPLIT = "nosplit"
    POSITIVE_HYDROSTATIC = "ph"
    HYDROSTATIC_DEVIATORIC = "hd"

    @classmethod
    def parse(cls, name: str) -> "SplitKind":
        key = name.strip().lower()
        aliases = {
            "nosplit": cls.NOSPLIT,
            "none": cls.NOSPLIT,
            "ph": cls.POSITIVE_HYDROSTATIC,
            "positive_hydrostatic": cls.POSITIVE_HYDROSTATIC,
            "hd": cls.HYDROSTATIC_DEVIATORIC,
            "hydrostatic_deviatoric": cls.HYDROSTATIC_DEVIATORIC,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown split kind: {name!r}") from None


@dataclass(frozen=True)
class MaterialParams:
    """Non-dimensional isotropic material data.

    Derived plane-strain constants are computed once at construction:
    ``mu`` (shear), ``lam`` (Lame), ``K = lam + mu`` (2D bulk) and the
    3x3 Voigt stiffness ``C`` acting on (eps_xx, eps_yy, gamma_xy).
    """

    E: float = 1.0
    nu: float = 0.2
    Gc: float = 1.0
    ell: float = 0.02
    eta: float = 1.0e-6
    mu: float = field(init=False)
    lam: float = field(init=False)
    K: float = field(init=False)

    def __post_init__(self):
        if self.E <= 0.0:
            raise ValueError(f"E must be positive, got {self.E}")
        if not -1.0 < self.nu < 0.5:
            raise ValueError(f"nu must lie in (-1, 0.5), got {self.nu}")
        if self.Gc <= 0.0:
            raise ValueError(f"Gc must be positive, got {self.Gc}")
        if self.ell <= 0.0:
            raise ValueError(f"ell must be positive, got {self.ell}")
        if not 0.0 <= self.eta < 1.0e-1:
            raise ValueError(f"eta must be small and non-negative, got {self.eta}")
        mu = self.E / (2.0 * (1.0 + self.nu))
        lam = self.E * self.nu / ((1.0 + self.nu) * (1.0 - 2.0 * self.nu))
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "K", lam + mu)

    @property
    def C(self) -> np.ndarray:
        """Plane-strain stiffness in Voigt form for (eps_xx, eps_yy, gamma_xy)."""
        lam, mu = self.lam, self.mu
        return np.array(
            [
                [lam + 2.0 * mu, lam, 0.0],
                [lam, lam + 2.0 * mu, 0.0],
                [0.0, 0.0, mu],
            ]
        )

    def elastic_constants_from_K_mu(self) -> tuple[float, float]:
        """Recover (E, nu) from the stored (K, mu); round-trip consistency check."""
        lam = self.K - self.mu
        nu = lam / (2.0 * (lam + self.mu))
        E = self.mu * (3.0 * lam + 2.0 * self.mu) / (lam + self.mu)
        return E, nu


@dataclass(frozen=True)
class EnergyDensities:
    """Pointwise energy record for one strain/damage state."""

    W_el: float
    W_fr: float
    g: float
    tr_plus: float
    tr_minus: float
    eps_dev: np.ndarray


def degradation(alpha, eta):
    """Stiffness multiplier ``g(alpha) = eta + (1 - alpha)**2``."""
    return eta + (1.0 - alpha) ** 2


def volumetric_split(eps: np.ndarray):
    """Split a 2x2 strain into (tr_plus, tr_minus, deviator).

    tr_plus = max(0, tr eps), tr_minus = tr eps - tr_plus, so that the
    two parts sum to the trace exactly and their product is zero.
    """
    tr = eps[0, 0] + eps[1, 1]
    tr_plus = tr if tr > 0.0 else 0.0
    tr_minus = tr - tr_plus
    dev = eps - 0.5 * tr * np.eye(2)
    return tr_plus, tr_minus, dev


def elastic_density(eps: np.ndarray, alpha: float, mat: MaterialParams,
                    split: SplitKind) -> float:
    """Degraded elastic energy density at one point.

    NOSPLIT: (g/2) eps:C:eps.
    PH:      (K/2)(tr_minus^2 + g*tr_plus^2) + mu eps_d:eps_d.
    HD:      (K/2) tr_minus^2 + g[(K/2) tr_plus^2 + mu eps_d:eps_d].
    """
    g = degradation(alpha, mat.eta)
    tr_plus, tr_minus, dev = volumetric_split(eps)
    dev2 = float(np.tensordot(dev, dev))
    K, mu = mat.K, mat.mu
    if split is SplitKind.NOSPLIT:
        tr = tr_plus + tr_minus
        return g * (0.5 * K * tr * tr + mu * dev2)
    if split is SplitKind.POSITIVE_HYDROSTATIC:
        return 0.5 * K * (tr_minus ** 2 + g * tr_plus ** 2) + mu * dev2
    if split is SplitKind.HYDROSTATIC_DEVIATORIC:
        return 0.5 * K * tr_minus ** 2 + g * (0.5 * K * tr_plus ** 2 + mu * dev2)
    raise ValueError(f"unsupported split {split}")


def fracture_density(alpha, grad_alpha, mat: MaterialParams):
    """AT1 fracture density ``(3*Gc/8)(alpha/ell + ell |grad alpha|^2)``."""
    grad_alpha = np.asarray(grad_alpha, dtype=float)
    grad2 = float(np.dot(grad_alpha.ravel(), grad_alpha.ravel()))
    return 0.375 * mat.Gc * (alpha / mat.ell + mat.ell * grad2)


def energy_densities(eps, alpha, grad_alpha, mat, split) -> EnergyDensities:
    tr_plus, tr_minus, dev = volumetric_split(eps)
    return EnergyDensities(
        W_el=elastic_density(eps, alpha, mat, split),
        W_fr=fracture_density(alpha, grad_alpha, mat),
        g=degradation(alpha, mat.eta),
        tr_plus=tr_plus,
        tr_minus=tr_minus,
        eps_dev=dev,
    )


def nucleation_stress(mat: MaterialParams) -> float:
    """Uniaxial plane-strain tensile strength set by the regularization length.

    sigma_c = sqrt(3*Gc*E / (8*ell*(1 - nu^2))); the homogeneous elastic
    limit of the AT1 response of a plane-strain strip.
    """
    return math.sqrt(3.0 * mat.Gc * mat.E / (8.0 * mat.ell * (1.0 - mat.nu ** 2)))


def numerical_toughness(Gc: float, delta: float, ell: float) -> float:
    """Mesh-corrected toughness ``Gc * (1 + 3*delta/(8*ell))``.

    Accounts for the one-element-wide fully damaged band of a discrete
    crack; the dissipated energy per unit crack length on a mesh of size
    ``delta`` is this value, not ``Gc``.
    """
    if delta < 0.0 or ell <= 0.0:
        raise ValueError("delta must be >= 0 and ell > 0")
    return Gc * (1.0 + 3.0 * delta / (8.0 * ell))


def stress_criterion(sigma: np.ndarray, mat: MaterialParams,
                     convention: str = "2d") -> float:
    """Nucleation indicator F(sigma); negative in the sound elastic regime.

    F = sigma_eq^2 + (3*mu/K)*sigma_m+^2 - (3*mu/E)*sigma_c^2 with
    sigma_eq the equivalent deviatoric stress and sigma_m+ the positive
    mean stress. With ``convention="2d"`` (default, used everywhere in
    this package) the invariants use the 2x2 trace and the plane-strain
    K; ``"3d"`` reconstructs sigma_zz = nu*(sigma_xx + sigma_yy) and uses
    the 3D mean stress and bulk modulus.
    """
    sigma = np.asarray(sigma, dtype=float)
    sc2 = nucleation_stress(mat) ** 2
    if convention == "2d":
        sh = 0.5 * (sigma[0, 0] + sigma[1, 1])
        dev = sigma - sh * np.eye(2)
        seq2 = 1.5 * float(np.tensordot(dev, dev))
        smp = max(0.0, sh)
        K = mat.K
    elif convention == "3d":
        szz = mat.nu * (sigma[0, 0] + sigma[1, 1])
        s3 = np.array(
            [
                [sigma[0, 0], sigma[0, 1], 0.0],
                [sigma[1, 0], sigma[1, 1], 0.0],
                [0.0, 0.0, szz],
            ]
        )
        sh = np.trace(s3) / 3.0
        dev = s3 - sh * np.eye(3)
        seq2 = 1.5 * float(np.tensordot(dev, dev))
        smp = max(0.0, sh)
        K = mat.E / (3.0 * (1.0 - 2.0 * mat.nu))
    else:
        raise ValueError(f"convention must be '2d' or '3d', got {convention!r}")
    return seq2 + (3.0 * mat.mu / K) * smp ** 2 - (3.0 * mat.mu / mat.E) * sc2
