"""Pure-numpy implementations of the per-element hot kernels.

Selected by ``wearsim._kernels`` when the compiled extension is missing
or ``WEARSIM_PURE_PYTHON=1``. Must stay numerically identical to
``_core.pyx`` (the test suite compares both backends element-wise).

Voigt convention: strain rows are (eps_xx, eps_yy, gamma_xy) with the
engineering shear gamma = 2*eps_xy. ``b`` and ``c`` are the per-element
shape-gradient coefficients: grad(phi_i) = (b_i, c_i) / (2*area).
"""

import numpy as np

NOSPLIT, PH, HD = 0, 1, 2


def element_strains(u, triangles, b, c, area):
    """Per-element constant strain of a P1 displacement field."""
    ux = u[0::2][triangles]
    uy = u[1::2][triangles]
    inv2a = 0.5 / area
    exx = np.einsum("ij,ij->i", ux, b) * inv2a
    eyy = np.einsum("ij,ij->i", uy, c) * inv2a
    gxy = (np.einsum("ij,ij->i", ux, c) + np.einsum("ij,ij->i", uy, b)) * inv2a
    return np.column_stack([exx, eyy, gxy])


def split_moduli(gbar, sign_pos, split, K, mu):
    """Per-element volumetric/deviatoric moduli (kv, kd) for a split.

    kv multiplies tr(eps)^2/2, kd multiplies eps_d:eps_d.
    """
    gbar = np.asarray(gbar, dtype=np.float64)
    pos = np.asarray(sign_pos, dtype=bool)
    if split == NOSPLIT:
        kv = gbar * K
        kd = gbar * mu
    elif split == PH:
        kv = np.where(pos, gbar * K, K)
        kd = np.full_like(gbar, mu)
    elif split == HD:
        kv = np.where(pos, gbar * K, K)
        kd = gbar * mu
    else:
        raise ValueError(f"bad split code {split}")
    return kv, kd


def stiffness_values(b, c, area, kv, kd):
    """Element stiffness entries, (m, 36) row-major 6x6 blocks.

    K_e = [kv*g g^T + kd*(h h^T + s s^T)] / (4*area) with
    g = (b0,c0,b1,c1,b2,c2) the trace row, h = (b0,-c0,...) the
    (exx - eyy) row and s = (c0,b0,...) the shear row.
    """
    m = len(area)
    g = np.empty((m, 6))
    h = np.empty((m, 6))
    s = np.empty((m, 6))
    g[:, 0::2] = b
    g[:, 1::2] = c
    h[:, 0::2] = b
    h[:, 1::2] = -c
    s[:, 0::2] = c
    s[:, 1::2] = b
    quarter = 0.25 / area
    ke = (kv * quarter)[:, None, None] * (g[:, :, None] * g[:, None, :]) \
        + (kd * quarter)[:, None, None] * (h[:, :, None] * h[:, None, :]
                                           + s[:, :, None] * s[:, None, :])
    return ke.reshape(m, 36)


def damage_values(b, c, area, w0, Gc, ell):
    """Per-element damage quadratic: Hessian blocks (m, 9) and linear (m, 3).

    Element energy in nodal damage a = (a0, a1, a2):
        area * w0 * (1 - abar)^2  +  (3*Gc/8) * (area*abar/ell
                                                 + ell*area*|grad a|^2)
    with abar = (a0+a1+a2)/3 and |grad a|^2 = ((b.a)^2+(c.a)^2)/(2*area)^2.
    """
    m = len(area)
    grad_coef = 3.0 * Gc * ell / (16.0 * area)
    H = (2.0 * area * w0 / 9.0)[:, None, None] * np.ones((1, 3, 3)) \
        + grad_coef[:, None, None] * (b[:, :, None] * b[:, None, :]
                                      + c[:, :, None] * c[:, None, :])
    lin = ((-2.0 * area * w0 / 3.0) + Gc * area / (8.0 * ell))[:, None] \
        * np.ones((1, 3))
    return H.reshape(m, 9), lin


def elastic_energy_terms(strains, area, gbar, sign_pos, split, K, mu):
    """Per-element (degradable_w0, undegradable_wu) densities at g = 1.

    The stored elastic energy of an element is
    area * (g(alpha_bar) * w0 + wu).
    """
    tr = strains[:, 0] + strains[:, 1]
    d1 = strains[:, 0] - strains[:, 1]
    dev2 = 0.5 * (d1 ** 2 + strains[:, 2] ** 2)  # eps_d : eps_d
    pos = np.asarray(sign_pos, dtype=bool)
    trp2 = np.where(pos, tr, 0.0) ** 2
    trm2 = np.where(pos, 0.0, tr) ** 2
    if split == NOSPLIT:
        w0 = 0.5 * K * tr ** 2 + mu * dev2
        wu = np.zeros_like(w0)
    elif split == PH:
        w0 = 0.5 * K * trp2
        wu = 0.5 * K * trm2 + mu * dev2
    elif split == HD:
        w0 = 0.5 * K * trp2 + mu * dev2
        wu = 0.5 * K * trm2
    else:
        raise ValueError(f"bad split code {split}")
    return w0, wu
