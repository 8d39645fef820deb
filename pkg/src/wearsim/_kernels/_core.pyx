# Compiled twins of the _fallback kernels. Keep the arithmetic order
# identical to the numpy versions where results are compared at 1e-15.
import numpy as np

cimport numpy as cnp

cnp.import_array()

NOSPLIT, PH, HD = 0, 1, 2


def element_strains(double[::1] u, long long[:, ::1] triangles,
                    double[:, ::1] b, double[:, ::1] c, double[::1] area):
    cdef Py_ssize_t m = triangles.shape[0]
    out = np.empty((m, 3), dtype=np.float64)
    cdef double[:, ::1] eps = out
    cdef Py_ssize_t e, k
    cdef long long n
    cdef double exx, eyy, gxy, inv2a, uxk, uyk
    for e in range(m):
        exx = 0.0
        eyy = 0.0
        gxy = 0.0
        for k in range(3):
            n = triangles[e, k]
            uxk = u[2 * n]
            uyk = u[2 * n + 1]
            exx += uxk * b[e, k]
            eyy += uyk * c[e, k]
            gxy += uxk * c[e, k] + uyk * b[e, k]
        inv2a = 0.5 / area[e]
        eps[e, 0] = exx * inv2a
        eps[e, 1] = eyy * inv2a
        eps[e, 2] = gxy * inv2a
    return out


def split_moduli(double[::1] gbar, cnp.uint8_t[::1] sign_pos, int split,
                 double K, double mu):
    cdef Py_ssize_t m = gbar.shape[0]
    kv_arr = np.empty(m, dtype=np.float64)
    kd_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] kv = kv_arr
    cdef double[::1] kd = kd_arr
    cdef Py_ssize_t e
    if split == 0:
        for e in range(m):
            kv[e] = gbar[e] * K
            kd[e] = gbar[e] * mu
    elif split == 1:
        for e in range(m):
            kv[e] = gbar[e] * K if sign_pos[e] else K
            kd[e] = mu
    elif split == 2:
        for e in range(m):
            kv[e] = gbar[e] * K if sign_pos[e] else K
            kd[e] = gbar[e] * mu
    else:
        raise ValueError(f"bad split code {split}")
    return kv_arr, kd_arr


def stiffness_values(double[:, ::1] b, double[:, ::1] c, double[::1] area,
                     double[::1] kv, double[::1] kd):
    cdef Py_ssize_t m = area.shape[0]
    out = np.empty((m, 36), dtype=np.float64)
    cdef double[:, ::1] vals = out
    cdef double g[6]
    cdef double h[6]
    cdef double s[6]
    cdef Py_ssize_t e, i, j, k
    cdef double qv, qd
    for e in range(m):
        for k in range(3):
            g[2 * k] = b[e, k]
            g[2 * k + 1] = c[e, k]
            h[2 * k] = b[e, k]
            h[2 * k + 1] = -c[e, k]
            s[2 * k] = c[e, k]
            s[2 * k + 1] = b[e, k]
        qv = kv[e] * 0.25 / area[e]
        qd = kd[e] * 0.25 / area[e]
        for i in range(6):
            for j in range(6):
                vals[e, 6 * i + j] = qv * g[i] * g[j] \
                    + qd * (h[i] * h[j] + s[i] * s[j])
    return out


def damage_values(double[:, ::1] b, double[:, ::1] c, double[::1] area,
                  double[::1] w0, double Gc, double ell):
    cdef Py_ssize_t m = area.shape[0]
    H_out = np.empty((m, 9), dtype=np.float64)
    lin_out = np.empty((m, 3), dtype=np.float64)
    cdef double[:, ::1] H = H_out
    cdef double[:, ::1] lin = lin_out
    cdef Py_ssize_t e, i, j
    cdef double mass, gcoef, lval
    for e in range(m):
        mass = 2.0 * area[e] * w0[e] / 9.0
        gcoef = 3.0 * Gc * ell / (16.0 * area[e])
        for i in range(3):
            for j in range(3):
                H[e, 3 * i + j] = mass + gcoef * (b[e, i] * b[e, j]
                                                  + c[e, i] * c[e, j])
        lval = -2.0 * area[e] * w0[e] / 3.0 + Gc * area[e] / (8.0 * ell)
        lin[e, 0] = lval
        lin[e, 1] = lval
        lin[e, 2] = lval
    return H_out, lin_out


def elastic_energy_terms(double[:, ::1] strains, double[::1] area,
                         double[::1] gbar, cnp.uint8_t[::1] sign_pos,
                         int split, double K, double mu):
    cdef Py_ssize_t m = area.shape[0]
    w0_out = np.empty(m, dtype=np.float64)
    wu_out = np.empty(m, dtype=np.float64)
    cdef double[::1] w0 = w0_out
    cdef double[::1] wu = wu_out
    cdef Py_ssize_t e
    cdef double tr, d1, dev2, trp2, trm2
    for e in range(m):
        tr = strains[e, 0] + strains[e, 1]
        d1 = strains[e, 0] - strains[e, 1]
        dev2 = 0.5 * (d1 * d1 + strains[e, 2] * strains[e, 2])
        if sign_pos[e]:
            trp2 = tr * tr
            trm2 = 0.0
        else:
            trp2 = 0.0
            trm2 = tr * tr
        if split == 0:
            w0[e] = 0.5 * K * tr * tr + mu * dev2
            wu[e] = 0.0
        elif split == 1:
            w0[e] = 0.5 * K * trp2
            wu[e] = 0.5 * K * trm2 + mu * dev2
        elif split == 2:
            w0[e] = 0.5 * K * trp2 + mu * dev2
            wu[e] = 0.5 * K * trm2
        else:
            raise ValueError(f"bad split code {split}")
    return w0_out, wu_out
