# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-node integration kernel. Same contract as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport pow, sqrt, isfinite

cnp.import_array()

DEF EULER = 0


cdef struct Mat:
    double E, nu, A, n, B, m, qd, omega_crit
    int fully


cdef inline double fpow(double x, double e) noexcept nogil:
    """``x**e``; small integer exponents by repeated multiplication."""
    cdef int k, i
    cdef double r
    if e == <int>e and -8 <= e <= 8:
        k = <int>e
        r = 1.0
        for i in range(k if k > 0 else -k):
            r *= x
        return r if k >= 0 else 1.0 / r
    return pow(x, e)


cdef inline int rates(const Mat* p, double e0, double e1, double e2,
                      double c0, double c1, double c2, double om,
                      double* r) noexcept nogil:
    """Write (dcr11, dcr22, dcr12, domega) into r."""
    cdef double psi = 1.0 - om
    cdef double scale, c, d0, d1, d2, s11, s22, s12, vm2, vm, mean, f
    if p.fully:
        scale = psi
    else:
        scale = 1.0 if om < p.omega_crit else 0.0
    c = p.E / (1.0 - p.nu * p.nu) * scale
    d0 = e0 - c0
    d1 = e1 - c1
    d2 = e2 - c2
    s11 = c * (d0 + p.nu * d1)
    s22 = c * (p.nu * d0 + d1)
    s12 = c * (1.0 - p.nu) * d2
    vm2 = s11 * s11 + s22 * s22 - s11 * s22 + 3.0 * s12 * s12
    vm = sqrt(vm2) if vm2 > 0.0 else 0.0
    mean = (s11 + s22) / 3.0
    if p.A != 0.0:
        f = 1.5 * p.A * fpow(vm, p.n - 1.0) * fpow(psi, -p.n)
        r[0] = f * (s11 - mean)
        r[1] = f * (s22 - mean)
        r[2] = f * s12
    else:
        r[0] = 0.0
        r[1] = 0.0
        r[2] = 0.0
    if p.B != 0.0:
        r[3] = p.B * fpow(vm, p.m) * fpow(psi, -p.qd)
    else:
        r[3] = 0.0
    return 0


cdef inline bint outside(double om, double ceiling, double floor) noexcept nogil:
    return om > ceiling or 1.0 - om < floor


def nodal_rates(mat, eps, epscr, omega):
    cdef Mat p
    p.E, p.nu, p.A, p.n, p.B, p.m, p.qd, p.omega_crit = [float(v) for v in mat[:8]]
    p.fully = 1 if mat[8] else 0
    cdef double[:, ::1] e = np.ascontiguousarray(eps, dtype=np.float64)
    cdef double[:, ::1] c = np.ascontiguousarray(epscr, dtype=np.float64)
    cdef double[::1] w = np.ascontiguousarray(omega, dtype=np.float64)
    cdef Py_ssize_t N = w.shape[0], i
    dcr_arr = np.empty((N, 3))
    dom_arr = np.empty(N)
    cdef double[:, ::1] dcr = dcr_arr
    cdef double[::1] dom = dom_arr
    cdef double r[4]
    with nogil:
        for i in range(N):
            rates(&p, e[i, 0], e[i, 1], e[i, 2], c[i, 0], c[i, 1], c[i, 2], w[i], r)
            dcr[i, 0] = r[0]
            dcr[i, 1] = r[1]
            dcr[i, 2] = r[2]
            dom[i] = r[3]
    return dcr_arr, dom_arr


def integrate_nodes(mat, eps0, eps1, epscr, omega, double dt, int method,
                    double ceiling, double floor):
    cdef Mat p
    p.E, p.nu, p.A, p.n, p.B, p.m, p.qd, p.omega_crit = [float(v) for v in mat[:8]]
    p.fully = 1 if mat[8] else 0
    cdef double[:, ::1] a = np.ascontiguousarray(eps0, dtype=np.float64)
    cdef double[:, ::1] b = np.ascontiguousarray(eps1, dtype=np.float64)
    cdef double[:, ::1] c = np.ascontiguousarray(epscr, dtype=np.float64)
    cdef double[::1] w = np.ascontiguousarray(omega, dtype=np.float64)
    cdef Py_ssize_t N = w.shape[0], i, j
    ec_arr = np.empty((N, 3))
    om_arr = np.empty(N)
    cdef double[:, ::1] ec = ec_arr
    cdef double[::1] om = om_arr
    cdef double k1[4]
    cdef double k2[4]
    cdef double k3[4]
    cdef double k4[4]
    cdef double e[3]
    cdef double y[4]
    cdef double h = 0.5 * dt, sixth = dt / 6.0, wn
    cdef Py_ssize_t bad = -1
    cdef bint flag
    with nogil:
        for i in range(N):
            flag = False
            if outside(w[i], ceiling, floor):
                flag = True
                rates(&p, a[i, 0], a[i, 1], a[i, 2], c[i, 0], c[i, 1], c[i, 2], 0.0, k1)
            else:
                rates(&p, a[i, 0], a[i, 1], a[i, 2], c[i, 0], c[i, 1], c[i, 2], w[i], k1)
            if method == EULER:
                for j in range(3):
                    ec[i, j] = c[i, j] + dt * k1[j]
                wn = w[i] + dt * k1[3]
            else:
                for j in range(3):
                    e[j] = a[i, j] + 0.5 * (b[i, j] - a[i, j])
                    y[j] = c[i, j] + h * k1[j]
                y[3] = w[i] + h * k1[3]
                if outside(y[3], ceiling, floor):
                    flag = True
                    y[3] = 0.0
                rates(&p, e[0], e[1], e[2], y[0], y[1], y[2], y[3], k2)
                for j in range(3):
                    y[j] = c[i, j] + h * k2[j]
                y[3] = w[i] + h * k2[3]
                if outside(y[3], ceiling, floor):
                    flag = True
                    y[3] = 0.0
                rates(&p, e[0], e[1], e[2], y[0], y[1], y[2], y[3], k3)
                for j in range(3):
                    y[j] = c[i, j] + dt * k3[j]
                y[3] = w[i] + dt * k3[3]
                if outside(y[3], ceiling, floor):
                    flag = True
                    y[3] = 0.0
                rates(&p, b[i, 0], b[i, 1], b[i, 2], y[0], y[1], y[2], y[3], k4)
                for j in range(3):
                    ec[i, j] = c[i, j] + sixth * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
                wn = w[i] + sixth * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3])
            if not isfinite(wn) or wn > ceiling:
                flag = True
            for j in range(3):
                if not isfinite(ec[i, j]):
                    flag = True
            om[i] = wn if wn < 1.0 else 1.0
            if flag and bad < 0:
                bad = i
    return ec_arr, om_arr, int(bad)
