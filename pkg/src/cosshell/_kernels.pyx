# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled nodal shell kernel: energy density and rotated resultants."""

import numpy as np

cimport cython


cdef inline void mm(const double* A, const double* B, double* C) noexcept nogil:
    cdef int i, j
    for i in range(3):
        for j in range(3):
            C[3 * i + j] = A[3 * i] * B[j] + A[3 * i + 1] * B[3 + j] + A[3 * i + 2] * B[6 + j]


cdef inline double ddot(const double* A, const double* B) noexcept nogil:
    cdef int i
    cdef double s = 0.0
    for i in range(9):
        s += A[i] * B[i]
    return s


cdef inline double ddot_t(const double* A, const double* B) noexcept nogil:
    # A : B^T
    cdef int i, j
    cdef double s = 0.0
    for i in range(3):
        for j in range(3):
            s += A[3 * i + j] * B[3 * j + i]
    return s


cdef inline double tr(const double* A) noexcept nogil:
    return A[0] + A[4] + A[8]


cdef inline void tvec(const double* A, const double* n, double* v) noexcept nogil:
    # v = A^T n
    cdef int j
    for j in range(3):
        v[j] = A[j] * n[0] + A[3 + j] * n[1] + A[6 + j] * n[2]


cdef inline void matvec(const double* A, const double* x, double* v) noexcept nogil:
    cdef int i
    for i in range(3):
        v[i] = A[3 * i] * x[0] + A[3 * i + 1] * x[1] + A[3 * i + 2] * x[2]


cdef inline double wmixt(const double* X, const double* Y, double mu, double muc, double lm) noexcept nogil:
    return 0.5 * (mu + muc) * ddot(X, Y) + 0.5 * (mu - muc) * ddot_t(X, Y) + lm * tr(X) * tr(Y)


cdef inline double wcurv(const double* X, double mu, double L2, double b1, double b2, double b3) noexcept nogil:
    cdef double xx = ddot(X, X)
    cdef double xt = ddot_t(X, X)
    cdef double t = tr(X)
    cdef double s2 = 0.5 * (xx + xt)
    cdef double k2 = 0.5 * (xx - xt)
    return mu * L2 * (b1 * (s2 - t * t / 3.0) + b2 * k2 + b3 * t * t)


cdef inline void apply_iso(const double* T, const double* a, double cs, double ck, double ct, double* out) noexcept nogil:
    # cs sym T + ck skew T + ct tr(T) a
    cdef int i, j
    cdef double t = tr(T)
    for i in range(3):
        for j in range(3):
            out[3 * i + j] = 0.5 * (cs + ck) * T[3 * i + j] + 0.5 * (cs - ck) * T[3 * j + i] + ct * t * a[3 * i + j]


cdef void node(const double* E, const double* K, const double* n, const double* b, const double* c,
               const double* bs, double Kg, double H, const double* prm, double k,
               double* w, double* P, double* R) noexcept nogil:
    cdef double mu = prm[0], lam = prm[1], muc = prm[2], L = prm[3]
    cdef double b1 = prm[4], b2 = prm[5], b3 = prm[6], h = prm[7]
    cdef double lm = lam * mu / (lam + 2.0 * mu)
    cdef double L2 = L * L
    cdef double h3 = h * h * h / 12.0
    cdef double h1 = h - Kg * h3
    cdef double h2 = h - 2.0 * Kg * h3
    cdef double Hh = 2.0 * H * h3
    cdef double gc = mu * L2 * (b1 + b2)
    cdef double a[9]
    cdef double aE[9]
    cdef double Eb[9]
    cdef double Y[9]
    cdef double cK[9]
    cdef double Z[9]
    cdef double aK[9]
    cdef double Kb[9]
    cdef double aKb[9]
    cdef double tmp[9]
    cdef double tmp2[9]
    cdef double CY[9]
    cdef double CE[9]
    cdef double e[3]
    cdef double eb[3]
    cdef double f[3]
    cdef double be[3]
    cdef double bf[3]
    cdef int i, j
    for i in range(3):
        for j in range(3):
            a[3 * i + j] = (1.0 if i == j else 0.0) - n[i] * n[j]
    mm(a, E, aE)
    mm(E, b, Eb)
    mm(c, K, cK)
    mm(a, Eb, tmp)
    for i in range(9):
        Y[i] = tmp[i] + cK[i]
    mm(cK, bs, Z)
    mm(a, K, aK)
    mm(K, b, Kb)
    mm(a, Kb, aKb)
    tvec(E, n, e)
    tvec(Eb, n, eb)
    tvec(K, n, f)

    w[0] = (h1 * (wmixt(aE, aE, mu, muc, lm) + k * (e[0] * e[0] + e[1] * e[1] + e[2] * e[2])
                  + wcurv(K, mu, L2, b1, b2, b3))
            + h3 * (wmixt(Y, Y, mu, muc, lm) + k * (eb[0] * eb[0] + eb[1] * eb[1] + eb[2] * eb[2])
                    - 2.0 * wmixt(aE, Z, mu, muc, lm) + wcurv(Kb, mu, L2, b1, b2, b3)))

    # rotated surface stress
    apply_iso(Y, a, 2.0 * mu, 2.0 * muc, 2.0 * lm, CY)
    apply_iso(aE, a, 2.0 * mu, 2.0 * muc, 2.0 * lm, CE)
    mm(CY, b, tmp)
    apply_iso(Z, a, 2.0 * mu, 2.0 * muc, 2.0 * lm, tmp2)
    matvec(b, e, be)
    for i in range(3):
        for j in range(3):
            P[3 * i + j] = h1 * CE[3 * i + j] + h3 * tmp[3 * i + j] - h3 * tmp2[3 * i + j] \
                + n[i] * 2.0 * k * (h2 * e[j] + Hh * be[j])

    # rotated couple stress
    cdef double g = 2.0 * mu * L2
    apply_iso(aK, a, g * b1, g * b2, g * (b3 - b1 / 3.0), R)
    for i in range(9):
        R[i] *= h1
    mm(c, CY, tmp)
    for i in range(9):
        R[i] -= h3 * tmp[i]
    mm(c, CE, tmp)
    mm(tmp, bs, tmp2)
    for i in range(9):
        R[i] += h3 * tmp2[i]
    apply_iso(aKb, a, g * b1, g * b2, g * (b3 - b1 / 3.0), tmp)
    mm(tmp, b, tmp2)
    matvec(b, f, bf)
    for i in range(3):
        for j in range(3):
            R[3 * i + j] += h3 * tmp2[3 * i + j] + n[i] * gc * (h2 * f[j] + Hh * bf[j])


def shell_kernel_raw(const double[:, :, ::1] E, const double[:, :, ::1] K, const double[:, ::1] n0,
                     const double[:, :, ::1] b, const double[:, :, ::1] c, const double[:, :, ::1] bs,
                     const double[::1] Kg, const double[::1] H, const double[::1] prm, double k,
                     double[::1] w, double[:, :, ::1] P, double[:, :, ::1] R):
    """Evaluate the nodal kernel in place; releases the GIL."""
    cdef Py_ssize_t i, n = E.shape[0]
    with nogil:
        for i in range(n):
            node(&E[i, 0, 0], &K[i, 0, 0], &n0[i, 0], &b[i, 0, 0], &c[i, 0, 0], &bs[i, 0, 0],
                 Kg[i], H[i], &prm[0], k, &w[i], &P[i, 0, 0], &R[i, 0, 0])


def shell_kernel(E, K, geo, mat, variant="harmonic"):
    """Energy density and rotated resultants at a batch of nodes (compiled)."""
    E = np.ascontiguousarray(E, dtype=np.float64)
    K = np.ascontiguousarray(K, dtype=np.float64)
    n = E.shape[0]

    def prep(x, shape):
        return np.ascontiguousarray(np.broadcast_to(x, shape), dtype=np.float64)

    prm = np.array([mat.mu, mat.lam, mat.mu_c, mat.L_c, mat.b1, mat.b2, mat.b3, mat.h], dtype=np.float64)
    w = np.empty(n)
    P = np.empty((n, 3, 3))
    R = np.empty((n, 3, 3))
    shell_kernel_raw(E, K, prep(geo.n0, (n, 3)), prep(geo.b, (n, 3, 3)), prep(geo.c, (n, 3, 3)),
                     prep(geo.bstar, (n, 3, 3)), prep(geo.K, (n,)), prep(geo.H, (n,)), prm,
                     mat.shear_coefficient(variant), w, P, R)
    return w, P, R
