# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled cyclic Jacobi eigensolver for complex Hermitian matrices."""

import numpy as np

cimport numpy as cnp
from libc.math cimport hypot, sqrt

cnp.import_array()


def jacobi_eigh(object a_in, double tol=1e-13, int max_sweeps=60):
    """Diagonalize a Hermitian matrix by cyclic complex Jacobi rotations.

    Returns (eigenvalues, eigenvectors) unsorted; eigenvectors are the
    columns of a unitary matrix U with a = U diag(w) U^H.
    """
    a_arr = np.array(a_in, dtype=np.complex128, copy=True, order="C")
    cdef int n = a_arr.shape[0]
    u_arr = np.eye(n, dtype=np.complex128)
    cdef double complex[:, ::1] a = a_arr
    cdef double complex[:, ::1] u = u_arr
    cdef double norm = max(float(np.linalg.norm(a_arr)), 1e-300)
    cdef int sweep, p, q, i
    cdef double r, d, big, t, c, off2
    cdef double complex beta, s, cs, xp, xq

    for sweep in range(max_sweeps):
        off2 = 0.0
        for p in range(n):
            for q in range(n):
                if p != q:
                    off2 += (a[p, q].real * a[p, q].real + a[p, q].imag * a[p, q].imag)
        if sqrt(off2) <= tol * norm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                beta = a[p, q]
                r = hypot(beta.real, beta.imag)
                if r <= 1e-300:
                    continue
                d = a[p, p].real - a[q, q].real
                big = hypot(d, 2.0 * r)
                if d >= 0:
                    t = -2.0 * r / (d + big)
                else:
                    t = 2.0 * r / (big - d)
                c = 1.0 / sqrt(1.0 + t * t)
                s = (beta / r) * (t * c)
                cs = s.conjugate()
                for i in range(n):
                    xp = a[i, p]
                    xq = a[i, q]
                    a[i, p] = c * xp - cs * xq
                    a[i, q] = s * xp + c * xq
                for i in range(n):
                    xp = a[p, i]
                    xq = a[q, i]
                    a[p, i] = c * xp - s * xq
                    a[q, i] = cs * xp + c * xq
                for i in range(n):
                    xp = u[i, p]
                    xq = u[i, q]
                    u[i, p] = c * xp - cs * xq
                    u[i, q] = s * xp + c * xq
    return np.diag(a_arr).real.copy(), u_arr
