"""Pure-Python cyclic Jacobi eigensolver for complex Hermitian matrices.

Fallback backend used when the compiled extension is unavailable. Same
algorithm and rotation formulas as the Cython kernel, so both backends
agree to rounding error.
"""

import numpy as np


def jacobi_eigh(a, tol=1e-13, max_sweeps=60):
    """Diagonalize a Hermitian matrix by cyclic complex Jacobi rotations.

    Returns (eigenvalues, eigenvectors) unsorted; eigenvectors are the
    columns of a unitary matrix U with a = U diag(w) U^H.
    """
    a = np.array(a, dtype=np.complex128, copy=True)
    n = a.shape[0]
    u = np.eye(n, dtype=np.complex128)
    norm = max(np.linalg.norm(a), 1e-300)
    for _ in range(max_sweeps):
        off = a - np.diag(np.diag(a))
        if np.linalg.norm(off) <= tol * norm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                beta = a[p, q]
                r = abs(beta)
                if r <= 1e-300:
                    continue
                d = a[p, p].real - a[q, q].real
                big = np.hypot(d, 2.0 * r)
                t = -2.0 * r / (d + big) if d >= 0 else 2.0 * r / (big - d)
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = (beta / r) * t * c
                colp = a[:, p].copy()
                colq = a[:, q].copy()
                a[:, p] = c * colp - np.conj(s) * colq
                a[:, q] = s * colp + c * colq
                rowp = a[p, :].copy()
                rowq = a[q, :].copy()
                a[p, :] = c * rowp - s * rowq
                a[q, :] = np.conj(s) * rowp + c * rowq
                up = u[:, p].copy()
                uq = u[:, q].copy()
                u[:, p] = c * up - np.conj(s) * uq
                u[:, q] = s * up + c * uq
    return np.diag(a).real.copy(), u
