"""Dense complex-matrix kernel: Hermitian eigendecomposition, trace inner
products, PSD checks, and seeded complex Gaussian sampling.

The eigensolver has two interchangeable backends: a compiled Cython kernel
(default when built) and a pure-Python fallback. Set ``IRSSEC_PURE_PYTHON=1``
to force the fallback; ``backend()`` reports which one is active.
"""

import os
from dataclasses import dataclass, field

import numpy as np

from . import _jacobi_py

if os.environ.get("IRSSEC_PURE_PYTHON", "") not in ("", "0"):
    _jacobi = _jacobi_py
    _BACKEND = "python"
else:
    try:
        from . import _jacobi_cy as _jacobi

        _BACKEND = "compiled"
    except ImportError:  # extension not built
        _jacobi = _jacobi_py
        _BACKEND = "python"

HERMITIAN_RTOL = 1e-12


class RejectedInputError(ValueError):
    """Input violates an operation precondition."""


def backend():
    """Name of the active eigensolver backend: 'compiled' or 'python'."""
    return _BACKEND


@dataclass(frozen=True)
class EigenPairs:
    """Full Hermitian spectrum, eigenvalues descending, unitary columns."""

    values: np.ndarray
    vectors: np.ndarray


def _as_matrix(a):
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise RejectedInputError(f"expected a square matrix, got shape {a.shape}")
    return a


def hermitian_eig(a):
    """Eigendecomposition of a Hermitian matrix via cyclic complex Jacobi.

    The input must be Hermitian within 1e-12 relative tolerance; it is
    symmetrized before decomposition. Eigenvalues are returned in
    descending order.
    """
    a = _as_matrix(a)
    if a.shape[0] > 512:
        raise RejectedInputError(f"matrix size {a.shape[0]} exceeds the 512 limit")
    scale = max(np.max(np.abs(a)), 1.0)
    if np.max(np.abs(a - a.conj().T)) > HERMITIAN_RTOL * scale:
        raise RejectedInputError("matrix is not Hermitian within tolerance")
    a = (a + a.conj().T) / 2
    w, u = _jacobi.jacobi_eigh(a)
    order = np.argsort(w)[::-1]
    return EigenPairs(values=w[order], vectors=np.ascontiguousarray(u[:, order]))


def trace_product(a, b):
    """Tr(a @ b) without forming the product matrix."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0] or a.shape[0] != b.shape[1]:
        raise RejectedInputError(f"dimension mismatch: {a.shape} x {b.shape}")
    return complex(np.sum(a * b.T))


def min_eigenvalue(a):
    """Smallest eigenvalue of a Hermitian matrix."""
    return float(hermitian_eig(a).values[-1])


def is_psd(a, tol=1e-8):
    """True when the Hermitian matrix has no eigenvalue below -tol*scale."""
    a = _as_matrix(a)
    scale = max(float(np.linalg.norm(a)), 1.0)
    return min_eigenvalue(a) >= -tol * scale


@dataclass(frozen=True)
class RngStream:
    """Deterministic random stream keyed by (seed, stream_id).

    Identical keys reproduce identical sample sequences bit-exactly.
    """

    seed: int
    stream_id: int = 0

    def generator(self):
        return np.random.default_rng([self.seed & 0xFFFFFFFFFFFFFFFF, self.stream_id])

    def substream(self, k):
        return RngStream(self.seed, (self.stream_id << 16) ^ (k + 1))


def sample_complex_gaussian(stream, n):
    """n i.i.d. circularly-symmetric complex normals with unit variance."""
    if n < 1:
        raise RejectedInputError(f"need n >= 1, got {n}")
    g = stream.generator()
    return (g.standard_normal(n) + 1j * g.standard_normal(n)) / np.sqrt(2.0)


def sample_complex_gaussian_matrix(stream, rows, cols):
    """rows x cols matrix of unit circular complex normals."""
    return sample_complex_gaussian(stream, rows * cols).reshape(rows, cols)
