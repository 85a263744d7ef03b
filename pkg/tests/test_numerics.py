import numpy as np
import pytest

from irssec import numerics as nm
from irssec.numerics import _jacobi_py


def random_hermitian(n, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (x + x.conj().T) / 2


class TestHermitianEig:
    def test_identity(self):
        e = nm.hermitian_eig(np.eye(2))
        assert np.allclose(e.values, [1.0, 1.0])

    def test_2x2_hand_oracle(self):
        # char poly of [[2, i], [-i, 2]]: (2-l)^2 - 1 = 0 -> l = 3, 1
        a = np.array([[2.0, 1j], [-1j, 2.0]])
        e = nm.hermitian_eig(a)
        assert np.allclose(e.values, [3.0, 1.0], atol=1e-12)

    def test_construct_then_decompose(self):
        # fixed unitary from QR of a fixed complex matrix
        rng = np.random.default_rng(7)
        x = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        u, _ = np.linalg.qr(x)
        lam = np.diag([5.0, 2.0, 0.0])
        a = u @ lam @ u.conj().T
        e = nm.hermitian_eig(a)
        assert np.allclose(e.values, [5.0, 2.0, 0.0], atol=1e-9)

    @pytest.mark.parametrize("n", [2, 5, 16, 40])
    def test_reconstruction_and_orthonormality(self, n):
        a = random_hermitian(n, n)
        e = nm.hermitian_eig(a)
        rec = e.vectors @ np.diag(e.values) @ e.vectors.conj().T
        assert np.linalg.norm(rec - a) <= 1e-9 * max(1.0, np.linalg.norm(a))
        assert np.linalg.norm(e.vectors.conj().T @ e.vectors - np.eye(n)) <= 1e-10 * n
        # eigenpair residuals
        for k in range(n):
            res = a @ e.vectors[:, k] - e.values[k] * e.vectors[:, k]
            assert np.linalg.norm(res) <= 1e-9 * max(1.0, np.linalg.norm(a))

    def test_eigenvalue_sum_is_trace(self):
        for seed in range(5):
            a = random_hermitian(8, seed)
            e = nm.hermitian_eig(a)
            assert abs(np.sum(e.values) - np.trace(a).real) <= 1e-9 * max(1.0, abs(np.trace(a)))

    def test_psd_min_eigenvalue(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((6, 4)) + 1j * rng.standard_normal((6, 4))
        a = x @ x.conj().T
        e = nm.hermitian_eig(a)
        assert e.values[-1] >= -1e-9 * np.linalg.norm(a)

    def test_non_hermitian_rejected(self):
        with pytest.raises(nm.RejectedInputError):
            nm.hermitian_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_descending_order(self):
        e = nm.hermitian_eig(random_hermitian(10, 11))
        assert np.all(np.diff(e.values) <= 0)

    def test_backends_agree(self):
        a = random_hermitian(12, 5)
        w_py, _ = _jacobi_py.jacobi_eigh(a)
        e = nm.hermitian_eig(a)
        assert np.allclose(np.sort(w_py)[::-1], e.values, atol=1e-10)


class TestTraceProduct:
    def test_identity(self):
        assert nm.trace_product(np.eye(3), np.eye(3)) == pytest.approx(3.0)

    def test_zero(self):
        assert nm.trace_product(random_hermitian(3, 0), np.zeros((3, 3))) == 0.0

    def test_quadratic_form(self):
        rng = np.random.default_rng(2)
        w = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        d = rng.standard_normal((2, 4)) + 1j * rng.standard_normal((2, 4))
        lhs = nm.trace_product(np.outer(w, w.conj()), d.conj().T @ d)
        rhs = np.linalg.norm(d @ w) ** 2
        assert abs(lhs - rhs) <= 1e-12 * abs(rhs)

    def test_hermitian_inputs_give_real_trace(self):
        a = random_hermitian(5, 1)
        b = random_hermitian(5, 2)
        val = nm.trace_product(a, b)
        assert abs(val.imag) <= 1e-12 * max(1.0, abs(val))

    def test_conjugate_symmetry(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            a = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
            b = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
            lhs = nm.trace_product(a, b)
            rhs = np.conj(nm.trace_product(b.conj().T, a.conj().T))
            assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))

    def test_dimension_mismatch(self):
        with pytest.raises(nm.RejectedInputError):
            nm.trace_product(np.eye(3), np.eye(4))


class TestRngStream:
    def test_determinism(self):
        s = nm.RngStream(seed=123, stream_id=4)
        v1 = nm.sample_complex_gaussian(s, 4)
        v2 = nm.sample_complex_gaussian(s, 4)
        assert np.array_equal(v1, v2)

    def test_distinct_streams_differ(self):
        a = nm.sample_complex_gaussian(nm.RngStream(1, 0), 8)
        b = nm.sample_complex_gaussian(nm.RngStream(1, 1), 8)
        assert not np.allclose(a, b)

    def test_mean_law_of_large_numbers(self):
        v = nm.sample_complex_gaussian(nm.RngStream(7, 0), 10_000)
        assert abs(np.mean(v)) <= 0.05

    def test_unit_variance(self):
        v = nm.sample_complex_gaussian(nm.RngStream(8, 0), 10_000)
        assert 0.9 <= np.mean(np.abs(v) ** 2) <= 1.1

    def test_rejects_nonpositive_n(self):
        with pytest.raises(nm.RejectedInputError):
            nm.sample_complex_gaussian(nm.RngStream(1, 0), 0)
