import math

import numpy as np
import pytest

from irssec import channel as chn
from irssec import numerics as nm
from irssec import rates as rt


def small_scenario(i=2, k=2, n=10, m=4, seed=11, rician=1.0):
    """Generic (non-degenerate) channels: finite Rician factors everywhere."""
    cfg = chn.default_scenario(
        i,
        n,
        k=k,
        m=m,
        rician_bi=rician,
        rician_iu=rician,
        rician_ie=rician,
        seed=seed,
    )
    return cfg, chn.generate_channels(cfg, nm.RngStream(seed, 0))


def random_design(cfg, seed=3):
    rng = np.random.default_rng(seed)
    om = rng.standard_normal((cfg.i, cfg.m)) + 1j * rng.standard_normal((cfg.i, cfg.m))
    zz = rng.standard_normal((cfg.i, cfg.m)) + 1j * rng.standard_normal((cfg.i, cfg.m))
    scale = math.sqrt(cfg.p_max) / (2.0 * max(np.linalg.norm(om, axis=1).max(), 1e-12))
    zscale = math.sqrt(cfg.p_max) / (2.0 * max(np.linalg.norm(zz, axis=1).max(), 1e-12))
    return rt.TransmitDesign(omega=scale * om, z=zscale * zz)


def random_reflect(cfg, seed=4):
    rng = np.random.default_rng(seed)
    mu = np.exp(1j * rng.uniform(0, 2 * math.pi, size=(cfg.k, cfg.n)))
    alpha = np.zeros((cfg.i, cfg.k))
    for i in range(cfg.i):
        alpha[i, rng.integers(cfg.k)] = 1.0
    return rt.ReflectConfig(mu=mu, alpha=alpha)


def unclamped_secrecy(i, ec, td, n0):
    return math.log2(1 + rt.sinr_user(i, ec, td, n0)) - math.log2(1 + rt.sinr_eve(i, ec, td, n0))


class TestEffectiveChannels:
    def test_no_reflection(self):
        cfg, cs = small_scenario()
        zeroed = chn.ChannelSet(
            g_bi=cs.g_bi,
            h_u=cs.h_u,
            h_e=cs.h_e,
            g_iu=tuple(tuple(np.zeros_like(g) for g in row) for row in cs.g_iu),
            g_ie=tuple(np.zeros_like(g) for g in cs.g_ie),
        )
        rc = random_reflect(cfg)
        ec = rt.effective_channels(zeroed, rc)
        for i in range(cfg.i):
            assert np.allclose(ec.d_hat[i, i], cs.h_u[i].conj())

    def test_zero_phase_single_surface(self):
        cfg, cs = small_scenario(i=1, k=1)
        rc = rt.ReflectConfig(mu=np.ones((1, cfg.n)), alpha=np.ones((1, 1)))
        ec = rt.effective_channels(cs, rc)
        expected = cs.g_iu[0][0].conj() @ cs.g_bi[0] + cs.h_u[0].conj()
        assert np.allclose(ec.d_hat[0, 0], expected, rtol=1e-12)

    def test_lift_matches_effective_channel_power(self):
        cfg, cs = small_scenario()
        td = random_design(cfg)
        rc = random_reflect(cfg)
        ec = rt.effective_channels(cs, rc)
        lift = rt.build_phase_lift(cs, td, rc.alpha)
        v = rc.mu.reshape(-1)
        for i in range(cfg.i):
            direct = abs(ec.d_hat[i, i] @ td.omega[i]) ** 2
            lifted = abs(v @ lift.a_sig[i] + lift.b_sig[i]) ** 2
            assert lifted == pytest.approx(direct, rel=1e-9)


class TestSinr:
    def test_matched_single_user(self):
        p, n0 = 4.0, 0.5
        ec = rt.EffectiveChannels(
            d_hat=np.array([[[1.0, 0.0]]], dtype=complex),
            d_e=np.zeros((1, 2), dtype=complex),
        )
        td = rt.TransmitDesign(
            omega=np.array([[math.sqrt(p), 0.0]], dtype=complex),
            z=np.zeros((1, 2), dtype=complex),
        )
        assert rt.sinr_user(0, ec, td, n0) == pytest.approx(p / n0)

    def test_zero_beam_gives_zero(self):
        ec = rt.EffectiveChannels(
            d_hat=np.ones((1, 1, 2), dtype=complex), d_e=np.ones((1, 2), dtype=complex)
        )
        td = rt.TransmitDesign(omega=np.zeros((1, 2), dtype=complex), z=np.zeros((1, 2), dtype=complex))
        assert rt.sinr_user(0, ec, td, 1.0) == 0.0
        assert rt.sinr_eve(0, ec, td, 1.0) == 0.0

    def test_two_user_hand_oracle(self):
        # scalar channels: user 0 sees 2 on its own beam, 1 on the other
        d_hat = np.array([[[2.0], [1.0]], [[0.5], [3.0]]], dtype=complex)
        d_e = np.array([[0.5], [0.25]], dtype=complex)
        ec = rt.EffectiveChannels(d_hat=d_hat, d_e=d_e)
        td = rt.TransmitDesign(
            omega=np.array([[1.0], [2.0]], dtype=complex),
            z=np.array([[0.5], [0.0]], dtype=complex),
        )
        n0 = 0.1
        # |2*1|^2 / (|1*2|^2 + |2*0.5|^2 + |1*0|^2 + 0.1)
        assert rt.sinr_user(0, ec, td, n0) == pytest.approx(4.0 / (4.0 + 1.0 + 0.0 + 0.1))
        # eve on user 0: |0.5*1|^2 / (|0.25*2|^2 + |0.5*0.5|^2 + |0.25*0|^2 + 0.1)
        assert rt.sinr_eve(0, ec, td, n0) == pytest.approx(0.25 / (0.25 + 0.0625 + 0.1))

    def test_eve_no_leakage(self):
        cfg, cs = small_scenario()
        muted = chn.ChannelSet(
            g_bi=cs.g_bi,
            h_u=cs.h_u,
            h_e=np.zeros_like(cs.h_e),
            g_iu=cs.g_iu,
            g_ie=tuple(np.zeros_like(g) for g in cs.g_ie),
        )
        ec = rt.effective_channels(muted, random_reflect(cfg))
        td = random_design(cfg)
        assert rt.sinr_eve(0, ec, td, cfg.n0) == 0.0

    def test_symmetric_channels(self):
        cfg, cs = small_scenario(i=1, k=1)
        rc = random_reflect(cfg)
        symmetric = chn.ChannelSet(
            g_bi=cs.g_bi,
            h_u=cs.h_u,
            h_e=cs.h_u[0],
            g_iu=cs.g_iu,
            g_ie=(cs.g_iu[0][0],),
        )
        ec = rt.effective_channels(symmetric, rc)
        td = random_design(cfg)
        assert rt.sinr_eve(0, ec, td, cfg.n0) == pytest.approx(
            rt.sinr_user(0, ec, td, cfg.n0), rel=1e-12
        )


class TestSecrecyRate:
    def setup_method(self):
        self.ec = rt.EffectiveChannels(
            d_hat=np.array([[[1.0]]], dtype=complex), d_e=np.array([[1.0]], dtype=complex)
        )

    def test_equal_sinrs_zero(self):
        td = rt.TransmitDesign(omega=np.array([[1.0]], dtype=complex), z=np.zeros((1, 1), complex))
        assert rt.secrecy_rate(0, self.ec, td, 1.0) == 0.0

    def test_log_ratio(self):
        # SINR_u = 3, SINR_e = 1 -> log2(4) - log2(2) = 1
        ec = rt.EffectiveChannels(
            d_hat=np.array([[[math.sqrt(3.0)]]], dtype=complex),
            d_e=np.array([[1.0]], dtype=complex),
        )
        td = rt.TransmitDesign(omega=np.array([[1.0]], dtype=complex), z=np.zeros((1, 1), complex))
        assert rt.secrecy_rate(0, ec, td, 1.0) == pytest.approx(1.0)

    def test_clamped_at_zero(self):
        ec = rt.EffectiveChannels(
            d_hat=np.array([[[0.5]]], dtype=complex), d_e=np.array([[2.0]], dtype=complex)
        )
        td = rt.TransmitDesign(omega=np.array([[1.0]], dtype=complex), z=np.zeros((1, 1), complex))
        assert rt.secrecy_rate(0, ec, td, 1.0) == 0.0


class TestFTermsWz:
    def setup_method(self):
        self.cfg, self.cs = small_scenario()
        self.td = random_design(self.cfg)
        self.rc = random_reflect(self.cfg)
        self.ec = rt.effective_channels(self.cs, self.rc)

    def test_zero_signal(self):
        zero = [np.zeros((self.cfg.m, self.cfg.m), complex)] * self.cfg.i
        ft = rt.f_terms_wz(0, self.ec, zero, zero, self.cfg.n0)
        expected = math.log2(self.cfg.n0)
        for val in (ft.f1, ft.f2, ft.f3, ft.f4):
            assert val == pytest.approx(expected, rel=1e-12)

    def test_rank1_identity(self):
        w, z = self.td.lifted()
        for i in range(self.cfg.i):
            ft = rt.f_terms_wz(i, self.ec, w, z, self.cfg.n0)
            direct = unclamped_secrecy(i, self.ec, self.td, self.cfg.n0)
            assert ft.unclamped() == pytest.approx(direct, abs=1e-9)

    def test_non_psd_rejected(self):
        bad = [np.diag([1.0, -1.0, 0.0, 0.0]).astype(complex)] * self.cfg.i
        with pytest.raises(nm.RejectedInputError):
            rt.f_terms_wz(0, self.ec, bad, bad, self.cfg.n0)

    def test_dominance_relations(self):
        w, z = self.td.lifted()
        ft = rt.f_terms_wz(0, self.ec, w, z, self.cfg.n0)
        assert ft.f1 >= ft.f3 and ft.f4 >= ft.f2

    def test_gradients_finite_difference(self):
        rng = np.random.default_rng(17)
        w, z = self.td.lifted()
        w = [wi + 1e-3 * self.cfg.p_max * np.eye(self.cfg.m) for wi in w]
        z = [zi + 1e-3 * self.cfg.p_max * np.eye(self.cfg.m) for zi in z]
        ft = rt.f_terms_wz(0, self.ec, w, z, self.cfg.n0)
        scale = self.cfg.p_max
        for j in range(self.cfg.i):
            h = rng.standard_normal((self.cfg.m, self.cfg.m)) + 1j * rng.standard_normal(
                (self.cfg.m, self.cfg.m)
            )
            h = (h + h.conj().T) / 2
            step = 1e-6 * scale
            for key, grad_map, term in ((("w", j), ft.grad3, "f3"), (("z", j), ft.grad3, "f3"),
                                        (("w", j), ft.grad4, "f4"), (("z", j), ft.grad4, "f4")):
                kind = key[0]

                def value(eps):
                    wq = [wi.copy() for wi in w]
                    zq = [zi.copy() for zi in z]
                    (wq if kind == "w" else zq)[j] += eps * h
                    ftq = rt.f_terms_wz(0, self.ec, wq, zq, self.cfg.n0, check=False)
                    return getattr(ftq, term)

                fd = (value(step) - value(-step)) / (2 * step)
                analytic = float(np.trace(grad_map[key] @ h).real)
                ref = max(abs(fd), abs(analytic), 1e-12)
                assert abs(fd - analytic) <= 1e-4 * ref


class TestScaBoundWz:
    def setup_method(self):
        self.cfg, self.cs = small_scenario()
        self.td = random_design(self.cfg)
        self.ec = rt.effective_channels(self.cs, random_reflect(self.cfg))
        self.w, self.z = self.td.lifted()

    def random_psd_sets(self, rng):
        def psd():
            x = rng.standard_normal((self.cfg.m, 2)) + 1j * rng.standard_normal((self.cfg.m, 2))
            mat = x @ x.conj().T
            return mat * (self.cfg.p_max / max(np.trace(mat).real, 1e-12)) * rng.uniform(0, 1)

        return [psd() for _ in range(self.cfg.i)], [psd() for _ in range(self.cfg.i)]

    def test_tangency(self):
        ft = rt.f_terms_wz(0, self.ec, self.w, self.z, self.cfg.n0)
        bound = rt.sca_bound_wz(0, self.ec, self.w, self.z, self.w, self.z, self.cfg.n0)
        assert bound == pytest.approx(ft.f3 + ft.f4, abs=1e-12)

    def test_dominance_sampling(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            wq, zq = self.random_psd_sets(rng)
            ftq = rt.f_terms_wz(0, self.ec, wq, zq, self.cfg.n0, check=False)
            bound = rt.sca_bound_wz(0, self.ec, self.w, self.z, wq, zq, self.cfg.n0)
            assert bound >= ftq.f3 + ftq.f4 - 1e-9

    def test_linearity_in_query(self):
        rng = np.random.default_rng(29)
        wa, za = self.random_psd_sets(rng)
        wb, zb = self.random_psd_sets(rng)
        mid_w = [(a + b) / 2 for a, b in zip(wa, wb)]
        mid_z = [(a + b) / 2 for a, b in zip(za, zb)]
        f = lambda w, z: rt.sca_bound_wz(0, self.ec, self.w, self.z, w, z, self.cfg.n0)
        second_diff = f(wa, za) + f(wb, zb) - 2 * f(mid_w, mid_z)
        assert abs(second_diff) <= 1e-12 * max(1.0, abs(f(wa, za)))


class TestPhaseLift:
    def setup_method(self):
        self.cfg, self.cs = small_scenario()
        self.td = random_design(self.cfg)
        self.rc = random_reflect(self.cfg)
        self.lift = rt.build_phase_lift(self.cs, self.td, self.rc.alpha)

    def test_zero_corner_structure(self):
        cfg, cs = small_scenario(i=1, k=1, n=5)
        td = random_design(cfg)
        lift = rt.build_phase_lift(cs, td, np.ones((1, 1)))
        r = rt.lift_matrix(lift.a_sig[0], lift.b_sig[0])
        assert r.shape == (6, 6)
        assert r[-1, -1] == 0.0

    def test_zero_beam_zero_lift(self):
        td0 = rt.TransmitDesign(
            omega=np.zeros_like(self.td.omega), z=np.zeros_like(self.td.z)
        )
        lift = rt.build_phase_lift(self.cs, td0, self.rc.alpha)
        assert np.allclose(lift.a_sig[0], 0) and lift.b_sig[0] == 0

    def test_lift_consistency(self):
        vt = self.rc.vtilde()
        v_mat = np.outer(vt, vt.conj())
        ec = rt.effective_channels(self.cs, self.rc)
        v = self.rc.mu.reshape(-1)
        for i in range(self.cfg.i):
            r = rt.lift_matrix(self.lift.a_sig[i], self.lift.b_sig[i])
            lifted = float(np.trace(r @ v_mat).real) + abs(self.lift.b_sig[i]) ** 2
            direct = abs(ec.d_hat[i, i] @ self.td.omega[i]) ** 2
            assert lifted == pytest.approx(direct, rel=1e-9)
            # PSD completion agrees whenever the corner of V is one
            r_psd = rt.lift_matrix_psd(self.lift.a_sig[i], self.lift.b_sig[i])
            assert float(np.trace(r_psd @ v_mat).real) == pytest.approx(direct, rel=1e-9)

    def test_global_phase_invariance(self):
        vt = self.rc.vtilde()
        phase = np.exp(1j * 0.83)
        a, b = self.lift.a_sig[0], self.lift.b_sig[0]
        v_mat1 = np.outer(vt, vt.conj())
        v_mat2 = np.outer(phase * vt, (phase * vt).conj())
        r = rt.lift_matrix(a, b)
        assert float(np.trace(r @ v_mat1).real) == pytest.approx(
            float(np.trace(r @ v_mat2).real), rel=1e-12
        )


class TestFTermsPhase:
    def setup_method(self):
        self.cfg, self.cs = small_scenario()
        self.td = random_design(self.cfg)
        self.rc = random_reflect(self.cfg)
        self.lift = rt.build_phase_lift(self.cs, self.td, self.rc.alpha)
        vt = self.rc.vtilde()
        self.v_mat = np.outer(vt, vt.conj())

    def test_rank1_identity(self):
        ec = rt.effective_channels(self.cs, self.rc)
        for i in range(self.cfg.i):
            ft = rt.f_terms_phase(i, self.lift, self.v_mat, self.cfg.n0)
            direct = unclamped_secrecy(i, ec, self.td, self.cfg.n0)
            assert ft.unclamped() == pytest.approx(direct, abs=1e-9)

    def test_zero_lift(self):
        dim = self.lift.dim
        ft = rt.f_terms_phase(0, self.lift, np.zeros((dim, dim)), self.cfg.n0)
        i = 0
        consts3 = sum(
            abs(self.lift.b_int[i][j]) ** 2 for j in range(self.cfg.i) if j != i
        ) + sum(abs(self.lift.c_noise[i][j]) ** 2 for j in range(self.cfg.i))
        assert ft.f3 == pytest.approx(math.log2(self.cfg.n0 + consts3), rel=1e-12)

    def test_gradient_finite_difference(self):
        rng = np.random.default_rng(31)
        dim = self.lift.dim
        h = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        h = (h + h.conj().T) / 2
        base = self.v_mat + 0.1 * np.eye(dim)
        ft = rt.f_terms_phase(0, self.lift, base, self.cfg.n0)
        step = 1e-6
        for term, grad in (("f3", ft.grad3["v"]), ("f4", ft.grad4["v"])):
            f = lambda eps: getattr(
                rt.f_terms_phase(0, self.lift, base + eps * h, self.cfg.n0, check=False), term
            )
            fd = (f(step) - f(-step)) / (2 * step)
            analytic = float(np.trace(grad @ h).real)
            assert abs(fd - analytic) <= 1e-4 * max(abs(fd), abs(analytic), 1e-12)

    def test_tangency_and_dominance(self):
        rng = np.random.default_rng(37)
        ft = rt.f_terms_phase(0, self.lift, self.v_mat, self.cfg.n0)
        assert rt.sca_bound_phase(0, self.lift, self.v_mat, self.v_mat, self.cfg.n0) == pytest.approx(
            ft.f3 + ft.f4, abs=1e-12
        )
        dim = self.lift.dim
        for _ in range(100):
            x = rng.standard_normal((dim, 3)) + 1j * rng.standard_normal((dim, 3))
            vq = x @ x.conj().T
            # pin the corner at one (the lifted feasible set) so every
            # zero-corner coefficient keeps its log argument positive
            vq /= vq[-1, -1].real
            ftq = rt.f_terms_phase(0, self.lift, vq, self.cfg.n0, check=False)
            bound = rt.sca_bound_phase(0, self.lift, self.v_mat, vq, self.cfg.n0)
            assert bound >= ftq.f3 + ftq.f4 - 1e-9


class TestFTermsAlpha:
    def setup_method(self):
        self.cfg, self.cs = small_scenario()
        self.td = random_design(self.cfg)
        self.rc = random_reflect(self.cfg)
        self.tables = rt.build_alpha_tables(self.cs, self.td, self.rc.mu)

    def test_binary_alpha_matches_wz_form(self):
        ec = rt.effective_channels(self.cs, self.rc)
        w, z = self.td.lifted()
        for i in range(self.cfg.i):
            fa = rt.f_terms_alpha(i, self.tables, self.rc.alpha, self.cfg.n0)
            fw = rt.f_terms_wz(i, ec, w, z, self.cfg.n0, check=False)
            for attr in ("f1", "f2", "f3", "f4"):
                assert getattr(fa, attr) == pytest.approx(getattr(fw, attr), abs=1e-9)

    def test_single_surface_uniform_is_binary(self):
        cfg, cs = small_scenario(i=2, k=1)
        td = random_design(cfg)
        mu = np.exp(1j * np.linspace(0, 1, cfg.n))[None, :]
        tables = rt.build_alpha_tables(cs, td, mu)
        a = np.ones((2, 1))
        fa = rt.f_terms_alpha(0, tables, a, cfg.n0)
        fb = rt.f_terms_alpha(0, tables, a.copy(), cfg.n0)
        assert fa.f1 == fb.f1

    def test_row_outside_simplex_rejected(self):
        bad = self.rc.alpha.copy()
        bad[0, 0] += 0.5
        with pytest.raises(nm.RejectedInputError):
            rt.f_terms_alpha(0, self.tables, bad, self.cfg.n0)

    def test_gradient_finite_difference(self):
        rng = np.random.default_rng(41)
        base = np.full((self.cfg.i, self.cfg.k), 1.0 / self.cfg.k)
        # direction tangent to the simplex (rows sum to zero)
        h = rng.standard_normal(base.shape)
        h -= h.mean(axis=1, keepdims=True)
        ft = rt.f_terms_alpha(0, self.tables, base, self.cfg.n0)
        step = 1e-7
        for term, grad in (("f3", ft.grad3["alpha"]), ("f4", ft.grad4["alpha"])):
            f = lambda eps: getattr(
                rt.f_terms_alpha(0, self.tables, base + eps * h, self.cfg.n0, check=False), term
            )
            fd = (f(step) - f(-step)) / (2 * step)
            analytic = float(np.sum(grad * h))
            assert abs(fd - analytic) <= 1e-4 * max(abs(fd), abs(analytic), 1e-12)

    def test_tangency_and_dominance(self):
        rng = np.random.default_rng(43)
        point = np.full((self.cfg.i, self.cfg.k), 1.0 / self.cfg.k)
        ft = rt.f_terms_alpha(0, self.tables, point, self.cfg.n0)
        assert rt.sca_bound_alpha(0, self.tables, point, point, self.cfg.n0) == pytest.approx(
            ft.f3 + ft.f4, abs=1e-12
        )
        for _ in range(100):
            q = rng.dirichlet(np.ones(self.cfg.k), size=self.cfg.i)
            ftq = rt.f_terms_alpha(0, self.tables, q, self.cfg.n0, check=False)
            bound = rt.sca_bound_alpha(0, self.tables, point, q, self.cfg.n0)
            assert bound >= ftq.f3 + ftq.f4 - 1e-9
