import math

import numpy as np
import pytest

from irssec import channel as ch
from irssec import rates, sub_wz
from irssec.numerics import RejectedInputError, RngStream
from irssec.solver import evaluate_constraints


def make_instance(i=1, n=10, k=1, seed=0, mute_eve=False, **overrides):
    cfg = ch.default_scenario(i, n, k=k, **overrides)
    cs = ch.generate_channels(cfg, RngStream(seed, 0))
    if mute_eve:
        cs = ch.ChannelSet(
            g_bi=cs.g_bi,
            h_u=cs.h_u,
            h_e=np.zeros(cfg.m, dtype=np.complex128),
            g_iu=cs.g_iu,
            g_ie=tuple(np.zeros(cfg.n, dtype=np.complex128) for _ in cs.g_ie),
        )
    rng = np.random.default_rng(seed)
    mu = np.exp(1j * rng.uniform(0, 2 * np.pi, (cfg.k, cfg.n)))
    alpha = np.zeros((cfg.i, cfg.k))
    for ii in range(cfg.i):
        alpha[ii, ii % cfg.k] = 1.0
    ec = rates.effective_channels(cs, rates.ReflectConfig(mu=mu, alpha=alpha))
    return cfg, ec


class TestBuildProblem:
    def test_single_user_single_antenna_shapes(self):
        cfg, ec = make_instance(i=1, n=5, m=1)
        it = sub_wz.init_wz(ec, cfg)
        p = sub_wz.build_problem_2b(ec, it, cfg)
        assert p.psd_blocks == [("W0", 1), ("Z0", 1)]
        assert [name for name, _, _ in p.scalars] == ["x"]

    def test_constraint_counts(self):
        cfg, ec = make_instance(i=2, n=10, k=2, seed=3)
        it = sub_wz.init_wz(ec, cfg)
        p = sub_wz.build_problem_2b(ec, it, cfg)
        assert len(p.logaffine_constraints) == cfg.i
        assert len(p.affine_constraints) == cfg.i

    def test_zero_expansion_point_evaluates(self):
        cfg, ec = make_instance(i=2, n=10, k=2, seed=5)
        zero = tuple(np.zeros((cfg.m, cfg.m), dtype=np.complex128) for _ in range(cfg.i))
        it = sub_wz.WZIterate(w=zero, z=zero, x=0.0)
        p = sub_wz.build_problem_2b(ec, it, cfg)
        blocks = {f"W{j}": zero[j] for j in range(cfg.i)}
        blocks.update({f"Z{j}": zero[j] for j in range(cfg.i)})
        report = evaluate_constraints(p, blocks, {"x": 0.0})
        # the aggregate rate bound at the zero design equals each log slack
        log_slacks = [s for kind, _, s in report.entries if kind == "log"]
        vals = [
            rates.f_terms_wz(i, ec, zero, zero, cfg.n0, check=False).unclamped()
            for i in range(cfg.i)
        ]
        for slack, val in zip(log_slacks, vals):
            assert slack == pytest.approx(val, abs=1e-9)


class TestSolveSca:
    def test_matched_filter_oracle(self):
        # one user, no eavesdropper coupling: artificial noise is useless and
        # the matched filter at full power is optimal
        cfg, ec = make_instance(i=1, n=10, m=2, mute_eve=True)
        oracle = math.log2(1 + cfg.p_max * np.linalg.norm(ec.d_hat[0, 0]) ** 2 / cfg.n0)
        out = sub_wz.solve_sca_wz(ec, sub_wz.init_wz(ec, cfg), cfg)
        assert out.status == sub_wz.STATUS_CONVERGED
        assert out.x == pytest.approx(oracle, abs=1e-3)

    def test_fixed_point_terminates_immediately(self):
        cfg, ec = make_instance(i=1, n=10, m=2, mute_eve=True)
        first = sub_wz.solve_sca_wz(ec, sub_wz.init_wz(ec, cfg), cfg)
        again = sub_wz.solve_sca_wz(ec, first, cfg)
        assert again.status == sub_wz.STATUS_CONVERGED
        assert len(again.history) <= len(first.history) + 2
        assert again.x >= first.x - 1e-9

    def test_monotone_objective_across_seeds(self):
        cfg, _ = make_instance(i=2, n=10, k=2)
        for seed in range(4):
            _, ec = make_instance(i=2, n=10, k=2, seed=seed)
            out = sub_wz.solve_sca_wz(ec, sub_wz.init_wz(ec, cfg), cfg, max_outer=4)
            hist = out.history
            assert all(b >= a - 1e-6 for a, b in zip(hist, hist[1:]))

    def test_iterate_invariants(self):
        cfg, ec = make_instance(i=2, n=10, k=2, seed=7)
        out = sub_wz.solve_sca_wz(ec, sub_wz.init_wz(ec, cfg), cfg, max_outer=4)
        for mats in (out.w, out.z):
            for blk in mats:
                ev = np.linalg.eigvalsh(blk)
                assert ev[0] >= -1e-8
        for i in range(cfg.i):
            power = float(np.trace(out.w[i]).real + np.trace(out.z[i]).real)
            assert power <= cfg.p_max + 1e-7


class TestRecovery:
    def test_rank_one_input_returns_vector(self):
        rng = np.random.default_rng(0)
        omega = rng.normal(size=4) + 1j * rng.normal(size=4)
        block = np.outer(omega, omega.conj())
        got = sub_wz.recover_rank1(block, RngStream(0, 0))
        # equal up to a global phase
        phase = np.vdot(got, omega)
        phase /= abs(phase)
        assert np.linalg.norm(got * phase - omega) <= 1e-6

    def test_trace_preserved_by_randomization(self):
        block = np.diag([1.0, 1.0]).astype(np.complex128)
        got = sub_wz.recover_rank1(block, RngStream(1, 0), trials=100)
        assert np.linalg.norm(got) ** 2 <= 2.0 + 1e-9

    def test_randomized_recovery_near_bound(self):
        rng = np.random.default_rng(42)
        a = rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))
        block = a @ a.conj().T  # rank 2
        got = sub_wz.recover_rank1(block, RngStream(9, 0))
        achieved = float((got.conj() @ block @ got).real)
        lam1 = np.linalg.eigvalsh(block)[-1]
        bound = lam1 * float(np.trace(block).real)  # relaxed quadratic bound
        assert achieved >= 0.8 * bound

    def test_non_psd_rejected(self):
        with pytest.raises(RejectedInputError):
            sub_wz.recover_rank1(np.diag([1.0, -0.5]), RngStream(0, 0))

    def test_relaxation_dominates_recovered_design(self):
        cfg, ec = make_instance(i=2, n=10, k=2, seed=2)
        out = sub_wz.solve_sca_wz(ec, sub_wz.init_wz(ec, cfg), cfg, max_outer=4)
        td = sub_wz.recover_design(ec, out, cfg, RngStream(5, 1), trials=50)
        td.check_power(cfg.p_max)  # raises on violation
        assert rates.min_secrecy_rate(ec, td, cfg.n0) <= out.x + 1e-6


class TestInit:
    def test_mrt_split(self):
        cfg, ec = make_instance(i=2, n=10, k=2, seed=1)
        td = sub_wz.mrt_design(ec, cfg)
        for i in range(cfg.i):
            assert np.linalg.norm(td.omega[i]) ** 2 == pytest.approx(0.9 * cfg.p_max)
            assert np.linalg.norm(td.z[i]) ** 2 == pytest.approx(0.1 * cfg.p_max)

    def test_init_history_starts_at_x0(self):
        cfg, ec = make_instance(i=1, n=10, seed=1)
        it = sub_wz.init_wz(ec, cfg)
        assert it.history == (it.x,)
        assert math.isfinite(it.x)
