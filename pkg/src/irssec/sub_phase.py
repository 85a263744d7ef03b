"""Reflection-phase sub-problem.

For a fixed transmit design and surface selection, the per-element phase
shifts enter the rates only through the lifted matrix V = v~ v~^H with
v~ = [v, 1]^H, so the unit-modulus set becomes { V PSD, diag(V) = 1 } once
the rank-one constraint is dropped. Each SCA round solves

    maximize x  s.t.  x <= F1_i + F2_i - F3~_i - F4~_i,
                      diag(V) = 1,  V PSD

with the concave tail replaced by its tangent at the previous iterate, then
re-expands. Unit-modulus phases are recovered from the principal eigenvector
(or the best Gaussian randomization) by normalizing against the last entry.
"""

import math

from dataclasses import dataclass, replace

import numpy as np

from . import rates
from .numerics import RngStream, hermitian_eig, sample_complex_gaussian
from .solver import (
    AffineConstraint,
    AffineExpr,
    ConvexProgram,
    LogAffineConstraint,
    LogTerm,
    solve,
)
from .sub_wz import (
    DEFAULT_MAX_OUTER,
    DEFAULT_TRIALS,
    RANK1_RATIO,
    STATUS_CONVERGED,
    STATUS_DEGRADED,
    STATUS_MAX_OUTER,
    STATUS_NONPOSITIVE,
    _strictly_feasible,
)


@dataclass(frozen=True)
class PhaseIterate:
    v: np.ndarray  # (NK+1) x (NK+1) Hermitian PSD, unit diagonal
    x: float
    t: int = 0
    history: tuple = ()
    status: str = STATUS_CONVERGED


def vtilde_from_mu(mu):
    """Lifted phase vector [v, 1]^H for flat or (K, N) phase entries."""
    mu = np.asarray(mu, dtype=np.complex128).reshape(-1)
    return np.concatenate([mu, [1.0]]).conj()


def _project_phases(u):
    """Unit-modulus phases from a lifted vector, last entry as reference."""
    u = np.asarray(u, dtype=np.complex128)
    ratio = u[:-1] / u[-1] if u[-1] != 0 else u[:-1]
    return np.exp(-1j * np.angle(ratio))


def _true_bound(lift, v_mat, cfg, sum_rate=False):
    i_cnt = len(lift.a_sig)
    vals = [
        rates.f_terms_phase(i, lift, v_mat, cfg.n0, check=False).unclamped()
        for i in range(i_cnt)
    ]
    return sum(vals) if sum_rate else min(vals)


def init_phase(lift, cfg, mu=None) -> PhaseIterate:
    """Rank-one expansion point from the current (default: identity) phases."""
    if mu is None:
        mu = np.ones(lift.dim - 1)
    vt = vtilde_from_mu(mu)
    v0 = np.outer(vt, vt.conj())
    x0 = _true_bound(lift, v0, cfg)
    return PhaseIterate(v=v0, x=x0, t=0, history=(x0,))


def build_problem_3b(lift, expansion: PhaseIterate, cfg, sum_rate=False) -> ConvexProgram:
    i_cnt, n0 = cfg.i, cfg.n0
    dim = lift.dim
    targets = [f"x{i}" for i in range(i_cnt)] if sum_rate else ["x"]
    # the auxiliary objective is unbounded below on purpose: clamping
    # belongs to the final rate, and a negative-value expansion point
    # must still yield a feasible surrogate program
    scalars = [(t, None, None) for t in targets]
    objective = AffineExpr(scalars={t: 1.0 for t in targets})

    p = ConvexProgram(psd_blocks=[("V", dim)], scalars=scalars, objective=objective)
    for d in range(dim):
        e_dd = np.zeros((dim, dim))
        e_dd[d, d] = 1.0
        p.affine_constraints.append(
            AffineConstraint(AffineExpr(blocks={"V": e_dd}, const=-1.0), relation="=")
        )
    log_n0 = math.log2(n0)
    v0 = np.asarray(expansion.v, dtype=np.complex128)
    for i in range(i_cnt):
        # PSD-completed coefficients stay nonnegative over the whole cone,
        # which keeps the log arguments in-domain even off the unit diagonal
        own, interf, own_e, interf_e = rates._phase_pieces(i, lift, psd=True)
        r3 = sum(r for r, _ in interf)
        r2 = sum(r for r, _ in interf_e)
        r1 = sum(r for r, _ in own) + r3
        r4 = sum(r for r, _ in own_e) + r2
        arg3 = n0 + float(np.trace(r3 @ v0).real)
        arg4 = n0 + float(np.trace(r4 @ v0).real)
        # linear surrogate of F3 + F4: constant tangent value plus gradient
        g = r3 / (rates.LN2 * arg3) + r4 / (rates.LN2 * arg4)
        tail_const = (
            2.0 * log_n0
            - math.log2(arg3)
            - math.log2(arg4)
            + float(np.trace(g @ v0).real)
        )
        target = f"x{i}" if sum_rate else "x"
        p.logaffine_constraints.append(
            LogAffineConstraint(
                target,
                (
                    LogTerm(1.0, AffineExpr(blocks={"V": r1 / n0}, const=1.0)),
                    LogTerm(1.0, AffineExpr(blocks={"V": r2 / n0}, const=1.0)),
                ),
                tail=AffineExpr(blocks={"V": -g}, const=tail_const),
            )
        )
    return p


def _start_point(program, expansion: PhaseIterate, cfg, targets):
    """Strictly interior warm start: blend the (typically rank-one) expansion
    toward the identity, which preserves the unit diagonal exactly."""
    dim = expansion.v.shape[0]
    eye = np.eye(dim)
    # the surrogate tail can be steep (gradients scale with 1 / noise power),
    # so the blend weight must shrink until the log slacks survive the move
    for mix in (1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12):
        blocks = {"V": (1.0 - mix) * expansion.v + mix * eye}
        for x0 in (min(1e-6, max(1e-12, 0.45 * expansion.x)), expansion.x - 1.0):
            scalars = {t: x0 for t in targets}
            if _strictly_feasible(program, blocks, scalars):
                return blocks, scalars
    return None


def _phase_polish(lift, v_mat, cfg, sum_rate=False):
    """Best of the relaxed iterate and its rank-one unit-modulus projection.

    Projecting onto implementable phases and re-scoring with the true
    objective keeps the SCA trail anchored to points the recovery can
    actually realize; the projection is kept only when it does not hurt.
    """
    v_mat = np.asarray(v_mat, dtype=np.complex128)
    eig = hermitian_eig((v_mat + v_mat.conj().T) / 2)
    vt = vtilde_from_mu(_project_phases(eig.vectors[:, 0]))
    best = None
    for cand in (v_mat, np.outer(vt, vt.conj())):
        val = _true_bound(lift, cand, cfg, sum_rate=sum_rate)
        if best is None or val > best[1]:
            best = (cand, val)
    return best


def solve_sca_phase(lift, init: PhaseIterate, cfg, delta=None,
                    max_outer=DEFAULT_MAX_OUTER, sum_rate=False) -> PhaseIterate:
    """Iterate Taylor expansion and solve until the auxiliary objective
    improves by less than delta."""
    delta = cfg.delta if delta is None else delta
    targets = [f"x{i}" for i in range(cfg.i)] if sum_rate else ["x"]
    cur = init
    history = list(init.history)
    for t in range(1, max_outer + 1):
        program = build_problem_3b(lift, cur, cfg, sum_rate=sum_rate)
        sol = solve(program, max_iterations=500, start=_start_point(program, cur, cfg, targets))
        if sol.status == "infeasible":
            return replace(cur, status=STATUS_NONPOSITIVE, history=tuple(history))
        if sol.status not in ("optimal", "max-iterations"):
            return replace(cur, status=STATUS_DEGRADED, history=tuple(history))
        v_new, x_new = _phase_polish(lift, sol.blocks["V"], cfg, sum_rate=sum_rate)
        improvement = x_new - cur.x
        if x_new >= cur.x:
            cur = PhaseIterate(v=v_new, x=x_new, t=t, history=tuple(history))
        history.append(cur.x)
        if improvement < delta:
            return replace(cur, status=STATUS_CONVERGED, history=tuple(history))
    return replace(cur, status=STATUS_MAX_OUTER, history=tuple(history))


def recover_phases(v, lift, stream: RngStream = None, n0=None,
                   trials=DEFAULT_TRIALS):
    """Unit-modulus phases from the lifted solution.

    A lifted vector is normalized directly. A matrix uses its principal
    eigenvector when numerically rank one; otherwise the best of `trials`
    Gaussian randomizations (each projected entrywise onto the unit circle)
    wins by true min-user secrecy rate. Returns a flat length-NK vector."""
    v = np.asarray(v, dtype=np.complex128)
    if v.ndim == 1:
        return _project_phases(v)
    eig = hermitian_eig((v + v.conj().T) / 2)
    vals = np.clip(eig.values, 0.0, None)
    total = float(vals.sum())
    if total <= 0:
        return np.ones(lift.dim - 1, dtype=np.complex128)
    best = _project_phases(eig.vectors[:, 0])
    if vals[0] / total >= RANK1_RATIO or stream is None or n0 is None:
        return best

    i_cnt = len(lift.a_sig)

    def score(mu):
        vt = vtilde_from_mu(mu)
        v_mat = np.outer(vt, vt.conj())
        return min(
            max(0.0, rates.f_terms_phase(i, lift, v_mat, n0, check=False).unclamped())
            for i in range(i_cnt)
        )

    root = eig.vectors @ np.diag(np.sqrt(vals))
    best_score = score(best)
    for trial in range(trials):
        r = sample_complex_gaussian(stream.substream(trial), v.shape[0])
        mu = _project_phases(root @ r)
        s = score(mu)
        if s > best_score:
            best, best_score = mu, s
    return best
