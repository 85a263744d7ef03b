"""Beamforming and artificial-noise sub-problem.

For fixed phases and surface selection, the secrecy objective is lifted to
per-user covariance blocks (W_i, Z_i) with the rank-one constraint dropped.
Each SCA round solves

    maximize x  s.t.  x <= F1_i + F2_i - F3~_i - F4~_i,
                      Tr(W_i) + Tr(Z_i) <= P_max,  W_i, Z_i PSD

where F3~/F4~ are the Taylor surrogates at the previous iterate, then
re-expands at the solution. Rank-one transmit vectors are recovered by the
principal eigenvector or Gaussian randomization.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import rates
from .numerics import (
    RejectedInputError,
    RngStream,
    hermitian_eig,
    is_psd,
    sample_complex_gaussian,
)
from .solver import (
    AffineConstraint,
    AffineExpr,
    ConvexProgram,
    LogAffineConstraint,
    LogTerm,
    evaluate_constraints,
    solve,
)

RANK1_RATIO = 0.999
DEFAULT_TRIALS = 200
DEFAULT_MAX_OUTER = 30

STATUS_CONVERGED = "converged"
STATUS_MAX_OUTER = "max-outer"
STATUS_DEGRADED = "degraded"
STATUS_NONPOSITIVE = "nonpositive"


@dataclass(frozen=True)
class WZIterate:
    w: tuple  # I Hermitian PSD blocks, M x M
    z: tuple
    x: float
    t: int = 0
    history: tuple = ()
    status: str = STATUS_CONVERGED


def _w_name(j):
    return f"W{j}"


def _z_name(j):
    return f"Z{j}"


def mrt_design(ec: rates.EffectiveChannels, cfg, use_an=True) -> rates.TransmitDesign:
    """Matched-filter beams at 0.9 P_max plus isotropic noise at 0.1 P_max
    (all the power goes to the beams when artificial noise is disabled)."""
    i_cnt, m = ec.d_e.shape
    omega = np.zeros((i_cnt, m), dtype=np.complex128)
    z = np.zeros((i_cnt, m), dtype=np.complex128)
    beam_frac = 0.9 if use_an else 1.0
    for i in range(i_cnt):
        d = ec.d_hat[i, i].conj()
        norm = np.linalg.norm(d)
        if norm > 0:
            omega[i] = math.sqrt(beam_frac * cfg.p_max) * d / norm
        if use_an:
            z[i] = math.sqrt(0.1 * cfg.p_max / m) * np.ones(m)
    return rates.TransmitDesign(omega=omega, z=z)


def init_wz(ec, cfg, use_an=True) -> WZIterate:
    td = mrt_design(ec, cfg, use_an=use_an)
    w, z = td.lifted()
    ft = [rates.f_terms_wz(i, ec, w, z, cfg.n0, check=False) for i in range(cfg.i)]
    x0 = min(f.unclamped() for f in ft)
    return WZIterate(w=w, z=z, x=x0, t=0, history=(x0,))


def build_problem_2b(ec, expansion: WZIterate, cfg, sum_rate=False, use_an=True) -> ConvexProgram:
    i_cnt, m, n0 = cfg.i, cfg.m, cfg.n0
    c_u, c_e = rates.wz_coefficients(ec)
    blocks = [(_w_name(j), m) for j in range(i_cnt)]
    if use_an:
        blocks += [(_z_name(j), m) for j in range(i_cnt)]
    targets = [f"x{i}" for i in range(i_cnt)] if sum_rate else ["x"]
    # the auxiliary objective is unbounded below on purpose: clamping
    # belongs to the final rate, and a negative-value expansion point
    # must still yield a feasible surrogate program
    scalars = [(t, None, None) for t in targets]
    objective = AffineExpr(scalars={t: 1.0 for t in targets})

    p = ConvexProgram(psd_blocks=blocks, scalars=scalars, objective=objective)
    eye = np.eye(m)
    for j in range(i_cnt):
        budget = {_w_name(j): eye}
        if use_an:
            budget[_z_name(j)] = eye
        p.affine_constraints.append(
            AffineConstraint(AffineExpr(blocks=budget, const=-cfg.p_max))
        )
    log_n0 = math.log2(n0)
    for i in range(i_cnt):
        ft = rates.f_terms_wz(i, ec, expansion.w, expansion.z, n0, check=False)
        # signal-plus-interference argument (F1), rebased by N0
        arg1_blocks = {_w_name(i): c_u[i, i] / n0}
        for j in range(i_cnt):
            if j != i:
                arg1_blocks[_w_name(j)] = c_u[i, j] / n0
            if use_an:
                arg1_blocks[_z_name(j)] = c_u[i, j] / n0
        # eavesdropper interference argument (F2)
        arg2_blocks = {}
        for j in range(i_cnt):
            if j != i:
                arg2_blocks[_w_name(j)] = c_e[j] / n0
            if use_an:
                arg2_blocks[_z_name(j)] = (
                    arg2_blocks.get(_z_name(j), np.zeros((m, m))) + c_e[j] / n0
                )
        # linear surrogate of F3 + F4: constant tangent value plus gradients
        tail_blocks = {}
        tail_const = 2.0 * log_n0 - ft.f3 - ft.f4
        for j in range(i_cnt):
            gw = ft.grad3[("w", j)] + ft.grad4[("w", j)]
            tail_blocks[_w_name(j)] = -gw
            tail_const += float(np.trace(gw @ expansion.w[j]).real)
            if use_an:
                gz = ft.grad3[("z", j)] + ft.grad4[("z", j)]
                tail_blocks[_z_name(j)] = -gz
                tail_const += float(np.trace(gz @ expansion.z[j]).real)
        target = f"x{i}" if sum_rate else "x"
        p.logaffine_constraints.append(
            LogAffineConstraint(
                target,
                (
                    LogTerm(1.0, AffineExpr(blocks=arg1_blocks, const=1.0)),
                    LogTerm(1.0, AffineExpr(blocks=arg2_blocks, const=1.0)),
                ),
                tail=AffineExpr(blocks=tail_blocks, const=tail_const),
            )
        )
    return p


def _strictly_feasible(program, blocks, scalars):
    report = evaluate_constraints(program, blocks, scalars)
    return all(s > 0 for kind, _, s in report.entries if kind != "affine=") and all(
        s > -1e-9 for kind, _, s in report.entries if kind == "affine="
    )


def _start_point(program, expansion: WZIterate, cfg, targets, use_an=True):
    """Strictly interior warm start hugging the expansion point.

    The surrogate tail is steep wherever a log argument sits near the noise
    floor, so the ridge that regularizes rank-deficient blocks must be tried
    from coarse to very fine until the start is strictly feasible.
    """
    m = cfg.m
    eye = np.eye(m)
    for ridge_rel in (1e-6, 1e-8, 1e-10, 1e-12, 1e-14):
        ridge = ridge_rel * cfg.p_max / m
        shrink = 1.0 - (2.0 * m * ridge + 1e-9 * cfg.p_max) / cfg.p_max
        blocks = {}
        for j in range(cfg.i):
            blocks[_w_name(j)] = shrink * expansion.w[j] + ridge * eye
            if use_an:
                blocks[_z_name(j)] = shrink * expansion.z[j] + ridge * eye
        for x0 in (min(1e-6, max(1e-12, 0.45 * expansion.x)), expansion.x - 1.0):
            scalars = {t: x0 for t in targets}
            if _strictly_feasible(program, blocks, scalars):
                return blocks, scalars
    return None


def _extract_blocks(sol, cfg, use_an=True):
    w = tuple(np.asarray(sol.blocks[_w_name(j)]) for j in range(cfg.i))
    if use_an:
        z = tuple(np.asarray(sol.blocks[_z_name(j)]) for j in range(cfg.i))
    else:
        z = tuple(np.zeros((cfg.m, cfg.m), dtype=np.complex128) for _ in range(cfg.i))
    return w, z


def _true_bound(ec, w, z, cfg, sum_rate=False):
    ft = [rates.f_terms_wz(i, ec, w, z, cfg.n0, check=False) for i in range(cfg.i)]
    vals = [f.unclamped() for f in ft]
    return sum(vals) if sum_rate else min(vals)


def _power_polish(ec, w, z, cfg, sum_rate=False):
    """Best of the iterate and two direct power reallocations.

    The relaxed blocks often park transmit power in directions the objective
    never sees (the barrier spreads slack evenly); pouring that power into the
    principal beam direction -- with or without keeping the noise block -- is
    checked against the true objective and kept only when it helps.
    """
    i_cnt, m = cfg.i, cfg.m
    beams, keep_z = [], []
    for i in range(i_cnt):
        eig = hermitian_eig(np.asarray(w[i]))
        u = eig.vectors[:, 0]
        beams.append(np.outer(u, u.conj()))
        keep_z.append(max(cfg.p_max - float(np.trace(z[i]).real), 0.0))
    zero_z = tuple(np.zeros((m, m), dtype=np.complex128) for _ in range(i_cnt))
    candidates = [
        (tuple(np.asarray(w[i]) for i in range(i_cnt)), tuple(np.asarray(z[i]) for i in range(i_cnt))),
        (tuple(cfg.p_max * beams[i] for i in range(i_cnt)), zero_z),
        (tuple(keep_z[i] * beams[i] for i in range(i_cnt)), tuple(np.asarray(z[i]) for i in range(i_cnt))),
    ]
    best = None
    for wc, zc in candidates:
        val = _true_bound(ec, wc, zc, cfg, sum_rate=sum_rate)
        if best is None or val > best[2]:
            best = (wc, zc, val)
    return best


def solve_sca_wz(ec, init: WZIterate, cfg, delta=None, max_outer=DEFAULT_MAX_OUTER,
                 sum_rate=False, use_an=True) -> WZIterate:
    """Iterate Taylor expansion and solve until the auxiliary objective
    improves by less than delta."""
    delta = cfg.delta if delta is None else delta
    targets = [f"x{i}" for i in range(cfg.i)] if sum_rate else ["x"]
    cur = init
    history = list(init.history)
    for t in range(1, max_outer + 1):
        program = build_problem_2b(ec, cur, cfg, sum_rate=sum_rate, use_an=use_an)
        sol = solve(
            program,
            max_iterations=500,
            start=_start_point(program, cur, cfg, targets, use_an=use_an),
        )
        if sol.status == "infeasible":
            return replace(cur, status=STATUS_NONPOSITIVE, history=tuple(history))
        if sol.status not in ("optimal", "max-iterations"):
            return replace(cur, status=STATUS_DEGRADED, history=tuple(history))
        w, z, x_new = _power_polish(
            ec, *_extract_blocks(sol, cfg, use_an=use_an), cfg, sum_rate=sum_rate
        )
        improvement = x_new - cur.x
        if x_new >= cur.x:
            cur = WZIterate(w=w, z=z, x=x_new, t=t, history=tuple(history))
        history.append(cur.x)
        if improvement < delta:
            return replace(cur, status=STATUS_CONVERGED, history=tuple(history))
    return replace(cur, status=STATUS_MAX_OUTER, history=tuple(history))


def recover_rank1(block, stream: RngStream, trials=DEFAULT_TRIALS, score=None):
    """Rank-one vector from a PSD block: the principal eigenvector when the
    block is numerically rank one, otherwise the best of `trials` Gaussian
    randomizations rescaled to the block's trace."""
    block = np.asarray(block, dtype=np.complex128)
    if not is_psd(block):
        raise RejectedInputError("block must be positive semidefinite")
    eig = hermitian_eig(block)
    vals = np.clip(eig.values, 0.0, None)
    total = float(vals.sum())
    if total <= 0:
        return np.zeros(block.shape[0], dtype=np.complex128)
    if vals[0] / total >= RANK1_RATIO:
        return math.sqrt(vals[0]) * eig.vectors[:, 0]
    if score is None:
        score = lambda x: float((x.conj() @ block @ x).real)
    root = eig.vectors @ np.diag(np.sqrt(vals))
    best, best_score = None, -math.inf
    for trial in range(trials):
        r = sample_complex_gaussian(stream.substream(trial), block.shape[0])
        cand = root @ r
        nrm = np.linalg.norm(cand)
        if nrm == 0:
            continue
        cand *= math.sqrt(total) / nrm
        s = score(cand)
        if s > best_score:
            best, best_score = cand, s
    return best


def recover_design(ec, iterate: WZIterate, cfg, stream: RngStream,
                   trials=DEFAULT_TRIALS) -> rates.TransmitDesign:
    """Joint randomized recovery of all beams, scored by the true min-user
    secrecy rate, with per-user rescaling into the power budget."""
    i_cnt, m = cfg.i, cfg.m
    roots, fixed = [], []
    for mats in (iterate.w, iterate.z):
        for blk in mats:
            eig = hermitian_eig(np.asarray(blk))
            vals = np.clip(eig.values, 0.0, None)
            total = float(vals.sum())
            if total <= 0:
                roots.append(None)
                fixed.append(np.zeros(m, dtype=np.complex128))
            elif vals[0] / total >= RANK1_RATIO:
                roots.append(None)
                fixed.append(math.sqrt(vals[0]) * eig.vectors[:, 0])
            else:
                roots.append((eig.vectors @ np.diag(np.sqrt(vals)), total))
                fixed.append(None)

    def assemble(draws):
        vecs = []
        for idx in range(2 * i_cnt):
            if roots[idx] is None:
                vecs.append(fixed[idx])
            else:
                root, total = roots[idx]
                cand = root @ draws[idx]
                nrm = np.linalg.norm(cand)
                vecs.append(cand * (math.sqrt(total) / nrm) if nrm > 0 else cand * 0)
        omega = np.array(vecs[:i_cnt])
        z = np.array(vecs[i_cnt:])
        for i in range(i_cnt):
            power = np.linalg.norm(omega[i]) ** 2 + np.linalg.norm(z[i]) ** 2
            if power > cfg.p_max:
                scale = math.sqrt(cfg.p_max / power)
                omega[i] *= scale
                z[i] *= scale
        return rates.TransmitDesign(omega=omega, z=z)

    n_random = sum(r is not None for r in roots)
    if n_random == 0:
        return assemble([None] * (2 * i_cnt))
    best, best_score = None, -math.inf
    for trial in range(trials):
        sub = stream.substream(trial)
        draws = [
            sample_complex_gaussian(sub.substream(idx), m) if roots[idx] is not None else None
            for idx in range(2 * i_cnt)
        ]
        td = assemble(draws)
        s = rates.min_secrecy_rate(ec, td, cfg.n0)
        if s > best_score:
            best, best_score = td, s
    return best
