"""Surface-selection sub-problem.

The binary assignment of users to surfaces is relaxed onto the product of
row simplices: alpha[i, k] in [0, 1] with each row summing to one. Because
distinct surfaces never serve the same user simultaneously, the received
powers are linear in the relaxed weights, so each SCA round solves

    maximize x  s.t.  x <= F1_i + F2_i - F3~_i - F4~_i,
                      sum_k alpha[i, k] = 1,  0 <= alpha[i, k] <= 1

and re-expands at the solution. The relaxed rows are rounded to the
largest entry (lowest surface index on ties) to obtain a feasible binary
selection.
"""

import math

from dataclasses import dataclass, replace

import numpy as np

from . import rates
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
    STATUS_CONVERGED,
    STATUS_DEGRADED,
    STATUS_MAX_OUTER,
    STATUS_NONPOSITIVE,
    _strictly_feasible,
)


@dataclass(frozen=True)
class SelectionIterate:
    alpha: np.ndarray  # I x K, rows on the simplex
    x: float
    t: int = 0
    history: tuple = ()
    status: str = STATUS_CONVERGED


def _a_name(i, k):
    return f"a{i}_{k}"


def nearest_irs_alpha(cfg):
    """One-hot assignment of each user to its closest surface."""
    users = np.asarray(cfg.user_positions, dtype=float)
    surfaces = np.asarray(cfg.irs_positions, dtype=float)
    alpha = np.zeros((cfg.i, cfg.k))
    for i in range(cfg.i):
        dists = np.linalg.norm(surfaces - users[i], axis=1)
        alpha[i, int(np.argmin(dists))] = 1.0
    return alpha


def _true_bound(tables, alpha, cfg, sum_rate=False):
    vals = [
        rates.f_terms_alpha(i, tables, alpha, cfg.n0, check=False).unclamped()
        for i in range(cfg.i)
    ]
    return sum(vals) if sum_rate else min(vals)


def init_alpha(tables, cfg, alpha=None) -> SelectionIterate:
    """Expansion point from a given assignment (default: uniform rows)."""
    if alpha is None:
        alpha = np.full((cfg.i, cfg.k), 1.0 / cfg.k)
    alpha = np.asarray(alpha, dtype=float)
    x0 = _true_bound(tables, alpha, cfg)
    return SelectionIterate(alpha=alpha, x=x0, t=0, history=(x0,))


def build_problem_4b(tables: rates.AlphaTables, expansion: SelectionIterate,
                     cfg, sum_rate=False) -> ConvexProgram:
    i_cnt, k_cnt, n0 = cfg.i, cfg.k, cfg.n0
    targets = [f"x{i}" for i in range(i_cnt)] if sum_rate else ["x"]
    # the auxiliary objective is unbounded below on purpose: clamping
    # belongs to the final rate, and a negative-value expansion point
    # must still yield a feasible surrogate program
    scalars = [(t, None, None) for t in targets]
    scalars += [(_a_name(i, k), 0.0, 1.0) for i in range(i_cnt) for k in range(k_cnt)]
    objective = AffineExpr(scalars={t: 1.0 for t in targets})

    p = ConvexProgram(scalars=scalars, objective=objective)
    for i in range(i_cnt):
        p.affine_constraints.append(
            AffineConstraint(
                AffineExpr(scalars={_a_name(i, k): 1.0 for k in range(k_cnt)}, const=-1.0),
                relation="=",
            )
        )
    log_n0 = math.log2(n0)
    a0 = np.asarray(expansion.alpha, dtype=float)
    for i in range(i_cnt):
        ft = rates.f_terms_alpha(i, tables, a0, n0, check=False)
        # signal-plus-interference argument (F1), rebased by N0
        arg1 = {}
        c1 = n0 + tables.bw[i, i]
        for k in range(k_cnt):
            arg1[_a_name(i, k)] = tables.tw[i, i, k] / n0
        for j in range(i_cnt):
            if j != i:
                c1 += tables.bw[i, j]
            c1 += tables.bn[i, j]
            for k in range(k_cnt):
                coef = tables.tn[i, j, k]
                if j != i:
                    coef += tables.tw[i, j, k]
                arg1[_a_name(j, k)] = arg1.get(_a_name(j, k), 0.0) + coef / n0
        # eavesdropper interference argument (F2)
        arg2 = {}
        c2 = n0
        for j in range(i_cnt):
            if j != i:
                c2 += tables.be[j]
            c2 += tables.bne[j]
            for k in range(k_cnt):
                coef = tables.ten[j, k]
                if j != i:
                    coef += tables.te[j, k]
                arg2[_a_name(j, k)] = arg2.get(_a_name(j, k), 0.0) + coef / n0
        # linear surrogate of F3 + F4: constant tangent value plus gradient
        g = ft.grad3["alpha"] + ft.grad4["alpha"]
        tail = {
            _a_name(j, k): -g[j, k] for j in range(i_cnt) for k in range(k_cnt)
        }
        tail_const = 2.0 * log_n0 - ft.f3 - ft.f4 + float(np.sum(g * a0))
        target = f"x{i}" if sum_rate else "x"
        p.logaffine_constraints.append(
            LogAffineConstraint(
                target,
                (
                    LogTerm(1.0, AffineExpr(scalars=arg1, const=c1 / n0)),
                    LogTerm(1.0, AffineExpr(scalars=arg2, const=c2 / n0)),
                ),
                tail=AffineExpr(scalars=tail, const=tail_const),
            )
        )
    return p


def _start_point(program, expansion: SelectionIterate, cfg, targets):
    """Strictly interior warm start: blend the expansion rows toward uniform,
    which keeps the row sums at one while opening the box bounds."""
    uniform = np.full((cfg.i, cfg.k), 1.0 / cfg.k)
    # the surrogate tail can be steep (gradients scale with 1 / noise power),
    # so the blend weight must shrink until the log slacks survive the move
    for mix in (1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12):
        a = (1.0 - mix) * np.asarray(expansion.alpha, dtype=float) + mix * uniform
        base = {_a_name(i, k): a[i, k] for i in range(cfg.i) for k in range(cfg.k)}
        for x0 in (min(1e-6, max(1e-12, 0.45 * expansion.x)), expansion.x - 1.0):
            scalars = dict(base)
            scalars.update({t: x0 for t in targets})
            if _strictly_feasible(program, {}, scalars):
                return {}, scalars
    return None


def round_selection(relaxed):
    """Binary assignment: the largest entry of each row wins, ties broken by
    the lowest surface index."""
    alpha = np.asarray(getattr(relaxed, "alpha", relaxed), dtype=float)
    out = np.zeros_like(alpha)
    for i in range(alpha.shape[0]):
        out[i, int(np.argmax(alpha[i]))] = 1.0
    return out


def _selection_polish(tables, alpha, cfg, sum_rate=False):
    """Best of the relaxed rows and their rounding by the true objective."""
    alpha = np.asarray(alpha, dtype=float)
    best = None
    for cand in (alpha, round_selection(alpha)):
        val = _true_bound(tables, cand, cfg, sum_rate=sum_rate)
        if best is None or val > best[1]:
            best = (cand, val)
    return best


def solve_sca_alpha(tables, init: SelectionIterate, cfg, delta=None,
                    max_outer=DEFAULT_MAX_OUTER, sum_rate=False) -> SelectionIterate:
    """Iterate Taylor expansion and solve until the auxiliary objective
    improves by less than delta."""
    delta = cfg.delta if delta is None else delta
    if cfg.k == 1:
        alpha = np.ones((cfg.i, 1))
        x = _true_bound(tables, alpha, cfg, sum_rate=sum_rate)
        return SelectionIterate(
            alpha=alpha, x=x, t=init.t, history=init.history + (x,),
            status=STATUS_CONVERGED,
        )
    targets = [f"x{i}" for i in range(cfg.i)] if sum_rate else ["x"]
    cur = init
    history = list(init.history)
    for t in range(1, max_outer + 1):
        program = build_problem_4b(tables, cur, cfg, sum_rate=sum_rate)
        sol = solve(program, max_iterations=500, start=_start_point(program, cur, cfg, targets))
        if sol.status == "infeasible":
            return replace(cur, status=STATUS_NONPOSITIVE, history=tuple(history))
        if sol.status not in ("optimal", "max-iterations"):
            return replace(cur, status=STATUS_DEGRADED, history=tuple(history))
        a_sol = np.array(
            [[sol.scalars[_a_name(i, k)] for k in range(cfg.k)] for i in range(cfg.i)]
        )
        a_sol = np.clip(a_sol, 0.0, 1.0)
        a_sol /= a_sol.sum(axis=1, keepdims=True)
        a_new, x_new = _selection_polish(tables, a_sol, cfg, sum_rate=sum_rate)
        improvement = x_new - cur.x
        if x_new >= cur.x:
            cur = SelectionIterate(alpha=a_new, x=x_new, t=t, history=tuple(history))
        history.append(cur.x)
        if improvement < delta:
            return replace(cur, status=STATUS_CONVERGED, history=tuple(history))
    return replace(cur, status=STATUS_MAX_OUTER, history=tuple(history))
