"""Structured convex interior-point solver.

Solves programs of the form

    maximize    linear(objective)
    subject to  Hermitian PSD block variables,
                affine (in)equalities over blocks and scalars,
                scalar box bounds,
                "log-affine" constraints  target <= sum_l w_l*log2(a_l) + tail

where every a_l and the tail are affine in the variables and w_l > 0.
Affine expressions enter blocks through the real trace inner product
Re Tr(C X) with Hermitian coefficient C.

Method: barrier (path-following) with damped Newton steps. The barrier is
-sum logdet(block) - sum log(affine slacks) - sum log(log-constraint slack)
- sum log(log-term arguments); the outer loop multiplies the barrier
parameter by 10 until the certified gap m/t falls below the tolerance.
The Newton system is solved by eliminating the block coordinates: the
block-barrier Hessian inverts cheaply (X dX X), the remaining curvature is
a small sum of rank-1 terms handled by a Woodbury correction, and a dense
Schur system over scalars plus equality multipliers finishes the step.

A phase-I pass (single relaxation scalar added to every non-domain
constraint) finds a strictly feasible start or certifies infeasibility.
"""

import functools
import math
from dataclasses import dataclass, field

import numpy as np

LOG2 = math.log(2.0)

STATUS_OPTIMAL = "optimal"
STATUS_MAX_ITERATIONS = "max-iterations"
STATUS_INFEASIBLE = "infeasible"
STATUS_NUMERICAL_FAILURE = "numerical-failure"


class ProgramError(ValueError):
    """Malformed program (unknown variable, bad dimension, bad weight)."""


@dataclass(frozen=True)
class AffineExpr:
    """const + sum_b Re Tr(C_b X_b) + sum_s c_s * s."""

    blocks: dict = field(default_factory=dict)
    scalars: dict = field(default_factory=dict)
    const: float = 0.0


@dataclass(frozen=True)
class AffineConstraint:
    """expr <= 0 (relation '<=') or expr == 0 (relation '=')."""

    expr: AffineExpr
    relation: str = "<="


@dataclass(frozen=True)
class LogTerm:
    weight: float
    arg: AffineExpr


@dataclass(frozen=True)
class LogAffineConstraint:
    """target <= sum_l weight_l * log2(arg_l) + tail."""

    target: str
    terms: tuple
    tail: AffineExpr = AffineExpr()


@dataclass
class ConvexProgram:
    psd_blocks: list = field(default_factory=list)  # (name, dim)
    scalars: list = field(default_factory=list)  # (name, lb, ub); None = unbounded
    objective: AffineExpr = field(default_factory=AffineExpr)  # maximized
    affine_constraints: list = field(default_factory=list)
    logaffine_constraints: list = field(default_factory=list)


@dataclass
class ConvexSolution:
    blocks: dict
    scalars: dict
    objective: float
    status: str
    gap: float
    message: str = ""
    path: list = field(default_factory=list)  # (t, objective) per outer stage


@dataclass
class ConstraintReport:
    entries: list  # (kind, label, slack)
    max_violation: float


# ---------------------------------------------------------------------------
# svec embedding: Hermitian d x d  <->  R^{d^2}, preserving Tr(C X).


@functools.lru_cache(maxsize=64)
def _triu_cache(d):
    return np.triu_indices(d, 1)


def svec(mat):
    d = mat.shape[0]
    iu = _triu_cache(d)
    m = d * (d - 1) // 2
    out = np.empty(d * d)
    out[:d] = np.diagonal(mat).real
    vals = mat[iu]
    out[d : d + m] = math.sqrt(2.0) * vals.real
    out[d + m :] = math.sqrt(2.0) * vals.imag
    return out


def unsvec(v, d):
    mat = np.zeros((d, d), dtype=np.complex128)
    iu = _triu_cache(d)
    m = d * (d - 1) // 2
    np.fill_diagonal(mat, v[:d])
    vals = (v[d : d + m] + 1j * v[d + m :]) / math.sqrt(2.0)
    mat[iu] = vals
    mat[iu[1], iu[0]] = vals.conj()
    return mat


@functools.lru_cache(maxsize=32)
def _svec_basis(d):
    """Stacked Hermitian basis matrices, one per svec coordinate."""
    basis = np.zeros((d * d, d, d), dtype=np.complex128)
    eye = np.eye(d * d)
    for col in range(d * d):
        basis[col] = unsvec(eye[col], d)
    return basis


# ---------------------------------------------------------------------------
# compiled program


class _Compiled:
    def __init__(self, p: ConvexProgram):
        self.block_names = [name for name, _ in p.psd_blocks]
        self.block_dims = [int(d) for _, d in p.psd_blocks]
        self.block_off = []
        off = 0
        for d in self.block_dims:
            self.block_off.append(off)
            off += d * d
        self.nb = off
        self.scalar_names = [name for name, _, _ in p.scalars]
        self.scalar_idx = {name: off + i for i, name in enumerate(self.scalar_names)}
        self.nv = off + len(self.scalar_names)
        self.ns = len(self.scalar_names)

        self._block_pos = {name: i for i, name in enumerate(self.block_names)}
        if len(self._block_pos) != len(self.block_names):
            raise ProgramError("duplicate block name")
        if len(self.scalar_idx) != len(self.scalar_names):
            raise ProgramError("duplicate scalar name")

        self.bounds = []  # (var index, lb, ub)
        for i, (_, lb, ub) in enumerate(p.scalars):
            self.bounds.append((off + i, lb, ub))

        self.obj_vec, self.obj_const = self._expr(p.objective)

        self.ineq = []  # (vec, const) meaning vec@y + const <= 0
        eq_rows, eq_rhs = [], []
        for con in p.affine_constraints:
            vec, c = self._expr(con.expr)
            if con.relation in ("<=",):
                self.ineq.append((vec, c))
            elif con.relation in ("=", "=="):
                eq_rows.append(vec)
                eq_rhs.append(-c)
            else:
                raise ProgramError(f"unknown relation {con.relation!r}")
        self.a_eq = np.array(eq_rows) if eq_rows else np.zeros((0, self.nv))
        self.b_eq = np.array(eq_rhs) if eq_rhs else np.zeros(0)

        self.logcons = []  # (target idx, [(w, vec, const)], tail vec, tail const)
        for con in p.logaffine_constraints:
            if con.target not in self.scalar_idx:
                raise ProgramError(f"unknown log-constraint target {con.target!r}")
            terms = []
            for term in con.terms:
                if term.weight <= 0:
                    raise ProgramError("log-term weights must be positive")
                vec, c = self._expr(term.arg)
                terms.append((float(term.weight), vec, c))
            tvec, tc = self._expr(con.tail)
            self.logcons.append((self.scalar_idx[con.target], terms, tvec, tc))

        # barrier complexity: logdet of d x d counts d
        self.m_barrier = (
            sum(self.block_dims)
            + len(self.ineq)
            + sum(int(lb is not None) + int(ub is not None) for _, lb, ub in self.bounds)
            + sum(1 + len(terms) for _, terms, _, _ in self.logcons)
        )

    def _expr(self, e: AffineExpr):
        vec = np.zeros(self.nv)
        for name, mat in e.blocks.items():
            if name not in self._block_pos:
                raise ProgramError(f"unknown block {name!r}")
            b = self._block_pos[name]
            d = self.block_dims[b]
            mat = np.asarray(mat, dtype=np.complex128)
            if mat.shape != (d, d):
                raise ProgramError(f"coefficient for block {name!r} has shape {mat.shape}")
            if np.max(np.abs(mat - mat.conj().T)) > 1e-10 * max(1.0, np.max(np.abs(mat))):
                raise ProgramError(f"coefficient for block {name!r} is not Hermitian")
            o = self.block_off[b]
            vec[o : o + d * d] = svec((mat + mat.conj().T) / 2)
        for name, c in e.scalars.items():
            if name not in self.scalar_idx:
                raise ProgramError(f"unknown scalar {name!r}")
            vec[self.scalar_idx[name]] = float(c)
        return vec, float(e.const)

    def get_block(self, y, b):
        d = self.block_dims[b]
        o = self.block_off[b]
        return unsvec(y[o : o + d * d], d)

    def split_solution(self, y):
        blocks = {name: self.get_block(y, b) for b, name in enumerate(self.block_names)}
        scalars = {name: float(y[self.scalar_idx[name]]) for name in self.scalar_names}
        return blocks, scalars


class _DomainError(Exception):
    pass


class _Failure(Exception):
    pass


def _chol_psd(mat, what):
    """Cholesky with escalating diagonal jitter for nearly singular matrices."""
    mat = (mat + mat.T) / 2
    scale = max(float(np.max(np.diagonal(mat))), 1e-300)
    for jitter in (0.0, 1e-14, 1e-11, 1e-8):
        try:
            return np.linalg.cholesky(mat + (jitter * scale) * np.eye(mat.shape[0]))
        except np.linalg.LinAlgError:
            continue
    raise _Failure(f"indefinite {what}")


EXTENDED_SOLVE_LIMIT = 400


def _lu_solve_extended(mat, rhs):
    """Pivoted LU solve carried out in extended precision with refinement.

    Barrier Hessians here reach condition numbers past 1e16, beyond what a
    float64 factorization can represent; the x86 80-bit long double plus
    iterative refinement against long-double residuals buys the additional
    decades the Newton direction needs.
    """
    mat_ld = np.asarray(mat, dtype=np.longdouble)
    n = mat_ld.shape[0]
    d = 1.0 / np.sqrt(np.maximum(np.abs(mat_ld).max(axis=1), np.longdouble(1e-300)))
    a = (mat_ld * d[None, :]) * d[:, None]
    pivots = np.zeros(n, dtype=np.int64)
    for k in range(n - 1):
        piv = k + int(np.argmax(np.abs(a[k:, k])))
        pivots[k] = piv
        if piv != k:
            a[[k, piv]] = a[[piv, k]]
        if a[k, k] == 0:
            raise _Failure("singular Newton system")
        a[k + 1 :, k] /= a[k, k]
        a[k + 1 :, k + 1 :] -= a[k + 1 :, k, None] * a[k, k + 1 :][None, :]
    pivots[n - 1] = n - 1
    if a[n - 1, n - 1] == 0:
        raise _Failure("singular Newton system")

    def lu_solve(b):
        x = b.copy()
        # the stored multipliers are fully permuted, so apply every row
        # interchange to the right-hand side before the triangular solves
        for k in range(n - 1):
            piv = pivots[k]
            if piv != k:
                x[[k, piv]] = x[[piv, k]]
        for k in range(n - 1):
            x[k + 1 :] -= a[k + 1 :, k] * x[k]
        for k in range(n - 1, -1, -1):
            x[k] = (x[k] - a[k, k + 1 :] @ x[k + 1 :]) / a[k, k]
        return x

    rhs_ld = np.asarray(rhs, dtype=np.longdouble)
    sol = lu_solve(rhs_ld * d) * d
    rhs_norm = float(np.linalg.norm(np.asarray(rhs_ld, dtype=np.float64))) + 1e-300
    best, best_res = None, math.inf
    for _ in range(4):
        res = rhs_ld - mat_ld @ sol
        res_norm = float(np.linalg.norm(np.asarray(res, dtype=np.float64))) / rhs_norm
        if res_norm < best_res:
            best, best_res = sol, res_norm
        if res_norm <= 1e-16 or res_norm > best_res * 10:
            break
        sol = sol + lu_solve(res * d) * d
    out = np.asarray(best, dtype=np.float64)
    if not np.all(np.isfinite(out)):
        raise _Failure("singular Newton system")
    return out


def _solve_dense(mat, rhs):
    """Equilibrated solve with iterative refinement.

    Barrier Hessians span tens of orders of magnitude across coordinates;
    symmetric max-norm scaling plus a few refinement passes keeps the
    direction accurate where a plain pivoted solve loses it entirely.
    Small systems go through an extended-precision factorization instead.
    """
    d = 1.0 / np.sqrt(np.maximum(np.abs(mat).max(axis=1), 1e-300))
    mat_s = (mat * d[None, :]) * d[:, None]

    # fast path: a float64 factorization is enough for most steps; escalate
    # to the extended-precision factorization only when its residual is poor
    if mat.shape[0] <= EXTENDED_SOLVE_LIMIT:
        try:
            quick = np.linalg.solve(mat_s, rhs * d) * d
            if np.all(np.isfinite(quick)):
                res = rhs - mat @ quick
                quick = quick + np.linalg.solve(mat_s, res * d) * d
                res_rel = np.linalg.norm(rhs - mat @ quick) / (np.linalg.norm(rhs) + 1e-300)
                if np.all(np.isfinite(quick)) and res_rel <= 1e-12:
                    return quick
        except np.linalg.LinAlgError:
            pass
        try:
            return _lu_solve_extended(mat, rhs)
        except _Failure:
            pass  # exactly singular; the least-squares path below copes

    def raw_solve(b):
        try:
            s = np.linalg.solve(mat_s, b)
            if np.all(np.isfinite(s)):
                return s
        except np.linalg.LinAlgError:
            pass
        s, *_ = np.linalg.lstsq(mat_s, b, rcond=None)
        return s

    sol = raw_solve(rhs * d) * d
    rhs_norm = np.linalg.norm(rhs) + 1e-300
    best, best_res = None, math.inf
    for _ in range(4):
        if not np.all(np.isfinite(sol)):
            break
        res = rhs - mat @ sol
        res_norm = float(np.linalg.norm(res)) / rhs_norm
        if res_norm < best_res:
            best, best_res = sol, res_norm
        if res_norm <= 1e-14 or res_norm > best_res * 10:
            break
        sol = sol + raw_solve(res * d) * d
    if best is None:
        raise _Failure("singular Newton system")
    return best


# ---------------------------------------------------------------------------
# barrier machinery


def _log_slack(c: _Compiled, lc, y):
    """(slack r, arg values) for target <= sum w*log2(a) + tail."""
    tgt, terms, tvec, tc = lc
    args = [vec @ y + cc for _, vec, cc in terms]
    rhs = sum(w * math.log2(a) for (w, _, _), a in zip(terms, args) if a > 0)
    if any(a <= 0 for a in args):
        raise _DomainError
    return rhs + tvec @ y + tc - y[tgt], args


def _barrier_state(c: _Compiled, y):
    """Barrier value, gradient, and curvature data at a domain point.

    Returns (phi, grad, block_invs, rank_cols, rank_wts, diag_s) or raises
    _DomainError when y leaves the barrier domain.
    """
    phi = 0.0
    grad = np.zeros(c.nv)
    block_invs = []
    for b, d in enumerate(c.block_dims):
        x = c.get_block(y, b)
        try:
            ch = np.linalg.cholesky(x)
        except np.linalg.LinAlgError:
            raise _DomainError
        diag = np.diagonal(ch).real
        if np.any(diag <= 0):
            raise _DomainError
        phi -= 2.0 * float(np.sum(np.log(diag)))
        linv = np.linalg.solve(ch, np.eye(d, dtype=ch.dtype))
        xinv = linv.conj().T @ linv
        if not np.all(np.isfinite(xinv)):
            raise _DomainError
        xinv = (xinv + xinv.conj().T) / 2
        block_invs.append(xinv)
        o = c.block_off[b]
        grad[o : o + d * d] -= svec(xinv)
    rank_cols, rank_wts = [], []
    for vec, cc in c.ineq:
        s = -(vec @ y + cc)
        if s <= 0:
            raise _DomainError
        phi -= math.log(s)
        grad += vec / s
        rank_cols.append(vec)
        rank_wts.append(1.0 / (s * s))
    diag_s = np.zeros(c.nv)
    for i, lb, ub in c.bounds:
        if lb is not None:
            s = y[i] - lb
            if s <= 0:
                raise _DomainError
            phi -= math.log(s)
            grad[i] -= 1.0 / s
            diag_s[i] += 1.0 / (s * s)
        if ub is not None:
            s = ub - y[i]
            if s <= 0:
                raise _DomainError
            phi -= math.log(s)
            grad[i] += 1.0 / s
            diag_s[i] += 1.0 / (s * s)
    for lc in c.logcons:
        tgt, terms, tvec, tc = lc
        r, args = _log_slack(c, lc, y)
        if r <= 0:
            raise _DomainError
        grad_r = tvec.copy()
        grad_r[tgt] -= 1.0
        for (w, vec, _), a in zip(terms, args):
            grad_r += (w / (LOG2 * a)) * vec
            phi -= math.log(a)
            grad -= vec / a
            rank_cols.append(vec)
            rank_wts.append((1.0 / (a * a)) * (1.0 + w / (LOG2 * r)))
        phi -= math.log(r)
        grad -= grad_r / r
        rank_cols.append(grad_r)
        rank_wts.append(1.0 / (r * r))
    return phi, grad, block_invs, rank_cols, rank_wts, diag_s


def _barrier_value(c: _Compiled, y):
    phi = 0.0
    for b in range(len(c.block_dims)):
        x = c.get_block(y, b)
        try:
            ch = np.linalg.cholesky(x)
        except np.linalg.LinAlgError:
            raise _DomainError
        phi -= 2.0 * float(np.sum(np.log(np.diagonal(ch).real)))
    for vec, cc in c.ineq:
        s = -(vec @ y + cc)
        if s <= 0:
            raise _DomainError
        phi -= math.log(s)
    for i, lb, ub in c.bounds:
        if lb is not None:
            if y[i] - lb <= 0:
                raise _DomainError
            phi -= math.log(y[i] - lb)
        if ub is not None:
            if ub - y[i] <= 0:
                raise _DomainError
            phi -= math.log(ub - y[i])
    for lc in c.logcons:
        r, args = _log_slack(c, lc, y)
        if r <= 0:
            raise _DomainError
        phi -= math.log(r)
        phi -= sum(math.log(a) for a in args)
    return phi


def _unsvec_batch(vecs, d):
    """Inverse of _svec_batch: rows of `vecs` back to Hermitian matrices."""
    n = vecs.shape[0]
    iu = _triu_cache(d)
    m = d * (d - 1) // 2
    mats = np.zeros((n, d, d), dtype=np.complex128)
    idx = np.arange(d)
    mats[:, idx, idx] = vecs[:, :d]
    vals = (vecs[:, d : d + m] + 1j * vecs[:, d + m :]) / math.sqrt(2.0)
    mats[:, iu[0], iu[1]] = vals
    mats[:, iu[1], iu[0]] = vals.conj()
    return mats


def _h0inv_apply(c: _Compiled, block_vals, cols):
    """Apply the inverse block-barrier Hessian: per block, X G X."""
    out = cols.copy()
    for b, d in enumerate(c.block_dims):
        o = c.block_off[b]
        x = block_vals[b]
        mats = _unsvec_batch(cols[o : o + d * d].T, d)
        out[o : o + d * d] = _svec_batch((x[None, :, :] @ mats) @ x).T
    return out


DENSE_KKT_LIMIT = 320


def _apply_h(c: _Compiled, block_invs, g_mat, w_r, diag_s, vec):
    out = diag_s * vec
    if g_mat.shape[1]:
        out += g_mat @ (w_r * (g_mat.T @ vec))
    for b, d in enumerate(c.block_dims):
        o = c.block_off[b]
        g = unsvec(vec[o : o + d * d], d)
        xinv = block_invs[b]
        out[o : o + d * d] += svec(xinv @ g @ xinv)
    return out


def _svec_batch(mats):
    """svec applied across the leading axis of a stack of Hermitian matrices."""
    n, d, _ = mats.shape
    iu = _triu_cache(d)
    m = d * (d - 1) // 2
    out = np.empty((n, d * d))
    out[:, :d] = np.diagonal(mats, axis1=1, axis2=2).real
    vals = mats[:, iu[0], iu[1]]
    out[:, d : d + m] = math.sqrt(2.0) * vals.real
    out[:, d + m :] = math.sqrt(2.0) * vals.imag
    return out


def _dense_h(c: _Compiled, block_invs, g_mat, w_r, diag_s):
    h = np.diag(diag_s.copy())
    if g_mat.shape[1]:
        h += (g_mat * w_r) @ g_mat.T
    for b, d in enumerate(c.block_dims):
        o = c.block_off[b]
        xinv = block_invs[b]
        mapped = (xinv[None, :, :] @ _svec_basis(d)) @ xinv
        h[o : o + d * d, o : o + d * d] += _svec_batch(mapped).T
    return h


def _newton_step(c: _Compiled, y, t, grad_psi, block_invs, rank_cols, rank_wts, diag_s):
    """Solve the KKT system for the damped Newton direction.

    Small systems go through a dense pivoted solve of the full KKT matrix
    (robust to the extreme conditioning the log barriers produce). Large
    systems eliminate the block coordinates through a scaled Woodbury
    inverse and a Schur complement over scalars plus equality multipliers,
    followed by one iterative-refinement pass.
    """
    nb, ns = c.nb, c.ns
    n_eq = c.a_eq.shape[0]
    r_eq = c.b_eq - c.a_eq @ y
    q = len(rank_cols)
    g_mat = np.array(rank_cols).T if q else np.zeros((c.nv, 0))  # nv x q
    w_r = np.asarray(rank_wts)

    def fix_eq(v):
        # project out any equality defect an inexact solve left behind
        if n_eq == 0 or v is None:
            return v
        defect = r_eq - c.a_eq @ v
        if float(np.linalg.norm(defect)) <= 1e-12 * (1.0 + float(np.linalg.norm(r_eq))):
            return v
        aat = c.a_eq @ c.a_eq.T
        return v + c.a_eq.T @ _solve_dense(aat, defect)

    dy = None
    if c.nv + n_eq > DENSE_KKT_LIMIT and nb > 0:
        # read the block iterates straight from y: inverting block_invs back
        # would square the conditioning error of the near-singular blocks
        block_vals = []
        for b, d in enumerate(c.block_dims):
            o = c.block_off[b]
            x = unsvec(y[o : o + d * d], d)
            block_vals.append((x + x.conj().T) / 2)
        g_sc = g_mat * np.sqrt(w_r) if q else g_mat  # H = H0 (+) Gs Gs^T
        gb = g_sc[:nb]
        gs = g_sc[nb:]
        try:
            p_mat = _h0inv_apply(c, block_vals, gb) if q else np.zeros((nb, 0))
            if q:
                cap = np.eye(q) + gb.T @ p_mat
                cap_ch = _chol_psd(cap, "Woodbury capacitance")

            def hbb_inv(cols):
                base = _h0inv_apply(c, block_vals, cols)
                if not q:
                    return base
                z = np.linalg.solve(cap_ch.T, np.linalg.solve(cap_ch, p_mat.T @ cols))
                return base - p_mat @ z

            h_bs = gb @ gs.T if q else np.zeros((nb, ns))
            h_ss = np.diag(diag_s[nb:].copy()) + (gs @ gs.T if q else 0.0)
            a_b = c.a_eq[:, :nb]
            a_s = c.a_eq[:, nb:]
            top = np.concatenate([h_bs.T, a_b], axis=0)  # (ns+n_eq) x nb
            cols = np.concatenate([h_bs, a_b.T], axis=1)
            sol_cols = hbb_inv(cols)
            s_mat = np.zeros((ns + n_eq, ns + n_eq))
            s_mat[:ns, :ns] = h_ss
            s_mat[:ns, ns:] = a_s.T
            s_mat[ns:, :ns] = a_s
            s_mat -= top @ sol_cols

            def kkt_solve(rhs_b, rhs_s, rhs_eq):
                hinv_rb = hbb_inv(rhs_b[:, None])[:, 0]
                rhs = np.concatenate([rhs_s, rhs_eq]) - top @ hinv_rb
                sol = _solve_dense(s_mat, rhs)
                dy_s, nu = sol[:ns], sol[ns:]
                dy_b = hinv_rb - sol_cols[:, :ns] @ dy_s - sol_cols[:, ns:] @ nu
                return np.concatenate([dy_b, dy_s]), nu

            dy, nu = kkt_solve(-grad_psi[:nb], -grad_psi[nb:], r_eq)
            # iterative refinement against the exact KKT residual
            for _ in range(3):
                res_top = _apply_h(c, block_invs, g_mat, w_r, diag_s, dy) + (
                    c.a_eq.T @ nu if n_eq else 0.0
                ) + grad_psi
                res_eq = c.a_eq @ dy - r_eq if n_eq else np.zeros(0)
                corr, corr_nu = kkt_solve(-res_top[:nb], -res_top[nb:], -res_eq)
                dy = dy + corr
                nu = nu + corr_nu
                if np.all(np.isfinite(dy)) and -float(grad_psi @ dy) > 0:
                    break
            dy = fix_eq(dy)
            if not np.all(np.isfinite(dy)) or -float(grad_psi @ dy) <= 0:
                dy = None  # elimination lost accuracy; retry densely
        except _Failure:
            dy = None

    if dy is None:
        h = _dense_h(c, block_invs, g_mat, w_r, diag_s)
        kkt = np.zeros((c.nv + n_eq, c.nv + n_eq))
        kkt[: c.nv, : c.nv] = h
        kkt[: c.nv, c.nv :] = c.a_eq.T
        kkt[c.nv :, : c.nv] = c.a_eq
        rhs = np.concatenate([-grad_psi, r_eq])
        dy = fix_eq(_solve_dense(kkt, rhs)[: c.nv])
        if not np.all(np.isfinite(dy)) or -float(grad_psi @ dy) <= 0:
            # regularize until the step is a genuine descent direction
            scale = np.maximum(np.abs(np.diag(h)), 1.0)
            for lam in (1e-12, 1e-9, 1e-6, 1e-3, 1.0):
                kkt_reg = kkt.copy()
                kkt_reg[: c.nv, : c.nv] += np.diag(lam * scale)
                dy = fix_eq(_solve_dense(kkt_reg, rhs)[: c.nv])
                if np.all(np.isfinite(dy)) and -float(grad_psi @ dy) > 0:
                    break

    if not np.all(np.isfinite(dy)):
        raise _Failure("non-finite Newton direction")
    # Newton decrement: lambda^2 = -grad^T dy (= dy^T H dy for an exact step,
    # but far less prone to cancellation when H is extremely ill-conditioned)
    lam2 = -float(grad_psi @ dy)
    return dy, lam2, float(np.linalg.norm(r_eq))


def _center(c: _Compiled, y, t, max_steps, budget, stop_early=None):
    """Newton centering at barrier parameter t. Returns (y, steps used)."""
    steps = 0
    for _ in range(max_steps):
        if budget[0] <= 0:
            break
        phi, grad_phi, block_invs, rank_cols, rank_wts, diag_s = _barrier_state(c, y)
        grad_psi = -t * c.obj_vec + grad_phi
        dy, lam2, eq_res = _newton_step(
            c, y, t, grad_psi, block_invs, rank_cols, rank_wts, diag_s
        )
        if abs(lam2) / 2.0 <= 1e-10 and eq_res <= 1e-9:
            break
        if eq_res > 1e-9:
            # infeasible-start Newton: an exact step cuts the equality
            # residual by (1 - alpha); accept the largest domain-feasible
            # alpha that realizes most of that reduction
            alpha = 1.0
            ok = False
            while alpha > 1e-13:
                y_new = y + alpha * dy
                try:
                    _barrier_value(c, y_new)
                except _DomainError:
                    alpha *= 0.5
                    continue
                new_res = float(np.linalg.norm(c.b_eq - c.a_eq @ y_new))
                if new_res <= (1.0 - 0.25 * alpha) * eq_res + 1e-12:
                    ok = True
                    break
                alpha *= 0.5
            if not ok:
                break
        else:
            if lam2 <= 0:
                # inaccurate direction; no descent available from here
                break
            # backtracking line search on psi = -t c@y + phi, starting from
            # the damped step size the self-concordance theory suggests
            psi0 = -t * (c.obj_vec @ y) + phi
            slope = float(grad_psi @ dy)
            alpha = 1.0 if lam2 <= 0.25 else 1.0 / (1.0 + math.sqrt(lam2))
            ok = False
            while alpha > 1e-13:
                y_new = y + alpha * dy
                try:
                    psi_new = -t * (c.obj_vec @ y_new) + _barrier_value(c, y_new)
                except _DomainError:
                    alpha *= 0.5
                    continue
                if psi_new <= psi0 + 0.25 * alpha * slope + 1e-12 * abs(psi0):
                    ok = True
                    break
                alpha *= 0.5
            if not ok:
                break
        y = y + alpha * dy
        steps += 1
        budget[0] -= 1
        if stop_early is not None and stop_early(y):
            break
    return y, steps


def _default_start(c: _Compiled, eps=1e-3):
    y = np.zeros(c.nv)
    for b, d in enumerate(c.block_dims):
        o = c.block_off[b]
        y[o : o + d * d][:d] = eps
    for i, lb, ub in c.bounds:
        if lb is not None and ub is not None:
            y[i] = (lb + ub) / 2.0
        elif lb is not None:
            y[i] = lb + 1.0
        elif ub is not None:
            y[i] = ub - 1.0
    return y


def _strict_violation(c: _Compiled, y):
    """Largest violation of the relaxable constraints (<=0 means strictly ok)."""
    v = -math.inf
    for vec, cc in c.ineq:
        v = max(v, vec @ y + cc)
    for i, lb, ub in c.bounds:
        if lb is not None:
            v = max(v, lb - y[i])
        if ub is not None:
            v = max(v, y[i] - ub)
    for lc in c.logcons:
        r, _ = _log_slack(c, lc, y)
        v = max(v, -r)
    return v


def _phase1(p: ConvexProgram, c: _Compiled, y0, budget):
    """Find a strictly feasible point or report infeasibility.

    Adds a relaxation scalar tau to every inequality, bound, and log slack,
    then minimizes tau from an always-strictly-feasible start. Log-term
    arguments are domain constraints and are not relaxed; they must be
    positive at y0.
    """
    tau_name = "__tau__"
    tau0 = _strict_violation(c, y0) + 1.0
    # Box every scalar (widely, centered on the start) so the phase-I barrier
    # problem is bounded: with a free log-constraint target the relaxed
    # barrier would otherwise be unbounded below.
    boxed = []
    for i, (name, _, _) in enumerate(p.scalars):
        v = y0[c.scalar_idx[name]]
        span = 1e6 * max(1.0, abs(v))
        boxed.append((name, v - span, v + span))
    relaxed = ConvexProgram(
        psd_blocks=list(p.psd_blocks),
        scalars=boxed + [(tau_name, -1.0, tau0 + 1.0)],
        objective=AffineExpr(scalars={tau_name: -1.0}),
    )
    for con in p.affine_constraints:
        if con.relation == "<=":
            e = con.expr
            sc = dict(e.scalars)
            sc[tau_name] = sc.get(tau_name, 0.0) - 1.0
            relaxed.affine_constraints.append(
                AffineConstraint(AffineExpr(e.blocks, sc, e.const), "<=")
            )
        else:
            relaxed.affine_constraints.append(con)
    for name, lb, ub in p.scalars:
        if lb is not None:
            relaxed.affine_constraints.append(
                AffineConstraint(AffineExpr(scalars={name: -1.0, tau_name: -1.0}, const=lb), "<=")
            )
        if ub is not None:
            relaxed.affine_constraints.append(
                AffineConstraint(AffineExpr(scalars={name: 1.0, tau_name: -1.0}, const=-ub), "<=")
            )
    for con in p.logaffine_constraints:
        tail = con.tail
        sc = dict(tail.scalars)
        sc[tau_name] = sc.get(tau_name, 0.0) + 1.0
        relaxed.logaffine_constraints.append(
            LogAffineConstraint(con.target, con.terms, AffineExpr(tail.blocks, sc, tail.const))
        )

    cr = _Compiled(relaxed)
    yr = np.concatenate([y0, [tau0]])
    tau_idx = cr.scalar_idx[tau_name]

    t = max(1.0, cr.m_barrier / 10.0)
    while cr.m_barrier / t > 1e-9 and budget[0] > 0:
        yr, _ = _center(cr, yr, t, 50, budget, stop_early=lambda yy: yy[tau_idx] < -1e-9)
        if yr[tau_idx] < -1e-9:
            return yr[:-1], True
        t *= 10.0
    return yr[:-1], yr[tau_idx] < 1e-9


def solve(p: ConvexProgram, tolerance=1e-7, max_iterations=200, start=None):
    """Solve the program; never raises on infeasible or ill-conditioned input."""
    try:
        c = _Compiled(p)
    except ProgramError:
        raise
    budget = [int(max_iterations)]

    y = None
    if start is not None:
        y = _assemble_point(c, start)
    if y is None:
        y = _default_start(c)

    try:
        # log-term arguments are hard domain constraints
        for lc in c.logcons:
            _log_slack(c, lc, y)
    except _DomainError:
        return _solution(c, y, STATUS_NUMERICAL_FAILURE, math.inf, "start outside log domain")

    try:
        if _strict_violation(c, y) >= 0:
            y, feasible = _phase1(p, c, y, [int(max_iterations)])
            if not feasible:
                return _solution(c, y, STATUS_INFEASIBLE, math.inf, "phase-I found no interior point")

        path = []
        m = max(c.m_barrier, 1)
        t = max(1.0, m / 10.0)
        while True:
            y, _ = _center(c, y, t, 50, budget)
            path.append((t, float(c.obj_vec @ y + c.obj_const)))
            if c.a_eq.shape[0]:
                # inconsistent equalities are not relaxed anywhere; the
                # infeasible-start Newton leaves a large residual behind
                res = float(np.max(np.abs(c.a_eq @ y - c.b_eq)))
                scale = 1.0 + float(np.max(np.abs(c.b_eq)))
                if res > 1e-6 * scale:
                    return _solution(
                        c, y, STATUS_INFEASIBLE, math.inf,
                        "equality constraints unsatisfied",
                    )
            if m / t <= tolerance:
                status = STATUS_OPTIMAL
                break
            if budget[0] <= 0:
                status = STATUS_MAX_ITERATIONS
                break
            t *= 10.0
        sol = _solution(c, y, status, m / t, "")
        sol.path = path
        return sol
    except (_Failure, _DomainError) as exc:
        return _solution(c, y, STATUS_NUMERICAL_FAILURE, math.inf, str(exc) or "barrier failure")


def _assemble_point(c: _Compiled, start):
    blocks, scalars = start
    y = np.zeros(c.nv)
    for b, name in enumerate(c.block_names):
        d = c.block_dims[b]
        o = c.block_off[b]
        y[o : o + d * d] = svec(np.asarray(blocks[name], dtype=np.complex128))
    for name in c.scalar_names:
        y[c.scalar_idx[name]] = float(scalars[name])
    return y


def _solution(c: _Compiled, y, status, gap, message):
    blocks, scalars = c.split_solution(y)
    return ConvexSolution(
        blocks=blocks,
        scalars=scalars,
        objective=float(c.obj_vec @ y + c.obj_const),
        status=status,
        gap=float(gap),
        message=message,
    )


def evaluate_constraints(p: ConvexProgram, blocks, scalars):
    """Per-constraint slack report at a point (positive slack = satisfied)."""
    c = _Compiled(p)
    y = _assemble_point(c, (blocks, scalars))
    entries = []
    violations = [0.0]
    for j, (vec, cc) in enumerate(c.ineq):
        s = -(vec @ y + cc)
        entries.append(("affine<=", j, float(s)))
        violations.append(-s)
    for j in range(c.a_eq.shape[0]):
        resid = c.a_eq[j] @ y - c.b_eq[j]
        entries.append(("affine=", j, float(-abs(resid))))
        violations.append(abs(resid))
    for i, lb, ub in c.bounds:
        name = c.scalar_names[i - c.nb]
        if lb is not None:
            entries.append(("bound", f"{name}>={lb}", float(y[i] - lb)))
            violations.append(lb - y[i])
        if ub is not None:
            entries.append(("bound", f"{name}<={ub}", float(ub - y[i])))
            violations.append(y[i] - ub)
    for j, lc in enumerate(c.logcons):
        tgt, terms, tvec, tc = lc
        args = [vec @ y + cc for _, vec, cc in terms]
        if all(a > 0 for a in args):
            rhs = sum(w * math.log2(a) for (w, _, _), a in zip(terms, args))
            r = rhs + tvec @ y + tc - y[tgt]
        else:
            r = -math.inf
        entries.append(("log", j, float(r)))
        violations.append(-r)
    for b, name in enumerate(c.block_names):
        x = c.get_block(y, b)
        lam_min = float(np.linalg.eigvalsh(x)[0])
        entries.append(("psd", name, lam_min))
        violations.append(-lam_min)
    return ConstraintReport(entries=entries, max_violation=float(max(violations)))


def dump_program(p: ConvexProgram, path):
    """Write a plain-text rendering of the program, one constraint per line."""
    c = _Compiled(p)

    def render(vec, const):
        parts = []
        for b, name in enumerate(c.block_names):
            d = c.block_dims[b]
            o = c.block_off[b]
            seg = vec[o : o + d * d]
            if np.any(seg):
                parts.append(f"Tr(C@{name}) C_fro={np.linalg.norm(seg):.6g}")
        for name in c.scalar_names:
            v = vec[c.scalar_idx[name]]
            if v:
                parts.append(f"{v:+.6g}*{name}")
        if const or not parts:
            parts.append(f"{const:+.6g}")
        return " ".join(parts)

    lines = [f"blocks: {', '.join(f'{n}({d})' for n, d in p.psd_blocks) or '-'}"]
    lines.append(
        "scalars: " + (", ".join(f"{n}[{lb},{ub}]" for n, lb, ub in p.scalars) or "-")
    )
    lines.append(f"maximize: {render(c.obj_vec, c.obj_const)}")
    for vec, cc in c.ineq:
        lines.append(f"ineq: {render(vec, cc)} <= 0")
    for j in range(c.a_eq.shape[0]):
        lines.append(f"eq: {render(c.a_eq[j], -c.b_eq[j])} == 0")
    for tgt, terms, tvec, tc in c.logcons:
        name = c.scalar_names[tgt - c.nb]
        rhs = " + ".join(f"{w:g}*log2({render(vec, cc)})" for w, vec, cc in terms)
        lines.append(f"logcon: {name} <= {rhs} + {render(tvec, tc)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
