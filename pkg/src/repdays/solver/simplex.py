"""Two-phase bounded-variable revised simplex.

Works on ``min c'x  s.t.  A x (<=|=|>=) b,  lb <= x <= ub`` with a dense
explicit basis inverse, so it is meant for desk-scale problems (a few
hundred rows).  Rows and columns are equilibrated before the solve and the
result is mapped back to the caller's units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import sparse

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration-limit"

_AT_LB, _AT_UB, _FREE, _BASIC = 0, 1, 2, 3


@dataclass
class SimplexResult:
    status: str
    x: Optional[np.ndarray]
    objective: float
    duals: Optional[np.ndarray]
    iterations: int


def _nz_minmax(M):
    """Per-major-axis min and max of |entries| over stored nonzeros."""
    k = M.shape[0] if M.format == "csr" else M.shape[1]
    lo = np.ones(k)
    hi = np.ones(k)
    counts = np.diff(M.indptr)
    has = counts > 0
    if M.nnz:
        starts = M.indptr[:-1][has]
        lo[has] = np.minimum.reduceat(M.data, starts)
        hi[has] = np.maximum.reduceat(M.data, starts)
    return lo, hi


def _equilibrate(A: sparse.csr_matrix, passes: int = 6):
    """Geometric-mean row/column scaling rounded to powers of two."""
    m, n = A.shape
    r = np.ones(m)
    s = np.ones(n)
    B = abs(A).tocsr().astype(float)
    B.eliminate_zeros()
    if B.nnz == 0:
        return r, s
    for _ in range(passes):
        lo, hi = _nz_minmax((sparse.diags(r) @ B @ sparse.diags(s)).tocsr())
        r = r / np.sqrt(lo * hi)
        lo, hi = _nz_minmax((sparse.diags(r) @ B @ sparse.diags(s)).tocsc())
        s = s / np.sqrt(lo * hi)
    r = np.exp2(np.round(np.log2(r)))
    s = np.exp2(np.round(np.log2(s)))
    return r, s


class _Simplex:
    def __init__(self, A, b, c, lb, ub, max_iter, tol):
        self.A = A.tocsc()
        self.b = b
        self.m, self.ntot = A.shape
        self.c = c
        self.lb = lb.copy()
        self.ub = ub.copy()
        self.max_iter = max_iter
        self.tol = tol
        self.iterations = 0

    def _refactor(self):
        B = self.A[:, self.basis].toarray()
        self.Binv = np.linalg.inv(B)
        xn = self.x.copy()
        xn[self.basis] = 0.0
        self.x[self.basis] = self.Binv @ (self.b - self.A @ xn)

    def run(self, cost) -> str:
        tol = self.tol
        degenerate_streak = 0
        bland = False
        since_refactor = 0
        while True:
            if since_refactor >= 60:
                self._refactor()
                since_refactor = 0
            if self.iterations >= self.max_iter:
                return ITERATION_LIMIT
            y = cost[self.basis] @ self.Binv
            d = cost - self.A.T @ y
            st = self.status
            movable = self.ub > self.lb
            elig = movable & (
                ((st == _AT_LB) & (d < -tol))
                | ((st == _AT_UB) & (d > tol))
                | ((st == _FREE) & (np.abs(d) > tol))
            )
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                self.y = y
                return OPTIMAL
            if bland:
                q = int(cand[0])
            else:
                q = int(cand[np.argmax(np.abs(d[cand]))])
            direction = 1.0 if d[q] < 0 else -1.0

            col = self.A[:, q].toarray().ravel()
            alpha = self.Binv @ col
            delta = direction * alpha  # x_B moves by -t * delta
            xb = self.x[self.basis]
            lbB = self.lb[self.basis]
            ubB = self.ub[self.basis]
            t_best = self.ub[q] - self.lb[q]
            leave = -1
            leave_to_ub = False
            dec = delta > tol
            inc = delta < -tol
            ratios = np.full(self.m, math.inf)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios[dec] = (xb[dec] - lbB[dec]) / delta[dec]
                ratios[inc] = (ubB[inc] - xb[inc]) / (-delta[inc])
            ratios = np.where(np.isnan(ratios), math.inf, np.maximum(ratios, 0.0))
            rmin = ratios.min() if self.m else math.inf
            if rmin < t_best:
                ties = np.flatnonzero(ratios <= rmin + 1e-12)
                if bland:
                    leave = int(ties[np.argmin(np.asarray(self.basis)[ties])])
                else:
                    leave = int(ties[np.argmax(np.abs(alpha[ties]))])
                t_best = float(ratios[leave])
                leave_to_ub = bool(inc[leave])
            if math.isinf(t_best):
                return UNBOUNDED

            self.iterations += 1
            if t_best <= 1e-12:
                degenerate_streak += 1
                if degenerate_streak > 50:
                    bland = True
            else:
                degenerate_streak = 0
                bland = False

            self.x[q] += direction * t_best
            self.x[self.basis] = xb - t_best * delta
            if leave < 0:
                self.status[q] = _AT_UB if direction > 0 else _AT_LB
                continue
            out = self.basis[leave]
            self.x[out] = self.ub[out] if leave_to_ub else self.lb[out]
            self.status[out] = _AT_UB if leave_to_ub else _AT_LB
            self.status[q] = _BASIC
            self.basis[leave] = q
            piv = alpha[leave]
            row = self.Binv[leave] / piv
            self.Binv -= np.outer(alpha, row)
            self.Binv[leave] = row
            since_refactor += 1


def solve(A: sparse.spmatrix, senses: Sequence[str], b: np.ndarray, c: np.ndarray,
          lb: np.ndarray, ub: np.ndarray, max_iter: Optional[int] = None,
          tol: float = 1e-9) -> SimplexResult:
    """Solve an LP with the internal simplex; ``duals`` are row prices ``y``
    such that ``c - A'y`` gives the reduced costs."""
    A = sparse.csr_matrix(A, dtype=float)
    m, n = A.shape
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    if np.any(lb > ub):
        return SimplexResult(INFEASIBLE, None, math.nan, None, 0)

    r, s = _equilibrate(A)
    As = (sparse.diags(r) @ A @ sparse.diags(s)).tocsr()
    bs = r * b
    cs = c * s
    kappa = float(np.abs(cs).max()) if n and np.abs(cs).max() > 0 else 1.0
    cs = cs / kappa
    lbs = lb / s
    ubs = ub / s

    # slacks: row i reads a_i x + s_i = b_i
    slo = np.zeros(m)
    shi = np.zeros(m)
    for i, sense in enumerate(senses):
        if sense == "<=":
            shi[i] = math.inf
        elif sense == ">=":
            slo[i] = -math.inf
    x0 = np.where(np.isfinite(lbs), lbs, np.where(np.isfinite(ubs), ubs, 0.0))
    resid = bs - As @ x0
    slack_ok = (resid >= slo - tol) & (resid <= shi + tol)
    need_art = np.flatnonzero(~slack_ok)
    k = need_art.size
    sign = np.sign(resid[need_art])
    sign[sign == 0] = 1.0
    art = sparse.csr_matrix((sign, (need_art, np.arange(k))), shape=(m, k))
    Afull = sparse.hstack([As, sparse.identity(m, format="csr"), art], format="csr")
    ntot = n + m + k
    lo = np.concatenate([lbs, slo, np.zeros(k)])
    hi = np.concatenate([ubs, shi, np.full(k, math.inf)])

    if max_iter is None:
        max_iter = max(10000, 30 * (m + n))
    S = _Simplex(Afull, bs, None, lo, hi, max_iter, tol)
    S.x = np.concatenate([x0, np.zeros(m), np.zeros(k)])
    S.status = np.empty(ntot, dtype=int)
    S.status[:n] = np.where(np.isfinite(lbs), _AT_LB, np.where(np.isfinite(ubs), _AT_UB, _FREE))
    S.status[n:n + m] = np.where(np.isfinite(slo), _AT_LB, _AT_UB)
    S.status[n + m:] = _AT_LB
    basis = []
    art_pos = {int(i): a for a, i in enumerate(need_art)}
    for i in range(m):
        if i in art_pos:
            basis.append(n + m + art_pos[i])
        else:
            basis.append(n + i)
    S.basis = basis
    S.status[basis] = _BASIC
    S._refactor()

    if k:
        cost1 = np.zeros(ntot)
        cost1[n + m:] = 1.0
        st = S.run(cost1)
        if st == ITERATION_LIMIT:
            return SimplexResult(ITERATION_LIMIT, None, math.nan, None, S.iterations)
        infeas = S.x[n + m:].sum()
        if infeas > 1e-7 * max(1.0, np.abs(bs).max()):
            return SimplexResult(INFEASIBLE, None, math.nan, None, S.iterations)
        S.ub[n + m:] = 0.0
        S.x[n + m:] = np.clip(S.x[n + m:], 0.0, 0.0)
        S._refactor()

    cost2 = np.concatenate([cs, np.zeros(m + k)])
    st = S.run(cost2)
    if st != OPTIMAL:
        return SimplexResult(st, None, math.nan, None, S.iterations)
    S._refactor()
    xs = S.x[:n]
    x = np.clip(xs * s, lb, ub)
    y = kappa * r * S.y
    return SimplexResult(OPTIMAL, x, float(c @ x), y, S.iterations)
