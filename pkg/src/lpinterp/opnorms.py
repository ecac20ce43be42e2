"""Finite matrices and their induced norms on l^0, l^q (q <= 1), l^1, l^p, l^inf.

Exact formulas:

* l^q, 0 < q <= 1: the norm is the largest column q-norm.  Since
  ``|sum_k a_k|^q <= sum_k |a_k|^q`` for q <= 1, ``||Mx||_q^q <= sum_k
  |x_k|^q ||m_k||_q^q``; basis vectors attain the bound.
* l^0: the largest column support.  ``supp(Mx)`` lies in the union of the
  supports of the columns hit by ``supp(x)``, so ``|supp(Mx)| <= |supp(x)|
  * max_k |supp(m_k)|``; basis vectors attain it.
* l^1 and l^inf: largest absolute column and row sums.

For 1 < p < inf the norm is reported as an enclosure: the Schur bound
``||M||_1^(1/p) ||M||_inf^(1-1/p)`` above, power ascent below.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .seqcore import INF, CoupleParams, Status, Verdict


class OperatorMatrix:
    """Real rows x cols matrix stored sparsely without explicit zeros."""

    __slots__ = ("_m",)

    def __init__(self, entries):
        m = sp.csc_matrix(entries, dtype=float)
        m.eliminate_zeros()
        if m.nnz and not np.all(np.isfinite(m.data)):
            raise ValueError("matrix entries must be finite")
        m.sort_indices()
        object.__setattr__(self, "_m", m)

    def __setattr__(self, name, value):
        raise AttributeError("OperatorMatrix is immutable")

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "OperatorMatrix":
        return cls(sp.csc_matrix((rows, cols)))

    @classmethod
    def identity(cls, n: int) -> "OperatorMatrix":
        return cls(sp.identity(n, format="csc"))

    @classmethod
    def from_triplets(cls, rows: int, cols: int, triplets) -> "OperatorMatrix":
        trip = list(triplets)
        if not trip:
            return cls.zeros(rows, cols)
        j, k, v = zip(*trip)
        j, k = np.asarray(j, int), np.asarray(k, int)
        if np.any(j < 0) or np.any(j >= rows) or np.any(k < 0) or np.any(k >= cols):
            raise ValueError("triplet index out of range")
        return cls(sp.coo_matrix((np.asarray(v, float), (j, k)), shape=(rows, cols)))

    @property
    def shape(self):
        return self._m.shape

    @property
    def sparse(self) -> sp.csc_matrix:
        return self._m.copy()

    def toarray(self) -> np.ndarray:
        return self._m.toarray()

    @property
    def nnz(self) -> int:
        return self._m.nnz

    def apply(self, x) -> np.ndarray:
        """M x with x zero-extended or truncated to the column count."""
        x = np.asarray(x, float).reshape(-1)
        cols = self.shape[1]
        if len(x) < cols:
            x = np.concatenate((x, np.zeros(cols - len(x))))
        elif len(x) > cols:
            if np.any(x[cols:] != 0):
                raise ValueError("input has mass beyond the operator's support horizon")
            x = x[:cols]
        return self._m @ x

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            return OperatorMatrix(self._m @ other._m)
        return self.apply(other)

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return OperatorMatrix(self._m + other._m)

    def __mul__(self, c: float) -> "OperatorMatrix":
        return OperatorMatrix(self._m * float(c))

    __rmul__ = __mul__

    def to_json(self) -> dict:
        coo = self._m.tocoo()
        order = np.lexsort((coo.col, coo.row))
        trip = [[int(coo.row[i]), int(coo.col[i]), float(coo.data[i])] for i in order]
        return {"rows": int(self.shape[0]), "cols": int(self.shape[1]), "triplets": trip}

    @classmethod
    def from_json(cls, obj: dict) -> "OperatorMatrix":
        try:
            rows, cols, trip = int(obj["rows"]), int(obj["cols"]), obj["triplets"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError("matrix JSON needs rows, cols and triplets") from exc
        if rows < 0 or cols < 0 or not isinstance(trip, list):
            raise ValueError("bad matrix JSON")
        for t in trip:
            if not (isinstance(t, list) and len(t) == 3):
                raise ValueError("each triplet must be [row, col, value]")
        return cls.from_triplets(rows, cols, trip)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


@dataclass(frozen=True)
class NormReport:
    space: str
    lo: float
    hi: float
    exact: bool

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("lo > hi")
        if self.exact and self.lo != self.hi:
            raise ValueError("an exact report needs lo == hi")

    @property
    def value(self) -> float:
        return self.hi


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["space", "lo", "hi", "exact"])
    for r in reports:
        w.writerow([r.space, repr(float(r.lo)), repr(float(r.hi)), str(bool(r.exact)).lower()])
    return buf.getvalue()


def _exact(space: str, v: float) -> NormReport:
    return NormReport(space, float(v), float(v), True)


def column_qnorms(M: OperatorMatrix, q: float) -> np.ndarray:
    """(sum_j |M_jk|^q)^(1/q) for every column k."""
    sums = np.asarray(abs(M._m).power(q).sum(axis=0)).reshape(-1)
    return sums ** (1.0 / q)


def norm_lq_exact(M: OperatorMatrix, q: float) -> NormReport:
    if not 0 < q <= 1:
        raise ValueError("the column formula holds only for 0 < q <= 1")
    cols = column_qnorms(M, q)
    tag = "l1" if q == 1 else f"lq({q:g})"
    return _exact(tag, cols.max() if len(cols) else 0.0)


def norm_l0(M: OperatorMatrix) -> NormReport:
    counts = np.diff(M._m.indptr)
    return _exact("l0", counts.max() if len(counts) else 0)


def norm_l1(M: OperatorMatrix) -> NormReport:
    return _exact("l1", norm_lq_exact(M, 1.0).hi)


def norm_linf(M: OperatorMatrix) -> NormReport:
    rows = np.asarray(abs(M._m).sum(axis=1)).reshape(-1)
    return _exact("linf", rows.max() if len(rows) else 0.0)


def _dual(v: np.ndarray, r: float) -> np.ndarray:
    return np.sign(v) * np.abs(v) ** (r - 1)


def _pnorm(v, p):
    return float(np.sum(np.abs(v) ** p) ** (1.0 / p))


def norm_lp_bounds(M: OperatorMatrix, p: float, iters: int = 50, starts: int = 8,
                   seed: int = 0) -> NormReport:
    """Enclosure of the l^p -> l^p norm for 1 < p < inf."""
    if not 1 < p < INF:
        raise ValueError("need 1 < p < inf")
    tag = f"lp({p:g})"
    m = M._m
    n = m.shape[1]
    if n == 0 or m.nnz == 0:
        return _exact(tag, 0.0)
    hi = norm_l1(M).hi ** (1.0 / p) * norm_linf(M).hi ** (1.0 - 1.0 / p)
    # diagonal (or monomial) matrices: the norm is the largest |entry|
    counts_c = np.diff(m.indptr)
    counts_r = np.bincount(m.indices, minlength=m.shape[0])
    if counts_c.max() <= 1 and counts_r.max() <= 1:
        return _exact(tag, float(np.max(np.abs(m.data))))
    pd = p / (p - 1)
    rng = np.random.default_rng(seed)
    mt = m.T.tocsc()
    lo = max(float(np.max(column_qnorms(M, p))), 0.0)  # basis vectors
    for s in range(starts):
        x = np.abs(rng.standard_normal(n)) if s == 0 else rng.standard_normal(n)
        if s == 0:
            x = np.asarray(abs(m).sum(axis=0)).reshape(-1) + 1e-3 * x
        x /= _pnorm(x, p)
        for _ in range(iters):
            y = m @ x
            ny = _pnorm(y, p)
            if ny == 0:
                break
            lo = max(lo, ny)
            z = mt @ _dual(y / ny, p)
            if not np.any(z):
                break
            x = _dual(z, pd)
            x /= _pnorm(x, p)
        y = m @ x
        lo = max(lo, _pnorm(y, p))
    lo = min(lo, hi)
    if hi - lo <= 1e-15 * hi:
        return _exact(tag, hi)
    return NormReport(tag, lo, hi, False)


def norm_report(M: OperatorMatrix, e: float) -> NormReport:
    """Report for the l^e -> l^e norm, dispatching on the exponent."""
    if e == 0:
        return norm_l0(M)
    if 0 < e <= 1:
        return norm_lq_exact(M, e)
    if math.isinf(e):
        return norm_linf(M)
    return norm_lp_bounds(M, e)


def couple_norm(M: OperatorMatrix, couple: CoupleParams):
    """Endpoint reports and their max-combined enclosure."""
    r0, r1 = norm_report(M, couple.p), norm_report(M, couple.q)
    combined = NormReport(f"couple({couple})", max(r0.lo, r1.lo), max(r0.hi, r1.hi),
                          r0.exact and r1.exact)
    return r0, r1, combined


def check_extension_theorem(M: OperatorMatrix, q: float, r: float) -> Verdict:
    """Theta_r(M) <= Theta_q(M) for 0 < q < r <= 1, column by column."""
    if not 0 < q < r <= 1:
        raise ValueError("need 0 < q < r <= 1")
    cq, cr = column_qnorms(M, q), column_qnorms(M, r)
    slack = cq - cr
    tol = 1e-12 * np.maximum(1.0, cq)
    bad = np.nonzero(slack < -tol)[0]
    theta_q = float(cq.max()) if len(cq) else 0.0
    theta_r = float(cr.max()) if len(cr) else 0.0
    detail = {"theta_q": theta_q, "theta_r": theta_r}
    margin = float(slack.min()) if len(slack) else 0.0
    if len(bad):
        return Verdict(Status.FAIL, margin, int(bad[0]), detail)
    if theta_r > theta_q + 1e-12 * max(1.0, theta_q):
        return Verdict(Status.FAIL, theta_q - theta_r, None, detail)
    return Verdict(Status.PASS, margin, None, detail)


def probe_lower_bound(M: OperatorMatrix, e: float, trials: int = 1000, seed: int = 0) -> float:
    """max ||Mx||/||x|| over random x (a lower bound for the induced norm)."""
    rng = np.random.default_rng(seed)
    n = M.shape[1]
    best = 0.0
    dense = M.toarray()
    for _ in range(trials):
        x = rng.standard_normal(n) * (rng.random(n) < rng.uniform(0.2, 1.0))
        if not np.any(x):
            continue
        y = dense @ x
        if e == 0:
            num, den = np.count_nonzero(np.abs(y) > 1e-300), np.count_nonzero(x)
        elif math.isinf(e):
            num, den = np.max(np.abs(y)), np.max(np.abs(x))
        else:
            num, den = _pnorm(y, e), _pnorm(x, e)
        best = max(best, num / den)
    return float(best)
