"""Majorization checks, the A/B interval decomposition and transfer operators.

Given nonincreasing x, y with the Holmstedt-type domination

    (sum_{k<=n} y_k^p)^(1/p) + n^(1/alpha) (sum_{k>=n} y_k^q)^(1/q)
        <= (same expression for x)                    for every n,

every index n satisfies ``A(n) = sum_{k<=n}(x_k^p - y_k^p) >= 0`` or
``B(n) = sum_{k>=n}(x_k^q - y_k^q) >= 0``.  On maximal intervals of A the
head sums of x dominate those of y, on maximal intervals of B the tail sums
do.  Greedy transports turn these block certificates into operators T, S
with y = Tx + Sx.

The transports move p-th (resp. q-th) power mass.  If ``pi[k, j]`` is the
mass that y_k receives from x_j, the operator entry is ``pi[k, j] /
y_k^p * y_k / x_j``; each row is a convex combination of rescaled inputs,
so ``(Tx)_k = y_k`` exactly.  For the tail transport with q >= 1 Jensen's
inequality gives ``||S||_q^q <= max_j sum_k pi[k, j] / x_j^q <= C``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .opnorms import OperatorMatrix, couple_norm, norm_l0, norm_linf, norm_report
from .seqcore import (
    EXACT_TOL,
    CertifiedValue,
    CoupleParams,
    Seq,
    SeqLike,
    Status,
    Verdict,
    combine,
    dilate,
    dominance_start,
    rearrange,
)


class TransferError(RuntimeError):
    """A greedy transport ran out of supply (a certificate does not hold)."""


class CoverageError(ValueError):
    """Some index lies in neither A nor B."""

    def __init__(self, index: int):
        super().__init__(f"index {index} lies in neither A nor B (hypothesis violated)")
        self.index = index


# ---------------------------------------------------------------------------
# helpers


def _as_seq(v) -> SeqLike:
    if isinstance(v, SeqLike):
        return v
    return rearrange(v)


def _horizon(x: SeqLike, y: SeqLike, horizon: int | None) -> int:
    if horizon is not None:
        return int(horizon)
    lx, ly = x.support_len(), y.support_len()
    if lx is not None and ly is not None:
        return max(lx, ly, 1)
    # power tails: cover the prefixes and the point where y drops below x
    j = dominance_start(y, x)
    base = max(len(getattr(x, "prefix", ())), len(getattr(y, "prefix", ())), 1)
    return max(base, j or base)


def _values(s: SeqLike, H: int) -> np.ndarray:
    if isinstance(s, Seq):
        a = np.zeros(H)
        L = min(len(s.prefix), H)
        a[:L] = s.prefix[:L]
        if len(s.prefix) < H and not s.is_finite:
            k = np.arange(len(s.prefix) + 1, H + 1, dtype=float)
            a[len(s.prefix):] = s.tail.c * k ** (-s.tail.sigma)
        return a
    return s.values(H)


def _beyond(s: SeqLike, H: int, q: float) -> CertifiedValue:
    """sum_{k>H} s_k^q (exact zero for finite sequences inside the horizon)."""
    n = s.support_len()
    if n is not None and n <= H:
        return CertifiedValue.exact(0.0)
    return s.tail_sum(H + 1, q)


def _tol(*arrays) -> float:
    scale = max([1.0] + [float(np.max(np.abs(a))) for a in arrays if np.size(a)])
    return EXACT_TOL * scale


def _cert_tol(xs: np.ndarray, ys: np.ndarray, base: float) -> float:
    # block sums are formed in a different order than A(n), B(n)
    scale = max(1.0, float(np.sum(xs)), float(np.sum(ys)))
    return max(base, 1e-10 * scale)


def _status_of(lo: float, hi: float, exact: bool, tol: float) -> Status:
    if exact:
        return Status.PASS if lo >= -tol else Status.FAIL
    if lo >= 0:
        return Status.PASS
    if hi < 0:
        return Status.FAIL
    return Status.UNDECIDED


def _scan(diff_lo: np.ndarray, diff_hi: np.ndarray, exact: bool, tol: float, detail=None) -> Verdict:
    """Verdict for 'diff(n) >= 0 for every n' with 1-based witness."""
    detail = dict(detail or {})
    if len(diff_lo) == 0:
        return Verdict(Status.PASS, 0.0, None, detail)
    worst = int(np.argmin(diff_lo))
    margin = float(diff_lo[worst])
    status = Status.PASS
    for n in range(len(diff_lo)):
        st = _status_of(diff_lo[n], diff_hi[n], exact, tol)
        if st is Status.FAIL:
            return Verdict(Status.FAIL, float(diff_lo[n]), n + 1, detail)
        if st is Status.UNDECIDED:
            status = Status.UNDECIDED
    return Verdict(status, margin, worst + 1, detail)


# ---------------------------------------------------------------------------
# majorization hypotheses


def head_majorizes(x, y, p: float, horizon: int | None = None) -> Verdict:
    """sum_{k<=n} y_k^p <= sum_{k<=n} x_k^p for all n <= horizon.

    When y_j <= x_j for all j beyond the horizon (finite y, or comparable
    power tails) the differences only grow, so the check covers every n;
    ``detail['all_n']`` records whether that argument applied.
    """
    x, y = _as_seq(x), _as_seq(y)
    H = _horizon(x, y, horizon)
    xv, yv = _values(x, H), _values(y, H)
    diff = np.cumsum(xv ** p - yv ** p)
    j = dominance_start(y, x)
    all_n = j is not None and j <= H + 1
    return _scan(diff, diff, True, _tol(np.cumsum(xv ** p)), {"horizon": H, "all_n": all_n})


def tail_majorizes_shifted(x, y, q: float, C: float = 1.0, horizon: int | None = None) -> Verdict:
    """sum_{k>=n} y_k^q <= C sum_{k >= [(n-1)/C]+1} x_k^q for n <= horizon."""
    if C < 1:
        raise ValueError("C must be >= 1")
    x, y = _as_seq(x), _as_seq(y)
    H = _horizon(x, y, horizon)
    xv, yv = _values(x, H), _values(y, H)
    sx = np.concatenate((np.cumsum((xv ** q)[::-1])[::-1], [0.0]))
    sy = np.concatenate((np.cumsum((yv ** q)[::-1])[::-1], [0.0]))
    bx, by = _beyond(x, H, q), _beyond(y, H, q)
    n = np.arange(1, H + 1)
    start = np.floor((n - 1) / C).astype(int) + 1
    core = C * sx[start - 1] - sy[n - 1]
    lo = core + C * float(bx.lo) - float(by.hi)
    hi = core + C * float(bx.hi) - float(by.lo)
    exact = bx.is_exact and by.is_exact
    return _scan(lo, hi, exact, _tol(C * sx), {"horizon": H, "C": C})


def holmstedt_sums(s: SeqLike, couple: CoupleParams, H: int) -> tuple:
    """(P_p s)_n + n^(1/alpha) (Q_q s)_n for n = 1..H as (lo, hi, exact)."""
    p, q = couple.p, couple.q
    v = _values(s, H)
    head = np.cumsum(v ** p) ** (1.0 / p)
    b = _beyond(s, H, q)
    suffix = np.cumsum((v ** q)[::-1])[::-1]
    w = np.arange(1, H + 1) ** (1.0 / couple.alpha)
    lo = head + w * (suffix + float(b.lo)) ** (1.0 / q)
    hi = head + w * (suffix + float(b.hi)) ** (1.0 / q)
    return lo, hi, b.is_exact


def holmstedt_majorizes(x, y, couple: CoupleParams, horizon: int | None = None) -> Verdict:
    """Per-n comparison of the discrete Holmstedt sums of y and x."""
    if not (couple.p > 0 and math.isfinite(couple.q)):
        raise ValueError("needs 0 < p < q < inf")
    x, y = _as_seq(x), _as_seq(y)
    H = _horizon(x, y, horizon)
    xlo, xhi, ex = holmstedt_sums(x, couple, H)
    ylo, yhi, ey = holmstedt_sums(y, couple, H)
    return _scan(xlo - yhi, xhi - ylo, ex and ey, _tol(xhi), {"horizon": H})


# ---------------------------------------------------------------------------
# A/B partition


@dataclass(frozen=True)
class IntervalPartition:
    a_blocks: tuple
    b_blocks: tuple
    horizon: int

    def to_json(self) -> dict:
        return {"a_blocks": [list(b) for b in self.a_blocks],
                "b_blocks": [list(b) for b in self.b_blocks],
                "horizon": self.horizon}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    def in_a(self) -> np.ndarray:
        return _mask(self.a_blocks, self.horizon)

    def in_b(self) -> np.ndarray:
        return _mask(self.b_blocks, self.horizon)


def _mask(blocks, H) -> np.ndarray:
    m = np.zeros(H, bool)
    for n, k in blocks:
        m[n - 1:k] = True
    return m


def _blocks(mask: np.ndarray) -> tuple:
    out, n = [], len(mask)
    i = 0
    while i < n:
        if mask[i]:
            j = i
            while j + 1 < n and mask[j + 1]:
                j += 1
            out.append((i + 1, j + 1))
            i = j + 1
        else:
            i += 1
    return tuple(out)


def ab_functions(x, y, couple: CoupleParams, H: int):
    """A(n) and B(n) for n = 1..H; B includes the certified mass beyond H."""
    p, q = couple.p, couple.q
    xv, yv = _values(x, H), _values(y, H)
    A = np.cumsum(xv ** p - yv ** p)
    core = np.cumsum((xv ** q - yv ** q)[::-1])[::-1]
    bx, by = _beyond(x, H, q), _beyond(y, H, q)
    B_lo = core + float(bx.lo) - float(by.hi)
    B_hi = core + float(bx.hi) - float(by.lo)
    tol_a = _tol(np.cumsum(xv ** p))
    tol_b = _tol(np.cumsum(xv ** q))
    return A, B_lo, B_hi, bx.is_exact and by.is_exact, tol_a, tol_b


def ab_partition(x, y, couple: CoupleParams, horizon: int | None = None) -> IntervalPartition:
    """Maximal intervals of {A(n) >= 0} and {B(n) >= 0} up to the horizon.

    Ties (A(n) = 0 up to rounding) count as members.  Indices where B is
    undecided count as outside B.  Raises CoverageError at the first index
    outside A and B.
    """
    if not (couple.p > 0 and math.isfinite(couple.q)):
        raise ValueError("needs 0 < p < q < inf")
    x, y = _as_seq(x), _as_seq(y)
    H = _horizon(x, y, horizon)
    A, B_lo, B_hi, exact, tol_a, tol_b = ab_functions(x, y, couple, H)
    in_a = A >= -tol_a
    in_b = B_lo >= (-tol_b if exact else 0.0)
    uncovered = np.nonzero(~(in_a | in_b))[0]
    if len(uncovered):
        raise CoverageError(int(uncovered[0]) + 1)
    return IntervalPartition(_blocks(in_a), _blocks(in_b), H)


@dataclass(frozen=True)
class BlockCertificate:
    block: tuple
    kind: str  # "head" or "tail"
    margin: float
    margins: tuple = ()
    detail: dict = field(default_factory=dict)

    @property
    def valid(self) -> bool:
        return self.margin >= -self.detail.get("tol", EXACT_TOL)


def block_certificates(x, y, partition: IntervalPartition, couple: CoupleParams) -> list:
    """Head certificates on A-blocks and tail certificates on B-blocks.

    Margins are recomputed by direct summation over each block (they do
    not reuse A(n), B(n)).  A tail block ending at the horizon is treated
    as the truncated block; the mass beyond the horizon is reported in
    ``detail['beyond']``.
    """
    x, y = _as_seq(x), _as_seq(y)
    H = partition.horizon
    p, q = couple.p, couple.q
    xv, yv = _values(x, H), _values(y, H)
    # the partition was decided with whole-horizon sums, so certificates
    # accept at least the same rounding slack
    tol_a = _tol(np.cumsum(xv ** p))
    tol_b = _tol(np.cumsum(xv ** q))
    certs = []
    for n, m in partition.a_blocks:
        xs, ys = xv[n - 1:m] ** p, yv[n - 1:m] ** p
        margins = np.cumsum(xs) - np.cumsum(ys)
        tol = _cert_tol(xs, ys, tol_a)
        certs.append(BlockCertificate((n, m), "head", float(margins.min()),
                                      tuple(float(v) for v in margins), {"tol": tol}))
    for n, m in partition.b_blocks:
        xs, ys = xv[n - 1:m] ** q, yv[n - 1:m] ** q
        margins = np.cumsum(xs[::-1])[::-1] - np.cumsum(ys[::-1])[::-1]
        tol = _cert_tol(xs, ys, tol_b)
        detail = {"tol": tol}
        if m == H:
            bx, by = _beyond(x, H, q), _beyond(y, H, q)
            detail["beyond"] = (float(bx.lo) - float(by.hi), float(bx.hi) - float(by.lo))
        certs.append(BlockCertificate((n, m), "tail", float(margins.min()),
                                      tuple(float(v) for v in margins), detail))
    return certs


def certificates_to_csv(certs) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["block_start", "block_end", "kind", "margin"])
    for c in certs:
        w.writerow([c.block[0], c.block[1], c.kind, repr(float(c.margin))])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# greedy transports


def _plan_to_entries(plan: dict, xb: np.ndarray, yb: np.ndarray) -> list:
    """Operator entries (k, j, value) from a power-mass plan."""
    out = []
    rows: dict = {}
    for (k, j), mass in plan.items():
        rows.setdefault(k, []).append((j, mass))
    for k, items in rows.items():
        total = sum(m for _, m in items)
        if total <= 0 or yb[k] == 0:
            continue
        for j, mass in items:
            out.append((k, j, (mass / total) * yb[k] / xb[j]))
    return out


def _draw(k: int, need: float, supply: np.ndarray, order, plan: dict, tol: float):
    last = None
    for j in order:
        if need <= 0:
            break
        avail = supply[j]
        if avail <= 0:
            continue
        take = min(need, avail)
        plan[(k, j)] = plan.get((k, j), 0.0) + take
        supply[j] -= take
        need -= take
        last = j
    if need > tol:
        raise TransferError(f"transport short by {need:.3e} at local index {k + 1}")
    if need > 0:
        # rounding residue: charge it to the last supplier used
        if last is None:
            cands = [j for j in order]
            if not cands:
                # rounding-level demand with nothing to draw from; the
                # caller's residual check sees whatever is left unserved
                return
            last = cands[0]
        plan[(k, last)] = plan.get((k, last), 0.0) + need


def head_transfer_entries(xb: np.ndarray, yb: np.ndarray, p: float) -> list:
    """Local entries of T with T xb = yb under head majorization at p.

    Demands are served left to right; y_k draws p-mass from x_k first and
    then from the nearest earlier entries with unused mass.  Under head
    majorization the unused mass among x_1..x_k always covers y_k^p.
    """
    xb, yb = np.asarray(xb, float), np.asarray(yb, float)
    n = len(xb)
    supply = np.where(xb > 0, xb ** p, 0.0)
    demand = yb ** p
    tol = 1e-9 * max(1.0, float(np.sum(supply)))
    plan: dict = {}
    for k in range(n):
        if demand[k] <= 0:
            continue
        _draw(k, demand[k], supply, [j for j in range(k, -1, -1) if xb[j] > 0], plan, tol)
    return _plan_to_entries(plan, xb, yb)


def tail_transfer_entries(xb: np.ndarray, yb: np.ndarray, q: float, C: float = 1.0) -> list:
    """Local entries of S with S xb = yb under shifted tail majorization.

    Demands are served right to left; y_k may use q-mass from x_j with
    j >= [(k-1)/C] + 1 (supplies inflated by C), preferring j = k, then
    entries to the right, then entries to the left.  The admissible sets
    grow as k decreases, so the hypothesis is exactly Hall's condition and
    any such greedy succeeds.
    """
    xb, yb = np.asarray(xb, float), np.asarray(yb, float)
    n = len(xb)
    supply = np.where(xb > 0, C * xb ** q, 0.0)
    demand = yb ** q
    tol = 1e-9 * max(1.0, float(np.sum(supply)))
    plan: dict = {}
    for k in range(n - 1, -1, -1):
        if demand[k] <= 0:
            continue
        lo = int(math.floor(k / C))  # 0-based form of [(k'-1)/C] + 1 with k' = k + 1
        order = [k] + list(range(k + 1, n)) + list(range(k - 1, lo - 1, -1))
        order = [j for j in order if xb[j] > 0]
        _draw(k, demand[k], supply, order, plan, tol)
    return _plan_to_entries(plan, xb, yb)


def _embed(entries, offset: int, size: int) -> OperatorMatrix:
    trip = [(k + offset, j + offset, v) for k, j, v in entries]
    return OperatorMatrix.from_triplets(size, size, trip)


def _block_arrays(x, y, block, size=None):
    x, y = _as_seq(x), _as_seq(y)
    n, m = block
    H = size or m
    xv, yv = _values(x, max(H, m)), _values(y, max(H, m))
    return xv[n - 1:m], yv[n - 1:m], max(H, m)


def build_head_transfer(x, y, p: float, block: tuple, size: int | None = None) -> OperatorMatrix:
    """T acting on block = (n, m) (1-based, inclusive) with T chi x = chi y."""
    xb, yb, H = _block_arrays(x, y, block, size)
    return _embed(head_transfer_entries(xb, yb, p), block[0] - 1, H)


def build_tail_transfer(x, y, q: float, C: float, block: tuple, size: int | None = None) -> OperatorMatrix:
    """S acting on block = (n, m) with S chi x = chi y (C-shifted tails)."""
    xb, yb, H = _block_arrays(x, y, block, size)
    return _embed(tail_transfer_entries(xb, yb, q, C), block[0] - 1, H)


# ---------------------------------------------------------------------------
# the split y = Tx + Sx


@dataclass(frozen=True)
class SplitResult:
    T: OperatorMatrix
    S: OperatorMatrix
    residual: float
    partition: IntervalPartition
    certificates: list
    norms: dict

    @property
    def exceedances(self) -> dict:
        return {k: v for k, v in self.norms.items() if k.endswith("_exceeds") and v}


def split_operator(x, y, couple: CoupleParams, horizon: int | None = None) -> SplitResult:
    """Operators T, S with y = Tx + Sx on 1..horizon.

    T is block diagonal over the A-blocks, S is block diagonal over the
    B-blocks with its rows in A zeroed.  Measured norms are compared with
    8^(1/p) for T on (l^p, l^inf) and 18 for S on (l^0, l^q).
    """
    if couple.q < 1:
        raise ValueError("the tail transport needs q >= 1")
    x, y = _as_seq(x), _as_seq(y)
    part = ab_partition(x, y, couple, horizon)
    certs = block_certificates(x, y, part, couple)
    bad = [c for c in certs if not c.valid]
    if bad:
        c = bad[0]
        raise TransferError(f"{c.kind} certificate fails on block {c.block} (margin {c.margin:.3e})")
    H = part.horizon
    p, q = couple.p, couple.q
    xv, yv = _values(x, H), _values(y, H)
    T = OperatorMatrix.zeros(H, H)
    for blk in part.a_blocks:
        T = T + _embed(head_transfer_entries(xv[blk[0] - 1:blk[1]], yv[blk[0] - 1:blk[1]], p), blk[0] - 1, H)
    in_a = part.in_a()
    trip = []
    for blk in part.b_blocks:
        ents = tail_transfer_entries(xv[blk[0] - 1:blk[1]], yv[blk[0] - 1:blk[1]], q, 1.0)
        trip += [(k + blk[0] - 1, j + blk[0] - 1, v) for k, j, v in ents if not in_a[k + blk[0] - 1]]
    S = OperatorMatrix.from_triplets(H, H, trip)
    residual = float(np.max(np.abs(yv - T.apply(xv) - S.apply(xv)))) if H else 0.0
    tp = norm_report(T, p)
    tinf = norm_linf(T)
    s0 = norm_l0(S)
    sq = norm_report(S, q)
    t_couple = max(tp.hi, tinf.hi)
    s_couple = max(s0.hi, sq.hi)
    norms = {
        "T_lp": tp.hi, "T_linf": tinf.hi, "T_couple": t_couple,
        "T_target": 8 ** (1 / p), "T_exceeds": t_couple > 8 ** (1 / p) + 1e-12,
        "S_l0": s0.hi, "S_lq": sq.hi, "S_lq_lo": sq.lo, "S_couple": s_couple,
        "S_target": 18.0, "S_exceeds": s_couple > 18 + 1e-12,
    }
    return SplitResult(T, S, residual, part, certs, norms)


# ---------------------------------------------------------------------------
# the explicit (l^0, l^inf) orbit operator


def orbit_op_l0_linf(x, y, horizon: int | None = None) -> OperatorMatrix:
    """S = 2 Mult(y_k / (2 (D_2 x)_k)) D_2 with Sx = y, for finite y.

    Requires y_k <= 2 (D_2 x)_k; the l^0 norm is at most 2 (each column
    of D_2 has two entries) and the l^inf norm is max_k y_k / (D_2 x)_k.
    """
    x, y = _as_seq(x), _as_seq(y)
    ly = y.support_len()
    if ly is None:
        raise ValueError("y must be finitely supported")
    H = horizon or max(ly, 1)
    d2 = np.array([x.value((k + 1) // 2) for k in range(1, H + 1)])
    yv = _values(y, H)
    trip = []
    for k in range(H):
        if yv[k] == 0:
            continue
        if d2[k] == 0:
            raise ValueError(f"y_{k + 1} > 0 but (D_2 x)_{k + 1} = 0")
        if yv[k] > 2 * d2[k] * (1 + 1e-15):
            raise ValueError(f"y_{k + 1} exceeds 2 (D_2 x)_{k + 1}")
        trip.append((k, k // 2, yv[k] / d2[k]))
    # columns cover the support of x so that S applies to x directly
    lx = x.support_len()
    cols = max((H + 1) // 2, lx if lx is not None else 0, 1)
    return OperatorMatrix.from_triplets(H, cols, trip)


def orbit_multipliers(x, y, H: int) -> np.ndarray:
    x, y = _as_seq(x), _as_seq(y)
    d2 = np.array([x.value((k + 1) // 2) for k in range(1, H + 1)])
    yv = _values(y, H)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(yv > 0, yv / (2 * d2), 0.0)


# ---------------------------------------------------------------------------
# S_q conditions


@dataclass(frozen=True)
class SqCheck:
    equal_mass: Verdict
    head_domination: Verdict
    lsz_tail: Verdict
    replay: dict | None = None
    u: np.ndarray | None = None
    z: np.ndarray | None = None

    @property
    def status(self) -> Status:
        return combine([self.equal_mass, self.head_domination])


def _pad(a: np.ndarray, n: int) -> np.ndarray:
    return np.concatenate((a, np.zeros(n - len(a))))


def sq_check(x, y, q: float, r: float, replay: bool = True) -> SqCheck:
    """Equal q-mass and head q-domination of y* over x*, plus a proof replay.

    The replay takes u = 2 D_2 x* and z = y* with its first entry raised
    so that sum z^q = sum u^q.  Given the tail condition sum_{n>=m} y*^q <=
    sum_{n>=m} u^q, the head inequality sum_{n<=m} u^q <= sum_{n<=m} z*^q
    follows for all m, and |y| <= |z| gives ||y||_r <= ||z||_r.
    """
    xs, ys = rearrange(np.asarray(x, float)), rearrange(np.asarray(y, float))
    n = max(len(xs.prefix), len(ys.prefix), 1)
    xv, yv = _pad(xs.prefix, n), _pad(ys.prefix, n)
    sx, sy = float(np.sum(xv ** q)), float(np.sum(yv ** q))
    tol = EXACT_TOL * max(1.0, sx, sy)
    eq = Verdict(Status.PASS if abs(sx - sy) <= tol else Status.FAIL, -abs(sx - sy), None,
                 {"sum_x": sx, "sum_y": sy})
    head = _scan(np.cumsum(yv ** q) - np.cumsum(xv ** q), np.cumsum(yv ** q) - np.cumsum(xv ** q),
                 True, tol)
    tail_d = np.cumsum((xv ** q)[::-1])[::-1] - np.cumsum((yv ** q)[::-1])[::-1]
    lsz = _scan(tail_d, tail_d, True, tol)
    if not replay:
        return SqCheck(eq, head, lsz)
    u = 2 * np.asarray(dilate(xs, 2).prefix, float) if len(xs.prefix) else np.zeros(0)
    m = max(len(u), n)
    u, yv2 = _pad(u, m), _pad(yv, m)
    su = float(np.sum(u ** q))
    z = yv2.copy()
    extra = su - float(np.sum(yv2 ** q))
    tol_u = EXACT_TOL * max(1.0, su)
    tails_d = np.cumsum((u ** q)[::-1])[::-1] - np.cumsum((yv2 ** q)[::-1])[::-1]
    pre = _scan(tails_d, tails_d, True, tol_u)
    if extra < -tol_u:
        return SqCheck(eq, head, lsz, {"tail_condition": pre, "derived": None,
                                       "reason": "u carries less q-mass than y"}, u, None)
    z[0] = (z[0] ** q + max(extra, 0.0)) ** (1.0 / q)
    derived_d = np.cumsum(z ** q) - np.cumsum(u ** q)
    derived = _scan(derived_d, derived_d, True, tol_u)
    if math.isinf(r):
        ny, nz = float(np.max(yv2, initial=0.0)), float(np.max(z, initial=0.0))
    else:
        ny, nz = float(np.sum(yv2 ** r) ** (1 / r)), float(np.sum(z ** r) ** (1 / r))
    lattice = Verdict(Status.PASS if ny <= nz + EXACT_TOL * max(1, nz) else Status.FAIL, nz - ny)
    return SqCheck(eq, head, lsz, {"tail_condition": pre, "derived": derived, "lattice": lattice},
                   u, z)
