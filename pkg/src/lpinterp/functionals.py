"""E- and K-functionals for the sequence couples (l^p, l^q).

For p = 0 the K-functional is computed exactly from the E-functional,
``K(t) = min_m (m + t E(m))``.  For p > 0 and finite sequences
:func:`k_exact_oracle` minimises ``||u||_p + t ||x - u||_q`` numerically;
:func:`holmstedt` gives the two-sided Holmstedt estimate.

Restricting the oracle to ``0 <= u <= x`` loses nothing for x >= 0: replacing
``u`` by its coordinatewise clamp ``min(max(u, 0), x)`` decreases both
``|u_k|`` and ``|x_k - u_k|`` in every coordinate, hence both quasi-norms.
"""
from __future__ import annotations

import csv
import heapq
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .seqcore import (
    INF,
    MP,
    CertifiedValue,
    CoupleParams,
    PowerTail,
    Seq,
    SeqLike,
    Status,
    Verdict,
    ZeroTail,
    certified_le,
    dominance_start,
    power_range_sum,
)

# ---------------------------------------------------------------------------
# curves


@dataclass(frozen=True)
class KCurve:
    grid: np.ndarray
    values: np.ndarray
    method: str
    lo: np.ndarray
    hi: np.ndarray

    def check_invariants(self, tol: float = 1e-9) -> dict:
        """Discrete monotonicity, concavity and K(t)/t monotonicity."""
        t, k = np.asarray(self.grid, float), np.asarray(self.values, float)
        scale = max(1.0, float(np.max(np.abs(k)))) if len(k) else 1.0
        nondecreasing = bool(np.all(np.diff(k) >= -tol * scale))
        slopes = np.diff(k) / np.diff(t) if len(t) > 1 else np.array([])
        concave = bool(np.all(np.diff(slopes) <= tol * np.maximum(1.0, np.abs(slopes[:-1])))) if len(slopes) > 1 else True
        ratio = k / t
        ratio_ok = bool(np.all(np.diff(ratio) <= tol * np.maximum(1.0, ratio[:-1])))
        return {"nondecreasing": nondecreasing, "concave": concave, "k_over_t_nonincreasing": ratio_ok}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "K", "method", "lo", "hi"])
        order = np.argsort(self.grid, kind="stable")
        for i in order:
            w.writerow([repr(float(self.grid[i])), repr(float(self.values[i])), self.method,
                        repr(float(self.lo[i])), repr(float(self.hi[i]))])
        return buf.getvalue()


@dataclass(frozen=True)
class PiecewiseConvex:
    """Piecewise linear function through ``breakpoints`` (sorted by t)."""

    breakpoints: tuple

    def __call__(self, t):
        ts = np.array([b[0] for b in self.breakpoints], float)
        vs = np.array([b[1] for b in self.breakpoints], float)
        t_arr = np.asarray(t, float)
        if np.any(t_arr < ts[0]) or np.any(t_arr > ts[-1]):
            raise ValueError("evaluation point outside the hull's range")
        out = np.interp(t_arr, ts, vs)
        return float(out) if np.ndim(out) == 0 else out


def convex_minorant(points: Iterable[tuple]) -> PiecewiseConvex:
    """Greatest convex minorant (lower convex hull) of a point set."""
    pts = [(float(t), float(v)) for t, v in points]
    if not pts:
        raise ValueError("need at least one point")
    ts = [p[0] for p in pts]
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise ValueError("t-values must be strictly increasing")
    hull: list = []
    for p in pts:
        while len(hull) >= 2:
            (t1, v1), (t2, v2) = hull[-2], hull[-1]
            # drop the middle point when it lies on or above the chord
            if (v2 - v1) * (p[0] - t1) >= (p[1] - v1) * (t2 - t1):
                hull.pop()
            else:
                break
        hull.append(p)
    return PiecewiseConvex(tuple(hull))


# ---------------------------------------------------------------------------
# grids


def dyadic_grid(k: int = 20) -> np.ndarray:
    return 2.0 ** np.arange(-k, k + 1, dtype=float)


def default_grid(couple: CoupleParams, k: int = 20, n_max: int = 64) -> np.ndarray:
    """Dyadic 2^-k..2^k together with the breakpoints n^(1/alpha)."""
    g = list(dyadic_grid(k))
    if couple.alpha is not None:
        g += [n ** (1.0 / couple.alpha) for n in range(1, n_max + 1)]
    return np.unique(np.array(g, float))


def parse_grid(spec: str, couple: CoupleParams) -> np.ndarray:
    """Grid spec: ``dyadic:K``, ``default:K`` or comma-separated values."""
    spec = spec.strip()
    if spec.startswith("dyadic:"):
        return dyadic_grid(int(spec.split(":", 1)[1]))
    if spec.startswith("default"):
        k = int(spec.split(":", 1)[1]) if ":" in spec else 20
        return default_grid(couple, k)
    vals = np.array([float(v) for v in spec.split(",") if v.strip()], float)
    if len(vals) == 0 or np.any(vals <= 0):
        raise ValueError("grid values must be positive")
    return np.unique(vals)


# ---------------------------------------------------------------------------
# E-functional and K from E


def _require_p0(couple: CoupleParams):
    if couple.p != 0:
        raise ValueError("E-functional is defined here for p = 0 couples")


def e_functional(s: SeqLike, t: float, couple: CoupleParams) -> CertifiedValue:
    """E(t) = (sum_{k >= [t]+1} s_k^q)^(1/q), or s_{[t]+1} when q = inf."""
    _require_p0(couple)
    if t < 0:
        raise ValueError("t must be nonnegative")
    m = int(math.floor(t)) + 1
    if math.isinf(couple.q):
        return CertifiedValue.exact(s.value(m))
    if isinstance(s, Seq) and isinstance(s.tail, ZeroTail):
        e = _finite_e(s, couple.q)
        return CertifiedValue.exact(float(e[m - 1]) if m - 1 < len(e) else 0.0)
    return s.tail_sum(m, couple.q).power(1.0 / couple.q).widen()


@dataclass(frozen=True)
class KFromE:
    value: CertifiedValue
    argmin: int
    horizon: int  # every m >= horizon has m > hi(value)


_M_CAP = 50_000_000
_GAP_BOXES = 20_000  # box budget for the optional oracle gap bound
_NEAR = 4096


def _finite_e(s: Seq, q: float) -> np.ndarray:
    """E(m) for m = 0..L where L is the support length (E(L) = 0)."""
    a = np.asarray(s.prefix, float)
    a = a[a > 0]
    if math.isinf(q):
        return np.concatenate((a, [0.0]))
    suffix = np.cumsum((a ** q)[::-1])[::-1]
    return np.concatenate((suffix, [0.0])) ** (1.0 / q)


def k_from_e_certificate(s: SeqLike, t: float, q: float) -> KFromE:
    """K(t; l^0, l^q) = min_m (m + t E(m)) with its termination index."""
    if t <= 0:
        raise ValueError("t must be positive")
    if isinstance(s, Seq) and isinstance(s.tail, ZeroTail):
        e = _finite_e(s, q)
        vals = np.arange(len(e)) + t * e
        m = int(np.argmin(vals))
        v = float(vals[m])
        return KFromE(CertifiedValue.exact(v), m, len(e))
    if isinstance(s, Seq):
        return _k_from_e_power(s, t, q)
    return _k_from_e_generic(s, t, q)


def k_from_e(s: SeqLike, t: float, q: float) -> CertifiedValue:
    return k_from_e_certificate(s, t, q).value


def _k_from_e_power(s: Seq, t: float, q: float) -> KFromE:
    tail: PowerTail = s.tail
    L = len(s.prefix)
    best_lo = best_hi = INF
    arg = 0
    # m = 0..L-1: prefix suffix sums plus the certified analytic tail
    if L:
        a = np.asarray(s.prefix, float)
        if math.isinf(q):
            e_lo = e_hi = a
        else:
            tl = s.tail_sum(L + 1, q)
            suffix = np.cumsum((a ** q)[::-1])[::-1]
            e_lo = (suffix + tl.lo) ** (1.0 / q) * (1 - 1e-13)
            e_hi = (suffix + tl.hi) ** (1.0 / q) * (1 + 1e-13)
        m = np.arange(L)
        lo, hi = m + t * e_lo, m + t * e_hi
        i = int(np.argmin(hi))
        best_lo, best_hi, arg = float(lo.min()), float(hi[i]), i
    c, sig = tail.c, tail.sigma
    e_exp = sig * q if not math.isinf(q) else None
    if e_exp is not None and e_exp <= 1:
        raise ValueError("sequence is not in l^q (sigma*q <= 1)")
    start = L
    if e_exp is not None:
        # the first _NEAR thresholds use explicit terms plus a certified remainder
        j = np.arange(L + 1, L + _NEAR + 1, dtype=float)
        rem = power_range_sum(e_exp, L + _NEAR + 1).scale(MP.mpf(c) ** q)
        terms = c ** q * j ** (-e_exp)
        suffix = np.cumsum(terms[::-1])[::-1]
        e_lo = (suffix + float(rem.lo)) ** (1.0 / q) * (1 - 1e-13)
        e_hi = (suffix + float(rem.hi)) ** (1.0 / q) * (1 + 1e-13)
        m = j - 1
        lo, hi = m + t * e_lo, m + t * e_hi
        i = int(np.argmin(hi))
        best_lo = min(best_lo, float(lo.min()))
        if hi[i] < best_hi:
            best_hi, arg = float(hi[i]), int(m[i])
        start = L + _NEAR
    chunk = 1 << 16
    while start <= best_hi:
        if start > _M_CAP:
            raise RuntimeError("K horizon exceeds the enumeration cap")
        m = np.arange(start, start + chunk, dtype=float)
        u = m + 1
        if e_exp is None:
            ev = c * u ** (-sig)
            e_lo, e_hi = ev * (1 - 4e-16), ev * (1 + 4e-16)
        else:
            cq = c ** q
            s_lo = cq * (u ** (1 - e_exp) / (e_exp - 1) + u ** (-e_exp) / 2)
            s_hi = cq * (u - 0.5) ** (1 - e_exp) / (e_exp - 1)
            e_lo = s_lo ** (1.0 / q) * (1 - 1e-13)
            e_hi = s_hi ** (1.0 / q) * (1 + 1e-13)
        lo, hi = m + t * e_lo, m + t * e_hi
        i = int(np.argmin(hi))
        best_lo = min(best_lo, float(lo.min()))
        if hi[i] < best_hi:
            best_hi, arg = float(hi[i]), int(m[i])
        start += chunk
    return KFromE(CertifiedValue(min(best_lo, best_hi), best_hi), arg, start)


def _k_from_e_generic(s: SeqLike, t: float, q: float, cap: int = 200_000) -> KFromE:
    best_lo = best_hi = INF
    arg = 0
    m = 0
    while m <= best_hi:
        if m > cap:
            raise RuntimeError("K horizon exceeds the enumeration cap")
        if math.isinf(q):
            e = CertifiedValue.exact(s.value(m + 1))
        else:
            e = s.tail_sum(m + 1, q).power(1.0 / q).widen()
        lo, hi = m + t * e.lo, m + t * e.hi
        best_lo = min(best_lo, lo)
        if hi < best_hi:
            best_hi, arg = hi, m
        m += 1
    return KFromE(CertifiedValue(min(best_lo, best_hi), best_hi), arg, m)


def k_breakpoints(s: Seq, q: float) -> np.ndarray:
    """Kinks of t -> min_m (m + t E(m)) for a finite sequence."""
    e = _finite_e(s, q)
    pts = []
    for i in range(len(e)):
        for j in range(i + 1, len(e)):
            if e[i] > e[j]:
                pts.append((j - i) / (e[i] - e[j]))
    return np.unique(np.array(pts, float))


# ---------------------------------------------------------------------------
# exact K oracle for p > 0


@dataclass(frozen=True)
class OracleResult:
    value: float
    u: np.ndarray
    lower_bound: float | None = None
    gap: float | None = None

    def __float__(self):
        return self.value


def _objective(x: np.ndarray, t: float, p: float, q: float) -> Callable:
    def f(U: np.ndarray) -> np.ndarray:
        U = np.atleast_2d(U)
        head = np.sum(U ** p, axis=1) ** (1.0 / p)
        v = x - U
        if math.isinf(q):
            tail = np.max(v, axis=1)
        else:
            tail = np.sum(np.maximum(v, 0.0) ** q, axis=1) ** (1.0 / q)
        return head + t * tail

    return f


def _starts(x: np.ndarray, t: float, couple: CoupleParams, rng: np.random.Generator) -> np.ndarray:
    n = len(x)
    rows = []
    if n <= 10:
        corners = ((np.arange(2 ** n)[:, None] >> np.arange(n)) & 1).astype(float)
    else:
        corners = rng.integers(0, 2, size=(64, n)).astype(float)
        corners = np.vstack([corners, np.zeros(n), np.ones(n)])
    rows.append(corners * x)
    rows.append(np.linspace(0, 1, 9)[:, None] * x)
    # Holmstedt split: keep the top t^alpha cells, the fractional one partially
    s = t ** couple.alpha
    order = np.argsort(-x, kind="stable")
    for cut in (s, math.floor(s), math.ceil(s)):
        u = np.zeros(n)
        k = int(min(math.floor(cut), n))
        u[order[:k]] = x[order[:k]]
        if k < n:
            u[order[k]] = (cut - math.floor(cut)) * x[order[k]]
        rows.append(u[None, :])
    return np.vstack(rows)


def _line_min(phi, lo: np.ndarray, hi: np.ndarray, iters: int = 60) -> np.ndarray:
    """Vectorised golden-section search of unimodal phi on [lo, hi]."""
    g = (math.sqrt(5) - 1) / 2
    a, b = lo.copy(), hi.copy()
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = phi(c), phi(d)
    for _ in range(iters):
        left = fc < fd
        a, b = np.where(left, a, c), np.where(left, d, b)
        new = np.where(left, b - g * (b - a), a + g * (b - a))
        fnew = phi(new)
        c, d, fc, fd = (np.where(left, new, d), np.where(left, c, new),
                        np.where(left, fnew, fd), np.where(left, fc, fnew))
    return (a + b) / 2


def _coordinate_descent(U: np.ndarray, x: np.ndarray, t: float, p: float, q: float,
                        sweeps: int, rtol: float) -> np.ndarray:
    """Projected coordinate descent applied to every row of U at once."""
    f = _objective(x, t, p, q)
    n = len(x)
    convex = p >= 1 and q >= 1
    grid = np.linspace(0.0, 1.0, 33)
    cur = f(U)
    for _ in range(sweeps):
        before = cur.copy()
        for k in range(n):
            xk = x[k]
            if xk == 0:
                continue
            Uk = U.copy()

            def phi(s, Uk=Uk, k=k):
                Uk[:, k] = s
                return f(Uk)

            if convex:
                cand = _line_min(phi, np.zeros(len(U)), np.full(len(U), xk))
            else:
                vals = np.stack([phi(np.full(len(U), g * xk)) for g in grid], axis=1)
                i = np.argmin(vals, axis=1)
                lo = grid[np.maximum(i - 1, 0)] * xk
                hi = grid[np.minimum(i + 1, len(grid) - 1)] * xk
                cand = _line_min(phi, lo, hi, iters=40)
            for s in (cand, np.zeros(len(U)), np.full(len(U), xk), U[:, k].copy()):
                Uk[:, k] = s
                val = f(Uk)
                better = val < cur
                U[better, k] = s[better]
                cur = np.where(better, val, cur)
        # pattern move: rescale the remainder x - u
        V = x - U
        for lam in (0.0, 0.5, 0.9, 1.1, 2.0):
            W = np.clip(x - lam * V, 0, x)
            val = f(W)
            better = val < cur
            U[better] = W[better]
            cur = np.where(better, val, cur)
        if np.all(before - cur <= rtol * np.maximum(before, 1e-300)):
            break
    return U


def k_exact_oracle(x: Seq, t: float, couple: CoupleParams, *, gap: bool | None = None,
                   starts: int = 16, sweeps: int = 500, rtol: float = 1e-10,
                   seed: int = 0) -> OracleResult:
    """Numerical K(t, x; l^p, l^q) for a finite x and p > 0.

    For p <= 1 and q <= 1 the objective is concave in u, so the minimum is
    attained at a vertex of the box [0, x]; all vertices are enumerated when
    the support has at most 16 entries.  Otherwise the best ``starts``
    candidates (box corners, proportional splits and the Holmstedt split)
    are refined by coordinate descent.  With ``gap`` (default: support of
    size <= 4) a branch-and-bound lower bound is reported.
    """
    if couple.p == 0:
        raise ValueError("p = 0: use k_from_e")
    if not isinstance(x, Seq) or not x.is_finite:
        raise ValueError("the oracle needs a finite sequence")
    if t <= 0 or not math.isfinite(t):
        raise ValueError("t must be positive and finite")
    full = np.asarray(x.prefix, float)
    mask = full > 0
    xs = full[mask]
    p, q = couple.p, couple.q
    n = len(xs)
    if n == 0:
        return OracleResult(0.0, np.zeros_like(full), 0.0, 0.0)
    f = _objective(xs, t, p, q)
    rng = np.random.default_rng(seed)
    if p <= 1 and q <= 1 and n <= 16:
        V = ((np.arange(2 ** n)[:, None] >> np.arange(n)) & 1).astype(float) * xs
        vals = f(V)
        i = int(np.argmin(vals))
        best_u, best = V[i], float(vals[i])
    else:
        S = _starts(xs, t, couple, rng)
        vals = f(S)
        _, idx = np.unique(np.round(S, 14), axis=0, return_index=True)
        idx = idx[np.argsort(vals[idx], kind="stable")][:starts]
        U = _coordinate_descent(S[idx].copy(), xs, t, p, q, sweeps, rtol)
        vals = f(U)
        i = int(np.argmin(vals))
        best_u, best = U[i], float(vals[i])
    u_full = np.zeros_like(full)
    u_full[mask] = best_u
    lb = g = None
    if gap is None:
        gap = n <= 4
    if gap:
        lb = bnb_minimize(xs, t, couple, step=None, upper=best, max_boxes=_GAP_BOXES)[2]
        g = max(0.0, best - lb)
    return OracleResult(best, u_full, lb, g)


def bnb_minimize(x: np.ndarray, t: float, couple: CoupleParams, step: float | None = None,
                 upper: float | None = None, tol: float = 1e-10, max_boxes: int = 200_000):
    """Branch and bound for min ||u||_p + t||x-u||_q over 0 <= u <= x.

    The head term increases and the tail term decreases in every
    coordinate, so ``P(lo) + t Q(hi)`` bounds the objective on a box from
    below.  With ``step`` the search runs over the grid ``{0, step, 2step,
    ..., x_k}`` per coordinate and returns its exact minimum (up to
    ``tol``); without it boxes are continuous and the returned lower bound
    certifies the continuous minimum.  Returns (best, best_u, lower_bound).
    """
    x = np.asarray(x, float)
    p, q = couple.p, couple.q
    f = _objective(x, t, p, q)
    n = len(x)
    if step is not None:
        counts = np.floor(x / step + 1e-9).astype(np.int64)
        exact_end = np.abs(counts * step - x) <= 1e-12 * np.maximum(1, x)
        n_pts = counts + np.where(exact_end, 1, 2)

        def coords(idx):
            u = idx * step
            return np.where(idx >= n_pts - 1, x, np.minimum(u, x))

        lo0, hi0 = np.zeros(n, np.int64), n_pts - 1
    else:
        def coords(v):
            return v

        lo0, hi0 = np.zeros(n), x.copy()

    concave = p <= 1 and q <= 1
    convex = p >= 1 and q >= 1
    corner_bits = ((np.arange(2 ** n)[:, None] >> np.arange(n)) & 1).astype(bool) if concave else None

    def _tail(u):
        v = np.maximum(x - u, 0.0)
        return float(np.max(v)) if math.isinf(q) else float(np.sum(v ** q) ** (1.0 / q))

    def _head(u):
        return float(np.sum(u ** p) ** (1.0 / p))

    def lower(lo, hi):
        a, b = coords(lo), coords(hi)
        if concave:
            # a concave function attains its minimum over a box at a corner
            return float(f(np.where(corner_bits, b, a)).min())
        bound = _head(a) + t * _tail(b)
        if convex and not math.isinf(q):
            c = (a + b) / 2
            v = x - c
            P, Q = _head(c), _tail(c)
            if P > 0 and Q > 0 and np.all(v > 0) and (p == 1 or np.all(c > 0)):
                g = (c / P) ** (p - 1) - t * (v / Q) ** (q - 1)
                bound = max(bound, P + t * Q - float(np.sum(np.abs(g) * (b - a))) / 2)
        elif convex:
            # subgradient cut; the sup-norm tail has subgradient -e_j at its argmax
            c = (a + b) / 2
            v = x - c
            P = _head(c)
            if P > 0 and (p == 1 or np.all(c > 0)):
                g = (c / P) ** (p - 1)
                j = int(np.argmax(v))
                if v[j] > 0:
                    g = g.copy()
                    g[j] -= t
                bound = max(bound, P + t * float(np.max(v)) - float(np.sum(np.abs(g) * (b - a))) / 2)
        return bound

    cands = [coords(lo0), coords(hi0)]
    if step is None:
        cands.append((lo0 + hi0) / 2)
    vals = f(np.vstack(cands))
    best = float(vals.min())
    best_u = cands[int(np.argmin(vals))]
    if upper is not None and upper < best:
        best = upper
    heap = [(lower(lo0, hi0), 0, lo0, hi0)]
    counter = 1
    global_lb = heap[0][0]
    while heap:
        lb, _, lo, hi = heapq.heappop(heap)
        global_lb = lb
        if lb >= best - tol:
            global_lb = min(lb, best)
            heap.clear()
            break
        width = hi - lo
        k = int(np.argmax(width if step is not None else width / np.maximum(x, 1e-300)))
        if step is not None and width[k] == 0:
            continue
        if step is None and (width[k] <= 1e-12 * max(x[k], 1e-300) or counter > max_boxes):
            global_lb = min([lb] + [h[0] for h in heap])
            break
        if step is not None:
            mid = (lo[k] + hi[k]) // 2
            parts = ((lo, np.where(np.arange(n) == k, mid, hi)),
                     (np.where(np.arange(n) == k, mid + 1, lo), hi))
        else:
            mid = (lo[k] + hi[k]) / 2
            parts = ((lo, np.where(np.arange(n) == k, mid, hi)),
                     (np.where(np.arange(n) == k, mid, lo), hi))
        for a, b in parts:
            c = (a + b) // 2 if step is not None else (a + b) / 2
            pts = np.vstack([coords(a), coords(b), coords(c)])
            v = f(pts)
            j = int(np.argmin(v))
            if v[j] < best:
                best, best_u = float(v[j]), pts[j]
            l = lower(a, b)
            if l < best - tol:
                heapq.heappush(heap, (l, counter, a, b))
                counter += 1
    else:
        global_lb = best
    return best, best_u, min(global_lb, best)


def dense_grid_minimum(x: Seq, t: float, couple: CoupleParams, step: float = 1e-3) -> float:
    """Exact minimum of the K objective over the grid of spacing ``step``."""
    xs = np.asarray(x.prefix, float)
    xs = xs[xs > 0]
    if len(xs) == 0:
        return 0.0
    return bnb_minimize(xs, t, couple, step=step)[0]


# ---------------------------------------------------------------------------
# Holmstedt estimates


def _head_integral(x: SeqLike, s: float, p: float) -> CertifiedValue:
    """int_0^s of the step extension to the power p."""
    k = int(math.floor(s))
    frac = s - k
    out = x.head_sum(k, p) if k >= 1 else CertifiedValue.exact(0.0)
    if frac > 0:
        out = out + frac * x.value(k + 1) ** p
    return out.widen()


def _tail_integral(x: SeqLike, s: float, q: float) -> CertifiedValue:
    """int_s^inf of the step extension to the power q."""
    k = int(math.floor(s))
    frac = s - k
    out = x.tail_sum(k + 2, q)
    if frac < 1:
        out = out + (1 - frac) * x.value(k + 1) ** q
    return out.widen()


def holmstedt(x: SeqLike, t: float, couple: CoupleParams) -> CertifiedValue:
    """Holmstedt's expression for K(t, x; l^p, l^q), p > 0.

    The integrals run over the step extension, so the cut at t^alpha may
    split a cell.  For p >= 1 this still bounds the sequence K from above;
    for p < 1 a split cell costs theta^p x^p > theta x^p in l^p, and the
    sequence K can exceed this value by a bounded factor.
    """
    if couple.p == 0:
        raise ValueError("Holmstedt's formula needs p > 0")
    if t <= 0:
        raise ValueError("t must be positive")
    p, q = couple.p, couple.q
    s = t ** couple.alpha
    head = _head_integral(x, s, p).power(1.0 / p)
    if math.isinf(q):
        return head.widen()
    tail = _tail_integral(x, s, q).power(1.0 / q)
    return (head + tail.scale(t)).widen()


def holmstedt_grid(x: SeqLike, couple: CoupleParams, N: int) -> KCurve:
    """Discrete Holmstedt values (P_p x)_n + n^(1/alpha) (Q_q x)_n, n <= N.

    The tail sum starts at index n + 1, i.e. the step-extension integral
    from n = t^alpha, so the values agree with :func:`holmstedt` there.
    """
    if couple.p == 0:
        raise ValueError("needs p > 0")
    p, q = couple.p, couple.q
    ts, vals, los, his = [], [], [], []
    for n in range(1, N + 1):
        t = n ** (1.0 / couple.alpha)
        head = x.head_sum(n, p).power(1.0 / p)
        if math.isinf(q):
            v = head
        else:
            v = head + x.tail_sum(n + 1, q).power(1.0 / q).scale(t)
        v = v.widen()
        ts.append(t)
        vals.append(v.mid)
        los.append(float(v.lo))
        his.append(float(v.hi))
    return KCurve(np.array(ts), np.array(vals), "holmstedt", np.array(los), np.array(his))


# ---------------------------------------------------------------------------
# curves and implications


def k_value(x: SeqLike, t: float, couple: CoupleParams) -> CertifiedValue:
    """K(t, x) by the exact route available for the couple."""
    if couple.p == 0:
        return k_from_e(x, t, couple.q)
    v = k_exact_oracle(x, t, couple, gap=False).value
    return CertifiedValue.exact(v)


def k_curve(x: SeqLike, couple: CoupleParams, grid: Sequence[float], method: str = "auto") -> KCurve:
    if method == "auto":
        method = "from-E" if couple.p == 0 else "exact-oracle"
    fn = {
        "from-E": lambda t: k_from_e(x, t, couple.q),
        "exact-oracle": lambda t: CertifiedValue.exact(k_exact_oracle(x, t, couple, gap=False).value),
        "holmstedt": lambda t: holmstedt(x, t, couple),
    }[method]
    vals = [fn(float(t)) for t in grid]
    return KCurve(np.asarray(grid, float), np.array([v.mid for v in vals]), method,
                  np.array([float(v.lo) for v in vals]), np.array([float(v.hi) for v in vals]))


def _e_power_sums(s: SeqLike, ms: Iterable[int], q: float) -> list:
    """E(m)^q (or E(m) when q = inf) as enclosures, for thresholds m."""
    out = []
    for m in ms:
        if math.isinf(q):
            out.append(CertifiedValue.exact(s.value(m + 1)))
        else:
            out.append(s.tail_sum(m + 1, q))
    return out


def _e_horizon(x: SeqLike, y: SeqLike) -> int | None:
    lx, ly = x.support_len(), y.support_len()
    if lx is not None and ly is not None:
        return max(lx, ly)
    j = dominance_start(y, x)
    if j is None:
        return None
    return max(j, len(getattr(x, "prefix", ())), len(getattr(y, "prefix", ())))


def e_dominated(x: SeqLike, y: SeqLike, q: float, horizon: int | None = None) -> Verdict:
    """Certify E(m, y) <= E(m, x) for all integer thresholds m."""
    if horizon is None:
        horizon = _e_horizon(x, y)
        if horizon is None:
            return Verdict(Status.UNDECIDED, detail={"reason": "no tail dominance certificate"})
    ms = range(0, horizon + 1)
    ey, ex = _e_power_sums(y, ms, q), _e_power_sums(x, ms, q)
    worst, where, status = INF, None, Status.PASS
    for m, a, b in zip(ms, ey, ex):
        st = certified_le(a, b)
        slack = float(b.lo - a.hi)
        if slack < worst:
            worst, where = slack, m
        if st is not Status.PASS:
            status = Status.FAIL if st is Status.FAIL else Status.UNDECIDED
            if st is Status.FAIL:
                return Verdict(Status.FAIL, slack, m)
    return Verdict(status, worst, where, {"horizon": horizon})


def check_impl1(x: SeqLike, y: SeqLike, q: float, grid: Sequence[float],
                horizon: int | None = None) -> Verdict:
    """E(., y) <= E(., x) implies K(t, y) <= K(t, x) on the grid (p = 0)."""
    hyp = e_dominated(x, y, q, horizon)
    if hyp.status is not Status.PASS:
        return Verdict(Status.REFUSED, hyp.margin, hyp.witness,
                       {"reason": "hypothesis not certified", "hypothesis": hyp.status.value})
    if isinstance(x, Seq) and x == y:
        return Verdict(Status.PASS, 0.0, None, {"reason": "identical sequences"})
    worst, where, status = INF, None, Status.PASS
    for t in grid:
        ky, kx = k_from_e(y, float(t), q), k_from_e(x, float(t), q)
        st = certified_le(ky, kx)
        slack = float(kx.lo - ky.hi)
        if slack < worst:
            worst, where = slack, float(t)
        if st is Status.FAIL:
            return Verdict(Status.FAIL, slack, float(t))
        if st is Status.UNDECIDED:
            status = Status.UNDECIDED
    return Verdict(status, worst, where)


def check_impl2(x: SeqLike, y: SeqLike, C: float, q: float, grid: Sequence[float],
                horizon: int | None = None) -> Verdict:
    """K(., y) <= C K(., x) on the grid implies E(t, y) <= 2C E(t/(2C), x)."""
    if C < 1:
        raise ValueError("C must be >= 1")
    for t in grid:
        ky, kx = k_from_e(y, float(t), q), k_from_e(x, float(t), q)
        st = certified_le(ky, kx.scale(C))
        if st is not Status.PASS:
            return Verdict(Status.REFUSED, float(C * kx.lo - ky.hi), float(t),
                           {"reason": "hypothesis not certified", "hypothesis": st.value})
    if horizon is None:
        ly = y.support_len()
        horizon = ly if ly is not None else 10 * max(len(getattr(y, "prefix", ())), 100)
    worst, where, status = INF, None, Status.PASS
    for m in range(0, horizon + 1):
        ey = _e_value(y, m, q)
        ex = _e_value(x, m / (2 * C), q).scale(2 * C)
        st = certified_le(ey, ex)
        slack = float(ex.lo - ey.hi)
        if slack < worst:
            worst, where = slack, m
        if st is Status.FAIL:
            return Verdict(Status.FAIL, slack, m)
        if st is Status.UNDECIDED:
            status = Status.UNDECIDED
    return Verdict(status, worst, where, {"horizon": horizon})


def _e_value(s: SeqLike, t: float, q: float) -> CertifiedValue:
    m = int(math.floor(t)) + 1
    if math.isinf(q):
        return CertifiedValue.exact(s.value(m))
    return s.tail_sum(m, q).power(1.0 / q).widen()


def exact_ratio_grid(x: Seq, y: Seq, q: float) -> np.ndarray:
    """Grid on which sup_t K(t,y)/K(t,x) is attained (finite x, y, p = 0).

    Both K's are piecewise linear, so on each common linear piece the
    ratio is monotone; kinks of either curve plus far-out points suffice.
    """
    pts = np.concatenate((k_breakpoints(x, q), k_breakpoints(y, q), [1e-9, 1e9]))
    pts = pts[(pts > 0) & np.isfinite(pts)]
    return np.unique(pts)


def _norm_x0(y: SeqLike, couple: CoupleParams) -> float:
    if couple.p == 0:
        return float(y.l0_norm())
    if y.is_finite:
        return float(y.head_sum(len(y.prefix), couple.p).hi) ** (1 / couple.p)
    try:
        return float(y.tail_sum(1, couple.p).hi) ** (1 / couple.p)
    except ValueError:
        return INF


def _norm_x1(y: SeqLike, couple: CoupleParams) -> float:
    if math.isinf(couple.q):
        return y.value(1)
    return float(y.tail_sum(1, couple.q).hi ** (1 / couple.q))


def k_majorization_constant(x: SeqLike, y: SeqLike, couple: CoupleParams,
                            grid: Sequence[float] | None = None) -> CertifiedValue:
    """sup_t K(t, y)/K(t, x): grid maximum and an upper bound for all t.

    Between consecutive grid points t_i < t_j, monotonicity of K gives
    K(t, y)/K(t, x) <= K(t_j, y)/K(t_i, x).  Below the grid K(t, y) <= t
    ||y||_1 and K(t, x) >= (t/t_0) K(t_0, x); above it K(t, y) <= ||y||_0.
    For p > 0 the K values come from the numerical oracle.
    """
    if x.support_len() == 0:
        raise ValueError("x must be nonzero")
    if grid is None:
        grid = dyadic_grid(20)
    grid = np.unique(np.asarray(grid, float))
    ky = [k_value(y, t, couple) for t in grid]
    kx = [k_value(x, t, couple) for t in grid]
    lo = max(float(a.lo) / float(b.hi) for a, b in zip(ky, kx))
    hi = max(float(ky[i + 1].hi) / float(kx[i].lo) for i in range(len(grid) - 1)) if len(grid) > 1 else INF
    hi = max(hi, lo)
    hi = max(hi, grid[0] * _norm_x1(y, couple) / float(kx[0].lo))
    hi = max(hi, _norm_x0(y, couple) / float(kx[-1].lo))
    return CertifiedValue(lo, hi)
