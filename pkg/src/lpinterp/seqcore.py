"""Sequence models, certified power sums and elementary sequence operators.

A :class:`Seq` is a nonnegative nonincreasing sequence given by a finite
prefix followed by either zeros or an analytic power tail ``c * n**-sigma``.
A :class:`StretchedSeq` re-indexes a base ``Seq`` piecewise by integer
stretch factors; it is how dilations and iterated stretch operators are
stored without materialising astronomically long prefixes.

Indices are 1-based throughout, matching the mathematical convention.
Infinite sums are returned as :class:`CertifiedValue` enclosures built from
integral brackets, never from silent truncation.
"""
from __future__ import annotations

import bisect
import enum
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Any, Iterable, Sequence

import mpmath
import numpy as np

INF = math.inf
EXACT_TOL = 1e-12

# Private multiprecision context.  Its precision is never changed after
# import, so sharing it between threads is safe.
MP = mpmath.MPContext()
MP.prec = 192
_MP_REL = MP.mpf(2) ** -150  # relative widening covering mp rounding
_F64_EPS = np.finfo(float).eps


class DivergentSumError(ValueError):
    """A requested power sum does not converge."""


# ---------------------------------------------------------------------------
# verdicts and enclosures


class Status(str, enum.Enum):
    PASS = "pass"
    FAIL = "fail"
    UNDECIDED = "undecided"
    REFUSED = "refused"


@dataclass(frozen=True)
class Verdict:
    """Outcome of a certified check.

    ``margin`` is the worst slack seen (negative on failure), ``witness``
    locates the worst or first violating point and ``detail`` carries
    check-specific data.
    """

    status: Status
    margin: float = 0.0
    witness: Any = None
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status is Status.PASS

    def __bool__(self) -> bool:
        return self.passed


def combine(verdicts: Iterable[Verdict]) -> Status:
    """Worst status of a collection: fail > undecided > pass."""
    statuses = {v.status for v in verdicts}
    for s in (Status.REFUSED, Status.FAIL, Status.UNDECIDED):
        if s in statuses:
            return s
    return Status.PASS


def _down(v):
    if isinstance(v, float):
        return math.nextafter(v, -INF) if v != 0.0 else 0.0
    return v


def _up(v):
    if isinstance(v, float):
        return math.nextafter(v, INF)
    return v


@dataclass(frozen=True)
class CertifiedValue:
    """Closed enclosure ``[lo, hi]`` of a real number.

    Endpoints are floats or multiprecision numbers.  Exact computations
    return ``lo == hi``.
    """

    lo: Any
    hi: Any

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty enclosure [{self.lo}, {self.hi}]")

    @classmethod
    def exact(cls, v) -> "CertifiedValue":
        return cls(v, v)

    @property
    def is_exact(self) -> bool:
        return self.lo == self.hi

    @property
    def mid(self) -> float:
        return float((self.lo + self.hi) / 2)

    @property
    def width(self) -> float:
        return float(self.hi - self.lo)

    def __add__(self, other):
        if isinstance(other, CertifiedValue):
            return CertifiedValue(self.lo + other.lo, self.hi + other.hi)
        return CertifiedValue(self.lo + other, self.hi + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, CertifiedValue):
            return CertifiedValue(self.lo - other.hi, self.hi - other.lo)
        return CertifiedValue(self.lo - other, self.hi - other)

    def scale(self, k) -> "CertifiedValue":
        if k < 0:
            return CertifiedValue(self.hi * k, self.lo * k)
        return CertifiedValue(self.lo * k, self.hi * k)

    def __mul__(self, other):
        if isinstance(other, CertifiedValue):
            prods = [a * b for a in (self.lo, self.hi) for b in (other.lo, other.hi)]
            return CertifiedValue(min(prods), max(prods))
        return self.scale(other)

    __rmul__ = __mul__

    def power(self, e) -> "CertifiedValue":
        """Monotone power of a nonnegative enclosure (e > 0)."""
        lo = max(self.lo, 0 * self.lo)
        return CertifiedValue(lo ** e, self.hi ** e)

    def widen(self, rel=None) -> "CertifiedValue":
        """Outward-round by one ulp (floats) or a relative margin (mp)."""
        if isinstance(self.lo, float) and isinstance(self.hi, float):
            return CertifiedValue(_down(self.lo), _up(self.hi))
        rel = _MP_REL if rel is None else rel
        return CertifiedValue(self.lo - abs(self.lo) * rel, self.hi + abs(self.hi) * rel)

    def to_float(self) -> "CertifiedValue":
        lo, hi = float(self.lo), float(self.hi)
        return CertifiedValue(_down(lo) if lo != 0 else 0.0, _up(hi) if hi != 0 else 0.0)

    def contains(self, v) -> bool:
        return self.lo <= v <= self.hi

    def overlaps(self, other: "CertifiedValue") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi


def certified_le(a: CertifiedValue, b: CertifiedValue, tol: float = EXACT_TOL) -> Status:
    """Directed comparison ``a <= b``.

    Exact operands are compared with an absolute tolerance ``tol``; inexact
    ones pass only when ``hi(a) <= lo(b)`` and fail only when
    ``lo(a) > hi(b)``.
    """
    if a.is_exact and b.is_exact:
        return Status.PASS if a.lo <= b.lo + tol else Status.FAIL
    if a.hi <= b.lo:
        return Status.PASS
    if a.lo > b.hi:
        return Status.FAIL
    return Status.UNDECIDED


def certified_nonneg(d: CertifiedValue, tol: float = EXACT_TOL) -> Status:
    """Directed check ``d >= 0`` for a directly computed difference."""
    if d.is_exact:
        return Status.PASS if d.lo >= -tol else Status.FAIL
    if d.lo >= 0:
        return Status.PASS
    if d.hi < 0:
        return Status.FAIL
    return Status.UNDECIDED


# ---------------------------------------------------------------------------
# certified sums of j**-e over integer ranges

_EXPLICIT_N = 4096
_SHORT_RANGE = 64


@lru_cache(maxsize=128)
def _zeta_table(e: float) -> tuple:
    """Partial sums ``Z[k] = sum_{j<=k} j**-e`` for k <= _EXPLICIT_N."""
    me = MP.mpf(e)
    out = [MP.zero]
    acc = MP.zero
    for j in range(1, _EXPLICIT_N + 1):
        acc += MP.mpf(j) ** (-me)
        out.append(acc)
    return tuple(out)


def _integral(e, a, b, diff=None):
    """``int_a^b x**-e dx`` for 0 < a <= b (b may be None for infinity).

    ``diff`` is ``b - a`` computed exactly by the caller; it keeps the
    result accurate when a is huge and the range is short.
    """
    if b is None:
        return a ** (1 - e) / (e - 1)
    if b == a and not diff:
        return MP.zero
    ratio = (b - a if diff is None else MP.mpf(diff)) / a
    if e == 1:
        return MP.log1p(ratio)
    return -(a ** (1 - e)) * MP.expm1((1 - e) * MP.log1p(ratio)) / (e - 1)


def power_range_sum(e: float, u: int, v: int | None = None) -> CertifiedValue:
    """Enclosure of ``sum_{j=u}^{v} j**-e`` (``v=None`` means infinity).

    Small indices are summed explicitly.  The remainder uses the
    Euler-Maclaurin formula through the B_2 term; since every even
    derivative of x**-e is positive, the error lies between 0 and the
    B_4 term, which gives the enclosure.
    """
    u = int(u)
    if u < 1:
        raise ValueError("range must start at index >= 1")
    if v is not None:
        v = int(v)
        if v < u:
            return CertifiedValue(MP.zero, MP.zero)
    elif e <= 1:
        raise DivergentSumError(f"sum of j^-{e} diverges")
    me = MP.mpf(e)
    base = MP.zero
    if u <= _EXPLICIT_N:
        table = _zeta_table(float(e))
        top = _EXPLICIT_N if v is None else min(v, _EXPLICIT_N)
        base = table[top] - table[u - 1]
        u = _EXPLICIT_N + 1
        if v is not None and v <= _EXPLICIT_N:
            return CertifiedValue(base, base).widen()
    if v is not None and v - u < _SHORT_RANGE:
        part = base + MP.fsum(MP.mpf(j) ** (-me) for j in range(u, v + 1))
        return CertifiedValue(part, part).widen()
    mu = MP.mpf(u)

    def d1(x):  # first derivative of x**-e
        return -me * x ** (-me - 1)

    def d3(x):  # third derivative
        return -me * (me + 1) * (me + 2) * x ** (-me - 3)

    if v is None:
        t1 = _integral(me, mu, None) + mu ** (-me) / 2 - d1(mu) / 12
        t2 = t1 + d3(mu) / 720
    else:
        mv = MP.mpf(v)
        t1 = (_integral(me, mu, mv, v - u) + (mu ** (-me) + mv ** (-me)) / 2
              + (d1(mv) - d1(mu)) / 12)
        t2 = t1 - (d3(mv) - d3(mu)) / 720
    lo, hi = (t1, t2) if t1 <= t2 else (t2, t1)
    return CertifiedValue(base + lo, base + hi).widen()


# ---------------------------------------------------------------------------
# couples


def parse_exponent(text) -> float:
    if isinstance(text, (int, float)):
        return float(text)
    t = str(text).strip().lower()
    if t in ("inf", "infinity", "∞"):
        return INF
    return float(Fraction(t)) if "/" in t else float(t)


@dataclass(frozen=True)
class CoupleParams:
    """Exponent pair of the couple (l^p, l^q) with 0 <= p < q <= inf."""

    p: float
    q: float

    def __post_init__(self):
        if not (0 <= self.p < self.q) or not self.q > 0:
            raise ValueError(f"need 0 <= p < q <= inf, got p={self.p}, q={self.q}")
        if math.isinf(self.p):
            raise ValueError("p must be finite")

    @property
    def alpha(self) -> float | None:
        if self.p == 0:
            return None
        if math.isinf(self.q):
            return self.p
        return 1.0 / (1.0 / self.p - 1.0 / self.q)

    @classmethod
    def parse(cls, text: str) -> "CoupleParams":
        parts = str(text).split(",")
        if len(parts) != 2:
            raise ValueError(f"couple must look like 'p,q', got {text!r}")
        return cls(parse_exponent(parts[0]), parse_exponent(parts[1]))

    def __str__(self):
        q = "inf" if math.isinf(self.q) else repr(self.q)
        return f"{self.p!r},{q}"


# ---------------------------------------------------------------------------
# sequences


@dataclass(frozen=True)
class ZeroTail:
    pass


@dataclass(frozen=True)
class PowerTail:
    """Tail ``s_n = c * n**-sigma`` beyond the prefix."""

    c: float
    sigma: float

    def __post_init__(self):
        if not (self.c > 0 and self.sigma > 0):
            raise ValueError("power tail needs c > 0 and sigma > 0")


class SeqLike:
    """Common interface of nonnegative nonincreasing sequences.

    Subclasses implement ``value``, ``value_mp``, ``_range_mp`` and
    ``support_len``.  Sums at exponent ``s`` are reported by
    :meth:`range_sum` (floats) and :meth:`range_sum_mp` (multiprecision,
    for magnitudes outside the float range).
    """

    def value(self, n: int) -> float:
        raise NotImplementedError

    def value_mp(self, n: int):
        raise NotImplementedError

    def support_len(self) -> int | None:
        """Number of nonzero terms, or None when infinite."""
        raise NotImplementedError

    def _range_mp(self, u: int, v: int | None, s: float) -> CertifiedValue:
        raise NotImplementedError

    def range_sum_mp(self, u: int, v: int | None, s: float) -> CertifiedValue:
        if s <= 0:
            raise ValueError("exponent must be positive")
        u = max(int(u), 1)
        if v is not None and v < u:
            return CertifiedValue(MP.zero, MP.zero)
        return self._range_mp(u, v, s)

    def range_sum(self, u: int, v: int | None, s: float) -> CertifiedValue:
        return self.range_sum_mp(u, v, s).to_float()

    def head_sum(self, n: int, p: float) -> CertifiedValue:
        """Enclosure of ``sum_{k<=n} s_k**p``."""
        if p <= 0:
            raise ValueError("p must be positive")
        if n < 1:
            return CertifiedValue.exact(0.0)
        return self.range_sum(1, n, p)

    def tail_sum(self, m: int, q: float) -> CertifiedValue:
        """Enclosure of ``sum_{k>=m} s_k**q``."""
        if q <= 0:
            raise ValueError("q must be positive")
        return self.range_sum(max(m, 1), None, q)

    def l0_norm(self):
        n = self.support_len()
        return INF if n is None else n

    def values(self, n: int) -> np.ndarray:
        return np.array([self.value(k) for k in range(1, n + 1)], dtype=float)

    @property
    def is_finite(self) -> bool:
        return self.support_len() is not None


class Seq(SeqLike):
    """Prefix plus zero or power tail.  Instances are immutable."""

    __slots__ = ("_prefix", "tail", "_cache")

    def __init__(self, prefix: Sequence[float] = (), tail=None, *, check: bool = True):
        arr = np.array(prefix, dtype=float).reshape(-1)
        arr.setflags(write=False)
        object.__setattr__(self, "_prefix", arr)
        object.__setattr__(self, "tail", ZeroTail() if tail is None else tail)
        object.__setattr__(self, "_cache", {})
        if check:
            self._validate()

    def __setattr__(self, name, value):
        raise AttributeError("Seq is immutable")

    def _validate(self):
        a = self._prefix
        if not np.all(np.isfinite(a)):
            raise ValueError("prefix entries must be finite")
        if np.any(a < 0):
            raise ValueError("prefix entries must be nonnegative")
        if np.any(np.diff(a) > 0):
            raise ValueError("prefix must be nonincreasing")
        if isinstance(self.tail, PowerTail) and len(a):
            if a[-1] < self.tail.c * (len(a) + 1) ** (-self.tail.sigma):
                raise ValueError("power tail starts above the last prefix entry")

    @classmethod
    def power(cls, c: float, sigma: float, prefix: Sequence[float] = ()) -> "Seq":
        return cls(prefix, PowerTail(float(c), float(sigma)))

    @property
    def prefix(self) -> np.ndarray:
        return self._prefix

    def __len__(self):
        return len(self._prefix)

    def __repr__(self):
        pre = np.array2string(self._prefix[:8], separator=", ")
        more = "..." if len(self._prefix) > 8 else ""
        return f"Seq({pre}{more}, tail={self.tail})"

    def __eq__(self, other):
        return (
            isinstance(other, Seq)
            and self.tail == other.tail
            and np.array_equal(self._prefix, other._prefix)
        )

    def __hash__(self):
        return hash((self._prefix.tobytes(), self.tail))

    def support_len(self):
        if isinstance(self.tail, PowerTail):
            return None
        return int(np.count_nonzero(self._prefix))

    def value(self, n: int) -> float:
        if n < 1:
            raise IndexError("indices start at 1")
        if n <= len(self._prefix):
            return float(self._prefix[n - 1])
        if isinstance(self.tail, PowerTail):
            return self.tail.c * float(n) ** (-self.tail.sigma)
        return 0.0

    def value_mp(self, n: int):
        if n <= len(self._prefix):
            return MP.mpf(float(self._prefix[n - 1]))
        if isinstance(self.tail, PowerTail):
            return MP.mpf(self.tail.c) * MP.mpf(int(n)) ** (-MP.mpf(self.tail.sigma))
        return MP.zero

    def _powcum(self, s: float) -> np.ndarray:
        """Cumulative sums of prefix**s with a leading 0."""
        c = self._cache.get(s)
        if c is None:
            c = np.concatenate(([0.0], np.cumsum(self._prefix ** s)))
            c.setflags(write=False)
            self._cache[s] = c
        return c

    def _prefix_part(self, u: int, v: int | None, s: float) -> float:
        L = len(self._prefix)
        if u > L:
            return 0.0
        top = L if v is None else min(v, L)
        c = self._powcum(s)
        return float(c[top] - c[u - 1])

    def range_sum(self, u, v, s):
        if s <= 0:
            raise ValueError("exponent must be positive")
        u = max(int(u), 1)
        if v is not None and v < u:
            return CertifiedValue.exact(0.0)
        L = len(self._prefix)
        pre = self._prefix_part(u, v, s)
        if isinstance(self.tail, ZeroTail) or (v is not None and v <= L):
            return CertifiedValue.exact(pre)
        tail = self._tail_mp(max(u, L + 1), v, s)
        return (tail + MP.mpf(pre)).to_float()

    def _tail_mp(self, u, v, s) -> CertifiedValue:
        t = self.tail
        e = t.sigma * s
        if v is None and e <= 1:
            raise DivergentSumError(f"tail sum diverges (sigma*q = {e:g} <= 1)")
        return power_range_sum(e, u, v).scale(MP.mpf(t.c) ** s)

    def _range_mp(self, u, v, s):
        L = len(self._prefix)
        out = CertifiedValue(MP.zero, MP.zero)
        if u <= L:
            pre = self._prefix_part(u, v, s)
            n = (L if v is None else min(v, L)) - u + 1
            rel = MP.mpf((n + 4) * _F64_EPS)
            out = CertifiedValue(MP.mpf(pre) * (1 - rel), MP.mpf(pre) * (1 + rel))
        if isinstance(self.tail, PowerTail) and (v is None or v > L):
            out = out + self._tail_mp(max(u, L + 1), v, s)
        return out

    def to_json(self) -> dict:
        if isinstance(self.tail, PowerTail):
            tail = {"kind": "power", "c": self.tail.c, "sigma": self.tail.sigma}
        else:
            tail = {"kind": "zero"}
        return {"prefix": [float(v) for v in self._prefix], "tail": tail}

    @classmethod
    def from_json(cls, obj: dict) -> "Seq":
        if not isinstance(obj, dict) or "prefix" not in obj:
            raise ValueError("sequence JSON needs a 'prefix' list")
        prefix = obj["prefix"]
        if not isinstance(prefix, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in prefix
        ):
            raise ValueError("'prefix' must be a list of numbers")
        tail = obj.get("tail", {"kind": "zero"})
        kind = tail.get("kind") if isinstance(tail, dict) else None
        if kind == "zero":
            return cls(prefix)
        if kind == "power":
            return cls(prefix, PowerTail(float(tail["c"]), float(tail["sigma"])))
        raise ValueError(f"unknown tail kind {kind!r}")


def seq_dumps(s: Seq) -> str:
    return json.dumps(s.to_json(), sort_keys=True)


def seq_loads(text: str) -> Seq:
    return Seq.from_json(json.loads(text))


# ---------------------------------------------------------------------------
# stretched sequences


@dataclass(frozen=True)
class Region:
    """Cells ``start..end`` (``end=None``: unbounded) of a stretched sequence.

    Cell ``m`` takes the value ``scale * base[floor(w / B) + 1]`` with
    ``w = m - start + offset`` and ``scale = B**(-1/q)`` (1 when q is inf).
    All index data are exact integers.
    """

    start: int
    end: int | None
    offset: int
    B: int
    q: float

    def scale_mp(self):
        if math.isinf(self.q) or self.B == 1:
            return MP.one
        return MP.mpf(self.B) ** (-1 / MP.mpf(self.q))

    def index_of(self, m: int) -> int:
        return (m - self.start + self.offset) // self.B + 1


class StretchedSeq(SeqLike):
    """Piecewise re-indexing of a base :class:`Seq`.

    Region ``k`` maps cell ``m`` to base index ``floor(w / B_k) + 1`` and
    scales by ``B_k**(-1/q)``; consecutive regions tile ``1..inf``.  Built
    by :func:`dilate` and by the stretch operator in the counterexample
    module.
    """

    def __init__(self, base: Seq, regions: Sequence[Region]):
        if not regions or regions[0].start != 1:
            raise ValueError("regions must start at cell 1")
        for r0, r1 in zip(regions, regions[1:]):
            if r0.end is None or r1.start != r0.end + 1:
                raise ValueError("regions must tile consecutive cells")
        if regions[-1].end is not None and not base.is_finite:
            raise ValueError("an infinite base needs an unbounded last region")
        self.base = base
        self.regions = tuple(regions)
        self._starts = [r.start for r in self.regions]

    def __repr__(self):
        return f"StretchedSeq(base={self.base!r}, regions={len(self.regions)})"

    def region_of(self, m: int) -> Region:
        k = bisect.bisect_right(self._starts, m) - 1
        r = self.regions[k]
        if r.end is not None and m > r.end:
            return None
        return r

    def support_len(self):
        n = self.base.support_len()
        if n is None:
            return None
        total = 0
        for r in self.regions:
            # cells whose base index is <= n
            last_w = n * r.B - 1
            top = r.start + last_w - r.offset
            if r.end is not None:
                top = min(top, r.end)
            total += max(0, top - r.start + 1)
        return total

    def value_mp(self, m: int):
        r = self.region_of(m)
        if r is None:
            return MP.zero
        return r.scale_mp() * self.base.value_mp(r.index_of(m))

    def value(self, m: int) -> float:
        return float(self.value_mp(m))

    def _region_sum(self, r: Region, m1: int, m2: int | None, s: float) -> CertifiedValue:
        """Sum of (cell value)**s over cells m1..m2 of region r."""
        B = r.B
        w1 = m1 - r.start + r.offset
        j1 = w1 // B + 1
        if m2 is None:
            first = CertifiedValue.exact(MP.mpf(j1 * B - w1)) * self.base.value_mp(j1) ** s
            rest = self.base.range_sum_mp(j1 + 1, None, s).scale(MP.mpf(B))
            total = first + rest
        else:
            w2 = m2 - r.start + r.offset
            j2 = w2 // B + 1
            if j1 == j2:
                total = CertifiedValue.exact(MP.mpf(w2 - w1 + 1) * self.base.value_mp(j1) ** s)
            else:
                first = MP.mpf(j1 * B - w1) * self.base.value_mp(j1) ** s
                last = MP.mpf(w2 - (j2 - 1) * B + 1) * self.base.value_mp(j2) ** s
                mid = self.base.range_sum_mp(j1 + 1, j2 - 1, s).scale(MP.mpf(B))
                total = mid + (first + last)
        scale = r.scale_mp() ** s
        return total.scale(scale).widen()

    def _range_mp(self, u, v, s):
        out = CertifiedValue(MP.zero, MP.zero)
        k = bisect.bisect_right(self._starts, u) - 1
        for r in self.regions[k:]:
            lo = max(u, r.start)
            if v is not None and lo > v:
                break
            if r.end is None:
                hi = v
            else:
                hi = r.end if v is None else min(v, r.end)
            if hi is not None and hi < lo:
                continue
            out = out + self._region_sum(r, lo, hi, s)
        return out


# ---------------------------------------------------------------------------
# operations


def rearrange(v: Iterable[float]) -> Seq:
    """Nonincreasing rearrangement of |v| as a finite sequence."""
    a = np.abs(np.asarray(list(v), dtype=float))
    return Seq(np.sort(a)[::-1])


def head_sum(s: SeqLike, n: int, p: float) -> CertifiedValue:
    return s.head_sum(n, p)


def tail_sum(s: SeqLike, m: int, q: float) -> CertifiedValue:
    return s.tail_sum(m, q)


def head_norm(s: SeqLike, n: int, p: float) -> CertifiedValue:
    """Enclosure of (P_p s)_n = (sum_{k<=n} s_k^p)^(1/p)."""
    return s.head_sum(n, p).power(1.0 / p).widen()


def tail_norm(s: SeqLike, n: int, q: float) -> CertifiedValue:
    """Enclosure of (Q_q s)_n = (sum_{k>=n} s_k^q)^(1/q)."""
    return s.tail_sum(n, q).power(1.0 / q).widen()


def Pp(s: SeqLike, n: int, p: float) -> float:
    """Midpoint of (P_p s)_n; see :func:`head_norm` for the enclosure."""
    return head_norm(s, n, p).mid


def Qq(s: SeqLike, n: int, q: float) -> float:
    """Midpoint of (Q_q s)_n; see :func:`tail_norm` for the enclosure."""
    return tail_norm(s, n, q).mid


def lq_norm(s: SeqLike, q: float) -> CertifiedValue:
    if math.isinf(q):
        return CertifiedValue.exact(s.value(1))
    return tail_norm(s, 1, q)


def l0_norm(s: SeqLike):
    return s.l0_norm()


def dilate(s: Seq, n: int) -> SeqLike:
    """D_n: repeat every term n times (term k is s at index ceil(k/n)).

    Finite inputs give a finite :class:`Seq`; power tails give a
    :class:`StretchedSeq`.
    """
    if n < 1:
        raise ValueError("dilation factor must be >= 1")
    if n == 1:
        return s
    if s.is_finite:
        return Seq(np.repeat(s.prefix, n), check=False)
    return StretchedSeq(s, [Region(1, None, 0, int(n), INF)])


def cesaro_p(s: SeqLike, p: float, N: int) -> Seq:
    """First N terms of ((1/n) sum_{k<=n} s_k^p)^(1/p).

    The output is checked to be nonincreasing up to rounding; rounding
    ripples below 1e-12 relative are flattened.
    """
    if p <= 0:
        raise ValueError("p must be positive")
    vals = np.array([s.value(k) for k in range(1, N + 1)], dtype=float)
    if isinstance(s, Seq) and len(s.prefix) >= N:
        vals = np.asarray(s.prefix[:N], dtype=float)
    means = np.cumsum(vals ** p) / np.arange(1, N + 1)
    out = means ** (1.0 / p)
    jumps = np.diff(out)
    if np.any(jumps > 1e-12 * np.maximum(out[1:], 1.0)):
        k = int(np.argmax(jumps)) + 2
        raise ArithmeticError(f"Cesaro output increases at n={k}")
    return Seq(np.minimum.accumulate(out), check=False)


def dominance_start(y: SeqLike, x: SeqLike) -> int | None:
    """Smallest J with y_j <= x_j for every j >= J, from the tail models.

    Returns None when no such J can be certified (for example when y has
    a heavier power tail than x).
    """
    if not (isinstance(x, Seq) and isinstance(y, Seq)):
        return None
    L = max(len(x), len(y))
    if isinstance(y.tail, ZeroTail):
        return len(y) + 1
    if isinstance(x.tail, ZeroTail):
        return None
    cx, sx, cy, sy = x.tail.c, x.tail.sigma, y.tail.c, y.tail.sigma
    if sy == sx:
        return L + 1 if cy <= cx else None
    if sy < sx:
        return None
    j0 = (cy / cx) ** (1.0 / (sy - sx))
    return max(L + 1, int(math.ceil(j0)) + 1)
