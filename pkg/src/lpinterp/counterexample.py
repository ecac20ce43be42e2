"""Stretch operators T_{a,b}, the tail-flattening construction and CM witnesses.

``T_{a,b}`` keeps cells 1..a of a nonincreasing step sequence and repeats
every later cell b times with weight ``b**(-1/q)``, so q-mass past a is
preserved while r-mass (r > q) shrinks and p-mass (p < q) grows.  Iterating
it with a carefully chosen schedule (a_n, b_n) yields f with the same
q-norm and heavier q-tails than g, but whose K-functional for (l^p, l^r)
is eventually much smaller than that of g.

Sequences produced here are :class:`StretchedSeq` objects: indices and
multiplicities are exact Python integers and all sums are multiprecision
enclosures, so schedules with thousands of digits are handled exactly.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from mpmath.ctx_iv import MPIntervalContext
from mpmath.libmp import to_int

from .opnorms import OperatorMatrix, norm_lq_exact
from .seqcore import (
    EXACT_TOL,
    INF,
    MP,
    CertifiedValue,
    PowerTail,
    Region,
    Seq,
    SeqLike,
    Status,
    StretchedSeq,
    Verdict,
    combine,
    rearrange,
)


class SearchError(RuntimeError):
    """An integer search did not terminate (usually g lies in l^p)."""


# ---------------------------------------------------------------------------
# T_{a,b}


@dataclass(frozen=True)
class TabParams:
    a: int
    b: int
    q: float

    def __post_init__(self):
        if int(self.a) != self.a or self.a < 1:
            raise ValueError("a must be a positive integer")
        if int(self.b) != self.b or self.b < 1:
            raise ValueError("b must be a positive integer")
        if not self.q > 0:
            raise ValueError("q must be positive")


def as_stretched(h: SeqLike, q: float) -> StretchedSeq:
    if isinstance(h, StretchedSeq):
        return h
    if not isinstance(h, Seq):
        h = rearrange(h)
    return StretchedSeq(h, [Region(1, None, 0, 1, q)])


def _stretch_regions(regions, a: int, b: int, q: float) -> list:
    out = []
    for r in regions:
        if r.end is not None and r.end <= a:
            out.append(r)
            continue
        if r.B > 1 and r.q != q:
            raise ValueError("cannot compose stretches with different q")
        if r.start <= a:
            out.append(Region(r.start, a, r.offset, r.B, r.q))
            start, offset = a + 1, (a + 1 - r.start + r.offset) * b
        else:
            start, offset = a + 1 + (r.start - a - 1) * b, r.offset * b
        end = None if r.end is None else a + (r.end - a) * b
        out.append(Region(start, end, offset, r.B * b, q))
    return out


def stretch(h: SeqLike, a: int, b: int, q: float) -> StretchedSeq:
    """T_{a,b} h in compressed form (exact index arithmetic)."""
    s = as_stretched(h, q)
    if b == 1:
        return s
    return StretchedSeq(s.base, _stretch_regions(s.regions, int(a), int(b), q))


def t_ab(h: SeqLike, params: TabParams, materialize_limit: int = 10 ** 7) -> SeqLike:
    """T_{a,b} h.

    A finite :class:`Seq` input gives a finite :class:`Seq` as long as the
    output support stays below ``materialize_limit``; anything else is
    returned as a :class:`StretchedSeq`.
    """
    a, b, q = int(params.a), int(params.b), params.q
    if isinstance(h, Seq) and h.is_finite:
        L = len(h.prefix)
        n_out = min(a, L) + max(L - a, 0) * b
        if n_out <= materialize_limit:
            head = h.prefix[:a]
            tail = np.repeat(h.prefix[a:], b) * float(b) ** (-1.0 / q)
            return Seq(np.concatenate((head, tail)), check=False)
    if b == 1:
        return h
    return stretch(h, a, b, q)


def stretched_to_json(s: StretchedSeq) -> dict:
    """Base sequence plus region table; huge integers are hex strings."""
    regs = [{"start": _enc_int(r.start), "end": None if r.end is None else _enc_int(r.end),
             "offset": _enc_int(r.offset), "B": _enc_int(r.B),
             "q": "inf" if math.isinf(r.q) else r.q} for r in s.regions]
    return {"base": s.base.to_json(), "regions": regs}


def stretched_from_json(obj: dict) -> StretchedSeq:
    regs = [Region(_dec_int(r["start"]), None if r["end"] is None else _dec_int(r["end"]),
                   _dec_int(r["offset"]), _dec_int(r["B"]), float(r["q"])) for r in obj["regions"]]
    return StretchedSeq(Seq.from_json(obj["base"]), regs)


# ---------------------------------------------------------------------------
# multiprecision integrals of step extensions


def _head_mp(s: SeqLike, n: int, e: float) -> CertifiedValue:
    if n < 1:
        return CertifiedValue(MP.zero, MP.zero)
    return s.range_sum_mp(1, n, e)


def _tail_mp(s: SeqLike, m: int, e: float) -> CertifiedValue:
    return s.range_sum_mp(max(int(m), 1), None, e)


def integral_to(s: SeqLike, t, e: float) -> CertifiedValue:
    """int_0^t of the step extension to the power e (t real, >= 0)."""
    k = int(math.floor(t))
    frac = MP.mpf(t) - k
    out = _head_mp(s, k, e)
    if frac > 0:
        out = out + frac * s.value_mp(k + 1) ** e
    return out.widen()


def integral_from(s: SeqLike, t, e: float) -> CertifiedValue:
    """int_t^inf of the step extension to the power e."""
    k = int(math.floor(t))
    frac = MP.mpf(t) - k
    out = _tail_mp(s, k + 2, e) + (1 - frac) * s.value_mp(k + 1) ** e
    return out.widen()


def _le(a: CertifiedValue, b: CertifiedValue, rel: float = EXACT_TOL) -> Status:
    """a <= b where exact ties may occur.

    Separated enclosures decide; overlapping enclosures count as a tie
    (pass) only when both are narrower than ``rel`` times their size.
    """
    if a.hi <= b.lo:
        return Status.PASS
    if a.lo > b.hi:
        tol = rel * max(abs(a.hi), abs(b.hi), MP.mpf(1e-300))
        if a.lo - b.hi > tol:
            return Status.FAIL
    scale = max(abs(a.hi), abs(b.hi))
    if a.width <= rel * scale and b.width <= rel * scale and a.lo <= b.hi + rel * scale:
        return Status.PASS
    return Status.UNDECIDED


def _eq(a: CertifiedValue, b: CertifiedValue, rel: float = EXACT_TOL) -> Status:
    s1, s2 = _le(a, b, rel), _le(b, a, rel)
    if Status.FAIL in (s1, s2):
        return Status.FAIL
    if s1 is Status.PASS and s2 is Status.PASS:
        return Status.PASS
    return Status.UNDECIDED


def _f(v) -> float:
    return float(v)


# ---------------------------------------------------------------------------
# the lemma suite for T_{a,b}


@dataclass
class LemmaReport:
    items: dict
    min_passing_b: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)
    notices: list = field(default_factory=list)

    @property
    def status(self) -> Status:
        return combine(self.items.values())


def lemma_tab_verify(h: SeqLike, a: int, p: float, q: float, r: float, t_grid=None,
                     b_values=None) -> LemmaReport:
    """Check the five T_{a,b} properties on a grid of t and b.

    1. the head p-integral up to t > a tends to the one up to a (checked
       against the envelope (t-a) b^(-p/q) h_{a+1}^p, which decreases to 0);
    2. tail q-integrals never decrease;
    3. tail q-integrals from t <= a are unchanged;
    4. the r-integral past a equals b^(1-r/q) times the original;
    5. tail r-integrals do not grow once b exceeds the threshold
       (int_a h^r / int_t h^r)^(q/(r-q)).
    """
    if not 0 < p < q < r < INF:
        raise ValueError("needs 0 < p < q < r < inf")
    a = int(a)
    if b_values is None:
        b_values = [2 ** k for k in range(17)]
    if t_grid is None:
        t_grid = sorted({0.0, 0.5, a / 2, float(a), a + 0.5, a + 1.0, 2.0 * a + 1, 4.0 * a + 3, 10.0 * a + 7})
    base = as_stretched(h, q)
    L = base.support_len()
    notices = []
    st = {k: [] for k in ("1", "2", "3", "4", "5")}
    min_b, thresholds = {}, {}
    ha = base.value_mp(a + 1)
    head_a = _head_mp(base, a, p)
    tail_a_r = _tail_mp(base, a + 1, r)
    for b in b_values:
        Th = stretch(base, a, b, q)
        for t in t_grid:
            tq_T, tq_h = integral_from(Th, t, q), integral_from(base, t, q)
            st["2"].append((_le(tq_h, tq_T), t, b))
            if t <= a:
                st["3"].append((_eq(tq_T, tq_h), t, b))
            else:
                excess = integral_to(Th, t, p) - head_a
                env = MP.mpf(t - a) * MP.mpf(b) ** (-MP.mpf(p) / q) * ha ** p
                ok = excess.lo >= -EXACT_TOL * max(1, abs(head_a.hi)) and \
                    _le(excess, CertifiedValue(env, env)) is not Status.FAIL
                st["1"].append((Status.PASS if ok else Status.FAIL, t, b))
        tr = _tail_mp(Th, a + 1, r)
        factor = MP.mpf(b) ** (1 - MP.mpf(r) / q)
        st["4"].append((_eq(tr, tail_a_r.scale(factor)), a, b))
    for t in t_grid:
        if t <= a:
            continue
        if L is not None and t >= L:
            notices.append(f"item 5 skipped at t={t}: h vanishes past t")
            continue
        denom = integral_from(base, t, r)
        ratio_hi = (tail_a_r.hi / denom.lo) ** (MP.mpf(q) / (r - q))
        thresholds[t] = _f(ratio_hi)
        passing = []
        for b in b_values:
            Th = stretch(base, a, b, q)
            s = _le(integral_from(Th, t, r), denom)
            if s is Status.PASS and b > 1:  # b = 1 is the identity
                passing.append(b)
            if b > ratio_hi:
                st["5"].append((s, t, b))
        min_b[t] = min(passing) if passing else None
    items = {}
    for k, rows in st.items():
        bad = [(s, t, b) for s, t, b in rows if s is not Status.PASS]
        if not bad:
            items[k] = Verdict(Status.PASS, 0.0, None, {"checks": len(rows)})
        else:
            s, t, b = next((x for x in bad if x[0] is Status.FAIL), bad[0])
            items[k] = Verdict(s, 0.0, {"t": t, "b": b}, {"item": k, "checks": len(rows)})
    return LemmaReport(items, min_b, thresholds, notices)


def lemma5_threshold(h: SeqLike, a: int, t, q: float, r: float) -> float:
    """Upper enclosure of (int_a^inf h^r / int_t^inf h^r)^(q/(r-q))."""
    base = as_stretched(h, q)
    num = _tail_mp(base, a + 1, r)
    den = integral_from(base, t, r)
    return _f((num.hi / den.lo) ** (MP.mpf(q) / (r - q)))


# ---------------------------------------------------------------------------
# integer searches


def least_int(pred, lo: int = 1, rel_bits: int = 120, max_rounds: int = 40) -> int:
    """Smallest x >= lo with pred(x), for predicates monotone in x.

    Gallops over the bit length (steps 2^(2^k)), bisects the bit length,
    then bisects the value until the bracket is below 2^-rel_bits
    relative.  Below 2^rel_bits the answer is the exact minimum; above it
    the enclosures cannot separate neighbours anyway.
    """
    lo = int(lo)
    if pred(lo):
        return lo
    k = 0
    while not pred(lo + (1 << (1 << k))):
        k += 1
        if k > max_rounds:
            raise SearchError("search did not terminate")
    if k == 0:
        return lo + 1 if pred(lo + 1) else lo + 2
    e_lo, e_hi = 1 << (k - 1), 1 << k  # pred fails at lo + 2^e_lo, holds at lo + 2^e_hi
    while e_hi - e_lo > 1:
        mid = (e_lo + e_hi) // 2
        if pred(lo + (1 << mid)):
            e_hi = mid
        else:
            e_lo = mid
    bad, good = lo + (1 << e_lo), lo + (1 << e_hi)
    stop = max(1, (good - lo) >> rel_bits)
    while good - bad > stop:
        mid = (bad + good) // 2
        if pred(mid):
            good = mid
        else:
            bad = mid
    return good


# ---------------------------------------------------------------------------
# the construction


REGIMES = ("p>0&r<inf", "p>0&r=inf", "p=0&r<inf", "p=0&r=inf")


def regime_of(p: float, r: float) -> str:
    if p > 0:
        return REGIMES[0] if math.isfinite(r) else REGIMES[1]
    return REGIMES[2] if math.isfinite(r) else REGIMES[3]


def default_sigma(p: float, q: float) -> float:
    """Exponent of the demonstration sequence g_n = n^-sigma.

    It lies strictly between 1/q and 1/p (p > 0), so g is in l^q but not
    in l^p; for p = 0 it is 1/q + 1/2.
    """
    if p == 0:
        return 1.0 / q + 0.5
    return (1.0 / q + 1.0 / p) / 2


@dataclass(frozen=True)
class StepRecord:
    n: int
    a: int
    b: int
    gamma: int
    delta: int | None


@dataclass(frozen=True)
class Checkpoint:
    n: int
    t: object
    K_f: object
    K_g: object
    ratio: float
    ratio_hi: float
    bound: float


def _enc_int(v):
    if v is None:
        return None
    v = int(v)
    return v if abs(v) < 2 ** 53 else hex(v)


def _dec_int(v):
    if v is None or isinstance(v, int):
        return v
    if isinstance(v, str) and v.lower().startswith(("0x", "-0x")):
        return int(v, 16)
    raise ValueError(f"bad integer field {v!r}")


def _enc_num(v):
    v = MP.mpf(v)
    if abs(v) < MP.mpf(1e300) and (v == 0 or abs(v) > MP.mpf(1e-300)):
        return float(v)
    return MP.nstr(v, 17)


@dataclass
class CounterexampleTrace:
    regime: str
    p: float
    q: float
    r: float
    g: Seq
    steps: list
    checkpoints: list
    horizon: int  # f agrees with the limit on cells 1..horizon

    def to_json(self) -> dict:
        return {
            "regime": self.regime,
            "p": self.p, "q": self.q, "r": "inf" if math.isinf(self.r) else self.r,
            "g": self.g.to_json(),
            "horizon": _enc_int(self.horizon),
            "steps": [{"n": s.n, "a": _enc_int(s.a), "b": _enc_int(s.b),
                       "gamma": _enc_int(s.gamma), "delta": _enc_int(s.delta)} for s in self.steps],
            "checkpoints": [{"n": c.n, "t": _enc_num(c.t), "ratio": c.ratio, "ratio_hi": c.ratio_hi,
                             "bound": c.bound, "K_f": _enc_num(c.K_f), "K_g": _enc_num(c.K_g)}
                            for c in self.checkpoints],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, obj: dict) -> "CounterexampleTrace":
        try:
            r = obj["r"]
            r = INF if r == "inf" else float(r)
            steps = [StepRecord(int(s["n"]), _dec_int(s["a"]), _dec_int(s["b"]),
                                _dec_int(s["gamma"]), _dec_int(s["delta"])) for s in obj["steps"]]
            cps = [Checkpoint(int(c["n"]), c["t"], c["K_f"], c["K_g"], float(c["ratio"]),
                              float(c["ratio_hi"]), float(c["bound"])) for c in obj["checkpoints"]]
            return cls(obj["regime"], float(obj["p"]), float(obj["q"]), r, Seq.from_json(obj["g"]),
                       steps, cps, _dec_int(obj["horizon"]))
        except (KeyError, TypeError) as exc:
            raise ValueError("malformed trace JSON") from exc

    def ratio_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "t", "K_f", "K_g", "ratio"])
        for c in self.checkpoints:
            w.writerow([c.n, MP.nstr(MP.mpf(c.t), 17), MP.nstr(MP.mpf(c.K_f), 17),
                        MP.nstr(MP.mpf(c.K_g), 17), repr(c.ratio)])
        return buf.getvalue()


def _check_g(g: Seq, p: float, q: float, r: float):
    if not 0 <= p < q < r:
        raise ValueError("needs 0 <= p < q < r <= inf")
    if not isinstance(g, Seq):
        raise TypeError("g must be a Seq")
    if g.is_finite:
        raise ValueError("g must have infinite support (and lie outside l^p)")
    if not isinstance(g.tail, PowerTail):
        raise ValueError("g needs a power tail")
    if g.tail.sigma * q <= 1:
        raise ValueError("g is not in l^q (sigma*q <= 1)")
    if p > 0 and g.tail.sigma * p > 1:
        raise ValueError("g lies in l^p; the construction needs g outside l^p")


def _gamma(G: StretchedSeq, n: int, q: float) -> int:
    """Least m with int_m^inf G^q <= 1/n, certified."""
    lim = MP.one / n
    return least_int(lambda m: _tail_mp(G, m + 1, q).hi <= lim, 1)


def _delta(g: Seq, G: StretchedSeq, n: int, a: int, p: float) -> int:
    """Least d > n a with int_0^d g^p >= 2 n^p int_0^a G^p, certified."""
    need = _head_mp(G, a, p).hi * 2 * MP.mpf(n) ** p
    return least_int(lambda d: _head_mp(g, d, p).lo >= need, n * a + 1)


def _value_iv(s: Seq, k: int, ctx):
    if k <= len(s.prefix):
        return ctx.mpf(float(s.prefix[k - 1]))
    return ctx.mpf(s.tail.c) * ctx.mpf(k) ** (-ctx.mpf(s.tail.sigma))


def closed_form_b(G: StretchedSeq, g: Seq, n: int, a: int, q: float) -> int:
    """[((n+1) G(a) / g(n(a+1)))^q] + 1 with the step-function arguments.

    G(a) is cell a+1 of G and g(n(a+1)) is cell n(a+1)+1 of g.  The
    floor is evaluated in interval arithmetic with precision sized to the
    operands and raised until both endpoints agree.
    """
    reg = G.region_of(a + 1)
    J = reg.index_of(a + 1)
    K = n * (a + 1) + 1
    bits = 2 * (reg.B.bit_length() + J.bit_length() + K.bit_length() + n.bit_length()) + 128
    for _ in range(8):
        ctx = MPIntervalContext()
        ctx.prec = bits
        Gv = _value_iv(G.base, J, ctx) * ctx.mpf(reg.B) ** (-1 / ctx.mpf(q))
        x = (ctx.mpf(n + 1) * Gv / _value_iv(g, K, ctx)) ** ctx.mpf(q)
        lo, hi = to_int(x._mpi_[0], "f"), to_int(x._mpi_[1], "f")
        if lo == hi:
            return lo + 1
        bits *= 2
    raise ArithmeticError("could not resolve the floor in the closed-form b")


def _b_predicate(regime, g, G, n, a, delta, p, q, r):
    conds = []
    nn = MP.mpf(n)
    if regime in (REGIMES[0], REGIMES[2]):
        tG = _tail_mp(G, a + 1, r)
        gt = _tail_mp(g, delta + 1, r).scale(nn ** (-r))
        conds.append(lambda H: _tail_mp(H, a + 1, r).hi <= tG.lo)   # r-tails past a_k do not grow
        conds.append(lambda H: _tail_mp(H, a + 1, r).hi <= gt.lo)   # r-tail past a is small
    if regime in (REGIMES[0], REGIMES[1]):
        gh = _head_mp(g, delta, p).scale(nn ** (-p))
        conds.append(lambda H: _head_mp(H, delta, p).hi <= gh.lo)   # head p-sum up to delta is small

    def pred(b):
        H = stretch(G, a, b, q)
        return all(c(H) for c in conds)
    return pred


def gen_counterexample(g: Seq, p: float, q: float, r: float, steps: int):
    """Run the construction for ``steps`` steps.

    Returns (f, trace) with f = G_steps; f agrees with the limit sequence
    on cells 1..trace.horizon.
    """
    if steps < 1:
        raise ValueError("steps must be positive")
    _check_g(g, p, q, r)
    regime = regime_of(p, r)
    uses_delta = regime != REGIMES[3]
    G = as_stretched(g, q)
    gam = _gamma(G, 1, q)
    records = [StepRecord(1, 1, 1, gam, 1 if uses_delta else None)]
    for n in range(1, steps):
        prev = records[-1]
        a = max(gam, prev.a + 1, prev.delta or 0)
        if regime == REGIMES[3]:
            delta = None
            b = closed_form_b(G, g, n, a, q)
        else:
            delta = _delta(g, G, n, a, p) if p > 0 else n * a + 1
            b = least_int(_b_predicate(regime, g, G, n, a, delta, p, q, r), 1)
        G = stretch(G, a, b, q)
        gam = _gamma(G, n + 1, q)
        records.append(StepRecord(n + 1, a, b, gam, delta))
    last = records[-1]
    horizon = max(gam, last.a + 1, last.delta or 0)
    trace = CounterexampleTrace(regime, p, q, r, g, records, [], horizon)
    trace.checkpoints = counterexample_checkpoints(G, trace)
    return G, trace


def rebuild(g: Seq, q: float, steps, upto: int | None = None) -> StretchedSeq:
    """G_m from the recorded schedule (all steps when upto is None)."""
    G = as_stretched(g, q)
    for s in steps[1:]:
        if upto is not None and s.n > upto:
            break
        G = stretch(G, s.a, s.b, q)
    return G


def _next_a(trace, n: int) -> int:
    """a_{n+1} from the trace (the horizon for the last step)."""
    return trace.steps[n].a if n < len(trace.steps) else trace.horizon


def counterexample_checkpoints(f: SeqLike, trace: CounterexampleTrace) -> list:
    """Regime-specific ratio of f-level to g-level quantities per step n.

    * p > 0: Holmstedt expressions for (l^p, l^r) at t = delta_{n+1}^(1/alpha)
      (bound 1/n by construction);
    * p = 0, r < inf: (sum_{k>a} f^r / sum_{k>na} g^r)^(1/r) with a = a_{n+1}
      (bound 1/n);
    * p = 0, r = inf: f(a+2) / g(n(a+1)+1) (bound 1/(n+1)).
    Only steps whose quantities lie in the stabilized range are reported.
    """
    g, p, q, r = trace.g, trace.p, trace.q, trace.r
    out = []
    N = len(trace.steps)
    for n in range(1, N):
        rec = trace.steps[n]  # step n+1: a_{n+1}, b_{n+1}, delta_{n+1}
        a = rec.a
        if trace.regime in REGIMES[:2]:
            d = rec.delta
            if d > _next_a(trace, n + 1):
                continue
            inv_alpha = MP.mpf(1) / p - (0 if math.isinf(r) else MP.mpf(1) / r)
            t = MP.mpf(d) ** inv_alpha

            def H(s):
                head = _head_mp(s, d, p).power(1 / MP.mpf(p))
                if math.isinf(r):
                    return head.widen()
                return (head + _tail_mp(s, d + 1, r).power(1 / MP.mpf(r)).scale(t)).widen()
            Kf, Kg = H(f), H(g)
            bound = 1.0 / n
        elif trace.regime == REGIMES[2]:
            t = MP.mpf(a)
            Kf = _tail_mp(f, a + 1, r).power(1 / MP.mpf(r)).widen()
            Kg = _tail_mp(g, n * a + 1, r).power(1 / MP.mpf(r)).widen()
            bound = 1.0 / n
        else:
            if a + 2 > _next_a(trace, n + 1):
                continue
            t = MP.mpf(n * (a + 1))
            vf, vg = f.value_mp(a + 2), g.value_mp(n * (a + 1) + 1)
            Kf, Kg = CertifiedValue(vf, vf).widen(), CertifiedValue(vg, vg).widen()
            bound = 1.0 / (n + 1)
        lo, hi = Kf.lo / Kg.hi, Kf.hi / Kg.lo
        out.append(Checkpoint(n, t, Kf.mid if abs(Kf.hi) < 1e300 else (Kf.lo + Kf.hi) / 2,
                              (Kg.lo + Kg.hi) / 2, float((lo + hi) / 2), float(hi), bound))
    return out


# ---------------------------------------------------------------------------
# verification


@dataclass
class CounterexampleReport:
    verdicts: dict
    ratios: list
    least_ratio: float | None
    notices: list = field(default_factory=list)

    @property
    def status(self) -> Status:
        return combine(self.verdicts.values())


def _tail_domination(f, g, q, trace, horizon) -> Verdict:
    """sum_{j>=m} g^q <= sum_{j>=m} f^q for m <= horizon.

    Up to a_2 + 1 both sides coincide (f = g on 1..a_2 and the q-masses
    are equal).  Beyond, the difference is the running sum of g^q - f^q
    started at a_2 + 1, evaluated explicitly up to ``horizon`` with a
    rounding bound; construction points past the horizon are checked
    with multiprecision tail enclosures.
    """
    a2 = trace.steps[1].a if len(trace.steps) > 1 else trace.horizon
    H = int(horizon)
    worst, witness = math.inf, None
    if H > a2 + 1:
        idx = range(a2 + 1, H)
        gv = np.array([float(g.value_mp(j)) for j in idx]) ** q
        fv = np.array([float(f.value_mp(j)) for j in idx]) ** q
        run = np.cumsum(gv - fv)
        err = 4 * np.finfo(float).eps * np.arange(1, len(run) + 1) * np.cumsum(gv + fv) + 1e-300
        slack = run + err
        k = int(np.argmin(slack))
        if slack[k] < 0:
            return Verdict(Status.FAIL, float(run[k]), a2 + 2 + k, {"horizon": H})
        worst, witness = float(run.min()), a2 + 2 + int(np.argmin(run))
    status = Status.PASS
    points = set()
    for s in trace.steps[1:]:
        for m in (s.a + 1, s.a + 2, (s.delta or 0) + 1, s.gamma + 1):
            if m > max(H, a2 + 1):
                points.add(m)
    for m in sorted(points):
        st = _le(_tail_mp(g, m, q), _tail_mp(f, m, q))
        if st is Status.FAIL:
            return Verdict(Status.FAIL, -1.0, m, {"horizon": H})
        if st is Status.UNDECIDED:
            status = Status.UNDECIDED
    return Verdict(status, 0.0 if worst is math.inf else worst, witness,
                   {"horizon": H, "extra_points": len(points)})


def _stabilization(f, trace, sample: int = 64) -> Verdict:
    g, q = trace.g, trace.q
    for m in range(1, len(trace.steps) + 1):
        Gm = rebuild(g, q, trace.steps, m)
        top = _next_a(trace, m)
        cells = set(range(1, min(top, sample) + 1))
        cells.update({top, max(1, top - 1), max(1, top // 2)})
        for c in sorted(cells):
            if f.value_mp(c) != Gm.value_mp(c):
                return Verdict(Status.FAIL, 0.0, {"step": m, "cell": c})
    return Verdict(Status.PASS, 0.0)


def verify_counterexample(f: SeqLike, g: Seq, p: float, q: float, r: float,
                          trace: CounterexampleTrace, horizon: int = 1 << 16) -> CounterexampleReport:
    """Certify conservation, tail domination, stabilization and the ratios."""
    v = {}
    notices = []
    nf, ng = _tail_mp(f, 1, q), _tail_mp(g, 1, q)
    width = max(nf.width, ng.width)
    same = nf.lo <= ng.hi + EXACT_TOL and ng.lo <= nf.hi + EXACT_TOL
    v["conservation"] = Verdict(Status.PASS if same and width <= 1e-6 else Status.FAIL,
                                _f((nf.lo + nf.hi - ng.lo - ng.hi) / 2), None,
                                {"width": width, "f_mass": nf.mid, "g_mass": ng.mid})
    v["tail_domination"] = _tail_domination(f, g, q, trace, min(horizon, trace.horizon))
    v["stabilization"] = _stabilization(f, trace)
    a_seq = [s.a for s in trace.steps]
    incr = all(x < y for x, y in zip(a_seq, a_seq[1:]))
    v["a_increasing"] = Verdict(Status.PASS if incr else Status.FAIL, 0.0)
    if trace.regime != REGIMES[3]:
        ok = all(s.delta > (s.n - 1) * s.a for s in trace.steps[1:])
        v["delta_spacing"] = Verdict(Status.PASS if ok else Status.FAIL, 0.0)
    if trace.regime == REGIMES[2]:
        bad = None
        for n in range(1, len(trace.steps)):
            a = trace.steps[n].a
            lhs = _tail_mp(f, a + 1, r)
            rhs = _tail_mp(g, n * a + 1, r).scale(MP.mpf(n) ** (-r))
            if _le(lhs, rhs) is not Status.PASS:
                bad = n
                break
        v["tail_r_bound"] = Verdict(Status.PASS if bad is None else Status.FAIL, 0.0, bad)
    cps = counterexample_checkpoints(f, trace)
    if len(cps) < len(trace.steps) - 1:
        notices.append(f"{len(trace.steps) - 1 - len(cps)} checkpoint(s) outside the stabilized range")
    over = [c.n for c in cps if c.ratio_hi > c.bound * (1 + 1e-12)]
    v["checkpoint_bound"] = Verdict(Status.PASS if not over else Status.FAIL, 0.0,
                                    over[0] if over else None)
    ratios = [c.ratio for c in cps]
    return CounterexampleReport(v, ratios, min(ratios) if ratios else None, notices)


# ---------------------------------------------------------------------------
# uniform CM failure witnesses


def holmstedt_sequence(z: np.ndarray, p: float, q: float, n_max: int) -> np.ndarray:
    """(P_p z)_n + n^(1/alpha) (Q_q z)_n for n = 1..n_max, z finite."""
    z = np.concatenate((np.asarray(z, float), np.zeros(max(0, n_max - len(z)))))
    head = np.cumsum(z ** p) ** (1 / p)
    tail = np.cumsum((z ** q)[::-1])[::-1] ** (1 / q)
    n = np.arange(1, len(z) + 1)
    return (head + n ** (1 / p - 1 / q) * tail)[:n_max]


def almost_increasing_constant(p: float, q: float, trials: int = 1000, length: int = 48,
                               seed: int = 0) -> float:
    """Largest observed max_{n<=m} H(n)/H(m) over random nonincreasing z.

    The sample mixes geometric, power-law, flat-block and sparse shapes.
    """
    rng = np.random.default_rng(seed)
    best = 1.0
    n = np.arange(1, length + 1)
    for i in range(trials):
        kind = i % 4
        if kind == 0:
            z = rng.uniform(0.05, 0.95) ** n
        elif kind == 1:
            z = n ** (-rng.uniform(0.2, 4.0))
        elif kind == 2:
            z = np.where(n <= rng.integers(1, length + 1), 1.0, 0.0)
        else:
            z = np.sort(rng.exponential(size=length) * (rng.random(length) < 0.3))[::-1]
        if not np.any(z):
            continue
        Hs = holmstedt_sequence(z, p, q, length + 1)
        best = max(best, float(np.max(np.maximum.accumulate(Hs) / Hs)))
    return best


@dataclass(frozen=True)
class Witness:
    x: Seq
    y: Seq
    N: int
    bound: float
    c_hat: float | None
    hypothesis: Verdict


def _min_N(expo: float, target: float) -> int:
    N = max(1, int(math.floor(target ** (1 / expo))))
    while N > 1 and (N - 1) ** expo > target:
        N -= 1
    while N ** expo <= target:
        N += 1
    return N


def cm_witness(p: float, q: float, C: float, c_hat: float | None = None, seed: int = 0) -> Witness:
    """x, y = e_1 with dominated Holmstedt (or tail) data but ||S|| >= bound > C."""
    if not 0 <= p < q < 1:
        raise ValueError("needs 0 <= p < q < 1")
    if C < 1:
        raise ValueError("C must be >= 1")
    expo = 1 / q - 1
    if p == 0:
        N = _min_N(expo, C)
        x = np.full(N, N ** (-1 / q))
        bound = N ** expo
        c_hat = None
    else:
        if c_hat is None:
            c_hat = almost_increasing_constant(p, q, seed=seed)
        N = _min_N(expo, 2 * c_hat * C)
        x = np.full(N, 2 * c_hat * N ** (-1 / q))
        bound = N ** expo / (2 * c_hat)
    y = np.zeros(N)
    y[0] = 1.0
    xs, ys = Seq(x), Seq(y)
    return Witness(xs, ys, N, bound, c_hat, witness_hypothesis(xs, ys, p, q, N))


def witness_hypothesis(x: Seq, y: Seq, p: float, q: float, N: int) -> Verdict:
    """Direct check of the domination hypothesis for n <= N + 1."""
    L = N + 1
    xv = np.concatenate((x.prefix, np.zeros(L - len(x.prefix))))
    yv = np.concatenate((y.prefix, np.zeros(L - len(y.prefix))))
    if p == 0:
        hx = np.cumsum((xv ** q)[::-1])[::-1] ** (1 / q)
        hy = np.cumsum((yv ** q)[::-1])[::-1] ** (1 / q)
    else:
        hx = holmstedt_sequence(xv, p, q, L)
        hy = holmstedt_sequence(yv, p, q, L)
    slack = hx - hy
    tol = EXACT_TOL * np.maximum(1.0, hx)
    bad = np.nonzero(slack < -tol)[0]
    if len(bad):
        return Verdict(Status.FAIL, float(slack[bad[0]]), int(bad[0]) + 1)
    return Verdict(Status.PASS, float(slack.min()), int(np.argmin(slack)) + 1)


def rank_one_operator(x: Seq, y: Seq) -> np.ndarray:
    """S0 z = (<z, x> / <x, x>) y, so S0 x = y."""
    xv, yv = np.asarray(x.prefix, float), np.asarray(y.prefix, float)
    return np.outer(yv, xv) / float(xv @ xv)


def null_space_operators(x: Seq, y: Seq, count: int, seed: int = 0, scale: float = 1.0):
    """S0 + W (I - x x^T / |x|^2) for random Gaussian W; each satisfies Sx = y."""
    rng = np.random.default_rng(seed)
    xv = np.asarray(x.prefix, float)
    S0 = rank_one_operator(x, y)
    P = np.eye(len(xv)) - np.outer(xv, xv) / float(xv @ xv)
    for _ in range(count):
        W = rng.standard_normal(S0.shape) * scale
        yield S0 + W @ P


def cm_witness_verify(x: Seq, y: Seq, N: int, q: float, S, p: float = 0.0,
                      c_hat: float | None = None) -> Verdict:
    """Exact l^q norm of S against the witness bound; REFUSED when Sx != y."""
    M = S if isinstance(S, OperatorMatrix) else OperatorMatrix(np.asarray(S, float))
    xv = np.asarray(x.prefix, float)
    yv = np.asarray(y.prefix, float)
    out = M.apply(xv)
    L = max(len(out), len(yv))
    diff = np.pad(out, (0, L - len(out))) - np.pad(yv, (0, L - len(yv)))
    if np.max(np.abs(diff), initial=0.0) > 1e-10:
        return Verdict(Status.REFUSED, float(np.max(np.abs(diff))), None, {"reason": "Sx != y"})
    bound = N ** (1 / q - 1)
    if p > 0:
        if c_hat is None:
            raise ValueError("p > 0 needs the almost-increasing constant")
        bound /= 2 * c_hat
    norm = norm_lq_exact(M, q).hi
    margin = norm - (bound - 1e-9)
    return Verdict(Status.PASS if margin >= 0 else Status.FAIL, margin, None,
                   {"norm": norm, "bound": bound})
