import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lpinterp import corpus
from lpinterp import decomposer as dc
from lpinterp.counterexample import holmstedt_sequence
from lpinterp.opnorms import couple_norm, norm_l0
from lpinterp.seqcore import CoupleParams, Seq, Status, dilate, rearrange

C12 = CoupleParams(1, 2)
entries = st.floats(0, 2, allow_nan=False).map(lambda v: v if v >= 1e-6 else 0.0)
seqs = st.lists(entries, min_size=1, max_size=8).map(rearrange)


# --- majorization checks ------------------------------------------------------------

def test_head_majorizes_examples():
    x = Seq([3, 2, 1])
    assert dc.head_majorizes(x, x, 1).status is Status.PASS
    assert dc.head_majorizes(x, Seq([2.5, 2, 1]), 1).status is Status.PASS
    v = dc.head_majorizes(Seq([1, 1]), Seq([1.2, 0.5]), 1)
    assert v.status is Status.FAIL and v.witness == 1


@given(seqs, seqs, st.sampled_from([0.5, 1, 2]))
def test_head_majorizes_vs_direct_sums(x, y, p):
    H = max(len(x.prefix), len(y.prefix))
    xv = np.pad(x.prefix, (0, H - len(x.prefix)))
    yv = np.pad(y.prefix, (0, H - len(y.prefix)))
    diff = np.cumsum(xv ** p) - np.cumsum(yv ** p)
    v = dc.head_majorizes(x, y, p)
    tol = 1e-12 * max(1.0, float(np.sum(xv ** p)))
    if np.all(diff >= tol):
        assert v.status is Status.PASS
    elif np.any(diff < -tol):
        assert v.status is Status.FAIL
        assert v.witness == int(np.nonzero(diff < -tol)[0][0]) + 1


@given(seqs, st.floats(0, 1))
def test_head_majorization_monotone_closure(x, lam):
    y = rearrange(np.asarray(x.prefix) * 0.9)
    if dc.head_majorizes(x, y, 1).status is Status.PASS:
        assert dc.head_majorizes(x, rearrange(np.asarray(y.prefix) * lam), 1).status is Status.PASS


def test_tail_majorizes_examples():
    x = Seq([3, 2, 1])
    assert dc.tail_majorizes_shifted(x, x, 1, 1).status is Status.PASS
    # y_k = x_{k-1}: sum_{k>=n} y = sum_{k>=n-1} x <= 2 sum_{k >= [(n-1)/2]+1} x
    shifted = Seq([3, 3, 2, 1])
    assert dc.tail_majorizes_shifted(x, shifted, 1, 2).status is Status.PASS
    inflated = Seq([3, 2, 2])
    v = dc.tail_majorizes_shifted(x, inflated, 1, 1)
    assert v.status is Status.FAIL and v.witness == 1  # 3+2+2 > 3+2+1 already at n = 1


def test_holmstedt_majorizes_examples():
    x = Seq([2, 1, 0.5, 0.25])
    c = CoupleParams(0.5, 1)
    assert dc.holmstedt_majorizes(x, x, c).status is Status.PASS
    assert dc.holmstedt_majorizes(x, Seq(np.asarray(x.prefix) / 2), c).status is Status.PASS


@given(seqs, seqs, st.sampled_from([(0.5, 1), (1, 2), (0.5, 2)]))
def test_holmstedt_majorizes_vs_direct(x, y, pq):
    H = max(len(x.prefix), len(y.prefix))
    hx = holmstedt_sequence(x.prefix, *pq, H)
    hy = holmstedt_sequence(y.prefix, *pq, H)
    v = dc.holmstedt_majorizes(x, y, CoupleParams(*pq))
    slack = hx - hy
    if np.all(slack >= 1e-9 * np.maximum(1, hx)):
        assert v.status is Status.PASS
    if np.any(slack < -1e-9 * np.maximum(1, hx)):
        assert v.status is Status.FAIL


# --- partition and certificates ---------------------------------------------------------

def test_partition_identity():
    x = Seq([3, 2, 1])
    part = dc.ab_partition(x, x, C12)
    assert part.a_blocks == ((1, 3),) and part.b_blocks == ((1, 3),)
    certs = dc.block_certificates(x, x, part, C12)
    assert all(c.margin == 0 for c in certs)


def test_partition_a_only_example():
    x, y = Seq([2, 1]), Seq([1, 1, 1])
    part = dc.ab_partition(x, y, C12)
    assert part.a_blocks == ((1, 3),)
    heads = [c for c in dc.block_certificates(x, y, part, C12) if c.kind == "head"]
    assert len(heads) == 1 and heads[0].margins == (1.0, 1.0, 0.0)


def test_partition_reports_uncovered_index():
    with pytest.raises(dc.CoverageError) as err:
        dc.ab_partition(Seq([1, 1]), Seq([2]), C12)
    assert err.value.index == 1


def fraction_margins(xv, yv, block, kind, e):
    n, m = block
    xs = [Fraction(v) ** e for v in xv[n - 1:m]]
    ys = [Fraction(v) ** e for v in yv[n - 1:m]]
    if kind == "head":
        return [sum(xs[:i + 1]) - sum(ys[:i + 1]) for i in range(len(xs))]
    return [sum(xs[i:]) - sum(ys[i:]) for i in range(len(xs))]


def test_partition_and_certificates_corpus():
    rng = corpus.rng_for(21)
    for i in range(100):
        couple = [CoupleParams(0.5, 1), CoupleParams(1, 2), CoupleParams(0.5, 2)][i % 3]
        x, y = corpus.holmstedt_pair(rng, couple)
        assert dc.holmstedt_majorizes(x, y, couple).status is Status.PASS
        part = dc.ab_partition(x, y, couple)
        cov = part.in_a() | part.in_b()
        assert cov.all()
        for c in dc.block_certificates(x, y, part, couple):
            assert c.valid, c
        blocks = part.a_blocks
        assert all(b[1] + 1 < c[0] for b, c in zip(blocks, blocks[1:]))


def test_certificate_margins_match_rational_arithmetic():
    rng = np.random.default_rng(3)
    for _ in range(30):
        # dyadic rationals make float sums of squares exact
        x = rearrange(rng.integers(0, 16, 6) / 8)
        y = rearrange(rng.integers(0, 16, 6) / 8)
        H = 6
        part = dc.IntervalPartition(((1, H),), ((1, H),), H)
        for c in dc.block_certificates(x, y, part, C12):
            e = 1 if c.kind == "head" else 2
            exact = fraction_margins(x.prefix, y.prefix, c.block, c.kind, e)
            assert [Fraction(v) for v in c.margins] == exact


def test_certificates_csv():
    x, y = Seq([2, 1]), Seq([1, 1, 1])
    text = dc.certificates_to_csv(dc.block_certificates(x, y, dc.ab_partition(x, y, C12), C12))
    assert text.splitlines()[0] == "block_start,block_end,kind,margin"


# --- transports ----------------------------------------------------------------------

def test_head_transfer_examples():
    xb = np.array([3.0, 2.0, 1.0])
    T = dc.build_head_transfer(xb, xb, 1, (1, 3))
    assert np.allclose(T.toarray(), np.eye(3))
    T = dc.build_head_transfer(xb, xb / 2, 1, (1, 3))
    assert np.allclose(T.toarray(), np.eye(3) / 2)
    x, y = np.array([2.0, 1.0, 0.0]), np.array([1.0, 1.0, 1.0])
    T = dc.build_head_transfer(x, y, 1, (1, 3))
    assert np.allclose(T.apply(x), y, atol=1e-12)
    _, _, c = couple_norm(T, CoupleParams(1, math.inf))
    assert c.hi <= 8


def test_tail_transfer_examples():
    xb = np.array([3.0, 2.0, 1.0])
    assert np.allclose(dc.build_tail_transfer(xb, xb, 1, 1, (1, 3)).toarray(), np.eye(3))
    # a one-step shift towards larger indices (needs C = 2); supplies are
    # inflated by C, so each source column may feed up to C rows
    ents = dc.tail_transfer_entries(np.array([3.0, 2.0, 1.0, 0.0]), np.array([0.0, 3.0, 2.0, 1.0]), 1, 2)
    M = np.zeros((4, 4))
    for k, j, v in ents:
        M[k, j] = v
    assert np.allclose(M @ [3, 2, 1, 0], [0, 3, 2, 1])
    assert np.count_nonzero(M, axis=0).max() <= 2
    assert np.count_nonzero(M, axis=1).max() <= 2


@given(seqs, st.sampled_from([0.5, 1, 2]))
def test_head_transfer_exact_when_certified(x, p):
    y = rearrange(np.asarray(x.prefix) * np.linspace(1, 0.3, len(x.prefix)))
    xv = np.asarray(x.prefix)
    yv = np.asarray(y.prefix)
    if dc.head_majorizes(x, y, p).status is Status.PASS:
        ents = dc.head_transfer_entries(xv, yv, p)
        M = np.zeros((len(xv), len(xv)))
        for k, j, v in ents:
            M[k, j] += v
        assert np.max(np.abs(M @ xv - yv), initial=0) <= 1e-10 * max(1, xv.max(initial=0))


# --- split pipeline --------------------------------------------------------------------

def test_split_identity():
    x = Seq([3, 2, 1])
    r = dc.split_operator(x, x, C12)
    assert np.allclose(r.T.toarray(), np.eye(3)) and r.S.nnz == 0


def test_split_a_only():
    r = dc.split_operator(Seq([2, 1]), Seq([1, 1, 1]), C12)
    assert r.S.nnz == 0 and r.residual <= 1e-10


def test_split_worked_instance():
    r = dc.split_operator(Seq([4, 1, 1, 1]), Seq([2, 2, 1, 1]), C12)
    assert r.residual <= 1e-10


def test_split_needs_q_at_least_one():
    with pytest.raises(ValueError):
        dc.split_operator(Seq([1]), Seq([1]), CoupleParams(0.3, 0.5))


def _blocks_of(mask):
    out, start = [], None
    for i, v in enumerate(mask):
        if v and start is None:
            start = i
        if not v and start is not None:
            out.append((start, i - 1))
            start = None
    if start is not None:
        out.append((start, len(mask) - 1))
    return out


def test_split_random_structure():
    rng = corpus.rng_for(5)
    for i in range(60):
        couple = [CoupleParams(0.5, 1), CoupleParams(1, 2)][i % 2]
        x, y = corpus.holmstedt_pair(rng, couple)
        r = dc.split_operator(x, y, couple)
        assert r.residual <= 1e-10
        T, S = r.T.toarray(), r.S.toarray()
        H = r.partition.horizon
        blk_a = np.full(H, -1)
        for b, (n, m) in enumerate(r.partition.a_blocks):
            blk_a[n - 1:m] = b
        rows, cols = np.nonzero(T)
        assert np.all(blk_a[rows] == blk_a[cols]) and np.all(blk_a[rows] >= 0)
        in_a = r.partition.in_a()
        assert not np.any(S[in_a])
        blk_b = np.full(H, -1)
        for b, (n, m) in enumerate(r.partition.b_blocks):
            blk_b[n - 1:m] = b
        rows, cols = np.nonzero(S)
        assert np.all(blk_b[rows] == blk_b[cols])


# --- orbit operator ------------------------------------------------------------------

def test_orbit_op_examples():
    x = Seq([1, 1])
    S = dc.orbit_op_l0_linf(x, x)
    assert np.allclose(S.apply(x.prefix)[:2], [1, 1])
    assert np.allclose(dc.orbit_multipliers(x, x, 4), [0.5, 0.5, 0, 0])
    assert dc.orbit_op_l0_linf(x, Seq([])).nnz == 0
    sat = Seq(2 * dilate(Seq([3, 2]), 2).prefix)
    S = dc.orbit_op_l0_linf(Seq([3, 2]), sat)
    assert np.allclose(dc.orbit_multipliers(Seq([3, 2]), sat, 4), 1)
    assert couple_norm(S, CoupleParams(0, math.inf))[2].hi == pytest.approx(2)


def test_orbit_op_rejects_violation():
    with pytest.raises(ValueError):
        dc.orbit_op_l0_linf(Seq([1]), Seq([1, 1, 1]))


def test_orbit_op_norm_bound_random():
    rng = corpus.rng_for(9)
    for _ in range(100):
        x, y = corpus.orbit_pair(rng)
        S = dc.orbit_op_l0_linf(x, y)
        out = S.apply(np.pad(x.prefix, (0, max(0, S.shape[1] - len(x.prefix)))))
        assert np.allclose(out[:len(y.prefix)], y.prefix, atol=1e-12)
        assert couple_norm(S, CoupleParams(0, math.inf))[2].hi <= 2 + 1e-12
        assert norm_l0(S).hi <= 2


# --- S_q check ----------------------------------------------------------------------

def test_sq_permutation_passes():
    x = np.array([3.0, 1.0, 2.0])
    r = dc.sq_check(x, x[::-1], 1, 2)
    assert r.equal_mass.status is Status.PASS and r.head_domination.status is Status.PASS
    assert r.status is Status.PASS


def test_sq_more_peaked_y_passes():
    # head sums of x* must stay below those of y*: y concentrates the mass
    x = np.array([1.0, 1.0, 1.0, 1.0])
    y = np.array([2.0, 1.0, 1.0, 0.0])
    r = dc.sq_check(x, y, 1, 2)
    assert r.status is Status.PASS
    assert r.lsz_tail.status in (Status.PASS, Status.FAIL)


def test_sq_flatter_y_fails_head_condition():
    r = dc.sq_check(np.array([2.0, 1.0, 1.0]), np.array([4 / 3] * 3), 1, 2)
    assert r.equal_mass.status is Status.PASS
    assert r.head_domination.status is Status.FAIL


def test_sq_replay_inequalities():
    rng = np.random.default_rng(4)
    for _ in range(30):
        x = rng.uniform(0, 1, 5)
        y = np.sort(rng.uniform(0, 1, 5))[::-1]
        r = dc.sq_check(x, y, 0.5, 2, replay=True)
        assert r.replay is not None
        u, z = r.u, r.z
        # z has the same q-mass as u and dominates y entrywise
        assert np.sum(u ** 0.5) == pytest.approx(np.sum(z ** 0.5), rel=1e-12)
        assert np.all(z >= np.pad(np.sort(y)[::-1], (0, len(z) - len(y))) - 1e-12)
        assert np.sum(y ** 2) <= np.sum(z ** 2) + 1e-12
