import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lpinterp.corpus import sparse_matrix
from lpinterp.opnorms import (
    NormReport,
    OperatorMatrix,
    check_extension_theorem,
    column_qnorms,
    couple_norm,
    norm_l0,
    norm_l1,
    norm_linf,
    norm_lp_bounds,
    norm_lq_exact,
    norm_report,
    probe_lower_bound,
    reports_to_csv,
)
from lpinterp.seqcore import CoupleParams, Status

mats = arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 5)),
              elements=st.floats(-3, 3).map(lambda v: v if abs(v) > 1e-6 else 0.0))


def qnorm(v, q):
    v = np.abs(np.asarray(v, float))
    return float(np.sum(v ** q) ** (1 / q))


# --- l^q, q <= 1 -------------------------------------------------------------------

def test_lq_examples():
    assert norm_lq_exact(OperatorMatrix.identity(4), 0.5).hi == 1
    M = OperatorMatrix(np.array([[1.0, 0.0], [1.0, 1.0]]))
    assert norm_lq_exact(M, 0.5).hi == pytest.approx(4)


def test_lq_rejects_q_above_one():
    with pytest.raises(ValueError):
        norm_lq_exact(OperatorMatrix.identity(2), 1.5)


def test_lq_random_probing_6x6():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((6, 6))
    M = OperatorMatrix(A)
    q = 0.7
    nrm = norm_lq_exact(M, q).hi
    for _ in range(1000):
        x = rng.standard_normal(6)
        assert qnorm(A @ x, q) <= nrm * qnorm(x, q) * (1 + 1e-12)
    k = int(np.argmax(column_qnorms(M, q)))
    e = np.zeros(6)
    e[k] = 1
    assert qnorm(A @ e, q) == pytest.approx(nrm, rel=1e-12)


@given(mats, st.sampled_from([0.3, 0.5, 0.7, 1.0]))
def test_lq_matches_column_oracle(A, q):
    M = OperatorMatrix(A)
    oracle = max((qnorm(A[:, k], q) for k in range(A.shape[1])), default=0.0)
    assert norm_lq_exact(M, q).hi == pytest.approx(oracle, rel=1e-12, abs=1e-300)


@given(mats)
def test_lq_nonincreasing_in_q(A):
    M = OperatorMatrix(A)
    vals = [norm_lq_exact(M, q).hi for q in (0.2, 0.4, 0.6, 0.8, 1.0)]
    assert all(a >= b * (1 - 1e-12) for a, b in zip(vals, vals[1:]))


# --- l^0 ------------------------------------------------------------------------

def test_l0_examples():
    assert norm_l0(OperatorMatrix.identity(3)).hi == 1
    A = np.zeros((5, 3))
    A[:, 1] = np.arange(1, 6)
    assert norm_l0(OperatorMatrix(A)).hi == 5


def l0_exhaustive(A, max_support=3):
    """max card(supp Ax)/card(supp x) over 0/1-support vectors with generic weights."""
    rng = np.random.default_rng(1)
    best = 0.0
    n = A.shape[1]
    for size in range(1, min(max_support, n) + 1):
        for S in itertools.combinations(range(n), size):
            x = np.zeros(n)
            x[list(S)] = rng.uniform(0.5, 1.5, size)  # generic: avoids cancellation
            best = max(best, np.count_nonzero(np.abs(A @ x) > 1e-12) / size)
    return best


def test_l0_exhaustive_small_support():
    rng = np.random.default_rng(2)
    for _ in range(100):
        A = sparse_matrix(rng, int(rng.integers(1, 7)), int(rng.integers(1, 7)))
        assert norm_l0(OperatorMatrix(A)).hi == l0_exhaustive(A)


# --- l^1, l^inf, l^p --------------------------------------------------------------

def test_l1_linf_examples():
    I = OperatorMatrix.identity(3)
    assert norm_l1(I).hi == 1 and norm_linf(I).hi == 1
    J = OperatorMatrix(np.ones((3, 3)))
    assert norm_l1(J).hi == 3 and norm_linf(J).hi == 3


def test_linf_sign_vector_attains():
    rng = np.random.default_rng(4)
    A = rng.standard_normal((5, 7))
    nrm = norm_linf(OperatorMatrix(A)).hi
    i = int(np.argmax(np.abs(A).sum(1)))
    x = np.sign(A[i])
    assert np.max(np.abs(A @ x)) == pytest.approx(nrm, rel=1e-12)
    assert probe_lower_bound(OperatorMatrix(A), math.inf) <= nrm + 1e-12


def test_lp_examples():
    r = norm_lp_bounds(OperatorMatrix.identity(3), 2)
    assert r.lo == r.hi == 1
    r = norm_lp_bounds(OperatorMatrix(np.diag([2.0, 1.0])), 3)
    assert r.exact and r.hi == 2


def test_lp_spectral_oracle():
    rng = np.random.default_rng(5)
    for _ in range(10):
        A = rng.uniform(0, 1, (5, 5))
        r = norm_lp_bounds(OperatorMatrix(A), 2)
        s = float(np.linalg.norm(A, 2))
        assert abs(r.lo - s) <= 1e-6 * s
        assert r.hi >= r.lo


@given(mats, st.floats(1.1, 6))
def test_lp_interpolation_bound(A, p):
    M = OperatorMatrix(A)
    r = norm_lp_bounds(M, p)
    riesz = norm_l1(M).hi ** (1 / p) * norm_linf(M).hi ** (1 - 1 / p)
    assert r.lo <= r.hi <= riesz * (1 + 1e-12) + 1e-12


def test_probing_never_exceeds_reports():
    rng = np.random.default_rng(6)
    for i in range(1000):
        A = sparse_matrix(rng, int(rng.integers(1, 5)), int(rng.integers(1, 5)), 0.6)
        M = OperatorMatrix(A)
        e = [0, 0.5, 1, 2, math.inf][i % 5]
        lb = probe_lower_bound(M, e, trials=20, seed=i)
        assert lb <= norm_report(M, e).hi * (1 + 1e-9) + 1e-12


@given(mats, mats, st.sampled_from([0, 0.5, 1, math.inf]))
def test_submultiplicative(A, B, e):
    if A.shape[1] != B.shape[0]:
        B = np.resize(B, (A.shape[1], B.shape[1]))
    MA, MB = OperatorMatrix(A), OperatorMatrix(B)
    lhs = norm_report(MA @ MB, e).hi
    # for l^0 products can only lose support through cancellation
    assert lhs <= norm_report(MA, e).hi * norm_report(MB, e).hi * (1 + 1e-9) + 1e-12


# --- couples and the extension check ----------------------------------------------

def test_couple_norm_examples():
    assert couple_norm(OperatorMatrix.identity(3), CoupleParams(0, 1))[2].hi == 1
    r0, r1, c = couple_norm(OperatorMatrix.identity(3) * 2, CoupleParams(0, 1))
    assert (r0.hi, r1.hi, c.hi) == (1, 2, 2)


@given(mats)
def test_couple_norm_recomposition(A):
    M = OperatorMatrix(A)
    r0, r1, c = couple_norm(M, CoupleParams(0.5, math.inf))
    assert c.hi == max(norm_lq_exact(M, 0.5).hi, norm_linf(M).hi)
    assert r0 == norm_report(M, 0.5) and r1 == norm_linf(M)


def test_extension_examples():
    M = OperatorMatrix(np.array([[1.0], [1.0]]))
    v = check_extension_theorem(M, 0.5, 1)
    assert v.status is Status.PASS
    assert v.detail["theta_r"] == pytest.approx(2) and v.detail["theta_q"] == pytest.approx(4)
    v = check_extension_theorem(OperatorMatrix.identity(3), 0.3, 0.8)
    assert v.detail["theta_r"] == v.detail["theta_q"] == 1


def test_extension_random_sparse():
    rng = np.random.default_rng(8)
    for _ in range(100):
        M = OperatorMatrix(sparse_matrix(rng, 6, 6))
        assert check_extension_theorem(M, 0.3, 0.8).status is Status.PASS


# --- matrix plumbing -----------------------------------------------------------

def test_matrix_json_roundtrip_and_no_zeros():
    A = np.array([[0.0, 1.5], [2.0, 0.0]])
    M = OperatorMatrix(A)
    assert M.nnz == 2
    obj = json.loads(M.dumps())
    assert obj == {"rows": 2, "cols": 2, "triplets": [[0, 1, 1.5], [1, 0, 2.0]]}
    assert np.array_equal(OperatorMatrix.from_json(obj).toarray(), A)


def test_matrix_rejects_bad_input():
    with pytest.raises(ValueError):
        OperatorMatrix(np.array([[np.inf]]))
    with pytest.raises(ValueError):
        OperatorMatrix.from_triplets(2, 2, [(2, 0, 1.0)])
    with pytest.raises(ValueError):
        OperatorMatrix.identity(2).apply([1, 1, 1])


def test_apply_zero_extends():
    M = OperatorMatrix(np.array([[1.0, 2.0, 3.0]]))
    assert M.apply([1]).tolist() == [1.0]


def test_report_invariants_and_csv():
    with pytest.raises(ValueError):
        NormReport("l1", 2, 1, False)
    with pytest.raises(ValueError):
        NormReport("l1", 1, 2, True)
    text = reports_to_csv([norm_l1(OperatorMatrix.identity(2))])
    assert text.splitlines() == ["space,lo,hi,exact", "l1,1.0,1.0,true"]
