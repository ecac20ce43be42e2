"""Seeded random inputs shared by the tests, the acceptance run and the CLI."""
from __future__ import annotations

import numpy as np

from .decomposer import holmstedt_majorizes
from .functionals import exact_ratio_grid, k_from_e
from .seqcore import CoupleParams, Seq, Status, dilate, rearrange


def rng_for(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_seq(rng: np.random.Generator, max_len: int = 6, hi: float = 2.0,
               min_len: int = 1) -> Seq:
    """Nonincreasing sequence with 1..max_len entries drawn from [0, hi]."""
    n = int(rng.integers(min_len, max_len + 1))
    return rearrange(rng.uniform(0.0, hi, n))


def pointwise_dominated_pair(rng: np.random.Generator, max_len: int = 8) -> tuple:
    """(x, y) with y* <= x* termwise, so every tail of y is below that of x."""
    x = random_seq(rng, max_len, min_len=2)
    u = rng.uniform(0.0, 1.0, len(x.prefix))
    y = rearrange(x.prefix * u)
    return x, y


def k_dominated_pair(rng: np.random.Generator, q: float, max_len: int = 8) -> tuple:
    """(x, y, C) with K(t, y) <= C K(t, x) for all t (l^0, l^q).

    y is a random sequence; C is the exact supremum of K(., y)/K(., x),
    attained on the union of breakpoints, inflated by 1e-9.
    """
    x = random_seq(rng, max_len, min_len=2)
    y = random_seq(rng, max_len, min_len=1)
    grid = exact_ratio_grid(x, y, q)
    C = max(float(k_from_e(y, t, q).hi) / float(k_from_e(x, t, q).lo) for t in grid)
    return x, y, max(1.0, C * (1 + 1e-9)), grid


def holmstedt_pair(rng: np.random.Generator, couple: CoupleParams, max_len: int = 10) -> tuple:
    """(x, y) with per-n Holmstedt domination, y not pointwise below x.

    y is a random sequence scaled down (by bisection on the factor) until
    the domination certifies.
    """
    n = int(rng.integers(3, max_len + 1))
    x = rearrange(rng.uniform(0.1, 2.0, n))
    shape = rng.uniform(0.0, 1.0, int(rng.integers(2, max_len + 1)))
    shape = np.sort(shape)[::-1]
    if rng.random() < 0.5:
        shape = np.concatenate(([shape[0]], np.full(len(shape) - 1, shape[0] * 0.9)))
    lo, hi = 0.0, 4.0
    for _ in range(50):
        mid = (lo + hi) / 2
        if holmstedt_majorizes(x, Seq(shape * mid), couple).status is Status.PASS:
            lo = mid
        else:
            hi = mid
    y = Seq(shape * lo * (1 - 1e-6))
    return x, y


def orbit_pair(rng: np.random.Generator, max_len: int = 8) -> tuple:
    """(x, y) finite with y_k <= 2 (D_2 x)_k for every k."""
    x = random_seq(rng, max_len, min_len=1)
    d2 = dilate(x, 2).prefix
    u = rng.uniform(0.0, 1.0, len(d2))
    y = rearrange(2 * d2 * u)
    # the rearranged y stays below 2 D_2 x since both are nonincreasing
    return x, y


def sparse_matrix(rng: np.random.Generator, rows: int, cols: int, density: float = 0.4) -> np.ndarray:
    mask = rng.random((rows, cols)) < density
    return np.where(mask, rng.standard_normal((rows, cols)), 0.0)
