"""Shared fixtures and independent oracles for the test suite."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from manypairs.pairstats import (SETTING_PAIRS, CorrelatorTable,
                                 PairJointDistribution, joint_table)


def random_feasible_table(rng: np.random.Generator,
                          with_marginals: bool = True) -> CorrelatorTable:
    """Sample a correlator table guaranteed to yield valid probabilities.

    For marginals mA, mB the correlator of a setting pair is feasible iff
    -1 + |mA + mB| <= e <= 1 - |mA - mB|.
    """
    if with_marginals:
        ma1, ma2, mb1, mb2 = rng.uniform(-0.3, 0.3, size=4)
    else:
        ma1 = ma2 = mb1 = mb2 = 0.0
    es = {}
    for (x, y) in SETTING_PAIRS:
        ma = ma1 if x == 1 else ma2
        mb = mb1 if y == 1 else mb2
        lo = -1.0 + abs(ma + mb)
        hi = 1.0 - abs(ma - mb)
        es[(x, y)] = rng.uniform(lo, hi)
    return CorrelatorTable(e11=es[(1, 1)], e12=es[(1, 2)], e21=es[(2, 1)],
                           e22=es[(2, 2)], marg_a1=ma1, marg_a2=ma2,
                           marg_b1=mb1, marg_b2=mb2)


def brute_force_counts(pair: PairJointDistribution, n: int) -> dict:
    """Count distribution by enumerating all 4^n outcome strings."""
    out = {}
    for (x, y) in SETTING_PAIRS:
        p = pair.table(x, y)
        mat = np.zeros((n + 1, n + 1))
        for outcomes in itertools.product(range(4), repeat=n):
            prob = 1.0
            a_total = 0
            b_total = 0
            for o in outcomes:
                a, b = divmod(o, 2)
                prob *= p[a, b]
                a_total += a
                b_total += b
            mat[a_total, b_total] += prob
        out[(x, y)] = mat
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
