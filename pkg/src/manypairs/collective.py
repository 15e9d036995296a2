"""Exact count statistics of n independent identical pairs.

Each party only observes how many of its n particles gave outcome 1, so
the object of interest is the joint distribution of the two count totals,
an (n+1) x (n+1) matrix per setting pair.  It is built by iterated
convolution of the single-pair 2x2 joint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .pairstats import SETTING_PAIRS, PairJointDistribution

#: Default cap on n; each matrix is (n+1)^2 doubles.
N_MAX_DEFAULT = 1024


@dataclass(frozen=True)
class CountDistribution:
    """Joint distribution of the collective counts for each setting pair."""

    n: int
    matrices: dict

    def matrix(self, x: int, y: int) -> np.ndarray:
        """(n+1, n+1) array, entry [a, b] = Prob(count_A = a, count_B = b)."""
        return self.matrices[(x, y)]


def _convolve_single(p2: np.ndarray, n: int) -> np.ndarray:
    """n-fold convolution of a 2x2 joint, via incremental shifted adds."""
    cur = p2.astype(float).copy()
    for k in range(1, n):
        nxt = np.zeros((k + 2, k + 2))
        nxt[0:k + 1, 0:k + 1] += p2[0, 0] * cur
        nxt[0:k + 1, 1:k + 2] += p2[0, 1] * cur
        nxt[1:k + 2, 0:k + 1] += p2[1, 0] * cur
        nxt[1:k + 2, 1:k + 2] += p2[1, 1] * cur
        cur = nxt
    cur.setflags(write=False)
    return cur


def convolve_counts(pair: PairJointDistribution, n: int,
                    n_max: int = N_MAX_DEFAULT) -> CountDistribution:
    """Exact count distribution for n independent identical pairs.

    For n = 1 this is the input 2x2 table itself.  Raises
    InvalidArgumentError for n < 1 or n > n_max.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidArgumentError(f"pair count n must be >= 1, got {n!r}")
    if n > n_max:
        raise InvalidArgumentError(
            f"n={n} exceeds the configured cap n_max={n_max}")
    matrices = {}
    for (x, y) in SETTING_PAIRS:
        matrices[(x, y)] = _convolve_single(pair.table(x, y), n)
    return CountDistribution(n=int(n), matrices=matrices)


def combine_counts(first: CountDistribution,
                   second: CountDistribution) -> CountDistribution:
    """Count distribution of the union of two independent pair blocks."""
    n = first.n + second.n
    matrices = {}
    for (x, y) in SETTING_PAIRS:
        a = first.matrix(x, y)
        b = second.matrix(x, y)
        out = np.zeros((n + 1, n + 1))
        for i in range(a.shape[0]):
            for j in range(a.shape[1]):
                if a[i, j] != 0.0:
                    out[i:i + b.shape[0], j:j + b.shape[1]] += a[i, j] * b
        out.setflags(write=False)
        matrices[(x, y)] = out
    return CountDistribution(n=n, matrices=matrices)
