"""Index arithmetic and combinatorics for the triangular moment lattice.

Entries (i, j) with i + j <= R are stored degree-major. Inside degree
d = i + j the first index runs from d down to 0, so the flat position is
d(d+1)/2 + j.
"""

import math
from functools import lru_cache
from typing import Iterator, Tuple

import numpy as np
from scipy.special import gammaln

EXACT_FACTORIAL_LIMIT = 20


def lattice_size(max_degree: int) -> int:
    """Number of entries with i + j <= max_degree."""
    return (max_degree + 1) * (max_degree + 2) // 2


def flat_index(i: int, j: int) -> int:
    """Flat position of entry (i, j)."""
    d = i + j
    return d * (d + 1) // 2 + j


def lattice_indices(max_degree: int) -> Iterator[Tuple[int, int]]:
    """Yield (i, j) pairs in storage order."""
    for d in range(max_degree + 1):
        for j in range(d + 1):
            yield d - j, j


@lru_cache(maxsize=64)
def index_arrays(max_degree: int) -> Tuple[np.ndarray, np.ndarray]:
    """First and second indices of every stored entry, in storage order."""
    pairs = np.array(list(lattice_indices(max_degree)), dtype=int).reshape(-1, 2)
    first, second = pairs[:, 0].copy(), pairs[:, 1].copy()
    first.flags.writeable = False
    second.flags.writeable = False
    return first, second


def degree_slice(degree: int) -> slice:
    """Slice of the flat array holding one total degree."""
    start = degree * (degree + 1) // 2
    return slice(start, start + degree + 1)


def factorial(n: int) -> float:
    """n! as a float; exact below 21!, log-gamma above."""
    if n < 0:
        raise ValueError(f"factorial of negative number {n}")
    if n <= EXACT_FACTORIAL_LIMIT:
        return float(math.factorial(n))
    return float(np.exp(gammaln(n + 1)))


def binomial(n: int, k: int) -> float:
    """Binomial coefficient C(n, k), zero outside 0 <= k <= n."""
    if k < 0 or k > n:
        return 0.0
    return float(math.comb(n, k))


def odd_double_factorial(l: int) -> float:
    """(2l - 1)!!, with (-1)!! = 1."""
    result = 1
    for odd in range(1, 2 * l, 2):
        result *= odd
    return float(result)
