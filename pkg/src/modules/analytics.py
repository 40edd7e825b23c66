"""
Bloom filter false-positive analysis

`efp(l, b, S, k)` is the probability that k fresh uniform indices into an
array of S bits all hit a set bit, when b bits are set now and l more
uniform index draws are still to be made:

    efp(0, b)     = (b / S) ** k
    efp(l + 1, b) = (b / S) * efp(l, b) + ((S - b) / S) * efp(l, b + 1)

`bloom_bruteforce` checks the recurrence by enumerating every draw.
"""

import logging
from fractions import Fraction
from functools import lru_cache
from typing import Tuple

import numpy as np

from modules.errors import EnumerationLimitExceeded
from utils.constants import DEFAULT_DECIMAL_PLACES, DEFAULT_ENUMERATION_LIMIT
from utils.helpers import to_decimal

logger = logging.getLogger(__name__)


def _check_params(size: int, hashes: int) -> None:
    if size < 1:
        raise ValueError(f"Array size must be at least 1, got {size}")
    if hashes < 1:
        raise ValueError(f"Number of hash functions must be at least 1, got {hashes}")


@lru_cache(maxsize=256)
def _efp_table(size: int, hashes: int, draws: int) -> Tuple[Tuple[Fraction, ...], ...]:
    """Rows l = 0..draws, each indexed by b = 0..size"""
    row = tuple(Fraction(b, size) ** hashes for b in range(size + 1))
    rows = [row]
    for _ in range(draws):
        previous = rows[-1]
        row = tuple(
            Fraction(b, size) * previous[b]
            + (Fraction(size - b, size) * previous[b + 1] if b < size else 0)
            for b in range(size + 1)
        )
        rows.append(row)
    return tuple(rows)


def efp(remaining: int, set_bits: int, size: int, hashes: int) -> Fraction:
    """
    Exact false-positive probability from the recurrence

    Args:
        remaining: Uniform index draws still to come (l)
        set_bits: Bits already set (b)
        size: Array size (S)
        hashes: Hash functions per key (k)

    Returns:
        Probability in [0, 1]

    Raises:
        ValueError: If a parameter is out of range
    """
    _check_params(size, hashes)
    if remaining < 0:
        raise ValueError(f"Remaining draws must be non-negative, got {remaining}")
    if not 0 <= set_bits <= size:
        raise ValueError(f"Set bits must lie in [0, {size}], got {set_bits}")
    return _efp_table(size, hashes, remaining)[remaining][set_bits]


def efp_float(remaining: int, set_bits: int, size: int, hashes: int,
              places: int = DEFAULT_DECIMAL_PLACES) -> float:
    """Decimal rendering of `efp` rounded to `places` digits"""
    return to_decimal(efp(remaining, set_bits, size, hashes), places)


def bloom_bound(size: int, hashes: int, keys: int) -> Fraction:
    """False-positive bound of a filter holding `keys` distinct keys"""
    return efp(hashes * keys, 0, size, hashes)


def bloom_bruteforce(size: int, hashes: int, keys: int,
                     limit: int = DEFAULT_ENUMERATION_LIMIT) -> Fraction:
    """
    Enumerate every insertion and lookup draw

    All size ** (hashes * keys) insertion vectors and size ** hashes lookup
    vectors are equally likely; the result is the fraction of combinations in
    which every lookup index is among the inserted ones.

    Raises:
        EnumerationLimitExceeded: If size ** (hashes * (keys + 1)) > limit
    """
    _check_params(size, hashes)
    if keys < 0:
        raise ValueError(f"Number of keys must be non-negative, got {keys}")
    total = size ** (hashes * (keys + 1))
    if total > limit:
        logger.warning(f"Brute force of {total} cases exceeds limit {limit}")
        raise EnumerationLimitExceeded(total, limit)
    if keys == 0:
        return Fraction(0)

    insert_draws = hashes * keys
    # one row per insertion vector, one column per array index
    inserts = np.indices((size,) * insert_draws).reshape(insert_draws, -1).T
    covered = np.zeros((inserts.shape[0], size), dtype=bool)
    np.put_along_axis(covered, inserts, True, axis=1)
    lookups = np.indices((size,) * hashes).reshape(hashes, -1).T
    # covered[r, lookups] has shape (insertions, lookups, hashes)
    hits = int(covered[:, lookups].all(axis=2).sum())
    return Fraction(hits, total)
