"""Compositions, multinomials, orbit sizes and super-Catalan numbers.

The obstruction sums of the deformation engine run over compositions
(tuples of positive integers with a fixed sum) weighted by multinomial
coefficients.  The optimized path iterates nondecreasing representatives
and multiplies by the orbit size i!/(b_1! ... b_s!) of the permutation
action; both paths must agree and the engine keeps the literal one behind
a flag.  Super-Catalan numbers majorize the growth of the formal series
coefficients; they count bracketings of a word and the explicit
bracketing enumeration doubles as an oracle for the recurrence.
"""

from __future__ import annotations

import math
import os
from fractions import Fraction
from typing import Iterator, Sequence

MEMO_CAP_ENV = "MCDEFORM_MEMO_CAP"
_DEFAULT_MEMO_CAP = 200

# little Schroeder growth constant
GROWTH_CONSTANT = 3.0 + math.sqrt(8.0)


def _memo_cap() -> int:
    raw = os.environ.get(MEMO_CAP_ENV)
    if raw is None:
        return _DEFAULT_MEMO_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ValueError(f"{MEMO_CAP_ENV} must be an integer, got {raw!r}") from exc
    return cap


def compositions(k: int, i: int) -> list[tuple[int, ...]]:
    """All i-tuples of positive integers summing to k, lexicographic.

    There are C(k-1, i-1) of them.
    """
    if i < 1 or i > k:
        raise ValueError(f"need 1 <= i <= k, got i={i}, k={k}")
    out: list[tuple[int, ...]] = []

    def rec(prefix: list[int], remaining: int, parts_left: int):
        if parts_left == 1:
            out.append(tuple(prefix + [remaining]))
            return
        for r in range(1, remaining - parts_left + 2):
            rec(prefix + [r], remaining - r, parts_left - 1)

    rec([], k, i)
    return out


def partitions_nondecreasing(k: int, i: int) -> Iterator[tuple[int, ...]]:
    """Nondecreasing representatives of compositions of k into i parts."""
    if i < 1 or i > k:
        return

    def rec(prefix: list[int], remaining: int, parts_left: int, minimum: int):
        if parts_left == 1:
            if remaining >= minimum:
                yield tuple(prefix + [remaining])
            return
        r = minimum
        while r * parts_left <= remaining:
            yield from rec(prefix + [r], remaining - r, parts_left - 1, r)
            r += 1

    yield from rec([], k, i, 1)


def multinomial(k: int, parts: Sequence[int]) -> int:
    """k! / (r_1! ... r_i!) for parts summing to k."""
    if sum(parts) != k:
        raise ValueError(f"parts {tuple(parts)} do not sum to {k}")
    n = math.factorial(k)
    for r in parts:
        n //= math.factorial(r)
    return n


def repeated_factorization(parts: Sequence[int]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Distinct values (increasing) and their multiplicities."""
    if not parts or any(r < 1 for r in parts):
        raise ValueError("parts must be positive integers")
    values = sorted(set(parts))
    mults = tuple(list(parts).count(v) for v in values)
    return tuple(values), mults


def orbit_size(parts: Sequence[int]) -> int:
    """Number of distinct rearrangements: i! / (b_1! ... b_s!)."""
    _, mults = repeated_factorization(parts)
    n = math.factorial(len(parts))
    for b in mults:
        n //= math.factorial(b)
    return n


# -- super-Catalan numbers ----------------------------------------------

# _sc[k] = C_k, _sc_all[k] = sum over all compositions of k of the product
# of C over the parts (= 2*C_k for k >= 2).  Guarded by the GIL; appends
# only, so concurrent readers are safe.
_sc: list[int] = [0, 1]
_sc_all: list[int] = [0, 1]


def super_catalan(k: int) -> int:
    """C_k defined by C_1 = 1 and C_k = sum over splittings of k into
    two or more parts of the product of C over the parts."""
    if k < 1:
        raise ValueError("super-Catalan numbers are indexed from 1")
    cap = _memo_cap()
    if k > cap:
        raise ValueError(
            f"k={k} exceeds the memo-table cap {cap} (raise {MEMO_CAP_ENV})")
    while len(_sc) <= k:
        m = len(_sc)
        c = sum(_sc[r] * _sc_all[m - r] for r in range(1, m))
        _sc.append(c)
        _sc_all.append(2 * c)
    return _sc[k]


def count_bracketings(k: int) -> int:
    """Count bracketings of a k-letter word by explicit enumeration.

    Independent of the recurrence: builds every bracketing tree.  Scales
    like the numbers themselves, so k is capped at 8.
    """
    if not 1 <= k <= 8:
        raise ValueError("enumeration oracle supports 1 <= k <= 8")
    return len(_bracketings(k))


def _bracketings(k: int):
    if k == 1:
        return [("leaf",)]
    trees = []
    for i in range(2, k + 1):
        for comp in compositions(k, i):
            parts = [_bracketings(r) for r in comp]
            stack = [()]
            for options in parts:
                stack = [t + (o,) for t in stack for o in options]
            trees.extend(stack)
    return trees


def growth_ratio(k: int) -> float:
    """C_{k+1} / C_k; tends to 3 + sqrt(8) ~ 5.8284."""
    if k < 2:
        raise ValueError("ratio defined for k >= 2")
    return super_catalan(k + 1) / super_catalan(k)


def convergence_radius(h1_norm: float, alpha: float) -> float:
    """Certified radius 1 / (12 * |h1| * alpha) for the formal series."""
    product = h1_norm * alpha
    if product <= 0:
        raise ValueError("degenerate bound: |h1| * alpha must be positive")
    if isinstance(h1_norm, Fraction) and isinstance(alpha, Fraction):
        return Fraction(1, 12) / product
    return 1.0 / (12.0 * float(product))
