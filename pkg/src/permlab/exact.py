"""Exact permanent computation.

Two independent routes are kept deliberately separate so one can check the
other: a brute-force permutation sum used as the oracle at small n, and the
inclusion-exclusion algorithm over column subsets whose row sums are
maintained incrementally in Gray code order, giving O(n * 2^n) work overall.
Results are Python ints, which are arbitrary precision (n! passes 2^63 at
n = 21).
"""

from __future__ import annotations

from typing import Iterator

from .matrix import Matrix

NAIVE_LIMIT = 12


def permanent_naive(m: Matrix) -> int:
    """Permutation-sum permanent, the small-n oracle.

    Counts permutations whose entries are all 1 by depth-first search over
    rows, pruning any branch with a 0 entry. Refuses n > 12 since the search
    is O(n!) in the worst case.
    """
    if m.n > NAIVE_LIMIT:
        raise ValueError(
            f"permanent_naive is limited to n <= {NAIVE_LIMIT} (O(n!) growth), got n = {m.n}"
        )
    n = m.n
    masks = m.row_masks()

    # The DFS visits exactly the permutations with product 1, so the count
    # equals the full permutation sum for a {0,1} matrix.
    def count(row: int, used: int) -> int:
        if row == n:
            return 1
        total = 0
        free = masks[row] & ~used
        while free:
            bit = free & -free
            total += count(row + 1, used | bit)
            free ^= bit
        return total

    return count(0, 0)


def gray_code_subsets(n: int) -> Iterator[tuple[int, int, int]]:
    """All 2^n - 1 nonempty subsets of [0, n) in reflected Gray code order.

    Yields (mask, flipped_index, direction) where direction is +1 when the
    flipped bit was set and -1 when it was cleared. Consecutive masks differ
    in exactly one bit, and the first mask is {0}.
    """
    if not 1 <= n <= 63:
        raise ValueError(f"n must be in [1, 63], got {n}")
    prev = 0
    for k in range(1, 1 << n):
        mask = k ^ (k >> 1)
        changed = mask ^ prev
        flipped = changed.bit_length() - 1
        direction = 1 if mask & changed else -1
        yield mask, flipped, direction
        prev = mask


def permanent_ryser(m: Matrix) -> int:
    """Inclusion-exclusion permanent with Gray-coded column updates.

    Walks the nonempty column subsets in Gray code order, so each transition
    adds or removes a single column from the running row sums (O(n) per
    subset instead of O(n^2)). The sign of each term comes from the subset
    cardinality's parity, tracked as a toggle.
    """
    n = m.n
    cols = m.columns()
    row_sums = [0] * n
    parity = 0  # parity of |subset|; flips once per Gray transition
    total = 0
    for _, flipped, direction in gray_code_subsets(n):
        col = cols[flipped]
        if direction > 0:
            for u in range(n):
                row_sums[u] += col[u]
        else:
            for u in range(n):
                row_sums[u] -= col[u]
        parity ^= 1
        product = 1
        for s in row_sums:
            if s == 0:
                product = 0
                break
            product *= s
        if parity == (n & 1):
            total += product
        else:
            total -= product
    return total
