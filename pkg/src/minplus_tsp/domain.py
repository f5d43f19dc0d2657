"""Vertex subsets as bitmasks, colex ranking and batch generation.

Vertex ``v`` (1-based, as printed to users) lives in bit ``v - 1``.  A DP
layer stores one row per subset, addressed by the subset's colex rank.  In
restricted mode every subset contains vertex 1, so bit 0 is implied and the
row address is the colex rank of the remaining bits shifted down by one.
"""

from __future__ import annotations

from typing import Iterator, NamedTuple

import numpy as np

MAX_N = 32


def _pascal(size: int) -> np.ndarray:
    table = np.zeros((size + 1, size + 1), dtype=np.uint64)
    for a in range(size + 1):
        table[a, 0] = 1
        for b in range(1, a + 1):
            table[a, b] = table[a - 1, b - 1] + table[a - 1, b]
    return table


# C(a, b) for 0 <= a, b <= 32; C(32, 16) still fits comfortably in 64 bits.
BINOMIAL = _pascal(MAX_N)
BINOMIAL.setflags(write=False)


def binomial(a: int, b: int) -> int:
    """Return C(a, b) from the precomputed table (0 when b > a)."""
    if a < 0 or b < 0:
        raise ValueError(f"binomial arguments must be non-negative, got ({a}, {b})")
    if a > MAX_N:
        raise ValueError(f"binomial table only covers a <= {MAX_N}, got {a}")
    if b > a:
        return 0
    return int(BINOMIAL[a, b])


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def colex_rank(mask: int) -> int:
    """Rank of ``mask`` among all subsets of the same size, in colex order.

    With set bits p0 < p1 < ... this is sum C(p_i, i + 1).
    """
    if mask <= 0:
        raise ValueError("colex_rank needs a non-empty mask")
    rank = 0
    i = 0
    while mask:
        low = mask & -mask
        rank += binomial(low.bit_length() - 1, i + 1)
        mask ^= low
        i += 1
    return rank


def colex_unrank(rank: int, card: int, n: int) -> int:
    """Inverse of :func:`colex_rank` over ``card``-subsets of ``{0..n-1}``."""
    if not 0 <= card <= n <= MAX_N:
        raise ValueError(f"need 0 <= card <= n <= {MAX_N}, got card={card}, n={n}")
    total = binomial(n, card)
    if not 0 <= rank < total:
        raise ValueError(f"rank {rank} out of range [0, {total})")
    mask = 0
    pos = n - 1
    for t in range(card, 0, -1):
        # largest position p with C(p, t) <= rank
        while binomial(pos, t) > rank:
            pos -= 1
        mask |= 1 << pos
        rank -= binomial(pos, t)
        pos -= 1
    return mask


def next_same_cardinality(mask: int, n: int = MAX_N) -> int | None:
    """Gosper's hack: the colex successor of ``mask`` with equal popcount.

    Returns ``None`` once the successor would leave the ``n``-bit universe.
    """
    if mask <= 0:
        raise ValueError("next_same_cardinality needs a non-empty mask")
    low = mask & -mask
    ripple = mask + low
    nxt = ripple | (((mask ^ ripple) >> 2) // low)
    if nxt >> n:
        return None
    return nxt


def layer_size(n: int, card: int, restricted: bool = True) -> int:
    """Number of rows in the DP layer of ``card``-subsets."""
    if restricted:
        return binomial(n - 1, card - 1) if card >= 1 else 0
    return binomial(n, card)


def layer_rank(mask: int, restricted: bool = True) -> int:
    """Row address of ``mask`` inside its layer."""
    if restricted:
        if not mask & 1:
            raise ValueError("restricted layers only hold subsets containing vertex 1")
        rest = mask >> 1
        return colex_rank(rest) if rest else 0
    return colex_rank(mask)


def layer_unrank(row: int, n: int, card: int, restricted: bool = True) -> int:
    if restricted:
        if card == 1:
            if row != 0:
                raise ValueError(f"rank {row} out of range [0, 1)")
            return 1
        return (colex_unrank(row, card - 1, n - 1) << 1) | 1
    return colex_unrank(row, card, n)


class Batch(NamedTuple):
    """Up to ``n`` consecutive subsets of one layer.

    ``start`` is the layer row of ``members[0]``; rows are consecutive, so the
    batch addresses ``layer[start:start + len(members)]``.
    """

    start: int
    members: tuple[int, ...]


def iter_layer(n: int, card: int, restricted: bool = True, start: int = 0) -> Iterator[int]:
    """Masks of one layer in row order, beginning at row ``start``."""
    total = layer_size(n, card, restricted)
    if start >= total:
        return
    if restricted and card == 1:
        yield 1
        return
    free_n, free_card = (n - 1, card - 1) if restricted else (n, card)
    mask: int | None = colex_unrank(start, free_card, free_n)
    while mask is not None:
        yield (mask << 1) | 1 if restricted else mask
        mask = next_same_cardinality(mask, free_n)


def batches(
    n: int, card: int, restrict_to_v1: bool = True, start: int = 0
) -> Iterator[Batch]:
    """Chunk the ``card``-subsets of ``{0..n-1}`` into colex-ordered batches of ``n``.

    ``start`` must be a multiple of ``n`` to line up with the batch grid; it
    lets disjoint batch ranges be generated independently.
    """
    if not 1 <= card < n <= MAX_N:
        raise ValueError(f"need 1 <= card < n <= {MAX_N}, got card={card}, n={n}")
    if start % n:
        raise ValueError(f"start row {start} is not a multiple of the batch size {n}")
    chunk: list[int] = []
    row = start
    for mask in iter_layer(n, card, restrict_to_v1, start):
        chunk.append(mask)
        if len(chunk) == n:
            yield Batch(row, tuple(chunk))
            row += n
            chunk = []
    if chunk:
        yield Batch(row, tuple(chunk))


def mask_to_vertices(mask: int) -> list[int]:
    """1-based vertex labels of the set bits, ascending."""
    out = []
    v = 1
    while mask:
        if mask & 1:
            out.append(v)
        mask >>= 1
        v += 1
    return out


def vertices_to_mask(vertices) -> int:
    mask = 0
    for v in vertices:
        mask |= 1 << (v - 1)
    return mask
