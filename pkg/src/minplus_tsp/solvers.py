"""Exact TSP engines: brute force, Held-Karp (pull) and the batched min-plus push solver.

All three share the same cost conventions: vertices are 1-based in tours and
0-based in matrices, tours start at vertex 1, and ties resolve to the
smallest index.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from . import domain
from .domain import BINOMIAL, MAX_N, layer_rank, layer_size
from .kernels import (
    INF,
    _INF,
    KernelId,
    OpCounter,
    dispatch_core,
    kernel_entry,
    kernel_lookup,
    pad_rows,
    sat_add,
)

MAX_COST = 2**63
BRUTE_FORCE_MAX_N = 10
DEFAULT_MEM_BUDGET = 4 * 2**30

_BINOM = BINOMIAL.astype(np.int64)


class InstanceError(ValueError):
    pass


class MemoryBudgetError(RuntimeError):
    """The DP tables for this run would not fit the configured budget."""

    def __init__(self, needed: int, budget: int):
        super().__init__(f"DP tables need ~{needed} bytes, budget is {budget} bytes")
        self.needed = needed
        self.budget = budget


class TableCorruptError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Instance:
    """A complete directed TSP instance: an n x n matrix of finite costs.

    The diagonal must be present but is never used as a tour edge.
    """

    costs: np.ndarray

    def __post_init__(self):
        c = self.costs
        if not isinstance(c, np.ndarray) or c.dtype != np.uint64:
            rows = [list(r) for r in c]
            for r in rows:
                for v in r:
                    if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                        raise InstanceError(f"cost entries must be integers, got {v!r}")
                    if not 0 <= v < MAX_COST:
                        raise InstanceError(f"cost {v} outside [0, 2**63)")
            n = len(rows)
            if any(len(r) != n for r in rows):
                raise InstanceError("cost matrix must be square")
            c = np.array(rows, dtype=np.uint64).reshape(n, n)
        else:
            if c.ndim != 2 or c.shape[0] != c.shape[1]:
                raise InstanceError(f"cost matrix must be square, got shape {c.shape}")
            if c.size and int(c.max()) >= MAX_COST:
                raise InstanceError("cost entries must be < 2**63")
            c = np.ascontiguousarray(c)
        if not 1 <= c.shape[0] <= MAX_N:
            raise InstanceError(f"n must be in [1, {MAX_N}], got {c.shape[0]}")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "costs", c)

    @property
    def n(self) -> int:
        return self.costs.shape[0]

    def __eq__(self, other) -> bool:
        return isinstance(other, Instance) and np.array_equal(self.costs, other.costs)

    def __hash__(self) -> int:
        return hash(self.costs.tobytes())

    def tolist(self) -> list[list[int]]:
        return self.costs.tolist()


@dataclass(frozen=True)
class Tour:
    order: tuple[int, ...]
    cost: int


def tour_cost(order, inst: Instance) -> int:
    """Cost of the closed tour visiting 1-based ``order``."""
    order = tuple(order)
    if len(order) == 1:
        return 0
    c = inst.costs
    total = 0
    for a, b in zip(order, order[1:] + order[:1]):
        total = sat_add(total, int(c[a - 1, b - 1]))
    return total


def is_valid_tour(order, n: int) -> bool:
    return len(order) == n and order[0] == 1 and sorted(order) == list(range(1, n + 1))


@dataclass
class SolveStats:
    """Per-layer accounting for one batched solve, keyed by layer index ell in 2..n."""

    kernel_calls_per_layer: dict[int, int] = field(default_factory=dict)
    scalar_ops_per_layer: dict[int, int] = field(default_factory=dict)
    update_writes_per_layer: dict[int, int] = field(default_factory=dict)
    wall_ns_per_layer: dict[int, int] = field(default_factory=dict)
    # pushes landing on an already-finite cell, and those that lowered it
    overwrites: int = 0
    decreases: int = 0

    @property
    def total_kernel_calls(self) -> int:
        return sum(self.kernel_calls_per_layer.values())

    @property
    def scalar_ops(self) -> int:
        return sum(self.scalar_ops_per_layer.values())

    @property
    def update_writes(self) -> int:
        return sum(self.update_writes_per_layer.values())

    @property
    def wall_ns(self) -> int:
        return sum(self.wall_ns_per_layer.values())


# -- accounting formulas -----------------------------------------------------


def source_rows(n: int, ell: int, restricted: bool = True) -> int:
    """K_ell: rows of layer ell - 1 that feed layer ell."""
    return layer_size(n, ell - 1, restricted)


def expected_kernel_calls(n: int, restricted: bool = True) -> int:
    """Sum over ell = 2..n of ceil(K_ell / n)."""
    if not 2 <= n <= MAX_N:
        raise ValueError(f"n must be in [2, {MAX_N}], got {n}")
    return sum(-(-source_rows(n, ell, restricted) // n) for ell in range(2, n + 1))


def expected_update_writes(n: int, restricted: bool = True) -> int:
    return sum(source_rows(n, ell, restricted) * (n - ell + 1) for ell in range(2, n + 1))


def expected_scalar_ops(n: int, restricted: bool = True, padded: bool = False) -> int:
    if padded:
        return expected_kernel_calls(n, restricted) * n**3
    return n * n * sum(source_rows(n, ell, restricted) for ell in range(2, n + 1))


def table_bytes(n: int, restricted: bool = True, keep_layers: bool = False) -> int:
    """Estimated bytes of DP storage for one batched solve."""
    sizes = [layer_size(n, card, restricted) for card in range(1, n + 1)]
    rows = sum(sizes) if keep_layers else 2 * max(sizes)
    return rows * n * 8


# -- DP tables ---------------------------------------------------------------


@dataclass
class DpLayer:
    """All DP rows for subsets of one cardinality, rows in layer colex order."""

    card: int
    values: np.ndarray
    restricted: bool = True

    def row(self, mask: int) -> int:
        return layer_rank(mask, self.restricted)

    def value(self, mask: int, k: int) -> int:
        """dp(mask, k) with 0-based last vertex ``k``."""
        if self.restricted and not mask & 1:
            return INF
        return int(self.values[self.row(mask), k])


@dataclass
class DpTable:
    """Every layer of a batched solve, as retained with ``keep_layers``."""

    n: int
    layers: dict[int, DpLayer]

    def value(self, mask: int, k: int) -> int:
        return self.layers[domain.popcount(mask)].value(mask, k)


@dataclass
class PullTable:
    """Held-Karp table indexed by ``mask >> 1`` over subsets containing vertex 1."""

    n: int
    values: np.ndarray

    def value(self, mask: int, k: int) -> int:
        if not mask & 1:
            return INF
        return int(self.values[mask >> 1, k])


# -- brute force -------------------------------------------------------------


def brute_force(inst: Instance) -> Tour:
    """Enumerate every tour starting at vertex 1; lexicographically first optimum wins."""
    n = inst.n
    if n > BRUTE_FORCE_MAX_N:
        raise InstanceError(f"brute force is limited to n <= {BRUTE_FORCE_MAX_N}, got {n}")
    if n == 1:
        return Tour((1,), 0)
    c = inst.tolist()
    best = None
    best_perm = None
    for perm in itertools.permutations(range(1, n)):
        total = c[0][perm[0]]
        for a, b in zip(perm, perm[1:]):
            total += c[a][b]
        total += c[perm[-1]][0]
        if best is None or total < best:
            best = total
            best_perm = perm
    return Tour((1,) + tuple(v + 1 for v in best_perm), best)


# -- Held-Karp, pull form ----------------------------------------------------


@njit(cache=True)
def _gosper(x):
    low = x & -x
    ripple = x + low
    return ripple | (((x ^ ripple) >> 2) // low)


@njit(cache=True)
def _pull_table(cost):
    n = cost.shape[0]
    size = 1 << (n - 1)
    dp = np.full((size, n), _INF, dtype=np.uint64)
    dp[0, 0] = 0
    for t in range(1, n):
        x = (1 << t) - 1
        while x < size:
            full = (x << 1) | 1
            for k in range(1, n):
                if not (full >> k) & 1:
                    continue
                prev = x & ~(1 << (k - 1))
                src = full & ~(1 << k)
                best = _INF
                for j in range(n):
                    if not (src >> j) & 1:
                        continue
                    a = dp[prev, j]
                    s = a + cost[j, k]
                    if s < a:
                        s = _INF
                    if s < best:
                        best = s
                dp[x, k] = best
            x = _gosper(x)
    return dp


@dataclass
class PullResult:
    cost: int
    table: PullTable | None = None


def held_karp_pull(
    inst: Instance, keep_table: bool = False, mem_budget: int = DEFAULT_MEM_BUDGET
) -> PullResult:
    """Classic Held-Karp: each state pulls the min over its predecessors."""
    n = inst.n
    if n == 1:
        return PullResult(0, PullTable(1, np.zeros((1, 1), dtype=np.uint64)) if keep_table else None)
    needed = (1 << (n - 1)) * n * 8
    if needed > mem_budget:
        raise MemoryBudgetError(needed, mem_budget)
    dp = _pull_table(inst.costs)
    last = dp[-1]
    best = INF
    for k in range(1, n):
        best = min(best, sat_add(int(last[k]), int(inst.costs[k, 0])))
    return PullResult(best, PullTable(n, dp) if keep_table else None)


# -- batched min-plus push solver --------------------------------------------

# slots of the counters array shared with the jitted layer loop
_CALLS, _OPS, _WRITES, _OVERWRITES, _DECREASES = range(5)


@njit(cache=True)
def _push_layer(prev, nxt, cost, card, restricted, binom, code, tile, pad, counts):
    n = cost.shape[0]
    rows = prev.shape[0]
    off = 1 if restricted else 0
    universe = n - off
    free = (1 << (card - off)) - 1
    p = np.empty((n, n), dtype=np.uint64)
    padded = np.empty((n, n), dtype=np.uint64)
    for start in range(0, rows, n):
        m = min(n, rows - start)
        if pad and m < n:
            padded[:m] = prev[start : start + m]
            padded[m:] = _INF
            dispatch_core(code, padded, cost, p, tile)
            counts[_OPS] += n * n * n
        else:
            dispatch_core(code, prev[start : start + m], cost, p[:m], tile)
            counts[_OPS] += m * n * n
        counts[_CALLS] += 1
        for i in range(m):
            # rank of free | (1 << f) is low(f) + C(f, c + 1) + high(f), where
            # bits below f keep their index and bits above shift up by one
            shifted = 0
            idx = 0
            x = free
            while x:
                low = x & -x
                pos = 0
                while (low >> pos) != 1:
                    pos += 1
                shifted += binom[pos, idx + 2]
                idx += 1
                x ^= low
            low_sum = 0
            low_shifted = 0
            c = 0
            for f in range(universe):
                if (free >> f) & 1:
                    low_sum += binom[f, c + 1]
                    low_shifted += binom[f, c + 2]
                    c += 1
                    continue
                r = low_sum + binom[f, c + 1] + shifted - low_shifted
                k = f + off
                v = p[i, k]
                cur = nxt[r, k]
                counts[_WRITES] += 1
                if cur != _INF:
                    counts[_OVERWRITES] += 1
                    if v < cur:
                        counts[_DECREASES] += 1
                if v < cur:
                    nxt[r, k] = v
            if free:
                free = _gosper(free)


def _push_layer_py(prev, nxt, cost, card, restricted, kernel, pad, counts):
    """Python twin of :func:`_push_layer` for kernels without a jitted core."""
    n = cost.shape[0]
    counter = OpCounter()
    for batch in domain.batches(n, card, restricted):
        m = len(batch.members)
        block = prev[batch.start : batch.start + m]
        if pad and m < n:
            block = pad_rows(block, n)
        p = kernel(block, cost, counter)
        counts[_CALLS] += 1
        for i, mask in enumerate(batch.members):
            for k in range(n):
                if mask >> k & 1:
                    continue
                r = layer_rank(mask | (1 << k), restricted)
                v = p[i, k]
                cur = nxt[r, k]
                counts[_WRITES] += 1
                if cur != _INF:
                    counts[_OVERWRITES] += 1
                    if v < cur:
                        counts[_DECREASES] += 1
                if v < cur:
                    nxt[r, k] = v
    counts[_OPS] += counter.scalar_ops


def close_tour(final_layer: DpLayer, inst: Instance) -> int:
    """min over k >= 2 of dp([n], k) + c[k][1]; 0 for the one-city instance."""
    n = inst.n
    if final_layer.card != n:
        raise ValueError(f"expected the layer of cardinality {n}, got {final_layer.card}")
    if n == 1:
        return 0
    row = final_layer.values[-1]
    best = INF
    for k in range(1, n):
        best = min(best, sat_add(int(row[k]), int(inst.costs[k, 0])))
    return best


@dataclass
class MinPlusResult:
    cost: int
    stats: SolveStats
    table: DpTable | None = None


def _first_layer(n: int, restricted: bool) -> np.ndarray:
    layer = np.full((layer_size(n, 1, restricted), n), _INF, dtype=np.uint64)
    layer[0, 0] = 0
    return layer


def solve_minplus(
    inst: Instance,
    kernel: KernelId | str = "tiled",
    *,
    restrict_to_v1: bool = True,
    keep_layers: bool = False,
    pad_last_batch: bool = False,
    mem_budget: int = DEFAULT_MEM_BUDGET,
) -> MinPlusResult:
    """Fill the DP table layer by layer with one min-plus product per batch.

    Layer ``ell`` is produced by pushing ``p = dp(B, :) (x) c`` into the cells
    ``dp(B[i] + {k}, k)`` for every batch ``B`` of layer ``ell - 1``.
    """
    kid = KernelId(kernel) if isinstance(kernel, str) else kernel
    entry = kernel_entry(kid)
    n = inst.n
    needed = table_bytes(n, restrict_to_v1, keep_layers)
    if needed > mem_budget:
        raise MemoryBudgetError(needed, mem_budget)

    cost = inst.costs
    stats = SolveStats()
    layer = _first_layer(n, restrict_to_v1)
    kept = {1: DpLayer(1, layer, restrict_to_v1)} if keep_layers else None
    py_kernel = None if entry.code is not None else kernel_lookup(kid)

    for ell in range(2, n + 1):
        nxt = np.full((layer_size(n, ell, restrict_to_v1), n), _INF, dtype=np.uint64)
        counts = np.zeros(5, dtype=np.int64)
        t0 = time.perf_counter_ns()
        if py_kernel is None:
            _push_layer(
                layer, nxt, cost, ell - 1, restrict_to_v1, _BINOM,
                entry.code, kid.effective_tile, pad_last_batch, counts,
            )
        else:
            _push_layer_py(layer, nxt, cost, ell - 1, restrict_to_v1, py_kernel, pad_last_batch, counts)
        stats.wall_ns_per_layer[ell] = time.perf_counter_ns() - t0
        stats.kernel_calls_per_layer[ell] = int(counts[_CALLS])
        stats.scalar_ops_per_layer[ell] = int(counts[_OPS])
        stats.update_writes_per_layer[ell] = int(counts[_WRITES])
        stats.overwrites += int(counts[_OVERWRITES])
        stats.decreases += int(counts[_DECREASES])
        layer = nxt
        if kept is not None:
            kept[ell] = DpLayer(ell, layer, restrict_to_v1)

    final = DpLayer(n, layer, restrict_to_v1)
    cost_value = close_tour(final, inst)
    table = DpTable(n, kept) if kept is not None else None
    return MinPlusResult(cost_value, stats, table)


# -- tour reconstruction -----------------------------------------------------


def reconstruct_tour(table: DpTable | PullTable, inst: Instance) -> Tour:
    """Walk a complete DP table backwards to recover an optimal tour."""
    n = inst.n
    if n == 1:
        return Tour((1,), 0)
    c = inst.costs
    full = (1 << n) - 1
    best, k = INF, -1
    for j in range(1, n):
        v = sat_add(table.value(full, j), int(c[j, 0]))
        if v < best:
            best, k = v, j
    if k < 0:
        raise TableCorruptError("no finite closing value in the final layer")
    path = [k]
    S = full
    while S != 1:
        target = table.value(S, k)
        S_prev = S & ~(1 << k)
        for j in range(n):
            if S_prev >> j & 1 and sat_add(table.value(S_prev, j), int(c[j, k])) == target:
                break
        else:
            raise TableCorruptError(f"no predecessor reproduces dp({S:#x}, {k + 1})")
        S, k = S_prev, j
        path.append(k)
    path.reverse()
    order = tuple(v + 1 for v in path)
    return Tour(order, best)


def solve(
    inst: Instance,
    algo: str = "minplus",
    kernel: KernelId | str = "tiled",
    *,
    reconstruct: bool = False,
    restrict_to_v1: bool = True,
    pad_last_batch: bool = False,
    mem_budget: int = DEFAULT_MEM_BUDGET,
) -> tuple[int, Tour | None, SolveStats | None]:
    """Front door used by the CLI: returns ``(cost, tour or None, stats or None)``."""
    if algo == "brute":
        tour = brute_force(inst)
        return tour.cost, tour, None
    if algo == "held-karp":
        res = held_karp_pull(inst, keep_table=reconstruct, mem_budget=mem_budget)
        tour = reconstruct_tour(res.table, inst) if reconstruct else None
        return res.cost, tour, None
    if algo == "minplus":
        res = solve_minplus(
            inst, kernel, restrict_to_v1=restrict_to_v1, keep_layers=reconstruct,
            pad_last_batch=pad_last_batch, mem_budget=mem_budget,
        )
        tour = reconstruct_tour(res.table, inst) if reconstruct else None
        return res.cost, tour, res.stats
    raise ValueError(f"unknown algorithm {algo!r}")
