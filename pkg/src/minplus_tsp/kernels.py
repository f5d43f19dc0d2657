"""Min-plus (distance) matrix products over saturating unsigned 64-bit costs.

Costs are ``np.uint64`` arrays.  The top value ``INF = 2**64 - 1`` is the
infinity sentinel; every other value is finite.  Addition saturates at the
sentinel, min is plain integer min, so INF is the identity of min.

All built-in kernels share a jitted core so the solver can call them from
inside its own jitted layer loop.  Kernels registered at runtime with
:func:`register_kernel` are plain Python callables; the solver falls back to
a Python batch loop for those.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import partial
from typing import Callable

import numpy as np
from numba import njit

INF = 2**64 - 1
_INF = np.uint64(INF)

DEFAULT_TILE = 32


class KernelError(ValueError):
    """Bad kernel name, tile size or operand shapes."""


def sat_add(x: int, y: int) -> int:
    """Saturating addition on Python ints."""
    if x == INF or y == INF:
        return INF
    s = x + y
    return INF if s >= INF else s


@dataclass
class OpCounter:
    """Number of scalar (add, min) pairs executed by kernels."""

    scalar_ops: int = 0

    def add(self, count: int) -> None:
        self.scalar_ops += count


@dataclass(frozen=True)
class KernelId:
    name: str
    tile: int | None = None

    def __post_init__(self):
        if self.tile is not None:
            if self.name != "tiled":
                raise KernelError(f"kernel {self.name!r} takes no tile size")
            if self.tile < 1:
                raise KernelError(f"tile must be >= 1, got {self.tile}")

    @property
    def effective_tile(self) -> int:
        return self.tile if self.tile is not None else DEFAULT_TILE

    def __str__(self) -> str:
        return f"tiled:{self.effective_tile}" if self.name == "tiled" else self.name


# -- jitted cores ------------------------------------------------------------
# Each core writes C = A (x) B into ``out`` (m x q).  An add overflows exactly
# when the wrapped sum is smaller than an operand; INF + x always overflows
# unless x == 0, in which case the sum is INF already.


@njit(cache=True)
def _naive_core(A, B, out):
    m, p = A.shape
    q = B.shape[1]
    for i in range(m):
        for k in range(q):
            out[i, k] = _INF
        for j in range(p):
            a = A[i, j]
            for k in range(q):
                s = a + B[j, k]
                if s < a:
                    s = _INF
                if s < out[i, k]:
                    out[i, k] = s


@njit(cache=True)
def _transposed_core(A, B, out):
    m, p = A.shape
    q = B.shape[1]
    Bt = np.ascontiguousarray(B.T)
    for i in range(m):
        for k in range(q):
            acc = _INF
            for j in range(p):
                a = A[i, j]
                s = a + Bt[k, j]
                if s < a:
                    s = _INF
                if s < acc:
                    acc = s
            out[i, k] = acc


@njit(cache=True)
def _tiled_core(A, B, out, tile):
    m, p = A.shape
    q = B.shape[1]
    for i in range(m):
        for k in range(q):
            out[i, k] = _INF
    for i0 in range(0, m, tile):
        i1 = min(i0 + tile, m)
        for j0 in range(0, p, tile):
            j1 = min(j0 + tile, p)
            for k0 in range(0, q, tile):
                k1 = min(k0 + tile, q)
                for i in range(i0, i1):
                    for j in range(j0, j1):
                        a = A[i, j]
                        for k in range(k0, k1):
                            s = a + B[j, k]
                            if s < a:
                                s = _INF
                            if s < out[i, k]:
                                out[i, k] = s


NAIVE, TRANSPOSED, TILED = 0, 1, 2


@njit(cache=True)
def dispatch_core(code, A, B, out, tile):
    if code == NAIVE:
        _naive_core(A, B, out)
    elif code == TRANSPOSED:
        _transposed_core(A, B, out)
    else:
        _tiled_core(A, B, out, tile)


# -- Python-level kernels ----------------------------------------------------


def as_cost_matrix(a) -> np.ndarray:
    """Coerce ``a`` to a C-contiguous 2-D uint64 array.

    Python ints are range-checked here so that ``float('inf')`` style inputs
    or negatives never slip through; use :data:`INF` for the sentinel.
    """
    if isinstance(a, np.ndarray) and a.dtype == np.uint64:
        arr = np.ascontiguousarray(a)
    else:
        rows = [list(r) for r in a] if not isinstance(a, np.ndarray) else a.tolist()
        for r in rows:
            for v in r:
                if not isinstance(v, (int, np.integer)) or not 0 <= int(v) <= INF:
                    raise KernelError(f"cost entries must be integers in [0, 2**64), got {v!r}")
        arr = np.array(rows, dtype=np.uint64)
        if arr.size == 0:
            arr = arr.reshape(len(rows), 0)
    if arr.ndim != 2:
        raise KernelError(f"expected a 2-D matrix, got shape {arr.shape}")
    return arr


def _check(A: np.ndarray, B: np.ndarray) -> None:
    if A.shape[1] != B.shape[0]:
        raise KernelError(f"dimension mismatch: {A.shape} x {B.shape}")


def _run(code: int, A, B, counter: OpCounter | None, tile: int = DEFAULT_TILE) -> np.ndarray:
    A = as_cost_matrix(A)
    B = as_cost_matrix(B)
    _check(A, B)
    m, p = A.shape
    q = B.shape[1]
    out = np.empty((m, q), dtype=np.uint64)
    dispatch_core(code, A, B, out, tile)
    if counter is not None:
        counter.add(m * p * q)
    return out


def minplus_naive(A, B, counter: OpCounter | None = None) -> np.ndarray:
    """Min-plus product with i-j-k loop order, rows of ``B`` scanned in order."""
    return _run(NAIVE, A, B, counter)


def minplus_transposed(A, B, counter: OpCounter | None = None) -> np.ndarray:
    """Min-plus product over a transposed copy of ``B`` (i-k-j order)."""
    return _run(TRANSPOSED, A, B, counter)


def minplus_tiled(A, B, counter: OpCounter | None = None, tile: int = DEFAULT_TILE) -> np.ndarray:
    """Min-plus product computed block by block with ``tile``-sized cubes."""
    if tile < 1:
        raise KernelError(f"tile must be >= 1, got {tile}")
    return _run(TILED, A, B, counter, tile)


def minplus_identity(n: int) -> np.ndarray:
    eye = np.full((n, n), _INF, dtype=np.uint64)
    np.fill_diagonal(eye, 0)
    return eye


def pad_rows(A: np.ndarray, rows: int) -> np.ndarray:
    """Append INF rows to ``A`` until it has ``rows`` rows."""
    out = np.full((rows, A.shape[1]), _INF, dtype=np.uint64)
    out[: A.shape[0]] = A
    return out


# -- registry ----------------------------------------------------------------


@dataclass(frozen=True)
class KernelEntry:
    name: str
    func: Callable
    code: int | None = None  # set for kernels the jitted solver loop can call
    tiled: bool = False


_REGISTRY: dict[str, KernelEntry] = {
    "naive": KernelEntry("naive", minplus_naive, NAIVE),
    "transposed": KernelEntry("transposed", minplus_transposed, TRANSPOSED),
    "tiled": KernelEntry("tiled", minplus_tiled, TILED, tiled=True),
}

BUILTIN_KERNELS = ("naive", "transposed", "tiled")


def register_kernel(name: str, func: Callable, *, replace: bool = False) -> None:
    """Add a kernel ``func(A, B, counter) -> C`` under ``name``.

    Registered kernels must honour the min-plus product contract and bump the
    counter by ``m * p * q``.
    """
    if name in _REGISTRY and not replace:
        raise KernelError(f"kernel {name!r} is already registered")
    _REGISTRY[name] = KernelEntry(name, func)


def unregister_kernel(name: str) -> None:
    if name in BUILTIN_KERNELS:
        raise KernelError(f"cannot remove built-in kernel {name!r}")
    _REGISTRY.pop(name, None)


def registered_kernels() -> list[str]:
    return list(_REGISTRY)


def kernel_entry(kid: KernelId | str) -> KernelEntry:
    name = kid.name if isinstance(kid, KernelId) else kid
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KernelError(
            f"unknown kernel {name!r}; registered: {', '.join(_REGISTRY)}"
        ) from None


def kernel_lookup(kid: KernelId | str) -> Callable:
    """Resolve ``kid`` to a callable ``(A, B, counter=None) -> C``."""
    if isinstance(kid, str):
        kid = KernelId(kid)
    entry = kernel_entry(kid)
    if entry.tiled:
        return partial(entry.func, tile=kid.effective_tile)
    return entry.func
