"""Arithmetic and dense linear algebra over prime fields F_p, p odd.

Matrices are plain ``numpy`` integer arrays with entries reduced into
``[0, p)``; the modulus travels alongside as ``p`` (or a :class:`FieldCtx`).
The ``batch_*`` helpers run the same eliminations over a stack of small
matrices at once, which is what the enumeration and pair-classification
kernels need.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

__all__ = [
    "SquareClass",
    "FieldCtx",
    "field_ctx",
    "is_prime",
    "canonical_nonsquare",
    "square_class",
    "reduce",
    "rref",
    "rank",
    "kernel",
    "inverse",
    "in_row_space",
    "batch_rank",
    "TABLE_LIMIT",
    "all_matrices",
    "encode_matrices",
    "rank_table",
    "fast_rank",
]

TABLE_LIMIT = 1 << 22


class SquareClass(enum.Enum):
    SQUARE = "Square"
    NONSQUARE = "Nonsquare"
    ZERO = "Zero"

    def __mul__(self, other: "SquareClass") -> "SquareClass":
        if self is SquareClass.ZERO or other is SquareClass.ZERO:
            return SquareClass.ZERO
        return SquareClass.SQUARE if self is other else SquareClass.NONSQUARE


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def _check_odd_prime(p: int) -> None:
    if p == 2:
        raise ValueError("characteristic 2 is not supported; p must be an odd prime")
    if not is_prime(p):
        raise ValueError(
            f"p={p} is not prime; only odd prime fields F_p are supported "
            "(prime powers are not)"
        )


def canonical_nonsquare(p: int) -> int:
    """Smallest positive quadratic nonresidue mod ``p``."""
    _check_odd_prime(p)
    half = (p - 1) // 2
    for x in range(2, p):
        if pow(x, half, p) == p - 1:
            return x
    raise AssertionError("unreachable: every odd prime has a nonresidue")


@dataclass(frozen=True)
class FieldCtx:
    """An odd prime modulus with its quadratic-residue data.

    ``is_square[x]`` is True exactly for the nonzero squares; ``inv[x]`` is
    the multiplicative inverse (``inv[0] == 0`` so batched code can multiply
    through by it without branching).
    """

    p: int
    nonsquare: int
    is_square: np.ndarray = field(repr=False, compare=False)
    inv: np.ndarray = field(repr=False, compare=False)

    def square_class(self, x: int) -> SquareClass:
        x %= self.p
        if x == 0:
            return SquareClass.ZERO
        return SquareClass.SQUARE if self.is_square[x] else SquareClass.NONSQUARE

    def inverse(self, x: int) -> int:
        x %= self.p
        if x == 0:
            raise ZeroDivisionError("0 has no inverse")
        return int(self.inv[x])


@lru_cache(maxsize=None)
def field_ctx(p: int) -> FieldCtx:
    _check_odd_prime(p)
    lam = canonical_nonsquare(p)
    sq = np.zeros(p, dtype=bool)
    sq[(np.arange(1, p, dtype=np.int64) ** 2) % p] = True
    sq.setflags(write=False)
    inv = np.array([0] + [pow(x, p - 2, p) for x in range(1, p)], dtype=np.int64)
    inv.setflags(write=False)
    return FieldCtx(p=p, nonsquare=lam, is_square=sq, inv=inv)


def square_class(x: int, p: int) -> SquareClass:
    return field_ctx(p).square_class(x)


def reduce(m, p: int) -> np.ndarray:
    return np.mod(np.asarray(m, dtype=np.int64), p)


def rref(m, p: int) -> tuple[np.ndarray, int, list[int]]:
    """Reduced row-echelon form over F_p with zero rows dropped.

    Pivots are taken at the lowest-index nonzero entry and scaled to 1, so
    two matrices with the same row space give identical output.
    """
    a = reduce(m, p)
    if a.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    rows, cols = a.shape
    a = a.copy()
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(a[r:, c])[0]
        if nz.size == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            a[[r, piv]] = a[[piv, r]]
        a[r] = (a[r] * pow(int(a[r, c]), p - 2, p)) % p
        f = a[:, c].copy()
        f[r] = 0
        a = (a - np.outer(f, a[r])) % p
        pivots.append(c)
        r += 1
    return a[:r], r, pivots


def rank(m, p: int) -> int:
    return rref(m, p)[1]


def kernel(m, p: int) -> np.ndarray:
    """Basis (in RREF) of the right null space ``{x : m x = 0}``."""
    a = reduce(m, p)
    cols = a.shape[1]
    r, rk, pivots = rref(a, p)
    free = [c for c in range(cols) if c not in set(pivots)]
    basis = np.zeros((len(free), cols), dtype=np.int64)
    for i, fc in enumerate(free):
        basis[i, fc] = 1
        for row, pc in enumerate(pivots):
            basis[i, pc] = (-r[row, fc]) % p
    return rref(basis, p)[0] if len(free) else basis


def inverse(m, p: int) -> np.ndarray:
    a = reduce(m, p)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("inverse needs a square matrix")
    r, rk, _ = rref(np.hstack([a, np.eye(n, dtype=np.int64)]), p)
    if rk < n or not np.array_equal(r[:, :n], np.eye(n, dtype=np.int64)):
        raise ZeroDivisionError("matrix is singular over F_p")
    return r[:, n:]


def in_row_space(v, m, p: int) -> bool:
    v = reduce(v, p).reshape(-1)
    a = reduce(m, p)
    if a.ndim != 2 or a.shape[1] != v.shape[0]:
        raise ValueError(
            f"vector of length {v.shape[0]} does not match matrix with "
            f"{a.shape[-1]} columns"
        )
    if not v.any():
        return True
    return rank(np.vstack([a, v]), p) == rank(a, p)


def batch_rank(mats: np.ndarray, p: int) -> np.ndarray:
    """Ranks of a stack of matrices with shape ``(..., r, c)``."""
    a = reduce(mats, p)
    lead = a.shape[:-2]
    r, c = a.shape[-2:]
    a = a.reshape(-1, r, c).copy()
    m = a.shape[0]
    inv = field_ctx(p).inv
    row = np.zeros(m, dtype=np.int64)
    idx = np.arange(m)
    ar = np.arange(r)
    for col in range(c):
        cand = (a[:, :, col] != 0) & (ar[None, :] >= row[:, None])
        has = cand.any(axis=1)
        if not has.any():
            continue
        piv = np.argmax(cand, axis=1)
        tgt = np.minimum(row, r - 1)
        # move each pivot row into position row[b] (no-op where has is False)
        src = np.where(has, piv, tgt)
        tmp = a[idx, src].copy()
        a[idx, src] = a[idx, tgt]
        a[idx, tgt] = tmp
        prow = a[idx, tgt]
        f = (a[:, :, col] * inv[prow[:, col]][:, None]) % p
        f[idx, tgt] = 0
        f[~has] = 0
        a = (a - f[:, :, None] * prow[:, None, :]) % p
        row = row + has
    return row.reshape(lead)


def all_matrices(p: int, r: int, c: int) -> np.ndarray:
    """Every r×c matrix over F_p, ordered by :func:`encode_matrices` code."""
    f = r * c
    codes = np.arange(p**f, dtype=np.int64)
    powers = p ** np.arange(f, dtype=np.int64)
    return ((codes[:, None] // powers[None, :]) % p).reshape(-1, r, c)


def encode_matrices(mats: np.ndarray, p: int) -> np.ndarray:
    """Base-p integer code of each matrix in a ``(..., r, c)`` stack (row-major, little-endian)."""
    r, c = mats.shape[-2:]
    powers = p ** np.arange(r * c, dtype=np.int64)
    return mats.reshape(*mats.shape[:-2], r * c) @ powers


@lru_cache(maxsize=32)
def rank_table(p: int, r: int, c: int) -> Optional[np.ndarray]:
    """Rank of every r×c matrix indexed by code, or None above ``TABLE_LIMIT``."""
    if p ** (r * c) > TABLE_LIMIT:
        return None
    table = np.empty(p ** (r * c), dtype=np.int8)
    mats = all_matrices(p, r, c)
    step = 1 << 16
    for s in range(0, len(mats), step):
        table[s:s + step] = batch_rank(mats[s:s + step], p)
    table.setflags(write=False)
    return table


def fast_rank(mats: np.ndarray, p: int) -> np.ndarray:
    """:func:`batch_rank` through a lookup table when one fits."""
    r, c = mats.shape[-2:]
    table = rank_table(p, r, c)
    if table is None:
        return batch_rank(mats, p)
    return table[encode_matrices(mats, p)].astype(np.int64)
