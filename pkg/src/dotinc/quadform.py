"""Isometry classification of subspaces of (F_p^n, x_1^2 + ... + x_n^2).

Over a finite field of odd characteristic a quadratic space is determined up
to isometry by its rank and the square class of the discriminant of its
nondegenerate part, so :class:`IsoType` stores exactly that pair.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .field import TABLE_LIMIT, FieldCtx, SquareClass, field_ctx, reduce

__all__ = [
    "IsoType",
    "gram",
    "diagonalize_symmetric",
    "isometry_type",
    "is_dot",
    "diagonal_basis",
    "orthonormal_basis",
    "batch_diagonalize",
    "batch_classify_grams",
    "fast_classify_grams",
    "gram_class_table",
    "DISC_SQUARE",
    "DISC_NONSQUARE",
    "DISC_NONE",
]

# integer codes used by the batched kernels
DISC_NONE = 0
DISC_SQUARE = 1
DISC_NONSQUARE = -1

_DISC_FROM_CODE = {
    DISC_NONE: None,
    DISC_SQUARE: SquareClass.SQUARE,
    DISC_NONSQUARE: SquareClass.NONSQUARE,
}


@dataclass(frozen=True)
class IsoType:
    """Isometry class ``dot_r + 0^(dim-r)`` or ``λdot_r + 0^(dim-r)``."""

    dim: int
    rank: int
    disc: Optional[SquareClass]

    def __post_init__(self):
        if not 0 <= self.rank <= self.dim:
            raise ValueError(f"rank {self.rank} outside [0, {self.dim}]")
        if (self.rank == 0) != (self.disc is None):
            raise ValueError("disc must be None exactly when rank is 0")
        if self.disc is SquareClass.ZERO:
            raise ValueError("disc of a nondegenerate part is never zero")

    @classmethod
    def from_code(cls, dim: int, rank: int, disc_code: int) -> "IsoType":
        return cls(int(dim), int(rank), _DISC_FROM_CODE[int(disc_code)])

    @property
    def disc_code(self) -> int:
        if self.disc is None:
            return DISC_NONE
        return DISC_SQUARE if self.disc is SquareClass.SQUARE else DISC_NONSQUARE

    @property
    def nondegenerate(self) -> bool:
        return self.rank == self.dim

    @property
    def is_dot(self) -> bool:
        return self.nondegenerate and self.disc is SquareClass.SQUARE

    @property
    def is_lambda_dot(self) -> bool:
        return self.nondegenerate and self.disc is SquareClass.NONSQUARE

    def sort_key(self) -> tuple:
        return (self.dim, -self.rank, 0 if self.disc is SquareClass.SQUARE else 1)

    def __lt__(self, other: "IsoType") -> bool:
        return self.sort_key() < other.sort_key()

    @property
    def label(self) -> str:
        if self.rank == 0:
            return f"0^{self.dim}"
        head = ("dot_" if self.disc is SquareClass.SQUARE else "ldot_") + str(self.rank)
        if self.rank < self.dim:
            head += f"+0^{self.dim - self.rank}"
        return head

    def __str__(self) -> str:
        return self.label


def gram(basis, p: int) -> np.ndarray:
    """Gram matrix of the rows of ``basis`` under the standard dot form."""
    b = reduce(basis, p)
    return (b @ b.T) % p


def diagonalize_symmetric(g, p: int) -> list[int]:
    """Diagonal of a matrix congruent to the symmetric matrix ``g``.

    Symmetric row/column elimination; when the remaining block has a zero
    diagonal but a nonzero entry ``g[j, l]``, adding row/column ``l`` to
    ``j`` makes ``g[j, j] = 2 g[j, l] != 0``.
    """
    a = [[int(x) % p for x in row] for row in np.asarray(g)]
    k = len(a)
    for i in range(k):
        j = next((j for j in range(i, k) if a[j][j]), None)
        if j is None:
            off = next(
                ((j, l) for j in range(i, k) for l in range(i, k) if a[j][l]),
                None,
            )
            if off is None:
                break
            j, l = off
            for c in range(k):
                a[j][c] = (a[j][c] + a[l][c]) % p
            for r in range(k):
                a[r][j] = (a[r][j] + a[r][l]) % p
        if j != i:
            a[i], a[j] = a[j], a[i]
            for row in a:
                row[i], row[j] = row[j], row[i]
        d_inv = pow(a[i][i], p - 2, p)
        for r in range(i + 1, k):
            f = a[r][i] * d_inv % p
            if f:
                for c in range(k):
                    a[r][c] = (a[r][c] - f * a[i][c]) % p
                for rr in range(k):
                    a[rr][r] = (a[rr][r] - f * a[rr][i]) % p
    return [a[i][i] for i in range(k)]


def _type_from_diagonal(diag: list[int], ctx: FieldCtx) -> IsoType:
    nonzero = [d for d in diag if d]
    if not nonzero:
        return IsoType(len(diag), 0, None)
    prod = 1
    for d in nonzero:
        prod = prod * d % ctx.p
    return IsoType(len(diag), len(nonzero), ctx.square_class(prod))


def isometry_type(basis, p: int) -> IsoType:
    """Isometry class of the form restricted to the row space of ``basis``.

    The rows must be linearly independent.
    """
    b = reduce(basis, p)
    if b.ndim != 2:
        raise ValueError("basis must be a 2-d matrix")
    return _type_from_diagonal(diagonalize_symmetric(gram(b, p), p), field_ctx(p))


def is_dot(basis, p: int) -> bool:
    return isometry_type(basis, p).is_dot


def diagonal_basis(basis, p: int) -> tuple[np.ndarray, list[int]]:
    """Orthogonal basis of the row space of ``basis`` and the form values on it.

    Same elimination as :func:`diagonalize_symmetric`, with every row
    operation applied to the basis vectors as well.
    """
    vecs = reduce(basis, p).copy()
    k = vecs.shape[0]
    for i in range(k):
        g = gram(vecs, p)
        j = next((j for j in range(i, k) if g[j, j]), None)
        if j is None:
            off = next(((j, l) for j in range(i, k) for l in range(i, k) if g[j, l]), None)
            if off is None:
                break
            j, l = off
            vecs[j] = (vecs[j] + vecs[l]) % p
            g = gram(vecs, p)
        if j != i:
            vecs[[i, j]] = vecs[[j, i]]
            g = gram(vecs, p)
        d_inv = pow(int(g[i, i]), p - 2, p)
        for r in range(i + 1, k):
            f = int(g[r, i]) * d_inv % p
            if f:
                vecs[r] = (vecs[r] - f * vecs[i]) % p
    g = gram(vecs, p)
    return vecs, [int(g[i, i]) for i in range(k)]


def _sqrt_mod(x: int, p: int) -> int:
    return next(y for y in range(1, p) if y * y % p == x % p)


def orthonormal_basis(basis, p: int) -> np.ndarray:
    """Basis with identity Gram matrix for a subspace of type dot_k.

    Nonsquare diagonal values come in pairs (the discriminant is a square);
    each pair ``Q(u) = a, Q(v) = b`` is rotated to ``x u + y v`` and
    ``-y b u + x a v`` with ``a x^2 + b y^2 = 1``.
    """
    vecs, diag = diagonal_basis(basis, p)
    ctx = field_ctx(p)
    if any(d == 0 for d in diag):
        raise ValueError("subspace is degenerate")
    out = []
    pending = None
    for v, d in zip(vecs, diag):
        if ctx.is_square[d]:
            out.append(v * ctx.inverse(_sqrt_mod(d, p)) % p)
        elif pending is None:
            pending = (v, d)
        else:
            u, a = pending
            pending = None
            b = d
            x, y = next(
                (x, y) for x in range(p) for y in range(p) if (a * x * x + b * y * y) % p == 1
            )
            w1 = (x * u + y * v) % p
            w2 = ((-y * b) * u + (x * a) * v) % p
            out.append(w1)
            out.append(w2 * ctx.inverse(_sqrt_mod(a * b % p, p)) % p)
    if pending is not None:
        raise ValueError("subspace is not of type dot_k")
    return np.array(out, dtype=np.int64).reshape(len(out), -1)


def batch_diagonalize(grams: np.ndarray, p: int) -> np.ndarray:
    """Vectorized :func:`diagonalize_symmetric` over shape ``(..., k, k)``."""
    g = reduce(grams, p)
    lead = g.shape[:-2]
    k = g.shape[-1]
    if k == 0:
        return np.zeros((*lead, 0), dtype=np.int64)
    g = g.reshape(-1, k, k).copy()
    m = g.shape[0]
    inv = field_ctx(p).inv
    idx = np.arange(m)
    for i in range(k):
        sub = g[:, i:, i:]
        diag = np.diagonal(sub, axis1=1, axis2=2)
        has_diag = (diag != 0).any(axis=1)
        j = i + np.argmax(diag != 0, axis=1)
        need = ~has_diag & (sub != 0).reshape(m, -1).any(axis=1)
        if need.any():
            w = np.nonzero(need)[0]
            flat = np.argmax(sub[w].reshape(len(w), -1) != 0, axis=1)
            jj = i + flat // (k - i)
            ll = i + flat % (k - i)
            g[w, jj, :] = (g[w, jj, :] + g[w, ll, :]) % p
            g[w, :, jj] = (g[w, :, jj] + g[w, :, ll]) % p
            j[w] = jj
        j = np.where(has_diag | need, j, i)
        # symmetric swap of index j into position i
        tmp = g[idx, i, :].copy()
        g[idx, i, :] = g[idx, j, :]
        g[idx, j, :] = tmp
        tmp = g[idx, :, i].copy()
        g[idx, :, i] = g[idx, :, j]
        g[idx, :, j] = tmp
        if i + 1 == k:
            break
        d_inv = inv[g[:, i, i]]
        f = (g[:, i + 1:, i] * d_inv[:, None]) % p
        g[:, i + 1:, :] = (g[:, i + 1:, :] - f[:, :, None] * g[:, i, None, :]) % p
        g[:, :, i + 1:] = (g[:, :, i + 1:] - f[:, None, :] * g[:, :, i, None]) % p
    return np.diagonal(g, axis1=1, axis2=2).reshape(*lead, k)


def batch_classify_grams(grams: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(rank, disc_code)`` arrays for a stack of symmetric matrices."""
    ctx = field_ctx(p)
    diag = batch_diagonalize(grams, p)
    nz = diag != 0
    rk = nz.sum(axis=-1)
    prod = np.ones(diag.shape[:-1], dtype=np.int64)
    for i in range(diag.shape[-1]):
        prod = (prod * np.where(nz[..., i], diag[..., i], 1)) % p
    disc = np.where(ctx.is_square[prod], DISC_SQUARE, DISC_NONSQUARE)
    disc = np.where(rk == 0, DISC_NONE, disc)
    return rk, disc


@lru_cache(maxsize=16)
def gram_class_table(p: int, k: int) -> Optional[tuple[np.ndarray, np.ndarray]]:
    f = k * (k + 1) // 2
    if p**f > TABLE_LIMIT:
        return None
    codes = np.arange(p**f, dtype=np.int64)
    upper = (codes[:, None] // (p ** np.arange(f, dtype=np.int64))[None, :]) % p
    iu = np.triu_indices(k)
    g = np.zeros((len(codes), k, k), dtype=np.int64)
    g[:, iu[0], iu[1]] = upper
    g[:, iu[1], iu[0]] = upper
    rk, disc = batch_classify_grams(g, p)
    rk, disc = rk.astype(np.int8), disc.astype(np.int8)
    rk.setflags(write=False)
    disc.setflags(write=False)
    return rk, disc


def fast_classify_grams(grams: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """:func:`batch_classify_grams` via a table over the upper triangle when one fits."""
    k = grams.shape[-1]
    table = gram_class_table(p, k)
    if table is None:
        return batch_classify_grams(grams, p)
    iu = np.triu_indices(k)
    code = grams[..., iu[0], iu[1]] @ (p ** np.arange(len(iu[0]), dtype=np.int64))
    return table[0][code].astype(np.int64), table[1][code].astype(np.int64)
