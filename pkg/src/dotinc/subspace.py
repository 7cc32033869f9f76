"""Canonical enumeration and classification of subspaces of F_q^n.

Every subspace is represented by its unique RREF basis. Enumeration walks
pivot-column sets in lexicographic order and, inside each set, the free RREF
entries in odometer order (last entry fastest). The position of a subspace in
that order is its index everywhere downstream.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional

import numpy as np

from .field import field_ctx, kernel, in_row_space, reduce, rref
from .quadform import IsoType, batch_classify_grams, isometry_type

__all__ = [
    "MAX_SUBSPACES",
    "SizeGuardError",
    "gaussian_binomial",
    "Subspace",
    "TypeCensus",
    "rref_bases",
    "enumerate_subspaces",
    "classify_bases",
    "census",
    "typed_bases",
    "subspace_sum",
    "intersection",
    "contains",
    "batch_contains",
]

MAX_SUBSPACES = 10**7


class SizeGuardError(RuntimeError):
    """Parameters exceed desk scale."""


def gaussian_binomial(n: int, k: int, q: int) -> int:
    if k < 0 or k > n:
        return 0
    num = den = 1
    for i in range(k):
        num *= q ** (n - i) - 1
        den *= q ** (i + 1) - 1
    return num // den


def _check_params(q: int, n: int, k: int) -> None:
    field_ctx(q)
    if n < 0 or k < 0:
        raise ValueError("dimensions must be nonnegative")
    if k > n:
        raise ValueError(f"subspace dimension k={k} exceeds ambient dimension n={n}")
    total = gaussian_binomial(n, k, q)
    if total > MAX_SUBSPACES:
        raise SizeGuardError(
            f"parameters exceed desk scale: {total} subspaces of dimension {k} "
            f"in F_{q}^{n} (guard MAX_SUBSPACES={MAX_SUBSPACES})"
        )


@dataclass(frozen=True)
class Subspace:
    q: int
    basis: tuple[tuple[int, ...], ...]
    n: int
    cached_type: Optional[IsoType] = field(default=None, compare=False)

    @classmethod
    def from_rows(cls, rows, q: int, n: Optional[int] = None) -> "Subspace":
        a = reduce(rows, q)
        if a.ndim == 1:
            a = a.reshape(1, -1)
        if n is None:
            n = a.shape[1]
        if a.shape[0] == 0:
            return cls(q, (), n)
        r, _, _ = rref(a, q)
        return cls(q, tuple(tuple(int(x) for x in row) for row in r), n)

    @property
    def k(self) -> int:
        return len(self.basis)

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.basis, dtype=np.int64).reshape(self.k, self.n)

    @property
    def iso_type(self) -> IsoType:
        if self.cached_type is not None:
            return self.cached_type
        return isometry_type(self.matrix, self.q)

    def __repr__(self) -> str:
        return f"Subspace(q={self.q}, n={self.n}, basis={list(map(list, self.basis))})"


def _odometer(q: int, f: int) -> np.ndarray:
    """All ``q**f`` digit vectors, last digit varying fastest."""
    if f == 0:
        return np.zeros((1, 0), dtype=np.int64)
    codes = np.arange(q**f, dtype=np.int64)
    powers = q ** np.arange(f - 1, -1, -1, dtype=np.int64)
    return (codes[:, None] // powers[None, :]) % q


def rref_bases(q: int, n: int, k: int) -> np.ndarray:
    """RREF bases of every k-subspace of F_q^n, shape ``(count, k, n)``."""
    _check_params(q, n, k)
    blocks = []
    for pivots in itertools.combinations(range(n), k):
        pset = set(pivots)
        free = [(i, j) for i, pc in enumerate(pivots) for j in range(pc + 1, n) if j not in pset]
        digits = _odometer(q, len(free))
        block = np.zeros((digits.shape[0], k, n), dtype=np.int64)
        for i, pc in enumerate(pivots):
            block[:, i, pc] = 1
        for d, (i, j) in enumerate(free):
            block[:, i, j] = digits[:, d]
        blocks.append(block)
    if not blocks:
        return np.zeros((0, k, n), dtype=np.int64)
    return np.concatenate(blocks)


def enumerate_subspaces(q: int, n: int, k: int) -> Iterator[Subspace]:
    for b in rref_bases(q, n, k):
        yield Subspace(q, tuple(tuple(int(x) for x in row) for row in b), n)


def classify_bases(bases: np.ndarray, q: int) -> tuple[np.ndarray, np.ndarray]:
    """``(rank, disc_code)`` of the restricted form for each basis in a stack."""
    bases = reduce(bases, q)
    out_rank = np.empty(bases.shape[0], dtype=np.int64)
    out_disc = np.empty(bases.shape[0], dtype=np.int64)
    step = 1 << 16
    for s in range(0, bases.shape[0], step):
        b = bases[s:s + step]
        g = np.einsum("mij,mlj->mil", b, b) % q
        out_rank[s:s + step], out_disc[s:s + step] = batch_classify_grams(g, q)
    return out_rank, out_disc


@dataclass
class TypeCensus:
    q: int
    n: int
    k: int
    counts: dict[IsoType, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def count(self, iso: IsoType) -> int:
        return self.counts.get(iso, 0)

    @property
    def dot(self) -> int:
        return sum(c for t, c in self.counts.items() if t.is_dot)

    @property
    def lambda_dot(self) -> int:
        return sum(c for t, c in self.counts.items() if t.is_lambda_dot)

    def formula_value(self) -> Fraction:
        """Leading-order count ``q^(k(n-k)) / 2`` of each nondegenerate type."""
        return Fraction(self.q ** (self.k * (self.n - self.k)), 2)

    def rows(self) -> list[dict]:
        out = []
        for iso in sorted(self.counts):
            formula = self.formula_value() if iso.nondegenerate and iso.rank > 0 else None
            out.append(
                {
                    "q": self.q,
                    "n": self.n,
                    "k": self.k,
                    "rank": iso.rank,
                    "disc_class": iso.disc.value if iso.disc else "",
                    "type": iso.label,
                    "exact_count": self.counts[iso],
                    "formula_value": float(formula) if formula is not None else None,
                    "ratio": float(self.counts[iso] / formula) if formula is not None else None,
                }
            )
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["q", "n", "k", "rank", "disc_class", "exact_count", "formula_value", "ratio"]
        w = csv.DictWriter(buf, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for row in self.rows():
            w.writerow({c: ("" if row[c] is None else row[c]) for c in cols})
        return buf.getvalue()


def census(q: int, n: int, k: int) -> TypeCensus:
    bases = rref_bases(q, n, k)
    rk, disc = classify_bases(bases, q)
    counts: dict[IsoType, int] = {}
    keys, freq = np.unique(np.stack([rk, disc], axis=1), axis=0, return_counts=True) if len(rk) else ([], [])
    for (r, d), c in zip(keys, freq):
        counts[IsoType.from_code(k, r, d)] = int(c)
    return TypeCensus(q, n, k, dict(sorted(counts.items())))


def typed_bases(q: int, n: int, k: int, iso: IsoType) -> tuple[np.ndarray, np.ndarray]:
    """Bases of all subspaces of a given isometry type plus their enumeration indices."""
    bases = rref_bases(q, n, k)
    rk, disc = classify_bases(bases, q)
    sel = np.nonzero((rk == iso.rank) & (disc == iso.disc_code))[0]
    return bases[sel], sel


def _same_ambient(a: Subspace, b: Subspace) -> None:
    if a.q != b.q or a.n != b.n:
        raise ValueError(
            f"ambient mismatch: F_{a.q}^{a.n} versus F_{b.q}^{b.n}"
        )


def subspace_sum(a: Subspace, b: Subspace) -> Subspace:
    _same_ambient(a, b)
    return Subspace.from_rows(np.vstack([a.matrix, b.matrix]), a.q, a.n)


def intersection(a: Subspace, b: Subspace) -> Subspace:
    """Intersection via annihilators: ann(a ∩ b) = ann(a) + ann(b)."""
    _same_ambient(a, b)
    q, n = a.q, a.n
    if a.k == 0 or b.k == 0:
        return Subspace(q, (), n)
    ann = np.vstack([kernel(a.matrix, q), kernel(b.matrix, q)])
    if ann.shape[0] == 0:
        return a
    return Subspace.from_rows(kernel(ann, q), q, n)


def contains(big: Subspace, small: Subspace) -> bool:
    """True iff ``small`` is a subspace of ``big``."""
    _same_ambient(big, small)
    if small.k == 0:
        return True
    if big.k == 0:
        return False
    m = big.matrix
    return all(in_row_space(np.array(row), m, big.q) for row in small.basis)


def batch_contains(small: np.ndarray, ann: np.ndarray, q: int) -> np.ndarray:
    """Containment of row spaces in the common kernels of annihilator stacks.

    ``small`` has shape ``(M, k, n)``; ``ann`` has shape ``(N, r, n)``. Entry
    ``[i, j]`` is True iff every row of ``small[i]`` is orthogonal (standard
    bilinear pairing) to every row of ``ann[j]``.
    """
    m, k, n = small.shape
    nb, r, _ = ann.shape
    flat_s = small.reshape(m * k, n).astype(np.int64)
    flat_a = ann.reshape(nb * r, n).astype(np.int64).T
    out = np.empty((m, nb), dtype=bool)
    step = max(1, (1 << 24) // max(1, nb * r * k))
    for s in range(0, m, step):
        prod = (flat_s[s * k:(s + step) * k] @ flat_a) % q
        prod = prod.reshape(-1, k, nb, r)
        out[s:s + step] = ~prod.any(axis=(1, 3))
    return out
