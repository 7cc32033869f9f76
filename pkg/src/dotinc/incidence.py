"""The bipartite containment graph between dot_k- and dot_h-subspaces.

``N[i, j]`` is True iff the i-th dot_k-subspace lies in the j-th
dot_h-subspace (indices are positions in the filtered enumeration order).
:func:`nnt_decompose` computes ``N N^T`` exactly and groups its off-diagonal
entries by the isometry class of ``K + K'``.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from fractions import Fraction
from typing import Iterator, Optional, Sequence

import numpy as np

from .field import (
    TABLE_LIMIT,
    SquareClass,
    all_matrices,
    batch_rank,
    encode_matrices,
    field_ctx,
    kernel,
    rank_table,
)
from .quadform import DISC_SQUARE, IsoType, batch_classify_grams, orthonormal_basis
from .subspace import SizeGuardError, batch_contains, gaussian_binomial, typed_bases

__all__ = [
    "DENSE_GUARD",
    "dot_type",
    "graph_from_biadjacency",
    "NotBiregularError",
    "ConstancyError",
    "IncidenceGraph",
    "PairClass",
    "ClassRecord",
    "DecompositionReport",
    "DegreeCheck",
    "ErrorExponent",
    "build_graph",
    "degree_check",
    "pair_classes",
    "nnt_decompose",
    "et_degree_profile",
    "formula_error_exponent",
]

DENSE_GUARD = 8 * 10**8
SAMPLE_ROWS = 64


class NotBiregularError(RuntimeError):
    pass


class ConstancyError(RuntimeError):
    pass


def dot_type(k: int) -> IsoType:
    return IsoType(k, k, SquareClass.SQUARE)


@dataclass
class IncidenceGraph:
    q: int
    n: int
    k: int
    h: int
    a_bases: np.ndarray
    b_bases: np.ndarray
    a_index: np.ndarray
    b_index: np.ndarray
    N: np.ndarray
    left_degree: int = 0
    right_degree: int = 0

    @property
    def size_a(self) -> int:
        return self.N.shape[0]

    @property
    def size_b(self) -> int:
        return self.N.shape[1]

    @property
    def edges(self) -> int:
        return int(self.N.sum())

    def header(self) -> dict:
        return {
            "q": self.q,
            "n": self.n,
            "k": self.k,
            "h": self.h,
            "size_A": self.size_a,
            "size_B": self.size_b,
            "left_degree": self.left_degree,
            "right_degree": self.right_degree,
            "edges": self.edges,
        }

    def edge_lines(self) -> Iterator[str]:
        for i, j in zip(*np.nonzero(self.N)):
            yield f"{i} {j}"

    def export_edges(self, path) -> None:
        """JSON header line followed by one ``k_index h_index`` line per edge."""
        with open(path, "w") as fh:
            fh.write(json.dumps(self.header(), sort_keys=True) + "\n")
            for line in self.edge_lines():
                fh.write(line + "\n")


def _annihilators(bases: np.ndarray, q: int) -> np.ndarray:
    n = bases.shape[2]
    r = n - bases.shape[1]
    out = np.zeros((bases.shape[0], r, n), dtype=np.int64)
    for i, b in enumerate(bases):
        out[i] = kernel(b, q)
    return out


def _check_biregular(N: np.ndarray) -> tuple[int, int]:
    rows = N.sum(axis=1)
    cols = N.sum(axis=0)
    if rows.size == 0 or cols.size == 0:
        raise NotBiregularError("empty part")
    if rows.min() != rows.max() or cols.min() != cols.max():
        raise NotBiregularError(
            f"row sums in [{rows.min()}, {rows.max()}], "
            f"column sums in [{cols.min()}, {cols.max()}]"
        )
    return int(rows[0]), int(cols[0])


def graph_from_biadjacency(N: np.ndarray, q: int = 0, n: int = 0, k: int = 0, h: int = 0) -> IncidenceGraph:
    """Wrap an arbitrary biregular 0/1 matrix (used for toy graphs)."""
    N = np.asarray(N, dtype=bool)
    a, b = _check_biregular(N)
    empty = np.zeros((0, 0, 0), dtype=np.int64)
    return IncidenceGraph(
        q, n, k, h, empty, empty,
        np.arange(N.shape[0]), np.arange(N.shape[1]), N, a, b,
    )


def build_graph(q: int, n: int, k: int, h: int) -> IncidenceGraph:
    field_ctx(q)
    if not 0 < k < h < n:
        raise ValueError(f"need 0 < k < h < n, got k={k}, h={h}, n={n}")
    est_a = gaussian_binomial(n, k, q)
    est_b = gaussian_binomial(n, h, q)
    if est_a * est_b > 4 * DENSE_GUARD:
        raise SizeGuardError(
            f"parameters exceed desk scale: biadjacency would have about "
            f"{est_a * est_b // 4} entries (guard 4*DENSE_GUARD={4 * DENSE_GUARD})"
        )
    a_bases, a_index = typed_bases(q, n, k, dot_type(k))
    b_bases, b_index = typed_bases(q, n, h, dot_type(h))
    if len(a_bases) == 0 or len(b_bases) == 0:
        raise NotBiregularError(f"empty part: |A|={len(a_bases)}, |B|={len(b_bases)}")
    N = batch_contains(a_bases, _annihilators(b_bases, q), q)
    a, b = _check_biregular(N)
    return IncidenceGraph(q, n, k, h, a_bases, b_bases, a_index, b_index, N, a, b)


@dataclass
class DegreeCheck:
    left_degree: int
    right_degree: int
    formula: Fraction
    ratio: float

    @property
    def relative_deviation(self) -> float:
        return abs(self.ratio - 1.0)


def degree_check(g: IncidenceGraph) -> DegreeCheck:
    """Exact degrees next to the leading-order left degree ``q^((h-k)(n-h)) / 2``."""
    a, b = _check_biregular(g.N)
    formula = Fraction(g.q ** ((g.h - g.k) * (g.n - g.h)), 2)
    return DegreeCheck(a, b, formula, float(a / formula))


# -- pair classes -----------------------------------------------------------

@dataclass(frozen=True, order=True)
class PairClass:
    """Class of an ordered pair (K, K'): ``t = dim(K + K')`` and its isometry type."""

    t: int
    sum_type: IsoType = field(compare=False)
    code: int = field(default=0, repr=False)

    @classmethod
    def from_code(cls, code: int) -> "PairClass":
        t, rank, disc = _decode(code)
        return cls(t, IsoType.from_code(t, rank, disc), code)

    @property
    def label(self) -> str:
        return f"t={self.t}:{self.sum_type.label}"


def _encode(t, rank, disc):
    return t * 100 + rank * 10 + (disc + 1)


def _decode(code: int) -> tuple[int, int, int]:
    code = int(code)
    return code // 100, (code // 10) % 10, code % 10 - 1


def _sort_code(code: int) -> tuple:
    pc = PairClass.from_code(code)
    return (pc.t, pc.sum_type.sort_key())


@lru_cache(maxsize=16)
def _schur_table(q: int, k: int) -> Optional[tuple[np.ndarray, np.ndarray]]:
    """(rank, disc) of ``I - C^T C`` for every k×k matrix ``C``, by code."""
    if q ** (k * k) > TABLE_LIMIT:
        return None
    c = all_matrices(q, k, k)
    s = (np.eye(k, dtype=np.int64)[None] - c.transpose(0, 2, 1) @ c) % q
    rk, disc = batch_classify_grams(s, q)
    return rk.astype(np.int8), disc.astype(np.int8)


def _fmod(x: np.ndarray, q: int) -> np.ndarray:
    # exact for integer-valued floats of moderate size
    return x - q * np.floor(x / q)


class _PairClassifier:
    """Precomputed per-subspace data for classifying pairs of dot_k-subspaces.

    Every subspace carries an orthonormal basis, so with ``C = K K'^T`` the
    form on ``K + K'`` is congruent to ``I_k ⊕ (I_k - C^T C)``.
    ``dim(K + K') - k`` is the rank of ``K' ann(K)^T``.
    """

    def __init__(self, bases: np.ndarray, q: int):
        self.q = q
        m, k, n = bases.shape
        self.k, self.n, self.m = k, n, m
        ortho = np.empty((m, k, n), dtype=np.int64)
        ann = np.empty((m, n - k, n), dtype=np.int64)
        for i, b in enumerate(bases):
            ortho[i] = orthonormal_basis(b, q)
            ann[i] = kernel(b, q)
        # float64 products stay exact: every partial sum is far below 2^53
        self.flat = ortho.reshape(m * k, n).astype(np.float64)
        self.flat_t = np.ascontiguousarray(self.flat.T)
        self.ann = ann.reshape(m * (n - k), n).astype(np.float64)
        self.rank_table = rank_table(q, k, n - k)
        self.schur_table = _schur_table(q, k)

    def codes(self, rows: np.ndarray) -> np.ndarray:
        """Pair-class codes for ``rows × all``; shape ``(len(rows), m)``."""
        q, k, n, m = self.q, self.k, self.n, self.m
        rows = np.asarray(rows)
        b = len(rows)
        r = n - k
        sel = (rows[:, None] * k + np.arange(k)[None, :]).reshape(-1)
        c = _fmod(self.flat[sel] @ self.flat_t, q).reshape(b, k, m, k).transpose(0, 2, 1, 3)
        sel = (rows[:, None] * r + np.arange(r)[None, :]).reshape(-1)
        d = _fmod(self.ann[sel] @ self.flat_t, q).reshape(b, r, m, k).transpose(0, 2, 3, 1)
        if self.rank_table is not None:
            t = self.rank_table[encode_matrices(d, q).astype(np.int64)].astype(np.int64)
        else:
            t = batch_rank(d.astype(np.int64), q)
        if self.schur_table is not None:
            code = encode_matrices(c, q).astype(np.int64)
            rank_s, disc_s = self.schur_table[0][code], self.schur_table[1][code]
        else:
            ci = c.astype(np.int64)
            s = (np.eye(k, dtype=np.int64) - np.swapaxes(ci, -1, -2) @ ci) % q
            rank_s, disc_s = batch_classify_grams(s, q)
        rank_s = rank_s.astype(np.int64)
        disc = np.where(rank_s == 0, DISC_SQUARE, disc_s.astype(np.int64))
        return _encode(k + t, k + rank_s, disc)


def pair_classes(bases: np.ndarray, q: int, rows: Optional[Sequence[int]] = None) -> np.ndarray:
    """Matrix of pair-class codes (decode with :meth:`PairClass.from_code`)."""
    pc = _PairClassifier(bases, q)
    if rows is None:
        rows = np.arange(bases.shape[0])
    return pc.codes(np.asarray(rows))


def _row_plan(m: int, guard: int) -> tuple[np.ndarray, bool]:
    if m * m <= guard:
        return np.arange(m), False
    return np.unique(np.linspace(0, m - 1, SAMPLE_ROWS).round().astype(np.int64)), True


def _block_size(m: int, k: int, n: int) -> int:
    return max(1, (1 << 22) // max(1, m * k * n))


@dataclass
class ClassRecord:
    pair_class: PairClass
    pairs: int
    b: Optional[int]
    b_min: int
    b_max: int
    degree_min: int
    degree_max: int
    formula_b: Optional[Fraction]
    formula_degree: Optional[Fraction]

    @property
    def constant(self) -> bool:
        return self.b_min == self.b_max

    def to_dict(self) -> dict:
        st = self.pair_class.sum_type
        return {
            "t": self.pair_class.t,
            "sum_type": st.label,
            "rank": st.rank,
            "disc_class": st.disc.value if st.disc else None,
            "nondegenerate": st.nondegenerate,
            "pairs": self.pairs,
            "b": self.b,
            "b_min": self.b_min,
            "b_max": self.b_max,
            "degree_min": self.degree_min,
            "degree_max": self.degree_max,
            "formula_b": _frac(self.formula_b),
            "formula_degree": _frac(self.formula_degree),
            "b_ratio": float(self.b / self.formula_b) if self.b is not None and self.formula_b else None,
            "degree_ratio": float(self.degree_max / self.formula_degree) if self.formula_degree else None,
        }


def _frac(x: Optional[Fraction]):
    return None if x is None else float(x)


def _formula_degree(q, n, k, t) -> Fraction:
    return Fraction(q ** ((t - k) * (n + 2 * k - 2 * t)), 2)


def _formula_b(q, n, h, t) -> Optional[Fraction]:
    if t > h:
        return None
    return Fraction(q ** ((h - t) * (n - h)), 2)


@dataclass
class DecompositionReport:
    q: int
    n: int
    k: int
    h: int
    a_exact: int
    diagonal_constant: bool
    row_sum: int
    row_sum_constant: bool
    trace: int
    rows_examined: int
    sampled: bool
    classes: list[ClassRecord]

    @property
    def all_constant(self) -> bool:
        return all(c.constant for c in self.classes)

    def accounted_row_sum(self) -> int:
        """``a + Σ degree × b`` over classes; requires constant degrees and b."""
        return self.a_exact + sum(c.degree_max * c.b for c in self.classes if c.b is not None)

    @property
    def accounting_holds(self) -> bool:
        ok = all(c.b is not None and c.degree_min == c.degree_max for c in self.classes)
        return ok and self.row_sum_constant and self.accounted_row_sum() == self.row_sum

    def dot_vs_lambda(self) -> list[dict]:
        """Compare b between the (t, dot_t) and (t, λdot_t) classes."""
        out = []
        by_t: dict[int, dict[str, ClassRecord]] = {}
        for c in self.classes:
            st = c.pair_class.sum_type
            if st.nondegenerate:
                by_t.setdefault(c.pair_class.t, {})["dot" if st.is_dot else "ldot"] = c
        for t, d in sorted(by_t.items()):
            if "dot" in d and "ldot" in d:
                out.append(
                    {
                        "t": t,
                        "b_dot": d["dot"].b,
                        "b_ldot": d["ldot"].b,
                        "equal": d["dot"].b == d["ldot"].b,
                    }
                )
        return out

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "n": self.n,
            "k": self.k,
            "h": self.h,
            "a_exact": self.a_exact,
            "diagonal_constant": self.diagonal_constant,
            "row_sum": self.row_sum,
            "row_sum_constant": self.row_sum_constant,
            "trace": self.trace,
            "rows_examined": self.rows_examined,
            "sampled": self.sampled,
            "all_constant": self.all_constant,
            "accounted_row_sum": self.accounted_row_sum() if all(c.b is not None for c in self.classes) else None,
            "accounting_holds": self.accounting_holds,
            "dot_vs_lambda": self.dot_vs_lambda(),
            "classes": [c.to_dict() for c in self.classes],
        }


class _ClassStats:
    def __init__(self, m: int):
        self.m = m
        self.pairs: dict[int, int] = {}
        self.lo: dict[int, int] = {}
        self.hi: dict[int, int] = {}
        self.blocks: list[tuple[int, dict[int, np.ndarray]]] = []

    def add(self, codes: np.ndarray, values: Optional[np.ndarray], diag_cols: np.ndarray) -> None:
        nrows = codes.shape[0]
        codes = codes.copy()
        codes[np.arange(nrows), diag_cols] = -1
        block_counts: dict[int, np.ndarray] = {}
        for u in np.unique(codes):
            u = int(u)
            if u < 0:
                continue
            mask = codes == u
            per_row = mask.sum(axis=1)
            block_counts[u] = per_row
            self.pairs[u] = self.pairs.get(u, 0) + int(per_row.sum())
            if values is not None:
                seg = values[mask]
                lo, hi = int(seg.min()), int(seg.max())
                self.lo[u] = min(self.lo.get(u, lo), lo)
                self.hi[u] = max(self.hi.get(u, hi), hi)
        self.blocks.append((nrows, block_counts))

    def degrees(self, code: int) -> tuple[int, int]:
        lo = hi = None
        for nrows, counts in self.blocks:
            per_row = counts.get(code)
            a, b = (0, 0) if per_row is None else (int(per_row.min()), int(per_row.max()))
            lo = a if lo is None else min(lo, a)
            hi = b if hi is None else max(hi, b)
        return lo, hi

    def codes(self) -> list[int]:
        return sorted(self.pairs, key=_sort_code)


def nnt_decompose(g: IncidenceGraph, guard: int = DENSE_GUARD, strict: bool = True) -> DecompositionReport:
    """Exact ``N N^T`` grouped by pair class.

    Above ``guard`` entries only a deterministic subset of rows is examined.
    With ``strict`` a non-constant class raises :class:`ConstancyError`.
    """
    q, n, k, h = g.q, g.n, g.k, g.h
    m = g.size_a
    if g.size_b >= 1 << 24:
        raise SizeGuardError("part B too large for exact float32 products")
    rows, sampled = _row_plan(m, guard)
    clf = _PairClassifier(g.a_bases, q)
    nf = g.N.astype(np.float32)
    stats = _ClassStats(m)
    diag_vals = []
    row_sums = []
    step = _block_size(m, k, n)
    for s in range(0, len(rows), step):
        blk = rows[s:s + step]
        nnt = np.rint(nf[blk] @ nf.T).astype(np.int64)
        diag_vals.append(nnt[np.arange(len(blk)), blk])
        row_sums.append(nnt.sum(axis=1))
        stats.add(clf.codes(blk), nnt, blk)
    diag = np.concatenate(diag_vals)
    rsum = np.concatenate(row_sums)
    records = []
    for code in stats.codes():
        pc = PairClass.from_code(code)
        lo, hi = stats.lo[code], stats.hi[code]
        dmin, dmax = stats.degrees(code)
        nondeg = pc.sum_type.nondegenerate
        records.append(
            ClassRecord(
                pair_class=pc,
                pairs=stats.pairs[code],
                b=lo if lo == hi else None,
                b_min=lo,
                b_max=hi,
                degree_min=dmin,
                degree_max=dmax,
                formula_b=_formula_b(q, n, h, pc.t) if nondeg else None,
                formula_degree=_formula_degree(q, n, k, pc.t) if nondeg else None,
            )
        )
    report = DecompositionReport(
        q=q, n=n, k=k, h=h,
        a_exact=int(diag[0]),
        diagonal_constant=bool((diag == diag[0]).all()),
        row_sum=int(rsum[0]),
        row_sum_constant=bool((rsum == rsum[0]).all()),
        trace=int(diag.sum()) if not sampled else int(diag[0]) * m,
        rows_examined=len(rows),
        sampled=sampled,
        classes=records,
    )
    if strict and not report.all_constant:
        bad = [c.pair_class.label for c in records if not c.constant]
        raise ConstancyError(f"N N^T not constant on pair classes {bad}")
    return report


@dataclass
class EtProfileRecord:
    pair_class: PairClass
    degree_min: int
    degree_max: int
    formula: Optional[Fraction]

    def to_dict(self) -> dict:
        st = self.pair_class.sum_type
        return {
            "t": self.pair_class.t,
            "sum_type": st.label,
            "nondegenerate": st.nondegenerate,
            "degree_min": self.degree_min,
            "degree_max": self.degree_max,
            "constant": self.degree_min == self.degree_max,
            "formula": _frac(self.formula),
            "ratio": float(self.degree_max / self.formula) if self.formula else None,
        }


@dataclass
class EtProfile:
    q: int
    n: int
    k: int
    records: list[EtProfileRecord]
    rows_examined: int
    sampled: bool

    @property
    def constant(self) -> bool:
        return all(r.degree_min == r.degree_max for r in self.records)

    def max_at_nondegenerate(self) -> dict[int, bool]:
        """Per t, whether the largest class degree belongs to a nondegenerate type."""
        out = {}
        for t in sorted({r.pair_class.t for r in self.records}):
            recs = [r for r in self.records if r.pair_class.t == t]
            top = max(r.degree_max for r in recs)
            out[t] = any(r.degree_max == top and r.pair_class.sum_type.nondegenerate for r in recs)
        return out

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "n": self.n,
            "k": self.k,
            "rows_examined": self.rows_examined,
            "sampled": self.sampled,
            "constant": self.constant,
            "max_at_nondegenerate": {str(t): v for t, v in self.max_at_nondegenerate().items()},
            "classes": [r.to_dict() for r in self.records],
        }


def et_degree_profile(q: int, n: int, k: int, guard: int = DENSE_GUARD,
                      bases: Optional[np.ndarray] = None) -> EtProfile:
    """Degrees of the graphs joining dot_k-subspaces by the class of their sum."""
    if bases is None:
        bases, _ = typed_bases(q, n, k, dot_type(k))
    m = bases.shape[0]
    rows, sampled = _row_plan(m, guard)
    clf = _PairClassifier(bases, q)
    stats = _ClassStats(m)
    step = _block_size(m, k, n)
    for s in range(0, len(rows), step):
        blk = rows[s:s + step]
        stats.add(clf.codes(blk), None, blk)
    records = []
    for code in stats.codes():
        pc = PairClass.from_code(code)
        dmin, dmax = stats.degrees(code)
        formula = _formula_degree(q, n, k, pc.t) if pc.sum_type.nondegenerate else None
        records.append(EtProfileRecord(pc, dmin, dmax, formula))
    return EtProfile(q, n, k, records, len(rows), sampled)


@dataclass
class ErrorExponent:
    exponent: Fraction
    value: float
    main_exponent: int
    warnings: list[str]


def formula_error_exponent(q: int, n: int, k: int, h: int) -> ErrorExponent:
    """Exponent ``(k(2h-n-2k+4) + h(n-h-1) - 2) / 2`` of the incidence error term."""
    msgs = []
    if not k > 1:
        msgs.append(f"hypothesis k > 1 violated (k={k})")
    if not h >= 4 * k - 4:
        msgs.append(f"hypothesis h >= 4k-4 violated (h={h}, 4k-4={4 * k - 4})")
    if not k < h:
        msgs.append(f"hypothesis k < h violated (k={k}, h={h})")
    for msg in msgs:
        warnings.warn(msg, stacklevel=2)
    e = Fraction(k * (2 * h - n - 2 * k + 4) + h * (n - h - 1) - 2, 2)
    return ErrorExponent(e, float(q) ** float(e), k * (n - h), msgs)
