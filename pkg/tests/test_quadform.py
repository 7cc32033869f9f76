import itertools
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dotinc.field import SquareClass, canonical_nonsquare, rank, rref, square_class
from dotinc.quadform import (
    IsoType,
    batch_classify_grams,
    diagonal_basis,
    diagonalize_symmetric,
    fast_classify_grams,
    gram,
    is_dot,
    isometry_type,
    orthonormal_basis,
)


def value_distribution(diag_or_basis, p, from_basis):
    """Counter of Q-values over every vector of the space, by enumeration."""
    if from_basis:
        b = np.asarray(diag_or_basis, dtype=np.int64)
        out = Counter()
        for c in itertools.product(range(p), repeat=b.shape[0]):
            v = (np.array(c) @ b) % p
            out[int(v @ v % p)] += 1
        return out
    out = Counter()
    for c in itertools.product(range(p), repeat=len(diag_or_basis)):
        out[sum(d * x * x for d, x in zip(diag_or_basis, c)) % p] += 1
    return out


def model_types(dim, p):
    lam = canonical_nonsquare(p)
    yield IsoType(dim, 0, None), [0] * dim
    for r in range(1, dim + 1):
        zeros = [0] * (dim - r)
        yield IsoType(dim, r, SquareClass.SQUARE), [1] * r + zeros
        yield IsoType(dim, r, SquareClass.NONSQUARE), [1] * (r - 1) + [lam] + zeros


def oracle_type(basis, p):
    """Isometry type as the unique model with the same value distribution."""
    dist = value_distribution(basis, p, True)
    hits = [t for t, d in model_types(len(basis), p) if value_distribution(d, p, False) == dist]
    assert len(hits) == 1, hits
    return hits[0]


@st.composite
def independent_rows(draw, primes=(3, 5), max_k=3, max_n=4):
    p = draw(st.sampled_from(primes))
    n = draw(st.integers(1, max_n))
    k = draw(st.integers(1, min(max_k, n)))
    entries = draw(st.lists(st.integers(0, p - 1), min_size=k * n, max_size=k * n))
    m = np.array(entries, dtype=np.int64).reshape(k, n)
    r, rk, _ = rref(m, p)
    if rk == 0:
        r = np.eye(1, n, dtype=np.int64)
    return p, r


class TestIsoType:
    def test_validation(self):
        with pytest.raises(ValueError):
            IsoType(2, 3, SquareClass.SQUARE)
        with pytest.raises(ValueError):
            IsoType(2, 0, SquareClass.SQUARE)
        with pytest.raises(ValueError):
            IsoType(2, 1, None)
        with pytest.raises(ValueError):
            IsoType(2, 1, SquareClass.ZERO)

    def test_labels_and_flags(self):
        assert IsoType(2, 2, SquareClass.SQUARE).label == "dot_2"
        assert IsoType(4, 3, SquareClass.NONSQUARE).label == "ldot_3+0^1"
        assert IsoType(2, 0, None).label == "0^2"
        assert IsoType(3, 3, SquareClass.SQUARE).is_dot
        assert IsoType(3, 3, SquareClass.NONSQUARE).is_lambda_dot
        assert not IsoType(3, 2, SquareClass.SQUARE).is_dot

    def test_ordering(self):
        types = sorted(t for t, _ in model_types(3, 5))
        assert [t.label for t in types] == [
            "dot_3", "ldot_3", "dot_2+0^1", "ldot_2+0^1", "dot_1+0^2", "ldot_1+0^2", "0^3",
        ]

    def test_code_round_trip(self):
        for t, _ in model_types(3, 3):
            assert IsoType.from_code(t.dim, t.rank, t.disc_code) == t


class TestGram:
    def test_examples(self):
        assert gram(np.eye(2, dtype=int), 3).tolist() == [[1, 0], [0, 1]]
        assert gram([[1, 1]], 3).tolist() == [[2]]
        assert gram([[1, 1, 1, 0]], 3).tolist() == [[0]]


class TestDiagonalize:
    def test_identity(self):
        assert diagonalize_symmetric(np.eye(4, dtype=int), 5) == [1, 1, 1, 1]

    def test_zero(self):
        assert diagonalize_symmetric([[0]], 3) == [0]

    def test_hyperbolic_plane(self):
        d = diagonalize_symmetric([[0, 1], [1, 0]], 3)
        assert sorted(square_class(x, 3).value for x in d) == ["Nonsquare", "Square"]

    @settings(max_examples=150, deadline=None)
    @given(st.sampled_from([3, 5, 7]), st.integers(1, 4), st.integers(0, 2**32 - 1))
    def test_invariants_of_congruence(self, p, k, seed):
        a = np.random.default_rng(seed).integers(0, p, size=(k, k))
        g = (a + a.T) % p
        d = diagonalize_symmetric(g, p)
        assert sum(1 for x in d if x) == rank(g, p)
        if rank(g, p) == k:
            det = round(np.linalg.det(g.astype(float)))
            prod = 1
            for x in d:
                prod *= x
            assert square_class(det, p) is square_class(prod, p)


class TestIsometryType:
    def test_examples(self):
        assert isometry_type(np.eye(2, dtype=int), 3) == IsoType(2, 2, SquareClass.SQUARE)
        assert isometry_type([[1, 1]], 3) == IsoType(1, 1, SquareClass.NONSQUARE)
        assert isometry_type([[1, 1, 1, 0]], 3) == IsoType(1, 0, None)

    def test_is_dot_examples(self):
        assert is_dot(np.eye(2, 5, dtype=int), 7)
        assert not is_dot([[1, 1]], 3)
        assert not is_dot([[1, 1, 1, 0]], 3)

    @settings(max_examples=200, deadline=None)
    @given(independent_rows())
    def test_matches_value_distribution_oracle(self, pr):
        p, basis = pr
        assert isometry_type(basis, p) == oracle_type(basis, p)

    @settings(max_examples=60, deadline=None)
    @given(independent_rows(primes=(7,), max_k=2, max_n=4))
    def test_matches_oracle_q7(self, pr):
        p, basis = pr
        assert isometry_type(basis, p) == oracle_type(basis, p)

    @settings(max_examples=100, deadline=None)
    @given(independent_rows(), st.integers(0, 2**32 - 1))
    def test_basis_independent(self, pr, seed):
        p, basis = pr
        k = basis.shape[0]
        rng = np.random.default_rng(seed)
        while True:
            t = rng.integers(0, p, size=(k, k))
            if rank(t, p) == k:
                break
        assert isometry_type(basis, p) == isometry_type(t @ basis, p)


class TestOrthonormal:
    @settings(max_examples=120, deadline=None)
    @given(independent_rows(primes=(3, 5, 7)))
    def test_diagonal_basis(self, pr):
        p, basis = pr
        vecs, diag = diagonal_basis(basis, p)
        g = gram(vecs, p)
        assert np.array_equal(g, np.diag(diag) % p)
        assert np.array_equal(rref(vecs, p)[0], rref(basis, p)[0])

    @settings(max_examples=120, deadline=None)
    @given(independent_rows(primes=(3, 5, 7)))
    def test_orthonormal_for_dot_subspaces(self, pr):
        p, basis = pr
        if not is_dot(basis, p):
            with pytest.raises(ValueError):
                orthonormal_basis(basis, p)
            return
        w = orthonormal_basis(basis, p)
        assert np.array_equal(gram(w, p), np.eye(len(basis), dtype=int))
        assert np.array_equal(rref(w, p)[0], rref(basis, p)[0])

    def test_pair_of_nonsquares(self):
        # span{(1,1,0,0), (0,0,1,1)} over F_3 has diagonal (2, 2): a dot_2 plane
        basis = np.array([[1, 1, 0, 0], [0, 0, 1, 1]])
        w = orthonormal_basis(basis, 3)
        assert gram(w, 3).tolist() == [[1, 0], [0, 1]]


class TestBatchedClassification:
    @pytest.mark.parametrize("p,k", [(3, 2), (3, 3), (5, 2)])
    def test_batch_matches_scalar(self, p, k):
        rng = np.random.default_rng(p * 10 + k)
        a = rng.integers(0, p, size=(400, k, k))
        g = (a + a.transpose(0, 2, 1)) % p
        rk, disc = batch_classify_grams(g, p)
        frk, fdisc = fast_classify_grams(g, p)
        assert np.array_equal(rk, frk) and np.array_equal(disc, fdisc)
        for i in range(len(g)):
            d = diagonalize_symmetric(g[i], p)
            nz = [x for x in d if x]
            assert rk[i] == len(nz)
            if nz:
                prod = int(np.prod(nz)) % p
                want = 1 if square_class(prod, p) is SquareClass.SQUARE else -1
                assert disc[i] == want
            else:
                assert disc[i] == 0

    def test_empty_gram(self):
        rk, disc = batch_classify_grams(np.zeros((3, 0, 0), dtype=int), 5)
        assert rk.tolist() == [0, 0, 0]
