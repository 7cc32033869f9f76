import json
import warnings
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from dotinc.incidence import (
    ConstancyError,
    NotBiregularError,
    PairClass,
    build_graph,
    degree_check,
    dot_type,
    et_degree_profile,
    formula_error_exponent,
    graph_from_biadjacency,
    nnt_decompose,
    pair_classes,
)
from dotinc.quadform import isometry_type
from dotinc.subspace import Subspace, census, contains, enumerate_subspaces, subspace_sum


def dot_subspaces(q, n, d):
    want = dot_type(d)
    return [s for s in enumerate_subspaces(q, n, d) if isometry_type(s.matrix, q) == want]


def standard(q, n, k):
    return Subspace.from_rows(np.eye(k, n, dtype=int), q)


def class_label(q, a_rows, b_rows):
    s = subspace_sum(Subspace.from_rows(a_rows, q), Subspace.from_rows(b_rows, q))
    return f"t={s.k}:{isometry_type(s.matrix, q).label}"


class TestGraph:
    def test_brute_force_biadjacency(self):
        q, n, k, h = 3, 4, 1, 2
        g = build_graph(q, n, k, h)
        ks = dot_subspaces(q, n, k)
        hs = dot_subspaces(q, n, h)
        assert (g.size_a, g.size_b) == (len(ks), len(hs))
        want = np.array([[contains(H, K) for H in hs] for K in ks])
        assert np.array_equal(g.N, want)

    def test_preset_is_biregular(self, graphs):
        g = graphs(3, 5, 2, 4)
        assert (g.size_a, g.size_b) == (census(3, 5, 2).dot, census(3, 5, 4).dot)
        assert set(g.N.sum(axis=1)) == {g.left_degree}
        assert set(g.N.sum(axis=0)) == {g.right_degree}

    def test_left_degree_by_enumeration(self, graphs):
        g = graphs(3, 5, 2, 4)
        k0 = standard(3, 5, 2)
        count = sum(1 for H in dot_subspaces(3, 5, 4) if contains(H, k0))
        assert count == g.left_degree == 3

    def test_sampled_entries_match_containment(self, graphs):
        g = graphs(3, 5, 2, 4)
        rng = np.random.default_rng(7)
        for i, j in zip(rng.integers(0, g.size_a, 300), rng.integers(0, g.size_b, 300)):
            K = Subspace.from_rows(g.a_bases[i], 3)
            H = Subspace.from_rows(g.b_bases[j], 3)
            assert g.N[i, j] == contains(H, K)

    def test_vertex_ids_are_enumeration_indices(self, graphs):
        g = graphs(3, 5, 2, 4)
        assert np.all(np.diff(g.a_index) > 0) and np.all(np.diff(g.b_index) > 0)

    def test_invalid_dimensions(self):
        with pytest.raises(ValueError):
            build_graph(3, 5, 4, 2)
        with pytest.raises(ValueError):
            build_graph(3, 5, 2, 2)
        with pytest.raises(ValueError):
            build_graph(9, 5, 2, 4)

    def test_complete_toy(self):
        g = graph_from_biadjacency(np.ones((3, 4)))
        assert degree_check_left(g) == 4 == g.size_b

    def test_not_biregular_toy(self):
        with pytest.raises(NotBiregularError):
            graph_from_biadjacency(np.array([[1, 1], [0, 1]]))

    def test_export(self, graphs, tmp_path):
        g = graphs(3, 5, 2, 4)
        path = tmp_path / "edges.txt"
        g.export_edges(path)
        lines = path.read_text().splitlines()
        header = json.loads(lines[0])
        assert header["size_A"] == 270 and header["left_degree"] == 3
        assert len(lines) - 1 == g.edges == 810
        i, j = map(int, lines[1].split())
        assert g.N[i, j]


def degree_check_left(g):
    return int(g.N.sum(axis=1)[0])


class TestDegreeCheck:
    def test_formula_values(self, graphs):
        dc = degree_check(graphs(3, 5, 2, 4))
        assert dc.formula == Fraction(9, 2)
        assert (dc.left_degree, dc.right_degree) == (3, 18)
        assert dc.ratio == pytest.approx(3 / 4.5)

    def test_q5_formula(self, graphs):
        dc = degree_check(graphs(5, 5, 2, 4))
        assert dc.formula == Fraction(25, 2)
        assert dc.left_degree * graphs(5, 5, 2, 4).size_a == dc.right_degree * graphs(5, 5, 2, 4).size_b


class TestPairClasses:
    @pytest.mark.parametrize("q,n,k", [(3, 4, 2), (3, 5, 2), (5, 4, 2), (3, 5, 3)])
    def test_against_explicit_sums(self, q, n, k):
        from dotinc.subspace import typed_bases

        bases, _ = typed_bases(q, n, k, dot_type(k))
        rows = list(range(0, len(bases), max(1, len(bases) // 6)))[:6]
        codes = pair_classes(bases, q, rows=rows)
        for r_i, r in enumerate(rows):
            for j in range(0, len(bases), max(1, len(bases) // 60)):
                pc = PairClass.from_code(int(codes[r_i, j]))
                if j == r:
                    assert pc.t == k
                    continue
                assert pc.label == class_label(q, bases[r], bases[j])

    def test_symmetric(self):
        from dotinc.subspace import typed_bases

        bases, _ = typed_bases(3, 4, 2, dot_type(2))
        codes = pair_classes(bases, 3)
        assert np.array_equal(codes, codes.T)


class TestDecomposition:
    def test_structure(self, graphs, decompositions):
        g = graphs(3, 5, 2, 4)
        dec = decompositions(3, 5, 2, 4)
        assert dec.a_exact == g.left_degree and dec.diagonal_constant
        assert dec.row_sum == g.left_degree * g.right_degree
        assert dec.trace == g.left_degree * g.size_a
        assert dec.all_constant and dec.accounting_holds

    def test_exact_product(self, graphs, decompositions):
        g = graphs(3, 5, 2, 4)
        dec = decompositions(3, 5, 2, 4)
        nnt = g.N.astype(np.int64) @ g.N.T.astype(np.int64)
        codes = pair_classes(g.a_bases, 3)
        for rec in dec.classes:
            mask = codes == rec.pair_class.code
            np.fill_diagonal(mask, False)
            vals = set(np.unique(nnt[mask]).tolist())
            assert vals == {rec.b}
            assert mask.sum() == rec.pairs

    def test_b_by_enumeration(self, graphs, decompositions):
        g = graphs(3, 5, 2, 4)
        dec = decompositions(3, 5, 2, 4)
        hs = dot_subspaces(3, 5, 4)
        codes = pair_classes(g.a_bases, 3, rows=[0])[0]
        k0 = Subspace.from_rows(g.a_bases[0], 3)
        for rec in dec.classes:
            j = int(np.nonzero(codes == rec.pair_class.code)[0][-1])
            s = subspace_sum(k0, Subspace.from_rows(g.a_bases[j], 3))
            assert sum(1 for H in hs if contains(H, s)) == rec.b

    def test_formula_values(self, decompositions):
        dec = decompositions(3, 5, 2, 4)
        by_label = {c.pair_class.label: c for c in dec.classes}
        assert by_label["t=4:dot_4"].formula_b == Fraction(1, 2)
        assert by_label["t=3:dot_3"].formula_b == Fraction(3, 2)
        assert by_label["t=3:dot_2+0^1"].formula_b is None

    def test_dot_lambda_discrepancy_reported(self, decompositions):
        rows = {d["t"]: d for d in decompositions(3, 5, 2, 4).dot_vs_lambda()}
        assert (rows[4]["b_dot"], rows[4]["b_ldot"], rows[4]["equal"]) == (1, 0, False)

    def test_sampled_rows_above_guard(self, graphs):
        g = graphs(3, 5, 2, 4)
        dec = nnt_decompose(g, guard=1000)
        assert dec.sampled and dec.rows_examined < g.size_a
        assert dec.all_constant and dec.accounting_holds

    def test_constancy_violation_detected(self, graphs):
        g = graphs(3, 5, 2, 4)
        broken = build_graph(3, 5, 2, 4)
        broken.N = g.N.copy()
        # swap two columns' entries in one row: keeps that row's degree, breaks class constancy
        i = 0
        ones = np.nonzero(broken.N[i])[0]
        zeros = np.nonzero(~broken.N[i])[0]
        broken.N[i, ones[0]] = False
        broken.N[i, zeros[0]] = True
        with pytest.raises(ConstancyError):
            nnt_decompose(broken, strict=True)


class TestEtProfile:
    def test_constant_and_formula(self):
        prof = et_degree_profile(3, 5, 2)
        assert prof.constant
        by_label = {r.pair_class.label: r for r in prof.records}
        assert by_label["t=4:dot_4"].formula == Fraction(9, 2)

    def test_degrees_by_enumeration(self):
        prof = et_degree_profile(3, 5, 2)
        k0 = standard(3, 5, 2)
        counts = Counter()
        for s in dot_subspaces(3, 5, 2):
            if s != k0:
                t = subspace_sum(k0, s)
                counts[f"t={t.k}:{isometry_type(t.matrix, 3).label}"] += 1
        assert counts == {r.pair_class.label: r.degree_max for r in prof.records}
        assert sum(counts.values()) == census(3, 5, 2).dot - 1


class TestErrorExponent:
    def test_examples(self):
        e = formula_error_exponent(3, 5, 2, 4)
        assert (e.exponent, e.value, e.main_exponent, e.warnings) == (2, 9.0, 2, [])
        e = formula_error_exponent(3, 6, 2, 4)
        assert (e.exponent, e.value) == (3, 27.0)

    def test_hypothesis_warning(self):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            e = formula_error_exponent(3, 7, 3, 5)
        assert e.warnings and caught
