import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from trisqueeze.complex_core import (
    NotInComplexError,
    build_complex,
    build_simplicial_map,
    identity_map,
    standard_simplex,
)
from trisqueeze.subdivision import (
    PointInComplex,
    ResourceBudgetError,
    barycentric_subdivide,
    dual_cell,
    evaluate,
    iterate_subdivide,
    locate,
    locate_point,
    subdivide_map,
    to_base,
)

from oracles import all_faces, flags, sd_counts

SMALL = [
    [(0, 1)],
    [(0, 1, 2)],
    [(0, 1, 2, 3)],
    [(0, 1), (1, 2), (0, 2), (2, 3)],
    [(0, 1, 2), (1, 2, 3), (3, 4)],
    [(0,), (1, 2)],
]


class TestCounts:
    def test_edge(self):
        assert barycentric_subdivide(standard_simplex(1)).complex.f_vector == (3, 2)

    def test_triangle(self):
        assert barycentric_subdivide(standard_simplex(2)).complex.f_vector == (7, 12, 6)

    def test_twice_subdivided_edge(self):
        assert iterate_subdivide(standard_simplex(1), 2).complex.f_vector == (5, 4)

    def test_edge_three_times(self):
        assert iterate_subdivide(standard_simplex(1), 3).complex.f_vector == (9, 8)

    def test_triangle_twice(self):
        assert iterate_subdivide(standard_simplex(2), 2).complex.f_vector[2] == 36

    def test_level_zero(self):
        X = standard_simplex(2)
        rec = iterate_subdivide(X, 0)
        assert rec.complex == X
        assert all(rec.carrier(s, 0) == s for s in X)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_top_count_factorial(self, n):
        import math
        assert barycentric_subdivide(standard_simplex(n)).complex.f_vector[-1] == math.factorial(n + 1)

    @pytest.mark.parametrize("tops", SMALL)
    def test_flag_bijection(self, tops):
        assert barycentric_subdivide(build_complex(tops)).complex.f_vector == sd_counts(tops)

    def test_budget(self):
        with pytest.raises(ResourceBudgetError):
            iterate_subdivide(standard_simplex(3), 3, budget=1000)


class TestFlags:
    @pytest.mark.parametrize("tops", SMALL)
    def test_simplices_are_flags(self, tops):
        rec = barycentric_subdivide(build_complex(tops))
        expected = {frozenset(c) for c in flags(all_faces(tops))}
        got = {frozenset(rec.flag_label(v) for v in s) for s in rec.complex}
        assert got == expected

    def test_labels_of_triangle(self):
        rec = barycentric_subdivide(standard_simplex(2))
        labels = {rec.flag_label(v) for v in rec.complex.vertices.tolist()}
        assert labels == all_faces([(0, 1, 2)])

    def test_deterministic_ids(self):
        a = iterate_subdivide(build_complex([(0, 1, 2)]), 2)
        b = iterate_subdivide(build_complex([(0, 1, 2)]), 2)
        assert [tuple(r) for r in a.complex.rows(2).tolist()] == [tuple(r) for r in b.complex.rows(2).tolist()]
        assert np.array_equal(a.positions, b.positions)


class TestCarrier:
    def test_barycentre(self):
        rec = barycentric_subdivide(standard_simplex(2))
        b = rec.barycentre_id((0, 1, 2))
        assert rec.carrier((b,), 0) == (0, 1, 2)

    def test_edge_from_vertex(self):
        rec = barycentric_subdivide(standard_simplex(2))
        e = (0, rec.barycentre_id((0, 1)))
        assert rec.carrier(e, 0) == (0, 1)

    def test_top_simplices(self):
        rec = iterate_subdivide(standard_simplex(2), 2)
        assert all(rec.carrier(s, 0) == (0, 1, 2) for s in rec.complex.maximal_simplices())

    def test_unknown(self):
        rec = barycentric_subdivide(standard_simplex(1))
        with pytest.raises(NotInComplexError):
            rec.carrier((0, 1), 0)

    @pytest.mark.parametrize("tops", SMALL[:5])
    def test_monotone(self, tops):
        rec = iterate_subdivide(build_complex(tops), 2)
        for s in rec.complex:
            c = set(rec.carrier(s, 0))
            for k in range(len(s)):
                face = s[:k] + s[k + 1:]
                if face:
                    assert set(rec.carrier(face, 0)) <= c

    @pytest.mark.parametrize("tops", SMALL[:5])
    def test_matches_positions(self, tops):
        # the carrier is the union of supports of the vertex positions
        rec = iterate_subdivide(build_complex(tops), 2)
        ids = rec.base.vertices
        for s in rec.complex:
            pos = rec.positions[rec.complex.index_of_vertex(list(s))]
            support = tuple(ids[(pos > 0).any(axis=0)].tolist())
            assert rec.carrier(s, 0) == support


class TestSubdivideMap:
    def test_identity(self):
        X = standard_simplex(2)
        f = subdivide_map(identity_map(X))
        assert f == identity_map(barycentric_subdivide(X))

    def test_collapse(self):
        X, Y = standard_simplex(2), standard_simplex(1)
        f = build_simplicial_map({0: 0, 1: 0, 2: 1}, X, Y)
        F = subdivide_map(f)
        sx, sy = as_sd(X), as_sd(Y)
        assert F(sx.barycentre_id((0, 1))) == 0
        assert F(sx.barycentre_id((0, 1, 2))) == sy.barycentre_id((0, 1))

    def test_inclusion(self):
        edge = build_complex([(0, 1)])
        incl = build_simplicial_map({0: 0, 1: 2}, edge, standard_simplex(2))
        F = subdivide_map(incl)
        se, st2 = as_sd(edge), as_sd(standard_simplex(2))
        assert F(se.barycentre_id((0, 1))) == st2.barycentre_id((0, 2))

    @pytest.mark.parametrize("images", [{0: 0, 1: 0, 2: 1}, {0: 1, 1: 0, 2: 1}, {0: 0, 1: 1, 2: 1}])
    def test_commutes_with_carriers(self, images):
        f = build_simplicial_map(images, standard_simplex(2), standard_simplex(1))
        F = subdivide_map(f)
        dom = as_sd(standard_simplex(2))
        cod = as_sd(standard_simplex(1))
        for s in dom.complex:
            assert cod.carrier(F.image(s), 0) == f.image(dom.carrier(s, 0))

    def test_same_pl_map_when_injective(self, rng):
        edge = build_complex([(0, 1)])
        incl = build_simplicial_map({0: 0, 1: 2}, edge, standard_simplex(2))
        pts = rng.dirichlet(np.ones(2), size=200)
        assert np.allclose(evaluate(subdivide_map(incl), pts), evaluate(incl, pts), atol=1e-12)

    def test_collapse_moves_points_within_image_simplex(self, rng):
        # Sd of a collapse is a different PL map, but agrees on the carrier level
        f = build_simplicial_map({0: 0, 1: 0, 2: 1}, standard_simplex(2), standard_simplex(1))
        centre = np.full((1, 3), 1 / 3)
        assert evaluate(f, centre)[0] == pytest.approx([2 / 3, 1 / 3])
        assert evaluate(subdivide_map(f), centre)[0] == pytest.approx([0.5, 0.5])
        pts = rng.dirichlet(np.ones(3), size=200)
        pts[:50, 2] = 0
        pts[:50] /= pts[:50].sum(axis=1, keepdims=True)
        a, b = evaluate(f, pts), evaluate(subdivide_map(f), pts)
        # on the face (0, 1) both maps are constant at vertex 0
        assert np.allclose(a[:50], [1, 0]) and np.allclose(b[:50], [1, 0])


def as_sd(X):
    return barycentric_subdivide(X)


class TestDualCell:
    def test_vertex_of_edge(self):
        X = standard_simplex(1)
        cell = dual_cell((0,), X)
        rec = cell.record
        b = rec.barycentre_id((0, 1))
        assert set(cell.cell) == {(0,), (b,), (0, b)}

    def test_top_simplex(self):
        X = standard_simplex(2)
        cell = dual_cell((0, 1, 2), X)
        assert set(cell.cell) == {(cell.record.barycentre_id((0, 1, 2)),)}

    def test_interior_vertex_of_path(self):
        X = build_complex([(0, 1), (1, 2)])
        cell = dual_cell((1,), X)
        rec = cell.record
        a, b = rec.barycentre_id((0, 1)), rec.barycentre_id((1, 2))
        assert set(cell.cell.maximal_simplices()) == {tuple(sorted((1, a))), tuple(sorted((1, b)))}

    def test_not_in_complex(self):
        with pytest.raises(NotInComplexError):
            dual_cell((0, 3), standard_simplex(2))

    @pytest.mark.parametrize("tops", SMALL[:5])
    def test_flag_filter(self, tops):
        X = build_complex(tops)
        for sigma in X:
            cell = dual_cell(sigma, X)
            expected = {frozenset(c) for c in flags(all_faces(tops)) if set(sigma) <= set(c[0])}
            got = {frozenset(cell.record.flag_label(v) for v in s) for s in cell.cell}
            assert got == expected
            # only the barycentre of sigma is carried by sigma
            carried = [s for s in cell.cell if cell.record.carrier(s, 0) == sigma]
            assert carried == [(cell.record.barycentre_id(sigma),)]

    @pytest.mark.parametrize("tops", SMALL[:5])
    def test_cover(self, tops):
        X = build_complex(tops)
        rec = barycentric_subdivide(X)
        covered = set()
        for sigma in X:
            covered |= set(dual_cell(sigma, X).cell.vertices.tolist())
        assert covered == set(rec.complex.vertices.tolist())


class TestLocate:
    def test_barycentre(self):
        rec = barycentric_subdivide(standard_simplex(2))
        p = locate_point(PointInComplex((0, 1, 2), (1 / 3, 1 / 3, 1 / 3)), rec)
        assert p.carrier == (rec.barycentre_id((0, 1, 2)),)

    def test_edge_midpoint(self):
        rec = barycentric_subdivide(standard_simplex(2))
        p = locate_point(PointInComplex((0, 1), (0.5, 0.5)), rec)
        assert p.carrier == (rec.barycentre_id((0, 1)),)

    def test_hand_location(self):
        rec = barycentric_subdivide(standard_simplex(2))
        p = locate_point(PointInComplex((0, 1, 2), (0.5, 0.3, 0.2)), rec)
        b01, b = rec.barycentre_id((0, 1)), rec.barycentre_id((0, 1, 2))
        assert p.carrier == tuple(sorted((0, b01, b)))
        # solve x = a e0 + c (e0+e1)/2 + d (e0+e1+e2)/3 by hand: d = 0.6, c = 0.2, a = 0.2
        coords = dict(zip(p.carrier, p.coords))
        assert coords[b] == pytest.approx(0.6)
        assert coords[b01] == pytest.approx(0.2)
        assert coords[0] == pytest.approx(0.2)
        assert sum(p.coords) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("tops,level", [([(0, 1, 2)], 2), ([(0, 1, 2, 3)], 2),
                                            ([(0, 1), (1, 2), (0, 2), (2, 3)], 3),
                                            ([(0, 1, 2), (1, 2, 3), (3, 4)], 2)])
    def test_round_trip(self, tops, level, rng):
        X = build_complex(tops)
        rec = iterate_subdivide(X, level)
        n = len(X.vertices)
        pts = []
        for _ in range(1000):
            s = X.maximal_simplices()[rng.integers(len(X.maximal_simplices()))]
            w = np.zeros(n)
            w[X.index_of_vertex(list(s))] = rng.dirichlet(np.ones(len(s)))
            pts.append(w)
        pts = np.array(pts)
        loc = locate(rec, pts)
        back = to_base(loc.points(), rec)
        assert np.abs(back - pts).max() < 1e-12

    @given(st.lists(st.floats(0.0, 1.0), min_size=3, max_size=3).filter(lambda w: sum(w) > 1e-3))
    def test_round_trip_property(self, w):
        rec = iterate_subdivide(standard_simplex(2), 2)
        x = np.array(w) / sum(w)
        p = locate(rec, x[None, :]).points()[0]
        assert np.abs(to_base(p, rec) - x).max() < 1e-12
        assert min(p.coords) > 0
