import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from trisqueeze.complex_core import (
    DomainMismatchError,
    MalformedSimplexError,
    NonSimplicialMapError,
    NotInComplexError,
    build_complex,
    build_simplicial_map,
    closed_star,
    compose,
    faces,
    identity_map,
    is_triangular,
    standard_simplex,
)
from trisqueeze.retraction import build_r1, build_rj
from trisqueeze.subdivision import CarrierMap, iterate_subdivide

from oracles import all_faces, sampled_triangular


@st.composite
def complexes(draw, max_vertex=5, max_simplices=12):
    while True:
        n_max = draw(st.integers(1, 4))
        tops = draw(st.lists(
            st.lists(st.integers(0, max_vertex - 1), min_size=1, max_size=3, unique=True),
            min_size=1, max_size=n_max))
        closure = all_faces(tops)
        if len(closure) <= max_simplices:
            return build_complex(tops)


@st.composite
def map_pairs(draw):
    dom = draw(complexes())
    cod = draw(complexes())
    found = []
    for _ in range(200):
        images = {v: draw(st.sampled_from(cod.vertices.tolist())) for v in dom.vertices.tolist()}
        try:
            found.append(build_simplicial_map(images, dom, cod))
        except NonSimplicialMapError:
            continue
        if len(found) == 2:
            return found
    # constant maps are always simplicial
    c = cod.vertices.tolist()[0]
    const = build_simplicial_map({v: c for v in dom.vertices.tolist()}, dom, cod)
    return (found + [const, const])[:2]


class TestBuildComplex:
    def test_triangle_closure(self):
        K = build_complex([(0, 1, 2)])
        assert K.f_vector == (3, 3, 1)
        assert K.dim == 2
        assert len(K) == 7

    def test_single_vertex(self):
        K = build_complex([(0,)])
        assert K.f_vector == (1,)
        assert K.dim == 0

    def test_triangle_boundary(self):
        K = build_complex([(0, 1), (1, 2), (2, 0)])
        assert K.f_vector == (3, 3)
        assert K.dim == 1
        assert (0, 1, 2) not in K

    def test_duplicate_vertex_rejected(self):
        with pytest.raises(MalformedSimplexError):
            build_complex([(0, 0, 1)])

    def test_negative_vertex_rejected(self):
        with pytest.raises(MalformedSimplexError):
            build_complex([(-1, 0)])

    def test_simplices_sorted(self):
        K = build_complex([(2, 0, 1)])
        assert all(list(s) == sorted(s) for s in K)

    @given(complexes())
    def test_closure_idempotent(self, K):
        again = build_complex(K.maximal_simplices())
        assert set(again) == set(K)
        again2 = build_complex(list(K))
        assert set(again2) == set(K)

    @given(complexes())
    def test_face_closed(self, K):
        simplices = set(K)
        for s in simplices:
            for f in faces(s):
                assert f in simplices

    @given(complexes())
    def test_matches_brute_closure(self, K):
        assert set(K) == all_faces(K.maximal_simplices())


class TestFaces:
    def test_triangle(self):
        assert set(faces((0, 1, 2))) == {(0,), (1,), (2,), (0, 1), (0, 2), (1, 2)}

    def test_vertex(self):
        assert faces((0,)) == []

    def test_edge(self):
        assert set(faces((0, 1))) == {(0,), (1,)}


class TestClosedStar:
    def test_path_middle_vertex(self):
        X = build_complex([(0, 1), (1, 2)])
        assert set(closed_star((1,), X)) == set(X)

    def test_top_simplex(self):
        X = standard_simplex(2)
        assert set(closed_star((0, 1, 2), X)) == set(X)

    def test_disconnected(self):
        X = build_complex([(0, 1), (2, 3)])
        assert set(closed_star((0,), X)) == {(0,), (1,), (0, 1)}

    def test_not_in_complex(self):
        with pytest.raises(NotInComplexError):
            closed_star((0, 5), standard_simplex(2))


class TestSimplicialMap:
    def test_identity(self):
        X = standard_simplex(2)
        f = build_simplicial_map({0: 0, 1: 1, 2: 2}, X, X)
        assert f.image((0, 1, 2)) == (0, 1, 2)

    def test_collapse(self):
        f = build_simplicial_map({0: 0, 1: 0, 2: 1}, standard_simplex(2), standard_simplex(1))
        assert f.image((0, 1, 2)) == (0, 1)
        assert f.image((0, 1)) == (0,)

    def test_inclusion_of_vertices(self):
        pts = build_complex([(0,), (1,)])
        f = build_simplicial_map({0: 0, 1: 1}, pts, standard_simplex(1))
        assert f.image((1,)) == (1,)

    def test_non_simplicial_witness(self):
        Y = build_complex([(0, 1), (1, 2), (0, 2)])
        with pytest.raises(NonSimplicialMapError) as err:
            build_simplicial_map({0: 0, 1: 1, 2: 2}, standard_simplex(2), Y)
        assert err.value.witness == (0, 1, 2)

    def test_missing_vertex(self):
        with pytest.raises(Exception):
            build_simplicial_map({0: 0}, standard_simplex(1), standard_simplex(1))


class TestCompose:
    def test_identity_left(self):
        f = build_simplicial_map({0: 0, 1: 0, 2: 1}, standard_simplex(2), standard_simplex(1))
        assert compose(identity_map(standard_simplex(1)), f) == f

    def test_collapse_after_inclusion(self):
        edge = build_complex([(0, 1)])
        incl = build_simplicial_map({0: 0, 1: 2}, edge, standard_simplex(2))
        coll = build_simplicial_map({0: 0, 1: 0, 2: 1}, standard_simplex(2), standard_simplex(1))
        h = compose(coll, incl)
        assert h.as_dict() == {0: 0, 1: 1}

    def test_r1_r2_on_twice_subdivided_edge(self):
        X = standard_simplex(1)
        r = compose(build_r1(X), build_rj(X, 2))
        rec = iterate_subdivide(X, 2)
        # hand composition of the assignments
        r1 = build_r1(X).as_dict()
        r2 = build_rj(X, 2).as_dict()
        assert r.as_dict() == {v: r1[r2[v]] for v in r2}
        for s in rec.complex:
            assert set(r.image(s)) <= set(rec.carrier(s, 0))

    def test_mismatch(self):
        f = identity_map(standard_simplex(1))
        g = identity_map(standard_simplex(2))
        with pytest.raises(DomainMismatchError):
            compose(f, g)

    @given(map_pairs())
    def test_closure(self, pair):
        f, _ = pair
        cod = f.codomain_complex
        images = {v: v for v in cod.vertices.tolist()}
        h = compose(build_simplicial_map(images, cod, cod), f)
        for s in f.domain_complex:
            assert h.image(s) in cod


class TestIsTriangular:
    def test_self_control(self):
        f = build_simplicial_map({0: 0, 1: 0, 2: 1}, standard_simplex(2), standard_simplex(1))
        assert is_triangular(f, f) == (True, None)

    def test_r1_over_carrier(self):
        X = standard_simplex(2)
        rec = iterate_subdivide(X, 1)
        r1 = build_r1(X)
        assert is_triangular(r1, CarrierMap(rec)) == (True, None)
        # brute force over all 6 + 12 + 7 simplices
        assert rec.complex.f_vector == (7, 12, 6)
        for s in rec.complex:
            assert set(r1.image(s)) <= set(rec.carrier(s, 0))

    def test_counterexample_with_witness(self):
        X = standard_simplex(1)
        rec = iterate_subdivide(X, 1)
        b = rec.barycentre_id((0, 1))
        # send the vertex 0 to 1: the vertex simplex (0) is not carried correctly
        F = build_simplicial_map({0: 1, 1: 1, b: 0}, rec, X)
        ok, witness = is_triangular(F, CarrierMap(rec))
        assert not ok
        assert witness == (0,)

    def test_domain_mismatch(self):
        f = identity_map(standard_simplex(1))
        g = identity_map(standard_simplex(2))
        with pytest.raises(DomainMismatchError):
            is_triangular(f, g)

    @given(map_pairs())
    def test_agrees_with_sampling(self, pair):
        F, P = pair
        rng = np.random.default_rng(0)
        assert is_triangular(F, P)[0] == sampled_triangular(F, P, rng)

    @given(map_pairs())
    def test_witness_is_violation(self, pair):
        F, P = pair
        ok, w = is_triangular(F, P)
        if not ok:
            assert not set(F.image(w)) <= set(P.image(w))
