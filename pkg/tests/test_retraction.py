import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from trisqueeze.complex_core import build_complex, identity_map, is_triangular, standard_simplex
from trisqueeze.documents import load_document
from trisqueeze.geometry import comesh, distance_to_boundary
from trisqueeze.homotopy import CarrierConditionError
from trisqueeze.retraction import (
    DepthError,
    build_r1,
    build_retraction,
    build_rj,
    eval_homotopy,
    subdivision_depth,
    verify_retraction,
)
from trisqueeze.subdivision import CarrierMap, PointInComplex, iterate_subdivide


def boundary_distance_oracle(x, s):
    """Distance inside the standard simplex from x (supported on s) to the boundary of s.

    The nearest point of the facet opposite k is found by zeroing x_k and
    spreading it evenly over the rest, which gives x_k * sqrt(m / (m - 1)).
    """
    m = len(s)
    return min(x[k] for k in s) * math.sqrt(m / (m - 1))


class TestR1:
    def test_edge(self):
        assert build_r1(standard_simplex(1)).as_dict() == {0: 0, 1: 1, 2: 0}

    def test_triangle_face_condition(self):
        X = standard_simplex(2)
        rec = iterate_subdivide(X, 1)
        r1 = build_r1(X)
        assert is_triangular(r1, CarrierMap(rec)) == (True, None)
        assert r1.as_dict()[rec.barycentre_id((0, 1, 2))] == 0
        assert r1.as_dict()[rec.barycentre_id((1, 2))] == 1

    def test_custom_choice(self):
        r1 = build_r1(standard_simplex(1), vertex_choice=lambda s: s[-1])
        assert r1.as_dict() == {0: 0, 1: 1, 2: 1}

    def test_bad_choice(self):
        with pytest.raises(ValueError):
            build_r1(standard_simplex(1), vertex_choice=lambda s: 7)


class TestRj:
    def test_twice_subdivided_edge(self):
        # vertices 3, 4 are the midpoints of the half edges (0, 2) and (1, 2)
        assert build_rj(standard_simplex(1), 2).as_dict() == {0: 0, 1: 1, 2: 2, 3: 0, 4: 1}

    def test_triangle_edge_barycentre(self):
        X = standard_simplex(2)
        sd1 = iterate_subdivide(X, 1)
        sd2 = iterate_subdivide(X, 2)
        b01 = sd1.barycentre_id((0, 1))
        centre = sd1.barycentre_id((0, 1, 2))
        edge = tuple(sorted((b01, centre)))
        # the carrier flag (01) < (012) picks the face {b01}, and b01 is the nearer end
        assert build_rj(X, 2).as_dict()[sd2.barycentre_id(edge)] == b01

    def test_vertices_fixed(self):
        X = standard_simplex(2)
        r2 = build_rj(X, 2).as_dict()
        for v in iterate_subdivide(X, 1).complex.vertices.tolist():
            assert r2[v] == v

    @pytest.mark.parametrize("n,j", [(1, 2), (1, 3), (2, 2), (2, 3)])
    def test_face_condition(self, n, j):
        X = standard_simplex(n)
        rec = iterate_subdivide(X, j)
        assert is_triangular(build_rj(X, j), CarrierMap(rec, rec.parent)) == (True, None)

    @pytest.mark.parametrize("n,j", [(1, 2), (1, 3), (2, 2), (2, 3)])
    def test_boundary_monotone_at_vertices(self, n, j):
        X = standard_simplex(n)
        rec = iterate_subdivide(X, j)
        r = build_rj(X, j)
        pos = rec.positions
        parent_pos = dict(zip(rec.parent.complex.vertices.tolist(), rec.parent.positions))
        images = r.as_dict()
        top = tuple(range(n + 1))
        for v, x in zip(rec.complex.vertices.tolist(), pos):
            y = parent_pos[images[v]]
            assert boundary_distance_oracle(y, top) <= boundary_distance_oracle(x, top) + 1e-12

    def test_j_below_two(self):
        with pytest.raises(ValueError):
            build_rj(standard_simplex(1), 1)

    def test_deterministic(self):
        X = standard_simplex(2)
        assert build_rj(X, 3).as_dict() == build_rj(X, 3).as_dict()


class TestBoundaryDistance:
    @given(st.integers(2, 4), st.integers(0, 10_000))
    def test_matches_oracle(self, m, seed):
        rng = np.random.default_rng(seed)
        n = m - 1
        X = standard_simplex(n)
        rec = iterate_subdivide(X, 0)
        x = rng.dirichlet(np.ones(m), size=5)
        s = tuple(range(m))
        got = distance_to_boundary(x, s, rec)
        ref = [boundary_distance_oracle(p, s) for p in x]
        assert np.allclose(got, ref, atol=1e-12)


class TestDepth:
    def test_edge_example(self):
        assert subdivision_depth(standard_simplex(1), 0.2) == 2

    def test_small_epsilon(self):
        # Sd^1 mesh equals comesh exactly, which does not count as strict
        info = subdivision_depth(standard_simplex(1), 1e-12, info=True)
        assert info.depth == 2
        assert info.meshes[1] == pytest.approx(info.threshold)

    @pytest.mark.parametrize("eps", [0.0, -0.1, 0.75, 10.0])
    def test_out_of_range(self, eps):
        with pytest.raises(DepthError):
            subdivision_depth(standard_simplex(1), eps)

    def test_zero_dim(self):
        assert subdivision_depth(build_complex([(0,)]), 0.1) == 0

    @pytest.mark.parametrize("n", [1, 2])
    def test_depth_is_smallest(self, n):
        X = standard_simplex(n)
        eps = comesh(X) / 2
        info = subdivision_depth(X, eps, info=True)
        assert info.meshes[-1] < info.threshold
        assert all(m >= info.threshold - 1e-9 for m in info.meshes[:-1])
        assert info.depth <= info.bound + 1


class TestBundle:
    def test_endpoints(self, rng):
        X = standard_simplex(2)
        B = build_retraction(X, i=3)
        pts = rng.dirichlet(np.ones(3), size=200)
        assert np.abs(B.P.start(pts) - pts).max() < 1e-12
        r_vals = np.array([B.r(v) for v in B.top.complex.vertices.tolist()])
        vpos = B.top.positions
        end = B.P.end(vpos)
        assert np.abs(end - np.eye(3)[r_vals]).max() < 1e-12

    def test_junctions(self, rng):
        B = build_retraction(standard_simplex(2), i=3)
        pts = rng.dirichlet(np.ones(3), size=100)
        assert max(B.P.junction_gaps(pts)) < 1e-12

    def test_deterministic(self):
        a = build_retraction(standard_simplex(2), 0.1)
        b = build_retraction(standard_simplex(2), 0.1)
        assert a.depth == b.depth
        assert a.r.as_dict() == b.r.as_dict()

    def test_zero_dim(self):
        B = build_retraction(build_complex([(0,)]), 0.1)
        assert B.depth == 0
        assert B.r.as_dict() == {0: 0}
        assert verify_retraction(B).ok

    def test_depth_too_small(self):
        with pytest.raises(DepthError):
            build_retraction(standard_simplex(1), 0.2, i=1)

    def test_needs_depth_or_epsilon(self):
        with pytest.raises(DepthError):
            build_retraction(standard_simplex(1))

    def test_r_is_face_preserving(self):
        X = standard_simplex(2)
        B = build_retraction(X, i=3)
        assert is_triangular(B.r, CarrierMap(B.top, iterate_subdivide(X, 0))) == (True, None)

    def test_identity_depth_zero_complex(self):
        X = build_complex([(0,), (1,)])
        B = build_retraction(X, 0.5)
        assert B.r == identity_map(X)


class TestEvalHomotopy:
    def test_first_piece_midpoint(self):
        B = build_retraction(standard_simplex(1), i=2)
        x = PointInComplex((0, 1), (0.75, 0.25))
        # first quarter of the time runs P_2 halfway: x to r_2(x) = vertex 0
        y = eval_homotopy(B, x, 0.25)
        assert y.carrier == (0, 1)
        assert y.coords == pytest.approx((0.875, 0.125))

    def test_ends(self):
        B = build_retraction(standard_simplex(1), i=2)
        x = PointInComplex((0, 1), (0.3, 0.7))
        assert eval_homotopy(B, x, 0.0).coords == pytest.approx((0.3, 0.7))
        # x sits between the Sd^2 vertices (0.5, 0.5) -> 0 and (0.25, 0.75) -> 1
        assert eval_homotopy(B, x, 1.0).coords == pytest.approx((0.2, 0.8))
        assert eval_homotopy(B, PointInComplex((0, 1), (0.1, 0.9)), 1.0).carrier == (1,)

    def test_bad_time(self):
        B = build_retraction(standard_simplex(1), i=2)
        with pytest.raises(ValueError):
            eval_homotopy(B, PointInComplex.vertex(0), 1.5)

    def test_carrier_error_type(self):
        assert issubclass(CarrierConditionError, RuntimeError)


class TestVerify:
    def test_edge_passes(self):
        rep = verify_retraction(build_retraction(standard_simplex(1), 0.2), samples=1000)
        assert rep.ok
        assert rep.checks["retract_nbhd"].passed > 0
        assert rep.checks["dual_cell"].passed == 1

    def test_boundary_plus_edge(self, fixture_path):
        X = load_document(fixture_path("boundary_plus_edge.json")).complex()
        eps = comesh(X) / 2
        rep = verify_retraction(build_retraction(X, eps), samples=1000)
        assert rep.ok, rep.text()

    def test_stage_one_exempt(self):
        rep = verify_retraction(build_retraction(standard_simplex(1), i=1), 0.1, samples=200)
        assert rep.checks["monotone_vertices"].exempt

    def test_report_deterministic(self):
        B = build_retraction(standard_simplex(1), 0.2)
        assert verify_retraction(B, samples=300, seed=3).text() == verify_retraction(B, samples=300, seed=3).text()

    def test_dual_cell_counts(self):
        B = build_retraction(standard_simplex(2), i=2)
        rep = verify_retraction(B, samples=200)
        t = rep.checks["dual_cell"]
        assert t.failed == 0 and t.passed > 0
