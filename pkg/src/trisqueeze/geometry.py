"""The standard metric on a complex and the quantities measured with it.

Every point is handled as a dense vector of barycentric coordinates over the
vertices of the base complex.  That vector map sends each closed simplex
isometrically onto a face of a big standard simplex, and it is 1-Lipschitz
for the path metric, so:

* the Euclidean distance between two coordinate vectors is always a lower
  bound for the path distance, and
* it is the exact path distance whenever both points lie in one closed
  simplex of the base.

Global geodesics are never claimed exactly; they are reported as
``(lower, upper)`` intervals, the upper bound coming from shortest paths in a
graph on the vertices of a fixed subdivision.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from .complex_core import SimplicialComplex, SimplicialMap, simplex
from .subdivision import (
    SUPPORT_TOL,
    CarrierMap,
    PointInComplex,
    SubdivisionRecord,
    as_record,
    iterate_subdivide,
    to_base,
    vertex_points,
)

HULL_TOL = 1e-10


class WrongOperationError(ValueError):
    """The points do not share a closed simplex; use :func:`path_dist`."""


class UndefinedQuantityError(ValueError):
    """A measured quantity is undefined (e.g. comesh of a 0-dim complex)."""


class Membership(str, enum.Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    UNKNOWN = "unknown"


# ------------------------------------------------------------ projections


def project_to_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row onto the probability simplex.

    Sort-based: with ``u`` sorted decreasingly, the threshold comes from the
    largest ``j`` with ``u_j + (1 - sum_{i<=j} u_i) / j > 0``.
    """
    v = np.atleast_2d(np.asarray(v, dtype=float))
    u = -np.sort(-v, axis=1)
    css = np.cumsum(u, axis=1)
    j = np.arange(1, v.shape[1] + 1)
    cond = u + (1.0 - css) / j > 0
    rho = v.shape[1] - 1 - np.argmax(cond[:, ::-1], axis=1)
    lam = (1.0 - css[np.arange(len(v)), rho]) / (rho + 1)
    return np.maximum(v + lam[:, None], 0.0)


def distance_to_face(points: np.ndarray, face_mask: np.ndarray) -> np.ndarray:
    """Euclidean distance from coordinate vectors to the face ``conv(e_i, i in face)``."""
    points = np.atleast_2d(points)
    inside = points[:, face_mask]
    outside = points[:, ~face_mask]
    proj = project_to_simplex(inside)
    return np.sqrt((outside**2).sum(axis=1) + ((inside - proj) ** 2).sum(axis=1))


def hull_distance(points: np.ndarray, hulls: np.ndarray) -> np.ndarray:
    """Exact Euclidean distance from points to convex hulls of few points.

    ``points`` is ``(N, V)``; ``hulls`` is ``(N, m, V)`` or a shared
    ``(m, V)``.  The nearest point lies in the relative interior of the hull
    of some affinely independent subset, where it is the orthogonal
    projection onto that subset's affine span, so enumerating subsets and
    keeping projections with non-negative barycentric coordinates is exact.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    hulls = np.asarray(hulls, dtype=float)
    if hulls.ndim == 2:
        hulls = np.broadcast_to(hulls, (points.shape[0],) + hulls.shape)
    n, m, _ = hulls.shape
    best = np.full(n, np.inf)
    for s in range(1, m + 1):
        for sub in combinations(range(m), s):
            a = hulls[:, sub[0]]
            if s == 1:
                best = np.minimum(best, np.linalg.norm(points - a, axis=1))
                continue
            D = hulls[:, sub[1:]] - a[:, None, :]
            G = D @ np.swapaxes(D, 1, 2)
            rhs = np.einsum("nkv,nv->nk", D, points - a)
            c = np.einsum("nij,nj->ni", np.linalg.pinv(G), rhs)
            bary0 = 1.0 - c.sum(axis=1)
            valid = (c >= -HULL_TOL).all(axis=1) & (bary0 >= -HULL_TOL)
            proj = a + np.einsum("nk,nkv->nv", c, D)
            d = np.linalg.norm(points - proj, axis=1)
            best = np.where(valid, np.minimum(best, d), best)
    return best


# ----------------------------------------------------------------- context


def _as_vector(x, record: SubdivisionRecord) -> np.ndarray:
    if isinstance(x, PointInComplex):
        return to_base(x, record)
    return np.asarray(x, dtype=float)


@dataclass
class MetricContext:
    """Geometry of one complex or subdivision record.

    ``refinement`` is the subdivision level of the base used for the graph
    that bounds non-local path distances from above.
    """

    space: object
    refinement: int = 1
    _graph: tuple | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.record = as_record(self.space)

    @property
    def base(self) -> SimplicialComplex:
        return self.record.base

    @cached_property
    def _base_maximal_masks(self) -> np.ndarray:
        base = self.base
        masks = []
        for rows in base.maximal_rows():
            if rows.shape[0] == 0:
                continue
            m = np.zeros((rows.shape[0], len(base.vertices)), dtype=bool)
            np.put_along_axis(m, base.index_of_vertex(rows), True, axis=1)
            masks.append(m)
        return np.concatenate(masks)

    def share_simplex(self, supports: np.ndarray) -> np.ndarray:
        """Whether each boolean support row lies in one closed base simplex."""
        supports = np.atleast_2d(supports)
        outside = supports.astype(np.int64) @ (~self._base_maximal_masks).T.astype(np.int64)
        return (outside == 0).any(axis=1)

    @cached_property
    def _components(self) -> np.ndarray:
        base = self.base
        n = len(base.vertices)
        edges = base.rows(1)
        if edges.shape[0] == 0:
            return np.arange(n)
        idx = base.index_of_vertex(edges)
        adj = coo_matrix((np.ones(len(idx)), (idx[:, 0], idx[:, 1])), shape=(n, n))
        return connected_components(adj, directed=False)[1]

    def component_of(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        first = np.argmax(points > SUPPORT_TOL, axis=1)
        return self._components[first]

    @cached_property
    def graph(self):
        """All-pairs shortest paths on the vertices of ``Sd^refinement`` of the base."""
        rec = iterate_subdivide(self.base, self.refinement)
        pos = rec.positions
        edges = rec.complex.rows(1)
        n = len(rec.complex.vertices)
        if edges.shape[0]:
            idx = rec.complex.index_of_vertex(edges)
            w = np.linalg.norm(pos[idx[:, 0]] - pos[idx[:, 1]], axis=1)
            adj = coo_matrix((w, (idx[:, 0], idx[:, 1])), shape=(n, n)).tocsr()
            dist = shortest_path(adj, directed=False)
        else:
            dist = np.where(np.eye(n, dtype=bool), 0.0, np.inf)
        return pos, dist


def _union_supports(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (np.atleast_2d(a) > SUPPORT_TOL) | (np.atleast_2d(b) > SUPPORT_TOL)


def path_interval(x: np.ndarray, y: np.ndarray, ctx: MetricContext) -> tuple[np.ndarray, np.ndarray]:
    """Batched ``(lower, upper)`` bounds on path distances between row pairs."""
    x = np.atleast_2d(x)
    y = np.atleast_2d(y)
    chord = np.linalg.norm(x - y, axis=1)
    lower = chord.copy()
    upper = np.full(len(x), np.inf)
    local = ctx.share_simplex(_union_supports(x, y))
    upper[local] = chord[local]
    apart = ctx.component_of(x) != ctx.component_of(y)
    lower[apart] = np.inf
    todo = np.flatnonzero(~local & ~apart)
    if todo.size:
        pos, dist = ctx.graph
        for n in todo:
            nx = ctx.share_simplex(_union_supports(np.broadcast_to(x[n], pos.shape), pos))
            ny = ctx.share_simplex(_union_supports(np.broadcast_to(y[n], pos.shape), pos))
            dx = np.linalg.norm(pos[nx] - x[n], axis=1)
            dy = np.linalg.norm(pos[ny] - y[n], axis=1)
            upper[n] = (dx[:, None] + dist[np.ix_(nx, ny)] + dy[None, :]).min()
    return lower, upper


def dist_in_simplex(x, y, ctx: MetricContext) -> float:
    """Exact distance between two points of one closed simplex."""
    xv = _as_vector(x, ctx.record)
    yv = _as_vector(y, ctx.record)
    if not ctx.share_simplex(_union_supports(xv, yv))[0]:
        raise WrongOperationError("points share no closed simplex; use path_dist")
    return float(np.linalg.norm(xv - yv))


def dist_point_to_face(x: PointInComplex, face, ctx: MetricContext) -> float:
    """Exact distance from ``x`` to a face of its carrier."""
    face = simplex(face)
    if not set(face) <= set(x.carrier):
        raise ValueError(f"{face} is not a face of the carrier {x.carrier}")
    rec = ctx.record
    xv = to_base(x, rec)
    pos = rec.positions[rec.complex.index_of_vertex(list(face))]
    return float(hull_distance(xv[None, :], pos)[0])


def path_dist(x, y, ctx: MetricContext) -> tuple[float, float]:
    """``(lower, upper)`` path distance; exact (width 0) inside one simplex."""
    lo, up = path_interval(_as_vector(x, ctx.record)[None, :], _as_vector(y, ctx.record)[None, :], ctx)
    return float(lo[0]), float(up[0])


# ------------------------------------------------------ measured quantities


def _control_points(p, X: SubdivisionRecord) -> np.ndarray:
    """Images (in the control space's base coordinates) of the vertices of ``X``."""
    if p is None:
        return X.positions
    return vertex_points(p, X)


def _resolve(X, p):
    rec = as_record(X) if not isinstance(p, (SimplicialMap, CarrierMap)) else as_record(p.domain)
    return rec, _control_points(p, rec)


def diam_measured(s, p=None, X=None) -> float:
    """Diameter of a simplex of the domain of ``p``, measured in its target.

    ``p`` is a simplicial map or carrier map; ``None`` measures a simplex of
    ``X`` in the base of ``X``.  The image of the simplex lies in one closed
    simplex of the target, where distances are chords, and a convex function
    on a simplex peaks at a vertex pair.
    """
    rec, pts = _resolve(X, p)
    s = simplex(s)
    img = pts[rec.complex.index_of_vertex(list(s))]
    if len(s) == 1:
        return 0.0
    diffs = img[:, None, :] - img[None, :, :]
    return float(np.sqrt((diffs**2).sum(axis=2)).max())


def _rad_rows(rows: np.ndarray, pts: np.ndarray, rec: SubdivisionRecord) -> np.ndarray:
    img = pts[rec.complex.index_of_vertex(rows)]
    centre = img.mean(axis=1)
    w = rows.shape[1]
    best = np.full(rows.shape[0], np.inf)
    for k in range(w):
        facet = np.delete(img, k, axis=1)
        best = np.minimum(best, hull_distance(centre, facet))
    return best


def rad_measured(s, p=None, X=None) -> float:
    """Distance from the image of the barycentre to the image of the boundary.

    The barycentre's image is the affine image ``p(σ̂)``, not the barycentre
    of ``p(σ)``, so collapsing maps are measured literally.
    """
    rec, pts = _resolve(X, p)
    s = simplex(s)
    if len(s) == 1:
        return float("inf")
    return float(_rad_rows(np.array([s]), pts, rec)[0])


def mesh(X=None, p=None) -> float:
    """Largest measured diameter, i.e. the longest measured edge."""
    rec, pts = _resolve(X, p)
    edges = rec.complex.rows(1)
    if edges.shape[0] == 0:
        return 0.0
    idx = rec.complex.index_of_vertex(edges)
    return float(np.linalg.norm(pts[idx[:, 0]] - pts[idx[:, 1]], axis=1).max())


def comesh(X=None, p=None) -> float:
    """Smallest measured radius over positive-dimensional simplices."""
    rec, pts = _resolve(X, p)
    if rec.complex.dim == 0:
        raise UndefinedQuantityError("comesh of a 0-dimensional complex is undefined")
    return float(min(_rad_rows(rec.complex.rows(d), pts, rec).min()
                     for d in range(1, rec.complex.dim + 1)))


def mesh_table(X=None, p=None) -> list[tuple[int, float, float]]:
    """Per-dimension ``(dim, max diam, min rad)`` rows for reports."""
    rec, pts = _resolve(X, p)
    out = []
    for d in range(1, rec.complex.dim + 1):
        rows = rec.complex.rows(d)
        idx = rec.complex.index_of_vertex(rows)
        img = pts[idx]
        diffs = img[:, :, None, :] - img[:, None, :, :]
        diam = np.sqrt((diffs**2).sum(axis=3)).max()
        out.append((d, float(diam), float(_rad_rows(rows, pts, rec).min())))
    return out


# ------------------------------------------------------------ neighbourhoods


def distance_to_base_simplex(points: np.ndarray, face, ctx: MetricContext) -> tuple[np.ndarray, np.ndarray]:
    """``(lower, upper)`` distance from points to a closed simplex of the base.

    The lower bound is the Euclidean distance to the face; the upper bound is
    exact over the faces of ``face`` that share a closed simplex with the
    point, which is where the nearest point of a nearby face lives.
    """
    points = np.atleast_2d(points)
    base = ctx.base
    face = simplex(face)
    idx = base.index_of_vertex(list(face))
    support = points > SUPPORT_TOL
    lower = None
    upper = np.full(len(points), np.inf)
    for w in range(len(face), 0, -1):
        for sub in combinations(idx.tolist(), w):
            mask = np.zeros(len(base.vertices), dtype=bool)
            mask[list(sub)] = True
            d = distance_to_face(points, mask)
            if lower is None:
                lower = d
            ok = ctx.share_simplex(support | mask[None, :])
            upper = np.where(ok, np.minimum(upper, d), upper)
    return _star_lower(points, lower, upper), upper


def _star_lower(points: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """Sharpen a Euclidean lower bound using the open star of each carrier.

    A path from ``x`` either stays in the open star of its carrier, where
    every point of the target shares a closed simplex with ``x`` (so the
    local exact value ``upper`` bounds it), or leaves the star through a
    point with some coordinate of ``supp(x)`` equal to zero, which costs at
    least the smallest positive coordinate of ``x``.
    """
    exit_cost = np.where(points > SUPPORT_TOL, points, np.inf).min(axis=1)
    return np.maximum(lower, np.minimum(upper, exit_cost))


def neighborhood_state(lower: np.ndarray, upper: np.ndarray, eps: float) -> np.ndarray:
    """Tri-state membership codes: 1 inside, -1 outside, 0 unknown."""
    state = np.zeros(len(lower), dtype=np.int8)
    state[upper < eps] = 1
    state[lower > eps] = -1
    return state


def in_neighborhood(x, S, eps: float, ctx: MetricContext) -> Membership:
    """Whether ``x`` lies in the open ``eps``-neighbourhood of a subcomplex.

    ``S`` is an iterable of simplices of ``ctx``'s complex.  Inside means the
    upper bound on the distance is below ``eps``; outside means the lower
    bound exceeds it.
    """
    if eps < 0:
        raise ValueError("eps must be non-negative")
    rec = ctx.record
    xv = _as_vector(x, rec)[None, :]
    simplices = [simplex(s) for s in S]
    lo, up = np.inf, np.inf
    if rec.level == 0:
        for s in simplices:
            l, u = distance_to_base_simplex(xv, s, ctx)
            lo, up = min(lo, l[0]), min(up, u[0])
    else:
        for s in simplices:
            pos = rec.positions[rec.complex.index_of_vertex(list(s))]
            d = hull_distance(xv, pos)[0]
            lo = min(lo, d)
            y_support = (pos > SUPPORT_TOL).any(axis=0)
            if ctx.share_simplex((xv[0] > SUPPORT_TOL) | y_support)[0]:
                up = min(up, d)
    state = neighborhood_state(np.array([lo]), np.array([up]), eps)[0]
    return {1: Membership.INSIDE, -1: Membership.OUTSIDE, 0: Membership.UNKNOWN}[int(state)]


def control_of_map(F, p, ctx: MetricContext, samples: int = 100, resolution: int = 6,
                   seed: int = 0) -> float:
    """Sampled supremum of the upper path distance between ``p(x)`` and ``F(x)``.

    ``F`` and ``p`` are PL maps out of the same domain into the space of
    ``ctx``.  The value is an estimate over the samples only.
    """
    from .sampling import sample_domain
    from .subdivision import evaluate

    dom = as_record(F.domain)
    if samples < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    pts = sample_domain(dom, resolution, samples, rng)
    fx = evaluate(F, pts)
    px = evaluate(p, pts) if p is not None else pts
    _, upper = path_interval(px, fx, ctx)
    return float(upper.max())


def distance_to_simplex(points: np.ndarray, s, rec: SubdivisionRecord,
                        ctx: MetricContext) -> tuple[np.ndarray, np.ndarray]:
    """``(lower, upper)`` distance from base points to a simplex of ``rec``.

    Same scheme as :func:`distance_to_base_simplex`, with the simplex given
    by the positions of its vertices inside the base.
    """
    rec = as_record(rec)
    if rec.level == 0:
        return distance_to_base_simplex(points, s, ctx)
    points = np.atleast_2d(points)
    s = simplex(s)
    pos = rec.positions[rec.complex.index_of_vertex(list(s))]
    support = points > SUPPORT_TOL
    lower = hull_distance(points, pos)
    upper = np.full(len(points), np.inf)
    for w in range(len(s), 0, -1):
        for sub in combinations(range(len(s)), w):
            hull = pos[list(sub)]
            ok = ctx.share_simplex(support | (hull > SUPPORT_TOL).any(axis=0)[None, :])
            if not ok.any():
                continue
            d = lower if w == len(s) else hull_distance(points, hull)
            upper = np.where(ok, np.minimum(upper, d), upper)
    return _star_lower(points, lower, upper), upper


def distance_to_boundary(points: np.ndarray, s, rec: SubdivisionRecord) -> np.ndarray:
    """Distance from points of the closed simplex ``s`` of ``rec`` to its boundary.

    Exact for points of ``s``: the nearest point of each facet lies in the
    same closed base simplex.  A vertex has empty boundary (distance inf).
    """
    points = np.atleast_2d(points)
    rec = as_record(rec)
    s = simplex(s)
    if len(s) == 1:
        return np.full(len(points), np.inf)
    best = np.full(len(points), np.inf)
    if rec.level == 0:
        base = rec.base
        idx = base.index_of_vertex(list(s))
        for k in range(len(s)):
            mask = np.zeros(len(base.vertices), dtype=bool)
            mask[np.delete(idx, k)] = True
            best = np.minimum(best, distance_to_face(points, mask))
        return best
    pos = rec.positions[rec.complex.index_of_vertex(list(s))]
    for k in range(len(s)):
        best = np.minimum(best, hull_distance(points, np.delete(pos, k, axis=0)))
    return best
