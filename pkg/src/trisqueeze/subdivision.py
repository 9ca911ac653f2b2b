"""Iterated barycentric subdivision with flag bookkeeping.

A :class:`SubdivisionRecord` is a complex ``Sd^i X`` together with everything
needed to treat it geometrically inside ``X``: the flag label of every vertex,
its position as a point of ``X`` (dense barycentric coordinates over the
vertices of ``X``) and the chain of coarser records.  All measurements of a
subdivision are taken in the standard metric of the base ``X``.

Vertex ids are allocated deterministically: a vertex of ``Sd K`` that is the
barycentre of a vertex ``v`` of ``K`` keeps the id ``v``; the barycentres of
higher simplices get consecutive ids after the largest id of ``K``, in order
of dimension and then lexicographic order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import permutations
from math import comb, factorial

import numpy as np

from .complex_core import (
    DomainMismatchError,
    NotInComplexError,
    SimplicialComplex,
    SimplicialMap,
    build_simplicial_map,
    complex_from_rows,
    simplex,
)

logger = logging.getLogger(__name__)

DEFAULT_BUDGET = 10**7
SUPPORT_TOL = 1e-12


class ResourceBudgetError(RuntimeError):
    """A subdivision would exceed the configured simplex budget."""


def _stirling2(n: int, k: int) -> int:
    return sum((-1) ** i * comb(k, i) * (k - i) ** n for i in range(k + 1)) // factorial(k)


def projected_f_vector(f_vector) -> tuple[int, ...]:
    """Exact f-vector of the barycentric subdivision of a complex.

    A k-simplex of ``Sd K`` inside the relative interior of a j-simplex of
    ``K`` is an ordered partition of its j + 1 vertices into k + 1 blocks.
    """
    n = len(f_vector)
    out = []
    for k in range(n):
        out.append(
            sum(f_vector[j] * factorial(k + 1) * _stirling2(j + 1, k + 1)
                for j in range(k, n))
        )
    return tuple(out)


class SubdivisionRecord:
    """``Sd^level`` of ``base`` with labels, positions and carriers."""

    def __init__(self, base: SimplicialComplex, level: int, complex: SimplicialComplex,
                 parent: "SubdivisionRecord | None", positions: np.ndarray,
                 label_dim: np.ndarray | None = None,
                 label_row: np.ndarray | None = None):
        self.base = base
        self.level = level
        self.complex = complex
        self.parent = parent
        self.positions = positions
        self.positions.setflags(write=False)
        self.label_dim = label_dim
        self.label_row = label_row
        self._child: SubdivisionRecord | None = None
        self._vertex_carriers: dict[int, list[tuple]] = {}

    def __repr__(self) -> str:
        return f"SubdivisionRecord(level={self.level}, {self.complex!r})"

    @classmethod
    def of_complex(cls, X: SimplicialComplex) -> "SubdivisionRecord":
        n = len(X.vertices)
        return cls(X, 0, X, None, np.eye(n))

    @property
    def n_base(self) -> int:
        return len(self.base.vertices)

    def ancestor(self, level: int) -> "SubdivisionRecord":
        if level > self.level or level < 0:
            raise ValueError(f"no level {level} below level {self.level}")
        rec = self
        while rec.level > level:
            rec = rec.parent
        return rec

    def vertex_id_of(self, dim: int, row_index) -> np.ndarray:
        """Ids (in this record) of the barycentres of parent simplices."""
        row_index = np.asarray(row_index, dtype=np.int64)
        K = self.parent.complex
        if dim == 0:
            return K.rows(0)[row_index, 0]
        offset = K.key_base + sum(K.f_vector[1:dim])
        return offset + row_index

    def barycentre_id(self, s) -> int:
        """Id of the barycentre of a parent simplex ``s``."""
        s = simplex(s)
        idx = self.parent.complex.lookup(np.array(s))[0]
        if idx < 0:
            raise NotInComplexError(f"{s} is not a simplex of the parent complex")
        return int(self.vertex_id_of(len(s) - 1, idx))

    def flag_label(self, v: int) -> tuple:
        """The parent simplex whose barycentre is the vertex ``v``."""
        if self.parent is None:
            raise ValueError("a level-0 record has no flag labels")
        i = self.complex.index_of_vertex([v])[0]
        return tuple(self.parent.complex.rows(int(self.label_dim[i]))[self.label_row[i]].tolist())

    def position(self, v: int) -> np.ndarray:
        return self.positions[self.complex.index_of_vertex([v])[0]]

    def base_support(self, ids) -> np.ndarray:
        """Boolean base-vertex support of each vertex id."""
        return self.positions[self.complex.index_of_vertex(ids)] > 0

    def subdivide(self, budget: int = DEFAULT_BUDGET) -> "SubdivisionRecord":
        if self._child is None:
            projected = sum(projected_f_vector(self.complex.f_vector))
            if projected > budget:
                raise ResourceBudgetError(
                    f"Sd^{self.level + 1} would hold {projected} simplices (budget {budget})"
                )
            self._child = _subdivide_record(self)
        return self._child

    def vertex_carriers(self, level: int) -> list[tuple]:
        """Carrier at ``level`` of every vertex, aligned with ``complex.vertices``."""
        if level == self.level:
            return [(v,) for v in self.complex.vertices.tolist()]
        if level not in self._vertex_carriers:
            if level == 0:
                base_ids = self.base.vertices
                out = [tuple(base_ids[row].tolist()) for row in self.positions > 0]
            else:
                parent_carriers = self.parent.vertex_carriers(level)
                out = []
                pk = self.parent.complex
                for d, r in zip(self.label_dim.tolist(), self.label_row.tolist()):
                    label = pk.rows(d)[r]
                    verts: set[int] = set()
                    for i in pk.index_of_vertex(label).tolist():
                        verts.update(parent_carriers[i])
                    out.append(tuple(sorted(verts)))
            self._vertex_carriers[level] = out
        return self._vertex_carriers[level]

    def carrier(self, s, level: int = 0) -> tuple:
        """Smallest simplex of the level-``level`` complex containing ``s``."""
        s = simplex(s)
        if s not in self.complex:
            raise NotInComplexError(f"{s} is not a simplex of Sd^{self.level}")
        carriers = self.vertex_carriers(level)
        verts: set[int] = set()
        for i in self.complex.index_of_vertex(s).tolist():
            verts.update(carriers[i])
        return tuple(sorted(verts))


def _subdivide_record(rec: SubdivisionRecord) -> SubdivisionRecord:
    K = rec.complex
    n_old = len(K.vertices)
    label_dim = [np.zeros(n_old, dtype=np.int64)]
    label_row = [np.arange(n_old, dtype=np.int64)]
    positions = [rec.positions]
    for d in range(1, K.dim + 1):
        rows = K.rows(d)
        label_dim.append(np.full(rows.shape[0], d, dtype=np.int64))
        label_row.append(np.arange(rows.shape[0], dtype=np.int64))
        positions.append(rec.positions[K.index_of_vertex(rows)].mean(axis=1))
    new_positions = np.concatenate(positions)

    # ids of parent simplices' barycentres, without a finished child record
    offsets = [0]
    for d in range(1, K.dim + 1):
        offsets.append(K.key_base + sum(K.f_vector[1:d]))

    def ids_of(d, idx):
        if d == 0:
            return K.rows(0)[idx, 0]
        return offsets[d] + idx

    maximal_flags = []
    for rows in K.maximal_rows():
        if rows.shape[0] == 0:
            continue
        w = rows.shape[1]
        prefix_ids = {}
        flags = []
        for perm in permutations(range(w)):
            cols = []
            for k in range(w):
                key = tuple(sorted(perm[: k + 1]))
                if key not in prefix_ids:
                    idx = K.lookup(rows[:, list(key)])
                    prefix_ids[key] = ids_of(k, idx)
                cols.append(prefix_ids[key])
            flags.append(np.stack(cols, axis=1))
        maximal_flags.append(np.sort(np.concatenate(flags), axis=1))
    child_complex = complex_from_rows(maximal_flags)
    child = SubdivisionRecord(
        rec.base, rec.level + 1, child_complex, rec, new_positions,
        np.concatenate(label_dim), np.concatenate(label_row),
    )
    logger.debug("subdivided to level %d: f=%s", child.level, child_complex.f_vector)
    return child


def as_record(space) -> SubdivisionRecord:
    """View a complex as a level-0 record; records pass through unchanged."""
    if isinstance(space, SubdivisionRecord):
        return space
    if not isinstance(space, SimplicialComplex):
        raise TypeError(f"expected a complex or record, got {type(space).__name__}")
    rec = space.__dict__.get("_record")
    if rec is None:
        rec = SubdivisionRecord.of_complex(space)
        space.__dict__["_record"] = rec
    return rec


def barycentric_subdivide(space, budget: int = DEFAULT_BUDGET) -> SubdivisionRecord:
    return as_record(space).subdivide(budget)


def iterate_subdivide(space, i: int, budget: int = DEFAULT_BUDGET) -> SubdivisionRecord:
    """``Sd^i`` of a complex (or ``i`` further levels of a record)."""
    if i < 0:
        raise ValueError("subdivision depth must be non-negative")
    rec = as_record(space)
    for _ in range(i):
        rec = rec.subdivide(budget)
    return rec


class CarrierMap:
    """The realisation of a subdivision onto a coarser level of the same base.

    It is not simplicial; ``image`` returns the carrier simplex, which is the
    control relation used by the triangularity checks.
    """

    def __init__(self, domain: SubdivisionRecord, codomain: SubdivisionRecord | None = None):
        self.domain = domain
        self.codomain = codomain if codomain is not None else domain.ancestor(0)
        if self.codomain.base is not domain.base and self.codomain.base != domain.base:
            raise DomainMismatchError("carrier maps need a common base")
        if self.codomain.level > domain.level:
            raise DomainMismatchError("carrier maps go to coarser levels")

    def image(self, s) -> tuple:
        return self.domain.carrier(s, self.codomain.level)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=float)


def carrier(s, record: SubdivisionRecord, level: int = 0) -> tuple:
    return record.carrier(s, level)


def subdivide_map(f: SimplicialMap, budget: int = DEFAULT_BUDGET) -> SimplicialMap:
    """``Sd f``: the barycentre of σ goes to the barycentre of ``f(σ)``."""
    dom = as_record(f.domain)
    cod = as_record(f.codomain)
    sd_dom = dom.subdivide(budget)
    sd_cod = cod.subdivide(budget)
    K = dom.complex
    L = cod.complex
    images = []
    for d in range(K.dim + 1):
        rows = K.rows(d)
        img = np.sort(f.image_rows(rows), axis=1)
        distinct = np.ones(img.shape, dtype=bool)
        distinct[:, 1:] = img[:, 1:] != img[:, :-1]
        counts = distinct.sum(axis=1)
        out = np.empty(rows.shape[0], dtype=np.int64)
        for c in np.unique(counts):
            sel = np.flatnonzero(counts == c)
            packed = img[sel][distinct[sel]].reshape(len(sel), c)
            out[sel] = sd_cod.vertex_id_of(c - 1, L.lookup(packed))
        images.append(out)
    return build_simplicial_map(np.concatenate(images), sd_dom, sd_cod)


def iterate_subdivide_map(f: SimplicialMap, i: int, budget: int = DEFAULT_BUDGET) -> SimplicialMap:
    for _ in range(i):
        f = subdivide_map(f, budget)
    return f


@dataclass(frozen=True)
class DualCell:
    """The closed dual cell of ``sigma``: flags of simplices containing it."""

    sigma: tuple
    cell: SimplicialComplex
    record: SubdivisionRecord = field(repr=False)

    def __contains__(self, s) -> bool:
        return s in self.cell


def dual_cell(sigma, space) -> DualCell:
    """``D(σ, Y)`` inside ``Sd Y`` for a simplex σ of ``Y``.

    A flag ``σ_0 < … < σ_k`` has ``σ ≤ σ_0`` exactly when every one of its
    vertices is the barycentre of a coface of σ, so the cell is the full
    subcomplex of ``Sd Y`` on those barycentres.
    """
    rec = as_record(space)
    sigma = simplex(sigma)
    K = rec.complex
    if sigma not in K:
        raise NotInComplexError(f"{sigma} is not a simplex of the complex")
    child = rec.subdivide()
    keep = []
    for d in range(len(sigma) - 1, K.dim + 1):
        rows = K.rows(d)
        mask = np.isin(rows, sigma).sum(axis=1) == len(sigma)
        keep.append(child.vertex_id_of(d, np.flatnonzero(mask)))
    keep_ids = np.concatenate(keep)
    pieces = []
    C = child.complex
    for d in range(C.dim + 1):
        rows = C.rows(d)
        pieces.append(rows[np.isin(rows, keep_ids).all(axis=1)])
    top = [p for p in pieces if p.shape[0]]
    cell = SimplicialComplex(top)
    return DualCell(sigma, cell, child)


# ---------------------------------------------------------------- locating


@dataclass(frozen=True)
class PointInComplex:
    """A point given by a carrier simplex and barycentric coordinates on it."""

    carrier: tuple
    coords: tuple

    def __post_init__(self):
        if len(self.carrier) != len(self.coords):
            raise ValueError("carrier and coordinates differ in length")
        if abs(sum(self.coords) - 1.0) > 1e-12:
            raise ValueError(f"coordinates sum to {sum(self.coords)!r}, not 1")
        if min(self.coords) < -1e-15:
            raise ValueError("negative barycentric coordinate")

    @classmethod
    def vertex(cls, v: int) -> "PointInComplex":
        return cls((int(v),), (1.0,))

    @classmethod
    def make(cls, verts, coords, tol: float = SUPPORT_TOL) -> "PointInComplex":
        """Canonical point: drop near-zero coordinates, merge repeats, sort."""
        acc: dict[int, float] = {}
        for v, c in zip(verts, coords):
            acc[int(v)] = acc.get(int(v), 0.0) + float(c)
        keep = sorted(v for v, c in acc.items() if c > tol)
        total = sum(acc[v] for v in keep)
        return cls(tuple(keep), tuple(acc[v] / total for v in keep))

    def canonical(self) -> "PointInComplex":
        return PointInComplex.make(self.carrier, self.coords)


def to_base(points, record: SubdivisionRecord) -> np.ndarray:
    """Dense base coordinates of a point (or list of points) of ``record``."""
    single = isinstance(points, PointInComplex)
    pts = [points] if single else list(points)
    out = np.zeros((len(pts), record.n_base))
    for n, p in enumerate(pts):
        idx = record.complex.index_of_vertex(list(p.carrier))
        out[n] = np.asarray(p.coords) @ record.positions[idx]
    return out[0] if single else out


@dataclass
class Located:
    """Batch point location result: one padded simplex row per point."""

    rows: np.ndarray
    coords: np.ndarray

    def points(self) -> list[PointInComplex]:
        return [PointInComplex.make(r, c) for r, c in zip(self.rows.tolist(), self.coords.tolist())]


def _assign_base_simplices(base: SimplicialComplex, pts: np.ndarray):
    """For each point, a maximal base simplex containing its support."""
    support = pts > SUPPORT_TOL
    chosen_rows = []
    chosen_group = np.full(len(pts), -1, dtype=np.int64)
    chosen_index = np.full(len(pts), -1, dtype=np.int64)
    for g, rows in enumerate(base.maximal_rows()):
        if rows.shape[0] == 0:
            chosen_rows.append(rows)
            continue
        masks = np.zeros((rows.shape[0], len(base.vertices)), dtype=bool)
        idx = base.index_of_vertex(rows)
        np.put_along_axis(masks, idx, True, axis=1)
        outside = support.astype(np.int64) @ (~masks).T.astype(np.int64)
        fits = outside == 0
        free = (chosen_group < 0) & fits.any(axis=1)
        chosen_group[free] = g
        chosen_index[free] = np.argmax(fits[free], axis=1)
        chosen_rows.append(rows)
    if (chosen_group < 0).any():
        bad = np.flatnonzero(chosen_group < 0)[0]
        raise NotInComplexError(f"point {pts[bad].tolist()} does not lie in the complex")
    return chosen_rows, chosen_group, chosen_index


def locate(record: SubdivisionRecord, points: np.ndarray) -> Located:
    """Locate dense base-coordinate points in ``record.complex``.

    Each level is one barycentric descent: sorting a point's coordinates on
    a simplex in decreasing order selects the flag of faces whose
    barycentres span the finer simplex holding it, and successive
    differences of the sorted coordinates give the new coordinates.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    pts = np.where(pts < 0, 0.0, pts)
    pts = pts / pts.sum(axis=1, keepdims=True)
    base = record.base
    width = record.complex.dim + 1
    out_rows = np.zeros((len(pts), width), dtype=np.int64)
    out_coords = np.zeros((len(pts), width))
    chain = [record.ancestor(j) for j in range(record.level + 1)]
    base_rows, group, index = _assign_base_simplices(base, pts)
    for g, rows_g in enumerate(base_rows):
        sel = np.flatnonzero(group == g)
        if sel.size == 0:
            continue
        rows = rows_g[index[sel]]
        coords = np.take_along_axis(pts[sel], base.index_of_vertex(rows), axis=1)
        coords = coords / coords.sum(axis=1, keepdims=True)
        w = rows.shape[1]
        for j in range(1, record.level + 1):
            K = chain[j - 1].complex
            child = chain[j]
            order = np.argsort(-coords, axis=1, kind="stable")
            srows = np.take_along_axis(rows, order, axis=1)
            mu = np.take_along_axis(coords, order, axis=1)
            mu_next = np.concatenate([mu[:, 1:], np.zeros((len(mu), 1))], axis=1)
            new_rows = np.empty_like(rows)
            for k in range(w):
                prefix = np.sort(srows[:, : k + 1], axis=1)
                idx = K.lookup(prefix)
                if (idx < 0).any():
                    raise RuntimeError("point location left the complex")
                new_rows[:, k] = child.vertex_id_of(k, idx)
            coords = (np.arange(1, w + 1)) * (mu - mu_next)
            coords = coords / coords.sum(axis=1, keepdims=True)
            rows = new_rows
        out_rows[sel, :w] = rows
        out_rows[sel, w:] = rows[:, :1]
        out_coords[sel, :w] = coords
    return Located(out_rows, out_coords)


def locate_point(x: PointInComplex, record: SubdivisionRecord,
                 source: SubdivisionRecord | None = None) -> PointInComplex:
    """Re-express a point of ``source`` (default: the base) in ``record``."""
    source = source if source is not None else record.ancestor(0)
    loc = locate(record, to_base(x, source)[None, :])
    return loc.points()[0]


def evaluate(f, points: np.ndarray) -> np.ndarray:
    """Evaluate a PL map on dense base-coordinate points of its domain.

    Simplicial maps are evaluated by locating each point and mixing the
    positions of the image vertices; any other map must provide
    ``evaluate``.
    """
    if isinstance(f, SimplicialMap):
        dom = as_record(f.domain)
        cod = as_record(f.codomain)
        loc = locate(dom, points)
        img = f.image_rows(loc.rows)
        pos = cod.positions[cod.complex.index_of_vertex(img)]
        return np.einsum("nk,nkv->nv", loc.coords, pos)
    return f.evaluate(points)


def vertex_points(f, record: SubdivisionRecord | None = None) -> np.ndarray:
    """Images (in codomain base coordinates) of the domain vertices of ``f``."""
    if isinstance(f, SimplicialMap):
        cod = as_record(f.codomain)
        return cod.positions[cod.complex.index_of_vertex(f.vertex_images)]
    record = record if record is not None else f.domain
    return evaluate(f, record.positions)


def image_support(f: SimplicialMap, points: np.ndarray) -> np.ndarray:
    """Boolean mask over codomain vertices of the carrier of each ``f(x)``.

    Computed combinatorially from the located domain simplex, so it is exact
    up to the location tolerance.
    """
    dom = as_record(f.domain)
    cod = f.codomain_complex
    loc = locate(dom, points)
    img = cod.index_of_vertex(f.image_rows(loc.rows))
    out = np.zeros((len(loc.rows), len(cod.vertices)))
    np.add.at(out, (np.repeat(np.arange(len(img)), img.shape[1]), img.ravel()), loc.coords.ravel())
    return out > SUPPORT_TOL


__all__ = [
    "CarrierMap",
    "DualCell",
    "Located",
    "PointInComplex",
    "ResourceBudgetError",
    "SubdivisionRecord",
    "as_record",
    "barycentric_subdivide",
    "carrier",
    "dual_cell",
    "evaluate",
    "image_support",
    "iterate_subdivide",
    "iterate_subdivide_map",
    "locate",
    "locate_point",
    "projected_f_vector",
    "subdivide_map",
    "to_base",
    "vertex_points",
]
