"""Finite simplicial complexes, simplicial maps and the triangularity check.

Simplices are canonical sorted tuples of non-negative integer vertex ids.
Internally a complex keeps one ``(f_k, k + 1)`` integer array per dimension,
rows sorted and lexicographically ordered, which keeps face closure and
subdivision vectorised.
"""

from __future__ import annotations

from functools import cached_property
from itertools import combinations
from typing import Iterable, Iterator, Sequence

import numpy as np

Simplex = tuple


class MalformedSimplexError(ValueError):
    """A vertex tuple is empty, negative or repeats a vertex."""


class NonSimplicialMapError(ValueError):
    """A vertex assignment sends some simplex onto a non-simplex.

    The offending domain simplex is kept in ``witness``.
    """

    def __init__(self, message: str, witness: Simplex | None = None):
        super().__init__(message)
        self.witness = witness


class DomainMismatchError(ValueError):
    """Two maps or complexes that must agree do not."""


class NotInComplexError(KeyError):
    """A simplex was looked up in a complex that does not contain it."""


def simplex(verts: Iterable[int]) -> Simplex:
    """Return the canonical (sorted) form of a vertex collection."""
    vs = [int(v) for v in verts]
    if not vs:
        raise MalformedSimplexError("empty simplex")
    if any(v < 0 for v in vs):
        raise MalformedSimplexError(f"negative vertex id in {tuple(vs)}")
    out = tuple(sorted(vs))
    if len(set(out)) != len(out):
        raise MalformedSimplexError(f"repeated vertex in {tuple(vs)}")
    return out


def _row_keys(rows: np.ndarray, base: int) -> np.ndarray:
    """Encode sorted rows as integers whose order is the lexicographic order."""
    width = rows.shape[1]
    if base ** width < 2**63:
        keys = np.zeros(rows.shape[0], dtype=np.int64)
        for c in range(width):
            keys = keys * base + rows[:, c]
        return keys
    keys = np.zeros(rows.shape[0], dtype=object)
    for c in range(width):
        keys = keys * base + rows[:, c].astype(object)
    return keys


def _closure(maximal: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Face closure of groups of sorted rows (one array per width)."""
    top = max(a.shape[1] for a in maximal if a.size) if maximal else 0
    pieces: list[list[np.ndarray]] = [[] for _ in range(top)]
    for rows in maximal:
        if rows.size == 0:
            continue
        width = rows.shape[1]
        for w in range(1, width + 1):
            for cols in combinations(range(width), w):
                pieces[w - 1].append(rows[:, cols])
    return [np.unique(np.concatenate(p), axis=0) for p in pieces]


class SimplicialComplex:
    """A finite, face-closed collection of simplices.

    Build instances with :func:`build_complex`; the constructor trusts its
    input to be face closed and canonical.
    """

    def __init__(self, by_dim: Sequence[np.ndarray]):
        self._by_dim = tuple(np.ascontiguousarray(a, dtype=np.int64) for a in by_dim)
        for a in self._by_dim:
            a.setflags(write=False)
        if not self._by_dim or self._by_dim[0].shape[0] == 0:
            raise MalformedSimplexError("a complex needs at least one vertex")

    @property
    def dim(self) -> int:
        return len(self._by_dim) - 1

    @property
    def vertices(self) -> np.ndarray:
        return self._by_dim[0][:, 0]

    @property
    def key_base(self) -> int:
        return int(self.vertices[-1]) + 1

    def rows(self, dim: int) -> np.ndarray:
        """Array of all ``dim``-simplices, one sorted row each."""
        if dim < 0 or dim > self.dim:
            return np.zeros((0, dim + 1), dtype=np.int64)
        return self._by_dim[dim]

    @property
    def f_vector(self) -> tuple[int, ...]:
        return tuple(a.shape[0] for a in self._by_dim)

    @property
    def n_simplices(self) -> int:
        return sum(self.f_vector)

    def simplices(self, dim: int | None = None) -> Iterator[Simplex]:
        dims = range(self.dim + 1) if dim is None else [dim]
        for d in dims:
            for row in self.rows(d).tolist():
                yield tuple(row)

    def __iter__(self) -> Iterator[Simplex]:
        return self.simplices()

    def __len__(self) -> int:
        return self.n_simplices

    @cached_property
    def _keys(self) -> tuple[np.ndarray, ...]:
        return tuple(_row_keys(a, self.key_base) for a in self._by_dim)

    def lookup(self, rows: np.ndarray) -> np.ndarray:
        """Row indices of sorted query rows within their dimension, -1 if absent."""
        rows = np.asarray(rows, dtype=np.int64)
        if rows.ndim == 1:
            rows = rows[None, :]
        d = rows.shape[1] - 1
        out = np.full(rows.shape[0], -1, dtype=np.int64)
        if d > self.dim or rows.shape[0] == 0:
            return out
        ok = (rows >= 0).all(axis=1) & (rows < self.key_base).all(axis=1)
        if not ok.any():
            return out
        q = _row_keys(rows[ok], self.key_base)
        keys = self._keys[d]
        pos = np.searchsorted(keys, q)
        pos = np.minimum(pos, len(keys) - 1)
        hit = keys[pos] == q
        res = np.where(hit, pos, -1)
        out[np.flatnonzero(ok)] = res
        return out

    def index_of_vertex(self, ids) -> np.ndarray:
        """Positions of vertex ids inside :attr:`vertices`."""
        ids = np.asarray(ids, dtype=np.int64)
        pos = np.searchsorted(self.vertices, ids)
        pos = np.minimum(pos, len(self.vertices) - 1)
        if not np.all(self.vertices[pos] == ids):
            missing = ids[self.vertices[pos] != ids]
            raise NotInComplexError(f"vertices {missing.tolist()[:5]} not in complex")
        return pos

    def __contains__(self, s) -> bool:
        try:
            row = np.asarray(simplex(s), dtype=np.int64)
        except MalformedSimplexError:
            return False
        return bool(self.lookup(row)[0] >= 0)

    @cached_property
    def _maximal(self) -> tuple[np.ndarray, ...]:
        out = []
        for d in range(self.dim + 1):
            rows = self._by_dim[d]
            if d == self.dim:
                out.append(rows)
                continue
            # a d-simplex is maximal unless it is a facet of some (d+1)-simplex
            upper = self._by_dim[d + 1]
            facets = np.concatenate(
                [np.delete(upper, c, axis=1) for c in range(d + 2)]
            )
            covered = np.zeros(rows.shape[0], dtype=bool)
            idx = self.lookup(facets)
            covered[idx[idx >= 0]] = True
            out.append(rows[~covered])
        return tuple(out)

    def maximal_rows(self) -> tuple[np.ndarray, ...]:
        """Maximal simplices, one array per dimension (possibly empty)."""
        return self._maximal

    def maximal_simplices(self) -> list[Simplex]:
        return [tuple(r) for a in self._maximal for r in a.tolist()]

    @property
    def is_pure(self) -> bool:
        return all(a.shape[0] == 0 for a in self._maximal[:-1])

    @cached_property
    def _digest(self) -> int:
        return hash(tuple(a.tobytes() for a in self._by_dim))

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, SimplicialComplex):
            return NotImplemented
        if self.f_vector != other.f_vector:
            return False
        return all(np.array_equal(a, b) for a, b in zip(self._by_dim, other._by_dim))

    def __hash__(self) -> int:
        return self._digest

    def __repr__(self) -> str:
        return f"SimplicialComplex(dim={self.dim}, f_vector={self.f_vector})"


def complex_from_rows(maximal: Sequence[np.ndarray]) -> SimplicialComplex:
    """Face closure of pre-sorted row arrays (fast path used by subdivision)."""
    return SimplicialComplex(_closure([np.asarray(m, dtype=np.int64) for m in maximal]))


def build_complex(maximal_simplices: Iterable[Iterable[int]]) -> SimplicialComplex:
    """Build the face closure of a list of vertex tuples.

    Raises:
        MalformedSimplexError: a tuple is empty, holds a negative id or
            repeats a vertex.
    """
    canon = [simplex(s) for s in maximal_simplices]
    if not canon:
        raise MalformedSimplexError("no simplices given")
    groups: dict[int, list[Simplex]] = {}
    for s in canon:
        groups.setdefault(len(s), []).append(s)
    arrays = [np.array(sorted(set(g)), dtype=np.int64) for _, g in sorted(groups.items())]
    return complex_from_rows(arrays)


def standard_simplex(n: int) -> SimplicialComplex:
    """The complex of the standard n-simplex on vertices 0..n."""
    return build_complex([tuple(range(n + 1))])


def faces(s: Iterable[int]) -> list[Simplex]:
    """All proper nonempty faces of ``s``, by dimension then lexicographically."""
    s = simplex(s)
    return [c for w in range(1, len(s)) for c in combinations(s, w)]


def closed_star(s: Iterable[int], X: SimplicialComplex) -> SimplicialComplex:
    """Smallest subcomplex of ``X`` holding every simplex that contains ``s``."""
    s = simplex(s)
    if s not in X:
        raise NotInComplexError(f"{s} is not a simplex of the complex")
    cofaces = []
    for d in range(len(s) - 1, X.dim + 1):
        rows = X.rows(d)
        mask = np.isin(rows, s).sum(axis=1) == len(s)
        cofaces.extend(rows[mask].tolist())
    return build_complex(cofaces)


def _complex_of(space) -> SimplicialComplex:
    return space if isinstance(space, SimplicialComplex) else space.complex


def same_space(a, b) -> bool:
    """Whether two complexes/subdivision records describe the same space."""
    if a is b:
        return True
    la = getattr(a, "level", 0)
    lb = getattr(b, "level", 0)
    if la != lb:
        return False
    ba = getattr(a, "base", a)
    bb = getattr(b, "base", b)
    return _complex_of(ba) == _complex_of(bb) and _complex_of(a) == _complex_of(b)


class SimplicialMap:
    """A vertex assignment between complexes that sends simplices to simplices.

    ``domain`` and ``codomain`` are either :class:`SimplicialComplex` objects
    or subdivision records; the latter carry the geometry needed to evaluate
    the map as a piecewise-linear map.
    """

    def __init__(self, domain, codomain, images: np.ndarray):
        self.domain = domain
        self.codomain = codomain
        self._images = np.asarray(images, dtype=np.int64)
        self._images.setflags(write=False)

    @property
    def domain_complex(self) -> SimplicialComplex:
        return _complex_of(self.domain)

    @property
    def codomain_complex(self) -> SimplicialComplex:
        return _complex_of(self.codomain)

    @property
    def vertex_images(self) -> np.ndarray:
        """Image ids aligned with ``domain_complex.vertices``."""
        return self._images

    def as_dict(self) -> dict[int, int]:
        return dict(zip(self.domain_complex.vertices.tolist(), self._images.tolist()))

    def __call__(self, v: int) -> int:
        return int(self._images[self.domain_complex.index_of_vertex([v])[0]])

    def image(self, s: Iterable[int]) -> Simplex:
        """Image simplex, repeated vertices collapsed."""
        idx = self.domain_complex.index_of_vertex(list(s))
        return tuple(sorted(set(self._images[idx].tolist())))

    def image_rows(self, rows: np.ndarray) -> np.ndarray:
        """Image ids of each vertex in ``rows`` (not deduplicated)."""
        return self._images[self.domain_complex.index_of_vertex(rows)]

    def __eq__(self, other) -> bool:
        if not isinstance(other, SimplicialMap):
            return NotImplemented
        return (
            same_space(self.domain, other.domain)
            and same_space(self.codomain, other.codomain)
            and np.array_equal(self._images, other._images)
        )

    __hash__ = None

    def __repr__(self) -> str:
        return (
            f"SimplicialMap({self.domain_complex!r} -> {self.codomain_complex!r})"
        )


def _first_non_simplex(images: np.ndarray, dom: SimplicialComplex,
                       cod: SimplicialComplex) -> Simplex | None:
    for rows in dom.maximal_rows():
        if rows.shape[0] == 0:
            continue
        img = np.sort(images[dom.index_of_vertex(rows)], axis=1)
        distinct = np.ones(img.shape, dtype=bool)
        distinct[:, 1:] = img[:, 1:] != img[:, :-1]
        counts = distinct.sum(axis=1)
        for c in np.unique(counts):
            sel = np.flatnonzero(counts == c)
            packed = img[sel][distinct[sel]].reshape(len(sel), c)
            missing = cod.lookup(packed) < 0
            if missing.any():
                return tuple(rows[sel[np.argmax(missing)]].tolist())
    return None


def build_simplicial_map(vertex_images, domain, codomain) -> SimplicialMap:
    """Validate a vertex assignment and return the simplicial map.

    ``vertex_images`` is a mapping from domain vertex id to codomain vertex id
    or an array aligned with the sorted domain vertices.

    Raises:
        DomainMismatchError: some domain vertex is unassigned.
        NonSimplicialMapError: some simplex image is not a codomain simplex.
    """
    dom, cod = _complex_of(domain), _complex_of(codomain)
    if isinstance(vertex_images, dict):
        verts = dom.vertices.tolist()
        missing = [v for v in verts if v not in vertex_images]
        if missing:
            raise DomainMismatchError(f"unassigned domain vertices {missing[:5]}")
        images = np.array([int(vertex_images[v]) for v in verts], dtype=np.int64)
    else:
        images = np.asarray(vertex_images, dtype=np.int64)
        if images.shape != dom.vertices.shape:
            raise DomainMismatchError("image array does not match domain vertices")
    if not np.isin(images, cod.vertices).all():
        bad = images[~np.isin(images, cod.vertices)]
        raise NonSimplicialMapError(f"images {bad.tolist()[:5]} are not codomain vertices")
    witness = _first_non_simplex(images, dom, cod)
    if witness is not None:
        raise NonSimplicialMapError(
            f"image of {witness} is not a simplex of the codomain", witness
        )
    return SimplicialMap(domain, codomain, images)


def identity_map(space) -> SimplicialMap:
    dom = _complex_of(space)
    return SimplicialMap(space, space, dom.vertices.copy())


def compose(f: SimplicialMap, g: SimplicialMap) -> SimplicialMap:
    """Return ``f ∘ g``; requires ``codomain(g)`` to be ``domain(f)``."""
    if not same_space(g.codomain, f.domain):
        raise DomainMismatchError("codomain of the inner map is not the outer domain")
    images = f.vertex_images[f.domain_complex.index_of_vertex(g.vertex_images)]
    return build_simplicial_map(images, g.domain, f.codomain)


def is_triangular(F, P) -> tuple[bool, Simplex | None]:
    """Exact triangularity of ``F`` over the control ``P``.

    Both arguments expose ``domain`` and ``image(simplex)``; ``P`` may be a
    simplicial map or a carrier map of a subdivision.  The check is that the
    image of every domain simplex under ``F`` is a face of its image under
    ``P``.  Returns ``(True, None)`` or ``(False, witness)`` where the
    witness is the first offending simplex in dimension order.
    """
    if not same_space(F.domain, P.domain):
        raise DomainMismatchError("F and its control do not share a domain")
    if hasattr(F, "codomain") and hasattr(P, "codomain"):
        if not same_space(F.codomain, P.codomain):
            raise DomainMismatchError("F and its control have different targets")
    dom = _complex_of(F.domain)
    for s in dom.simplices():
        if not set(F.image(s)) <= set(P.image(s)):
            return False, s
    return True, None
