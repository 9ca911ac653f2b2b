"""PL maps as evaluators and homotopies as chains of straight-line segments.

Every map here acts on dense base coordinates: ``evaluate`` takes an
``(N, V_dom)`` array of points of the domain's base complex and returns an
``(N, V_cod)`` array in the codomain's base.  Simplicial maps out of a
subdivision are evaluated by point location, so maps defined on different
subdivisions of the same space compose freely.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .complex_core import SimplicialMap
from .geometry import MetricContext
from .subdivision import (
    SUPPORT_TOL,
    PointInComplex,
    SubdivisionRecord,
    as_record,
    evaluate,
    to_base,
)

ENDPOINT_TOL = 1e-12


class CarrierConditionError(RuntimeError):
    """A straight-line segment whose endpoints leave a common simplex."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class Identity:
    """The identity of a space, with the space's own record as domain."""

    def __init__(self, space):
        self.domain = as_record(space)
        self.codomain = self.domain.ancestor(0)

    def evaluate(self, points):
        return np.asarray(points, dtype=float)

    def __repr__(self):
        return f"Identity(level={self.domain.level})"


class Composed:
    """``maps[0] ∘ maps[1] ∘ …`` evaluated right to left."""

    def __init__(self, *maps):
        if not maps:
            raise ValueError("nothing to compose")
        self.maps = maps
        self.domain = as_record(maps[-1].domain)
        self.codomain = as_record(maps[0].codomain)

    def evaluate(self, points):
        out = np.asarray(points, dtype=float)
        for m in reversed(self.maps):
            out = evaluate(m, out)
        return out

    def __repr__(self):
        return "Composed(" + ", ".join(map(repr, self.maps)) + ")"


def pl_eval(f, points) -> np.ndarray:
    """Evaluate any supported map on dense base coordinates."""
    if f is None:
        return np.asarray(points, dtype=float)
    return evaluate(f, np.atleast_2d(points))


def _share_simplex(codomain: SubdivisionRecord, supports: np.ndarray) -> np.ndarray:
    return _context(codomain).share_simplex(supports)


def _context(rec: SubdivisionRecord) -> MetricContext:
    ctx = rec.base.__dict__.get("_metric_ctx")
    if ctx is None:
        ctx = MetricContext(rec.base)
        rec.base.__dict__["_metric_ctx"] = ctx
    return ctx


def segment_carrier_witness(a, b, domain: SubdivisionRecord):
    """A simplex of ``domain`` on which ``a`` and ``b`` leave a common simplex.

    For simplicial ``a`` and ``b`` defined on ``domain`` or a coarser level
    of its base, both are affine on every simplex of ``domain``, so the test
    runs exactly over maximal simplices: if the images of all vertices of a
    simplex lie in one closed base simplex, so do ``a(x)`` and ``b(x)`` for
    every ``x`` in it.  Other maps are tested at the domain vertices only.
    Returns ``None`` when clean.
    """
    cod = as_record(a.codomain)
    K = domain.complex
    if _affine_on(a, domain) and _affine_on(b, domain):
        pa = pl_eval(a, domain.positions) > SUPPORT_TOL
        pb = pl_eval(b, domain.positions) > SUPPORT_TOL
        for rows in K.maximal_rows():
            if rows.shape[0] == 0:
                continue
            idx = K.index_of_vertex(rows)
            sup = pa[idx].any(axis=1) | pb[idx].any(axis=1)
            bad = ~_share_simplex(cod, sup)
            if bad.any():
                return tuple(rows[np.argmax(bad)].tolist())
        return None
    pts = domain.positions
    sup = (pl_eval(a, pts) > SUPPORT_TOL) | (pl_eval(b, pts) > SUPPORT_TOL)
    bad = ~_share_simplex(cod, sup)
    if bad.any():
        return (int(K.vertices[np.argmax(bad)]),)
    return None


def _affine_on(f, domain: SubdivisionRecord) -> bool:
    if not isinstance(f, SimplicialMap):
        return False
    rec = as_record(f.domain)
    return rec.level <= domain.level and rec.base == domain.base and domain.ancestor(rec.level) is rec


class Homotopy:
    """Common interface: ``evaluate(points, t)`` with ``t`` scalar or per point."""

    domain: SubdivisionRecord
    codomain: SubdivisionRecord

    def evaluate(self, points, t):
        raise NotImplementedError

    def start(self, points):
        return self.evaluate(points, 0.0)

    def end(self, points):
        return self.evaluate(points, 1.0)

    def segments(self) -> list["Homotopy"]:
        return [self]


@dataclass
class StraightLine(Homotopy):
    """``(1 - t) a(x) + t b(x)`` inside the common closed simplex."""

    a: object
    b: object
    domain: SubdivisionRecord = None
    label: str = ""
    check: bool = True

    def __post_init__(self):
        self.domain = as_record(self.domain if self.domain is not None else self.a.domain)
        self.codomain = as_record(self.a.codomain).ancestor(0)
        if self.check:
            w = segment_carrier_witness(self.a, self.b, self.domain)
            if w is not None:
                raise CarrierConditionError(
                    f"segment {self.label or '?'}: endpoints leave a common simplex on {w}", w)

    def evaluate(self, points, t):
        pa = pl_eval(self.a, points)
        pb = pl_eval(self.b, points)
        t = np.broadcast_to(np.asarray(t, dtype=float), (len(pa),))[:, None]
        return (1.0 - t) * pa + t * pb

    def __repr__(self):
        return f"StraightLine({self.label or id(self)})"


@dataclass
class Composite(Homotopy):
    """``post ∘ H(pre(·), t)``; ``pre``/``post`` may be ``None`` (identity)."""

    H: Homotopy
    post: object = None
    pre: object = None
    label: str = ""

    def __post_init__(self):
        self.domain = as_record(self.pre.domain) if self.pre is not None else self.H.domain
        self.codomain = (as_record(self.post.codomain) if self.post is not None else self.H.codomain).ancestor(0)

    def evaluate(self, points, t):
        x = pl_eval(self.pre, points)
        return pl_eval(self.post, self.H.evaluate(x, t))


@dataclass
class Reversed(Homotopy):
    H: Homotopy
    label: str = ""

    def __post_init__(self):
        self.domain = self.H.domain
        self.codomain = self.H.codomain

    def evaluate(self, points, t):
        return self.H.evaluate(points, 1.0 - np.asarray(t, dtype=float))


@dataclass
class HomotopyChain(Homotopy):
    """Concatenation of homotopies, time split uniformly over the pieces."""

    pieces: list = field(default_factory=list)
    label: str = ""

    def __post_init__(self):
        if not self.pieces:
            raise ValueError("a homotopy chain needs at least one piece")
        self.domain = self.pieces[0].domain
        self.codomain = self.pieces[0].codomain

    def __len__(self):
        return len(self.pieces)

    def locate_time(self, t):
        """Piece index and local time for global times ``t``."""
        n = len(self.pieces)
        t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
        k = np.minimum(np.floor(t * n).astype(int), n - 1)
        return k, t * n - k

    def evaluate(self, points, t):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        tt = np.broadcast_to(np.asarray(t, dtype=float), (len(points),))
        k, s = self.locate_time(tt)
        out = None
        for j in np.unique(k):
            sel = k == j
            val = self.pieces[j].evaluate(points[sel], s[sel])
            if out is None:
                out = np.zeros((len(points), val.shape[1]))
            out[sel] = val
        return out

    def segments(self) -> list[Homotopy]:
        out = []
        for p in self.pieces:
            out.extend(p.segments() if isinstance(p, HomotopyChain) else [p])
        return out

    def junction_gaps(self, points) -> list[float]:
        """Max mismatch between the end of each piece and the start of the next."""
        gaps = []
        for p, q in zip(self.pieces, self.pieces[1:]):
            gaps.append(float(np.abs(p.end(points) - q.start(points)).max()))
        return gaps


def constant_homotopy(f, domain=None, label: str = "") -> StraightLine:
    return StraightLine(f, f, domain, label=label, check=False)


def straight_line_chain(a, b, domain=None, label: str = "") -> HomotopyChain:
    """A one-segment chain from ``a`` to ``b``; refuses if the carrier condition fails."""
    return HomotopyChain([StraightLine(a, b, domain, label=label)], label=label)


def to_point(vec: np.ndarray, record: SubdivisionRecord) -> PointInComplex:
    """Canonical point of the base of ``record`` from dense coordinates."""
    base_ids = record.base.vertices
    return PointInComplex.make(base_ids.tolist(), np.asarray(vec, dtype=float).tolist())


def eval_homotopy(H: Homotopy, x: PointInComplex, t: float,
                  source: SubdivisionRecord | None = None) -> PointInComplex:
    """Evaluate ``H`` at one point and time; the result is a base point of the codomain."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    src = source if source is not None else H.domain.ancestor(0)
    vec = to_base(x, src)[None, :]
    if isinstance(H, HomotopyChain):
        k, s = H.locate_time(np.array([t]))
        seg = H.pieces[int(k[0])]
        if isinstance(seg, StraightLine):
            w = segment_carrier_witness_at(seg, vec)
            if w:
                raise CarrierConditionError("carrier condition violated at the query point", x)
    return to_point(H.evaluate(vec, t)[0], H.codomain)


def segment_carrier_witness_at(seg: StraightLine, points: np.ndarray) -> bool:
    sup = (pl_eval(seg.a, points) > SUPPORT_TOL) | (pl_eval(seg.b, points) > SUPPORT_TOL)
    return bool((~_share_simplex(seg.codomain, sup)).any())


__all__ = [
    "CarrierConditionError",
    "Composed",
    "Composite",
    "Homotopy",
    "HomotopyChain",
    "Identity",
    "Reversed",
    "StraightLine",
    "constant_homotopy",
    "eval_homotopy",
    "pl_eval",
    "segment_carrier_witness",
    "straight_line_chain",
    "to_point",
]
