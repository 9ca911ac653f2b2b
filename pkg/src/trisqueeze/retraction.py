"""Retractions of deep subdivisions onto a complex, with their homotopies.

``r = r_1 ∘ … ∘ r_i : Sd^i X → X`` is built stage by stage.  ``r_1`` sends a
barycentre to a vertex of its simplex; every later stage sends a vertex of
``Sd^j X`` to the vertex of its parent simplex lying closest to the boundary
face picked out by the carrier in ``Sd X``.  Away from a small dual cell
around each barycentre the composite pushes everything into the boundary,
which is what makes ``r`` retract small neighbourhoods of each simplex back
onto it.

``X`` may itself be a subdivision record; then ``Sd X`` means one level
below ``X`` and all distances are measured in the base of ``X``.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from .complex_core import SimplicialMap, build_simplicial_map, compose, identity_map, is_triangular
from .geometry import (
    HULL_TOL,
    MetricContext,
    comesh,
    distance_to_boundary,
    distance_to_simplex,
    hull_distance,
    mesh,
)
from .homotopy import HomotopyChain, StraightLine, constant_homotopy, pl_eval
from .sampling import grid_weights, random_weights
from .subdivision import (
    DEFAULT_BUDGET,
    CarrierMap,
    SubdivisionRecord,
    as_record,
    image_support,
    iterate_subdivide,
)

DEPTH_MARGIN = 1e-9
TIE_TOL = 1e-12
CHECK_TOL = 1e-12
DELTA = 1e-7


class DepthError(ValueError):
    """Requested depth or epsilon outside the admissible range."""


# ------------------------------------------------------------------ stages


def build_r1(X, vertex_choice: Callable[[tuple], int] | None = None,
             budget: int = DEFAULT_BUDGET) -> SimplicialMap:
    """``r_1 : Sd X → X``: each barycentre goes to a vertex of its simplex.

    The default choice is the smallest vertex id.
    """
    rec = as_record(X)
    child = rec.subdivide(budget)
    K = rec.complex
    images = np.empty(len(child.complex.vertices), dtype=np.int64)
    for n, (d, r) in enumerate(zip(child.label_dim.tolist(), child.label_row.tolist())):
        label = tuple(K.rows(d)[r].tolist())
        v = label[0] if vertex_choice is None else vertex_choice(label)
        if v not in label:
            raise ValueError(f"vertex_choice sent {label} to {v}, which is not one of its vertices")
        images[n] = v
    return build_simplicial_map(images, child, rec)


def build_rj(X, j: int, budget: int = DEFAULT_BUDGET) -> SimplicialMap:
    """``r_j : Sd^j X → Sd^(j-1) X`` for ``j >= 2``.

    For a vertex τ̂, let ``ρ = σ̂_0 … σ̂_n`` be the simplex of ``Sd X`` whose
    interior holds the interior of τ.  If ``n = 0`` the vertex is fixed;
    otherwise it goes to the vertex of τ nearest to the face
    ``σ̂_0 … σ̂_(n-1)``, ties to the smallest id.  All the points involved lie
    in the closed simplex σ_n of ``X``, so distances are exact chords.
    """
    if j < 2:
        raise ValueError("build_rj needs j >= 2; use build_r1 for the first stage")
    rec = as_record(X)
    m = rec.level
    top = iterate_subdivide(rec, j, budget)
    parent = top.parent
    sd1 = rec.subdivide(budget)
    P = parent.complex
    carriers = parent.vertex_carriers(m + 1)
    sd1_index = sd1.complex.index_of_vertex
    images = np.empty(len(top.complex.vertices), dtype=np.int64)
    for n, (d, r) in enumerate(zip(top.label_dim.tolist(), top.label_row.tolist())):
        tau = P.rows(d)[r]
        if d == 0:
            images[n] = tau[0]
            continue
        rho: set[int] = set()
        for i in P.index_of_vertex(tau).tolist():
            rho.update(carriers[i])
        rho_ids = np.array(sorted(rho))
        if len(rho_ids) == 1:
            # τ lies inside a vertex of Sd X, so it is that vertex
            images[n] = rho_ids[0]
            continue
        dims = sd1.label_dim[sd1_index(rho_ids)]
        face = rho_ids[dims != dims.max()]
        face_pos = sd1.positions[sd1_index(face)]
        cand_pos = parent.positions[P.index_of_vertex(tau)]
        dist = hull_distance(cand_pos, face_pos)
        best = dist.min()
        ties = np.flatnonzero(dist <= best + TIE_TOL)
        images[n] = tau[ties].min()
    return build_simplicial_map(images, top, parent)


# ------------------------------------------------------------------- depth


@dataclass(frozen=True)
class DepthInfo:
    depth: int
    threshold: float
    meshes: tuple
    bound: int


def depth_bound(X, eps: float) -> int:
    """Depth guaranteed by the contraction ``mesh(Sd^j) <= (n/(n+1))^j mesh``."""
    rec = as_record(X)
    n = rec.complex.dim
    target = comesh(rec) - eps - DEPTH_MARGIN
    m0 = mesh(rec)
    if m0 < target:
        return 0
    if n == 0:
        return 0
    # mesh of the base may be measured in a coarser base, so use the
    # base dimension's contraction as well as this complex's
    ratio = max(n, rec.base.dim) / (max(n, rec.base.dim) + 1)
    return max(0, math.ceil(math.log(target / m0) / math.log(ratio)))


def subdivision_depth(X, eps: float, budget: int = DEFAULT_BUDGET, info: bool = False):
    """Smallest ``i`` with measured ``mesh(Sd^i X) < comesh(X) - eps``.

    The comparison keeps a margin of ``1e-9`` so that equality in exact
    arithmetic never counts as strict.
    """
    rec = as_record(X)
    if rec.complex.dim == 0:
        if info:
            return DepthInfo(0, math.inf, (), 0)
        return 0
    c = comesh(rec)
    if not 0 < eps < c:
        raise DepthError(f"epsilon must lie in (0, comesh(X)) = (0, {c!r}); got {eps!r}")
    threshold = c - eps
    bound = depth_bound(rec, eps)
    meshes = []
    cur = rec
    i = 0
    while True:
        m_i = mesh(cur)
        meshes.append(m_i)
        if m_i < threshold - DEPTH_MARGIN:
            break
        if i >= bound + 1:
            raise RuntimeError("measured mesh did not contract as the bound promises")
        cur = cur.subdivide(budget)
        i += 1
    if info:
        return DepthInfo(i, threshold, tuple(meshes), bound)
    return i


# ------------------------------------------------------------------ bundle


@dataclass
class RetractionBundle:
    """``r : Sd^depth X → X`` with its stages and a homotopy ``P : id ≃ r``."""

    base: SubdivisionRecord
    epsilon: float | None
    depth: int
    stages: list
    r: SimplicialMap
    P: HomotopyChain
    records: list = field(repr=False, default_factory=list)

    @property
    def top(self) -> SubdivisionRecord:
        return self.records[-1]


def build_retraction(X, eps: float | None = None, i: int | None = None,
                     vertex_choice=None, budget: int = DEFAULT_BUDGET) -> RetractionBundle:
    """Build the stages, their composite and the concatenated homotopy.

    Time runs through the straight-line pieces ``P_i, P_(i-1)(r_i), …,
    P_1(r_2 ∘ … ∘ r_i)`` in that order, so ``P(·, 0)`` is the identity and
    ``P(·, 1)`` is ``r``.
    """
    rec = as_record(X)
    if rec.complex.dim == 0:
        depth = 0 if i is None else i
        top = iterate_subdivide(rec, depth, budget)
        ident = identity_map(top)
        P = HomotopyChain([constant_homotopy(ident, top, label="P_const")], label="P")
        records = [iterate_subdivide(rec, k, budget) for k in range(depth + 1)]
        stages = [identity_map(records[k]) for k in range(1, depth + 1)]
        r = _compose_stages(stages) if stages else ident
        return RetractionBundle(rec, eps, depth, stages, r, P, records)
    if eps is None and i is None:
        raise DepthError("give epsilon, depth, or both")
    if eps is not None:
        need = subdivision_depth(rec, eps, budget)
        if i is None:
            i = need
        elif i < need:
            raise DepthError(f"depth {i} is below the required minimum {need}")
    if i < 1:
        raise DepthError("depth must be at least 1")
    records = [iterate_subdivide(rec, k, budget) for k in range(i + 1)]
    stages = [build_r1(rec, vertex_choice, budget)]
    stages += [build_rj(rec, j, budget) for j in range(2, i + 1)]
    top = records[-1]
    # tails[k] = r_(k+1) ∘ … ∘ r_i : Sd^i X → Sd^k X
    tails = {i: identity_map(top)}
    for k in range(i - 1, -1, -1):
        tails[k] = compose(stages[k], tails[k + 1])
    pieces = [StraightLine(tails[k], tails[k - 1], top, label=f"P_{k}")
              for k in range(i, 0, -1)]
    P = HomotopyChain(pieces, label="P")
    return RetractionBundle(rec, eps, i, stages, tails[0], P, records)


def _compose_stages(stages):
    out = stages[0]
    for s in stages[1:]:
        out = compose(out, s)
    return out


def eval_homotopy(bundle: RetractionBundle, x, t: float):
    from .homotopy import eval_homotopy as _eval

    return _eval(bundle.P, x, t, source=bundle.base.ancestor(0))


# ------------------------------------------------------------ verification


@dataclass
class Tally:
    passed: int = 0
    failed: int = 0
    unknown: int = 0
    exempt: bool = False
    witnesses: list = field(default_factory=list)
    note: str = ""

    def add(self, passed: int = 0, failed: int = 0, unknown: int = 0, witnesses=()):
        self.passed += int(passed)
        self.failed += int(failed)
        self.unknown += int(unknown)
        for w in witnesses:
            if len(self.witnesses) < 5:
                self.witnesses.append(w)

    @property
    def total(self) -> int:
        return self.passed + self.failed + self.unknown

    def line(self, name: str) -> str:
        status = "EXEMPT" if self.exempt else ("FAIL" if self.failed else "PASS")
        text = f"{name}: {status} pass={self.passed} fail={self.failed} unknown={self.unknown}"
        if self.note:
            text += f" ({self.note})"
        if self.witnesses:
            text += " witnesses=" + "; ".join(map(str, self.witnesses))
        return text

    def as_dict(self) -> dict:
        return {"pass": self.passed, "fail": self.failed, "unknown": self.unknown,
                "exempt": self.exempt, "note": self.note,
                "witnesses": [str(w) for w in self.witnesses]}


@dataclass
class Report:
    """Named tallies with a deterministic text rendering."""

    title: str
    checks: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    def tally(self, name: str) -> Tally:
        return self.checks.setdefault(name, Tally())

    @property
    def ok(self) -> bool:
        return all(t.failed == 0 for t in self.checks.values() if not t.exempt)

    @property
    def unknown_fraction(self) -> float:
        total = sum(t.total for t in self.checks.values())
        return sum(t.unknown for t in self.checks.values()) / total if total else 0.0

    def text(self) -> str:
        lines = [f"{self.title}: {'PASS' if self.ok else 'FAIL'}"]
        for k, v in self.info.items():
            lines.append(f"  {k} = {_fmt(v)}")
        for name, t in self.checks.items():
            lines.append("  " + t.line(name))
        return "\n".join(lines) + "\n"

    def as_dict(self) -> dict:
        return {"title": self.title, "ok": self.ok,
                "info": {k: _jsonable(v) for k, v in self.info.items()},
                "checks": {k: v.as_dict() for k, v in self.checks.items()}}


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _jsonable(v):
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    return v


def verification_points(base, n: int, rng: np.random.Generator, resolution: int = 6) -> np.ndarray:
    """Points spread over every maximal simplex of ``base``.

    A grid, uniform points, and points from a low-concentration Dirichlet
    (which crowd towards faces, where the neighbourhood checks bite).
    """
    nv = len(base.vertices)
    tops = [row for rows in base.maximal_rows() for row in rows]
    per = max(1, n // len(tops))
    chunks = []
    for row in tops:
        w = len(row)
        corners = np.eye(nv)[base.index_of_vertex(row)]
        weights = [grid_weights(w, resolution), random_weights(w, per // 2, rng)]
        if w > 1:
            weights.append(rng.dirichlet(np.full(w, 0.3), size=per - per // 2))
        else:
            weights.append(np.ones((per - per // 2, 1)))
        chunks.append(np.concatenate(weights) @ corners)
    return np.concatenate(chunks)


def _simplices_of(K):
    return [tuple(row.tolist()) for d in range(K.dim + 1) for row in K.rows(d)]


def _support_in(mask: np.ndarray, allowed_idx: np.ndarray) -> np.ndarray:
    outside = mask.copy()
    outside[:, allowed_idx] = False
    return ~outside.any(axis=1)


def _epsilon_grid(eps: float, n: int = 8) -> np.ndarray:
    return np.linspace(0.0, eps, n)


def verify_retraction(bundle: RetractionBundle, eps: float | None = None, samples: int = 10_000,
                      seed: int = 0, time_steps: int = 8, delta: float = DELTA) -> Report:
    """Check the retraction properties; counts pass, fail and unknown per check.

    * ``face_condition``: every stage and ``r`` send each simplex into the
      carrier of the simplex (exact).
    * ``retract_nbhd``: points within ``eps`` of a simplex σ are sent into σ
      (sampled; distances as exact-or-bounded intervals).
    * ``homotopy_nbhd``: the homotopy keeps ``eps'``-neighbourhoods of each σ
      inside themselves for ``eps'`` on a grid of ``[0, eps]`` (sampled).
    * ``monotone_vertices`` / ``monotone_samples``: stages ``j >= 2`` move no
      point further from the boundary of a simplex containing it; stage 1
      is exempt.
    * ``dual_cell``: a top simplex mapped onto σ contains the vertex σ̂.
    * ``middle``: the dual cell of σ̂ stays outside ``N_eps(∂σ)``.
    """
    eps = bundle.epsilon if eps is None else eps
    X = bundle.base
    K = X.complex
    m = X.level
    report = Report("retraction")
    report.info.update(depth=bundle.depth, epsilon=eps if eps is not None else float("nan"),
                       samples=samples, seed=seed)
    if K.dim == 0:
        report.tally("vacuous").add(passed=1)
        return report
    rng = np.random.default_rng(seed)
    ctx = MetricContext(X.base)
    top = bundle.top

    # combinatorial face conditions
    t = report.tally("face_condition")
    for j, stage in enumerate(bundle.stages, start=1):
        rec_j = bundle.records[j]
        ok, w = is_triangular(stage, CarrierMap(rec_j, rec_j.parent))
        t.add(passed=ok, failed=not ok, witnesses=[] if ok else [(f"r_{j}", w)])
    ok, w = is_triangular(bundle.r, CarrierMap(top, X))
    t.add(passed=ok, failed=not ok, witnesses=[] if ok else [("r", w)])

    simplices = _simplices_of(K)
    pts = verification_points(X.base, samples, rng)
    r_support = image_support(bundle.r, pts)

    # retraction of neighbourhoods
    if eps is not None:
        t = report.tally("retract_nbhd")
        for s in simplices:
            lo, up = distance_to_simplex(pts, s, X, ctx)
            inside = up < eps
            unknown = ~inside & ~(lo > eps)
            good = _support_in(r_support, K.index_of_vertex(list(s)))
            bad = inside & ~good
            t.add(passed=(inside & good).sum(), failed=bad.sum(), unknown=unknown.sum(),
                  witnesses=[(s, pts[k].round(6).tolist()) for k in np.flatnonzero(bad)[:2]])

        # homotopy keeps neighbourhoods
        t = report.tally("homotopy_nbhd")
        times = np.linspace(0.0, 1.0, time_steps * len(bundle.P) + 1)
        grid = _epsilon_grid(eps)[1:]
        traj = np.stack([bundle.P.evaluate(pts, tt) for tt in times])
        for s in simplices:
            lo0, up0 = distance_to_simplex(pts, s, X, ctx)
            flat = traj.reshape(-1, traj.shape[-1])
            lo_t, up_t = distance_to_simplex(flat, s, X, ctx)
            lo_t = lo_t.reshape(len(times), -1)
            up_t = up_t.reshape(len(times), -1)
            worst_up = up_t.max(axis=0)
            worst_lo = lo_t.max(axis=0)
            for e in grid:
                premise = up0 < e - delta
                passed = premise & (worst_up < e)
                failed = premise & (worst_lo >= e)
                t.add(passed=passed.sum(), failed=failed.sum(),
                      unknown=(premise & ~passed & ~failed).sum(),
                      witnesses=[(s, float(e), pts[k].round(6).tolist()) for k in np.flatnonzero(failed)[:1]])

    # boundary monotonicity of stages j >= 2
    t_vert = report.tally("monotone_vertices")
    t_samp = report.tally("monotone_samples")
    if bundle.depth < 2:
        t_vert.exempt = t_samp.exempt = True
        t_vert.note = t_samp.note = "only stage 1 present"
    else:
        t_vert.note = t_samp.note = "stage 1 exempt"
    for j in range(2, bundle.depth + 1):
        stage = bundle.stages[j - 1]
        rec_j = bundle.records[j]
        vpos = rec_j.positions
        vimg = pl_eval(stage, vpos)
        vcar = rec_j.vertex_carriers(m)
        spos = verification_points(X.base, max(1, samples // 10), rng)
        simg = pl_eval(stage, spos)
        for s in simplices:
            if len(s) == 1:
                continue
            sset = set(s)
            sel = np.array([set(c) <= sset for c in vcar])
            if sel.any():
                before = distance_to_boundary(vpos[sel], s, X)
                after = distance_to_boundary(vimg[sel], s, X)
                bad = after > before + CHECK_TOL
                ids = rec_j.complex.vertices[sel]
                t_vert.add(passed=(~bad).sum(), failed=bad.sum(),
                           witnesses=[(f"r_{j}", s, int(v)) for v in ids[bad][:2]])
            in_s = _points_in(spos, s, X, ctx)
            if in_s.any():
                before = distance_to_boundary(spos[in_s], s, X)
                after = distance_to_boundary(simg[in_s], s, X)
                bad = after > before + 1e-9
                t_samp.add(passed=(~bad).sum(), failed=bad.sum(),
                           witnesses=[(f"r_{j}", s) for _ in range(int(bad.any()))])

    # onto simplices live in the dual cell of the barycentre
    t = report.tally("dual_cell")
    onto_counts = {}
    sd1 = bundle.records[1]
    top_carriers = None
    for s in simplices:
        if len(s) == 1:
            continue
        rows = top.complex.rows(len(s) - 1)
        if top_carriers is None or top_carriers[0] != len(s):
            vcar = top.vertex_carriers(m)
            top_carriers = (len(s), vcar)
        vcar = top_carriers[1]
        idx = top.complex.index_of_vertex(rows)
        sset = set(s)
        hat = sd1.barycentre_id(s)
        onto = 0
        for row, ix in zip(rows, idx):
            car: set[int] = set()
            for q in ix.tolist():
                car.update(vcar[q])
            if car != sset:
                continue
            if set(bundle.r.image(row.tolist())) == sset:
                onto += 1
                if hat in row:
                    t.add(passed=1)
                else:
                    t.add(failed=1, witnesses=[(s, tuple(row.tolist()))])
        onto_counts[s] = onto
    report.info["onto_top_simplices"] = [f"{s}:{c}" for s, c in onto_counts.items()]

    # the dual cell of the barycentre avoids the eps-collar of the boundary
    if eps is not None:
        t = report.tally("middle")
        below = bundle.records[bundle.depth - 1]
        for s in simplices:
            if len(s) == 1:
                continue
            pos = _dual_cell_positions(s, bundle, below)
            d = distance_to_boundary(pos, s, X)
            bad = d < eps
            t.add(passed=(~bad).sum(), failed=bad.sum(),
                  witnesses=[(s, float(d.min()))] if bad.any() else [])
    return report


def _points_in(points, s, X, ctx) -> np.ndarray:
    lo, _ = distance_to_simplex(points, s, X, ctx)
    return lo <= HULL_TOL


def _dual_cell_positions(s, bundle: RetractionBundle, below: SubdivisionRecord) -> np.ndarray:
    """Positions of the vertices of ``D(σ̂, Sd^(i-1) σ)`` inside ``Sd^i``.

    These are barycentres of the simplices of ``Sd^(i-1) σ`` having σ̂ as
    a vertex; at depth 1 the cell is the single vertex σ̂.
    """
    X = bundle.base
    hat_pos = X.positions[X.complex.index_of_vertex(list(s))].mean(axis=0)
    if bundle.depth == 1:
        return hat_pos[None, :]
    hat = bundle.records[1].barycentre_id(s)
    L = below.complex
    vcar = below.vertex_carriers(X.level)
    sset = set(s)
    out = []
    for d in range(L.dim + 1):
        rows = L.rows(d)
        rows = rows[(rows == hat).any(axis=1)]
        for row in rows:
            idx = L.index_of_vertex(row)
            car: set[int] = set()
            for q in idx.tolist():
                car.update(vcar[q])
            if car <= sset:
                out.append(below.positions[idx].mean(axis=0))
    return np.array(out)


__all__ = [
    "DepthError",
    "DepthInfo",
    "Report",
    "RetractionBundle",
    "Tally",
    "build_r1",
    "build_retraction",
    "build_rj",
    "depth_bound",
    "eval_homotopy",
    "subdivision_depth",
    "verification_points",
    "verify_retraction",
]
