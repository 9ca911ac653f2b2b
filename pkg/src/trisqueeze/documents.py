"""One versioned JSON document for complexes, maps, chains and equivalences.

Layout::

    {
      "format_version": "1",
      "vertices": [0, 1, 2],
      "layout": {"0": [0.0, 0.0], ...},            # optional
      "maximal_simplices": [[0, 1, 2]],
      "maps": {                                    # optional
        "f": {"domain": "self", "domain_level": 2,
              "codomain": "self", "codomain_level": 0,
              "images": {"0": 0, ...}},
        "fg": {"compose": ["f", "g"]},
        "id": {"identity": "self", "level": 0}
      },
      "chains": {"h1": {"segments": [["fg", "id"]]}},  # optional
      "equivalence": {"f": "f", "g": "g", "h1": "h1", "h2": "h2"}  # optional
    }

A ``domain``/``codomain`` is ``"self"`` (the document's complex) or an
inline ``{"vertices": ..., "maximal_simplices": ...}`` object, taken at the
given subdivision level.  Unknown fields are rejected with their location.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .complex_core import (
    SimplicialComplex,
    SimplicialMap,
    build_complex,
    build_simplicial_map,
    compose,
    identity_map,
)
from .homotopy import HomotopyChain, StraightLine
from .subdivision import SubdivisionRecord, as_record, iterate_subdivide

FORMAT_VERSION = "1"

TOP_FIELDS = {"format_version", "vertices", "layout", "maximal_simplices", "maps", "chains",
              "equivalence"}
INLINE_FIELDS = {"vertices", "maximal_simplices"}
MAP_FIELDS = {"domain", "domain_level", "codomain", "codomain_level", "images", "compose",
              "identity", "level"}
CHAIN_FIELDS = {"segments"}
EQUIV_FIELDS = {"f", "g", "h1", "h2", "epsilon", "x_control"}


class DocumentError(ValueError):
    """Malformed document; ``location`` is a JSON path or ``line:column``."""

    def __init__(self, message: str, location: str = "$"):
        super().__init__(f"{location}: {message}")
        self.location = location


def _expect(cond: bool, message: str, location: str):
    if not cond:
        raise DocumentError(message, location)


def _check_fields(obj, allowed: set, location: str, required: set = frozenset()):
    _expect(isinstance(obj, dict), "expected an object", location)
    for key in obj:
        _expect(key in allowed, f"unknown field {key!r}", f"{location}.{key}")
    for key in required:
        _expect(key in obj, f"missing field {key!r}", location)


def _int(v, location: str) -> int:
    _expect(isinstance(v, int) and not isinstance(v, bool) and v >= 0,
            "expected a non-negative integer", location)
    return v


def _canonical_complex(obj, location: str) -> dict:
    verts = obj.get("vertices")
    _expect(isinstance(verts, list), "vertices must be a list", f"{location}.vertices")
    verts = [_int(v, f"{location}.vertices[{n}]") for n, v in enumerate(verts)]
    _expect(len(set(verts)) == len(verts), "duplicate vertex id", f"{location}.vertices")
    tops = obj.get("maximal_simplices")
    _expect(isinstance(tops, list) and tops, "maximal_simplices must be a non-empty list",
            f"{location}.maximal_simplices")
    seen = set()
    canon = []
    for n, s in enumerate(tops):
        loc = f"{location}.maximal_simplices[{n}]"
        _expect(isinstance(s, list) and s, "expected a non-empty list of vertex ids", loc)
        ids = [_int(v, f"{loc}[{j}]") for j, v in enumerate(s)]
        _expect(len(set(ids)) == len(ids), "repeated vertex inside a simplex", loc)
        for v in ids:
            _expect(v in verts, f"vertex {v} is not declared", loc)
        key = tuple(sorted(ids))
        _expect(key not in seen, f"duplicate maximal simplex {list(key)}", loc)
        seen.add(key)
        canon.append(list(key))
    covered = {v for s in canon for v in s}
    _expect(covered == set(verts), "every vertex must lie in a listed simplex", f"{location}.vertices")
    return {"vertices": sorted(verts), "maximal_simplices": sorted(canon)}


@dataclass
class ComplexDocument:
    """Parsed, canonicalised document.  Equality is equality of content."""

    vertices: list
    maximal_simplices: list
    layout: dict | None = None
    maps: dict = field(default_factory=dict)
    chains: dict = field(default_factory=dict)
    equivalence: dict | None = None
    format_version: str = FORMAT_VERSION

    def __post_init__(self):
        self._complexes: dict = {}
        self._maps: dict = {}

    def __eq__(self, other):
        return isinstance(other, ComplexDocument) and self.to_dict() == other.to_dict()

    # -- serialisation

    def to_dict(self) -> dict:
        out: dict[str, Any] = {
            "format_version": self.format_version,
            "vertices": list(self.vertices),
            "maximal_simplices": [list(s) for s in self.maximal_simplices],
        }
        if self.layout is not None:
            out["layout"] = {str(k): list(v) for k, v in sorted(self.layout.items())}
        if self.maps:
            out["maps"] = self.maps
        if self.chains:
            out["chains"] = self.chains
        if self.equivalence is not None:
            out["equivalence"] = self.equivalence
        return out

    # -- construction of library objects

    def complex(self) -> SimplicialComplex:
        return self._complex_for({"vertices": self.vertices,
                                  "maximal_simplices": self.maximal_simplices})

    def _complex_for(self, entry: dict) -> SimplicialComplex:
        key = json.dumps(entry, sort_keys=True)
        if key not in self._complexes:
            K = build_complex([tuple(s) for s in entry["maximal_simplices"]])
            self._complexes[key] = K
        return self._complexes[key]

    def space(self, which, level: int) -> SubdivisionRecord:
        entry = ({"vertices": self.vertices, "maximal_simplices": self.maximal_simplices}
                if which == "self" else which)
        return iterate_subdivide(self._complex_for(entry), level)

    def layout_array(self) -> np.ndarray | None:
        """Layout coordinates aligned with the sorted vertices, if given."""
        if self.layout is None:
            return None
        return np.array([self.layout[v] for v in sorted(self.vertices)], dtype=float)

    def map(self, name: str) -> SimplicialMap:
        if name not in self._maps:
            if name not in self.maps:
                raise DocumentError(f"no map named {name!r}", "$.maps")
            entry = self.maps[name]
            loc = f"$.maps.{name}"
            if "compose" in entry:
                parts = [self.map(n) for n in entry["compose"]]
                out = parts[-1]
                for p in reversed(parts[:-1]):
                    out = compose(p, out)
            elif "identity" in entry:
                out = identity_map(self.space(entry["identity"], entry.get("level", 0)))
            else:
                dom = self.space(entry["domain"], entry.get("domain_level", 0))
                cod = self.space(entry["codomain"], entry.get("codomain_level", 0))
                images = {int(k): int(v) for k, v in entry["images"].items()}
                missing = set(dom.complex.vertices.tolist()) - set(images)
                if missing:
                    raise DocumentError(f"vertices {sorted(missing)} have no image", loc)
                out = build_simplicial_map(images, dom, cod)
            self._maps[name] = out
        return self._maps[name]

    def map_names(self) -> list[str]:
        return sorted(self.maps)

    def chain(self, name: str) -> HomotopyChain:
        if name not in self.chains:
            raise DocumentError(f"no chain named {name!r}", "$.chains")
        pieces = []
        for n, (a, b) in enumerate(self.chains[name]["segments"]):
            fa, fb = self.map(a), self.map(b)
            pieces.append(StraightLine(fa, fb, as_record(fa.domain), label=f"{name}[{n}]"))
        return HomotopyChain(pieces, label=name)

    def equivalence_data(self):
        from .squeeze import EquivalenceData

        if self.equivalence is None:
            raise DocumentError("no equivalence section", "$")
        e = self.equivalence
        x_control = self.map(e["x_control"]) if "x_control" in e else None
        return EquivalenceData(self.map(e["f"]), self.map(e["g"]), self.chain(e["h1"]),
                               self.chain(e["h2"]), e.get("epsilon"), x_control)


def _parse_space_ref(v, location: str):
    if v == "self":
        return "self"
    _check_fields(v, INLINE_FIELDS, location, INLINE_FIELDS)
    return _canonical_complex(v, location)


def _parse_map(name: str, entry, location: str) -> dict:
    _check_fields(entry, MAP_FIELDS, location)
    kinds = [k for k in ("images", "compose", "identity") if k in entry]
    _expect(len(kinds) == 1, "a map needs exactly one of images, compose, identity", location)
    kind = kinds[0]
    if kind == "compose":
        names = entry["compose"]
        _expect(isinstance(names, list) and len(names) >= 2 and all(isinstance(n, str) for n in names),
                "compose takes a list of at least two map names", f"{location}.compose")
        _expect(set(entry) == {"compose"}, "compose takes no other fields", location)
        return {"compose": list(names)}
    if kind == "identity":
        _expect(set(entry) <= {"identity", "level"}, "identity takes only 'level'", location)
        out = {"identity": _parse_space_ref(entry["identity"], f"{location}.identity"),
               "level": _int(entry.get("level", 0), f"{location}.level")}
        return out
    _expect("level" not in entry, "unknown field 'level' for an images map", f"{location}.level")
    for key in ("domain", "codomain"):
        _expect(key in entry, f"missing field {key!r}", location)
    images = entry["images"]
    _expect(isinstance(images, dict), "images must be an object", f"{location}.images")
    canon = {}
    for k, v in images.items():
        _expect(k.isdigit(), "image keys must be vertex ids", f"{location}.images.{k}")
        canon[str(int(k))] = _int(v, f"{location}.images.{k}")
    return {
        "domain": _parse_space_ref(entry["domain"], f"{location}.domain"),
        "domain_level": _int(entry.get("domain_level", 0), f"{location}.domain_level"),
        "codomain": _parse_space_ref(entry["codomain"], f"{location}.codomain"),
        "codomain_level": _int(entry.get("codomain_level", 0), f"{location}.codomain_level"),
        "images": dict(sorted(canon.items(), key=lambda kv: int(kv[0]))),
    }


def document_from_dict(raw) -> ComplexDocument:
    _check_fields(raw, TOP_FIELDS, "$", {"format_version", "vertices", "maximal_simplices"})
    _expect(raw["format_version"] == FORMAT_VERSION,
            f"unsupported format_version {raw['format_version']!r}", "$.format_version")
    base = _canonical_complex(raw, "$")
    layout = None
    if "layout" in raw:
        lay = raw["layout"]
        _expect(isinstance(lay, dict), "layout must be an object", "$.layout")
        layout = {}
        dims = set()
        for k, v in lay.items():
            loc = f"$.layout.{k}"
            _expect(k.isdigit() and int(k) in base["vertices"], "layout key is not a vertex", loc)
            _expect(isinstance(v, list) and len(v) in (2, 3)
                    and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in v),
                    "expected 2 or 3 coordinates", loc)
            layout[int(k)] = [float(c) for c in v]
            dims.add(len(v))
        _expect(set(layout) == set(base["vertices"]), "layout must cover every vertex", "$.layout")
        _expect(len(dims) == 1, "mixed layout dimensions", "$.layout")
    maps = {}
    if "maps" in raw:
        _expect(isinstance(raw["maps"], dict), "maps must be an object", "$.maps")
        for name, entry in raw["maps"].items():
            maps[name] = _parse_map(name, entry, f"$.maps.{name}")
        for name, entry in maps.items():
            for ref in entry.get("compose", []):
                _expect(ref in maps, f"unknown map {ref!r}", f"$.maps.{name}.compose")
    chains = {}
    if "chains" in raw:
        _expect(isinstance(raw["chains"], dict), "chains must be an object", "$.chains")
        for name, entry in raw["chains"].items():
            loc = f"$.chains.{name}"
            _check_fields(entry, CHAIN_FIELDS, loc, CHAIN_FIELDS)
            segs = entry["segments"]
            _expect(isinstance(segs, list) and segs, "segments must be a non-empty list", f"{loc}.segments")
            canon = []
            for n, seg in enumerate(segs):
                sloc = f"{loc}.segments[{n}]"
                _expect(isinstance(seg, list) and len(seg) == 2, "a segment is [from_map, to_map]", sloc)
                for ref in seg:
                    _expect(ref in maps, f"unknown map {ref!r}", sloc)
                canon.append(list(seg))
            chains[name] = {"segments": canon}
    equivalence = None
    if "equivalence" in raw:
        e = raw["equivalence"]
        _check_fields(e, EQUIV_FIELDS, "$.equivalence", {"f", "g", "h1", "h2"})
        for key in ("f", "g", "x_control"):
            if key in e:
                _expect(e[key] in maps, f"unknown map {e[key]!r}", f"$.equivalence.{key}")
        for key in ("h1", "h2"):
            _expect(e[key] in chains, f"unknown chain {e[key]!r}", f"$.equivalence.{key}")
        if "epsilon" in e:
            _expect(isinstance(e["epsilon"], (int, float)) and not isinstance(e["epsilon"], bool)
                    and e["epsilon"] > 0, "epsilon must be a positive number", "$.equivalence.epsilon")
        equivalence = dict(sorted(e.items()))
    return ComplexDocument(base["vertices"], base["maximal_simplices"], layout, maps, chains,
                           equivalence)


def parse_document(text: str) -> ComplexDocument:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(exc.msg, f"{exc.lineno}:{exc.colno}") from exc
    return document_from_dict(raw)


def serialize_document(doc: ComplexDocument) -> str:
    return json.dumps(doc.to_dict(), indent=2, sort_keys=True) + "\n"


def load_document(path) -> ComplexDocument:
    with open(path, encoding="utf-8") as fh:
        return parse_document(fh.read())


# ------------------------------------------------------------ builders


def _space_ref(space, doc_complex: SimplicialComplex):
    rec = as_record(space)
    if rec.base == doc_complex:
        return "self", rec.level
    base = rec.base
    return ({"vertices": base.vertices.tolist(),
             "maximal_simplices": sorted(list(s) for s in base.maximal_simplices())}, rec.level)


def document_from_complex(K: SimplicialComplex, layout: dict | None = None) -> ComplexDocument:
    return ComplexDocument(
        K.vertices.tolist(), sorted(list(s) for s in K.maximal_simplices()),
        {int(k): list(map(float, v)) for k, v in layout.items()} if layout else None,
    )


def add_map(doc: ComplexDocument, name: str, f: SimplicialMap):
    """Record ``f`` by its vertex images, relative to the document's complex."""
    K = doc.complex()
    dom, dl = _space_ref(f.domain, K)
    cod, cl = _space_ref(f.codomain, K)
    doc.maps[name] = {
        "domain": dom, "domain_level": dl, "codomain": cod, "codomain_level": cl,
        "images": {str(k): int(v) for k, v in sorted(f.as_dict().items())},
    }
    doc._maps.pop(name, None)


def equivalence_document(Y: SimplicialComplex, f, g, name_prefix: str = "") -> ComplexDocument:
    """Document for an equivalence whose homotopies are single straight lines.

    ``h1`` runs from ``f∘g`` to the identity of ``g``'s domain and ``h2``
    from ``g∘f`` to the identity of ``f``'s domain.
    """
    doc = document_from_complex(Y)
    add_map(doc, "f", f)
    add_map(doc, "g", g)
    doc.maps["fg"] = {"compose": ["f", "g"]}
    doc.maps["gf"] = {"compose": ["g", "f"]}
    for key, space in (("id_Yp", g.domain), ("id_X", f.domain)):
        ref, level = _space_ref(space, doc.complex())
        doc.maps[key] = {"identity": ref, "level": level}
    doc.chains["h1"] = {"segments": [["fg", "id_Yp"]]}
    doc.chains["h2"] = {"segments": [["gf", "id_X"]]}
    doc.equivalence = {"f": "f", "g": "g", "h1": "h1", "h2": "h2"}
    doc.maps = dict(sorted(doc.maps.items()))
    return doc


__all__ = [
    "ComplexDocument",
    "DocumentError",
    "FORMAT_VERSION",
    "add_map",
    "document_from_complex",
    "document_from_dict",
    "equivalence_document",
    "load_document",
    "parse_document",
    "serialize_document",
]
