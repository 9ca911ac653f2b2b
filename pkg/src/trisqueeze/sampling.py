"""Deterministic point samplers on simplices, in dense base coordinates."""

from __future__ import annotations

from itertools import combinations

import numpy as np

from .subdivision import SubdivisionRecord, as_record


def grid_weights(width: int, resolution: int) -> np.ndarray:
    """All barycentric weight vectors with entries in ``{0, 1/res, ..., 1}``.

    Stars and bars: a choice of ``width - 1`` bar positions among
    ``resolution + width - 1`` slots gives one composition of ``resolution``.
    """
    if width == 1:
        return np.ones((1, 1))
    rows = []
    for bars in combinations(range(resolution + width - 1), width - 1):
        edges = (-1,) + bars + (resolution + width - 1,)
        rows.append([edges[k + 1] - edges[k] - 1 for k in range(width)])
    return np.array(rows, dtype=float) / resolution


def random_weights(width: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform points of the standard simplex."""
    return rng.dirichlet(np.ones(width), size=n) if width > 1 else np.ones((n, 1))


def simplex_points(corners: np.ndarray, resolution: int, n_random: int,
                   rng: np.random.Generator) -> np.ndarray:
    """Grid plus random points of the hull of ``corners`` (``(w, V)``)."""
    w = corners.shape[0]
    weights = [grid_weights(w, resolution)] if resolution > 0 else []
    if n_random:
        weights.append(random_weights(w, n_random, rng))
    return np.concatenate(weights) @ corners


def interior_points(corners: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Random points of the open simplex (all weights bounded away from 0)."""
    w = corners.shape[0]
    weights = random_weights(w, n, rng)
    weights = 0.9 * weights + 0.1 / w
    return weights @ corners


def sample_domain(space, resolution: int, n_random: int, rng: np.random.Generator) -> np.ndarray:
    """Sample every maximal base simplex, plus every vertex of ``space``."""
    rec: SubdivisionRecord = as_record(space)
    base = rec.base
    n = len(base.vertices)
    chunks = [rec.positions]
    for rows in base.maximal_rows():
        for row in rows:
            corners = np.eye(n)[base.index_of_vertex(row)]
            chunks.append(simplex_points(corners, resolution, n_random, rng))
    return np.concatenate(chunks)
