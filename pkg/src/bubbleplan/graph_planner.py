"""Intersection graph over a bubble cover and discrete bubble-path search.

Edges connect strictly overlapping bubbles and are weighted by the
single-sided Hausdorff distance, a worst-case travel bound between adjacent
bubbles. Weights are nonnegative, so Dijkstra applies directly.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bubbles import BubbleCover
from .distance_field import _as_point
from .errors import CoverDisconnectedError, InvalidConfigError, NotInCoverError


@dataclass
class IntersectionGraph:
    nodes: BubbleCover
    edges: list[tuple[int, int, float]]
    adjacency: list[list[tuple[int, float]]]

    @property
    def n(self) -> int:
        return len(self.nodes)


@dataclass
class BubblePath:
    indices: list[int]
    total_weight: float

    def __len__(self) -> int:
        return len(self.indices)


def _pair_edges(centers, radii, ii, jj):
    """Strict-overlap test and Hausdorff weights for candidate index pairs.

    Both construction methods funnel through this helper so their float
    arithmetic is identical pair by pair.
    """
    d = np.sqrt(np.sum((centers[ii] - centers[jj]) ** 2, axis=1))
    mask = d < radii[ii] + radii[jj]
    w = np.abs(d[mask] + radii[ii][mask] - radii[jj][mask])
    return ii[mask], jj[mask], w


def build_intersection_graph(cover: BubbleCover, method: str = "dense") -> IntersectionGraph:
    """All-pairs overlap graph; "hash" uses a uniform spatial grid keyed by
    the maximum radius and must produce the same result as "dense"."""
    n = len(cover)
    if n == 0:
        raise InvalidConfigError("cannot build a graph over an empty cover")
    centers = cover.centers()
    radii = cover.radii()

    if method == "dense":
        ii, jj = np.triu_indices(n, k=1)
    elif method == "hash":
        ii, jj = _hash_candidates(centers, radii)
    else:
        raise InvalidConfigError(f"unknown graph construction method {method!r}")

    ei, ej, ew = _pair_edges(centers, radii, ii, jj)
    order = np.lexsort((ej, ei))
    edges = [(int(i), int(j), float(w)) for i, j, w in zip(ei[order], ej[order], ew[order])]
    adjacency: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for i, j, w in edges:
        adjacency[i].append((j, w))
        adjacency[j].append((i, w))
    return IntersectionGraph(cover, edges, adjacency)


def _hash_candidates(centers: np.ndarray, radii: np.ndarray):
    """Candidate pairs from a uniform grid with cell size 2*max(radius).

    Two overlapping bubbles have centers within 2*max(radius) of each other,
    so checking each cell against its 3**m neighborhood covers every
    overlapping pair.
    """
    cell = 2.0 * float(np.max(radii))
    keys = np.floor(centers / cell).astype(np.int64)
    buckets: dict[tuple, list[int]] = {}
    for idx, key in enumerate(map(tuple, keys.tolist())):
        buckets.setdefault(key, []).append(idx)
    m = centers.shape[1]
    offsets = np.stack(np.meshgrid(*([[-1, 0, 1]] * m), indexing="ij"), axis=-1).reshape(-1, m)
    ii, jj = [], []
    for key, members in buckets.items():
        for off in offsets:
            other = tuple(int(k) + int(o) for k, o in zip(key, off))
            if other < key:
                continue
            others = buckets.get(other)
            if others is None:
                continue
            if other == key:
                for a in range(len(members)):
                    for b in range(a + 1, len(members)):
                        ii.append(members[a])
                        jj.append(members[b])
            else:
                for a in members:
                    for b in others:
                        ii.append(min(a, b))
                        jj.append(max(a, b))
    return np.asarray(ii, dtype=int), np.asarray(jj, dtype=int)


def containing_bubbles(cover: BubbleCover, y) -> np.ndarray:
    """Indices of bubbles whose closed ball contains y."""
    p = _as_point(y, cover.dim)
    dist = np.linalg.norm(cover.centers() - p, axis=1)
    return np.flatnonzero(dist <= cover.radii())


def shortest_bubble_path(graph: IntersectionGraph, y_s, y_g) -> BubblePath:
    """Minimum-weight bubble path from a start point to a goal point.

    A virtual source connects with weight zero to every bubble containing
    the start, and a virtual sink from every bubble containing the goal.
    Ties are broken by fewer hops, then by the lexicographically smallest
    index sequence.
    """
    starts = containing_bubbles(graph.nodes, y_s)
    goals = containing_bubbles(graph.nodes, y_g)
    if starts.size == 0:
        raise NotInCoverError("start not in cover")
    if goals.size == 0:
        raise NotInCoverError("goal not in cover")

    n = graph.n
    dist = np.full(n, np.inf)
    hops = np.full(n, np.iinfo(np.int64).max, dtype=np.int64)
    heap = []
    for s in starts:
        dist[s] = 0.0
        hops[s] = 0
        heapq.heappush(heap, (0.0, 0, int(s)))
    while heap:
        d, h, u = heapq.heappop(heap)
        if (d, h) != (dist[u], hops[u]):
            continue
        for v, w in graph.adjacency[u]:
            nd, nh = d + w, h + 1
            if (nd, nh) < (dist[v], hops[v]):
                dist[v] = nd
                hops[v] = nh
                heapq.heappush(heap, (nd, nh, v))

    goal_set = set(int(g) for g in goals)
    best = min(((dist[g], hops[g]) for g in goals), default=(np.inf, 0))
    if not np.isfinite(best[0]):
        raise CoverDisconnectedError("cover disconnected between start and goal")

    # Walk the tight-edge subgraph forward, always taking the smallest index
    # that can still complete an optimal (weight, hops) path. Tight edges are
    # recognized by recomputing the exact relaxation expression.
    good = np.zeros(n, dtype=bool)
    for g in goal_set:
        if (dist[g], hops[g]) == best:
            good[g] = True
    stack = [g for g in goal_set if good[g]]
    while stack:
        v = stack.pop()
        for u, w in graph.adjacency[v]:
            if not good[u] and dist[u] + w == dist[v] and hops[u] + 1 == hops[v]:
                good[u] = True
                stack.append(u)

    sources = sorted(int(s) for s in starts if good[s])
    current = sources[0]
    path = [current]
    while not (current in goal_set and (dist[current], hops[current]) == best):
        nxt = None
        for v, w in sorted(graph.adjacency[current]):
            if good[v] and dist[current] + w == dist[v] and hops[current] + 1 == hops[v]:
                nxt = v
                break
        if nxt is None:  # should not happen: good nodes always continue
            raise CoverDisconnectedError("tight-edge reconstruction failed")
        path.append(nxt)
        current = nxt
    return BubblePath(path, float(dist[current]))


def enumerate_shortest_path_weight(graph: IntersectionGraph, y_s, y_g) -> float | None:
    """Exhaustive minimum path weight over all simple paths (test oracle).

    Accumulates edge weights left to right exactly like Dijkstra's
    relaxations, so the optima agree bit for bit. Returns None when start
    and goal are not connected through the cover.
    """
    starts = containing_bubbles(graph.nodes, y_s)
    goals = containing_bubbles(graph.nodes, y_g)
    if starts.size == 0 or goals.size == 0:
        return None
    goal_set = set(int(g) for g in goals)
    best: float | None = None
    visited = [False] * graph.n

    def _dfs(u: int, acc: float) -> None:
        nonlocal best
        if u in goal_set and (best is None or acc < best):
            best = acc
        for v, w in graph.adjacency[u]:
            if not visited[v]:
                visited[v] = True
                _dfs(v, acc + w)
                visited[v] = False

    for s in starts:
        visited[int(s)] = True
        _dfs(int(s), 0.0)
        visited[int(s)] = False
    return best


def path_to_dict(path: BubblePath) -> dict:
    return {"indices": list(path.indices), "total_weight": path.total_weight}


def save_path(path: BubblePath, file) -> None:
    Path(file).write_text(json.dumps(path_to_dict(path)))
