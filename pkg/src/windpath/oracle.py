"""Exact shortest-path baselines over the free-cell graph.

Edge weights come from the environment's move_cost, so the oracle optimizes
the identical objective the RL agent sees. A brute-force enumerator serves as
the correctness oracle for Dijkstra on tiny maps.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .environment import ACTIONS, AircraftParams, move_cost
from .grid import CityMap
from .windfield import WindField


class Unreachable(RuntimeError):
    """Destination not connected to the origin through free cells."""


@dataclass
class CostGraph:
    """Directed graph over free cells; adjacency stores (neighbor flat index,
    weight, energy J, time s) so paths can report both totals."""

    city: CityMap
    metric: str  # "energy" | "time"
    adjacency: dict  # flat index -> list of (flat, weight, E, T)

    @property
    def n_nodes(self) -> int:
        return len(self.adjacency)

    def degree(self, cell) -> int:
        return len(self.adjacency[self.city.spec.flat_index(cell)])


@dataclass
class PathResult:
    cells: list
    total_energy: float  # J
    total_time: float    # s
    optimal: bool = True

    @property
    def total(self) -> dict:
        return {"energy": self.total_energy, "time": self.total_time}


def build_graph(city: CityMap, field: WindField, params: AircraftParams,
                metric: str = "energy") -> CostGraph:
    """Weight every free-to-free 26-neighbor move with the environment's
    move_cost (energy or time)."""
    if metric not in ("energy", "time"):
        raise ValueError(f"metric must be 'energy' or 'time', got {metric!r}")
    spec = city.spec
    adjacency = {}
    for c in city.free_cells():
        edges = []
        for off in ACTIONS:
            nb = (c[0] + off[0], c[1] + off[1], c[2] + off[2])
            if not spec.in_bounds(nb) or city.is_occupied(nb):
                continue
            mc = move_cost(c, nb, field, params)
            w = mc.E if metric == "energy" else mc.T
            edges.append((spec.flat_index(nb), w, mc.E, mc.T))
        adjacency[spec.flat_index(c)] = edges
    return CostGraph(city=city, metric=metric, adjacency=adjacency)


def _reconstruct(parent, spec, node):
    path = []
    while node is not None:
        path.append(spec.unflatten(node))
        node = parent[node]
    path.reverse()
    return path


def dijkstra(graph: CostGraph, origin, destination) -> PathResult:
    """Minimum-total-weight path; exact-cost ties break toward the
    lexicographically smaller cell-index sequence."""
    spec = graph.city.spec
    for name, c in (("origin", origin), ("destination", destination)):
        if not graph.city.is_free(tuple(c)):
            raise ValueError(f"{name} {tuple(c)} is not a free cell")
    src = spec.flat_index(tuple(origin))
    dst = spec.flat_index(tuple(destination))

    dist = {src: 0.0}
    acc = {src: (0.0, 0.0)}  # (energy, time) along the chosen path
    parent = {src: None}
    settled = set()
    heap = [(0.0, src)]
    while heap:
        d, u = heapq.heappop(heap)
        if u in settled:
            continue
        settled.add(u)
        if u == dst:
            break
        for v, w, e, t in graph.adjacency[u]:
            if v in settled:
                continue
            nd = d + w
            old = dist.get(v)
            if old is None or nd < old:
                dist[v] = nd
                parent[v] = u
                acc[v] = (acc[u][0] + e, acc[u][1] + t)
                heapq.heappush(heap, (nd, v))
            elif nd == old and parent[v] != u:
                # deterministic tie-break on the full cell sequence
                cand = _reconstruct(parent, spec, u) + [spec.unflatten(v)]
                cur = _reconstruct(parent, spec, v)
                if cand < cur:
                    parent[v] = u
                    acc[v] = (acc[u][0] + e, acc[u][1] + t)
                    heapq.heappush(heap, (nd, v))
    if dst not in settled:
        raise Unreachable(f"destination {tuple(destination)} unreachable from {tuple(origin)}")
    e, t = acc[dst]
    return PathResult(cells=_reconstruct(parent, spec, dst),
                      total_energy=e, total_time=t, optimal=True)


def brute_force(city: CityMap, field: WindField, params: AircraftParams,
                metric: str, origin, destination, node_limit: int = 40,
                graph: CostGraph | None = None) -> PathResult:
    """Exhaustive minimum over all simple paths; the independent oracle for
    dijkstra() on small maps. A prebuilt graph for the same map/field/metric
    may be passed to skip rebuilding edge weights."""
    free = city.free_cells()
    if len(free) > node_limit:
        raise ValueError(f"{len(free)} free cells exceeds node_limit {node_limit}")
    if graph is None:
        graph = build_graph(city, field, params, metric)
    spec = city.spec
    src = spec.flat_index(tuple(origin))
    dst = spec.flat_index(tuple(destination))
    if not graph.city.is_free(tuple(origin)) or not graph.city.is_free(tuple(destination)):
        raise ValueError("origin/destination must be free")

    best = {"w": np.inf, "path": None, "e": 0.0, "t": 0.0}
    on_path = set()

    def go(u, w, e, t, path):
        # prune strictly worse partial paths; cost ties are explored only
        # while the partial sequence can still beat the incumbent path
        # lexicographically, preserving dijkstra()'s tie-break
        if w > best["w"]:
            return
        if w == best["w"] and best["path"] is not None:
            seq = [spec.unflatten(i) for i in path]
            prefix = best["path"][:len(seq)]
            if seq > prefix:
                return
        if u == dst:
            seq = [spec.unflatten(i) for i in path]
            if w < best["w"] or (w == best["w"] and seq < best["path"]):
                best.update(w=w, path=seq, e=e, t=t)
            return
        on_path.add(u)
        for v, wv, ev, tv in graph.adjacency[u]:
            if v not in on_path:
                path.append(v)
                go(v, w + wv, e + ev, t + tv, path)
                path.pop()
        on_path.discard(u)

    go(src, 0.0, 0.0, 0.0, [src])
    if best["path"] is None:
        raise Unreachable(f"destination {tuple(destination)} unreachable")
    return PathResult(cells=best["path"], total_energy=best["e"],
                      total_time=best["t"], optimal=True)


def replay_path(result: PathResult, field: WindField, city: CityMap,
                params: AircraftParams) -> tuple[float, float]:
    """Re-walk a path through move_cost; totals must match the PathResult."""
    e = t = 0.0
    for a, b in zip(result.cells, result.cells[1:]):
        mc = move_cost(a, b, field, params, city=city)
        e += mc.E
        t += mc.T
    return e, t
