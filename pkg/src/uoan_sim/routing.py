"""Connectivity graphs and widest (maximum-bottleneck) path routing.

Graphs are built per trial and per technology: optical edges exist when the
directed link is in beam and its BER passes the FEC gate, acoustic edges in
symmetric pairs whenever the acoustic BER gate passes, and hybrid graphs
are the union with per-edge technology tags.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import acoustic as ac
from . import optical as opt
from .errors import ConfigurationError, DomainError
from .geometry import Deployment, FaceSet, link_table

MODES = ("optical", "acoustic", "hybrid")


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    capacity: float  # bps, > 0
    ber: float
    tech: str  # "optical" | "acoustic"


@dataclass
class NetworkGraph:
    """Directed capacity graph over IoUT nodes plus the sink."""

    node_ids: list
    sink_id: int
    edges: list
    positions: dict = field(default_factory=dict)  # id -> (x, y, z)
    _adj: dict | None = field(default=None, repr=False)

    def adjacency(self) -> dict:
        if self._adj is None:
            adj = {u: [] for u in self.node_ids}
            for e in self.edges:
                adj[e.src].append(e)
            for lst in adj.values():
                lst.sort(key=lambda e: e.dst)
            self._adj = adj
        return self._adj

    def reversed_adjacency(self) -> dict:
        radj = {u: [] for u in self.node_ids}
        for e in self.edges:
            radj[e.dst].append(e)
        return radj


@dataclass(frozen=True)
class PathResult:
    path: tuple
    bottleneck_rate: float


def build_graph(
    dep: Deployment,
    faces: FaceSet,
    opt_params: opt.OpticalParams | None,
    water: opt.WaterType | None,
    aco_params: ac.AcousticParams | None,
    mode: str,
) -> NetworkGraph:
    """Evaluate every directed node pair (including the sink) for one trial."""
    if mode not in MODES:
        raise ConfigurationError(f"unknown graph mode {mode!r}; expected one of {MODES}")
    if mode in ("optical", "hybrid") and (opt_params is None or water is None):
        raise ConfigurationError(f"mode {mode!r} requires optical parameters and a water type")
    if mode in ("acoustic", "hybrid") and aco_params is None:
        raise ConfigurationError(f"mode {mode!r} requires acoustic parameters")

    positions = np.vstack([dep.node_positions, dep.sink_position[None, :]])
    m = len(positions)
    sink_id = m - 1
    node_ids = list(range(m))
    edges = []

    if mode in ("optical", "hybrid"):
        dist, in_beam, rx_cos_sum = link_table(positions, faces)
        c0 = (
            opt_params.tx_power
            * opt_params.tx_efficiency
            * opt_params.rx_efficiency
            * opt_params.rx_aperture_area
            / (2.0 * math.pi * (1.0 - math.cos(faces.divergence_half_angle)))
        )
        sigma = math.sqrt(opt_params.noise_variance)
        for i in range(m):
            for j in range(m):
                if i == j or not in_beam[i, j]:
                    continue
                pr = c0 * rx_cos_sum[i, j] * math.exp(-water.extinction_c * dist[i, j]) / dist[i, j] ** 2
                b = opt.q_function(opt_params.responsivity * pr / sigma)
                if b > opt_params.fec_ber_threshold:
                    continue
                cap = opt_params.bandwidth * math.log2(
                    1.0 + (opt_params.responsivity * pr) ** 2 / opt_params.noise_variance
                )
                if cap > 0.0:
                    edges.append(Edge(i, j, cap, b, "optical"))

    if mode in ("acoustic", "hybrid"):
        for i in range(m):
            for j in range(i + 1, m):
                d = float(np.linalg.norm(positions[i] - positions[j]))
                if d < 1.0:
                    continue
                b = ac.ber(d, aco_params)
                if b > aco_params.fec_ber_threshold:
                    continue
                cap = ac.capacity(d, aco_params)
                if cap > 0.0:
                    edges.append(Edge(i, j, cap, b, "acoustic"))
                    edges.append(Edge(j, i, cap, b, "acoustic"))

    pos = {int(i): tuple(float(x) for x in positions[i]) for i in range(m)}
    return NetworkGraph(node_ids=node_ids, sink_id=sink_id, edges=edges, positions=pos)


def widest_path(g: NetworkGraph, src: int, dst: int) -> PathResult | None:
    """Simple path from src to dst maximizing the minimum edge capacity.

    Ties are broken by fewer hops, then by lexicographically smallest node
    id sequence, so results are platform independent. Returns None when dst
    is unreachable.
    """
    for v in (src, dst):
        if v not in set(g.node_ids):
            raise DomainError(f"unknown node id {v}")
    if src == dst:
        return PathResult(path=(src,), bottleneck_rate=math.inf)
    adj = g.adjacency()
    # heap labels order by (-bottleneck, hops, path); extending a path can
    # only worsen that key, so the first pop per node is optimal
    heap = [(-math.inf, 0, (src,))]
    done = set()
    while heap:
        neg_b, hops, path = heapq.heappop(heap)
        u = path[-1]
        if u in done:
            continue
        done.add(u)
        if u == dst:
            return PathResult(path=path, bottleneck_rate=-neg_b)
        for e in adj[u]:
            if e.dst in done:
                continue
            heapq.heappush(heap, (max(neg_b, -e.capacity), hops + 1, path + (e.dst,)))
    return None


def e2e_rates(g: NetworkGraph, sink: int) -> dict:
    """Bottleneck rate to the sink for every node, via one reverse max-min pass.

    Unreachable nodes map to 0 bps.
    """
    if sink not in set(g.node_ids):
        raise DomainError(f"unknown sink id {sink}")
    radj = g.reversed_adjacency()
    best = {u: 0.0 for u in g.node_ids}
    best[sink] = math.inf
    heap = [(-math.inf, sink)]
    done = set()
    while heap:
        neg_b, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for e in radj[u]:  # edge e.src -> u, walk backwards
            cand = min(-neg_b, e.capacity)
            if cand > best[e.src]:
                best[e.src] = cand
                heapq.heappush(heap, (-cand, e.src))
    return {u: best[u] for u in g.node_ids if u != sink}


def is_connected(rates: dict, threshold: float) -> bool:
    """True iff every non-sink node reaches the sink at or above threshold."""
    return all(r >= threshold for r in rates.values())


def graph_to_json(g: NetworkGraph) -> str:
    doc = {
        "sink_id": g.sink_id,
        "nodes": [
            {"id": u, "position": list(g.positions.get(u, ()))} for u in g.node_ids
        ],
        "edges": [
            {"src": e.src, "dst": e.dst, "capacity_bps": e.capacity, "ber": e.ber, "tech": e.tech}
            for e in g.edges
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def graph_from_json(text: str) -> NetworkGraph:
    doc = json.loads(text)
    edges = [
        Edge(e["src"], e["dst"], e["capacity_bps"], e["ber"], e["tech"]) for e in doc["edges"]
    ]
    node_ids = [n["id"] for n in doc["nodes"]]
    positions = {n["id"]: tuple(n["position"]) for n in doc["nodes"]}
    return NetworkGraph(
        node_ids=node_ids, sink_id=doc["sink_id"], edges=edges, positions=positions
    )
