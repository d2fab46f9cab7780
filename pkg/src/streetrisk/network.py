"""Sidewalk/road graphs, gravity trip distribution, and edge centralities.

Networks are undirected; edge weights must be positive.  Betweenness is
demand-weighted: every origin-destination pair contributes its trip volume
split over all minimum-weight paths.  Shortest-path work runs on the kernel
selected in streetrisk._kernels (compiled when available).
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from streetrisk import _kernels
from streetrisk.geo import GeoPoint, haversine_distance

logger = logging.getLogger(__name__)

# Absolute tolerance for "same total path weight" when counting co-optimal
# shortest paths.  Edge weights must be well above this scale.
PATH_TIE_TOL = 1e-9

# Sources per work unit for betweenness.  Fixed, so partial sums are merged
# in the same order no matter how many threads run.
_CHUNK = 64


@dataclass(frozen=True)
class NetworkNode:
    id: str
    point: GeoPoint
    population: float = 0.0
    poi_mass: float = 0.0


@dataclass(frozen=True)
class NetworkEdge:
    id: str
    u: str
    v: str
    length_m: float
    speed_mps: float | None = None


class Network:
    """Undirected graph with geolocated nodes carrying population/POI mass."""

    def __init__(self, nodes: list[NetworkNode], edges: list[NetworkEdge]):
        self.nodes = list(nodes)
        self.edges = list(edges)
        self._node_index = {nd.id: i for i, nd in enumerate(self.nodes)}
        if len(self._node_index) != len(self.nodes):
            raise ValueError("duplicate node ids")
        seen_edges = set()
        for e in self.edges:
            if e.u not in self._node_index:
                raise ValueError(f"edge {e.id}: unknown endpoint {e.u!r}")
            if e.v not in self._node_index:
                raise ValueError(f"edge {e.id}: unknown endpoint {e.v!r}")
            if not (math.isfinite(e.length_m) and e.length_m > 0):
                raise ValueError(f"edge {e.id}: nonpositive length {e.length_m}")
            if e.speed_mps is not None and not (math.isfinite(e.speed_mps) and e.speed_mps > 0):
                raise ValueError(f"edge {e.id}: nonpositive speed {e.speed_mps}")
            if e.id in seen_edges:
                raise ValueError(f"duplicate edge id {e.id!r}")
            seen_edges.add(e.id)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def node_index(self, node_id: str) -> int:
        return self._node_index[node_id]

    def csr(self, weights: dict[str, float]):
        """CSR adjacency (indptr, nbr, eidx, w) with both directions per edge.

        Neighbor order per node follows edge input order, which pins the
        floating-point accumulation order in the kernels.
        """
        n = self.n_nodes
        deg = np.zeros(n + 1, dtype=np.int64)
        ui = np.empty(len(self.edges), dtype=np.int64)
        vi = np.empty(len(self.edges), dtype=np.int64)
        for k, e in enumerate(self.edges):
            ui[k] = self._node_index[e.u]
            vi[k] = self._node_index[e.v]
            deg[ui[k] + 1] += 1
            deg[vi[k] + 1] += 1
        indptr = np.cumsum(deg, dtype=np.int64)
        nbr = np.empty(2 * len(self.edges), dtype=np.int64)
        eidx = np.empty(2 * len(self.edges), dtype=np.int64)
        w = np.empty(2 * len(self.edges), dtype=np.float64)
        fill = indptr[:-1].copy()
        for k, e in enumerate(self.edges):
            wk = weights[e.id]
            for a, b in ((ui[k], vi[k]), (vi[k], ui[k])):
                pos = fill[a]
                nbr[pos] = b
                eidx[pos] = k
                w[pos] = wk
                fill[a] += 1
        return indptr, nbr, eidx, w


@dataclass
class ODMatrix:
    """Sparse trip demand: (origin id, destination id) -> trips per time step."""

    entries: dict[tuple[str, str], float] = field(default_factory=dict)
    dropped_trips: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for (i, j), v in self.entries.items():
            if i == j:
                raise ValueError(f"self-demand not allowed: {i}")
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"bad demand {v} for ({i}, {j})")

    def total(self) -> float:
        return sum(self.entries.values())


def load_network(nodes_path=None, edges_path=None, geojson_path=None) -> Network:
    """Load a network from node+edge CSVs, or from a GeoJSON line-string collection.

    CSV nodes: node_id, lat, lon, population, poi_mass.
    CSV edges: edge_id, u, v, length_m, speed_mps (speed optional/blank;
    blank length is computed from node coordinates by haversine).

    GeoJSON: every LineString feature becomes one edge between its first and
    last coordinate; nodes are created per distinct coordinate (zero masses),
    lengths summed over the geometry unless a ``length_m`` property is given.
    """
    if geojson_path is not None:
        return _load_network_geojson(geojson_path)
    if nodes_path is None or edges_path is None:
        raise ValueError("need nodes_path and edges_path (or geojson_path)")

    nodes = []
    with open(nodes_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _require_columns(reader, ["node_id", "lat", "lon", "population", "poi_mass"], nodes_path)
        for row in reader:
            nodes.append(
                NetworkNode(
                    id=row["node_id"].strip(),
                    point=GeoPoint(float(row["lat"]), float(row["lon"])),
                    population=float(row["population"] or 0.0),
                    poi_mass=float(row["poi_mass"] or 0.0),
                )
            )
    by_id = {nd.id: nd for nd in nodes}

    edges = []
    with open(edges_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _require_columns(reader, ["edge_id", "u", "v", "length_m"], edges_path)
        for row in reader:
            u, v = row["u"].strip(), row["v"].strip()
            length_raw = (row.get("length_m") or "").strip()
            if length_raw:
                length = float(length_raw)
            else:
                if u not in by_id or v not in by_id:
                    raise ValueError(f"edge {row['edge_id']}: unknown endpoint")
                length = haversine_distance(by_id[u].point, by_id[v].point)
            speed_raw = (row.get("speed_mps") or "").strip()
            edges.append(
                NetworkEdge(
                    id=row["edge_id"].strip(),
                    u=u,
                    v=v,
                    length_m=length,
                    speed_mps=float(speed_raw) if speed_raw else None,
                )
            )
    return Network(nodes, edges)


def _load_network_geojson(path) -> Network:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("type") != "FeatureCollection":
        raise ValueError(f"{path}: expected a FeatureCollection")
    nodes: list[NetworkNode] = []
    node_of_coord: dict[tuple[float, float], str] = {}
    edges = []

    def node_for(lon: float, lat: float) -> str:
        key = (lon, lat)
        if key not in node_of_coord:
            nid = f"n{len(nodes)}"
            node_of_coord[key] = nid
            nodes.append(NetworkNode(id=nid, point=GeoPoint(lat, lon)))
        return node_of_coord[key]

    for k, feat in enumerate(doc.get("features", [])):
        geom = feat.get("geometry") or {}
        if geom.get("type") != "LineString":
            continue
        coords = geom["coordinates"]
        if len(coords) < 2:
            raise ValueError(f"feature {k}: LineString needs >= 2 coordinates")
        props = feat.get("properties") or {}
        u = node_for(*coords[0][:2])
        v = node_for(*coords[-1][:2])
        if "length_m" in props and props["length_m"] is not None:
            length = float(props["length_m"])
        else:
            length = sum(
                haversine_distance(GeoPoint(c1[1], c1[0]), GeoPoint(c2[1], c2[0]))
                for c1, c2 in zip(coords, coords[1:])
            )
        speed = props.get("speed_mps")
        edges.append(
            NetworkEdge(
                id=str(props.get("edge_id", f"e{k}")),
                u=u,
                v=v,
                length_m=length,
                speed_mps=float(speed) if speed is not None else None,
            )
        )
    return Network(nodes, edges)


def _require_columns(reader: csv.DictReader, required, path):
    cols = reader.fieldnames or []
    missing = [c for c in required if c not in cols]
    if missing:
        raise ValueError(f"{path}: missing required columns {missing}")


def traversal_weights(network: Network, mode: str) -> dict[str, float]:
    """Per-edge weight: length (``distance`` mode) or length/speed (``time`` mode)."""
    if mode == "distance":
        return {e.id: e.length_m for e in network.edges}
    if mode == "time":
        missing = [e.id for e in network.edges if e.speed_mps is None]
        if missing:
            raise ValueError(f"time mode needs speed_mps on every edge; missing on: {missing}")
        return {e.id: e.length_m / e.speed_mps for e in network.edges}
    raise ValueError(f"mode must be 'distance' or 'time', got {mode!r}")


def gravity_od(network: Network, lambda_m: float = 500.0, total_trips: float = 1.0) -> ODMatrix:
    """Trip distribution with exponential distance deterrence.

    Origins emit trips proportionally to population; destination pull is
    poi_mass * exp(-d/lambda_m) with d the shortest-path distance over edge
    lengths.  Row sums equal each origin's trip production except for
    origins with no reachable positive-mass destination, whose trips are
    dropped and reported in ``dropped_trips``.
    """
    if not lambda_m > 0:
        raise ValueError(f"lambda_m must be positive, got {lambda_m}")
    pops = np.array([nd.population for nd in network.nodes], dtype=float)
    masses = np.array([nd.poi_mass for nd in network.nodes], dtype=float)
    if not np.any(pops > 0):
        raise ValueError("no node with positive population")
    if not np.any(masses > 0):
        raise ValueError("no node with positive poi_mass")
    total_pop = float(pops.sum())
    weights = traversal_weights(network, "distance")
    indptr, nbr, _eidx, w = network.csr(weights)

    entries: dict[tuple[str, str], float] = {}
    dropped: dict[str, float] = {}
    for i, origin in enumerate(network.nodes):
        if pops[i] <= 0:
            continue
        trips_i = total_trips * pops[i] / total_pop
        dist = _kernels.shortest_path_distances(indptr, nbr, w, i)
        pull = masses * np.exp(-dist / lambda_m)
        pull[i] = 0.0
        pull[~np.isfinite(dist)] = 0.0
        denom = float(pull.sum())
        if denom <= 0.0:
            logger.warning(
                "origin %s: no reachable destination with positive mass; dropping %g trips",
                origin.id,
                trips_i,
            )
            dropped[origin.id] = trips_i
            continue
        for j in np.flatnonzero(pull > 0):
            entries[(origin.id, network.nodes[j].id)] = trips_i * float(pull[j]) / denom
    return ODMatrix(entries=entries, dropped_trips=dropped)


def uniform_od(network: Network, value: float = 1.0) -> ODMatrix:
    """All-to-all demand: value trips for every ordered pair of distinct nodes."""
    entries = {}
    for a in network.nodes:
        for b in network.nodes:
            if a.id != b.id:
                entries[(a.id, b.id)] = value
    return ODMatrix(entries=entries)


def od_edge_betweenness(
    network: Network,
    od: ODMatrix,
    weights: dict[str, float],
    threads: int = 1,
) -> dict[str, float]:
    """Demand-weighted edge betweenness: sum over OD pairs of trips times
    the fraction of minimum-weight paths crossing each edge.

    Sources are processed in fixed chunks whose partial scores are summed in
    chunk order, so results are bit-stable for any ``threads`` value.
    """
    indptr, nbr, eidx, w = network.csr(weights)
    n = network.n_nodes
    demand_rows: dict[int, np.ndarray] = {}
    for (i, j), v in od.entries.items():
        if v == 0.0:
            continue
        si = network.node_index(i)
        row = demand_rows.get(si)
        if row is None:
            row = np.zeros(n, dtype=np.float64)
            demand_rows[si] = row
        row[network.node_index(j)] += v

    sources = sorted(demand_rows)
    chunks = [sources[c : c + _CHUNK] for c in range(0, len(sources), _CHUNK)]

    def run_chunk(chunk):
        score = np.zeros(len(network.edges), dtype=np.float64)
        for s in chunk:
            _kernels.brandes_source(indptr, nbr, eidx, w, s, demand_rows[s], score, PATH_TIE_TOL)
        return score

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(run_chunk, chunks))
    else:
        partials = [run_chunk(c) for c in chunks]

    total = np.zeros(len(network.edges), dtype=np.float64)
    for part in partials:
        total += part
    return {e.id: float(total[k]) for k, e in enumerate(network.edges)}


def _components(network: Network) -> list[int]:
    """Connected-component label per node index (edge weights irrelevant)."""
    n = network.n_nodes
    adj: list[list[int]] = [[] for _ in range(n)]
    for e in network.edges:
        ui, vi = network.node_index(e.u), network.node_index(e.v)
        adj[ui].append(vi)
        adj[vi].append(ui)
    label = [-1] * n
    comp = 0
    for start in range(n):
        if label[start] != -1:
            continue
        stack = [start]
        label[start] = comp
        while stack:
            v = stack.pop()
            for u in adj[v]:
                if label[u] == -1:
                    label[u] = comp
                    stack.append(u)
        comp += 1
    return label


def node_closeness(network: Network, weights: dict[str, float]) -> dict[str, float]:
    """Closeness with the Wasserman-Faust correction for disconnected graphs.

    For node u in a component of size s within an n-node graph:
    ((s-1)/(n-1)) * (s-1)/sum_v d(u,v); isolated nodes (and n == 1) get 0.
    """
    n = network.n_nodes
    indptr, nbr, _eidx, w = network.csr(weights)
    labels = _components(network)
    comp_size: dict[int, int] = {}
    for lab in labels:
        comp_size[lab] = comp_size.get(lab, 0) + 1

    out = {}
    for i, nd in enumerate(network.nodes):
        s = comp_size[labels[i]]
        if s <= 1 or n <= 1:
            out[nd.id] = 0.0
            continue
        dist = _kernels.shortest_path_distances(indptr, nbr, w, i)
        total = float(dist[np.isfinite(dist)].sum())
        out[nd.id] = ((s - 1) / (n - 1)) * ((s - 1) / total)
    return out


def edge_closeness(network: Network, weights: dict[str, float]) -> dict[str, float]:
    """Edge closeness: arithmetic mean of the endpoint node closenesses."""
    node_c = node_closeness(network, weights)
    return {e.id: (node_c[e.u] + node_c[e.v]) / 2.0 for e in network.edges}
