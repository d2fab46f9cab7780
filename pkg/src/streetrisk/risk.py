"""Joining location hazard onto network edges and relating it to centrality."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from streetrisk.geo import EARTH_RADIUS_M, GeoPoint
from streetrisk.ingest import AccidentKind
from streetrisk.network import Network

DEFAULT_SNAP_RADIUS_M = 25.0
EXTREME_SIGMA = 2.0


@dataclass(frozen=True)
class EdgeHazard:
    """Hazard values aggregated onto one edge (means over snapped scenes)."""

    edge_id: str
    n_scenes: int
    h1: float
    h2: float
    kind: AccidentKind | None = None

    @property
    def dh(self) -> float:
        return self.h2 - self.h1


def _local_xy(points, lat0: float):
    """Equirectangular projection to meters about reference latitude lat0.

    Adequate at snap-radius scale; distances within a few dozen meters
    deviate from the spherical ones by far less than the snap radius.
    """
    coslat = math.cos(math.radians(lat0))
    xy = np.empty((len(points), 2), dtype=float)
    for i, p in enumerate(points):
        xy[i, 0] = math.radians(p.lon) * coslat * EARTH_RADIUS_M
        xy[i, 1] = math.radians(p.lat) * EARTH_RADIUS_M
    return xy


def _point_segment_distance(px, py, ax, ay, bx, by) -> float:
    dx, dy = bx - ax, by - ay
    seg2 = dx * dx + dy * dy
    if seg2 == 0.0:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * dx + (py - ay) * dy) / seg2
    t = min(1.0, max(0.0, t))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def snap_scenes(
    network: Network,
    scene_points: dict[str, GeoPoint],
    snap_radius_m: float = DEFAULT_SNAP_RADIUS_M,
) -> tuple[dict[str, str], list[str]]:
    """Nearest-edge assignment for each scene location.

    Edges are treated as straight segments between their endpoints in a
    local planar projection.  Returns (scene id -> edge id) plus the ids
    left unassigned because no edge lies within the snap radius.  Distance
    ties resolve to the lexicographically smaller edge id.
    """
    if not snap_radius_m > 0:
        raise ValueError(f"snap radius must be positive, got {snap_radius_m}")
    if not scene_points:
        return {}, []
    node_pts = [n.point for n in network.nodes]
    all_lats = [p.lat for p in node_pts] + [p.lat for p in scene_points.values()]
    lat0 = sum(all_lats) / len(all_lats)
    node_xy = _local_xy(node_pts, lat0)
    node_row = {n.id: i for i, n in enumerate(network.nodes)}

    assigned: dict[str, str] = {}
    unassigned: list[str] = []
    for sid in sorted(scene_points):
        p = scene_points[sid]
        px = math.radians(p.lon) * math.cos(math.radians(lat0)) * EARTH_RADIUS_M
        py = math.radians(p.lat) * EARTH_RADIUS_M
        best_d = math.inf
        best_edge = None
        for edge in network.edges:
            ax, ay = node_xy[node_row[edge.u]]
            bx, by = node_xy[node_row[edge.v]]
            d = _point_segment_distance(px, py, ax, ay, bx, by)
            if d < best_d or (d == best_d and best_edge is not None and edge.id < best_edge):
                best_d = d
                best_edge = edge.id
        if best_edge is not None and best_d <= snap_radius_m:
            assigned[sid] = best_edge
        else:
            unassigned.append(sid)
    return assigned, unassigned


def join_hazard_to_edges(
    network: Network,
    scene_points: dict[str, GeoPoint],
    h1: dict[str, float],
    h2: dict[str, float],
    snap_radius_m: float = DEFAULT_SNAP_RADIUS_M,
    kind=None,
) -> tuple[list[EdgeHazard], list[str]]:
    """Mean per-edge hazard for both periods from snapped scenes.

    Only scenes present in both hazard maps participate.  Edges with no
    snapped scene are omitted.  Returns edge aggregates sorted by edge id,
    plus the unsnapped scene ids.
    """
    usable = {sid: pt for sid, pt in scene_points.items() if sid in h1 and sid in h2}
    assigned, unassigned = snap_scenes(network, usable, snap_radius_m)
    acc: dict[str, list] = {}
    for sid, eid in assigned.items():
        entry = acc.setdefault(eid, [0, 0.0, 0.0])
        entry[0] += 1
        entry[1] += h1[sid]
        entry[2] += h2[sid]
    out = [
        EdgeHazard(edge_id=eid, n_scenes=c, h1=s1 / c, h2=s2 / c, kind=kind)
        for eid, (c, s1, s2) in sorted(acc.items())
    ]
    return out, unassigned


@dataclass(frozen=True)
class CorrelationResult:
    spearman_rho: float | None
    p_value: float | None
    n: int
    bin_means: list[tuple[float, float]]

    @property
    def defined(self) -> bool:
        return self.spearman_rho is not None


def centrality_correlation(
    edge_hazard: list[EdgeHazard],
    centrality: dict[str, float],
    period: int = 2,
    n_bins: int = 10,
) -> CorrelationResult:
    """Spearman rank correlation between edge hazard and edge centrality.

    ``period`` selects h1 or h2.  Also returns equal-population bin means
    (centrality, hazard), binning edges by centrality rank; when either
    variable is constant the correlation is reported as undefined rather
    than NaN.
    """
    if period not in (1, 2):
        raise ValueError(f"period must be 1 or 2, got {period}")
    rows = [(e.h1 if period == 1 else e.h2, centrality[e.edge_id]) for e in edge_hazard if e.edge_id in centrality]
    n = len(rows)
    if n < 2:
        return CorrelationResult(None, None, n, [])
    h = np.asarray([r[0] for r in rows])
    c = np.asarray([r[1] for r in rows])
    if np.all(h == h[0]) or np.all(c == c[0]):
        rho, p = None, None
    else:
        res = stats.spearmanr(h, c)
        rho, p = float(res.statistic), float(res.pvalue)
    order = np.argsort(c, kind="stable")
    bins = np.array_split(order, min(n_bins, n))
    bin_means = [
        (float(np.mean(c[idx])), float(np.mean(h[idx]))) for idx in bins if idx.size
    ]
    return CorrelationResult(rho, p, n, bin_means)


def extreme_segments(edge_hazard: list[EdgeHazard]) -> tuple[list[EdgeHazard], list[EdgeHazard]]:
    """Edges whose hazard change is more than two standard deviations from
    the mean change: (deteriorated, improved).

    The population standard deviation is taken over all joined edges; a
    zero spread yields two empty lists.
    """
    if not edge_hazard:
        return [], []
    dh = np.asarray([e.dh for e in edge_hazard])
    mu = float(dh.mean())
    sigma = float(dh.std())
    if sigma == 0.0:
        return [], []
    deteriorated = [e for e in edge_hazard if e.dh - mu > EXTREME_SIGMA * sigma]
    improved = [e for e in edge_hazard if mu - e.dh > EXTREME_SIGMA * sigma]
    return deteriorated, improved


def delta_vs_betweenness(
    edge_hazard: list[EdgeHazard],
    betweenness: dict[str, float],
) -> tuple[list[tuple[str, float, float]], float | None]:
    """(edge id, |hazard change|, betweenness) rows and their Spearman rho.

    Rows are sorted by edge id; rho is None when undefined (fewer than two
    rows or a constant column).
    """
    rows = [
        (e.edge_id, abs(e.dh), betweenness[e.edge_id])
        for e in sorted(edge_hazard, key=lambda e: e.edge_id)
        if e.edge_id in betweenness
    ]
    if len(rows) < 2:
        return rows, None
    a = np.asarray([r[1] for r in rows])
    b = np.asarray([r[2] for r in rows])
    if np.all(a == a[0]) or np.all(b == b[0]):
        return rows, None
    res = stats.spearmanr(a, b)
    return rows, float(res.statistic)
