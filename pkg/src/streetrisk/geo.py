"""Geodesic primitives and spatial queries.

Spherical earth, R = 6 371 000 m.  Distances are great-circle (haversine);
no ellipsoid, no map projections.  Intended for city-scale data
(< 100 km extent).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EARTH_RADIUS_M = 6_371_000.0


@dataclass(frozen=True)
class GeoPoint:
    """WGS-style coordinate pair in decimal degrees."""

    lat: float
    lon: float

    def __post_init__(self):
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise ValueError(f"non-finite coordinate: ({self.lat}, {self.lon})")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude out of range: {self.lat}")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude out of range: {self.lon}")


def haversine_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters between two points.

    Symmetric bit-for-bit: swapping the arguments produces the identical
    float (the squared half-angle sines absorb the sign of the deltas).
    """
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    dphi = math.radians(b.lat - a.lat)
    dlam = math.radians(b.lon - a.lon)
    s = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    return EARTH_RADIUS_M * 2.0 * math.asin(min(1.0, math.sqrt(s)))


def _haversine_many(lat: float, lon: float, lats: np.ndarray, lons: np.ndarray) -> np.ndarray:
    """Vectorized haversine from one point to arrays of coordinates (degrees in, meters out)."""
    phi1 = math.radians(lat)
    phi2 = np.radians(lats)
    dphi = np.radians(lats - lat)
    dlam = np.radians(lons - lon)
    s = np.sin(dphi / 2.0) ** 2 + math.cos(phi1) * np.cos(phi2) * np.sin(dlam / 2.0) ** 2
    return EARTH_RADIUS_M * 2.0 * np.arcsin(np.minimum(1.0, np.sqrt(s)))


class SpatialIndex:
    """Immutable grid index over (id, GeoPoint) entries supporting radius queries.

    Buckets entries into lat/lon cells sized to ``cell_m`` meters.  A query
    gathers the cells overlapping the search circle, filters candidates with
    a vectorized haversine, and re-checks candidates within 1e-6 m of the
    boundary with the scalar formula so results match per-point
    ``haversine_distance(...) <= radius`` exactly.

    Safe to share across threads after construction.
    """

    _BOUNDARY_BAND_M = 1e-6

    def __init__(self, entries, cell_m: float = 100.0):
        ids = []
        lats = []
        lons = []
        for id_, point in entries:
            ids.append(id_)
            lats.append(point.lat)
            lons.append(point.lon)
        self._ids = ids
        self._lats = np.asarray(lats, dtype=float)
        self._lons = np.asarray(lons, dtype=float)
        self._cell_m = float(cell_m)
        self._dlat = math.degrees(self._cell_m / EARTH_RADIUS_M)
        # Shrink lon cells by the worst-case latitude so a cell is never
        # wider than cell_m meters.
        max_abs_lat = float(np.max(np.abs(self._lats))) if ids else 0.0
        coslat = max(math.cos(math.radians(min(max_abs_lat + self._dlat, 89.9))), 1e-6)
        self._dlon = math.degrees(self._cell_m / (EARTH_RADIUS_M * coslat))
        cells: dict[tuple[int, int], list[int]] = {}
        for i in range(len(ids)):
            key = self._cell_of(self._lats[i], self._lons[i])
            cells.setdefault(key, []).append(i)
        self._cells = {k: np.asarray(v, dtype=np.intp) for k, v in cells.items()}

    def __len__(self) -> int:
        return len(self._ids)

    def _cell_of(self, lat: float, lon: float) -> tuple[int, int]:
        return (math.floor(lat / self._dlat), math.floor(lon / self._dlon))

    def _candidates(self, center: GeoPoint, radius: float) -> np.ndarray:
        span = int(math.ceil(radius / self._cell_m)) + 1
        ci, cj = self._cell_of(center.lat, center.lon)
        chunks = []
        for di in range(-span, span + 1):
            for dj in range(-span, span + 1):
                hit = self._cells.get((ci + di, cj + dj))
                if hit is not None:
                    chunks.append(hit)
        if not chunks:
            return np.empty(0, dtype=np.intp)
        return np.concatenate(chunks)

    def query(self, center: GeoPoint, radius: float) -> set:
        """Return the set of ids with haversine_distance(center, p) <= radius."""
        return set(self._ids[i] for i in self._query_indices(center, radius))

    def count(self, center: GeoPoint, radius: float) -> int:
        """Number of entries within radius (same inclusion rule as query)."""
        return len(self._query_indices(center, radius))

    def _query_indices(self, center: GeoPoint, radius: float):
        if not radius > 0:
            raise ValueError(f"radius must be positive, got {radius}")
        cand = self._candidates(center, radius)
        if cand.size == 0:
            return []
        dist = _haversine_many(center.lat, center.lon, self._lats[cand], self._lons[cand])
        out = []
        band = self._BOUNDARY_BAND_M
        for k in range(cand.size):
            d = dist[k]
            if d <= radius - band:
                out.append(int(cand[k]))
            elif d <= radius + band:
                # Within vectorized rounding distance of the boundary:
                # decide with the scalar formula.
                i = int(cand[k])
                p = GeoPoint(float(self._lats[i]), float(self._lons[i]))
                if haversine_distance(center, p) <= radius:
                    out.append(i)
        return out


def radius_query(index: SpatialIndex, center: GeoPoint, radius: float) -> set:
    """Ids within ``radius`` meters of ``center``, boundary inclusive (d == r counts)."""
    return index.query(center, radius)


class Polygon:
    """Ordered ring of GeoPoints, closed explicitly or implicitly.

    At least 3 distinct vertices required.  Self-intersecting rings are
    accepted; containment then follows ray-casting parity (crossing an even
    number of edges means outside), which is only one of several defensible
    conventions for such rings.
    """

    def __init__(self, vertices):
        verts = list(vertices)
        if len(verts) >= 2 and (verts[0].lat, verts[0].lon) == (verts[-1].lat, verts[-1].lon):
            verts = verts[:-1]
        distinct = {(v.lat, v.lon) for v in verts}
        if len(distinct) < 3:
            raise ValueError(f"polygon needs >= 3 distinct vertices, got {len(distinct)}")
        self.vertices = verts

    def __len__(self) -> int:
        return len(self.vertices)


def _on_segment(px, py, x1, y1, x2, y2, eps=1e-12) -> bool:
    cross = (py - y1) * (x2 - x1) - (px - x1) * (y2 - y1)
    if abs(cross) > eps:
        return False
    dot = (px - x1) * (px - x2) + (py - y1) * (py - y2)
    return dot <= eps


def point_in_polygon(p: GeoPoint, poly: Polygon) -> bool:
    """Ray-casting containment in the lon/lat plane; boundary points count as inside."""
    x, y = p.lon, p.lat
    verts = poly.vertices
    n = len(verts)
    inside = False
    for i in range(n):
        x1, y1 = verts[i].lon, verts[i].lat
        x2, y2 = verts[(i + 1) % n].lon, verts[(i + 1) % n].lat
        if _on_segment(x, y, x1, y1, x2, y2):
            return True
        if (y1 > y) != (y2 > y):
            x_cross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < x_cross:
                inside = not inside
    return inside
