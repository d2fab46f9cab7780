"""Shared fixtures: network builders and an on-disk synthetic city."""

from __future__ import annotations

import csv
import json
import math

import numpy as np
import pytest

from streetrisk.geo import GeoPoint
from streetrisk.network import Network, NetworkEdge, NetworkNode

DEG_PER_M_LAT = 1.0 / 111194.92664455873

CITY_LAT = 41.39
CITY_LON = 2.16


def deg_per_m_lon(lat):
    return DEG_PER_M_LAT / math.cos(math.radians(lat))


def offset_point(lat, lon, north_m, east_m):
    """Point displaced by meters; small-offset approximation."""
    return GeoPoint(lat + north_m * DEG_PER_M_LAT, lon + east_m * deg_per_m_lon(lat))


def make_node(node_id, lat=0.0, lon=0.0, population=1.0, poi_mass=1.0):
    return NetworkNode(id=node_id, point=GeoPoint(lat, lon), population=population, poi_mass=poi_mass)


def make_network(edge_spec, node_masses=None, speeds=None):
    """Network from (u, v, length) triples; nodes placed at the origin.

    node_masses: id -> (population, poi_mass); speeds: edge index -> m/s.
    """
    node_ids = sorted({u for u, _, _ in edge_spec} | {v for _, v, _ in edge_spec})
    node_masses = node_masses or {}
    nodes = []
    for nid in node_ids:
        pop, poi = node_masses.get(nid, (1.0, 1.0))
        nodes.append(make_node(nid, population=pop, poi_mass=poi))
    edges = []
    for k, (u, v, length) in enumerate(edge_spec):
        speed = speeds.get(k) if speeds else None
        edges.append(NetworkEdge(id=f"e{k}", u=u, v=v, length_m=float(length), speed_mps=speed))
    return Network(nodes, edges)


def random_connected_network(rng, n_nodes, extra_edges, w_lo=1.0, w_hi=100.0):
    """Random spanning tree plus extra edges, random weights; no multi-edges."""
    pairs = set()
    order = rng.permutation(n_nodes)
    for i in range(1, n_nodes):
        u = int(order[rng.integers(0, i)])
        v = int(order[i])
        pairs.add((min(u, v), max(u, v)))
    attempts = 0
    max_pairs = n_nodes * (n_nodes - 1) // 2
    while len(pairs) < min(n_nodes - 1 + extra_edges, max_pairs) and attempts < 200:
        u = int(rng.integers(0, n_nodes))
        v = int(rng.integers(0, n_nodes))
        if u != v:
            pairs.add((min(u, v), max(u, v)))
        attempts += 1
    edge_spec = []
    for u, v in sorted(pairs):
        edge_spec.append((f"n{u}", f"n{v}", float(rng.uniform(w_lo, w_hi))))
    masses = {f"n{i}": (float(rng.uniform(0.5, 5.0)), float(rng.uniform(0.5, 5.0))) for i in range(n_nodes)}
    return make_network(edge_spec, node_masses=masses)


def write_city(root, rng, n_side=4, n_locations=30, epochs=150):
    """Write a synthetic city (accidents, scenes, network, neighborhoods,
    config) under root and return the config path.

    Geometry: an n_side x n_side street grid with 100 m spacing; scene
    locations scattered over it, observed in both periods; accidents
    clustered near a subset of locations.
    """
    root.mkdir(parents=True, exist_ok=True)
    dlon = deg_per_m_lon(CITY_LAT)

    nodes = []
    for r in range(n_side):
        for c in range(n_side):
            nodes.append(
                (
                    f"n{r}_{c}",
                    CITY_LAT + r * 100 * DEG_PER_M_LAT,
                    CITY_LON + c * 100 * dlon,
                    float(5 + 10 * r + c),
                    float(1 + c),
                )
            )
    edges = []
    k = 0
    for r in range(n_side):
        for c in range(n_side):
            if c + 1 < n_side:
                edges.append((f"e{k}", f"n{r}_{c}", f"n{r}_{c + 1}", "", 8.0))
                k += 1
            if r + 1 < n_side:
                edges.append((f"e{k}", f"n{r}_{c}", f"n{r + 1}_{c}", "", 8.0))
                k += 1
    with open(root / "nodes.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node_id", "lat", "lon", "population", "poi_mass"])
        w.writerows(nodes)
    with open(root / "edges.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["edge_id", "u", "v", "length_m", "speed_mps"])
        w.writerows(edges)

    extent = (n_side - 1) * 100.0
    feature_names = ["road", "sidewalk", "vegetation", "building"]
    locations = []
    for i in range(n_locations):
        north = float(rng.uniform(0.0, extent))
        east = float(rng.uniform(0.0, extent))
        locations.append((f"loc{i:03d}", CITY_LAT + north * DEG_PER_M_LAT, CITY_LON + east * dlon))
    scene_rows = []
    for sid, lat, lon in locations:
        for period in ("P1", "P2"):
            feats = rng.dirichlet([2.0, 2.0, 1.5, 1.5]) * rng.uniform(0.6, 0.98)
            scene_rows.append([sid, lat, lon, period] + [f"{v:.6f}" for v in feats])
    with open(root / "scenes.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "lat", "lon", "period"] + feature_names)
        w.writerows(scene_rows)

    accident_rows = []
    a = 0
    for i, (sid, lat, lon) in enumerate(locations):
        for _ in range(int(rng.integers(0, 4))):
            year = int(rng.choice([2010, 2011, 2012, 2013, 2014, 2015, 2016, 2017]))
            kind = "P" if rng.random() < 0.45 else "V"
            accident_rows.append(
                (
                    f"acc{a:04d}",
                    lat + float(rng.uniform(-35.0, 35.0)) * DEG_PER_M_LAT,
                    lon + float(rng.uniform(-35.0, 35.0)) * dlon,
                    kind,
                    year,
                )
            )
            a += 1
    with open(root / "accidents.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "lat", "lon", "kind", "year"])
        w.writerows(accident_rows)

    half = CITY_LON + extent / 2 * dlon
    neighborhoods = {
        "type": "FeatureCollection",
        "features": [
            {
                "type": "Feature",
                "properties": {"name": "west"},
                "geometry": {
                    "type": "Polygon",
                    "coordinates": [
                        [
                            [CITY_LON - 0.001, CITY_LAT - 0.001],
                            [half, CITY_LAT - 0.001],
                            [half, CITY_LAT + extent * DEG_PER_M_LAT + 0.001],
                            [CITY_LON - 0.001, CITY_LAT + extent * DEG_PER_M_LAT + 0.001],
                            [CITY_LON - 0.001, CITY_LAT - 0.001],
                        ]
                    ],
                },
            },
            {
                "type": "Feature",
                "properties": {"name": "east"},
                "geometry": {
                    "type": "Polygon",
                    "coordinates": [
                        [
                            [half, CITY_LAT - 0.001],
                            [CITY_LON + extent * dlon + 0.001, CITY_LAT - 0.001],
                            [CITY_LON + extent * dlon + 0.001, CITY_LAT + extent * DEG_PER_M_LAT + 0.001],
                            [half, CITY_LAT + extent * DEG_PER_M_LAT + 0.001],
                            [half, CITY_LAT - 0.001],
                        ]
                    ],
                },
            },
        ],
    }
    (root / "neighborhoods.geojson").write_text(json.dumps(neighborhoods), encoding="utf-8")

    config = root / "run.cfg"
    config.write_text(
        "\n".join(
            [
                f"accidents = {root / 'accidents.csv'}",
                f"scenes = {root / 'scenes.csv'}",
                f"nodes = {root / 'nodes.csv'}",
                f"edges = {root / 'edges.csv'}",
                f"neighborhoods = {root / 'neighborhoods.geojson'}",
                f"out_dir = {root / 'out'}",
                f"epochs = {epochs}",
            ]
        )
        + "\n",
        encoding="utf-8",
    )
    return config


@pytest.fixture(scope="session")
def city_config(tmp_path_factory):
    rng = np.random.default_rng(404)
    return write_city(tmp_path_factory.mktemp("city"), rng)
