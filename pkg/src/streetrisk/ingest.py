"""Loading accidents, scenes, and neighborhood polygons; 50 m accident labeling.

Accidents and scenes arrive as CSV (headers documented on each loader);
neighborhoods as a GeoJSON feature collection with a ``name`` property.
A scene is labeled dangerous when at least one accident of the requested
kind lies within the radius (boundary inclusive: exactly 50 m counts).
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
import json

import numpy as np

from streetrisk.geo import GeoPoint, Polygon, SpatialIndex

YEAR_MIN = 2010
YEAR_MAX = 2017
DEFAULT_RADIUS_M = 50.0

DANGEROUS = "dangerous"
SAFE = "safe"


class AccidentKind(enum.Enum):
    """P: vehicle-pedestrian accident; V: vehicle-vehicle accident."""

    P = "P"
    V = "V"


class Period(enum.Enum):
    """Study windows: P1 = 2010-2013, P2 = 2014-2017 (inclusive)."""

    P1 = "P1"
    P2 = "P2"


def assign_period(year: int) -> Period:
    """Map a year to its study period; out-of-range years are an error."""
    if YEAR_MIN <= year <= 2013:
        return Period.P1
    if 2014 <= year <= YEAR_MAX:
        return Period.P2
    raise ValueError(f"year {year} outside {YEAR_MIN}-{YEAR_MAX}")


@dataclass(frozen=True)
class AccidentRecord:
    id: str
    location: GeoPoint
    kind: AccidentKind
    year: int

    @property
    def period(self) -> Period:
        return assign_period(self.year)


@dataclass(frozen=True)
class SceneRecord:
    """A geolocated observation with per-period occupancy features.

    ``id`` identifies the location; (id, period) is unique per record, and
    records sharing an id across both periods form a location pair.
    """

    id: str
    location: GeoPoint
    period: Period
    features: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "features", np.asarray(self.features, dtype=float))


@dataclass(frozen=True)
class LabeledSample:
    scene_id: str
    kind: AccidentKind
    count: int
    label: str

    def __post_init__(self):
        expected = label(self.count)
        if self.label != expected:
            raise ValueError(f"label {self.label!r} inconsistent with count {self.count}")


def label(count: int) -> str:
    """Dangerous iff at least one accident; safe otherwise."""
    if count < 0:
        raise ValueError(f"negative count {count}")
    return DANGEROUS if count >= 1 else SAFE


@dataclass
class RowError:
    line: int
    message: str


def load_accidents(path) -> tuple[list[AccidentRecord], list[RowError]]:
    """Parse an accident CSV with columns id, lat, lon, kind, year.

    Missing file or malformed header is fatal; malformed rows are skipped
    and reported in the returned error list.
    """
    records: list[AccidentRecord] = []
    errors: list[RowError] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames
        if cols is None or any(c not in cols for c in ("id", "lat", "lon", "kind", "year")):
            raise ValueError(f"{path}: header must include id, lat, lon, kind, year (got {cols})")
        for lineno, row in enumerate(reader, start=2):
            try:
                year = int(row["year"])
                if not YEAR_MIN <= year <= YEAR_MAX:
                    raise ValueError(f"year {year} out of range {YEAR_MIN}-{YEAR_MAX}")
                records.append(
                    AccidentRecord(
                        id=row["id"].strip(),
                        location=GeoPoint(float(row["lat"]), float(row["lon"])),
                        kind=AccidentKind(row["kind"].strip().upper()),
                        year=year,
                    )
                )
            except (ValueError, TypeError, KeyError) as exc:
                errors.append(RowError(line=lineno, message=str(exc)))
    return records, errors


def load_scenes(path) -> tuple[list[SceneRecord], list[RowError], list[str]]:
    """Parse a scene CSV: id, lat, lon, period, then one column per feature.

    ``period`` accepts P1/P2 or a year in range.  Returns (records, row
    errors, feature column names).  Occupancy entries must lie in [0, 1]
    and sum to at most 1 (small float slack allowed).
    """
    records: list[SceneRecord] = []
    errors: list[RowError] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames
        if cols is None or any(c not in cols for c in ("id", "lat", "lon", "period")):
            raise ValueError(f"{path}: header must include id, lat, lon, period (got {cols})")
        feature_names = [c for c in cols if c not in ("id", "lat", "lon", "period")]
        if not feature_names:
            raise ValueError(f"{path}: no feature columns")
        seen: set[tuple[str, Period]] = set()
        for lineno, row in enumerate(reader, start=2):
            try:
                raw = row["period"].strip()
                period = Period(raw) if raw in ("P1", "P2") else assign_period(int(raw))
                features = np.array([float(row[c]) for c in feature_names], dtype=float)
                validate_occupancy(features)
                key = (row["id"].strip(), period)
                if key in seen:
                    raise ValueError(f"duplicate scene {key[0]!r} for period {period.value}")
                seen.add(key)
                records.append(
                    SceneRecord(
                        id=key[0],
                        location=GeoPoint(float(row["lat"]), float(row["lon"])),
                        period=period,
                        features=features,
                    )
                )
            except (ValueError, TypeError, KeyError) as exc:
                errors.append(RowError(line=lineno, message=str(exc)))
    return records, errors, feature_names


def validate_occupancy(features: np.ndarray):
    """Occupancy fractions: each in [0, 1], total at most 1 (+1e-6 slack)."""
    if features.ndim != 1 or features.size == 0:
        raise ValueError("occupancy vector must be 1-D and nonempty")
    if not np.all(np.isfinite(features)):
        raise ValueError("occupancy vector has non-finite entries")
    if np.any(features < 0) or np.any(features > 1):
        raise ValueError("occupancy entries must lie in [0, 1]")
    total = float(features.sum())
    if total > 1.0 + 1e-6:
        raise ValueError(f"occupancy sums to {total} > 1")


def load_neighborhoods(path) -> list[tuple[str, Polygon]]:
    """GeoJSON FeatureCollection of named Polygon features (exterior ring used)."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("type") != "FeatureCollection":
        raise ValueError(f"{path}: expected a FeatureCollection")
    out = []
    for k, feat in enumerate(doc.get("features", [])):
        geom = feat.get("geometry") or {}
        if geom.get("type") != "Polygon":
            raise ValueError(f"{path}: feature {k} is {geom.get('type')}, expected Polygon")
        props = feat.get("properties") or {}
        if "name" not in props:
            raise ValueError(f"{path}: feature {k} lacks a 'name' property")
        ring = geom["coordinates"][0]
        out.append((str(props["name"]), Polygon([GeoPoint(c[1], c[0]) for c in ring])))
    return out


def count_accidents(
    scenes: list[SceneRecord],
    accidents: list[AccidentRecord],
    radius: float = DEFAULT_RADIUS_M,
    kind: AccidentKind | None = None,
    period: Period | None = None,
) -> dict[str, int]:
    """Per-scene count of matching accidents within ``radius`` meters.

    ``kind``/``period`` filter the accidents (None = no filter); an accident
    near several scenes counts toward each.  The mapping is keyed by
    ``scene_key(scene)`` ("id|period") since an id can appear in both periods.
    """
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    if not math.isfinite(radius):
        raise ValueError(f"radius must be finite, got {radius}")
    selected = [
        a
        for a in accidents
        if (kind is None or a.kind == kind) and (period is None or a.period == period)
    ]
    index = SpatialIndex(((i, a.location) for i, a in enumerate(selected)), cell_m=radius)
    counts: dict[str, int] = {}
    for scene in scenes:
        counts[scene_key(scene)] = index.count(scene.location, radius)
    return counts


def scene_key(scene: SceneRecord) -> str:
    return f"{scene.id}|{scene.period.value}"


def label_scenes(
    scenes: list[SceneRecord],
    accidents: list[AccidentRecord],
    kind: AccidentKind,
    radius: float = DEFAULT_RADIUS_M,
    period: Period | None = None,
) -> list[LabeledSample]:
    """Count accidents of one kind per scene and attach the dangerous/safe label.

    ``period`` restricts the accidents considered; None pools the full
    2010-2017 window (the default used for training).
    """
    counts = count_accidents(scenes, accidents, radius=radius, kind=kind, period=period)
    return [
        LabeledSample(
            scene_id=scene_key(s),
            kind=kind,
            count=counts[scene_key(s)],
            label=label(counts[scene_key(s)]),
        )
        for s in scenes
    ]
