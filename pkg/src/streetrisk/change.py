"""Period-over-period analytics: accident deltas vs hazard deltas.

Location pairs carry both periods' accident counts, hazard scores, and
occupancy vectors for one accident kind.  Pairs with no change in accident
count are excluded from the agreement statistics; reported percentages are
rounded half away from zero to integer percent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from streetrisk.geo import GeoPoint, Polygon, point_in_polygon
from streetrisk.ingest import AccidentKind

DEFAULT_TOLERANCE = 0.05
DEFAULT_HEX_SIZE = 0.05

UNASSIGNED = "unassigned"

SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class LocationPair:
    """One location observed in both periods, for one accident kind."""

    location_id: str
    kind: AccidentKind
    n1: int
    n2: int
    h1: float
    h2: float
    features1: np.ndarray | None = None
    features2: np.ndarray | None = None
    location: GeoPoint | None = None

    def __post_init__(self):
        if self.n1 < 0 or self.n2 < 0:
            raise ValueError(f"negative accident count on {self.location_id}")
        for h in (self.h1, self.h2):
            if not 0.0 <= h <= 1.0:
                raise ValueError(f"hazard {h} outside [0, 1] on {self.location_id}")


def deltas(pair: LocationPair) -> tuple[int, float]:
    """(accident count change, hazard change), period 2 minus period 1."""
    return pair.n2 - pair.n1, pair.h2 - pair.h1


def percent(hit: int, base: int) -> int | None:
    """Integer percent, rounded half away from zero; None when base is 0."""
    if base == 0:
        return None
    return (200 * hit + base) // (2 * base)


@dataclass(frozen=True)
class AgreementRow:
    """Agreement counts for one accident kind.

    Increase side: pairs with more accidents in period 2, and among them
    those whose hazard also rose (strictly, and within the tolerance slack
    ``dh > -tol``).  Decrease side mirrors it (``dh < +tol``).
    """

    base_increase: int
    hits_increase: int
    hits_increase_tol: int
    base_decrease: int
    hits_decrease: int
    hits_decrease_tol: int

    @property
    def pct_increase(self):
        return percent(self.hits_increase, self.base_increase)

    @property
    def pct_increase_tol(self):
        return percent(self.hits_increase_tol, self.base_increase)

    @property
    def pct_decrease(self):
        return percent(self.hits_decrease, self.base_decrease)

    @property
    def pct_decrease_tol(self):
        return percent(self.hits_decrease_tol, self.base_decrease)

    def as_dict(self) -> dict:
        return {
            "base_increase": self.base_increase,
            "hits_increase": self.hits_increase,
            "pct_increase": self.pct_increase,
            "hits_increase_tol": self.hits_increase_tol,
            "pct_increase_tol": self.pct_increase_tol,
            "base_decrease": self.base_decrease,
            "hits_decrease": self.hits_decrease,
            "pct_decrease": self.pct_decrease,
            "hits_decrease_tol": self.hits_decrease_tol,
            "pct_decrease_tol": self.pct_decrease_tol,
        }


def agreement_report(pairs, tol: float = DEFAULT_TOLERANCE) -> dict[AccidentKind, AgreementRow]:
    """Hazard-change agreement with accident-change direction, per kind.

    Pairs with no accident-count change sit in neither base.  Tolerance
    columns loosen the hazard condition by ``tol`` in the unfavorable
    direction, so they can only gain hits over the strict columns.
    """
    if not pairs:
        raise ValueError("no pairs")
    counts = {
        kind: dict.fromkeys(
            ("bi", "hi", "hit", "bd", "hd", "hdt"),
            0,
        )
        for kind in AccidentKind
    }
    for pair in pairs:
        dacc, dh = deltas(pair)
        c = counts[pair.kind]
        if dacc > 0:
            c["bi"] += 1
            if dh > 0:
                c["hi"] += 1
            if dh > -tol:
                c["hit"] += 1
        elif dacc < 0:
            c["bd"] += 1
            if dh < 0:
                c["hd"] += 1
            if dh < tol:
                c["hdt"] += 1
    return {
        kind: AgreementRow(
            base_increase=c["bi"],
            hits_increase=c["hi"],
            hits_increase_tol=c["hit"],
            base_decrease=c["bd"],
            hits_decrease=c["hd"],
            hits_decrease_tol=c["hdt"],
        )
        for kind, c in counts.items()
    }


def hex_center(q: int, r: int, size: float) -> tuple[float, float]:
    """Cartesian center of the pointy-top hexagon at axial (q, r)."""
    return size * SQRT3 * (q + r / 2.0), size * 1.5 * r


def nearest_hex(x: float, y: float, size: float) -> tuple[int, int]:
    """Axial coordinates of the hexagon containing (x, y): fractional axial
    conversion followed by cube rounding."""
    qf = (SQRT3 / 3.0 * x - y / 3.0) / size
    rf = (2.0 / 3.0 * y) / size
    sf = -qf - rf
    q, r, s = round(qf), round(rf), round(sf)
    dq, dr, ds = abs(q - qf), abs(r - rf), abs(s - sf)
    if dq > dr and dq > ds:
        q = -r - s
    elif dr > ds:
        r = -q - s
    return int(q), int(r)


@dataclass
class HexBinGrid:
    """Hexagonal aggregation of (h1, h2) points: per-bin pair count and mean
    accident-count change."""

    size: float
    bins: dict[tuple[int, int], tuple[int, float]] = field(default_factory=dict)

    def center(self, q: int, r: int) -> tuple[float, float]:
        return hex_center(q, r, self.size)

    def total_pairs(self) -> int:
        return sum(count for count, _ in self.bins.values())


def hexbin(pairs, hex_size: float = DEFAULT_HEX_SIZE) -> HexBinGrid:
    """Assign each pair's (h1, h2) to its nearest hexagon center and average
    the accident-count change per bin."""
    if not hex_size > 0:
        raise ValueError(f"hex_size must be positive, got {hex_size}")
    sums: dict[tuple[int, int], list] = {}
    for pair in pairs:
        key = nearest_hex(pair.h1, pair.h2, hex_size)
        acc = sums.setdefault(key, [0, 0.0])
        dacc, _ = deltas(pair)
        acc[0] += 1
        acc[1] += dacc
    grid = HexBinGrid(size=hex_size)
    for key in sorted(sums):
        count, total = sums[key]
        grid.bins[key] = (count, total / count)
    return grid


@dataclass(frozen=True)
class CountGroupStats:
    n2: int
    size: int
    median_n1: float
    q1_n1: float
    q3_n1: float


def grouped_count_stats(pairs) -> list[CountGroupStats]:
    """Distribution of first-period counts grouped by the second-period count.

    Quartiles use linear interpolation between order statistics.  Groups are
    emitted in increasing n2; values of n2 with no pairs do not appear.
    """
    if not pairs:
        raise ValueError("no pairs")
    groups: dict[int, list[int]] = {}
    for pair in pairs:
        groups.setdefault(pair.n2, []).append(pair.n1)
    out = []
    for n2 in sorted(groups):
        arr = np.asarray(groups[n2], dtype=float)
        q1, med, q3 = np.percentile(arr, [25.0, 50.0, 75.0])
        out.append(
            CountGroupStats(n2=n2, size=arr.size, median_n1=float(med), q1_n1=float(q1), q3_n1=float(q3))
        )
    return out


def threshold_median_change(pairs) -> dict[int, float]:
    """Median accident-count change over pairs with n2 >= x, for every
    integer threshold x from 0 up to the largest observed n2."""
    if not pairs:
        raise ValueError("no pairs")
    n2s = np.asarray([p.n2 for p in pairs], dtype=int)
    daccs = np.asarray([p.n2 - p.n1 for p in pairs], dtype=float)
    out = {}
    for x in range(0, int(n2s.max()) + 1):
        mask = n2s >= x
        if not np.any(mask):
            continue
        out[x] = float(np.median(daccs[mask]))
    return out


def occupancy_differential(pairs) -> np.ndarray:
    """Mean per-category occupancy difference, more-accident period minus
    fewer-accident period, over pairs whose accident count changed.

    Pairs lacking either occupancy vector are skipped; no qualifying pair is
    an error.
    """
    total = None
    n = 0
    for pair in pairs:
        if pair.n1 == pair.n2 or pair.features1 is None or pair.features2 is None:
            continue
        if pair.n2 > pair.n1:
            diff = np.asarray(pair.features2, dtype=float) - np.asarray(pair.features1, dtype=float)
        else:
            diff = np.asarray(pair.features1, dtype=float) - np.asarray(pair.features2, dtype=float)
        total = diff if total is None else total + diff
        n += 1
    if n == 0:
        raise ValueError("no pair with an accident-count change and occupancy vectors")
    return total / n


@dataclass(frozen=True)
class NeighborhoodStat:
    name: str
    size: int
    mean_dacc: float | None


def neighborhood_mean_change(pairs, polygons: list[tuple[str, Polygon]]) -> list[NeighborhoodStat]:
    """Mean accident-count change per named polygon.

    Each pair joins the first polygon (in input order) containing its
    location; pairs outside every polygon land in the ``unassigned`` bucket,
    as do pairs without a location.  Every polygon is reported, with mean
    None when empty.
    """
    sums: dict[str, list] = {name: [0, 0.0] for name, _ in polygons}
    sums[UNASSIGNED] = [0, 0.0]
    for pair in pairs:
        dacc, _ = deltas(pair)
        target = UNASSIGNED
        if pair.location is not None:
            for name, poly in polygons:
                if point_in_polygon(pair.location, poly):
                    target = name
                    break
        sums[target][0] += 1
        sums[target][1] += dacc
    return [
        NeighborhoodStat(name=name, size=c, mean_dacc=(t / c if c else None))
        for name, (c, t) in sums.items()
    ]
