import math

import numpy as np
import pytest

import oracles
from streetrisk.change import (
    AgreementRow,
    LocationPair,
    agreement_report,
    deltas,
    grouped_count_stats,
    hex_center,
    hexbin,
    nearest_hex,
    neighborhood_mean_change,
    occupancy_differential,
    percent,
    threshold_median_change,
)
from streetrisk.geo import GeoPoint, Polygon
from streetrisk.ingest import AccidentKind


def pair(n1, n2, h1=0.5, h2=0.5, kind=AccidentKind.P, f1=None, f2=None, location=None, i=0):
    return LocationPair(
        location_id=f"loc{i}",
        kind=kind,
        n1=n1,
        n2=n2,
        h1=h1,
        h2=h2,
        features1=None if f1 is None else np.asarray(f1, dtype=float),
        features2=None if f2 is None else np.asarray(f2, dtype=float),
        location=location,
    )


def test_deltas_examples():
    assert deltas(pair(4, 10)) == (6, 0.0)
    assert deltas(pair(9, 2)) == (-7, 0.0)
    assert deltas(pair(3, 3, h1=0.4, h2=0.4)) == (0, 0.0)


def test_percent_rounding_half_away_from_zero():
    assert percent(1, 3) == 33
    assert percent(2, 3) == 67
    assert percent(1, 200) == 1     # 0.5 rounds away from zero
    assert percent(3, 200) == 2     # 1.5 likewise
    assert percent(0, 7) == 0
    assert percent(7, 7) == 100
    assert percent(5, 0) is None


def test_percent_published_counts():
    assert percent(18533, 30230) == 61
    assert percent(21842, 30230) == 72
    assert percent(36372, 58230) == 62
    assert percent(23085, 48486) == 48


def test_agreement_all_increase_hits():
    pairs = [pair(0, 2, h1=0.2, h2=0.6, i=i) for i in range(10)]
    row = agreement_report(pairs)[AccidentKind.P]
    assert row.base_increase == 10
    assert row.hits_increase == 10
    assert row.pct_increase == 100
    assert row.base_decrease == 0
    assert row.pct_decrease is None


def test_agreement_excludes_unchanged_counts():
    pairs = [
        pair(2, 2, h1=0.1, h2=0.9, i=0),   # no count change, ignored
        pair(1, 3, h1=0.1, h2=0.9, i=1),
        pair(3, 1, h1=0.9, h2=0.1, i=2),
    ]
    row = agreement_report(pairs)[AccidentKind.P]
    assert row.base_increase == 1 and row.base_decrease == 1
    assert row.hits_increase == 1 and row.hits_decrease == 1


def test_agreement_tolerance_semantics():
    pairs = [
        pair(0, 2, h1=0.50, h2=0.48, i=0),  # dh = -0.02: misses strict, within -tol
        pair(0, 2, h1=0.50, h2=0.40, i=1),  # dh = -0.10: misses both
        pair(2, 0, h1=0.48, h2=0.50, i=2),  # dh = +0.02: misses strict, within +tol
    ]
    row = agreement_report(pairs, tol=0.05)[AccidentKind.P]
    assert (row.hits_increase, row.hits_increase_tol) == (0, 1)
    assert (row.hits_decrease, row.hits_decrease_tol) == (0, 1)

    strict = agreement_report(pairs, tol=0.0)[AccidentKind.P]
    assert strict.hits_increase_tol == strict.hits_increase
    assert strict.hits_decrease_tol == strict.hits_decrease


def test_agreement_matches_brute_recount():
    rng = np.random.default_rng(10)
    pairs = []
    for i in range(500):
        pairs.append(
            pair(
                int(rng.integers(0, 4)),
                int(rng.integers(0, 4)),
                h1=float(rng.uniform(0, 1)),
                h2=float(rng.uniform(0, 1)),
                kind=AccidentKind.P if rng.random() < 0.5 else AccidentKind.V,
                i=i,
            )
        )
    tol = 0.05
    report = agreement_report(pairs, tol=tol)
    for kind in AccidentKind:
        bi = hi = hit = bd = hd = hdt = 0
        for p in pairs:
            if p.kind is not kind:
                continue
            dacc = p.n2 - p.n1
            dh = p.h2 - p.h1
            if dacc > 0:
                bi += 1
                hi += dh > 0
                hit += dh > -tol
            elif dacc < 0:
                bd += 1
                hd += dh < 0
                hdt += dh < tol
        row = report[kind]
        assert (row.base_increase, row.hits_increase, row.hits_increase_tol) == (bi, hi, hit)
        assert (row.base_decrease, row.hits_decrease, row.hits_decrease_tol) == (bd, hd, hdt)
        assert row.hits_increase_tol >= row.hits_increase
        assert row.hits_decrease_tol >= row.hits_decrease


def test_agreement_strict_invariant_under_monotone_transform():
    rng = np.random.default_rng(11)
    pairs = [
        pair(int(rng.integers(0, 3)), int(rng.integers(0, 3)), h1=float(rng.uniform(0, 1)), h2=float(rng.uniform(0, 1)), i=i)
        for i in range(200)
    ]
    squashed = [
        LocationPair(
            location_id=p.location_id,
            kind=p.kind,
            n1=p.n1,
            n2=p.n2,
            h1=p.h1 ** 3,
            h2=p.h2 ** 3,
        )
        for p in pairs
    ]
    a = agreement_report(pairs)[AccidentKind.P]
    b = agreement_report(squashed)[AccidentKind.P]
    assert (a.hits_increase, a.hits_decrease) == (b.hits_increase, b.hits_decrease)


def test_agreement_report_empty_error():
    with pytest.raises(ValueError):
        agreement_report([])


def test_hexbin_single_pair():
    grid = hexbin([pair(1, 4, h1=0.31, h2=0.77)], hex_size=0.05)
    assert len(grid.bins) == 1
    ((count, mean),) = grid.bins.values()
    assert count == 1 and mean == 3.0


def test_hexbin_same_bin_mean():
    pairs = [pair(0, 2, h1=0.5, h2=0.5, i=0), pair(2, 0, h1=0.5, h2=0.5, i=1)]
    grid = hexbin(pairs, hex_size=0.05)
    assert len(grid.bins) == 1
    ((count, mean),) = grid.bins.values()
    assert count == 2 and mean == 0.0


def test_hexbin_conserves_pairs_and_matches_brute_force():
    rng = np.random.default_rng(12)
    pairs = [
        pair(int(rng.integers(0, 5)), int(rng.integers(0, 5)), h1=float(rng.uniform(0, 1)), h2=float(rng.uniform(0, 1)), i=i)
        for i in range(400)
    ]
    size = 0.05
    grid = hexbin(pairs, hex_size=size)
    assert grid.total_pairs() == len(pairs)
    for p in pairs:
        assert nearest_hex(p.h1, p.h2, size) == oracles.brute_nearest_hex(p.h1, p.h2, size)


def test_hex_center_round_trip():
    size = 0.07
    for q in range(-5, 6):
        for r in range(-5, 6):
            x, y = hex_center(q, r, size)
            assert nearest_hex(x, y, size) == (q, r)


def test_hexbin_rejects_bad_size():
    with pytest.raises(ValueError):
        hexbin([pair(0, 1)], hex_size=0.0)


def test_grouped_count_stats_example():
    pairs = [pair(1, 2, i=0), pair(3, 2, i=1), pair(5, 2, i=2)]
    (group,) = grouped_count_stats(pairs)
    assert group.n2 == 2 and group.size == 3
    assert group.median_n1 == 3.0
    assert group.q1_n1 == 2.0 and group.q3_n1 == 4.0


def test_grouped_count_stats_omits_empty_groups():
    pairs = [pair(1, 0, i=0), pair(1, 4, i=1)]
    groups = grouped_count_stats(pairs)
    assert [g.n2 for g in groups] == [0, 4]


def test_grouped_count_stats_matches_sorted_oracle():
    rng = np.random.default_rng(13)
    pairs = [pair(int(rng.integers(0, 15)), int(rng.integers(0, 4)), i=i) for i in range(300)]
    by_n2 = {}
    for p in pairs:
        by_n2.setdefault(p.n2, []).append(p.n1)
    for g in grouped_count_stats(pairs):
        values = by_n2[g.n2]
        assert g.size == len(values)
        assert g.q1_n1 == pytest.approx(oracles.quantile_sorted(values, 0.25), abs=1e-12)
        assert g.median_n1 == pytest.approx(oracles.quantile_sorted(values, 0.50), abs=1e-12)
        assert g.q3_n1 == pytest.approx(oracles.quantile_sorted(values, 0.75), abs=1e-12)


def test_threshold_median_change_properties():
    zeros = [pair(2, 2, i=i) for i in range(5)]
    medians = threshold_median_change(zeros)
    assert set(medians) == {0, 1, 2}
    assert all(v == 0.0 for v in medians.values())

    rng = np.random.default_rng(14)
    pairs = [pair(int(rng.integers(0, 10)), int(rng.integers(0, 6)), i=i) for i in range(200)]
    medians = threshold_median_change(pairs)
    max_n2 = max(p.n2 for p in pairs)
    assert max(medians) == max_n2
    for x, med in medians.items():
        daccs = [p.n2 - p.n1 for p in pairs if p.n2 >= x]
        assert med == pytest.approx(oracles.quantile_sorted(daccs, 0.5), abs=1e-12)


def test_occupancy_differential_single_pair():
    p = pair(1, 3, f1=[0.1, 0.1], f2=[0.3, 0.1])
    assert np.allclose(occupancy_differential([p]), [0.2, 0.0])


def test_occupancy_differential_antisymmetry():
    more_p2 = pair(1, 3, f1=[0.1, 0.4], f2=[0.3, 0.2])
    more_p1 = pair(3, 1, f1=[0.1, 0.4], f2=[0.3, 0.2])
    assert np.allclose(occupancy_differential([more_p2]), -occupancy_differential([more_p1]))


def test_occupancy_differential_identical_vectors_zero():
    pairs = [pair(0, 2, f1=[0.2, 0.3], f2=[0.2, 0.3], i=i) for i in range(4)]
    assert np.allclose(occupancy_differential(pairs), [0.0, 0.0])


def test_occupancy_differential_matches_recount():
    rng = np.random.default_rng(15)
    pairs = []
    for i in range(100):
        pairs.append(
            pair(
                int(rng.integers(0, 3)),
                int(rng.integers(0, 3)),
                f1=rng.uniform(0, 0.5, size=3),
                f2=rng.uniform(0, 0.5, size=3),
                i=i,
            )
        )
    total = np.zeros(3)
    n = 0
    for p in pairs:
        if p.n1 == p.n2:
            continue
        if p.n2 > p.n1:
            total += p.features2 - p.features1
        else:
            total += p.features1 - p.features2
        n += 1
    assert np.allclose(occupancy_differential(pairs), total / n)


def test_occupancy_differential_requires_qualifying_pair():
    with pytest.raises(ValueError):
        occupancy_differential([pair(2, 2, f1=[0.1], f2=[0.2])])
    with pytest.raises(ValueError):
        occupancy_differential([pair(1, 2)])   # vectors missing


def box(lon0, lat0, lon1, lat1):
    return Polygon(
        [GeoPoint(lat0, lon0), GeoPoint(lat0, lon1), GeoPoint(lat1, lon1), GeoPoint(lat1, lon0)]
    )


def test_neighborhood_mean_change():
    west = box(2.00, 41.00, 2.05, 41.10)
    east = box(2.05, 41.00, 2.10, 41.10)
    pairs = [
        pair(0, 1, location=GeoPoint(41.05, 2.02), i=0),
        pair(2, 1, location=GeoPoint(41.05, 2.03), i=1),
        pair(0, 3, location=GeoPoint(41.05, 2.08), i=2),
        pair(1, 1, location=GeoPoint(41.5, 2.5), i=3),    # outside both
        pair(1, 1, location=None, i=4),                   # no location
    ]
    stats = {s.name: s for s in neighborhood_mean_change(pairs, [("west", west), ("east", east)])}
    assert stats["west"].size == 2 and stats["west"].mean_dacc == 0.0
    assert stats["east"].size == 1 and stats["east"].mean_dacc == 3.0
    assert stats["unassigned"].size == 2


def test_neighborhood_first_polygon_wins():
    big = box(2.00, 41.00, 2.10, 41.10)
    inner = box(2.02, 41.02, 2.08, 41.08)
    p = pair(0, 2, location=GeoPoint(41.05, 2.05), i=0)
    stats = {s.name: s for s in neighborhood_mean_change([p], [("big", big), ("inner", inner)])}
    assert stats["big"].size == 1
    assert stats["inner"].size == 0 and stats["inner"].mean_dacc is None
    flipped = {s.name: s for s in neighborhood_mean_change([p], [("inner", inner), ("big", big)])}
    assert flipped["inner"].size == 1


def test_neighborhood_empty_polygon_reported():
    west = box(2.00, 41.00, 2.05, 41.10)
    stats = neighborhood_mean_change([], [("west", west)])
    names = [s.name for s in stats]
    assert names == ["west", "unassigned"]
    assert all(s.size == 0 and s.mean_dacc is None for s in stats)


def test_agreement_row_dict_shape():
    row = AgreementRow(10, 6, 7, 8, 4, 5)
    d = row.as_dict()
    assert d["pct_increase"] == 60
    assert d["pct_increase_tol"] == 70
    assert d["pct_decrease"] == 50
    assert d["pct_decrease_tol"] == 63   # 5/8 = 62.5 rounds away from zero
