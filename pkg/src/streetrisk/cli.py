"""Command-line pipeline: label, train, score, change, network, risk.

Reports are plain UTF-8 CSV and JSON with LF line endings; floats are
written with repr so reruns on the same inputs are byte-identical.  Exit
codes: 0 success, 1 input error (paths, parsing, bad arguments), 2
computation error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from streetrisk import change as change_mod
from streetrisk import hazard, ingest, network as network_mod, risk as risk_mod
from streetrisk.config import RunConfig, load_config
from streetrisk.ingest import AccidentKind, Period

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_COMPUTE = 2


class InputError(Exception):
    """Raised during argument/path validation and file loading."""


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def _require_path(value: str, setting: str) -> Path:
    if not value:
        raise InputError(f"config setting {setting!r} is required for this command")
    path = Path(value)
    if not path.exists():
        raise InputError(f"{setting} file not found: {path}")
    return path


def _load_accidents(cfg: RunConfig):
    path = _require_path(cfg.accidents, "accidents")
    try:
        records, errors = ingest.load_accidents(path)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    for err in errors:
        print(f"warning: {path}:{err.line}: {err.message}", file=sys.stderr)
    return records


def _load_scenes(cfg: RunConfig):
    path = _require_path(cfg.scenes, "scenes")
    try:
        records, errors, feature_names = ingest.load_scenes(path)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    for err in errors:
        print(f"warning: {path}:{err.line}: {err.message}", file=sys.stderr)
    return records, feature_names


def _load_network(cfg: RunConfig):
    try:
        if cfg.network_geojson:
            return network_mod.load_network(geojson_path=_require_path(cfg.network_geojson, "network_geojson"))
        nodes = _require_path(cfg.nodes, "nodes")
        edges = _require_path(cfg.edges, "edges")
        return network_mod.load_network(nodes_path=nodes, edges_path=edges)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _load_model(out_dir: Path, kind: AccidentKind) -> hazard.HazardModel:
    path = out_dir / f"model_{kind.value}.json"
    if not path.exists():
        raise InputError(f"model file not found: {path} (run the train command first)")
    try:
        return hazard.load_model(path)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _kinds(args) -> list[AccidentKind]:
    if args.kind:
        return [AccidentKind(args.kind)]
    return [AccidentKind.P, AccidentKind.V]


def _periods(args) -> list[Period]:
    if args.period:
        return [Period(args.period)]
    return [Period.P1, Period.P2]


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _labeled_dataset(scenes, accidents, kind: AccidentKind, radius: float, periods):
    """Scenes of each requested period labeled against that period's
    accidents, pooled into one aligned (scenes, samples) dataset."""
    kept, samples = [], []
    for period in periods:
        subset = [s for s in scenes if s.period == period]
        labeled = ingest.label_scenes(subset, accidents, kind=kind, radius=radius, period=period)
        kept.extend(subset)
        samples.extend(labeled)
    return kept, samples


def cmd_label(cfg: RunConfig, args) -> int:
    accidents = _load_accidents(cfg)
    scenes, _ = _load_scenes(cfg)
    out = _out_dir(cfg)

    rows = []
    summary = {}
    for kind in _kinds(args):
        for period in _periods(args):
            subset, samples = _labeled_dataset(scenes, accidents, kind, cfg.radius_m, [period])
            dangerous = sum(1 for s in samples if s.label == ingest.DANGEROUS)
            summary[f"{kind.value}/{period.value}"] = {
                "dangerous": dangerous,
                "safe": len(samples) - dangerous,
                "total": len(samples),
            }
            for scene, sample in zip(subset, samples):
                rows.append((scene.id, period.value, kind.value, sample.count, sample.label))
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    _write_csv(out / "labels.csv", ("scene_id", "period", "kind", "count", "label"), rows)
    _write_json(out / "label_summary.json", summary)
    for key in sorted(summary):
        s = summary[key]
        print(f"{key}: dangerous={s['dangerous']} safe={s['safe']} total={s['total']}")
    return EXIT_OK


def cmd_train(cfg: RunConfig, args) -> int:
    accidents = _load_accidents(cfg)
    scenes, feature_names = _load_scenes(cfg)
    out = _out_dir(cfg)

    for kind in _kinds(args):
        subset, samples = _labeled_dataset(scenes, accidents, kind, cfg.radius_m, _periods(args))
        if not subset:
            raise InputError(f"no scenes to train the {kind.value} model on")
        X = np.vstack([s.features for s in subset])
        y = np.asarray([1.0 if s.label == ingest.DANGEROUS else 0.0 for s in samples])
        model = hazard.train(
            X,
            y,
            kind=kind,
            feature_names=feature_names,
            learning_rate=cfg.learning_rate,
            epochs=cfg.epochs,
            l2=cfg.l2,
        )
        hazard.save_model(model, out / f"model_{kind.value}.json")
        result = hazard.evaluate(model, X, y)
        print(
            f"{kind.value}: n={len(subset)} final_loss={model.metadata['final_loss']!r} "
            f"train_accuracy={result.accuracy!r}"
        )
    return EXIT_OK


def cmd_score(cfg: RunConfig, args) -> int:
    scenes, feature_names = _load_scenes(cfg)
    out = _out_dir(cfg)

    periods = set(_periods(args))
    subset = [s for s in scenes if s.period in periods]
    rows = []
    for kind in _kinds(args):
        model = _load_model(out, kind)
        if subset:
            X = np.vstack([s.features for s in subset])
            scores = hazard.scores_for(model, feature_names, X)
            for scene, h in zip(subset, scores):
                rows.append((scene.id, scene.period.value, kind.value, float(h)))
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    _write_csv(out / "scores.csv", ("scene_id", "period", "kind", "hazard"), rows)
    print(f"scored {len(rows)} scene/kind rows")
    return EXIT_OK


def _build_pairs(scenes, accidents, kind: AccidentKind, model: hazard.HazardModel, feature_names, radius: float):
    """Location pairs for one kind: scenes sharing an id across both periods,
    with per-period accident counts and hazard scores.  The first-period
    coordinates stand for the location."""
    by_id: dict[str, dict[Period, ingest.SceneRecord]] = {}
    for scene in scenes:
        by_id.setdefault(scene.id, {})[scene.period] = scene
    p1_scenes = [v[Period.P1] for v in by_id.values() if len(v) == 2]
    p2_scenes = [v[Period.P2] for v in by_id.values() if len(v) == 2]
    if not p1_scenes:
        return []
    counts1 = ingest.count_accidents(p1_scenes, accidents, radius=radius, kind=kind, period=Period.P1)
    counts2 = ingest.count_accidents(p2_scenes, accidents, radius=radius, kind=kind, period=Period.P2)
    h1 = hazard.scores_for(model, feature_names, np.vstack([s.features for s in p1_scenes]))
    h2 = hazard.scores_for(model, feature_names, np.vstack([s.features for s in p2_scenes]))
    pairs = []
    for i, (s1, s2) in enumerate(zip(p1_scenes, p2_scenes)):
        pairs.append(
            change_mod.LocationPair(
                location_id=s1.id,
                kind=kind,
                n1=counts1[ingest.scene_key(s1)],
                n2=counts2[ingest.scene_key(s2)],
                h1=float(h1[i]),
                h2=float(h2[i]),
                features1=s1.features,
                features2=s2.features,
                location=s1.location,
            )
        )
    pairs.sort(key=lambda p: p.location_id)
    return pairs


def cmd_change(cfg: RunConfig, args) -> int:
    accidents = _load_accidents(cfg)
    scenes, feature_names = _load_scenes(cfg)
    out = _out_dir(cfg)
    kinds = _kinds(args)
    models = {kind: _load_model(out, kind) for kind in kinds}
    polygons = None
    if cfg.neighborhoods:
        try:
            polygons = ingest.load_neighborhoods(_require_path(cfg.neighborhoods, "neighborhoods"))
        except ValueError as exc:
            raise InputError(str(exc)) from None

    all_pairs = []
    for kind in kinds:
        all_pairs.extend(_build_pairs(scenes, accidents, kind, models[kind], feature_names, cfg.radius_m))
    if not all_pairs:
        raise ValueError("no location appears in both periods; nothing to compare")
    if args.restricted:
        all_pairs = hazard.restrict_pairs(all_pairs, models)
        if not all_pairs:
            raise ValueError("restriction removed every pair")

    report = change_mod.agreement_report(all_pairs, tol=cfg.tolerance)
    kinds_with_pairs = {p.kind for p in all_pairs}
    report_json = {kind.value: row.as_dict() for kind, row in report.items() if kind in kinds_with_pairs}
    report_json["restricted"] = bool(args.restricted)
    _write_json(out / "change_report.json", report_json)

    for kind in kinds:
        pairs = [p for p in all_pairs if p.kind == kind]
        suffix = kind.value
        if not pairs:
            continue
        grid = change_mod.hexbin(pairs, hex_size=cfg.hex_size)
        _write_csv(
            out / f"hexbin_{suffix}.csv",
            ("q", "r", "center_h1", "center_h2", "pairs", "mean_dacc"),
            [
                (q, r, *(map(float, grid.center(q, r))), count, mean)
                for (q, r), (count, mean) in grid.bins.items()
            ],
        )
        _write_csv(
            out / f"grouped_counts_{suffix}.csv",
            ("n2", "size", "q1_n1", "median_n1", "q3_n1"),
            [(g.n2, g.size, g.q1_n1, g.median_n1, g.q3_n1) for g in change_mod.grouped_count_stats(pairs)],
        )
        medians = change_mod.threshold_median_change(pairs)
        _write_csv(
            out / f"threshold_median_{suffix}.csv",
            ("min_n2", "median_dacc"),
            sorted(medians.items()),
        )
        try:
            diff = change_mod.occupancy_differential(pairs)
        except ValueError:
            diff = None
        if diff is not None:
            _write_csv(
                out / f"occupancy_differential_{suffix}.csv",
                ("feature", "mean_difference"),
                list(zip(feature_names, (float(d) for d in diff))),
            )
        if polygons is not None:
            stats = change_mod.neighborhood_mean_change(pairs, polygons)
            _write_csv(
                out / f"neighborhood_change_{suffix}.csv",
                ("neighborhood", "pairs", "mean_dacc"),
                [(s.name, s.size, s.mean_dacc) for s in stats],
            )
    n_pairs = {kind.value: sum(1 for p in all_pairs if p.kind == kind) for kind in kinds}
    for key in sorted(n_pairs):
        print(f"{key}: {n_pairs[key]} location pairs")
    return EXIT_OK


def _centrality_for_kind(cfg: RunConfig, args, net, kind: AccidentKind):
    """Betweenness and closeness under the kind's travel model: distance
    weights with gravity demand for P, time weights with uniform demand
    for V."""
    if kind is AccidentKind.P:
        weights = network_mod.traversal_weights(net, "distance")
        od = network_mod.gravity_od(net, lambda_m=cfg.lambda_m, total_trips=cfg.total_trips)
    else:
        weights = network_mod.traversal_weights(net, "time")
        od = network_mod.uniform_od(net)
    betweenness = network_mod.od_edge_betweenness(net, od, weights, threads=args.threads or cfg.threads)
    closeness = network_mod.edge_closeness(net, weights)
    return weights, od, betweenness, closeness


def cmd_network(cfg: RunConfig, args) -> int:
    if not args.kind:
        raise InputError("the network command needs --kind (P or V)")
    net = _load_network(cfg)
    out = _out_dir(cfg)
    kind = AccidentKind(args.kind)
    _, od, betweenness, closeness = _centrality_for_kind(cfg, args, net, kind)
    edge_by_id = {e.id: e for e in net.edges}
    _write_csv(
        out / f"centrality_{kind.value}.csv",
        ("edge_id", "u", "v", "length_m", "betweenness", "closeness"),
        [
            (eid, edge_by_id[eid].u, edge_by_id[eid].v, edge_by_id[eid].length_m, betweenness[eid], closeness[eid])
            for eid in sorted(betweenness)
        ],
    )
    dropped = float(sum(od.dropped_trips.values()))
    _write_json(
        out / f"network_summary_{kind.value}.json",
        {
            "nodes": net.n_nodes,
            "edges": len(net.edges),
            "od_total": od.total(),
            "dropped_trips": dropped,
            "dropped_by_origin": od.dropped_trips,
        },
    )
    print(f"{kind.value}: {net.n_nodes} nodes, {len(net.edges)} edges, dropped_trips={dropped!r}")
    return EXIT_OK


def cmd_risk(cfg: RunConfig, args) -> int:
    if not args.kind:
        raise InputError("the risk command needs --kind (P or V)")
    kind = AccidentKind(args.kind)
    net = _load_network(cfg)
    scenes, feature_names = _load_scenes(cfg)
    out = _out_dir(cfg)
    model = _load_model(out, kind)

    by_id: dict[str, dict[Period, ingest.SceneRecord]] = {}
    for scene in scenes:
        by_id.setdefault(scene.id, {})[scene.period] = scene
    paired = {sid: v for sid, v in by_id.items() if len(v) == 2}
    if not paired:
        raise ValueError("no location appears in both periods; nothing to join")
    sids = sorted(paired)
    X1 = np.vstack([paired[s][Period.P1].features for s in sids])
    X2 = np.vstack([paired[s][Period.P2].features for s in sids])
    h1 = dict(zip(sids, map(float, hazard.scores_for(model, feature_names, X1))))
    h2 = dict(zip(sids, map(float, hazard.scores_for(model, feature_names, X2))))
    points = {s: paired[s][Period.P1].location for s in sids}

    edge_hazard, unsnapped = risk_mod.join_hazard_to_edges(
        net, points, h1, h2, snap_radius_m=cfg.snap_radius_m, kind=kind
    )
    if not edge_hazard:
        raise ValueError("no scene snapped to any edge within the snap radius")
    _, _, betweenness, closeness = _centrality_for_kind(cfg, args, net, kind)

    edge_by_id = {e.id: e for e in net.edges}
    _write_csv(
        out / f"risk_{kind.value}.csv",
        ("edge_id", "n_scenes", "h1", "h2", "dh", "betweenness", "closeness"),
        [
            (e.edge_id, e.n_scenes, e.h1, e.h2, e.dh, betweenness[e.edge_id], closeness[e.edge_id])
            for e in edge_hazard
        ],
    )

    corr1 = risk_mod.centrality_correlation(edge_hazard, closeness, period=1)
    corr2 = risk_mod.centrality_correlation(edge_hazard, closeness, period=2)
    _, rho_dh = risk_mod.delta_vs_betweenness(edge_hazard, betweenness)
    _write_json(
        out / f"correlation_{kind.value}.json",
        {
            "closeness_h1": {
                "spearman_rho": corr1.spearman_rho,
                "p_value": corr1.p_value,
                "n": corr1.n,
                "bin_means": corr1.bin_means,
            },
            "closeness_h2": {
                "spearman_rho": corr2.spearman_rho,
                "p_value": corr2.p_value,
                "n": corr2.n,
                "bin_means": corr2.bin_means,
            },
            "betweenness_abs_dh": {"spearman_rho": rho_dh, "n": len(edge_hazard)},
            "unsnapped_scenes": sorted(unsnapped),
        },
    )

    deteriorated, improved = risk_mod.extreme_segments(edge_hazard)
    node_by_id = {n.id: n for n in net.nodes}
    features = []
    for status, group in (("deteriorated", deteriorated), ("improved", improved)):
        for e in group:
            edge = edge_by_id[e.edge_id]
            a = node_by_id[edge.u]
            b = node_by_id[edge.v]
            features.append(
                {
                    "type": "Feature",
                    "geometry": {
                        "type": "LineString",
                        "coordinates": [
                            [a.point.lon, a.point.lat],
                            [b.point.lon, b.point.lat],
                        ],
                    },
                    "properties": {
                        "edge_id": e.edge_id,
                        "status": status,
                        "n_scenes": e.n_scenes,
                        "h1": e.h1,
                        "h2": e.h2,
                        "dh": e.dh,
                    },
                }
            )
    features.sort(key=lambda f: f["properties"]["edge_id"])
    _write_json(out / f"extremes_{kind.value}.geojson", {"type": "FeatureCollection", "features": features})
    print(
        f"{kind.value}: {len(edge_hazard)} edges with hazard, {len(unsnapped)} unsnapped scenes, "
        f"{len(deteriorated)} deteriorated, {len(improved)} improved"
    )
    return EXIT_OK


_COMMANDS = {
    "label": cmd_label,
    "train": cmd_train,
    "score": cmd_score,
    "change": cmd_change,
    "network": cmd_network,
    "risk": cmd_risk,
}


class _Parser(argparse.ArgumentParser):
    # usage mistakes are input errors, exit code 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="streetrisk", description="Location hazard and network risk pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} step")
        p.add_argument("--config", required=True, help="key = value configuration file")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--kind", choices=[k.value for k in AccidentKind], help="accident kind filter")
        p.add_argument("--period", choices=[p2.value for p2 in Period], help="period filter")
        p.add_argument("--restricted", action="store_true", help="keep only pairs the models classify correctly")
        p.add_argument("--threads", type=int, help="worker threads for the heavy kernels")
        p.add_argument("--seed", type=int, help="seed recorded in the config (overrides the file)")
    return parser


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if args.out:
        cfg.out_dir = args.out
    if args.threads is not None:
        if args.threads < 1:
            raise InputError("--threads must be at least 1")
        cfg.threads = args.threads
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(_require_path(args.config, "--config"))
        cfg = _apply_overrides(cfg, args)
    except (InputError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        return _COMMANDS[args.command](cfg, args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, KeyError, ArithmeticError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
