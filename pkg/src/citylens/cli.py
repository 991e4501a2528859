"""Command line entry points: gen · import · serve · replay-bench · stats.

Exit codes: 0 ok, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from citylens import analytics
from citylens.errors import CityError
from citylens.gen import DEFAULT_COUNTS, GenSpec, generate_city, write_artifacts, write_city
from citylens.geo import BBox
from citylens.importer import import_dataset
from citylens.logfile import EventLogFile, read_log
from citylens.runtime import load_runtime
from citylens.sdm.store import EventStore
from citylens.sdm.types import EntityKind

USAGE_EXIT = 1
DATA_EXIT = 2


class _Parser(argparse.ArgumentParser):
    """argparse with the documented usage exit code (1, not argparse's 2)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _parse_counts(text: str | None) -> dict[str, float]:
    if not text:
        return {}
    counts: dict[str, float] = {}
    for item in text.split(","):
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise CityError(f"counts must be k=v pairs, got {item!r}")
        try:
            counts[key] = float(value)
        except ValueError:
            raise CityError(f"count {key!r} has a non-numeric value {value!r}") from None
    return counts


def _parse_bbox(text: str | None) -> BBox | None:
    if text is None:
        return None
    try:
        min_lon, min_lat, max_lon, max_lat = (float(v) for v in text.split(","))
    except ValueError:
        raise CityError(f"bbox must be minlon,minlat,maxlon,maxlat, got {text!r}") from None
    return BBox(min_lon, min_lat, max_lon, max_lat)


def _cmd_gen(args) -> int:
    counts = _parse_counts(args.counts)
    box = _parse_bbox(args.bbox)
    spec = GenSpec(seed=args.seed, counts=counts) if box is None else GenSpec(args.seed, counts, box)
    city = generate_city(spec)
    log_path, geom_path = write_city(city, args.out)
    print(f"wrote {len(city.events)} events to {log_path}")
    print(f"wrote {len(city.geometry)} geometries to {geom_path}")
    return 0


def _cmd_import(args) -> int:
    result = import_dataset(args.path)
    report = result.report
    if result.events:
        from citylens.gen import DEFAULT_BBOX

        box = result.bbox if result.bbox is not None else DEFAULT_BBOX
        log_path, geom_path = write_artifacts(result.events, result.geometry, box, args.out)
        print(f"wrote {len(result.events)} events to {log_path} (+ {geom_path.name})")
    print(f"accepted {report.accepted}, rejected {report.rejected}")
    for line in report.diagnostics:
        print(f"  {line}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from citylens.service import create_app

    runtime = load_runtime(args.log, args.geometry)
    log = EventLogFile(args.log)
    app = create_app(runtime, log, ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _cmd_replay_bench(args) -> int:
    events = read_log(args.log)
    if not events:
        print("log is empty")
        return 0
    store = EventStore()
    start = time.perf_counter()
    for event in events:
        store.apply_event(event)
    elapsed = time.perf_counter() - start
    rate = len(events) / elapsed if elapsed > 0 else float("inf")
    print(f"replayed {len(events)} events in {elapsed:.3f}s ({rate:,.0f} events/s)")
    return 0


def _cmd_stats(args) -> int:
    runtime = load_runtime(args.log, args.geometry)
    store = runtime.store
    t = store.head_time if args.at is None else args.at
    selector = analytics.parse_region_selector(args.region)
    kind = EntityKind.parse(args.kind)
    picked = analytics.select_entities(store, runtime.index, runtime.regions, selector, kind, t)
    if args.attr == "age":
        cmap = analytics.CategoryMap.ranges((("child", 0, 18), ("adult", 18, 60), ("senior", 60, None)))
    else:
        cmap = analytics.CategoryMap.identity()
    comp = analytics.composition(store, picked, args.attr, cmap, t)
    doc = {
        "attribute": comp.attribute,
        "total": comp.total,
        "categories": [
            {"label": label, "count": count, "fraction": fraction}
            for label, count, fraction in comp.categories
        ],
    }
    print(json.dumps(doc, indent=2, sort_keys=False))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="citylens", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", help="generate a deterministic synthetic city")
    gen.add_argument("--seed", type=int, default=0, help="PRNG seed (u64)")
    gen.add_argument("--out", required=True, help="output directory for events.jsonl + geometry.json")
    gen.add_argument("--counts", help=f"k=v,... overrides; keys: {', '.join(sorted(DEFAULT_COUNTS))}")
    gen.add_argument("--bbox", help="city bbox as minlon,minlat,maxlon,maxlat")
    gen.set_defaults(func=_cmd_gen)

    imp = sub.add_parser("import", help="convert a FeatureCollection file into city artifacts")
    imp.add_argument("path", help="FeatureCollection JSON file")
    imp.add_argument("--out", required=True, help="output directory for events.jsonl + geometry.json")
    imp.set_defaults(func=_cmd_import)

    serve = sub.add_parser("serve", help="serve a city over HTTP")
    serve.add_argument("--log", required=True, help="event log to recover and serve")
    serve.add_argument("--geometry", help="geometry sidecar (default: geometry.json next to the log)")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--ui", help="directory with the browser client, mounted at /ui")
    serve.set_defaults(func=_cmd_serve)

    bench = sub.add_parser("replay-bench", help="measure replay throughput over a log")
    bench.add_argument("--log", required=True, help="event log to replay")
    bench.set_defaults(func=_cmd_replay_bench)

    stats = sub.add_parser("stats", help="offline composition breakdown to stdout")
    stats.add_argument("--log", required=True, help="event log to recover")
    stats.add_argument("--geometry", help="geometry sidecar (default: geometry.json next to the log)")
    stats.add_argument("--region", required=True, help="admin:d1/s1 · community:c1 · grid:g1,g2 · bbox:...")
    stats.add_argument("--kind", default="person", help="entity kind to tally")
    stats.add_argument("--attr", required=True, help="attribute to break down")
    stats.add_argument("--at", type=int, help="as-of time in ms (default: head of log)")
    stats.set_defaults(func=_cmd_stats)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CityError as exc:
        print(f"citylens: {type(exc).__name__}: {exc}", file=sys.stderr)
        return DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
