"""Command-line entry point.

Exit codes: 0 success, 1 internal or I/O error, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import json
import logging
import signal
import sys
from pathlib import Path

from linkpulse.config import ENV_VAR, Config, load_config
from linkpulse.counters import CounterStore, LineError, load_events, site_id
from linkpulse.errors import LinkpulseError, NoContent, RemoteError
from linkpulse.popularity import page_layout
from linkpulse.ranker import LinkGraph, PageRef, rank_results, ranked_to_json
from linkpulse.simulator import ScenarioParams, SimConfig, run_simulation, scenario_ab
from linkpulse.summarize import GENERIC, QUERY, load_corpus, prune_popular, summarize
from linkpulse.service import serve

log = logging.getLogger("linkpulse")

_D = Config()


class UsageError(Exception):
    pass


def _emit(payload) -> None:
    text = payload if isinstance(payload, str) else json.dumps(payload, indent=2)
    sys.stdout.write(text.rstrip("\n") + "\n")


def _report(errors: list[LineError], source: str) -> None:
    for e in errors:
        print(f"{source}:{e.line}: {e.message}", file=sys.stderr)


def _config(args) -> Config:
    return load_config(args.config).override(
        window_length=args.window,
        bucket_width=args.bucket_width,
        k=args.k,
        lam=args.lam,
        beta=args.beta,
        damping=getattr(args, "damping", None),
        zipf_s=getattr(args, "zipf_s", None),
    )


def _load_store(path: str, cfg: Config) -> tuple[CounterStore, int, list[LineError]]:
    store = CounterStore(cfg.window_length, cfg.bucket_width)
    with open(path, encoding="utf-8") as fh:
        ingested, errors = load_events(store, fh, slack=cfg.slack)
    _report(errors, path)
    return store, ingested, errors


def cmd_ingest(args) -> int:
    cfg = _config(args)
    store, ingested, errors = _load_store(args.log, cfg)
    snap = store.snapshot(args.now)
    _emit(
        {
            "ingested": ingested,
            "errors": [e.to_dict() for e in errors],
            "now": snap.now,
            "sites": {
                site: {
                    "total": sum(h for h, _ in snap.site_table(site).values()),
                    "links": {
                        link: {"history": h, "recent": r}
                        for link, (h, r) in sorted(snap.site_table(site).items())
                    },
                }
                for site in snap.sites()
            },
        }
    )
    return 0


def cmd_layout(args) -> int:
    cfg = _config(args)
    store, _, _ = _load_store(args.log, cfg)
    snap = store.snapshot(args.now)
    _emit(page_layout(snap, site_id(args.site), cfg.k).to_json())
    return 0


def _read_candidates(path: str) -> list[PageRef]:
    text = Path(path).read_text(encoding="utf-8")
    try:
        obj = json.loads(text)
        items = obj if isinstance(obj, list) else [obj]
    except json.JSONDecodeError:
        items = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            if line.strip():
                try:
                    items.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise UsageError(f"{path}:{lineno}: {exc}") from None
    try:
        return [PageRef.from_dict(o) for o in items]
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{path}: bad candidate entry: {exc}") from None


def cmd_rank(args) -> int:
    cfg = _config(args)
    with open(args.graph, encoding="utf-8") as fh:
        graph = LinkGraph.from_jsonl(fh, source=args.graph)
    store, _, _ = _load_store(args.log, cfg)
    candidates = _read_candidates(args.candidates) if args.candidates else None
    ranked = rank_results(
        graph,
        store.snapshot(args.now),
        candidates,
        lam=cfg.lam,
        beta=cfg.beta,
        k_topleft=cfg.k,
        damping=cfg.damping,
        epsilon=cfg.epsilon,
        max_iter=cfg.max_iter,
    )
    _emit(ranked_to_json(ranked))
    return 0


def cmd_simulate(args) -> int:
    cfg = _config(args)
    if args.scenario:
        params = ScenarioParams(k=cfg.k, lam=cfg.lam, beta=cfg.beta)
        if args.seed is not None:
            params.seed = args.seed
        report = scenario_ab(params)
        if args.out:
            Path(args.out).write_text(report.to_json() + "\n", encoding="utf-8")
        _emit(report.to_json())
        return 0
    if not args.sim_config or not args.out:
        raise UsageError("simulate needs CONFIG and --out (or --scenario)")
    obj = json.loads(Path(args.sim_config).read_text(encoding="utf-8"))
    if args.seed is not None:
        obj["seed"] = args.seed
    for spec in obj.get("sites", []):
        if "attractiveness" not in spec:
            spec.setdefault("zipf_s", cfg.zipf_s)
    result = run_simulation(SimConfig.from_dict(obj))
    Path(args.out).write_text(result.to_jsonl(), encoding="utf-8")
    _emit(result.summary())
    return 0


def _interrupt(signum, frame):
    raise KeyboardInterrupt


def cmd_serve(args) -> int:
    cfg = _config(args)
    store = CounterStore(cfg.window_length, cfg.bucket_width)
    if args.log:
        with open(args.log, encoding="utf-8") as fh:
            _, errors = load_events(store, fh, slack=cfg.slack)
        _report(errors, args.log)
    clock = (lambda: args.now) if args.now is not None else None
    handle = serve(store, args.bind, clock=clock, k=cfg.k, background=False)
    signal.signal(signal.SIGTERM, _interrupt)
    print(f"serving on {handle.url}", file=sys.stderr, flush=True)
    try:
        handle.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        handle.shutdown()
    return 0


def cmd_summarize(args) -> int:
    cfg = _config(args)
    docs = load_corpus(args.corpus, args.manifest)
    store, _, _ = _load_store(args.log, cfg)
    snap = store.snapshot(args.now)
    sites = args.site or sorted({d.site for d in docs})
    pruned = prune_popular(snap, sites, docs, cfg.k)
    if args.mode == QUERY and not args.query:
        raise UsageError("--query is required with --mode query")
    summary = summarize(
        pruned,
        args.budget,
        args.mode,
        args.query,
        threshold=cfg.similarity_threshold,
        redundancy_cap=cfg.redundancy_cap,
    )
    _emit(summary.to_json())
    return 0


def _positive_int(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {n}")
    return n


def _nonneg_int(value: str) -> int:
    n = int(value)
    if n < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {n}")
    return n


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help=f"JSON config file (fallback: ${ENV_VAR})")
    common.add_argument("--window", type=_positive_int, metavar="SECONDS",
                        help=f"recent-count window (default: {_D.window_length})")
    common.add_argument("--bucket-width", type=_positive_int, metavar="SECONDS",
                        help=f"recency bucket width (default: {_D.bucket_width})")
    common.add_argument("--k", type=_positive_int, metavar="N",
                        help=f"layout slot size (default: {_D.k})")
    common.add_argument("--lambda", dest="lam", type=float, metavar="X",
                        help=f"local-popularity weight (default: {_D.lam})")
    common.add_argument("--beta", type=float, metavar="X",
                        help=f"top-left boost (default: {_D.beta})")
    common.add_argument("--now", type=_nonneg_int, metavar="TS",
                        help="query time, epoch seconds (default: newest event in the log)")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(prog="linkpulse", description=__doc__.splitlines()[0] if __doc__ else None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="replay a click log and print counters")
    p.add_argument("log", help="click log (JSONL)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("layout", parents=[common], help="print a site's top-k layout")
    p.add_argument("log", help="click log (JSONL)")
    p.add_argument("--site", required=True)
    p.set_defaults(func=cmd_layout)

    p = sub.add_parser("rank", parents=[common], help="rank pages by blended popularity")
    p.add_argument("--graph", required=True, metavar="PATH", help="link graph (JSONL)")
    p.add_argument("--log", required=True, metavar="PATH", help="click log (JSONL)")
    p.add_argument("--candidates", metavar="PATH", help="JSON list of {site, link} (default: every page)")
    p.add_argument("--damping", type=float, help=f"PageRank damping (default: {_D.damping})")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("simulate", parents=[common], help="generate synthetic traffic")
    p.add_argument("sim_config", nargs="?", metavar="CONFIG", help="simulation config (JSON)")
    p.add_argument("--out", metavar="PATH", help="output click log")
    p.add_argument("--seed", type=_nonneg_int, metavar="N", help="override the config seed")
    p.add_argument("--zipf-s", type=float, metavar="S",
                   help=f"Zipf exponent for sites without attractiveness (default: {_D.zipf_s})")
    p.add_argument("--scenario", action="store_true",
                   help="run the popular-site vs. better-page scenario and print its report")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("serve", parents=[common], help="serve counters over HTTP")
    p.add_argument("--bind", default="127.0.0.1:8080", metavar="ADDR:PORT",
                   help="listen address (default: 127.0.0.1:8080)")
    p.add_argument("--log", metavar="PATH", help="click log to preload")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("summarize", parents=[common], help="summarize a site's popular pages")
    p.add_argument("--corpus", required=True, metavar="DIR")
    p.add_argument("--manifest", required=True, metavar="PATH")
    p.add_argument("--log", required=True, metavar="PATH", help="click log (JSONL)")
    p.add_argument("--site", action="append", help="site to summarize; repeat for multi-site (default: all)")
    p.add_argument("--mode", choices=[GENERIC, QUERY], default=GENERIC, help="(default: generic)")
    p.add_argument("--query", metavar="TERMS", help="query terms for --mode query")
    p.add_argument("--budget", type=_positive_int, default=3, metavar="N",
                   help="maximum summary sentences (default: 3)")
    p.set_defaults(func=cmd_summarize)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (UsageError, ValueError, NoContent) as exc:
        print(f"linkpulse: error: {exc}", file=sys.stderr)
        return 2
    except RemoteError as exc:
        print(f"linkpulse: error: {exc}", file=sys.stderr)
        return 1
    except LinkpulseError as exc:
        print(f"linkpulse: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"linkpulse: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover
        log.exception("unexpected failure")
        print(f"linkpulse: internal error: {exc}", file=sys.stderr)
        return 1
