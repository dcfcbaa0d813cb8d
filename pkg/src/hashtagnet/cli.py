"""Command-line interface: ``hashtagnet <verb> [options]``.

Exit codes: 0 success, 2 input error, 3 stage failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import tomli

from hashtagnet import community as comm
from hashtagnet import pipeline, stats, temporal
from hashtagnet.corpus import CorpusError, write_jsonl
from hashtagnet.graph import build_bipartite, project, read_edgelist, write_edgelist, write_graphml
from hashtagnet.pipeline import RunConfig, StageError, load_records, write_csv, write_json
from hashtagnet.synthetic import SyntheticSpec, generate_synthetic

log = logging.getLogger("hashtagnet")

EXIT_OK, EXIT_INPUT, EXIT_STAGE = 0, 2, 3


class InputError(Exception):
    pass


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _int_list(text: str) -> list[int]:
    return [int(t) for t in _csv_list(text)]


def _windows(text: str) -> list[list[int]]:
    out = []
    for part in _csv_list(text):
        lo, _, hi = part.partition(":")
        out.append([int(lo), int(hi)])
    if len(out) != 2:
        raise argparse.ArgumentTypeError("expected A_START:A_END,B_START:B_END")
    return out


def _common(p: argparse.ArgumentParser, corpus: bool = True) -> None:
    p.add_argument("--config", help="TOML file of key = value settings (flags override it)")
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--output")
    p.add_argument("-v", "--verbose", action="store_true")
    if corpus:
        p.add_argument("--input", help="corpus file; omitted = bundled synthetic corpus")
        p.add_argument("--format", choices=["jsonl", "csv"])
        p.add_argument("--exclude", action="append", metavar="TAG", help="hashtag to drop (repeatable)")
        p.add_argument("--from", dest="date_from", metavar="DATE")
        p.add_argument("--to", dest="date_to", metavar="DATE")
        p.add_argument("--no-fold", dest="lowercase_fold", action="store_false", default=None)
        p.add_argument("--cooccurrence", choices=["tweet", "user"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hashtagnet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("ingest", help="parse and filter a corpus into normalized JSONL")
    _common(p)

    p = sub.add_parser("project", help="write a projection as TSV edge list (and GraphML)")
    _common(p)
    p.add_argument("--kind", dest="projection", choices=["semantic", "interest"], default="semantic")
    p.add_argument("--graphml", help="also write GraphML here")

    p = sub.add_parser("stats", help="distributions, power-law fits and binned curves")
    _common(p)
    p.add_argument("--projection", choices=["semantic", "interest"], default="semantic")
    p.add_argument("--graph", help="read a TSV edge list instead of a corpus")
    p.add_argument("--kind", action="append", choices=[*stats.DIST_KINDS, *stats.CURVE_KINDS])
    p.add_argument("--fit", choices=list(stats.FIT_METHODS))
    p.add_argument("--xmin", type=int)
    p.add_argument("--xmax", type=int)

    p = sub.add_parser("nullmodel", help="null-model replicas as edge lists plus a manifest")
    _common(p)
    p.add_argument("--projection", choices=["semantic", "interest"], default="semantic")
    p.add_argument("--method", choices=["ab-initio", "configuration"], required=True)
    p.add_argument("--replicas", type=int)
    p.add_argument("--swaps-per-edge", type=int)

    p = sub.add_parser("robustness", help="targeted-attack percolation curves")
    _common(p)
    p.add_argument("--projection", choices=["semantic", "interest"], default="semantic")
    p.add_argument("--step", type=float)
    p.add_argument("--null", type=_csv_list, help="comma list of ab-initio,configuration")
    p.add_argument("--replicas", type=int)
    p.add_argument("--swaps-per-edge", type=int)
    p.add_argument("--adaptive", action="store_true", default=None)

    p = sub.add_parser("communities", help="Louvain communities of the semantic network")
    _common(p)
    p.add_argument("--resolution", type=float)
    p.add_argument("--runs", type=int)
    p.add_argument("--min-size", type=int)

    p = sub.add_parser("temporal", help="Jaccard series, permanence, phases and community flow")
    _common(p)
    p.add_argument("--projection", choices=["semantic", "interest"], default="semantic")
    p.add_argument("--smooth-window", type=int)
    p.add_argument("--phases", type=_int_list)
    p.add_argument("--flow-windows", type=_windows)
    p.add_argument("--require-exit", action="store_true", default=None)
    p.add_argument("--resolution", type=float)
    p.add_argument("--runs", type=int)

    p = sub.add_parser("run-all", help="full analysis into a report directory")
    _common(p)
    p.add_argument("--projections", type=_csv_list)
    p.add_argument("--fit", choices=list(stats.FIT_METHODS))
    p.add_argument("--xmin", type=int)
    p.add_argument("--xmax", type=int)
    p.add_argument("--null", type=_csv_list)
    p.add_argument("--replicas", type=int)
    p.add_argument("--swaps-per-edge", type=int)
    p.add_argument("--step", type=float)
    p.add_argument("--adaptive", action="store_true", default=None)
    p.add_argument("--resolution", type=float)
    p.add_argument("--runs", type=int)
    p.add_argument("--min-size", type=int)
    p.add_argument("--smooth-window", type=int)
    p.add_argument("--phases", type=_int_list)
    p.add_argument("--flow-windows", type=_windows)
    p.add_argument("--require-exit", action="store_true", default=None)
    p.add_argument("--synth-seed", type=int)

    p = sub.add_parser("synth", help="write a synthetic corpus with planted communities")
    _common(p, corpus=False)
    p.add_argument("--users", type=int, default=SyntheticSpec.n_users)
    p.add_argument("--hashtags", type=int, default=SyntheticSpec.n_hashtags)
    p.add_argument("--messages", type=int, default=SyntheticSpec.n_messages)
    p.add_argument("--communities", type=int, default=SyntheticSpec.n_communities)
    p.add_argument("--mixing", type=float, default=SyntheticSpec.mixing)
    p.add_argument("--days", type=int, default=SyntheticSpec.n_days)
    p.add_argument("--truth", help="planted ground-truth JSON path (default: <output>.truth.json)")
    return parser


# flags that are not RunConfig fields
_LOCAL = {"verb", "config", "verbose", "graphml", "graph", "kind", "projection", "method",
          "users", "hashtags", "messages", "communities", "mixing", "days", "truth"}


def make_config(args: argparse.Namespace) -> RunConfig:
    data = {}
    if args.config:
        try:
            with open(args.config, "rb") as fh:
                data = tomli.load(fh)
        except (OSError, tomli.TOMLDecodeError) as exc:
            raise InputError(f"cannot read config: {exc}") from exc
    for key, value in vars(args).items():
        if key not in _LOCAL and value is not None:
            data[key] = value
    if getattr(args, "projection", None) and "projections" not in data:
        data["projections"] = [args.projection]
    try:
        cfg = RunConfig.from_mapping(data)
        cfg.validate()
    except (ValueError, TypeError, FileNotFoundError) as exc:
        raise InputError(str(exc)) from exc
    return cfg


def _records(cfg: RunConfig):
    try:
        return load_records(cfg)
    except (CorpusError, OSError, ValueError) as exc:
        raise InputError(str(exc)) from exc


def _outdir(cfg: RunConfig, default: str) -> Path:
    out = Path(cfg.output if cfg.output != "report" else default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_ingest(args, cfg):
    records, _, summary = _records(cfg)
    out = sys.stdout if cfg.output == "report" else open(cfg.output, "w", encoding="utf-8")
    try:
        write_jsonl(records, out)
    finally:
        if out is not sys.stdout:
            out.close()
    log.info("%d records, %d authors, %d hashtags", summary["n_records"], summary["n_authors"], summary["n_hashtags"])


def cmd_project(args, cfg):
    records, _, _ = _records(cfg)
    g = project(build_bipartite(records), args.projection, cfg.cooccurrence)
    if cfg.output == "report":
        write_edgelist(g, sys.stdout)
    else:
        with open(cfg.output, "w", encoding="utf-8") as fh:
            write_edgelist(g, fh)
    if args.graphml:
        with open(args.graphml, "w", encoding="utf-8") as fh:
            write_graphml(g, fh)
    log.info("%s network: %d vertices, %d edges", args.projection, g.n_vertices, g.n_edges)


def _graph(args, cfg):
    if getattr(args, "graph", None):
        try:
            with open(args.graph, encoding="utf-8") as fh:
                return read_edgelist(fh)
        except (OSError, ValueError) as exc:
            raise InputError(str(exc)) from exc
    records, _, _ = _records(cfg)
    return project(build_bipartite(records), args.projection, cfg.cooccurrence)


def cmd_stats(args, cfg):
    g = _graph(args, cfg)
    out = _outdir(cfg, "stats")
    kinds = args.kind or [*stats.DIST_KINDS, *stats.CURVE_KINDS]
    fits = {}
    for kind in kinds:
        if kind in stats.DIST_KINDS:
            dist = stats.distribution(g, kind)
            values, counts = dist.support
            write_csv(out / f"{kind}_dist.csv", ["value", "count"], zip(values.tolist(), counts.tolist()))
            try:
                fits[kind] = stats.fit_power_law(dist, cfg.xmin, cfg.fit, cfg.xmax).as_dict()
            except stats.FitError as exc:
                fits[kind] = {"error": str(exc)}
        else:
            c = stats.curve(g, kind)
            write_csv(out / f"{kind}.csv", ["x", "y", "n"], c.rows())
            fits[kind] = {"slope": c.slope()}
    write_json(out / "fits.json", fits)


def cmd_nullmodel(args, cfg):
    records, _, _ = _records(cfg)
    g = project(build_bipartite(records), args.projection, cfg.cooccurrence)
    cfg.null = [args.method.replace("-", "_")]
    replicas, report = pipeline.null_replicas(records, g, args.projection, cfg, cfg.seed)
    out = _outdir(cfg, "nullmodel")
    for method, graphs in replicas.items():
        for r, rg in enumerate(graphs):
            with open(out / f"{method}_{r:03d}.tsv", "w", encoding="utf-8") as fh:
                write_edgelist(rg, fh)
    write_json(out / "manifest.json", {"seed": cfg.seed, "projection": args.projection, "methods": report})


def cmd_robustness(args, cfg):
    records, _, _ = _records(cfg)
    g = project(build_bipartite(records), args.projection, cfg.cooccurrence)
    replicas, report = pipeline.null_replicas(records, g, args.projection, cfg, cfg.seed)
    curves = pipeline.robustness_curves(g, replicas, cfg)
    rows = [(c.variant, *row) for c in curves for row in c.rows()]
    if cfg.output == "report":
        path = Path(f"robustness_{args.projection}.csv")
    else:
        path = Path(cfg.output)
        if path.suffix != ".csv":
            path.mkdir(parents=True, exist_ok=True)
            path = path / f"{args.projection}.csv"
    write_csv(path, ["variant", "f", "S_mean", "S_min", "S_max"], rows)


def cmd_communities(args, cfg):
    records, _, _ = _records(cfg)
    g = project(build_bipartite(records), "semantic", cfg.cooccurrence)
    part = comm.best_of_runs(g, cfg.seed, cfg.runs, cfg.resolution)
    out = _outdir(cfg, "communities")
    with open(out / "partition.tsv", "w", encoding="utf-8") as fh:
        fh.write("label\tcommunity\n")
        for lab, c in zip(part.labels, part.assignment.tolist()):
            fh.write(f"{lab}\t{c}\n")
    min_size = cfg.min_size or 1
    write_json(out / "summary.json", part.summary(g, min_size))
    names = [f"C{i + 1}" for i in range(part.n_communities)]
    mat = comm.interaction_matrix(g, part)
    write_csv(out / "interaction.csv", ["", *names], ([n, *row] for n, row in zip(names, mat.tolist())))
    act = comm.activity_series(records, part)
    write_csv(out / "activity.csv", ["day", *names], ([d.isoformat(), *r] for d, r in zip(act.days, act.shares.tolist())))
    log.info("Q=%.4f, %d communities", part.modularity, part.n_communities)


def cmd_temporal(args, cfg):
    records, _, _ = _records(cfg)
    g = project(build_bipartite(records), args.projection, cfg.cooccurrence)
    out = _outdir(cfg, "temporal")
    pipeline.temporal_outputs(records, {args.projection: g}, cfg, out, cfg.seed)
    sem = g if args.projection == "semantic" else project(build_bipartite(records), "semantic", cfg.cooccurrence)
    part = comm.best_of_runs(sem, cfg.seed, cfg.runs, cfg.resolution)
    spans = temporal.community_span(part, temporal.permanence_table(records, "hashtag"))
    write_json(out / "spans.json", [s.as_dict() for s in spans])


def cmd_run_all(args, cfg):
    manifest = pipeline.run_pipeline(cfg)
    c = manifest["community"]
    log.info("done: Q=%.4f, %d communities (%d with >= %d members)", c["modularity"], c["n_communities"],
             c["n_communities_min_size"], c["min_size"])


def cmd_synth(args):
    spec = SyntheticSpec(
        n_users=args.users,
        n_hashtags=args.hashtags,
        n_messages=args.messages,
        n_communities=args.communities,
        mixing=args.mixing,
        n_days=args.days,
        seed=args.seed or 0,
    )
    records, truth = generate_synthetic(spec)
    path = args.output or "synthetic.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        write_jsonl(records, fh)
    Path(args.truth or f"{path}.truth.json").write_text(truth.to_json() + "\n")


COMMANDS = {
    "ingest": cmd_ingest,
    "project": cmd_project,
    "stats": cmd_stats,
    "nullmodel": cmd_nullmodel,
    "robustness": cmd_robustness,
    "communities": cmd_communities,
    "temporal": cmd_temporal,
    "run-all": cmd_run_all,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.verb == "synth":
            cmd_synth(args)
            return EXIT_OK
        cfg = make_config(args)
        COMMANDS[args.verb](args, cfg)
    except InputError as exc:
        log.error("input error: %s", exc)
        return EXIT_INPUT
    except StageError as exc:
        log.error("%s", exc)
        if exc.stage in ("config", "corpus") and isinstance(exc.cause, (CorpusError, OSError, ValueError)):
            return EXIT_INPUT
        return EXIT_STAGE
    except (comm.CommunityError, stats.FitError, ValueError) as exc:
        log.error("stage failure: %s", exc)
        return EXIT_STAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
