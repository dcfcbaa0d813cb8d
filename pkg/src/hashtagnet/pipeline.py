"""End-to-end run: corpus -> graphs -> stats -> null models -> robustness -> communities -> temporal."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import platform
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, fields
from datetime import date
from pathlib import Path
from typing import Any

import numpy as np
import scipy

from hashtagnet import __version__
from hashtagnet import community as comm
from hashtagnet import nullmodel, robustness, stats, temporal
from hashtagnet.corpus import (
    CorpusConfig,
    day_range,
    filter_records,
    normalize_hashtag,
    parse_records,
    write_jsonl,
)
from hashtagnet.graph import build_bipartite, project, write_edgelist, write_graphml
from hashtagnet.synthetic import SyntheticSpec, generate_synthetic

log = logging.getLogger(__name__)

STAGES = ("corpus", "graph", "stats", "nullmodel", "robustness", "community", "temporal")
PARTIAL_MARKER = ".partial"


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class RunConfig:
    input: str | None = None
    format: str = "jsonl"
    exclude: list[str] = field(default_factory=lambda: ["occupy"])
    date_from: str | None = None
    date_to: str | None = None
    lowercase_fold: bool = True
    projections: list[str] = field(default_factory=lambda: ["semantic", "interest"])
    cooccurrence: str = "tweet"
    fit: str = "mle"
    xmin: int = 1
    xmax: int | None = None
    null: list[str] = field(default_factory=lambda: ["ab_initio", "configuration"])
    replicas: int = 10
    swaps_per_edge: int = 10
    step: float = 0.01
    adaptive: bool = False
    runs: int = 1
    resolution: float = 1.0
    # 0 picks 1% of the semantic vertices
    min_size: int = 0
    smooth_window: int = 7
    phases: list[int] = field(default_factory=lambda: list(temporal.DEFAULT_PHASES))
    require_exit: bool = False
    flow_windows: list[list[int]] | None = None
    output: str = "report"
    seed: int = 0
    synth_seed: int | None = None

    @classmethod
    def from_mapping(cls, data: dict[str, Any]) -> RunConfig:
        known = {f.name for f in fields(cls)}
        clean = {k.replace("-", "_"): v for k, v in data.items()}
        unknown = set(clean) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**clean)

    def corpus_config(self) -> CorpusConfig:
        start = date.fromisoformat(self.date_from) if self.date_from else None
        end = date.fromisoformat(self.date_to) if self.date_to else None
        excluded = frozenset(normalize_hashtag(t, self.lowercase_fold) for t in self.exclude) - {""}
        return CorpusConfig(excluded, day_range(start, end), self.lowercase_fold)

    def validate(self) -> None:
        if self.input is not None and not Path(self.input).exists():
            raise FileNotFoundError(self.input)
        bad = set(self.projections) - {"semantic", "interest"}
        if bad:
            raise ValueError(f"unknown projections {sorted(bad)}")
        self.null = [m.replace("-", "_") for m in self.null]
        bad = set(self.null) - set(nullmodel.METHODS)
        if bad:
            raise ValueError(f"unknown null models {sorted(bad)}")
        if not 0 < self.step <= 1:
            raise ValueError("step must be in (0, 1]")
        if self.fit not in stats.FIT_METHODS:
            raise ValueError(f"unknown fit method {self.fit!r}")


def derive_seed(seed: int, label: str) -> int:
    """Stage seed from the global seed by a labelled hash, so stages rerun identically in isolation."""
    digest = hashlib.sha256(f"{seed}/{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def load_records(cfg: RunConfig):
    """Parsed and filtered records, plus a summary dict."""
    if cfg.input is None:
        seed = cfg.synth_seed if cfg.synth_seed is not None else derive_seed(cfg.seed, "synthetic")
        records, truth = generate_synthetic(SyntheticSpec(seed=seed))
        summary = {"source": "synthetic", "synthetic_seed": seed, "n_lines": len(records), "n_malformed": 0}
    else:
        parsed = parse_records(cfg.input, cfg.format, cfg.lowercase_fold)
        records, truth = parsed.records, None
        summary = {"source": str(cfg.input), "n_lines": parsed.n_lines, "n_malformed": parsed.n_malformed}
    if not records:
        raise ValueError("empty corpus")
    records = filter_records(records, cfg.corpus_config())
    if not records:
        raise ValueError("empty corpus after filtering")
    summary.update(
        n_records=len(records),
        n_authors=len({r.author for r in records}),
        n_hashtags=len({t for r in records for t in r.hashtags}),
        first_day=min(r.day for r in records).isoformat(),
        last_day=max(r.day for r in records).isoformat(),
        excluded=sorted(cfg.corpus_config().excluded_hashtags),
    )
    return records, truth, summary


def fmt(x) -> str:
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True, ensure_ascii=False, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def stats_outputs(graph, outdir: Path, prefix: str, cfg: RunConfig) -> dict:
    """Write distribution/curve CSVs for one graph and return the fit summary."""
    fits: dict[str, Any] = {}
    for kind in stats.DIST_KINDS:
        dist = stats.distribution(graph, kind)
        values, counts = dist.support
        write_csv(outdir / f"{prefix}_{kind}_dist.csv", ["value", "count"], zip(values.tolist(), counts.tolist()))
        fits[kind] = {}
        for method in stats.FIT_METHODS:
            try:
                fits[kind][method] = stats.fit_power_law(dist, cfg.xmin, method, cfg.xmax).as_dict()
            except stats.FitError as exc:
                fits[kind][method] = {"error": str(exc)}
    curves = {}
    for kind in stats.CURVE_KINDS:
        c = stats.curve(graph, kind)
        write_csv(outdir / f"{prefix}_{kind}.csv", ["x", "y", "n"], c.rows())
        curves[kind] = {"slope": c.slope(), "n_bins": len(c.x)}
    summary = {"fits": fits, "curves": curves, "fit_method": cfg.fit}
    write_json(outdir / f"{prefix}_fits.json", summary)
    return summary


def null_replicas(records, graph, kind: str, cfg: RunConfig, seed: int) -> tuple[dict, dict]:
    """Replica graphs per null model for one projection, with their per-replica reports."""
    replicas, report = {}, {}
    for method in cfg.null:
        mseed = derive_seed(seed, f"{kind}/{method}")
        graphs, reports = [], []
        for r in range(cfg.replicas):
            rng = nullmodel.replica_rng(mseed, r)
            if method == "ab_initio":
                shuffled, rep = nullmodel.ab_initio_shuffle(records, mseed, rng=rng)
                g = project(build_bipartite(shuffled), kind, cfg.cooccurrence)
            else:
                g, rep = nullmodel.configuration_rewire(graph, mseed, cfg.swaps_per_edge, rng=rng)
            d = rep.as_dict()
            d.update(replica=r, n_vertices=g.n_vertices, n_edges=g.n_edges)
            graphs.append(g)
            reports.append(d)
        replicas[method] = graphs
        report[method] = {"seed": mseed, "replicas": reports}
    return replicas, report


def robustness_curves(graph, replicas: dict, cfg: RunConfig) -> list:
    """Original and null-ensemble percolation curves on the common grid."""
    original = robustness.targeted_attack_curve(graph, cfg.step, cfg.adaptive)
    curves = [robustness.resample(original, cfg.step)]
    for method, graphs in replicas.items():
        reps = [robustness.targeted_attack_curve(g, cfg.step, cfg.adaptive, variant=method) for g in graphs]
        curves.append(robustness.ensemble_curve(reps, cfg.step, method))
    return curves


@contextmanager
def _stage(name: str, timings: dict):
    t0 = time.perf_counter()
    log.info("stage %s", name)
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc
    finally:
        timings[name] = round(time.perf_counter() - t0, 3)


def run_pipeline(cfg: RunConfig) -> dict:
    """Execute every stage in order and write the report directory.

    Returns the manifest. A ``.partial`` marker stays in the output directory
    if any stage fails.
    """
    out = Path(cfg.output)
    timings: dict[str, float] = {}
    with _stage("config", timings):
        cfg.validate()
    out.mkdir(parents=True, exist_ok=True)
    marker = out / PARTIAL_MARKER
    marker.write_text("incomplete run\n")
    dirs = {s: out / s for s in STAGES}
    for d in dirs.values():
        d.mkdir(exist_ok=True)
    seeds = {s: derive_seed(cfg.seed, s) for s in ("nullmodel", "community", "temporal")}
    manifest: dict[str, Any] = {"graphs": {}, "fits": {}}

    with _stage("corpus", timings):
        records, truth, summary = load_records(cfg)
        write_json(dirs["corpus"] / "summary.json", summary)
        if truth is not None:
            with open(dirs["corpus"] / "synthetic.jsonl", "w", encoding="utf-8") as fh:
                write_jsonl(records, fh)
            (dirs["corpus"] / "planted.json").write_text(truth.to_json() + "\n")
        manifest["corpus"] = summary

    with _stage("graph", timings):
        bip = build_bipartite(records)
        graphs = {k: project(bip, k, cfg.cooccurrence) for k in cfg.projections}
        for kind, g in graphs.items():
            with open(dirs["graph"] / f"{kind}.tsv", "w", encoding="utf-8") as fh:
                write_edgelist(g, fh)
            with open(dirs["graph"] / f"{kind}.graphml", "w", encoding="utf-8") as fh:
                write_graphml(g, fh)
            manifest["graphs"][kind] = {"n_vertices": g.n_vertices, "n_edges": g.n_edges, "total_weight": g.total_weight}
        manifest["bipartite"] = {"n_users": bip.n_users, "n_hashtags": bip.n_hashtags, "n_messages": len(bip.messages)}

    with _stage("stats", timings):
        for kind, g in graphs.items():
            if g.n_edges == 0:
                continue
            s = stats_outputs(g, dirs["stats"], kind, cfg)
            manifest["fits"][kind] = {
                k: s["fits"][k][cfg.fit].get("gamma") for k in stats.DIST_KINDS
            }

    replicas, null_report = {}, {}
    with _stage("nullmodel", timings):
        for kind, g in graphs.items():
            replicas[kind], null_report[kind] = null_replicas(records, g, kind, cfg, seeds["nullmodel"])
        write_json(dirs["nullmodel"] / "manifest.json", {"seed": seeds["nullmodel"], "projections": null_report})

    with _stage("robustness", timings):
        for kind, g in graphs.items():
            curves = robustness_curves(g, replicas[kind], cfg)
            rows = [(c.variant, *row) for c in curves for row in c.rows()]
            write_csv(dirs["robustness"] / f"{kind}.csv", ["variant", "f", "S_mean", "S_min", "S_max"], rows)
        del replicas

    with _stage("community", timings):
        sem = graphs.get("semantic")
        if sem is None or sem.n_edges == 0:
            sem = project(bip, "semantic", cfg.cooccurrence)
        part = comm.best_of_runs(sem, seeds["community"], cfg.runs, cfg.resolution)
        min_size = cfg.min_size or max(2, math.ceil(0.01 * sem.n_vertices))
        with open(dirs["community"] / "partition.tsv", "w", encoding="utf-8") as fh:
            fh.write("label\tcommunity\n")
            for lab, c in zip(part.labels, part.assignment.tolist()):
                fh.write(f"{lab}\t{c}\n")
        summary = part.summary(sem, min_size)
        write_json(dirs["community"] / "summary.json", summary)
        names = [f"C{i + 1}" for i in range(part.n_communities)]
        mat = comm.interaction_matrix(sem, part)
        write_csv(dirs["community"] / "interaction.csv", ["", *names], ([n, *row] for n, row in zip(names, mat.tolist())))
        act = comm.activity_series(records, part)
        write_csv(
            dirs["community"] / "activity.csv",
            ["day", *names],
            ([d.isoformat(), *row] for d, row in zip(act.days, act.shares.tolist())),
        )
        table = temporal.permanence_table(records, "hashtag")
        spans = temporal.community_span(part, table)
        write_json(dirs["community"] / "spans.json", [s.as_dict() for s in spans])
        manifest["community"] = {
            "modularity": part.modularity,
            "n_communities": part.n_communities,
            "n_communities_min_size": summary["n_communities_min_size"],
            "min_size": min_size,
            "sizes": part.sizes.tolist(),
        }

    with _stage("temporal", timings):
        manifest["temporal"] = temporal_outputs(records, graphs, cfg, dirs["temporal"], seeds["temporal"])

    manifest["provenance"] = {
        "seed": cfg.seed,
        "stage_seeds": seeds,
        "config": {k: v for k, v in asdict(cfg).items() if k != "output"},
        "versions": {
            "hashtagnet": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "smoothing": "centred moving average (window clipped at the ends)",
        "timings": timings,
    }
    write_json(out / "manifest.json", manifest)
    marker.unlink()
    return manifest


def temporal_outputs(records, graphs, cfg: RunConfig, outdir: Path, seed: int) -> dict:
    result: dict[str, Any] = {}
    entity = {"semantic": "hashtag", "interest": "user"}
    for kind, g in graphs.items():
        series = temporal.snapshot_series(records, kind, cfg.cooccurrence)
        if len(series) >= 2:
            js = temporal.jaccard_series(series, cfg.smooth_window)
            write_csv(
                outdir / f"{kind}_jaccard.csv",
                ["day", "JN", "JE", "JN_smooth", "JE_smooth"],
                zip(
                    [d.isoformat() for d in js.days],
                    js.nodes.tolist(),
                    js.edges.tolist(),
                    js.nodes_smooth.tolist(),
                    js.edges_smooth.tolist(),
                ),
            )
            result[f"{kind}_smooth_window"] = js.window
        table = temporal.permanence_table(records, entity[kind])
        with open(outdir / f"{kind}_permanence.tsv", "w", encoding="utf-8") as fh:
            fh.write("label\tt_min\tt_max\tpermanence\n")
            for lab, lo, hi in zip(table.labels, table.t_min.tolist(), table.t_max.tolist()):
                fh.write(f"{lab}\t{lo}\t{hi}\t{hi - lo}\n")
        pvd = temporal.permanence_vs_degree(g, table)
        write_csv(outdir / f"{kind}_permanence_vs_degree.csv", ["x", "y", "n"], pvd.rows())

    phases = temporal.phase_new_hashtags(records, cfg.phases, cfg.require_exit)
    write_json(outdir / "phases.json", {"boundaries": cfg.phases, "require_exit": cfg.require_exit, "phases": phases})

    last_day = (max(r.day for r in records) - min(r.day for r in records)).days + 1
    if cfg.flow_windows:
        early, late = (tuple(w) for w in cfg.flow_windows)
    else:
        bounds = temporal.phase_bounds(cfg.phases, last_day)
        early, late = bounds[0], bounds[-1]
    flow = temporal.community_flow(records, early, late, seed, cfg.resolution, cfg.runs)
    write_csv(outdir / "flow.csv", ["", *flow.col_labels], ([r, *row] for r, row in zip(flow.row_labels, flow.matrix.tolist())))
    write_json(outdir / "flow_top.json", {"early_window": early, "late_window": late, "early": flow.early_top, "late": flow.late_top})
    result["flow_windows"] = [list(early), list(late)]
    result["phase_sizes"] = [len(p) for p in phases]
    return result

