import json

import numpy as np
import pytest
from scipy.sparse import csgraph

from hashtagnet import cli
from hashtagnet.corpus import parse_records, write_jsonl
from hashtagnet.graph import build_bipartite, project_semantic, read_edgelist, read_graphml
from hashtagnet.pipeline import PARTIAL_MARKER, RunConfig, StageError, derive_seed, run_pipeline
from hashtagnet.synthetic import SyntheticSpec, generate_synthetic

from oracles import graph_pairs, make_record, semantic_pairs

SMALL = SyntheticSpec(n_users=60, n_hashtags=200, n_messages=600, n_communities=3, n_days=30, seed=4)


@pytest.fixture(scope="module")
def corpus_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("corpus") / "small.jsonl"
    records, _ = generate_synthetic(SMALL)
    with open(path, "w") as fh:
        write_jsonl(records, fh)
    return path


def _small_config(corpus_file, out, **kw):
    base = dict(input=str(corpus_file), replicas=2, step=0.1, output=str(out), phases=[10, 20])
    base.update(kw)
    return RunConfig(**base)


def test_run_all_writes_report(corpus_file, tmp_path):
    manifest = run_pipeline(_small_config(corpus_file, tmp_path / "r"))
    out = tmp_path / "r"
    assert not (out / PARTIAL_MARKER).exists()
    for rel in [
        "corpus/summary.json",
        "graph/semantic.tsv",
        "graph/interest.graphml",
        "stats/semantic_weight_dist.csv",
        "stats/interest_fits.json",
        "nullmodel/manifest.json",
        "robustness/semantic.csv",
        "community/partition.tsv",
        "community/interaction.csv",
        "community/activity.csv",
        "community/spans.json",
        "temporal/semantic_jaccard.csv",
        "temporal/phases.json",
        "temporal/flow.csv",
        "manifest.json",
    ]:
        assert (out / rel).is_file(), rel
    assert set(manifest["graphs"]) == {"semantic", "interest"}
    assert manifest["community"]["n_communities_min_size"] >= 3
    assert "timings" in manifest["provenance"]
    on_disk = json.loads((out / "manifest.json").read_text())
    assert on_disk["community"]["modularity"] == pytest.approx(manifest["community"]["modularity"])


def test_report_graph_matches_oracle(corpus_file, tmp_path):
    run_pipeline(_small_config(corpus_file, tmp_path / "r", projections=["semantic"], null=[]))
    records = parse_records(corpus_file).records
    with open(tmp_path / "r/graph/semantic.tsv") as fh:
        assert graph_pairs(read_edgelist(fh)) == semantic_pairs(records)


def test_run_all_is_deterministic(corpus_file, tmp_path):
    for name in ("a", "b"):
        run_pipeline(_small_config(corpus_file, tmp_path / name, projections=["semantic"]))
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    for rel in files:
        a, b = (tmp_path / "a" / rel).read_bytes(), (tmp_path / "b" / rel).read_bytes()
        if rel.name == "manifest.json" and rel.parent == rel.parent.parent:
            a, b = (json.loads(x) for x in (a, b))
            for m in (a, b):
                del m["provenance"]["timings"]
        assert a == b, rel


def test_empty_input_aborts_at_corpus(tmp_path):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    with pytest.raises(StageError, match="empty corpus") as info:
        run_pipeline(RunConfig(input=str(empty), output=str(tmp_path / "r")))
    assert info.value.stage == "corpus"
    assert (tmp_path / "r" / PARTIAL_MARKER).exists()


def test_stage_seeds_are_stable():
    assert derive_seed(0, "community") == derive_seed(0, "community")
    assert derive_seed(0, "community") != derive_seed(0, "temporal")
    assert derive_seed(1, "community") != derive_seed(0, "community")


def test_config_rejects_unknown_keys():
    with pytest.raises(ValueError):
        RunConfig.from_mapping({"bogus": 1})
    with pytest.raises(ValueError):
        RunConfig(null=["nope"]).validate()


def test_synthetic_without_mixing_splits_cleanly():
    recs, _ = generate_synthetic(SyntheticSpec(n_users=40, n_hashtags=80, n_messages=2000, n_communities=2, mixing=0.0, seed=1))
    g = project_semantic(build_bipartite(recs))
    n_comp, _ = csgraph.connected_components(g.adjacency(), directed=False)
    assert n_comp == 2


def test_synthetic_is_seeded():
    spec = SyntheticSpec(n_users=30, n_hashtags=60, n_messages=300, seed=9)
    assert generate_synthetic(spec)[0] == generate_synthetic(spec)[0]
    other = SyntheticSpec(n_users=30, n_hashtags=60, n_messages=300, seed=10)
    assert generate_synthetic(spec)[0] != generate_synthetic(other)[0]


def test_full_mixing_gives_low_modularity():
    from hashtagnet.community import louvain_partition

    spec = dict(n_users=60, n_hashtags=300, n_messages=3000, n_communities=3, seed=3)
    planted = louvain_partition(project_semantic(build_bipartite(generate_synthetic(SyntheticSpec(mixing=0.0, **spec))[0])), 0)
    mixed = louvain_partition(project_semantic(build_bipartite(generate_synthetic(SyntheticSpec(mixing=1.0, **spec))[0])), 0)
    assert mixed.modularity < planted.modularity - 0.2


# command line


def test_cli_project_round_trips(corpus_file, tmp_path):
    tsv, gml = tmp_path / "g.tsv", tmp_path / "g.graphml"
    assert cli.main(["project", "--input", str(corpus_file), "-o", str(tsv), "--graphml", str(gml)]) == 0
    with open(tsv) as fh:
        a = read_edgelist(fh)
    with open(gml) as fh:
        b = read_graphml(fh)
    assert graph_pairs(a) == graph_pairs(b)
    assert a.n_edges > 0


def test_cli_ingest_and_synth(tmp_path):
    synth = tmp_path / "s.jsonl"
    assert cli.main(["synth", "--users", "20", "--hashtags", "40", "--messages", "100", "-o", str(synth)]) == 0
    assert (tmp_path / "s.jsonl.truth.json").is_file()
    out = tmp_path / "clean.jsonl"
    assert cli.main(["ingest", "--input", str(synth), "-o", str(out)]) == 0
    assert len(parse_records(out).records) == 100


def test_cli_config_file_and_flag_override(corpus_file, tmp_path):
    conf = tmp_path / "c.toml"
    conf.write_text(f'input = "{corpus_file}"\nruns = 2\nresolution = 5.0\n')
    out = tmp_path / "comm"
    assert cli.main(["communities", "--config", str(conf), "--resolution", "1.0", "-o", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["n_communities"] >= 3


def test_cli_exit_codes(tmp_path):
    assert cli.main(["run-all", "--input", str(tmp_path / "missing.jsonl"), "-o", str(tmp_path / "r")]) == 2
    empty = tmp_path / "e.jsonl"
    empty.write_text("")
    assert cli.main(["run-all", "--input", str(empty), "-o", str(tmp_path / "r2")]) == 2
    bad = tmp_path / "bad.toml"
    bad.write_text("this is = = not toml")
    assert cli.main(["communities", "--config", str(bad)]) == 2

    # every message carries one hashtag, so the semantic network has no edges
    lonely = tmp_path / "lonely.jsonl"
    with open(lonely, "w") as fh:
        write_jsonl([make_record(i, f"u{i % 3}", [f"t{i}"], i) for i in range(10)], fh)
    out = tmp_path / "r3"
    assert cli.main(["run-all", "--input", str(lonely), "-o", str(out), "--replicas", "1"]) == 3
    assert (out / PARTIAL_MARKER).exists()


def test_cli_stats_and_robustness(corpus_file, tmp_path):
    tsv = tmp_path / "g.tsv"
    cli.main(["project", "--input", str(corpus_file), "-o", str(tsv)])
    assert cli.main(["stats", "--graph", str(tsv), "-o", str(tmp_path / "st"), "--kind", "weight", "--kind", "knn"]) == 0
    fits = json.loads((tmp_path / "st" / "fits.json").read_text())
    assert fits["weight"]["gamma"] > 1
    rob = tmp_path / "rob.csv"
    args = ["robustness", "--input", str(corpus_file), "-o", str(rob), "--null", "configuration", "--replicas", "2", "--step", "0.1"]
    assert cli.main(args) == 0
    variants = {line.split(",")[0] for line in rob.read_text().splitlines()[1:]}
    assert variants == {"original", "configuration"}
    rows = np.array([line.split(",")[1:] for line in rob.read_text().splitlines()[1:]], dtype=float)
    assert np.all((rows[:, 1] >= rows[:, 2]) & (rows[:, 1] <= rows[:, 3]))
