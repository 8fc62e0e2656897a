import csv
import json

import pytest

from hatediffusion import cli
from hatediffusion.errors import ConvergenceError
from hatediffusion.pipeline import report_digests
from hatediffusion.testkit import SynthConfig, synth_network, write_synth


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    write_synth(synth_network(SynthConfig(n_users=300, community_sizes=[40], rng_seed=2)), d)
    return d


def run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    return code, capsys.readouterr()


def test_staged_commands(synth_dir, tmp_path, capsys):
    cache = tmp_path / "cache"
    code, out = run(["ingest", "--posts", synth_dir / "posts.jsonl", "--users", synth_dir / "users.jsonl", "--out", cache], capsys)
    assert code == 0 and json.loads(out.out)["n_users"] == 300
    code, out = run(["graph", "build", "--cache", cache], capsys)
    assert code == 0 and json.loads(out.out)["nodes"] == 300
    code, out = run(["score", "lexicon", "--cache", cache, "--out", tmp_path / "lex.csv"], capsys)
    assert code == 0 and json.loads(out.out)["matched"] > 0

    beliefs = tmp_path / "beliefs.csv"
    code, out = run(["diffuse", "--cache", cache, "--scores", synth_dir / "scores.csv", "--min-posts", 3, "--out", beliefs], capsys)
    assert code == 0 and json.loads(out.out)["seeds"] > 0
    groups = tmp_path / "groups.csv"
    code, out = run(["segment", "--beliefs", beliefs, "--cache", cache, "--out", groups], capsys)
    assert code == 0 and sum(json.loads(out.out).values()) == 300

    base = ["--cache", cache, "--groups", groups]
    for what, extra in [
        ("profile", []),
        ("share", []),
        ("centrality", ["--csv", tmp_path / "c.csv"]),
        ("degree-dist", ["--log-base", 3]),
        ("prevalence", ["--scores", synth_dir / "scores.csv"]),
        ("affect", ["--affect", synth_dir / "affect.csv"]),
    ]:
        code, out = run(["analyze", what, *base, *extra, "--out", tmp_path / f"{what}.json"], capsys)
        assert code == 0, (what, out.err)
        assert json.loads((tmp_path / f"{what}.json").read_text())
    with open(tmp_path / "c.csv") as fh:
        assert len(list(csv.reader(fh))) == 301

    code, out = run(["eval", "users", "--groups", groups, "--labels", synth_dir / "user_labels.csv"], capsys)
    assert code == 0 and json.loads(out.out)["precision"] > 0.5

    labels = tmp_path / "post_labels.csv"
    labels.write_text("post_id,label\np000000000,1\np000000001,0\np000000002,1\n")
    code, out = run(["eval", "pr", "--scores", synth_dir / "scores.csv", "--labels", labels, "--out", tmp_path / "pr.csv"], capsys)
    assert code == 0 and json.loads(out.out)

    code, out = run(["annotate", "sample", "--cache", cache, "--scores", synth_dir / "scores.csv",
                     "--per-stratum", 3, "--out", tmp_path / "sample.txt"], capsys)
    assert code == 0 and json.loads(out.out)["sampled"] == 12


def test_annotate_commands(tmp_path, capsys):
    ann = tmp_path / "ann.csv"
    ann.write_text("post_id,score1,score2,score3\na,5,5,4\nb,3,3,3\nc,2,2,5\nd,1,1,2\n")
    code, out = run(["annotate", "aggregate", "--annotations", ann, "--out", tmp_path / "labels.csv"], capsys)
    counts = json.loads(out.out)
    assert code == 0 and counts["hateful"] == counts["non_hateful"] == counts["filtered_low_agreement"] == 1
    code, out = run(["annotate", "kappa", "--annotations", ann], capsys)
    assert code == 0 and json.loads(out.out)["kappa"] <= 1


def test_usage_errors(tmp_path, capsys):
    assert run(["diffuse"], capsys)[0] == 1
    assert run(["nonsense"], capsys)[0] == 1
    assert run(["annotate", "kappa"], capsys)[0] == 1
    assert run(["run", "--posts", tmp_path / "missing.jsonl", "--scores", tmp_path / "x"], capsys)[0] == 1
    assert run(["run", "--config", tmp_path / "missing.cfg"], capsys)[0] in (1, 2)


def test_data_errors(tmp_path, capsys):
    bad = tmp_path / "posts.jsonl"
    bad.write_text('{"id": "1"}\n')
    code, out = run(["ingest", "--posts", bad, "--strict", "--out", tmp_path / "c"], capsys)
    assert code == 2 and "error" in out.err
    ann = tmp_path / "ann.csv"
    ann.write_text("a,9,9,9\n")
    assert run(["annotate", "aggregate", "--annotations", ann], capsys)[0] == 2


def test_convergence_exit_code(monkeypatch, capsys):
    def boom(args):
        raise ConvergenceError("pagerank did not converge", residual=1e-3)

    monkeypatch.setattr(cli, "cmd_synth", boom)
    assert run(["synth", "--out", "x"], capsys)[0] == 3


def _run_cfg(synth_dir, out_dir, threads=1):
    cfg = out_dir.parent / f"{out_dir.name}.cfg"
    cfg.write_text(
        f"posts = {synth_dir / 'posts.jsonl'}\nusers = {synth_dir / 'users.jsonl'}\n"
        f"scores = {synth_dir / 'scores.csv'}\naffect = {synth_dir / 'affect.csv'}\n"
        f"user_labels = {synth_dir / 'user_labels.csv'}\nout_dir = {out_dir}\nmin_posts = 3\nthreads = {threads}\n"
    )
    return cfg


def test_run_manifest_skip_and_force(synth_dir, tmp_path, capsys):
    out_dir = tmp_path / "run"
    cfg = _run_cfg(synth_dir, out_dir)
    code, out = run(["run", "--config", cfg], capsys)
    assert code == 0, out.err
    manifest = json.loads((out_dir / "manifest.json").read_text())
    listed = set(manifest["reports"])
    on_disk = {f"reports/{p.name}" for p in (out_dir / "reports").iterdir()}
    assert listed == on_disk
    assert {f"reports/{k}": v for k, v in report_digests(out_dir).items()} == manifest["reports"]
    assert manifest["stages"]["skipped"] == []
    first = report_digests(out_dir)

    code, out = run(["run", "--config", cfg], capsys)
    again = json.loads((out_dir / "manifest.json").read_text())
    assert code == 0 and "ingest" in again["stages"]["skipped"] and "graph" in again["stages"]["skipped"]
    assert report_digests(out_dir) == first

    code, out = run(["run", "--config", cfg, "--force"], capsys)
    forced = json.loads((out_dir / "manifest.json").read_text())
    assert forced["stages"]["skipped"] == [] and report_digests(out_dir) == first

    # changing a parameter changes the reports
    code, out = run(["run", "--config", cfg, "--mode", "standard", "--tau", "0.97"], capsys)
    assert code == 0 and report_digests(out_dir) != first


def test_run_flag_overrides_without_config(synth_dir, tmp_path, capsys):
    out_dir = tmp_path / "flags"
    code, out = run(["run", "--posts", synth_dir / "posts.jsonl", "--scores", synth_dir / "scores.csv",
                     "--out-dir", out_dir, "--min-posts", 3, "--iterations", 2], capsys)
    assert code == 0, out.err
    params = json.loads((out_dir / "manifest.json").read_text())["parameters"]
    assert params["iterations"] == 2 and params["min_posts"] == 3
    assert run(["run", "--posts", synth_dir / "posts.jsonl", "--scores", synth_dir / "scores.csv",
                "--out-dir", out_dir, "--theta-low", 0.9], capsys)[0] == 1
