import hashlib
import json
from pathlib import Path

import pytest

from citectx.cli import main

FIXTURES = Path(__file__).parent / "fixtures"


def run(argv):
    return main([str(a) for a in argv])


def base_args(out_dir, extra=()):
    return [
        "--corpus", FIXTURES / "corpus",
        "--embeddings", FIXTURES / "vectors.txt",
        "--lexicon", FIXTURES / "lexicon.txt",
        "--domain-lexicon", FIXTURES / "domain_lexicon.txt",
        "--out", out_dir,
        "--seed", 7,
        *extra,
    ]


def tree_digest(root: Path, exclude=("run_manifest.json",)) -> dict[str, str]:
    digests = {}
    for path in sorted(root.rglob("*")):
        if path.is_file() and path.name not in exclude:
            digests[str(path.relative_to(root))] = hashlib.sha256(
                path.read_bytes()
            ).hexdigest()
    return digests


class TestPipelineDeterminism:
    def test_two_runs_byte_identical_except_manifest(self, tmp_path):
        out1, out2 = tmp_path / "run1", tmp_path / "run2"
        for out in (out1, out2):
            code = run(["pipeline", *base_args(out, ["--model", "interpolated"])])
            assert code == 0
        d1, d2 = tree_digest(out1), tree_digest(out2)
        assert d1 and d1 == d2

    def test_manifest_written_with_timings(self, tmp_path):
        out = tmp_path / "run"
        assert run(["pipeline", *base_args(out, ["--model", "bm25"])]) == 0
        manifests = list(out.rglob("run_manifest.json"))
        assert len(manifests) == 1
        manifest = json.loads(manifests[0].read_text())
        assert manifest["seed"] == 7
        assert "contextualize" in manifest["timings"]
        assert manifest["config_hash"] in str(manifests[0].parent)


class TestContextualize:
    def test_offsets_match_index_artifact(self, tmp_path):
        out = tmp_path / "out"
        code = run(
            ["contextualize", *base_args(out, ["--model", "lmd", "--k", 10])]
        )
        assert code == 0
        run_dir = next(p for p in out.iterdir() if p.is_dir())
        for ctx_file in sorted((run_dir / "contexts").glob("*.json")):
            index = json.loads(
                (run_dir / "index" / ctx_file.name).read_text()
            )
            contexts = json.loads(ctx_file.read_text())
            assert contexts
            for entries in contexts.values():
                assert 0 < len(entries) <= 10
                for e in entries:
                    span = index["spans"][e["span_ref"]]
                    assert e["char_start"] == span["char_start"]
                    assert e["char_end"] == span["char_end"]
                    assert e["n"] == span["n"]

    def test_supervised_without_ranker_exits_2(self, tmp_path):
        code = run(
            ["contextualize", *base_args(tmp_path / "o", ["--model", "supervised"])]
        )
        assert code == 2

    def test_unknown_model_exits_2(self, tmp_path):
        code = run(["contextualize", *base_args(tmp_path / "o", ["--model", "magic"])])
        assert code == 2


class TestEvaluate:
    def test_missing_gold_exits_2_and_names_gold(self, tmp_path, capsys):
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        data = json.loads((FIXTURES / "corpus" / "topic_a.json").read_text())
        data.pop("gold", None)
        (corpus / "topic_a.json").write_text(json.dumps(data))
        out = tmp_path / "out"
        args = [
            "--corpus", corpus,
            "--out", out,
            "--model", "bm25",
            "--seed", 7,
        ]
        assert run(["contextualize", *args]) == 0
        code = run(["evaluate", *args])
        captured = capsys.readouterr()
        assert code == 2
        assert "gold" in captured.err

    def test_evaluate_before_contextualize_exits_2(self, tmp_path):
        code = run(
            ["evaluate", *base_args(tmp_path / "o", ["--model", "bm25"])]
        )
        assert code == 2

    def test_report_written_after_pipeline(self, tmp_path):
        out = tmp_path / "out"
        assert run(["pipeline", *base_args(out, ["--model", "vsm"])]) == 0
        reports = list(out.rglob("evaluation/report.json"))
        assert len(reports) == 1
        payload = json.loads(reports[0].read_text())
        assert "macro" in payload and "per_topic" in payload
        assert "char" in payload["macro"]
        tsv = reports[0].with_name("report.tsv").read_text()
        assert tsv.startswith("topic\tmetric")


class TestRetrofit:
    def test_writes_vector_file(self, tmp_path):
        out = tmp_path / "out"
        code = run(["retrofit", *base_args(out)])
        assert code == 0
        vec_files = list(out.rglob("retrofitted_vectors.txt"))
        assert len(vec_files) == 1
        lines = vec_files[0].read_text().splitlines()
        count, dim = map(int, lines[0].split())
        assert len(lines) == count + 1
        assert all(len(line.split()) == dim + 1 for line in lines[1:])

    def test_without_lexicon_exits_2(self, tmp_path):
        code = run(
            [
                "retrofit",
                "--embeddings", FIXTURES / "vectors.txt",
                "--out", tmp_path / "o",
            ]
        )
        assert code == 2


class TestConfigHandling:
    def test_config_file_plus_override(self, tmp_path):
        cfg = {
            "corpus_dir": str(FIXTURES / "corpus"),
            "model": "vsm",
            "k": 2,
            "out_dir": str(tmp_path / "a"),
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        assert run(["index", "--config", cfg_path]) == 0
        assert list((tmp_path / "a").rglob("index/*.json"))

    def test_unknown_config_key_exits_2(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"no_such_option": 1}))
        assert run(["index", "--config", cfg_path]) == 2

    def test_different_configs_get_different_run_dirs(self, tmp_path):
        out = tmp_path / "out"
        assert run(["index", *base_args(out, ["--model", "vsm"])]) == 0
        assert run(["index", *base_args(out, ["--model", "bm25"])]) == 0
        run_dirs = [p for p in out.iterdir() if p.is_dir()]
        assert len(run_dirs) == 2


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("golden")
    code = run(["pipeline", *base_args(out, ["--model", "interpolated"])])
    assert code == 0
    return next(p for p in out.iterdir() if p.is_dir())


class TestGoldenSummaries:
    """Summaries for the fixture corpus are frozen byte-for-byte."""

    @pytest.mark.parametrize("topic_id", ["topic_a", "topic_b"])
    def test_summary_matches_golden(self, run_dir, topic_id):
        golden = FIXTURES / "golden" / f"{topic_id}.txt"
        produced = run_dir / "summaries" / f"{topic_id}.txt"
        assert produced.read_bytes() == golden.read_bytes()
