import json

import pytest

from scribekit.cli import build_parser, main
from scribekit.corpus import mini_corpus_path
from scribekit.instruct import parse_records

MINI = str(mini_corpus_path())


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestStats:
    def test_table_shape(self, capsys):
        code, out, _ = run(capsys, "stats", "--corpus", MINI, "--tokens", "whitespace")
        assert code == 0
        assert out.splitlines()[0] == "| statistic | train | valid | test1 | test2 | test3 |"
        assert "| encounters | 1 | 1 | 1 | 1 | 1 |" in out

    def test_json_format(self, capsys):
        code, out, _ = run(capsys, "stats", "--corpus", MINI, "--format", "json")
        assert code == 0
        assert [row["split"] for row in json.loads(out)] == ["train", "valid", "test1", "test2", "test3"]

    def test_missing_corpus_is_exit_1(self, capsys):
        code, _, err = run(capsys, "stats", "--corpus", "/nonexistent/path")
        assert code == 1
        assert "error" in err


class TestIngestAndValidate:
    def test_ingest_jsonl(self, capsys):
        code, out, err = run(capsys, "ingest", "--corpus", MINI, "--split", "train")
        assert code == 0
        lines = [json.loads(line) for line in out.splitlines()]
        assert len(lines) == 1
        assert lines[0]["id"] == "D2N0001"
        assert "ingested 1" in err

    def test_validate_clean(self, capsys):
        code, out, _ = run(capsys, "validate", "--corpus", MINI)
        assert code == 0
        assert json.loads(out)["clean"] is True

    def test_validate_dirty_exits_1(self, capsys, tmp_corpus):
        root = tmp_corpus({"train": {"x": ("[doctor] hi", "free text note, no headers")}})
        code, out, _ = run(capsys, "validate", "--corpus", str(root))
        assert code == 1
        assert json.loads(out)["unsectioned_notes"] == ["x"]


class TestBuildInstruct:
    def test_output_file_parses(self, capsys, tmp_path):
        out_file = tmp_path / "sft.jsonl"
        code, _, err = run(
            capsys, "build-instruct", "--corpus", MINI, "--split", "train", "--out", str(out_file)
        )
        assert code == 0
        records = parse_records(out_file)
        assert len(records) == 1
        assert records[0].encounter_id == "D2N0001"
        assert records[0].instruction.startswith("Summarize medical dialogues")


class TestScore:
    def test_rouge_only(self, capsys, data_dir, tmp_path):
        out_file = tmp_path / "report.json"
        code, _, _ = run(
            capsys,
            "score",
            "--candidates", str(data_dir / "fixture_candidates.jsonl"),
            "--references", str(data_dir / "fixture_references.jsonl"),
            "--metrics", "rouge1,rougeLsum",
            "--out", str(out_file),
        )
        assert code == 0
        report = json.loads(out_file.read_text(encoding="utf-8"))
        assert report["per_encounter"]["enc-a"]["rouge1"]["f1"] == 1.0

    def test_bertscore_end_to_end(self, capsys, data_dir):
        code, out, _ = run(
            capsys,
            "score",
            "--candidates", str(data_dir / "fixture_candidates.jsonl"),
            "--references", str(data_dir / "fixture_references.jsonl"),
            "--metrics", "bertscore",
            "--embeddings", str(data_dir / "fixture_embeddings.jsonl"),
        )
        assert code == 0
        report = json.loads(out)
        assert report["per_encounter"]["enc-a"]["bertscore"]["f1"] == pytest.approx(1.0, abs=1e-12)
        assert report["metadata"]["encoder"] == "fixture-unit-4d"

    def test_missing_reference_names_id(self, capsys, tmp_path, data_dir):
        refs = tmp_path / "refs.jsonl"
        refs.write_text('{"id": "enc-a", "text": "x"}\n', encoding="utf-8")
        code, _, err = run(
            capsys,
            "score",
            "--candidates", str(data_dir / "fixture_candidates.jsonl"),
            "--references", str(refs),
            "--metrics", "rouge1",
        )
        assert code == 1
        assert "enc-b" in err

    def test_jobs_do_not_change_output(self, capsys, data_dir):
        outputs = []
        for jobs in ("1", "4"):
            code, out, _ = run(
                capsys,
                "score",
                "--candidates", str(data_dir / "fixture_candidates.jsonl"),
                "--references", str(data_dir / "fixture_references.jsonl"),
                "--metrics", "rouge1,rouge2,rougeLsum",
                "--jobs", jobs,
            )
            assert code == 0
            outputs.append(out)
        assert outputs[0] == outputs[1]

    def test_failed_run_leaves_no_out_file(self, capsys, tmp_path, data_dir):
        out_file = tmp_path / "never.json"
        code, _, _ = run(
            capsys,
            "score",
            "--candidates", str(data_dir / "fixture_candidates.jsonl"),
            "--references", str(data_dir / "fixture_references.jsonl"),
            "--metrics", "bertscore",  # no --embeddings: config error
            "--out", str(out_file),
        )
        assert code == 1
        assert not out_file.exists()


class TestLeaderboard:
    def test_rows_file(self, capsys, tmp_path):
        rows = [
            {"system_name": "a", "rouge1": 10.0},
            {"system_name": "b", "rouge1": 20.0},
        ]
        path = tmp_path / "rows.json"
        path.write_text(json.dumps(rows), encoding="utf-8")
        code, out, _ = run(capsys, "leaderboard", str(path), "--sort", "rouge1")
        assert code == 0
        assert out.splitlines()[2].split("|")[1].strip() == "b"

    def test_score_report_file(self, capsys, tmp_path, data_dir):
        report_file = tmp_path / "rep.json"
        code, _, _ = run(
            capsys,
            "score",
            "--candidates", str(data_dir / "fixture_candidates.jsonl"),
            "--references", str(data_dir / "fixture_references.jsonl"),
            "--metrics", "rouge1",
            "--system", "demo-system",
            "--out", str(report_file),
        )
        assert code == 0
        code, out, _ = run(capsys, "leaderboard", str(report_file), "--sort", "rouge1")
        assert code == 0
        assert "demo-system" in out


class TestDemos:
    def test_lora_demo_seeded_reproducible(self, capsys):
        runs = [run(capsys, "lora-demo", "--seed", "11", "--steps", "30")[1] for _ in range(2)]
        assert runs[0] == runs[1]
        payload = json.loads(runs[0])
        assert payload["final_loss"] <= payload["first_loss"]

    def test_quant_demo_from_file(self, capsys, tmp_path):
        values = tmp_path / "vals.txt"
        values.write_text("1.0\n-2.0\n0.5\n4.0\n", encoding="utf-8")
        code, out, _ = run(capsys, "quant-demo", "--scheme", "absmax4", "--block-size", "4",
                           "--input", str(values))
        assert code == 0
        payload = json.loads(out)
        assert set(payload) == {"scheme", "block_size", "mse", "max_abs_error"}
        assert payload["max_abs_error"] <= (4.0 / 7.0) / 2 + 1e-12

    def test_quant_demo_seeded_reproducible(self, capsys):
        runs = [
            run(capsys, "quant-demo", "--scheme", "nf4", "--count", "512", "--seed", "2")[1]
            for _ in range(2)
        ]
        assert runs[0] == runs[1]

    def test_quant_demo_bad_value_named(self, capsys, tmp_path):
        values = tmp_path / "vals.txt"
        values.write_text("1.0\nnot-a-number\n", encoding="utf-8")
        code, _, err = run(capsys, "quant-demo", "--input", str(values))
        assert code == 1
        assert "line 2" in err


class TestUsage:
    @pytest.mark.parametrize(
        "command",
        ["ingest", "stats", "validate", "build-instruct", "score", "leaderboard", "lora-demo", "quant-demo"],
    )
    def test_help_exits_zero(self, capsys, command):
        with pytest.raises(SystemExit) as exc:
            main([command, "--help"])
        assert exc.value.code == 0

    EXPECTED_FLAGS = {
        "ingest": ("--corpus", "--manifest", "--split", "--out"),
        "stats": ("--corpus", "--manifest", "--split", "--tokens", "--format", "--out"),
        "validate": ("--corpus", "--manifest", "--out"),
        "build-instruct": ("--corpus", "--manifest", "--split", "--template", "--out"),
        "score": (
            "--candidates", "--references", "--metrics", "--metric-config",
            "--embeddings", "--stemming", "--stopwords", "--idf", "--jobs", "--system", "--out",
        ),
        "leaderboard": ("--sort", "--format", "--out"),
        "lora-demo": ("--d", "--k", "--rank", "--alpha", "--steps", "--lr", "--seed", "--target", "--out"),
        "quant-demo": ("--scheme", "--block-size", "--input", "--count", "--seed", "--out"),
    }

    @pytest.mark.parametrize("command", sorted(EXPECTED_FLAGS))
    def test_help_lists_every_flag(self, capsys, command):
        with pytest.raises(SystemExit) as exc:
            main([command, "--help"])
        assert exc.value.code == 0
        out = capsys.readouterr().out
        for flag in self.EXPECTED_FLAGS[command]:
            assert flag in out

    def test_unknown_flag_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["stats", "--corpus", MINI, "--bogus"])
        assert exc.value.code == 2

    def test_unknown_subcommand_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_parser_builds(self):
        assert build_parser().prog == "scribekit"
