import json

import numpy as np
import pytest

from fedquad.cli import build_parser, main
from fedquad.data import load_partition_spec


def _train_lines(capsys, extra=()):
    argv = ["train", "--synthetic", "--rows", "16", "--iters", "3",
            "--batch-size", "4", "--features-per-client", "1,2",
            "--seed", "5", *extra]
    assert main(argv) == 0
    out = capsys.readouterr().out
    return [json.loads(line) for line in out.strip().splitlines()]


class TestTrain:
    def test_emits_one_record_per_iteration_plus_summary(self, capsys):
        records = _train_lines(capsys)
        assert [r["record"] for r in records] == ["iteration"] * 3 + ["summary"]
        assert [r["iteration"] for r in records[:3]] == [0, 1, 2]

    def test_iteration_record_fields(self, capsys):
        record = _train_lines(capsys)[0]
        assert set(record) == {
            "record", "iteration", "loss", "grad_norm",
            "max_abs_grad_diff_vs_oracle", "encryptions_per_client",
            "decryptions",
        }
        assert record["encryptions_per_client"] == [2, 1]
        assert record["decryptions"] == 3

    def test_summary_record_fields(self, capsys):
        summary = _train_lines(capsys)[-1]
        assert summary["model"] == "linear"
        assert summary["iterations"] == 3
        assert summary["batch_size"] == 4
        assert summary["seed"] == 5
        assert summary["data_bits"] == 12
        assert summary["weight_bits"] == 12
        assert len(summary["final_weights"]) == 3
        assert summary["final_loss"] >= 0.0

    def test_exact_flag_overrides_bit_flags(self, capsys):
        summary = _train_lines(capsys, ["--exact", "--data-bits", "9"])[-1]
        assert summary["data_bits"] == 0
        assert summary["weight_bits"] == 0

    def test_exact_mode_matches_oracle_bitwise(self, capsys):
        for record in _train_lines(capsys, ["--exact"])[:-1]:
            assert record["max_abs_grad_diff_vs_oracle"] == 0.0

    def test_logistic_model(self, capsys):
        records = _train_lines(capsys, ["--model", "logistic", "--exact"])
        assert records[-1]["model"] == "logistic"
        for record in records[:-1]:
            assert record["max_abs_grad_diff_vs_oracle"] == 0.0

    def test_out_file_byte_identical_to_rerun(self, tmp_path):
        paths = [tmp_path / "a.jsonl", tmp_path / "b.jsonl"]
        for path in paths:
            assert main(["train", "--synthetic", "--rows", "12", "--iters",
                         "4", "--batch-size", "3", "--seed", "7",
                         "--out", str(path)]) == 0
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_file_based_dataset(self, tmp_path, capsys):
        assert main(["synth", "--rows", "12", "--features-per-client", "2,1",
                     "--seed", "3", "--out", str(tmp_path)]) == 0
        capsys.readouterr()
        argv = ["train", "--dataset", str(tmp_path / "dataset.csv"),
                "--partition", str(tmp_path / "partition.json"),
                "--iters", "2", "--batch-size", "4"]
        assert main(argv) == 0
        records = [json.loads(line)
                   for line in capsys.readouterr().out.strip().splitlines()]
        assert records[-1]["record"] == "summary"
        assert len(records) == 3

    def test_synthetic_conflicts_with_dataset(self):
        with pytest.raises(SystemExit):
            main(["train", "--synthetic", "--dataset", "x.csv"])

    def test_dataset_requires_partition(self):
        with pytest.raises(SystemExit):
            main(["train", "--dataset", "x.csv"])

    def test_lambda_flag_parses(self):
        args = build_parser().parse_args(
            ["train", "--synthetic", "--lambda", "0.5"])
        assert args.reg_lambda == 0.5

    def test_bad_feature_counts_rejected(self):
        parser = build_parser()
        for bad in ("2,zero", "0,2", ""):
            with pytest.raises(SystemExit):
                parser.parse_args(["train", "--features-per-client", bad])


class TestVerify:
    def test_all_checks_pass(self, capsys):
        assert main(["verify"]) == 0
        out = capsys.readouterr().out
        assert "9/9 checks passed" in out
        assert out.count("PASS") == 9
        assert "FAIL" not in out

    def test_report_written_to_file(self, tmp_path, capsys):
        path = tmp_path / "report.txt"
        assert main(["verify", "--out", str(path)]) == 0
        assert path.read_text() == capsys.readouterr().out

    def test_reuse_negative_control_fails(self, capsys):
        assert main(["verify", "--debug-reuse-instance"]) == 1
        out = capsys.readouterr().out
        assert "FAIL mix_and_match" in out
        assert "8/9 checks passed" in out

    def test_tags_rescue_reused_instance(self, capsys):
        assert main(["verify", "--debug-reuse-instance", "--tagged"]) == 0
        assert "9/9 checks passed" in capsys.readouterr().out


class TestSynth:
    def test_writes_three_files(self, tmp_path, capsys):
        out = tmp_path / "bundle"
        assert main(["synth", "--model", "logistic", "--rows", "10",
                     "--features-per-client", "2,2", "--seed", "1",
                     "--out", str(out)]) == 0
        assert (out / "dataset.csv").exists()
        spec = load_partition_spec(out / "partition.json")
        assert [c.name for c in spec.clients] == ["c0", "c1"]
        truth = json.loads((out / "truth.json").read_text())
        assert truth["model"] == "logistic"
        assert truth["seed"] == 1
        assert len(truth["true_weights"]) == 4

    def test_deterministic_outputs(self, tmp_path, capsys):
        dirs = [tmp_path / "a", tmp_path / "b"]
        for d in dirs:
            assert main(["synth", "--rows", "8", "--seed", "2",
                         "--out", str(d)]) == 0
        for name in ("dataset.csv", "partition.json", "truth.json"):
            assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes()


class TestParser:
    def test_requires_subcommand(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_module_entry_point(self):
        import subprocess
        import sys

        proc = subprocess.run(
            [sys.executable, "-m", "fedquad", "verify", "--seed", "1"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert "9/9 checks passed" in proc.stdout
