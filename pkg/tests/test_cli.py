import json

import numpy as np
import pytest

from roman.cli import EXIT_CONFIG, EXIT_MISSING, EXIT_PARSE, main
from roman.dataio import load_tensor, load_ts, preprocess


def run_cli(args):
    return main(args)


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    code = run_cli(["synth", "--family", "position", "--seed", "0",
                    "--n-train", "24", "--n-test", "12", "--out", str(out)])
    assert code == 0
    return out


class TestSynthCommand:
    def test_outputs_exist(self, synth_dir):
        assert (synth_dir / "position_seed0_TRAIN.ts").exists()
        assert (synth_dir / "position_seed0_TEST.ts").exists()
        meta = json.loads((synth_dir / "position_seed0_metadata.json").read_text())
        assert meta["family"] == "position"
        assert meta["class_ranges"] == [[32, 72], [88, 128]]

    def test_bit_reproducible(self, synth_dir, tmp_path):
        out2 = tmp_path / "again"
        assert run_cli(["synth", "--family", "position", "--seed", "0",
                        "--n-train", "24", "--n-test", "12",
                        "--out", str(out2)]) == 0
        a = (synth_dir / "position_seed0_TRAIN.ts").read_bytes()
        b = (out2 / "position_seed0_TRAIN.ts").read_bytes()
        assert a == b

    def test_infeasible_geometry_exit_code(self, tmp_path):
        code = run_cli(["synth", "--family", "longrange", "--seed", "0",
                        "--out", str(tmp_path / "x")])
        assert code == 0  # defaults are feasible
        # force infeasibility through a config error path: bad family is
        # caught by argparse as a usage (config) error
        with pytest.raises(SystemExit) as excinfo:
            run_cli(["synth", "--family", "bogus", "--out", str(tmp_path / "y")])
        assert excinfo.value.code == EXIT_CONFIG


class TestTransformCommand:
    def test_identity_tensors_match_preprocessed_input(self, synth_dir, tmp_path):
        out = tmp_path / "t1"
        code = run_cli(["transform", "--input",
                        str(synth_dir / "position_seed0_TRAIN.ts"),
                        "--scales", "1", "--out", str(out)])
        assert code == 0
        ds = preprocess(load_ts(synth_dir / "position_seed0_TRAIN.ts"))
        arr, meta = load_tensor(out / "tensor_00000.bin")
        assert np.array_equal(arr, ds.values[0])
        assert meta["label"] == int(ds.labels[0])

    def test_scales4_shape_and_plan(self, synth_dir, tmp_path):
        out = tmp_path / "t4"
        code = run_cli(["transform", "--input",
                        str(synth_dir / "position_seed0_TRAIN.ts"),
                        "--scales", "4", "--alpha", "0.5", "--out", str(out)])
        assert code == 0
        arr, meta = load_tensor(out / "tensor_00003.bin")
        assert arr.shape == (26, 64)
        assert meta["plan"]["pseudochannel_order"][0] == [1, 1, 1]
        plan = json.loads((out / "plan.json").read_text())
        assert plan["window_counts"] == [15, 7, 3, 1]
        assert plan["base_length"] == 64

    def test_min_base_matches_explicit_depth(self, synth_dir, tmp_path):
        out_a = tmp_path / "ma"
        out_b = tmp_path / "mb"
        run_cli(["transform", "--input", str(synth_dir / "position_seed0_TRAIN.ts"),
                 "--min-base", "64", "--out", str(out_a)])
        run_cli(["transform", "--input", str(synth_dir / "position_seed0_TRAIN.ts"),
                 "--scales", "4", "--out", str(out_b)])
        a, _ = load_tensor(out_a / "tensor_00000.bin")
        b, _ = load_tensor(out_b / "tensor_00000.bin")
        assert np.array_equal(a, b)

    def test_parse_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.ts"
        bad.write_text("@problemName x\n@classLabel true a\n@data\n1.0,zap:a\n")
        code = run_cli(["transform", "--input", str(bad), "--scales", "1",
                        "--out", str(tmp_path / "o")])
        assert code == EXIT_PARSE

    def test_missing_input_exit_code(self, tmp_path):
        code = run_cli(["transform", "--input", str(tmp_path / "nope.ts"),
                        "--scales", "1", "--out", str(tmp_path / "o")])
        assert code == EXIT_PARSE

    def test_config_error_exit_code(self, synth_dir, tmp_path):
        code = run_cli(["transform", "--input",
                        str(synth_dir / "position_seed0_TRAIN.ts"),
                        "--scales", "1", "--alpha", "1.5",
                        "--out", str(tmp_path / "o")])
        assert code == EXIT_CONFIG
        code = run_cli(["transform", "--input",
                        str(synth_dir / "position_seed0_TRAIN.ts"),
                        "--min-base", "9999", "--out", str(tmp_path / "o")])
        assert code == EXIT_CONFIG


@pytest.fixture(scope="module")
def records_jsonl(tmp_path_factory, synth_dir):
    out = tmp_path_factory.mktemp("bench") / "records.jsonl"
    code = run_cli(["bench", "--data-dir", str(synth_dir), "--probe", "pooled",
                    "--scales", "1,2,3,4", "--seeds", "5", "--kernels", "25",
                    "--store-predictions", "--out", str(out)])
    assert code == 0
    return out


class TestBenchPipeline:
    def test_record_count(self, records_jsonl):
        lines = [l for l in records_jsonl.read_text().splitlines() if l]
        assert len(lines) == 1 * 4 * 5  # datasets x configs x seeds

    def test_summarize_csv(self, records_jsonl, tmp_path):
        out = tmp_path / "summary.csv"
        code = run_cli(["summarize", "--records", str(records_jsonl),
                        "--out", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("config,baseline")
        assert len(lines) == 4  # header + S in {2,3,4}

    def test_summarize_missing_baseline_exit(self, records_jsonl, tmp_path):
        trimmed = tmp_path / "nobase.jsonl"
        lines = [l for l in records_jsonl.read_text().splitlines()
                 if '"scales": 1' not in l]
        trimmed.write_text("\n".join(lines) + "\n")
        code = run_cli(["summarize", "--records", str(trimmed)])
        assert code == EXIT_MISSING

    def test_ensemble_command(self, records_jsonl, tmp_path, capsys):
        out = tmp_path / "ensemble.csv"
        code = run_cli(["ensemble", "--records", str(records_jsonl),
                        "--out", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "dataset,acc_baseline_only,acc_mixed_scale,acc_diff"
        assert len(lines) == 2

    def test_ensemble_missing_member_exit(self, records_jsonl, tmp_path):
        trimmed = tmp_path / "nomember.jsonl"
        lines = [l for l in records_jsonl.read_text().splitlines()
                 if not ('"scales": 3' in l and '"seed": 0' in l)]
        trimmed.write_text("\n".join(lines) + "\n")
        code = run_cli(["ensemble", "--records", str(trimmed)])
        assert code == EXIT_MISSING

    def test_bench_csv_to_stdout(self, synth_dir, capsys):
        code = run_cli(["bench", "--data-dir", str(synth_dir),
                        "--scales", "1", "--seeds", "1", "--kernels", "20"])
        assert code == 0
        out = capsys.readouterr().out
        assert out.startswith("dataset,probe,scales,alpha,seed")

    def test_bench_requires_datasets(self):
        assert run_cli(["bench", "--scales", "1"]) == EXIT_CONFIG


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as excinfo:
        run_cli(["--version"])
    assert excinfo.value.code == 0
    assert capsys.readouterr().out.strip() == "0.1.0"


def test_unknown_flag_is_config_error():
    with pytest.raises(SystemExit) as excinfo:
        run_cli(["transform", "--nonsense"])
    assert excinfo.value.code == EXIT_CONFIG


def test_threads_precedence_flag_over_env(monkeypatch):
    from roman.cli import _resolve_threads

    class Args:
        threads = 4

    monkeypatch.setenv("ROMAN_THREADS", "2")
    assert _resolve_threads(Args()) == 4
    Args.threads = None
    assert _resolve_threads(Args()) == 2
    monkeypatch.setenv("ROMAN_THREADS", "junk")
    assert _resolve_threads(Args()) == 1
    monkeypatch.delenv("ROMAN_THREADS")
    assert _resolve_threads(Args()) == 1
