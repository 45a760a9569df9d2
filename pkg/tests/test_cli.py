import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from streamitn import cli
from streamitn.datagen import read_corpus
from streamitn.encoder import ModelConfig, init_params
from streamitn.inference import Tagger
from streamitn.tokenizer import build_vocab


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("data")
    assert cli.main(["gen-data", "--n", "120", "--seed", "4", "--out", str(d)]) == 0
    return d


@pytest.fixture(scope="module")
def model_path(data_dir, tmp_path_factory):
    path = tmp_path_factory.mktemp("model") / "tiny.ckpt"
    code = cli.main(["train", "--train", str(data_dir / "train.jsonl"), "--val", str(data_dir / "val.jsonl"),
                     "--out", str(path), "--epochs", "2", "--layers", "1", "--dim", "16", "--heads", "2",
                     "--ffn-dim", "32", "--merges", "60", "--lr", "1e-3"])
    assert code == 0
    return path


def test_gen_data_splits_and_determinism(data_dir, tmp_path, capsys):
    code, out, _ = run(["gen-data", "--n", "120", "--seed", "4", "--out", str(tmp_path)], capsys)
    assert code == 0 and json.loads(out) == {"train": 96, "val": 12, "test": 12}
    for name in ("train", "val", "test"):
        assert (tmp_path / f"{name}.jsonl").read_bytes() == (data_dir / f"{name}.jsonl").read_bytes()
    assert len(read_corpus(tmp_path / "train.jsonl")) == 96


def test_usage_errors_exit_2(capsys):
    assert run(["gen-data", "--n", "10"], capsys)[0] == 2
    assert run(["no-such-command"], capsys)[0] == 2
    assert run(["train", "--train", "x", "--out", "y", "--chunks", "5"], capsys)[0] == 2
    assert run([], capsys)[0] == 2


def test_help_exits_0(capsys):
    code, out, _ = run(["--help"], capsys)
    assert code == 0 and "gen-data" in out


def test_missing_files_exit_1(tmp_path, capsys):
    code, _, err = run(["eval", "--checkpoint", str(tmp_path / "none.ckpt"), "--data", "x"], capsys)
    assert code == 1 and "checkpoint not found" in err
    code, _, err = run(["train", "--train", str(tmp_path / "none.jsonl"), "--out", str(tmp_path / "m")], capsys)
    assert code == 1 and "corpus not found" in err


def test_corrupt_checkpoint_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.ckpt"
    bad.write_bytes(b"not a checkpoint")
    assert run(["stream", "--checkpoint", str(bad)], capsys)[0] == 1


def test_train_writes_loadable_checkpoint(model_path):
    params, vocab, meta = cli.load_model(model_path)
    assert params.config.layers == 1 and params.config.model_dim == 16
    assert meta["train_config"]["lr"] == 1e-3 and meta["best_epoch"] in (0, 1)
    assert vocab.pieces == tuple(meta["vocab"])


def test_eval_table_and_json(model_path, data_dir, capsys):
    code, out, _ = run(["eval", "--checkpoint", str(model_path), "--data", str(data_dir / "test.jsonl"),
                        "--name", "tiny"], capsys)
    lines = out.strip().splitlines()
    assert code == 0 and lines[0].startswith("Model") and lines[1].startswith("tiny |")
    code, out, _ = run(["eval", "--checkpoint", str(model_path), "--data", str(data_dir / "test.jsonl"),
                        "--stream-chunks", "3:5", "--stream-rc", "1:2", "--runs", "2", "--json", "--ci",
                        "--ci-iterations", "100"], capsys)
    report = json.loads(out)
    assert code == 0 and {"overall", "i_wer", "ni_wer", "ci"} <= set(report)
    assert "f1" in report["ci"]


def test_stream_prints_one_record_per_fragment(model_path, tmp_path, capsys):
    frags = tmp_path / "frags.txt"
    frags.write_text("vincom o\ncean park \ni paid three point\n five dollars\n")
    code, out, _ = run(["stream", "--checkpoint", str(model_path), "--input", str(frags), "--batch-compare"],
                       capsys)
    records = [json.loads(line) for line in out.strip().splitlines()]
    assert code == 0
    assert len(records) == 4 + 1 + 1
    assert all(set(r) == {"finalized", "provisional"} for r in records[:5])
    assert records[-1] == {"batch_compare": "equal"}
    assert records[4]["provisional"] == ""


def test_stream_empty_input(model_path, tmp_path, capsys):
    empty = tmp_path / "empty.txt"
    empty.write_text("")
    code, out, _ = run(["stream", "--checkpoint", str(model_path), "--input", str(empty)], capsys)
    assert code == 0 and out == ""


def test_bench_reports_rows(model_path, capsys):
    code, out, _ = run(["bench", "--checkpoint", str(model_path), "--sessions", "4", "--steps", "3",
                        "--chunk-words", "3,5", "--json"], capsys)
    report = json.loads(out)
    assert code == 0 and report["sessions"] == 4
    assert [r["chunk_words"] for r in report["rows"]] == [3, 5]
    assert all(r["rtf"] == pytest.approx(r["mean_ms"] / 1000 / 0.4) for r in report["rows"])


def test_flag_parsers():
    assert cli.int_range("3:5") == (3, 5)
    assert cli.int_list("3,4,5") == [3, 4, 5]
    for bad in ("5:3", "3", "a:b"):
        with pytest.raises(Exception):
            cli.int_range(bad)
    with pytest.raises(Exception):
        cli.int_list("")


def test_run_bench_validation(corpus):
    vocab = build_vocab([e.spoken for e in corpus], 20)
    tagger = Tagger(init_params(ModelConfig(len(vocab), layers=1, model_dim=8, heads=2, ffn_dim=16),
                                np.random.default_rng(0)), vocab)
    with pytest.raises(ValueError):
        cli.run_bench(tagger, sessions=0)
    with pytest.raises(ValueError):
        cli.run_bench(tagger, cadence=0)


@pytest.mark.skipif(shutil.which("streamitn") is None, reason="console script not installed")
def test_console_script_stdin(model_path):
    proc = subprocess.run(["streamitn", "stream", "--checkpoint", str(model_path)],
                          input="vincom o\ncean park\n", capture_output=True, text=True, timeout=60)
    assert proc.returncode == 0
    assert len(proc.stdout.strip().splitlines()) == 3


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "streamitn.cli", "gen-data"], capture_output=True, text=True,
                          timeout=60)
    assert proc.returncode == 2 and "--out" in proc.stderr
