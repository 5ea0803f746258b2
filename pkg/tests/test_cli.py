import hashlib
import json
import subprocess
import sys

import numpy as np
import pytest

from dhash import dataset, hamming
from dhash.fsdh import encode
from dhash.model_io import load_model
from dhash.synth import make_mixture


def run_cli(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "dhash.cli", *map(str, args)],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


SYNTH = "clusters:k=3,n=120,d=6,spread=0.4"


@pytest.fixture(scope="module")
def trained_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("model")
    r = run_cli(
        "train", "--method", "fsdh", "--bits", 16, "--synth", SYNTH,
        "--anchors", 30, "--seed", 5, "--out", d / "model.dh",
    )
    assert r.returncode == 0, r.stderr
    return d


class TestTrain:
    def test_creates_model_codes_trace(self, trained_dir):
        assert (trained_dir / "model.dh").exists()
        assert (trained_dir / "model.dh.codes").exists()
        assert (trained_dir / "model.dh.trace.csv").exists()

    def test_bits_zero_is_usage_error(self, tmp_path):
        r = run_cli("train", "--bits", 0, "--synth", SYNTH, "--out", tmp_path / "m.dh")
        assert r.returncode == 2

    def test_missing_labels_is_usage_error(self, tmp_path):
        feat = tmp_path / "x.csv"
        feat.write_text("1,2\n3,4\n")
        r = run_cli("train", "--bits", 8, "--features", feat, "--out", tmp_path / "m.dh")
        assert r.returncode == 2
        assert "labels" in r.stderr

    def test_same_seed_byte_identical_outputs(self, tmp_path):
        outs = []
        for sub in ("a", "b"):
            d = tmp_path / sub
            d.mkdir()
            r = run_cli(
                "train", "--bits", 12, "--synth", SYNTH, "--anchors", 25,
                "--seed", 7, "--out", d / "m.dh",
            )
            assert r.returncode == 0, r.stderr
            outs.append(d)
        assert digest(outs[0] / "m.dh") == digest(outs[1] / "m.dh")
        assert digest(outs[0] / "m.dh.codes") == digest(outs[1] / "m.dh.codes")

    def test_train_from_csv_with_label_column(self, tmp_path):
        mixture = make_mixture(2, 3, spread=0.3, seed=1)
        X, labels = mixture.sample(40, np.random.default_rng(2))
        rows = [",".join(repr(float(v)) for v in row) + f",{lab}" for row, lab in zip(X, labels)]
        feat = tmp_path / "xy.csv"
        feat.write_text("\n".join(rows) + "\n")
        r = run_cli(
            "train", "--bits", 8, "--features", feat, "--label-col", "last",
            "--anchors", 10, "--out", tmp_path / "m.dh",
        )
        assert r.returncode == 0, r.stderr


class TestEncode:
    def test_csv_and_raw_produce_identical_codes(self, trained_dir, tmp_path):
        mixture = make_mixture(3, 6, spread=0.4, seed=9)
        X, _ = mixture.sample(25, np.random.default_rng(10))
        csv_path = tmp_path / "q.csv"
        csv_path.write_text(
            "\n".join(",".join(repr(float(v)) for v in row) for row in X) + "\n"
        )
        raw_path = tmp_path / "q.dhmx"
        dataset.save_features(raw_path, X)

        r1 = run_cli("encode", "--model", trained_dir / "model.dh",
                     "--features", csv_path, "--out", tmp_path / "c1.dhcb")
        r2 = run_cli("encode", "--model", trained_dir / "model.dh",
                     "--features", raw_path, "--format", "raw",
                     "--out", tmp_path / "c2.dhcb")
        assert r1.returncode == 0 and r2.returncode == 0
        assert digest(tmp_path / "c1.dhcb") == digest(tmp_path / "c2.dhcb")

    def test_truncated_model_is_corrupt_error(self, trained_dir, tmp_path):
        bad = tmp_path / "bad.dh"
        bad.write_bytes((trained_dir / "model.dh").read_bytes()[:-9])
        feat = tmp_path / "x.csv"
        feat.write_text("1,2,3,4,5,6\n")
        r = run_cli("encode", "--model", bad, "--features", feat,
                    "--out", tmp_path / "c.dhcb")
        assert r.returncode == 1
        assert "truncated" in r.stderr or "checksum" in r.stderr

    def test_dimension_mismatch(self, trained_dir, tmp_path):
        feat = tmp_path / "x.csv"
        feat.write_text("1,2\n")
        r = run_cli("encode", "--model", trained_dir / "model.dh",
                    "--features", feat, "--out", tmp_path / "c.dhcb")
        assert r.returncode == 1


class TestQuery:
    def test_radius_equal_bits_returns_all(self, trained_dir, tmp_path):
        codes = trained_dir / "model.dh.codes"
        r = run_cli("query", "--index", codes, "--queries", codes,
                    "--mode", "radius", "--r", 16)
        assert r.returncode == 0
        first = r.stdout.splitlines()[0]
        assert first.startswith("query 0:")
        assert len(first.split()) == 2 + 120  # "query 0:" + one cell per row

    def test_topn_exceeding_database_is_usage_error(self, trained_dir):
        codes = trained_dir / "model.dh.codes"
        r = run_cli("query", "--index", codes, "--queries", codes,
                    "--mode", "topn", "--n", 121)
        assert r.returncode == 2

    def test_topn_matches_library(self, trained_dir):
        codes_path = trained_dir / "model.dh.codes"
        packed, bits, labels = hamming.load_codes(codes_path)
        index = hamming.PackedIndex(codes=packed, bits=bits, labels=labels)
        r = run_cli("query", "--index", codes_path, "--queries", codes_path,
                    "--mode", "topn", "--n", 5)
        assert r.returncode == 0
        for i, line in enumerate(r.stdout.splitlines()[:10]):
            ids, dists = hamming.rank_top_n(index, packed[i], 5)
            cells = " ".join(f"{j}:{d}" for j, d in zip(ids, dists))
            assert line == f"query {i}: {cells}"

    def test_missing_mode_param(self, trained_dir):
        codes = trained_dir / "model.dh.codes"
        r = run_cli("query", "--index", codes, "--queries", codes, "--mode", "radius")
        assert r.returncode == 2


@pytest.fixture(scope="module")
def eval_setup(tmp_path_factory):
    d = tmp_path_factory.mktemp("eval")
    mixture = make_mixture(2, 6, spread=0.15, seed=20)
    rng = np.random.default_rng(21)
    X_db, y_db = mixture.sample(100, rng)
    X_q, y_q = mixture.sample(20, rng)
    dataset.save_features(d / "db.dhmx", X_db)
    dataset.save_features(d / "q.dhmx", X_q)
    (d / "db.labels").write_text("\n".join(map(str, y_db)) + "\n")
    (d / "q.labels").write_text("\n".join(map(str, y_q)) + "\n")
    r = run_cli("train", "--bits", 16, "--features", d / "db.dhmx",
                "--format", "raw", "--labels", d / "db.labels",
                "--anchors", 30, "--seed", 3, "--out", d / "m.dh")
    assert r.returncode == 0, r.stderr
    return d


class TestEval:
    def test_separable_clusters_score_perfectly(self, eval_setup):
        d = eval_setup
        r = run_cli("eval", "--model", d / "m.dh",
                    "--features", d / "db.dhmx", "--format", "raw",
                    "--labels", d / "db.labels",
                    "--query-features", d / "q.dhmx", "--query-labels", d / "q.labels",
                    "--out", d / "report")
        assert r.returncode == 0, r.stderr
        payload = json.loads((d / "report.json").read_text())
        assert payload["map"] == 1.0
        assert payload["accuracy"] == 1.0

    def test_json_and_csv_agree(self, eval_setup):
        d = eval_setup
        payload = json.loads((d / "report.json").read_text())
        header, row = (d / "report.csv").read_text().strip().splitlines()
        cells = dict(zip(header.split(","), row.split(",")))
        assert float(cells["map"]) == payload["map"]
        assert float(cells["precision_r2"]) == payload["precision_r"]
        assert float(cells["recall_r2"]) == payload["recall_r"]
        assert float(cells["accuracy"]) == payload["accuracy"]

    def test_matches_library_calls(self, eval_setup):
        d = eval_setup
        from dhash.metrics import accuracy_1nn, mean_average_precision

        model = load_model(d / "m.dh")
        X_db = dataset.load_features(d / "db.dhmx", "raw")
        y_db = dataset.load_labels(d / "db.labels")
        X_q = dataset.load_features(d / "q.dhmx", "raw")
        y_q = dataset.load_labels(d / "q.labels")
        index = hamming.PackedIndex.from_codes(encode(X_db, model), y_db)
        q_codes = hamming.pack_codes(encode(X_q, model))
        payload = json.loads((d / "report.json").read_text())
        assert payload["map"] == mean_average_precision(index, q_codes, y_q)
        assert payload["accuracy"] == accuracy_1nn(index, q_codes, y_q)

    def test_missing_query_labels(self, eval_setup):
        d = eval_setup
        r = run_cli("eval", "--model", d / "m.dh",
                    "--features", d / "db.dhmx", "--format", "raw",
                    "--labels", d / "db.labels",
                    "--query-features", d / "q.dhmx")
        assert r.returncode == 2


class TestBench:
    def test_one_row_per_method_bits_pair(self, tmp_path):
        out = tmp_path / "bench.csv"
        r = run_cli("bench", "--synth", "clusters:k=3,n=150,d=6,spread=0.5",
                    "--bits", "8,16", "--anchors", 20, "--seed", 1,
                    "--out", out)
        assert r.returncode == 0, r.stderr
        lines = out.read_text().strip().splitlines()
        assert lines[0].startswith("method,bits,map")
        pairs = [tuple(line.split(",")[:2]) for line in lines[1:]]
        assert sorted(pairs) == sorted(
            [("fsdh", "8"), ("sdh", "8"), ("fsdh", "16"), ("sdh", "16")]
        )


class TestStability:
    def test_csv_rows_and_determinism(self, tmp_path):
        args = ("stability", "--synth", "clusters:k=4,n=200,d=6,spread=1.0",
                "--sizes", "50,100", "--replacements", 10, "--bits", 8,
                "--seed", 2)
        r1 = run_cli(*args, "--out", tmp_path / "s1")
        r2 = run_cli(*args, "--out", tmp_path / "s2")
        assert r1.returncode == 0, r1.stderr
        assert r2.returncode == 0
        csv1 = (tmp_path / "s1.csv").read_text()
        assert csv1 == (tmp_path / "s2.csv").read_text()
        lines = csv1.strip().splitlines()
        assert lines[0] == "n,bound,median_dW,max_dW,violations"
        assert len(lines) == 3
        assert (tmp_path / "s1.json").read_text() == (tmp_path / "s2.json").read_text()
        payload = json.loads((tmp_path / "s1.json").read_text())
        assert all(rep["violations"] == 0 for rep in payload)


def test_unknown_subcommand_is_usage_error():
    r = run_cli("frobnicate")
    assert r.returncode == 2
