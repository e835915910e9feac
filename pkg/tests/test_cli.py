"""End-to-end tests of the command-line surface (exit codes, files, bytes)."""

import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from examine.dataio import read_report, write_features
from examine.linalg import FeatureMatrix
from examine.synth import sample_clusters
from examine.utility import LabeledSet

GOLDEN_EXMF = Path(__file__).parent / "data" / "identity2x2.exmf"


def run_cli(*argv: str):
    return subprocess.run(
        [sys.executable, "-m", "examine.cli", *argv],
        capture_output=True,
        text=True,
    )


def _without_timestamp(path: Path) -> str:
    return "\n".join(
        line for line in path.read_text().splitlines() if '"created_at"' not in line
    )


@pytest.fixture(scope="module")
def labeled_files(tmp_path_factory):
    base = tmp_path_factory.mktemp("labeled")
    train = sample_clusters(12, 2, 4, 0.2, seed=0, id_prefix="tr")
    test = sample_clusters(40, 2, 4, 0.2, seed=1, id_prefix="te")
    write_features(train, base / "train.csv")
    write_features(test, base / "test.csv")
    return base / "train.csv", base / "test.csv"


class TestScoreExamine:
    def test_identity_fixture_scores_one(self, tmp_path):
        out = tmp_path / "report.json"
        result = run_cli("score", "examine", "--features", str(GOLDEN_EXMF), "--out", str(out))
        assert result.returncode == 0, result.stderr
        report = read_report(out)
        assert report.method == "examine"
        assert report.scores["a"] == pytest.approx(1.0, abs=1e-12)
        assert report.scores["b"] == pytest.approx(1.0, abs=1e-12)

    def test_center_flag_recorded(self, tmp_path):
        src = tmp_path / "features.csv"
        write_features(FeatureMatrix(["x", "y", "z"], np.eye(3) + 1.0), src)
        out = tmp_path / "report.json"
        result = run_cli("score", "examine", "--features", str(src), "--center", "--out", str(out))
        assert result.returncode == 0, result.stderr
        assert read_report(out).params["centering"] is True

    def test_byte_reproducible_apart_from_timestamp(self, tmp_path):
        out_a = tmp_path / "a.json"
        out_b = tmp_path / "b.json"
        for out in (out_a, out_b):
            result = run_cli("score", "examine", "--features", str(GOLDEN_EXMF), "--out", str(out))
            assert result.returncode == 0
        assert _without_timestamp(out_a) == _without_timestamp(out_b)


class TestScoreBaselines:
    def test_loo_runs_and_counts(self, labeled_files, tmp_path):
        train, test = labeled_files
        out = tmp_path / "loo.json"
        result = run_cli("score", "loo", "--train", str(train), "--test", str(test),
                         "--iterations", "30", "--out", str(out))
        assert result.returncode == 0, result.stderr
        report = read_report(out)
        assert report.method == "loo"
        assert report.params["utility_evaluations"] == 13

    def test_shapley_exact_guard_gives_status_1(self, tmp_path):
        big = sample_clusters(25, 2, 4, 0.2, seed=2, id_prefix="b")
        train = tmp_path / "train.csv"
        test = tmp_path / "test.csv"
        write_features(big, train)
        write_features(big, test)
        result = run_cli("score", "shapley-exact", "--train", str(train), "--test", str(test),
                         "--out", str(tmp_path / "out.json"))
        assert result.returncode == 1
        assert "n <= 20" in result.stderr

    def test_shapley_tmc_deterministic_given_seed(self, labeled_files, tmp_path):
        train, test = labeled_files
        out_a, out_b = tmp_path / "a.json", tmp_path / "b.json"
        for out in (out_a, out_b):
            result = run_cli("--seed", "7", "score", "shapley-tmc", "--train", str(train),
                             "--test", str(test), "--iterations", "10",
                             "--tmc-max-permutations", "8", "--tmc-convergence-window", "4",
                             "--out", str(out))
            assert result.returncode == 0, result.stderr
        assert _without_timestamp(out_a) == _without_timestamp(out_b)

    def test_random_seeded(self, tmp_path):
        out = tmp_path / "random.json"
        result = run_cli("--seed", "3", "score", "random", "--n", "5", "--out", str(out))
        assert result.returncode == 0
        report = read_report(out)
        assert report.method == "random"
        assert len(report.scores) == 5


class TestSynthAndPipeline:
    def test_gen_then_score_then_report(self, tmp_path):
        config = tmp_path / "synth.json"
        config.write_text(json.dumps({"levels": [0.1, 0.3, 0.5, 1], "per_level": 10, "clean": 10, "seed": 0}))
        features = tmp_path / "assessed.csv"
        result = run_cli("synth", "gen", "--config", str(config), "--out", str(features))
        assert result.returncode == 0, result.stderr
        truth = Path(f"{features}.truth.json")
        assert truth.exists()

        scores = tmp_path / "scores.json"
        result = run_cli("score", "examine", "--features", str(features), "--out", str(scores))
        assert result.returncode == 0, result.stderr

        summary_csv = tmp_path / "summary.csv"
        fig = tmp_path / "dist.png"
        result = run_cli("report", "dist", "--scores", str(scores), "--assessed", str(features),
                         "--truth", str(truth), "--out", str(summary_csv), "--fig", str(fig))
        assert result.returncode == 0, result.stderr
        assert summary_csv.exists() and fig.stat().st_size > 0

    def test_gen_deterministic(self, tmp_path):
        config = tmp_path / "synth.json"
        config.write_text(json.dumps({"levels": [0.5], "per_level": 5, "clean": 5, "seed": 4}))
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            result = run_cli("synth", "gen", "--config", str(config), "--out", str(out))
            assert result.returncode == 0
        assert a.read_bytes() == b.read_bytes()

    def test_curve_add_smoke(self, tmp_path):
        config = tmp_path / "synth.json"
        config.write_text(json.dumps({"levels": [0.5, 1], "per_level": 6, "clean": 6,
                                      "classes": 2, "dim": 4, "intra_std": 0.3, "seed": 1}))
        assessed = tmp_path / "assessed.csv"
        run_cli("synth", "gen", "--config", str(config), "--out", str(assessed))
        clean_train = tmp_path / "clean.csv"
        validation = tmp_path / "validation.csv"
        write_features(sample_clusters(8, 2, 4, 0.3, seed=5, id_prefix="ct"), clean_train)
        write_features(sample_clusters(50, 2, 4, 0.3, seed=6, id_prefix="va"), validation)
        scores = tmp_path / "scores.json"
        run_cli("score", "examine", "--features", str(assessed), "--out", str(scores))

        curve_cfg = tmp_path / "curve.json"
        curve_cfg.write_text(json.dumps({"order": "high_first", "step": 6, "seeds": [0],
                                         "train": {"iterations": 25}}))
        out = tmp_path / "curve.json.out"
        csv_out = tmp_path / "curve.csv"
        fig = tmp_path / "curve.png"
        result = run_cli("curve", "add", "--scores", str(scores), "--assessed", str(assessed),
                         "--clean-train", str(clean_train), "--validation", str(validation),
                         "--config", str(curve_cfg), "--out", str(out),
                         "--csv", str(csv_out), "--fig", str(fig))
        assert result.returncode == 0, result.stderr
        doc = json.loads(out.read_text())
        assert doc["kind"] == "curve_series"
        assert csv_out.exists() and fig.stat().st_size > 0


class TestTheoryAndBench:
    def test_theory_check_small(self):
        result = run_cli("--quiet", "theory", "check", "--d1", "4", "--d2", "4", "--k", "2",
                         "--trials", "10", "--seed", "0")
        assert result.returncode == 0, result.stderr
        doc = json.loads(result.stdout)
        assert doc["max_reconstruction_residual"] < 1e-10
        assert doc["all_ci_hold"] is True
        assert result.stderr == ""

    def test_bench_small(self, tmp_path):
        config = tmp_path / "bench.json"
        config.write_text(json.dumps({
            "n_items": 20, "dim": 4, "classes": 2, "intra_std": 0.3, "validation_size": 30,
            "methods": ["examine", "random"], "train": {"iterations": 10},
        }))
        result = run_cli("--quiet", "bench", "--config", str(config))
        assert result.returncode == 0, result.stderr
        doc = json.loads(result.stdout)
        methods = {e["method"]: e for e in doc["entries"]}
        assert methods["examine"]["utility_evaluations"] == 0


class TestErrorHandling:
    def test_unknown_flag_exits_1_with_usage_on_stderr(self):
        result = run_cli("score", "examine", "--nope")
        assert result.returncode == 1
        assert "usage" in result.stderr.lower()
        assert result.stdout == ""

    def test_missing_file_exits_1(self, tmp_path):
        result = run_cli("score", "examine", "--features", str(tmp_path / "missing.csv"),
                         "--out", str(tmp_path / "out.json"))
        assert result.returncode == 1

    def test_unlabeled_train_rejected(self, tmp_path):
        src = tmp_path / "features.csv"
        write_features(FeatureMatrix(["x", "y"], np.eye(2)), src)
        result = run_cli("score", "loo", "--train", str(src), "--test", str(src),
                         "--out", str(tmp_path / "out.json"))
        assert result.returncode == 1
        assert "label" in result.stderr
