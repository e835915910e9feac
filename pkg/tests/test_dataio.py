"""Round-trip, golden-file, and strict-parsing tests for the file formats."""

import json
from pathlib import Path

import numpy as np
import pytest

from examine.dataio import (
    curve_to_csv,
    distribution_summary_to_csv,
    read_bench_config,
    read_curve,
    read_curve_config,
    read_features,
    read_ground_truth,
    read_report,
    read_synth_config,
    write_curve,
    write_distribution_summary,
    write_features,
    write_ground_truth,
    write_report,
)
from examine.errors import FormatError, ValidationError
from examine.experiments import CurvePoint, CurveSeries, score_distribution_report
from examine.linalg import FeatureMatrix
from examine.scoring import ScoreReport
from examine.synth import CorruptionSpec, make_assessed_set
from examine.utility import LabeledSet
from examine.scoring import examine_scores

GOLDEN_EXMF = Path(__file__).parent / "data" / "identity2x2.exmf"


def _random_matrix(seed=0, shape=(10, 4)) -> FeatureMatrix:
    rng = np.random.default_rng(seed)
    return FeatureMatrix([f"item{i}" for i in range(shape[0])], rng.normal(size=shape))


class TestFeatureRoundTrip:
    @pytest.mark.parametrize("fmt", ["csv", "exmf"])
    def test_matrix_round_trip_bit_exact(self, tmp_path, fmt):
        fm = _random_matrix(seed=1)
        path = tmp_path / f"features.{fmt}"
        write_features(fm, path, format=fmt)
        back = read_features(path, format=fmt)
        assert isinstance(back, FeatureMatrix)
        assert back.ids == fm.ids
        assert np.array_equal(back.data, fm.data)

    @pytest.mark.parametrize("fmt", ["csv", "exmf"])
    def test_labeled_round_trip(self, tmp_path, fmt):
        fm = _random_matrix(seed=2, shape=(6, 3))
        ls = LabeledSet(fm, np.array([0, 1, 2, 0, 1, 2]), 3)
        path = tmp_path / f"labeled.{fmt}"
        write_features(ls, path, format=fmt)
        back = read_features(path, format=fmt)
        assert isinstance(back, LabeledSet)
        assert np.array_equal(back.labels, ls.labels)
        assert back.n_classes == 3
        assert np.array_equal(back.features.data, fm.data)

    def test_format_inferred_from_extension(self, tmp_path):
        fm = _random_matrix(seed=3)
        write_features(fm, tmp_path / "x.exmf")
        back = read_features(tmp_path / "x.exmf")
        assert np.array_equal(back.data, fm.data)

    def test_deterministic_bytes(self, tmp_path):
        fm = _random_matrix(seed=4)
        write_features(fm, tmp_path / "a.exmf")
        write_features(fm, tmp_path / "b.exmf")
        assert (tmp_path / "a.exmf").read_bytes() == (tmp_path / "b.exmf").read_bytes()
        write_features(fm, tmp_path / "a.csv")
        write_features(fm, tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


class TestCsvValidation:
    def test_missing_column_names_row(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("id,f0,f1\na,1.0,2.0\nb,3.0\n")
        with pytest.raises(ValidationError, match="row 3"):
            read_features(path)

    def test_non_numeric_feature(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("id,f0\na,oops\n")
        with pytest.raises(ValidationError, match="row 2"):
            read_features(path)

    def test_duplicate_ids(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("id,f0\na,1.0\na,2.0\n")
        with pytest.raises(ValidationError, match="unique"):
            read_features(path)

    def test_non_finite_value(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("id,f0\na,nan\n")
        with pytest.raises(ValidationError, match="finite"):
            read_features(path)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("name,f0\na,1.0\n")
        with pytest.raises(FormatError):
            read_features(path)


class TestExmfValidation:
    def test_golden_fixture_parses_to_identity(self):
        back = read_features(GOLDEN_EXMF)
        assert isinstance(back, FeatureMatrix)
        assert back.ids == ("a", "b")
        assert np.array_equal(back.data, np.eye(2))

    def test_golden_fixture_bytes_are_frozen(self, tmp_path):
        fm = FeatureMatrix(["a", "b"], np.eye(2))
        write_features(fm, tmp_path / "fresh.exmf")
        assert (tmp_path / "fresh.exmf").read_bytes() == GOLDEN_EXMF.read_bytes()

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.exmf"
        path.write_bytes(b"NOPE" + GOLDEN_EXMF.read_bytes()[4:])
        with pytest.raises(FormatError, match="magic"):
            read_features(path)

    def test_bad_version(self, tmp_path):
        blob = bytearray(GOLDEN_EXMF.read_bytes())
        blob[4] = 99
        path = tmp_path / "bad.exmf"
        path.write_bytes(bytes(blob))
        with pytest.raises(FormatError, match="version"):
            read_features(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "bad.exmf"
        path.write_bytes(GOLDEN_EXMF.read_bytes()[:-8])
        with pytest.raises(FormatError, match="truncated"):
            read_features(path)

    def test_trailing_bytes(self, tmp_path):
        path = tmp_path / "bad.exmf"
        path.write_bytes(GOLDEN_EXMF.read_bytes() + b"\x00")
        with pytest.raises(FormatError, match="trailing"):
            read_features(path)


class TestReportIo:
    def test_report_round_trip(self, tmp_path):
        report = ScoreReport(
            method="examine",
            scores={"a": 0.25, "b": 1.0},
            params={"centering": False, "n": 2},
            created_at="2024-05-01T00:00:00+00:00",
        )
        path = tmp_path / "report.json"
        write_report(report, path)
        assert read_report(path) == report

    def test_empty_scores_round_trip(self, tmp_path):
        report = ScoreReport(method="random", scores={}, created_at="x")
        path = tmp_path / "report.json"
        write_report(report, path)
        back = read_report(path)
        assert back.scores == {}
        assert back.ranking == []

    def test_fixed_timestamp_gives_identical_bytes(self, tmp_path):
        report = ScoreReport(method="loo", scores={"a": 0.125}, created_at="fixed")
        write_report(report, tmp_path / "a.json")
        write_report(report, tmp_path / "b.json")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_tampered_ranking_rejected_on_read(self, tmp_path):
        report = ScoreReport(method="random", scores={"a": 0.1, "b": 0.9}, created_at="x")
        path = tmp_path / "report.json"
        write_report(report, path)
        doc = json.loads(path.read_text())
        doc["ranking"] = ["a", "b"]
        path.write_text(json.dumps(doc))
        with pytest.raises(ValidationError):
            read_report(path)

    def test_full_precision_round_trip(self, tmp_path):
        value = 0.1234567890123456789
        report = ScoreReport(method="random", scores={"a": value}, created_at="x")
        path = tmp_path / "report.json"
        write_report(report, path)
        assert read_report(path).scores["a"] == float(value)


class TestCurveIo:
    def _series(self) -> CurveSeries:
        return CurveSeries(
            method="examine",
            mode="add",
            order="high_first",
            points=[CurvePoint(0, 0.5, 0.0), CurvePoint(5, 0.75, 0.01)],
        )

    def test_curve_round_trip(self, tmp_path):
        series = self._series()
        path = tmp_path / "curve.json"
        write_curve(series, path)
        assert read_curve(path) == series

    def test_curve_csv(self, tmp_path):
        series = self._series()
        curve_to_csv(series, tmp_path / "curve.csv")
        lines = (tmp_path / "curve.csv").read_text().splitlines()
        assert lines[0] == "n_selected,mean_accuracy,std_accuracy"
        assert lines[1].startswith("0,0.5")


class TestGroundTruthAndSummary:
    def test_ground_truth_round_trip(self, tmp_path):
        levels = {"a": 0.0, "b": 1.0}
        path = tmp_path / "truth.json"
        write_ground_truth(levels, path, params={"seed": 0})
        assert read_ground_truth(path) == levels

    def test_summary_writes_json_and_csv(self, tmp_path):
        assessed = make_assessed_set(CorruptionSpec(per_level=5, clean=5), seed=0)
        summary = score_distribution_report(assessed, examine_scores(assessed.features))
        write_distribution_summary(summary, tmp_path / "summary.json")
        distribution_summary_to_csv(summary, tmp_path / "summary.csv")
        doc = json.loads((tmp_path / "summary.json").read_text())
        assert doc["kind"] == "distribution_summary"
        assert len(doc["groups"]) == 5
        lines = (tmp_path / "summary.csv").read_text().splitlines()
        assert len(lines) == 6  # header + one row per level


class TestConfigParsing:
    def test_synth_config_with_protocol_levels(self, tmp_path):
        # The documented noise protocol: four levels, 0.1 through 1.
        path = tmp_path / "synth.json"
        path.write_text(json.dumps({"levels": [0.1, 0.3, 0.5, 1], "per_level": 100, "clean": 100}))
        cfg = read_synth_config(path)
        assert cfg.spec.levels == (0.1, 0.3, 0.5, 1.0)
        assert cfg.spec.total == 500

    def test_unknown_keys_listed(self, tmp_path):
        path = tmp_path / "synth.json"
        path.write_text(json.dumps({"levels": [0.5], "per_levle": 10}))
        with pytest.raises(ValidationError, match="per_levle"):
            read_synth_config(path)

    def test_curve_config_nested_train_strict(self, tmp_path):
        path = tmp_path / "curve.json"
        path.write_text(json.dumps({"order": "random", "train": {"learning_rte": 0.1}}))
        with pytest.raises(ValidationError, match="learning_rte"):
            read_curve_config(path, mode="add")

    def test_curve_config_defaults(self, tmp_path):
        path = tmp_path / "curve.json"
        path.write_text(json.dumps({}))
        cfg = read_curve_config(path, mode="remove")
        assert cfg.mode == "remove"
        assert cfg.step == 5
        assert cfg.seeds == (0, 1, 2, 3, 4)

    def test_bench_config(self, tmp_path):
        path = tmp_path / "bench.json"
        path.write_text(
            json.dumps({"n_items": 50, "dim": 8, "methods": ["examine", "loo"], "tmc": {"max_permutations": 5, "convergence_window": 2}})
        )
        cfg = read_bench_config(path)
        assert cfg.n_items == 50
        assert cfg.methods == ("examine", "loo")
        assert cfg.tmc.max_permutations == 5

    def test_bench_config_unknown_key(self, tmp_path):
        path = tmp_path / "bench.json"
        path.write_text(json.dumps({"n_item": 50}))
        with pytest.raises(ValidationError, match="n_item"):
            read_bench_config(path)
