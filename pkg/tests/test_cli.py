import csv
import json
import math

import numpy as np
import pytest

from nyspec.cli import (
    DatasetManifest,
    fmt,
    load_dataset,
    main,
    parse_records_csv,
    resolve_manifest,
)
from nyspec.errors import EmptyDataset, ParseError, RaggedRows


def write_blob_csv(path, n=60, k=3, seed=0):
    rng = np.random.default_rng(seed)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "z", "label"])
        for i in range(n):
            g = i % k
            center = np.zeros(3)
            center[g] = 4.0
            row = center + rng.standard_normal(3)
            writer.writerow([f"{row[0]:.6f}", f"{row[1]:.6f}", f"{row[2]:.6f}", f"c{g}"])
    return path


class TestLoadDataset:
    def test_minimal_csv(self, tmp_path):
        path = tmp_path / "mini.csv"
        path.write_text("a,b,label\n1,2,x\n3,4,y\n5,6,x\n")
        data = load_dataset(DatasetManifest(path=str(path), label_column="label"))
        assert data.n == 3 and data.d == 2
        assert data.labels.tolist() == [0, 1, 0]  # first-appearance encoding

    def test_no_header_index_label(self, tmp_path):
        path = tmp_path / "plain.csv"
        path.write_text("1,2,0\n3,4,1\n")
        data = load_dataset(DatasetManifest(path=str(path), label_column=2,
                                            has_header=False))
        assert data.n == 2 and data.d == 2
        assert data.labels.tolist() == [0, 1]

    def test_no_labels(self, tmp_path):
        path = tmp_path / "plain.csv"
        path.write_text("x,y\n1,2\n3,4\n")
        data = load_dataset(DatasetManifest(path=str(path)))
        assert data.labels is None

    def test_parse_error_names_row(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n3,4\n5,6\noops,8\n")
        with pytest.raises(ParseError, match="row 5"):
            load_dataset(DatasetManifest(path=str(path)))

    def test_ragged_rows(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("a,b\n1,2\n3\n")
        with pytest.raises(RaggedRows, match="row 3"):
            load_dataset(DatasetManifest(path=str(path)))

    def test_empty_dataset(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("a,b\n")
        with pytest.raises(EmptyDataset):
            load_dataset(DatasetManifest(path=str(path)))

    def test_feature_column_selection(self, tmp_path):
        path = tmp_path / "sel.csv"
        path.write_text("a,b,c,label\n1,2,3,x\n4,5,6,y\n")
        manifest = DatasetManifest(path=str(path), label_column="label",
                                   feature_columns=["c", "a"])
        data = load_dataset(manifest)
        assert data.points.tolist() == [[3.0, 1.0], [6.0, 4.0]]

    def test_scaling_modes(self, tmp_path):
        path = tmp_path / "scale.csv"
        path.write_text("a,b\n0,10\n2,10\n4,10\n")
        standard = load_dataset(DatasetManifest(path=str(path)), scale="standard")
        assert standard.points[:, 0].mean() == pytest.approx(0.0, abs=1e-12)
        assert np.array_equal(standard.points[:, 1], [0.0, 0.0, 0.0])  # centered, no div by 0
        minmax = load_dataset(DatasetManifest(path=str(path)), scale="minmax")
        assert minmax.points[:, 0].tolist() == [0.0, 0.5, 1.0]

    def test_json_manifest_with_relative_path(self, tmp_path):
        csv_path = tmp_path / "inner.csv"
        csv_path.write_text("a,b,label\n1,2,p\n3,4,q\n")
        manifest_path = tmp_path / "inner.json"
        manifest_path.write_text(json.dumps({"path": "inner.csv", "label_column": "label"}))
        manifest = resolve_manifest(str(manifest_path))
        data = load_dataset(manifest)
        assert data.n == 2 and data.labels is not None

    def test_manifest_rejects_unknown_keys(self, tmp_path):
        manifest_path = tmp_path / "bad.json"
        manifest_path.write_text(json.dumps({"path": "x.csv", "bogus": 1}))
        with pytest.raises(ValueError, match="bogus"):
            resolve_manifest(str(manifest_path))


class TestClusterCommand:
    def test_cluster_writes_labels_and_summary(self, tmp_path):
        data_path = write_blob_csv(tmp_path / "blobs.csv")
        manifest = tmp_path / "blobs.json"
        manifest.write_text(json.dumps({"path": "blobs.csv", "label_column": "label"}))
        out = tmp_path / "labels.csv"
        code = main(["cluster", "--data", str(manifest), "--k", "3",
                     "--sampler", "cms3-tuned", "--fraction", "0.2",
                     "--seed", "3", "--out", str(out)])
        assert code == 0
        rows = list(csv.reader(out.open()))
        assert rows[0] == ["point_index", "label"]
        assert len(rows) == 61
        summary = json.loads((tmp_path / "labels.csv.summary.json").read_text())
        assert summary["dataset"]["n"] == 60
        assert summary["config"]["sampler"] == "cms3-tuned"
        assert summary["switch_branch"] in ("cms3", "ms3")
        assert 0.0 <= summary["accuracy"] <= 1.0

    def test_cluster_exact_mode(self, tmp_path):
        data_path = write_blob_csv(tmp_path / "blobs.csv")
        out = tmp_path / "labels.csv"
        manifest = tmp_path / "m.json"
        manifest.write_text(json.dumps({"path": "blobs.csv", "label_column": "label"}))
        code = main(["cluster", "--data", str(manifest), "--k", "3", "--exact",
                     "--out", str(out)])
        assert code == 0
        summary = json.loads((tmp_path / "labels.csv.summary.json").read_text())
        assert summary["pipeline"] == "exact"

    def test_cluster_save_model(self, tmp_path):
        write_blob_csv(tmp_path / "blobs.csv")
        manifest = tmp_path / "m.json"
        manifest.write_text(json.dumps({"path": "blobs.csv", "label_column": "label"}))
        model_path = tmp_path / "model.npz"
        code = main(["cluster", "--data", str(manifest), "--k", "3",
                     "--sampler", "rs", "--fraction", "0.2",
                     "--save-model", str(model_path), "--out", str(tmp_path / "l.csv")])
        assert code == 0
        from nyspec.nystrom import load_model

        model = load_model(model_path)
        assert model.extended_eigvecs.shape == (60, 3)

    def test_config_errors_exit_2(self, tmp_path):
        write_blob_csv(tmp_path / "blobs.csv")
        manifest = tmp_path / "m.json"
        manifest.write_text(json.dumps({"path": "blobs.csv", "label_column": "label"}))
        base = ["cluster", "--data", str(manifest), "--out", str(tmp_path / "o.csv")]
        assert main(base + ["--k", "1"]) == 2                      # k out of range
        assert main(base + ["--k", "3", "--sampler", "nope"]) == 2  # unknown sampler
        assert main(base + ["--k", "3", "--fraction", "1.5"]) == 2  # bad fraction
        assert main(base + ["--k", "3", "--exact",
                            "--save-model", str(tmp_path / "m.npz")]) == 2
        assert main(["cluster", "--data", str(tmp_path / "missing.csv"),
                     "--k", "3", "--out", str(tmp_path / "o.csv")]) == 2

    def test_runtime_failure_exits_3(self, tmp_path):
        # rank-2 dataset, k = 3: the landmark block cannot support rank 3
        path = tmp_path / "rank2.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["a", "b", "c"])
            rng = np.random.default_rng(0)
            for i in range(30):
                e = [0.0, 0.0]
                e[i % 2] = 1.0
                writer.writerow([e[0], e[1], 0.0])
        code = main(["cluster", "--data", str(path), "--k", "3",
                     "--sampler", "rs", "--fraction", "0.5", "--out",
                     str(tmp_path / "o.csv")])
        assert code == 3


class TestBenchmarkCommand:
    def run_benchmark(self, tmp_path, out_name, extra=()):
        write_blob_csv(tmp_path / "blobs.csv")
        manifest = tmp_path / "m.json"
        manifest.write_text(json.dumps({"path": "blobs.csv", "label_column": "label"}))
        out_dir = tmp_path / out_name
        code = main(["benchmark", "--data", str(manifest),
                     "--samplers", "rs,ms3,cms3-tuned",
                     "--fractions", "0.1,0.2", "--reps", "2",
                     "--seed", "7", "--jobs", "1", "--out", str(out_dir), *extra])
        assert code == 0
        return out_dir

    def test_outputs_and_roundtrip(self, tmp_path):
        out_dir = self.run_benchmark(tmp_path, "run1")
        records = parse_records_csv(out_dir / "records.csv")
        assert len(records) == 12
        reparsed_bytes = (out_dir / "records.csv").read_bytes()
        # serialization is the 6-digit contract: rewriting parsed records
        # reproduces the file byte for byte
        from nyspec.cli import write_records_csv

        write_records_csv(out_dir / "rewritten.csv", records)
        rewritten = (out_dir / "rewritten.csv").read_bytes()
        # wall_time round-trips at 6 significant digits, so only float
        # rounding of already-rounded values is involved: exact match
        assert rewritten == reparsed_bytes
        summary = json.loads((out_dir / "summary.json").read_text())
        assert summary["n_records"] == 12
        assert (out_dir / "aggregates.csv").exists()

    def test_byte_identical_reruns_excluding_wall_time(self, tmp_path):
        out_a = self.run_benchmark(tmp_path, "runA")
        out_b = self.run_benchmark(tmp_path, "runB")

        def strip_wall(path):
            lines = path.read_text().splitlines()
            return ["," .join(line.split(",")[:-1]) for line in lines]

        assert strip_wall(out_a / "records.csv") == strip_wall(out_b / "records.csv")
        assert (out_a / "aggregates.csv").read_bytes() == (out_b / "aggregates.csv").read_bytes()

    def test_ensemble_requires_p(self, tmp_path):
        write_blob_csv(tmp_path / "blobs.csv")
        manifest = tmp_path / "m.json"
        manifest.write_text(json.dumps({"path": "blobs.csv", "label_column": "label"}))
        code = main(["benchmark", "--data", str(manifest),
                     "--samplers", "ensemble-rs", "--reps", "1",
                     "--fractions", "0.2", "--out", str(tmp_path / "o")])
        assert code == 2

    def test_k_required_without_labels(self, tmp_path):
        path = tmp_path / "nolabel.csv"
        path.write_text("a,b\n" + "\n".join(f"{i},{i%3}" for i in range(20)) + "\n")
        code = main(["benchmark", "--data", str(path), "--samplers", "rs",
                     "--fractions", "0.3", "--reps", "1", "--out", str(tmp_path / "o")])
        assert code == 2


class TestSpectrumCommand:
    def test_writes_json_and_curve(self, tmp_path):
        write_blob_csv(tmp_path / "blobs.csv")
        manifest = tmp_path / "m.json"
        manifest.write_text(json.dumps({"path": "blobs.csv", "label_column": "label"}))
        out = tmp_path / "diag.json"
        code = main(["spectrum", "--data", str(manifest),
                     "--gamma", "0.2", "--seed", "4", "--out", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["branch"] in ("cms3", "ms3")
        assert payload["use_cms3"] == (payload["branch"] == "cms3")
        assert payload["subsample_size"] == math.ceil(0.2 * 60)
        curve = list(csv.reader((tmp_path / "diag.csv").open()))
        assert curve[0] == ["rank", "eigenvalue"]
        assert len(curve) == payload["subsample_size"] + 1
        values = [float(row[1]) for row in curve[1:]]
        assert values == sorted(values, reverse=True)

    def test_bad_gamma_exits_2(self, tmp_path):
        write_blob_csv(tmp_path / "blobs.csv")
        manifest = tmp_path / "m.json"
        manifest.write_text(json.dumps({"path": "blobs.csv", "label_column": "label"}))
        code = main(["spectrum", "--data", str(manifest),
                     "--gamma", "2.0", "--out", str(tmp_path / "d.json")])
        assert code == 2


class TestErrorCurveCommand:
    def test_error_curve_csv(self, tmp_path):
        write_blob_csv(tmp_path / "blobs.csv")
        manifest = tmp_path / "m.json"
        manifest.write_text(json.dumps({"path": "blobs.csv", "label_column": "label"}))
        out = tmp_path / "curve.csv"
        code = main(["error-curve", "--data", str(manifest),
                     "--samplers", "rs,cms3", "--fractions", "0.1,0.3",
                     "--reps", "3", "--seed", "2", "--out", str(out)])
        assert code == 0
        rows = list(csv.reader(out.open()))
        assert rows[0] == ["dataset", "sampler", "fraction", "reps",
                           "error_mean", "error_std"]
        assert len(rows) == 5
        by_key = {(r[1], r[2]): float(r[4]) for r in rows[1:]}
        # more landmarks, smaller mean error on average
        assert by_key[("rs", "0.3")] <= by_key[("rs", "0.1")] * 1.5


class TestFloatContract:
    def test_fmt_six_significant_digits(self):
        assert fmt(0.123456789) == "0.123457"
        assert fmt(float("nan")) == "nan"
        assert fmt(1234567.0) == "1.23457e+06"
        assert float(fmt(0.1)) == 0.1
