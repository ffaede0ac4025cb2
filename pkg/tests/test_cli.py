"""End-to-end tests of the command-line interface and its exit codes."""

import json

import numpy as np
import pytest

from lpconformal.cli import main


@pytest.fixture
def scores_file(tmp_path):
    rng = np.random.default_rng(0)
    path = tmp_path / "scores.csv"
    path.write_text("".join(f"{float(v)!r}\n" for v in rng.normal(size=200)))
    return path


@pytest.fixture
def matrix_file(tmp_path):
    rng = np.random.default_rng(1)
    rows, labels = 300, 4
    scores = 2.0 + np.abs(rng.normal(size=(rows, labels)))
    true = rng.integers(0, labels, size=rows)
    scores[np.arange(rows), true] = np.abs(rng.normal(size=rows))
    path = tmp_path / "matrix.csv"
    header = "true_label," + ",".join(f"s_{j}" for j in range(labels))
    lines = [header]
    for i in range(rows):
        lines.append(f"{true[i]}," + ",".join(repr(float(v)) for v in scores[i]))
    path.write_text("\n".join(lines) + "\n")
    return path


class TestCalibrate:
    def test_lp_json_output(self, scores_file, tmp_path, capsys):
        out = tmp_path / "thr.json"
        code = main([
            "calibrate", "--scores", str(scores_file), "--method", "lp",
            "--alpha", "0.1", "--epsilon", "0.1", "--rho", "0.05",
            "--out", str(out),
        ])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["method"] == "lp"
        assert not payload["unbounded"]
        assert payload["threshold"] > 0

    def test_sc_to_stdout(self, scores_file, capsys):
        assert main(["calibrate", "--scores", str(scores_file), "--method", "sc"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert "threshold" in payload

    def test_domain_error_exit_2(self, scores_file):
        code = main([
            "calibrate", "--scores", str(scores_file), "--method", "lp",
            "--alpha", "0.1", "--rho", "1.5",
        ])
        assert code == 2

    def test_missing_file_exit_3(self, tmp_path):
        code = main(["calibrate", "--scores", str(tmp_path / "nope.csv"), "--method", "sc"])
        assert code == 3

    def test_parse_error_exit_3(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("not-a-number\n")
        assert main(["calibrate", "--scores", str(bad), "--method", "sc"]) == 3

    def test_weighted_method(self, tmp_path):
        path = tmp_path / "w.csv"
        path.write_text("score,weight\n" + "".join(f"{v / 50},1.0\n" for v in range(50)))
        code = main([
            "calibrate", "--weights", str(path), "--method", "weighted",
            "--alpha", "0.1", "--test-weight", "1.0",
        ])
        assert code == 0


class TestEstimate:
    def test_selects_pair_and_writes_trace(self, tmp_path, capsys):
        rng = np.random.default_rng(2)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        t = tmp_path / "t.csv"
        a.write_text("".join(f"{float(v)!r}\n" for v in rng.normal(size=400)))
        b.write_text("".join(f"{float(v)!r}\n" for v in rng.normal(size=400)))
        t.write_text("".join(f"{float(v)!r}\n" for v in rng.normal(loc=0.1, size=400)))
        out = tmp_path / "est.json"
        code = main([
            "estimate", "--calib-a", str(a), "--calib-b", str(b), "--test", str(t),
            "--grid", "0.05,0.1,0.2,0.4", "--alpha", "0.1", "--out", str(out),
        ])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["epsilon"] in (0.05, 0.1, 0.2, 0.4)
        assert len(payload["grid_trace"]) == 4

    def test_default_grid(self, tmp_path):
        rng = np.random.default_rng(3)
        a = tmp_path / "a.csv"
        a.write_text("".join(f"{float(v)!r}\n" for v in rng.normal(size=500)))
        code = main([
            "estimate", "--calib-a", str(a), "--calib-b", str(a), "--test", str(a),
            "--out", str(tmp_path / "o.json"),
        ])
        assert code == 0
        payload = json.loads((tmp_path / "o.json").read_text())
        assert len(payload["grid_trace"]) == 20


class TestEvaluateAndCompare:
    def test_evaluate_report(self, matrix_file, tmp_path):
        out = tmp_path / "report.json"
        csv_out = tmp_path / "report.csv"
        code = main([
            "evaluate", "--matrix", str(matrix_file), "--method", "sc",
            "--alpha", "0.1", "--splits", "5", "--n-calib", "150",
            "--k-test", "100", "--seed", "7", "--out", str(out),
            "--csv", str(csv_out),
        ])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["schema_version"] == 1
        assert len(payload["per_split"]) == 5
        assert csv_out.exists()

    def test_byte_identical_reports(self, matrix_file, tmp_path):
        args = [
            "evaluate", "--matrix", str(matrix_file), "--method", "lp",
            "--alpha", "0.1", "--epsilon", "0.1", "--rho", "0.02",
            "--splits", "4", "--n-calib", "150", "--k-test", "100",
            "--seed", "3", "--perturb-rho", "0.05", "--perturb-epsilon", "0.1",
            "--perturb-global", "50.0",
        ]
        out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_compare_paired(self, matrix_file, tmp_path):
        out = tmp_path / "cmp.json"
        code = main([
            "compare", "--matrix", str(matrix_file), "--methods", "sc,lp",
            "--alpha", "0.1", "--epsilon", "0.1", "--rho", "0.05",
            "--splits", "4", "--n-calib", "150", "--k-test", "100",
            "--seed", "5", "--perturb-rho", "0.05", "--perturb-epsilon", "0.1",
            "--perturb-global", "50.0", "--out", str(out),
        ])
        assert code == 0
        payload = json.loads(out.read_text())
        assert [r["config"]["method"] for r in payload["reports"]] == ["sc", "lp"]

    def test_bad_split_sizes_exit_2(self, matrix_file):
        code = main([
            "evaluate", "--matrix", str(matrix_file), "--method", "sc",
            "--splits", "3", "--n-calib", "500", "--k-test", "500",
        ])
        assert code == 2


class TestSimulate:
    def test_writes_scores_and_sidecar(self, scores_file, tmp_path):
        out = tmp_path / "perturbed.csv"
        code = main([
            "simulate", "--scores", str(scores_file), "--epsilon", "0.1",
            "--rho", "0.2", "--global-value", "25.0", "--seed", "11",
            "--out", str(out),
        ])
        assert code == 0
        assert out.exists()
        sidecar = tmp_path / "perturbed_spec.json"
        payload = json.loads(sidecar.read_text())
        assert payload["rho"] == 0.2
        assert payload["global_law"] == {"kind": "point", "value": 25.0}
        values = [float(line) for line in out.read_text().split()]
        assert len(values) == 200

    def test_deterministic_given_seed(self, scores_file, tmp_path):
        outs = []
        for name in ("p1.csv", "p2.csv"):
            out = tmp_path / name
            assert main([
                "simulate", "--scores", str(scores_file), "--epsilon", "0.1",
                "--rho", "0.2", "--global-value", "25.0", "--seed", "11",
                "--out", str(out),
            ]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
