import json
import re

import numpy as np
import pytest

from ermlab import cli


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def strip_wall_clock(text):
    return re.sub(r'^\s*"wall_clock_sec": [0-9.e+-]+,?$', "", text,
                  flags=re.MULTILINE)


@pytest.fixture
def toy_csv(tmp_path, capsys):
    path = tmp_path / "toy.csv"
    code, out, err = run_cli(
        capsys, "gen-toy", "--n", "3", "--m", "60", "--sigma2", "0.0",
        "--w-true", "1.0,-2.0,0.5", "--seed", "7", "--out", str(path))
    assert code == cli.EXIT_OK
    return path


@pytest.fixture
def blob_csv(tmp_path):
    rng = np.random.default_rng(0)
    centers = np.array([[0.0, 0.0], [6.0, 0.0], [0.0, 6.0]])
    pts = np.concatenate(
        [c + 0.4 * rng.standard_normal((15, 2)) for c in centers])
    path = tmp_path / "blobs.csv"
    lines = ["a,b"] + [f"{float(p[0])!r},{float(p[1])!r}" for p in pts]
    path.write_text("\n".join(lines) + "\n")
    return path


class TestFit:
    def test_linreg_on_noiseless_data(self, toy_csv, tmp_path, capsys):
        model_path = tmp_path / "model.json"
        code, out, _ = run_cli(
            capsys, "fit", "--data", str(toy_csv), "--algo", "linreg",
            "--seed", "1", "--out", str(model_path))
        assert code == cli.EXIT_OK
        report = json.loads(out)
        assert report["results"]["train_error"] <= 1e-12
        assert report["results"]["val_error"] <= 1e-12
        model = json.loads(model_path.read_text())
        np.testing.assert_allclose(model["weights"], [1.0, -2.0, 0.5],
                                   atol=1e-9)

    def test_bayes_without_naive_on_wide_data_exits_4(self, tmp_path, capsys):
        rng = np.random.default_rng(1)
        path = tmp_path / "wide.csv"
        cols = [f"f{j}" for j in range(12)] + ["y"]
        rows = [",".join(cols)]
        for i in range(8):
            vals = [repr(float(v)) for v in rng.standard_normal(12)]
            vals.append("1" if i % 2 == 0 else "-1")
            rows.append(",".join(vals))
        path.write_text("\n".join(rows) + "\n")
        code, _, err = run_cli(
            capsys, "fit", "--data", str(path), "--algo", "bayes",
            "--train-fraction", "0.75")
        assert code == cli.EXIT_NUMERIC
        assert "singular" in err.lower()
        code, out, _ = run_cli(
            capsys, "fit", "--data", str(path), "--algo", "naive-bayes",
            "--train-fraction", "0.75")
        assert code == cli.EXIT_OK

    def test_reports_are_deterministic_up_to_wall_clock(self, toy_csv, capsys):
        argv = ["fit", "--data", str(toy_csv), "--algo", "ridge",
                "--lambda", "0.5", "--seed", "3"]
        code1, out1, _ = run_cli(capsys, *argv)
        code2, out2, _ = run_cli(capsys, *argv)
        assert code1 == code2 == cli.EXIT_OK
        assert strip_wall_clock(out1) == strip_wall_clock(out2)
        assert out1 != out2 or "wall_clock_sec" not in out1  # clock did tick

    def test_knn_and_tree_fit(self, toy_csv, capsys):
        for extra in (["--algo", "knn", "--k", "3"],
                      ["--algo", "tree", "--max-depth", "2"]):
            code, out, _ = run_cli(capsys, "fit", "--data", str(toy_csv),
                                   *extra)
            assert code == cli.EXIT_OK
            assert "train_error" in json.loads(out)["results"]

    def test_missing_file_exits_3(self, capsys):
        code, _, err = run_cli(capsys, "fit", "--data", "/does/not/exist.csv",
                               "--algo", "linreg")
        assert code == cli.EXIT_DATA

    def test_unparsable_cell_exits_3(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("x,y\n1.0,2.0\noops,3.0\n1.5,2.5\n1.,2.\n2.,4.\n")
        code, _, err = run_cli(capsys, "fit", "--data", str(path),
                               "--algo", "linreg")
        assert code == cli.EXIT_DATA
        assert "row 2" in err

    def test_bad_algo_exits_2(self, toy_csv, capsys):
        code, _, _ = run_cli(capsys, "fit", "--data", str(toy_csv),
                             "--algo", "magic")
        assert code == cli.EXIT_CONFIG


class TestSelect:
    def test_degree_sweep_on_noisy_cubic(self, tmp_path, capsys):
        rng = np.random.default_rng(2)
        x = rng.uniform(-2.0, 2.0, size=300)
        y = 0.5 * x ** 3 - x + 0.05 * rng.standard_normal(300)
        path = tmp_path / "cubic.csv"
        path.write_text("x,y\n" + "".join(f"{float(a)!r},{float(b)!r}\n"
                                          for a, b in zip(x, y)))
        code, out, _ = run_cli(
            capsys, "select", "--data", str(path), "--degrees", "0:8",
            "--seed", "5")
        assert code == cli.EXIT_OK
        report = json.loads(out)["results"]
        assert len(report["candidates"]) == 9
        chosen_degree = int(report["chosen_label"].split("=")[1])
        assert chosen_degree >= 3
        table = report["candidates"]
        assert table[0]["val_error"] > table[chosen_degree]["val_error"]

    def test_empty_candidate_list_exits_2(self, toy_csv, capsys):
        code, _, _ = run_cli(capsys, "select", "--data", str(toy_csv),
                             "--degrees", ",")
        assert code == cli.EXIT_CONFIG


class TestBiasvar:
    def test_r_grid_csv(self, capsys):
        code, out, _ = run_cli(
            capsys, "biasvar", "--n", "10", "--m-train", "50",
            "--sigma2", "1.0", "--r-grid", "1:8", "--trials", "200",
            "--seed", "0", "--format", "csv")
        assert code == cli.EXIT_OK
        lines = out.strip().splitlines()
        assert len(lines) == 9
        cols = lines[0].split(",")
        i_r = cols.index("r")
        i_av = cols.index("analytic_variance")
        for line in lines[1:]:
            vals = line.split(",")
            r = int(float(vals[i_r]))
            want = 1.0 * r / (50 - r - 1)
            assert float(vals[i_av]) == pytest.approx(want, rel=1e-12)

    def test_lambda_grid_variance_trend(self, capsys):
        code, out, _ = run_cli(
            capsys, "biasvar", "--n", "5", "--m-train", "40",
            "--sigma2", "1.0", "--lambda-grid", "0,1,4", "--trials", "3000",
            "--seed", "1")
        assert code == cli.EXIT_OK
        rows = json.loads(out)["results"]["sweep"]
        variances = [row["empirical_variance"] for row in rows]
        bands = [3.0 * row["se_variance"] for row in rows]
        for (a, b, band) in zip(variances, variances[1:], bands):
            assert b <= a + band

    def test_zero_trials_exits_2(self, capsys):
        code, _, _ = run_cli(capsys, "biasvar", "--n", "4", "--m-train", "20",
                             "--r-grid", "1:2", "--trials", "0")
        assert code == cli.EXIT_CONFIG

    def test_no_grid_exits_2(self, capsys):
        code, _, _ = run_cli(capsys, "biasvar", "--n", "4", "--m-train", "20")
        assert code == cli.EXIT_CONFIG


class TestClusterCommand:
    def test_kmeans_report_and_assignments(self, blob_csv, tmp_path, capsys):
        out_csv = tmp_path / "assign.csv"
        code, out, _ = run_cli(
            capsys, "cluster", "--data", str(blob_csv), "--algo", "kmeans",
            "--k", "3", "--restarts", "4", "--seed", "2",
            "--out", str(out_csv))
        assert code == cli.EXIT_OK
        report = json.loads(out)["results"]
        assert len(report["restart_table"]) == 4
        trace = report["error_trace"]
        assert all(b <= a + 1e-12 for a, b in zip(trace, trace[1:]))
        lines = out_csv.read_text().strip().splitlines()
        assert lines[0] == "point,cluster"
        assert len(lines) == 46

    def test_gmm_report(self, blob_csv, capsys):
        code, out, _ = run_cli(capsys, "cluster", "--data", str(blob_csv),
                               "--algo", "gmm", "--k", "3", "--seed", "0")
        assert code == cli.EXIT_OK
        report = json.loads(out)["results"]
        nll = report["neg_log_likelihood_trace"]
        assert all(b <= a + 1e-9 for a, b in zip(nll, nll[1:]))
        assert sum(report["probabilities"]) == pytest.approx(1.0)

    def test_elbow_csv_nonincreasing(self, blob_csv, capsys):
        code, out, _ = run_cli(
            capsys, "cluster", "--data", str(blob_csv), "--algo", "elbow",
            "--k-max", "6", "--seed", "1", "--format", "csv")
        assert code == cli.EXIT_OK
        lines = out.strip().splitlines()
        assert lines[0] == "k,error"
        assert len(lines) == 7
        errors = [float(line.split(",")[1]) for line in lines[1:]]
        assert all(b <= a + 1e-12 for a, b in zip(errors, errors[1:]))


class TestPcaCommand:
    def test_report_spectrum(self, blob_csv, capsys):
        code, out, _ = run_cli(capsys, "pca", "--data", str(blob_csv),
                               "--n-pc", "2")
        assert code == cli.EXIT_OK
        report = json.loads(out)["results"]
        assert len(report["spectrum"]) == 2
        assert report["reconstruction_error"] == pytest.approx(0.0, abs=1e-9)

    def test_scatter_mode(self, blob_csv, capsys):
        code, out, _ = run_cli(capsys, "pca", "--data", str(blob_csv),
                               "--scatter")
        assert code == cli.EXIT_OK
        lines = out.strip().splitlines()
        assert lines[0] == "pc1,pc2"
        assert len(lines) == 46


class TestDataCommands:
    def test_normalize_roundtrip(self, toy_csv, tmp_path, capsys):
        out_csv = tmp_path / "normed.csv"
        code, out, _ = run_cli(capsys, "normalize", "--data", str(toy_csv),
                               "--features", "x0,x1,x2",
                               "--out", str(out_csv))
        assert code == cli.EXIT_OK
        body = np.loadtxt(out_csv, delimiter=",", skiprows=1)
        assert np.abs(body.mean(axis=0)).max() < 1e-10
        assert np.abs((body ** 2).mean(axis=0) - 1.0).max() < 1e-10

    def test_split_writes_both_parts(self, toy_csv, tmp_path, capsys):
        prefix = tmp_path / "parts"
        code, out, _ = run_cli(capsys, "split", "--data", str(toy_csv),
                               "--train-fraction", "0.75", "--seed", "4",
                               "--out", str(prefix))
        assert code == cli.EXIT_OK
        report = json.loads(out)["results"]
        assert report["train_size"] == 45
        assert report["val_size"] == 15
        train = (tmp_path / "parts.train.csv").read_text().strip().splitlines()
        val = (tmp_path / "parts.val.csv").read_text().strip().splitlines()
        assert len(train) - 1 == 45 and len(val) - 1 == 15

    def test_gen_toy_deterministic(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            code, _, _ = run_cli(capsys, "gen-toy", "--n", "2", "--m", "10",
                                 "--seed", "9", "--out", str(path))
            assert code == cli.EXIT_OK
        assert a.read_text() == b.read_text()
