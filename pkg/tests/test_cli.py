import json

import numpy as np
import pytest

from gsrl import GroupPartition, GsrlProblem, fit, lambda_max
from gsrl.cli import main
from gsrl.tuning import TuningInputs, lambda_fdist


@pytest.fixture
def dataset(tmp_path, rng):
    """CSV + groups files for a well-posed 30x6 problem with 3 groups of 2."""
    X = rng.standard_normal((30, 6))
    beta = np.array([2.0, 2.0, 0, 0, 1.5, 1.5])
    Y = X @ beta + 0.5 * rng.standard_normal(30)
    xf, yf, gf = tmp_path / "x.csv", tmp_path / "y.csv", tmp_path / "g.json"
    np.savetxt(xf, X, delimiter=",")
    np.savetxt(yf, Y[:, None], delimiter=",")
    gf.write_text(json.dumps([[0, 1], [2, 3], [4, 5]]))
    prob = GsrlProblem(X, Y, GroupPartition.contiguous(6, 2))
    return {"x": str(xf), "y": str(yf), "g": str(gf), "problem": prob,
            "dir": tmp_path}


def test_fit_roundtrip(dataset):
    out = dataset["dir"] / "fit.json"
    lam = 0.3 * lambda_max(dataset["problem"])
    rc = main(["fit", dataset["x"], dataset["y"], dataset["g"],
               "--lambda", str(lam), "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["schema_version"] == 1
    direct = fit(dataset["problem"], lam)
    assert np.allclose(doc["coefficients"], direct.beta, atol=1e-12)
    assert doc["support"] == sorted(direct.support)
    assert doc["converged"] is True
    assert doc["kkt_residual"] <= 1e-6
    assert len(doc["groups"]) == 3
    assert doc["groups"][0]["indices"] == [0, 1]


def test_fit_rejects_bad_lambda(dataset, capsys):
    out = dataset["dir"] / "fit.json"
    rc = main(["fit", dataset["x"], dataset["y"], dataset["g"],
               "--lambda", "-1", "--out", str(out)])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_fit_nonconverged_exit_code(dataset):
    # an unreachable tolerance forces max_iterations -> exit 2
    out = dataset["dir"] / "fit.json"
    lam = 0.05 * lambda_max(dataset["problem"])
    rc = main(["fit", dataset["x"], dataset["y"], dataset["g"],
               "--lambda", str(lam), "--tol", "1e-300", "--out", str(out)])
    assert rc == 2
    doc = json.loads(out.read_text())
    assert doc["status"] == "max_iterations"
    assert doc["converged"] is False


def test_groups_must_partition(dataset, capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps([[0, 1], [2, 3]]))  # misses columns 4, 5
    out = tmp_path / "o.json"
    rc = main(["fit", dataset["x"], dataset["y"], str(bad),
               "--lambda", "1.0", "--out", str(out)])
    assert rc == 1
    assert "groups do not partition columns (p=6)" in capsys.readouterr().err


def test_unparseable_inputs_named(dataset, capsys, tmp_path):
    junk = tmp_path / "junk.csv"
    junk.write_text("a,b,c\n")
    out = tmp_path / "o.json"
    rc = main(["fit", str(junk), dataset["y"], dataset["g"],
               "--lambda", "1.0", "--out", str(out)])
    assert rc == 1
    assert "junk.csv" in capsys.readouterr().err


def test_path_command(dataset):
    out = dataset["dir"] / "path.json"
    rc = main(["path", dataset["x"], dataset["y"], dataset["g"],
               "--grid-min-exp", "-3", "--grid-step", "0.5", "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    entries = doc["entries"]
    assert len(entries) == 7
    lams = [e["lambda"] for e in entries]
    assert lams == sorted(lams, reverse=True)


def test_path_explicit_grid(dataset, tmp_path):
    gridf = tmp_path / "grid.csv"
    lam = lambda_max(dataset["problem"])
    np.savetxt(gridf, np.array([0.2 * lam, 0.6 * lam, 0.4 * lam])[:, None])
    out = tmp_path / "path.json"
    rc = main(["path", dataset["x"], dataset["y"], dataset["g"],
               "--grid", str(gridf), "--out", str(out)])
    assert rc == 0
    lams = [e["lambda"] for e in json.loads(out.read_text())["entries"]]
    assert lams == sorted(lams, reverse=True)  # sorted decreasing for the solver


class TestTune:
    def test_th_matches_recomputation(self, dataset):
        out = dataset["dir"] / "tune.json"
        rc = main(["tune", dataset["x"], dataset["y"], dataset["g"],
                   "--method", "th", "--alpha", "0.05", "--out", str(out)])
        assert rc == 0
        doc = json.loads(out.read_text())
        inputs = TuningInputs.from_problem(dataset["problem"], alpha=0.05)
        lam0, tau0 = lambda_fdist(inputs)
        assert doc["lambda"] == pytest.approx(lam0, rel=1e-12)
        assert doc["metadata"]["tau0"] == pytest.approx(tau0, rel=1e-12)

    def test_cv_fold_bound(self, dataset, capsys):
        out = dataset["dir"] / "tune.json"
        rc = main(["tune", dataset["x"], dataset["y"], dataset["g"],
                   "--method", "cv", "--folds", "101", "--out", str(out)])
        assert rc == 1
        assert "folds" in capsys.readouterr().err

    def test_scv_bic_lists_candidates(self, dataset):
        out = dataset["dir"] / "tune.json"
        rc = main(["tune", dataset["x"], dataset["y"], dataset["g"],
                   "--method", "scv-bic", "--grid-min-exp", "-3",
                   "--grid-step", "0.5", "--out", str(out)])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert doc["method"] == "scv-bic"
        assert len(doc["metadata"]["candidates"]) >= 1

    def test_srl_th(self, dataset):
        out = dataset["dir"] / "tune.json"
        rc = main(["tune", dataset["x"], dataset["y"], dataset["g"],
                   "--method", "srl-th", "--out", str(out)])
        assert rc == 0
        assert json.loads(out.read_text())["method"] == "srl-th"


def test_diagnose(dataset):
    out = dataset["dir"] / "diag.json"
    rc = main(["diagnose", dataset["x"], dataset["g"],
               "--support", "0,2", "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["support"] == [0, 2]
    assert doc["sigma11_invertible"] is True
    assert doc["gir_ascent_estimate"] <= doc["gir_upper_bound"] + 1e-10
    assert doc["gram_summary"]["sigma11_shape"] == [4, 4]


def test_diagnose_bad_support(dataset, capsys):
    out = dataset["dir"] / "diag.json"
    rc = main(["diagnose", dataset["x"], dataset["g"],
               "--support", "0,9", "--out", str(out)])
    assert rc == 1
    assert "support" in capsys.readouterr().err


def test_simulate_byte_identical(tmp_path, capsys):
    out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
    args = ["simulate", "--preset", "table2", "--p", "60", "--reps", "2",
            "--seed", "7"]
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    printed = capsys.readouterr().out
    assert "M =" in printed and "FA =" in printed and "MSE =" in printed


def test_simulate_timing_field(tmp_path):
    out = tmp_path / "t1.json"
    rc = main(["simulate", "--preset", "table1-path", "--p", "25",
               "--reps", "1", "--seed", "3", "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert "seconds" in doc["replications"][0]["methods"]["path"]
