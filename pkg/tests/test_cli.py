import hashlib
import json
import subprocess
import sys

import numpy as np
import pytest

from latent_mbl.cli import main
from latent_mbl.data import MblDataset, SimDesign, dumps_dataset, load_dataset, save_dataset
from latent_mbl.model import ModelSpec, ParamVector
from conftest import make_k1_dataset
from oracles import newton_logistic


def run(*argv):
    return main([str(a) for a in argv])


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    assert run("simulate", "--preset", "section31", "--seed", 3, "--output-dir", out) == 0
    return out


@pytest.fixture(scope="module")
def fit_dir(sim_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("fit")
    assert run("fit", "--input", sim_dir / "dataset.csv", "--model", "shared-beta",
               "--blocks", "B-I", "--output-dir", out) == 0
    return out


def test_simulate_preset_rows_and_determinism(sim_dir, tmp_path):
    text = (sim_dir / "dataset.csv").read_text()
    assert len(text.splitlines()) == 1 + 1300
    assert run("simulate", "--preset", "benchmark", "--seed", 3, "--output-dir", tmp_path) == 0
    assert (tmp_path / "dataset.csv").read_text() == text
    data = load_dataset(sim_dir / "dataset.csv")
    assert data.n_subjects == 200 and data.n_responses == 3


def test_simulate_design_zero_links(tmp_path):
    design = SimDesign([(1000, 10, 1.0), (1000, 10, 4.0)],
                       ParamVector.zeros(ModelSpec(1, 0, (2, 1))), seed=9)
    (tmp_path / "design.json").write_text(json.dumps(design.to_dict()))
    assert run("simulate", "--design", tmp_path / "design.json", "--output-dir", tmp_path / "o") == 0
    data = load_dataset(tmp_path / "o" / "dataset.csv")
    assert np.all(np.abs(data.y.mean(axis=0) - 0.5) <= 0.01)


def test_shared_curvature_fit_report(fit_dir):
    out = json.loads((fit_dir / "fit.json").read_text())
    assert len(out["theta"]) == 7
    assert list(out["coefficients"]) == ["c1", "c2", "c3", "beta"]
    assert out["converged"] and np.isfinite(out["qic_u"])
    assert out["trace"][-1] <= 0.01
    report = (fit_dir / "fit_report.txt").read_text()
    assert report.splitlines()[0].split()[:3] == ["Parameters", "Intercept", "Slope"]


def test_fit_rerun_is_byte_identical(sim_dir, fit_dir, tmp_path):
    assert run("fit", "--input", sim_dir / "dataset.csv", "--model", "shared-beta",
               "--blocks", "B-I", "--output-dir", tmp_path) == 0
    assert digest(tmp_path / "fit.json") == digest(fit_dir / "fit.json")
    a = json.loads((tmp_path / "manifest.json").read_text())
    b = json.loads((fit_dir / "manifest.json").read_text())
    a.pop("created"), b.pop("created")
    a["config"].pop("output_dir"), b["config"].pop("output_dir")
    assert a == b


def one_row_subjects(t, y):
    # distinct durations keep single-row subjects apart in the file; the
    # shared-curvature model ignores duration
    n = len(t)
    return MblDataset(np.arange(n), 1.0 + np.arange(n), t, y)


def test_k1_fit_matches_logistic_oracle(tmp_path):
    data = make_k1_dataset(n=200, seed=11)
    data = one_row_subjects(data.time, data.y)
    save_dataset(data, tmp_path / "k1.csv")
    assert run("fit", "--input", tmp_path / "k1.csv", "--model", "shared-beta", "--fixed-beta", 0,
               "--tol", 1e-12, "--max-iter", 100, "--output-dir", tmp_path) == 0
    theta = json.loads((tmp_path / "fit.json").read_text())["theta"]
    X = np.column_stack([np.ones(200), data.time])
    np.testing.assert_allclose(theta, newton_logistic(X, data.y[:, 0]), atol=1e-6)


def test_beta_fit_and_divergence_exit(sim_dir, tmp_path):
    code = run("fit", "--input", sim_dir / "dataset.csv", "--orders", "a=0,b=0,link=1:1:1",
               "--output-dir", tmp_path / "ok")
    assert code == 0
    out = json.loads((tmp_path / "ok" / "fit.json").read_text())
    assert out["info"]["init"] in ("probability", "logit")
    code = run("fit", "--input", sim_dir / "dataset.csv", "--orders", "a=0,b=0,link=1:1:1",
               "--max-iter", 1, "--tol", 1e-12, "--output-dir", tmp_path / "slow")
    assert code == 2
    assert (tmp_path / "slow" / "fit.json").exists()


def test_diverged_fit_writes_trace(sim_dir, tmp_path, monkeypatch):
    import latent_mbl.cli as cli
    from latent_mbl.gee import DivergedError

    def boom(*args, **kwargs):
        raise DivergedError("relative difference grew", [0.1, 0.2, 0.4])

    monkeypatch.setattr(cli, "fit_beta_model", boom)
    assert run("fit", "--input", sim_dir / "dataset.csv", "--output-dir", tmp_path) == 2
    assert json.loads((tmp_path / "trace.json").read_text())["trace"] == [0.1, 0.2, 0.4]
    assert json.loads((tmp_path / "manifest.json").read_text())["status"] == "diverged"


@pytest.mark.parametrize("argv", [
    ["fit", "--input", "missing.csv"],
    ["gof", "--input", "missing.csv", "--fit", "missing.json"],
    ["fit", "--bogus"],
    ["simulate"],
    ["simulate", "--preset", "elsewhere"],
    ["fit", "--corr", "ar1", "--input", "x.csv"],
    [],
])
def test_usage_and_input_errors_exit_one(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 1


def test_mismatched_spec_exit_one(sim_dir, tmp_path):
    assert run("fit", "--input", sim_dir / "dataset.csv", "--orders", "a=0,b=0,link=1:1",
               "--output-dir", tmp_path) == 1


def test_gof_outputs(sim_dir, fit_dir, tmp_path):
    assert run("gof", "--input", sim_dir / "dataset.csv", "--fit", fit_dir / "fit.json",
               "--output-dir", tmp_path) == 0
    hl = json.loads((tmp_path / "hl.json").read_text())
    assert len(hl["per_response"]) == 3 and hl["df"] == 8
    assert (tmp_path / "hl.txt").read_text().startswith("Response")
    assert run("gof", "--input", sim_dir / "dataset.csv", "--fit", fit_dir / "fit.json",
               "--hl-bins", "decile", "--output-dir", tmp_path / "dec") == 0
    assert json.loads((tmp_path / "dec" / "hl.json").read_text())["binning"] == "decile"


def test_gof_perfect_fit_is_zero(tmp_path):
    # pi = 0.25 for t <= 0.5 and 0.75 after, matched exactly by the outcome counts
    t = np.repeat([0.25, 0.75], 8)
    y = np.array([1, 1, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 0, 0], float)[:, None]
    save_dataset(one_row_subjects(t, y), tmp_path / "d.csv")
    slope = 4 * np.log(3)
    fit_json = {"model": {"kind": "shared_curvature", "n_responses": 1, "fixed_beta": 0.0},
                "theta": [-np.log(3) - slope * 0.25, slope],
                "robust_cov": [[0.0, 0.0], [0.0, 0.0]],
                "correlation": {"structure": "independence", "alpha": None},
                "iterations": 1, "converged": True, "trace": [0.0],
                "scheme": {"all": [0, 1]}, "tol": 0.01}
    (tmp_path / "fit.json").write_text(json.dumps(fit_json))
    assert run("gof", "--input", tmp_path / "d.csv", "--fit", tmp_path / "fit.json",
               "--output-dir", tmp_path / "o") == 0
    hl = json.loads((tmp_path / "o" / "hl.json").read_text())
    assert hl["per_response"][0] == pytest.approx(0.0, abs=1e-12)


def test_check_plot_cardinality(sim_dir, fit_dir, tmp_path):
    assert run("check-plot", "--input", sim_dir / "dataset.csv", "--fit", fit_dir / "fit.json",
               "--output-dir", tmp_path) == 0
    names = sorted(p.name for p in tmp_path.iterdir())
    csvs = [n for n in names if n.endswith(".csv")]
    assert len(csvs) == 2 * 3
    assert "check_d2.svg" in names and "check_d8.svg" in names
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert sorted(manifest["outputs"]) == sorted(n for n in names if n != "manifest.json")


def test_select_writes_trace(tmp_path):
    spec = ModelSpec(0, 0, (1, 1))
    truth = ParamVector(spec, np.array([np.log(2), np.log(2), -1.5, 2.5, -1.0, 1.5]))
    design = SimDesign([(150, 6, 1.0), (150, 6, 2.0)], truth, seed=1)
    (tmp_path / "design.json").write_text(json.dumps(design.to_dict()))
    assert run("simulate", "--design", tmp_path / "design.json", "--output-dir", tmp_path) == 0
    assert run("select", "--input", tmp_path / "dataset.csv", "--orders", "a=1,b=0,link=1:1",
               "--blocks", "B-I", "--tol", 1e-6, "--output-dir", tmp_path / "sel") == 0
    rows = (tmp_path / "sel" / "selection.csv").read_text().splitlines()
    assert rows[0] == "label,QIC_u,accepted"
    assert rows[1].startswith("Full,") and rows[1].endswith(",1")
    manifest = json.loads((tmp_path / "sel" / "manifest.json").read_text())
    assert manifest["final_label"] == "ma=0"
    assert (tmp_path / "sel" / "selected_fit.json").exists()


def test_inputs_are_not_mutated(sim_dir, fit_dir, tmp_path):
    before = {p: digest(p) for p in (sim_dir / "dataset.csv", fit_dir / "fit.json")}
    run("gof", "--input", sim_dir / "dataset.csv", "--fit", fit_dir / "fit.json",
        "--output-dir", tmp_path / "g")
    run("check-plot", "--input", sim_dir / "dataset.csv", "--fit", fit_dir / "fit.json",
        "--output-dir", tmp_path / "c")
    assert {p: digest(p) for p in before} == before


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "latent_mbl", "simulate", "--preset", "section31",
                           "--seed", "7", "--output-dir", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    again = subprocess.run([sys.executable, "-m", "latent_mbl", "--version"],
                           capture_output=True, text=True)
    assert again.stdout.strip() == "0.1.0"
    data = load_dataset(tmp_path / "dataset.csv")
    assert dumps_dataset(data) == (tmp_path / "dataset.csv").read_text()
