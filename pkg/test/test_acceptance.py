"""Desk-scale end-to-end runs. Deselected by default; run with `pytest -m slow`."""
import json

import pytest

from conftest import write_config, write_wine_csv
from koopnet.cli.app import main
from koopnet.dataclasses.report_dataclass import EvalReport

pytestmark = pytest.mark.slow


def pipeline(root, doc, *evaluate_args):
    path = write_config(root / "run.json", doc)
    assert main(["generate", "--config", str(path), "--out", str(root)]) == 0
    for kind in doc["eval"]["models"]:
        assert main(["fit", "--config", str(path), "--out", str(root), "--model", kind]) == 0
    assert main(["evaluate", "--config", str(path), "--out", str(root), *evaluate_args]) == 0
    return path


def test_kmpnn_leads_on_epidemic(tmp_path):
    # 1000 train, 100 val, 200 test
    doc = {
        "dynamics": {"model": "epidemic", "n": 20, "m": 50, "S": 1300, "T": 50, "seed": 0,
                     "split_fractions": [1000, 100, 200]},
        "model": {"kind": "kmpnn", "latent_dim": 32, "train": {"epochs": 200, "seed": 0, "quiet": True}},
        "eval": {"models": ["kmpnn", "lusch", "dmd"]},
        "io": {"log_dir": None},
    }
    pipeline(tmp_path, doc)
    report = EvalReport.load(tmp_path / "reports" / "epidemic" / "report.csv")
    kmpnn, lusch, dmd = (report.value("prediction", k, "prediction_loss") for k in ("kmpnn", "lusch", "dmd"))
    assert None not in (kmpnn, lusch, dmd)
    assert kmpnn <= 0.1 * lusch
    assert kmpnn <= 0.01 * dmd


@pytest.fixture(scope="module")
def wine_run(tmp_path_factory):
    """2-fc wine trajectories under SGD; KMPNN at h = 16, 50 test trajectories."""
    root = tmp_path_factory.mktemp("wine")
    doc = {
        "nn_task": {
            "task": {"kind": "wine", "wine_csv": str(write_wine_csv(root / "wine.csv"))},
            "arch": {"kind": "fc2"},
            "optimizer": {"kind": "sgd"},
            "epochs": 500, "S": 500, "seed": 0,
            "split_fractions": [0.8, 0.1, 0.1],
        },
        "model": {"kind": "kmpnn", "latent_dim": 16, "train": {"epochs": 200, "seed": 0, "quiet": True}},
        "eval": {"models": ["kmpnn"], "plot_nodes": [0]},
        "io": {"log_dir": None},
    }
    path = pipeline(root, doc)
    reports = root / "reports" / "fc2_wine"
    return root, path, EvalReport.load(reports / "report.json")


def test_wine_optimisation_performance(wine_run):
    root, _, report = wine_run
    manifest = json.loads((root / "data" / "fc2_wine" / "manifest.json").read_text())
    assert len(manifest["splits"]["test"]) >= 50
    r = report.value("prediction", "kmpnn", "r")
    assert r is not None
    assert 0.85 <= r <= 1.05


def test_wine_latent_sweep(wine_run):
    root, path, _ = wine_run
    assert main(["evaluate", "--config", str(path), "--out", str(root), "--sweep", "dims=4,8,16"]) == 0
    report = EvalReport.load(root / "reports" / "fc2_wine" / "report.json")
    loss = {d: report.value("latent_sweep", "kmpnn", "prediction_loss", dim=d) for d in (4, 8, 16)}
    r8 = report.value("latent_sweep", "kmpnn", "r", dim=8)
    assert None not in loss.values()
    assert r8 is not None and r8 >= 0.90
    assert loss[8] <= loss[4]


def test_report_is_reproducible(tmp_path):
    doc = {
        "dynamics": {"model": "population", "n": 10, "m": 20, "S": 60, "T": 20, "seed": 4},
        "model": {"kind": "kmpnn", "latent_dim": 8, "train": {"epochs": 20, "seed": 4, "quiet": True}},
        "eval": {"models": ["kmpnn", "dmd"]},
        "io": {"log_dir": None},
    }
    first = tmp_path / "a"
    second = tmp_path / "b"
    pipeline(first, doc)
    pipeline(second, doc)
    name = "population"
    assert (first / "reports" / name / "report.csv").read_bytes() == (second / "reports" / name / "report.csv").read_bytes()
    a = json.loads((first / "reports" / name / "report.json").read_text())
    b = json.loads((second / "reports" / name / "report.json").read_text())
    assert a["experiments"] == b["experiments"]


def test_parameter_trajectories_are_predictable(tmp_path):
    doc = {
        "nn_task": {
            "task": {"kind": "linear_regression", "n_samples": 200},
            "arch": {"kind": "fc1"},
            "optimizer": {"kind": "sgd", "lr": 0.01},
            "epochs": 500, "S": 40, "seed": 0,
        },
        "model": {"kind": "kmpnn", "latent_dim": 8, "train": {"epochs": 50, "seed": 0, "quiet": True}},
        "eval": {"models": ["kmpnn", "dmd"], "plot_nodes": [0, 20]},
        "io": {"log_dir": None},
    }
    pipeline(tmp_path, doc)
    reports = tmp_path / "reports" / "fc1_linear_regression"
    report = EvalReport.load(reports / "report.json")
    for kind in ("kmpnn", "dmd"):
        r = report.value("prediction", kind, "r")
        assert r is not None and r > 0.0
    assert (reports / "loss_trajectory.csv").exists()
    assert (reports / "plot_node_20.csv").exists()
