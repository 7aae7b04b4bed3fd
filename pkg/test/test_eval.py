import numpy as np
import pytest

from koopnet.baselines import dmd_fit
from koopnet.baselines.dmd import snapshot_pairs
from koopnet.dataclasses.report_dataclass import EvalReport, ReportRow
from koopnet.errors import FormatError, MetricError, ShapeError
from koopnet.eval import (
    evaluate_model,
    experiments,
    grid_cells,
    latent_dim_sweep,
    optimisation_performance,
    prediction_loss,
    robustness_suite,
)
from koopnet.eval.export import write_history, write_node_plots
from koopnet.models.specs import ModelSpec, TrainConfig
from koopnet.tasks.specs import ArchSpec, OptimizerSpec, TaskSpec
from koopnet.tasks.trajectories import generate_param_dataset

SWEEP_TRAIN = TrainConfig(epochs=1, batch_size=8, seed=0, horizon=4, quiet=True)


class NanModel:
    def predict_trajectory(self, x0, T):
        return np.full(x0.shape[:-1] + (T + 1, x0.shape[-1]), np.nan)


def test_prediction_loss_identity():
    a = np.random.default_rng(0).normal(size=(3, 4, 5))
    assert prediction_loss(a, a) == 0.0


def test_prediction_loss_offset():
    a = np.zeros((2, 3, 4))
    assert prediction_loss(a + 0.1, a) == pytest.approx(0.01)


def test_prediction_loss_symmetric_and_quadratic():
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=(2, 3, 5, 4))
    assert prediction_loss(a, b) == prediction_loss(b, a)
    for c in (0.5, 2.0, -3.0):
        assert prediction_loss(c * a, c * b) == pytest.approx(c ** 2 * prediction_loss(a, b), rel=1e-12)


def test_prediction_loss_shape_mismatch():
    with pytest.raises(ShapeError):
        prediction_loss(np.zeros((2, 3, 4)), np.zeros((2, 4, 4)))


def test_optimisation_performance():
    assert optimisation_performance(1.0, 0.1, 0.1) == 1.0
    assert optimisation_performance(1.0, 0.55, 0.1) == pytest.approx(0.5)
    with pytest.raises(MetricError):
        optimisation_performance(0.3, 0.2, 0.3)


@pytest.mark.parametrize("scale, shift", [(2.0, 0.0), (0.1, 5.0), (-3.0, 1.0), (7.5, -2.0)])
def test_optimisation_performance_ignores_affine_rescaling(scale, shift):
    l0, l_pred, l_true = 1.3, 0.42, 0.2
    expected = optimisation_performance(l0, l_pred, l_true)
    moved = optimisation_performance(*(scale * v + shift for v in (l0, l_pred, l_true)))
    assert moved == pytest.approx(expected, rel=1e-12)


def test_evaluate_dmd_on_linear_data(linear_data):
    model = dmd_fit(*snapshot_pairs(linear_data.split("train")))
    result = evaluate_model("dmd", model, linear_data, seed=0)
    (row,) = result.rows
    assert row.metric == "prediction_loss"
    assert row.status == "ok"
    assert row.value < 1e-12
    assert result.predictions.shape == linear_data.split("test").shape


def test_non_finite_predictions_are_out_of_scale(linear_data):
    (row,) = evaluate_model("broken", NanModel(), linear_data, seed=0).rows
    assert row.status == "out_of_scale"
    assert row.value is None


def test_latent_sweep_rows(linear_data):
    template = ModelSpec(kind="kmpnn", c=4, c_e=4, global_hidden=8, readout_hidden=4)
    rows = latent_dim_sweep(template, linear_data, [2, 4, 6], SWEEP_TRAIN)
    assert [r.params["dim"] for r in rows] == [2, 4, 6]
    assert {r.experiment for r in rows} == {"latent_sweep"}


def test_latent_sweep_rejects_odd_dims(linear_data):
    with pytest.raises(ValueError):
        latent_dim_sweep(ModelSpec(), linear_data, [3], SWEEP_TRAIN)


def test_grid_shapes():
    assert len(grid_cells("activations")) == 10
    assert len(grid_cells("optimizers")) == 8
    assert all(c.optimizer.shuffle for c in grid_cells("stochastic"))
    with pytest.raises(ValueError):
        grid_cells("learning_rates")


def _small_suite(grid, cases):
    template = ModelSpec(kind="kmpnn", latent_dim=2, c=2, c_e=2, global_hidden=4, readout_hidden=2)
    return robustness_suite(
        grid, template, TrainConfig(epochs=1, batch_size=4, seed=0, quiet=True), S=4, epochs=20, seed=3,
        cases=cases, task_overrides={"n_samples": 32}, split_fractions=(0.5, 0.25, 0.25),
    )


def test_robustness_is_deterministic():
    cases = [("linear_regression", "fc1")]
    a = _small_suite("optimizers", cases)
    b = _small_suite("optimizers", cases)
    assert len(a) == 4
    assert [r.params["optimizer"] for r in a] == ["sgd", "adagrad", "adadelta", "adam"]
    assert [r.value for r in a] == [r.value for r in b]
    assert {r.metric for r in a} == {"r"}


def test_robustness_diverged_cells_are_out_of_scale(monkeypatch):
    monkeypatch.setattr(experiments, "fit_model", lambda spec, dataset, config: (NanModel(), []))
    rows = _small_suite("optimizers", [("linear_regression", "fc1")])
    assert len(rows) == 4
    assert {r.metric for r in rows} == {"r"}
    assert {r.status for r in rows} == {"out_of_scale"}
    assert all(r.value is None for r in rows)
    assert rows[0].note == "non-finite predictions"


def test_robustness_missing_data_fails_cells(tmp_path, monkeypatch):
    monkeypatch.setenv("KOOPNET_DATA_DIR", str(tmp_path))
    rows = _small_suite("optimizers", [("digits", "conv1_fc2")])
    assert len(rows) == 4
    assert {r.status for r in rows} == {"failed"}
    assert "digits.csv" in rows[0].note


def test_report_csv_and_json(tmp_path):
    report = EvalReport(config_hash="abc", manifest={"dataset": "epidemic"})
    report.add(experiment="prediction", model="dmd", dataset="epidemic", seed=0, metric="prediction_loss",
               value=0.0175)
    report.add(experiment="prediction", model="edmd", dataset="epidemic", seed=0, metric="prediction_loss",
               value=None, status="unidentified", note="unable to identify a system")
    report.add(experiment="latent_sweep", model="kmpnn", dataset="epidemic", seed=0, metric="prediction_loss",
               value=float("inf"), status="out_of_scale", params={"dim": 8})
    paths = report.save(tmp_path)

    assert paths["csv"].read_text().startswith("# config_hash=abc\n")
    from_csv = EvalReport.load(paths["csv"])
    from_json = EvalReport.load(paths["json"])
    for loaded in (from_csv, from_json):
        assert loaded.config_hash == "abc"
        assert loaded.value("prediction", "dmd", "prediction_loss") == 0.0175
        assert loaded.value("prediction", "edmd", "prediction_loss") is None
        assert loaded.value("latent_sweep", "kmpnn", "prediction_loss", dim=8) == float("inf")
    assert from_json.manifest == {"dataset": "epidemic"}


def test_report_rejects_unknown_status():
    with pytest.raises(FormatError):
        ReportRow("prediction", "dmd", "x", 0, "prediction_loss", 1.0, status="great")


def test_node_plot_files(tmp_path, linear_data):
    model = dmd_fit(*snapshot_pairs(linear_data.split("train")))
    pred = model.predict_trajectory(linear_data.split("test")[:, 0], linear_data.T)
    paths = write_node_plots(tmp_path, linear_data, {"dmd": pred}, nodes=(0, 1), config_hash="h")
    assert [p.name for p in paths] == ["plot_node_0.csv", "plot_node_1.csv"]
    lines = paths[0].read_text().splitlines()
    assert lines[0] == "# config_hash=h"
    assert lines[1] == "time,actual,dmd"
    assert len(lines) == 2 + linear_data.T + 1


def test_history_file(tmp_path):
    history = [{"epoch": 1, "total": 1.0, "recon": 0.5, "linear": 0.25, "pred": 0.25, "val": 0.9}]
    lines = write_history(tmp_path / "h.csv", history, "h").read_text().splitlines()
    assert lines[1] == "epoch,total,recon,linear,pred,val"
    assert lines[2] == "1,1.0,0.5,0.25,0.25,0.9"


@pytest.fixture
def linreg_trajectories():
    return generate_param_dataset(TaskSpec(kind="linear_regression", n_samples=32), ArchSpec(kind="fc1"),
                                  OptimizerSpec(kind="sgd", lr=0.01), epochs=50, S=8, seed=1,
                                  split_fractions=(0.5, 0.25, 0.25), quiet=True)


def test_flat_loss_trajectory_is_noted(linreg_trajectories):
    ds = linreg_trajectories
    first = ds.splits["test"][0]
    ds.losses[first, -1] = ds.losses[first, 0]
    model = dmd_fit(*snapshot_pairs(ds.split("train")))
    rows = {r.metric: r for r in evaluate_model("dmd", model, ds, seed=0).rows}
    assert "r undefined for 1 of 2 trajectories" in rows["r"].note
    assert "initial loss equals final loss" in rows["r"].note


def test_all_flat_loss_trajectories_fail_r(linreg_trajectories):
    ds = linreg_trajectories
    test = ds.splits["test"]
    ds.losses[test, -1] = ds.losses[test, 0]
    model = dmd_fit(*snapshot_pairs(ds.split("train")))
    rows = {r.metric: r for r in evaluate_model("dmd", model, ds, seed=0).rows}
    assert rows["r"].status == "failed"
    assert rows["r"].value is None
    assert "initial loss equals final loss" in rows["r"].note
    assert "prediction_loss" in rows
