import itertools
import math

import numpy as np
import pytest
import torch

from conftest import linear_dataset
from koopnet.dataclasses.graph_dataclass import Graph, random_graph
from koopnet.errors import GraphMismatchError, ShapeError, TrainingError
from koopnet.models import trainer
from koopnet.models.base import KoopmanAutoencoder
from koopnet.models.kmpnn import KmpnnModel
from koopnet.models.layers import MpnnLayer, SpectralAdvance
from koopnet.models.losses import loss_total
from koopnet.models.registry import build_model, fit_model, load_model, save_model
from koopnet.models.specs import LossWeights, ModelSpec, TrainConfig, closest_power_of_two_above
from koopnet.models.spectrum import spectrum_report
from koopnet.numerics import DTYPE, GradientTape, central_differences, gradients, relative_error


def tiny_kmpnn(graph, seed=0, activation="tanh"):
    model = KmpnnModel(graph, 4, c=4, c_e=4, global_hidden=8, readout_hidden=4, activation=activation)
    model.reset_parameters(torch.Generator().manual_seed(seed))
    return model


class IdentityAutoencoder(KoopmanAutoencoder):
    """encode/decode are the identity; K starts at lambda = 1."""

    kind = "identity"

    def encode(self, values):
        return values

    def decode(self, y):
        return y

    def reset_parameters(self, gen=None):
        pass

    def config(self):
        return {}


def arc_tensors(graph):
    return torch.as_tensor(graph.src), torch.as_tensor(graph.dst)


def test_mpnn_matches_hand_computation(two_node_graph):
    torch.manual_seed(0)
    layer = MpnnLayer(c=2, c_e=1, activation="identity").to(DTYPE)
    X = torch.tensor([[[0.3, -0.1], [0.7, 0.2]]], dtype=DTYPE)
    E = torch.tensor([[0.5], [-0.4]], dtype=DTYPE)
    src, dst = arc_tensors(two_node_graph)
    out = layer(X, E, src, dst)[0].detach().numpy()

    def affine(mlp, v):
        for lin in mlp.layers:
            v = lin.weight.detach().numpy() @ v + lin.bias.detach().numpy()
        return v

    x, e = X[0].numpy(), E.numpy()
    for v in range(2):
        agg = np.zeros(2)
        for k, (s, d) in enumerate(zip(two_node_graph.src, two_node_graph.dst)):
            if d == v:
                agg += affine(layer.message, np.concatenate([x[v], x[s], e[k]]))
        expected = affine(layer.update, np.concatenate([x[v], agg]))
        assert np.allclose(out[v], expected, atol=1e-12)


@pytest.mark.parametrize("aggregator", ["sum", "max"])
def test_isolated_node_aggregates_zero(aggregator):
    g = Graph.from_edges(3, [(0, 1)])
    layer = MpnnLayer(c=4, c_e=2, aggregator=aggregator)
    X = torch.randn(1, 3, 4, dtype=DTYPE)
    E = torch.randn(g.num_arcs, 2, dtype=DTYPE)
    out = layer(X, E, *arc_tensors(g))
    expected = layer.update(torch.cat([X[0, 2], torch.zeros(4, dtype=DTYPE)]))
    assert torch.allclose(out[0, 2], expected)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_mpnn_equivariant_under_every_relabelling(seed):
    g = random_graph(5, 6, seed=seed)
    gen = torch.Generator().manual_seed(seed)
    layer = MpnnLayer(c=3, c_e=2)
    X = torch.randn(2, 5, 3, dtype=DTYPE, generator=gen)
    E = torch.randn(g.num_arcs, 2, dtype=DTYPE, generator=gen)
    out = layer(X, E, *arc_tensors(g))
    for perm in itertools.permutations(range(5)):
        perm = np.array(perm)
        Xp = torch.empty_like(X)
        Xp[:, perm] = X
        out_p = layer(Xp, E, torch.as_tensor(perm[g.src]), torch.as_tensor(perm[g.dst]))
        assert torch.allclose(out_p[:, perm], out, atol=1e-12), perm.tolist()


def test_mpnn_permutation_equivariance():
    g = random_graph(7, 10, seed=1)
    perm = np.random.default_rng(0).permutation(7)
    layer = MpnnLayer(c=4, c_e=3)
    X = torch.randn(2, 7, 4, dtype=DTYPE)
    E = torch.randn(g.num_arcs, 3, dtype=DTYPE)
    out = layer(X, E, *arc_tensors(g))

    Xp = torch.empty_like(X)
    Xp[:, perm] = X
    src_p, dst_p = torch.as_tensor(perm[g.src]), torch.as_tensor(perm[g.dst])
    out_p = layer(Xp, E, src_p, dst_p)
    assert torch.allclose(out_p[:, perm], out, atol=1e-12)


def test_encode_decode_shapes(small_graph):
    model = tiny_kmpnn(small_graph)
    x = torch.rand(3, 5, small_graph.n, dtype=DTYPE)
    y = model.encode(x)
    assert y.shape == (3, 5, 4)
    assert model.decode(y).shape == (3, 5, small_graph.n)


def test_zero_parameters_give_zero(small_graph):
    model = tiny_kmpnn(small_graph)
    with torch.no_grad():
        for p in model.parameters():
            p.zero_()
    x = torch.rand(2, small_graph.n, dtype=DTYPE)
    assert not model.encode(x).any()
    assert not model.decode(torch.rand(2, 4, dtype=DTYPE)).any()


def test_embedding_is_per_node(small_graph):
    model = tiny_kmpnn(small_graph)
    a = torch.rand(1, small_graph.n, dtype=DTYPE)
    b = a.clone()
    b[0, 2] += 0.5
    diff = (model.embed(a) - model.embed(b)).abs().sum(dim=-1)[0]
    assert diff.nonzero().flatten().tolist() == [2]


def test_wrong_node_count(small_graph):
    with pytest.raises(ShapeError):
        tiny_kmpnn(small_graph).encode(torch.zeros(small_graph.n + 1, dtype=DTYPE))


def test_advance_examples():
    K = SpectralAdvance(2)
    y = torch.tensor([1.0, 0.0], dtype=DTYPE)
    assert torch.equal(K(y, 0), y)
    with torch.no_grad():
        K.mu.fill_(0.0)
        K.omega.fill_(1.0)
    assert torch.allclose(K(y, 1), torch.tensor([0.0, 1.0], dtype=DTYPE), atol=1e-15)
    with torch.no_grad():
        K.mu.fill_(0.5)
        K.omega.fill_(0.0)
    assert torch.allclose(K(torch.tensor([2.0, 0.0], dtype=DTYPE), 3), torch.tensor([0.25, 0.0], dtype=DTYPE))


def unit_disc_advance(h, rng):
    K = SpectralAdvance(h)
    radius = rng.uniform(0.0, 1.0, h // 2)
    angle = rng.uniform(-math.pi, math.pi, h // 2)
    with torch.no_grad():
        K.mu.copy_(torch.as_tensor(radius * np.cos(angle)))
        K.omega.copy_(torch.as_tensor(radius * np.sin(angle)))
    return K


def test_advance_composes():
    rng = np.random.default_rng(0)
    for _ in range(100):
        K = unit_disc_advance(6, rng)
        y = torch.as_tensor(rng.normal(size=6))
        t1, t2 = (int(v) for v in rng.integers(0, 40, 2))
        with torch.no_grad():
            assert torch.allclose(K(K(y, t1), t2), K(y, t1 + t2), rtol=0, atol=1e-10), (t1, t2)


def test_advance_matches_repeated_rotation():
    rng = np.random.default_rng(1)
    K = unit_disc_advance(8, rng)
    y = torch.as_tensor(rng.normal(size=8))
    mu, omega = K.mu.detach().numpy(), K.omega.detach().numpy()
    pairs = y.numpy().reshape(4, 2).copy()
    with torch.no_grad():
        for t in range(101):
            assert np.allclose(K(y, t).numpy(), pairs.ravel(), rtol=0, atol=1e-10), t
            a, b = pairs[:, 0].copy(), pairs[:, 1].copy()
            pairs[:, 0] = mu * a - omega * b
            pairs[:, 1] = omega * a + mu * b


def test_advance_gradients_at_zero_eigenvalue():
    K = SpectralAdvance(4)
    with torch.no_grad():
        K.mu.zero_()
        K.omega.zero_()
    y = torch.tensor([1.0, -2.0, 0.5, 3.0], dtype=DTYPE)
    out = K(y, torch.arange(4))
    assert torch.equal(out[0], y)
    assert not out[1:].abs().gt(1e-25).any()
    out.sum().backward()
    assert torch.isfinite(K.mu.grad).all()
    assert torch.isfinite(K.omega.grad).all()


def test_advance_needs_even_dimension():
    with pytest.raises(ShapeError):
        SpectralAdvance(3)


def test_recon_only_weights(small_graph, linear_data):
    model = tiny_kmpnn(small_graph)
    batch = torch.as_tensor(linear_data.states[:4], dtype=DTYPE)
    total, parts = loss_total(model, batch, LossWeights(recon=1.0, linear=0.0, pred=0.0), horizon=4)
    assert float(total) == float(parts["recon"])


@pytest.mark.parametrize("seed", range(5))
def test_loss_is_non_negative(small_graph, seed):
    model = tiny_kmpnn(small_graph, seed=seed)
    batch = torch.rand(3, 6, small_graph.n, dtype=DTYPE, generator=torch.Generator().manual_seed(seed))
    total, parts = loss_total(model, batch, LossWeights(), horizon=5)
    assert float(total) >= 0.0
    assert all(float(v) >= 0.0 for v in parts.values())


def test_identity_model_on_constant_trajectory():
    model = IdentityAutoencoder(2, 2)
    batch = torch.full((3, 6, 2), 0.4, dtype=DTYPE)
    total, _ = loss_total(model, batch, LossWeights(), horizon=5)
    assert float(total) == 0.0


def test_prediction_offset():
    model = IdentityAutoencoder(2, 2)
    batch = torch.full((1, 4, 2), 0.3, dtype=DTYPE)
    batch[:, 1:] += 0.1
    _, parts = loss_total(model, batch, LossWeights(), horizon=3)
    assert float(parts["pred"]) == pytest.approx(0.01)


def test_gradients_match_finite_differences():
    g = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    model = tiny_kmpnn(g, seed=2)
    batch = torch.rand(2, 4, 4, dtype=DTYPE, generator=torch.Generator().manual_seed(1))

    def loss():
        return loss_total(model, batch, LossWeights(), horizon=3)[0]

    tape = GradientTape.of(model)
    tape.record(loss)
    analytic = gradients(tape)
    numeric = central_differences(loss, tape.slots)
    for name in analytic:
        assert relative_error(analytic[name], numeric[name]) <= 1e-4, name


def test_predict_trajectory_rows(small_graph):
    model = tiny_kmpnn(small_graph)
    x0 = np.random.default_rng(0).uniform(size=small_graph.n)
    traj = model.predict_trajectory(x0, 5)
    assert traj.shape == (6, small_graph.n)
    with torch.no_grad():
        y0 = model.encode(torch.as_tensor(x0, dtype=DTYPE))
        assert np.allclose(traj[0], model.decode(y0).numpy())
        for t in range(6):
            assert np.allclose(traj[t], model.decode(model.advance(y0, t)).numpy(), atol=1e-12)


def test_predict_trajectory_zero_horizon(small_graph):
    assert tiny_kmpnn(small_graph).predict_trajectory(np.zeros(small_graph.n), 0).shape == (1, small_graph.n)


def test_spectrum_report():
    rows = spectrum_report([(0.6, 0.8), (0.5, 0.0), (0.9, 0.1)])
    assert [r["modulus"] for r in rows] == sorted((r["modulus"] for r in rows), reverse=True)
    first = rows[0]
    assert first["modulus"] == pytest.approx(1.0)
    assert first["angle"] == pytest.approx(0.92730, abs=1e-5)
    assert first["period"] == pytest.approx(6.7753, abs=1e-3)
    assert rows[-1]["period"] == math.inf


def test_latent_rule():
    assert closest_power_of_two_above(100) == 128
    assert closest_power_of_two_above(20) == 32
    assert ModelSpec().latent_for(20) == 32
    assert ModelSpec(latent_dim=256).latent_for(20) == 256


def test_lusch_width_is_matched(small_graph, tiny_spec):
    kmpnn = build_model(tiny_spec, small_graph)
    lusch = build_model(tiny_spec.model_copy(update={"kind": "lusch"}), small_graph)
    assert abs(lusch.num_parameters - kmpnn.num_parameters) <= 0.1 * kmpnn.num_parameters


def test_train_history_and_determinism(small_graph, linear_data, tiny_spec, tiny_train):
    a, history = fit_model(tiny_spec, linear_data, tiny_train)
    b, _ = fit_model(tiny_spec, linear_data, tiny_train)
    assert len(history) == tiny_train.epochs
    assert set(history[0]) == {"epoch", "total", "recon", "linear", "pred", "val"}
    for pa, pb in zip(a.parameters(), b.parameters()):
        assert torch.equal(pa, pb)


def test_train_rejects_other_graph(small_graph, tiny_spec, tiny_train):
    other = linear_dataset(random_graph(6, 9, seed=8))
    model = build_model(tiny_spec, small_graph)
    with pytest.raises(GraphMismatchError) as err:
        trainer.train(model, other, tiny_train)
    assert small_graph.graph_hash in str(err.value)
    assert other.graph.graph_hash in str(err.value)


def test_non_finite_loss_names_the_batch(monkeypatch, small_graph, linear_data, tiny_spec, tiny_train):
    def broken(model, batch, weights, horizon):
        nan = torch.tensor(float("nan"), dtype=DTYPE)
        return nan, {"recon": nan, "linear": nan, "pred": nan}

    monkeypatch.setattr(trainer, "loss_total", broken)
    with pytest.raises(TrainingError, match="batch of trajectories"):
        fit_model(tiny_spec, linear_data, tiny_train)


def test_checkpoint_round_trip(tmp_path, small_graph, tiny_spec):
    model = build_model(tiny_spec, small_graph)
    model.reset_parameters(torch.Generator().manual_seed(4))
    save_model(model, tmp_path / "kmpnn.ckpt")
    loaded = load_model(tmp_path / "kmpnn.ckpt", small_graph)
    x0 = np.random.default_rng(1).uniform(size=small_graph.n)
    assert np.array_equal(loaded.predict_trajectory(x0, 3), model.predict_trajectory(x0, 3))

    with pytest.raises(GraphMismatchError):
        load_model(tmp_path / "kmpnn.ckpt", random_graph(6, 9, seed=8))


def test_lusch_checkpoint_round_trip(tmp_path, small_graph, tiny_spec):
    model = build_model(tiny_spec.model_copy(update={"kind": "lusch", "lusch_hidden": 5}), small_graph)
    model.reset_parameters(torch.Generator().manual_seed(0))
    save_model(model, tmp_path / "lusch.ckpt")
    loaded = load_model(tmp_path / "lusch.ckpt")
    assert loaded.hidden == 5
    x0 = np.full(small_graph.n, 0.5)
    assert np.array_equal(loaded.predict_trajectory(x0, 2), model.predict_trajectory(x0, 2))


@pytest.mark.slow
def test_kmpnn_trains_down_on_epidemic():
    from koopnet.dynamics import DynamicsModel, generate_dataset

    ds = generate_dataset(DynamicsModel("epidemic"), n=20, m=50, S=400, T=50, dt=0.05, seed=0, quiet=True)
    spec = ModelSpec(kind="kmpnn")
    config = TrainConfig(epochs=200, seed=0, quiet=True)
    _, history = fit_model(spec, ds, config)
    assert history[-1]["total"] < 0.1 * history[0]["total"]
