"""Training loop checks: metric oracle, descent, convergence, determinism, abort."""

import numpy as np
import pytest

from reachtube.nn.models import FNOConfig, OperatorModel
from reachtube.nn.training import Adam, TrainingError, rel_l2, train
from reachtube.nn import tensor as T


def tiny_model(seed=0, in_channels=2, width=4, modes=2):
    config = FNOConfig(in_channels=in_channels, out_channels=1, width=width,
                       modes1=modes, modes2=modes, n_blocks=1)
    return OperatorModel.build("fno", config, seed=seed, dtype=np.float32)


def identity_dataset(n_samples=4, n=8, seed=0):
    """Target equals the first input channel; second channel is coordinates."""
    rng = np.random.default_rng(seed)
    coords = np.arange(n) / n
    xx = np.broadcast_to(coords[:, None], (n, n))
    x = np.zeros((n_samples, n, n, 2), dtype=np.float32)
    y = np.zeros((n_samples, n, n, 1), dtype=np.float32)
    for i in range(n_samples):
        t = np.arange(n) / n
        a = (np.sin(2 * np.pi * (t[:, None] + rng.uniform()))
             * np.cos(2 * np.pi * (t[None, :] + rng.uniform())))
        x[i, :, :, 0] = a
        x[i, :, :, 1] = xx
        y[i, :, :, 0] = a
    return x, y


class TestRelL2:
    def test_exact_match_is_zero(self):
        a = np.random.default_rng(0).standard_normal((5, 5))
        assert rel_l2(a, a) == 0.0

    def test_double_is_one(self):
        a = np.random.default_rng(1).standard_normal((5, 5))
        assert rel_l2(2 * a, a) == pytest.approx(1.0, abs=1e-12)

    def test_matches_elementwise_recomputation(self):
        rng = np.random.default_rng(2)
        pred, truth = rng.standard_normal((6, 7)), rng.standard_normal((6, 7))
        direct = np.sqrt(((pred - truth) ** 2).sum()) / np.sqrt((truth**2).sum())
        assert abs(rel_l2(pred, truth) - direct) < 1e-12

    def test_zero_norm_truth_rejected(self):
        with pytest.raises(ValueError, match="zero norm"):
            rel_l2(np.ones(3), np.zeros(3))

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError, match="shape"):
            rel_l2(np.ones(3), np.ones(4))


class TestAdam:
    def test_quadratic_converges(self):
        # minimize (w - 3)^2 elementwise
        w = T.Tensor(np.zeros(4))
        optimizer = Adam({"w": w}, lr=0.1)
        for _ in range(300):
            w.zero_grad()
            diff = T.sub(w, np.full(4, 3.0))
            T.mean(T.mul(diff, diff)).backward()
            optimizer.step()
        assert np.abs(w.data - 3.0).max() < 1e-3

    def test_skips_parameters_without_grad(self):
        w = T.Tensor(np.ones(2))
        frozen = T.Tensor(np.ones(2))
        optimizer = Adam({"w": w, "frozen": frozen}, lr=0.5)
        w.grad = np.ones(2)
        optimizer.step()
        assert np.array_equal(frozen.data, np.ones(2))
        assert not np.array_equal(w.data, np.ones(2))


class TestTrain:
    def test_zero_target_loss_decreases(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((4, 8, 8, 2)).astype(np.float32)
        y = np.zeros((4, 8, 8, 1), dtype=np.float32)
        model = tiny_model()
        initial = float(np.mean([
            np.mean((model.predict(x[i]) - y[i]) ** 2) for i in range(4)
        ]))
        history = train(model, x, y, epochs=20, batch_size=4, lr=1e-2, seed=0)
        assert history[-1]["train_mse"] < initial

    def test_identity_task_converges_within_200_steps(self):
        x, y = identity_dataset()
        model = tiny_model()
        # batch of 4 -> one optimizer step per epoch -> 200 steps total
        history = train(model, x, y, epochs=200, batch_size=4, lr=1e-2, seed=0)
        assert history[-1]["train_mse"] < 1e-3

    def test_deterministic_given_seed(self):
        x, y = identity_dataset()
        runs = []
        for _ in range(2):
            model = tiny_model(seed=7)
            train(model, x, y, epochs=5, batch_size=2, lr=1e-3, seed=3)
            runs.append({k: v.data.copy() for k, v in model.params.items()})
        for name in runs[0]:
            assert np.array_equal(runs[0][name], runs[1][name]), name

    def test_history_and_csv_log(self, tmp_path):
        x, y = identity_dataset()
        log = tmp_path / "log.csv"
        history = train(model := tiny_model(), x, y, epochs=3, batch_size=2,
                        lr=1e-3, seed=0, x_test=x, y_test=y, log_path=log)
        assert len(history) == 3
        for record in history:
            for key in ("epoch", "train_mse", "train_rel_l2", "test_rel_l2", "seconds"):
                assert key in record
        lines = log.read_text().strip().splitlines()
        assert lines[0] == "epoch,train_mse,train_rel_l2,test_rel_l2,seconds"
        assert len(lines) == 4
        assert model.param_count > 0

    def test_nan_input_aborts_with_diagnostics(self):
        x, y = identity_dataset()
        x[1, 0, 0, 0] = np.nan
        with pytest.raises(TrainingError) as info:
            train(tiny_model(), x, y, epochs=1, batch_size=4, lr=1e-3, seed=0)
        assert info.value.epoch == 0
        assert isinstance(info.value.param_norms, dict)
        assert len(info.value.param_norms) > 0

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            train(tiny_model(), np.zeros((0, 8, 8, 2)), np.zeros((0, 8, 8, 1)),
                  epochs=1)

    def test_count_mismatch_rejected(self):
        with pytest.raises(ValueError, match="counts"):
            train(tiny_model(), np.zeros((2, 8, 8, 2)), np.zeros((3, 8, 8, 1)),
                  epochs=1)
