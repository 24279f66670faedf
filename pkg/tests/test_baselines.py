import numpy as np
import pytest

from cyclecast import baselines as bl
from cyclecast import evaluation
from cyclecast.bilstm_aa import TrainConfig
from cyclecast.features import LabeledWindow


def make_windows(rng, n, w=3, f=4, split="train", labeler=None):
    wins = []
    for i in range(n):
        block = rng.normal(size=(w, f))
        label = labeler(block) if labeler else int(i % 2)
        wins.append(LabeledWindow(end_month=600 + i, block=block, label=label, split=split))
    return wins


QUICK = TrainConfig(epochs=30, layer_sizes=(4, 3))


class TestNormalCdf:
    def test_center(self):
        assert bl.normal_cdf(0.0) == 0.5

    def test_reference_quantile(self):
        assert abs(bl.normal_cdf(1.959964) - 0.975) < 1e-6

    def test_symmetry(self, rng):
        x = rng.normal(size=200) * 3
        np.testing.assert_allclose(bl.normal_cdf(-x), 1.0 - bl.normal_cdf(x), atol=1e-12)


class TestLogistic:
    def test_separable_data_perfect_train_accuracy(self, rng):
        wins = make_windows(rng, 40, labeler=lambda b: int(b[0, 0] > 0))
        model = bl.train_baseline("logistic", wins, QUICK)
        preds = bl.predict_baseline(model, wins)
        labels = np.array([w.label for w in wins])
        acc = evaluation.metrics(evaluation.confusion(preds, labels)).accuracy
        assert acc == 1.0

    def test_zero_weights_give_half_probability(self, rng):
        wins = make_windows(rng, 6, split="test")
        model = bl.BaselineModel(
            bl.BaselineKind.logistic,
            {"w": np.zeros(12), "b": np.array(0.0)},
            QUICK,
            {},
        )
        preds = bl.predict_baseline(model, wins)
        assert all(p.probability == 0.5 for p in preds)


class TestProbit:
    def test_recovers_simulation_coefficients(self):
        rng = np.random.default_rng(4)
        n = 5000
        x = rng.normal(size=(n, 3))
        true_w = np.array([0.8, -1.2, 0.5])
        true_b = 0.3
        y = (rng.normal(size=n) < x @ true_w + true_b).astype(np.float64)
        w, b = bl.fit_probit(x, y)
        np.testing.assert_allclose(w, true_w, rtol=0.10)
        assert abs(b - true_b) / abs(true_b) < 0.10

    def test_zero_weights_give_half_probability(self, rng):
        wins = make_windows(rng, 4, split="test")
        model = bl.BaselineModel(
            bl.BaselineKind.probit, {"w": np.zeros(12), "b": np.array(0.0)}, QUICK, {}
        )
        preds = bl.predict_baseline(model, wins)
        assert all(p.probability == 0.5 for p in preds)


class TestSvm:
    def test_seed_has_no_effect(self, rng):
        wins = make_windows(rng, 30) + make_windows(rng, 10, split="validate")
        results = []
        for seed in (0, 1):
            model = bl.train_baseline("svm", wins, TrainConfig(epochs=5, seed=seed))
            preds = bl.predict_baseline(model, wins)
            results.append([p.probability for p in preds])
        assert results[0] == results[1]

    def test_separable_margin_sign(self, rng):
        wins = make_windows(rng, 60, labeler=lambda b: int(b.sum() > 0))
        model = bl.train_baseline("svm", wins, QUICK)
        preds = bl.predict_baseline(model, wins)
        labels = np.array([w.label for w in wins])
        acc = evaluation.metrics(evaluation.confusion(preds, labels)).accuracy
        assert acc > 0.9


class TestDeterministicKindsAcrossSeeds:
    @pytest.mark.parametrize("kind", ["svm", "logistic", "probit"])
    def test_bit_identical_metrics(self, kind, rng):
        wins = (
            make_windows(rng, 30)
            + make_windows(rng, 10, split="validate")
            + make_windows(rng, 10, split="test")
        )
        metric_rows = []
        for seed in (0, 1, 2):
            model = bl.train_baseline(kind, wins, TrainConfig(epochs=5, seed=seed))
            preds = bl.predict_baseline(model, [w for w in wins if w.split == "test"])
            labels = np.array([w.label for w in wins if w.split == "test"])
            metric_rows.append(evaluation.run_metrics(preds, labels))
        agg = evaluation.aggregate_runs(metric_rows)
        for key in evaluation.METRIC_KEYS:
            assert agg.std(key) == 0.0


class TestNeuralBaselines:
    def test_dnn_predictions_deterministic(self, rng):
        wins = make_windows(rng, 20) + make_windows(rng, 8, split="test")
        model = bl.train_baseline("dnn", wins, QUICK)
        test = [w for w in wins if w.split == "test"]
        p1 = bl.predict_baseline(model, test)
        p2 = bl.predict_baseline(model, test)
        assert p1 == p2

    def test_lstm_is_bilstm_with_backward_disabled(self, rng):
        # the LSTM baseline must be exactly the Bi-LSTM baseline's stack with
        # the backward direction off: same parameter names, shapes, and count
        wins = make_windows(rng, 12, f=4)
        lstm = bl.train_baseline("lstm", wins, TrainConfig(epochs=1, seed=0))
        from cyclecast.autodiff import make_rng

        stack, head_w, head_b = bl._recurrent_params(make_rng(0), 4, bidirectional=False)
        expected = {name: t.value.shape for name, t in stack.named_tensors()}
        expected["head.w"] = head_w.value.shape
        expected["head.b"] = head_b.value.shape
        got = {name: v.shape for name, v in lstm.arrays.items()}
        assert got == expected

    def test_autoencoder_reconstruction_decreases_monotonically(self, rng):
        wins = make_windows(rng, 30)
        low_lr = TrainConfig(epochs=50, learning_rate=1e-4)
        model = bl.train_baseline("autoencoder", wins, low_lr)
        history = model.info["reconstruction_history"]
        assert len(history) == 50
        assert all(b < a for a, b in zip(history, history[1:]))
