"""The BiLSTM-autoencoder-attention recession classifier.

A window of ``w`` standardized feature months runs through the stacked
bidirectional LSTM; the per-step states are encoded into the autoencoder
bottleneck, pooled by sigmoid attention gates, and mapped by a linear head to
a recession probability. Training minimizes a composite objective: squared
prediction error, plus the squared error of reconstructing each window's
final-step state six months ahead from the current bottleneck code, plus L2
regularization over all weight matrices.

Each architectural component can be switched off independently, which is what
the component-ablation experiment drives.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from threadpoolctl import threadpool_limits

from . import evaluation
from .autodiff import (
    AdamState,
    NonFiniteError,
    Tape,
    Tensor,
    adam_step,
    backward,
    make_rng,
    sigmoid,
    square,
    tanh,
    tsum,
    uniform_init,
)
from .features import windows_tensor
from .layers import (
    AttentionParams,
    AutoencoderParams,
    BiLstmStackParams,
    attention_pool,
    autoencode,
    bilstm_forward,
    encode,
)
from .months import format_ym


class ModelError(Exception):
    pass


class EmptyBatchError(ModelError):
    pass


class DivergenceDetectedError(ModelError):
    pass


# A healthy full-batch loss on the canonical data is O(1e3); bounded
# activations plus Adam's normalized steps mean a runaway run inflates the
# reconstruction term through this ceiling long before any float64 overflows,
# so crossing it is treated the same as a non-finite loss.
DIVERGENCE_LOSS_CEILING = 1e12


@dataclass(frozen=True)
class LossWeights:
    """Reconstruction weight (alpha) and regularization weight (beta)."""

    alpha: float = 1.0
    beta: float = 1e-4

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and np.isfinite(self.beta)):
            raise ValueError("loss weights must be finite")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("loss weights must be non-negative")


@dataclass(frozen=True)
class TrainConfig:
    """Everything one training run depends on, seed included."""

    epochs: int = 300
    learning_rate: float = 0.001
    seed: int = 0
    use_attention: bool = True
    use_bilstm_backward: bool = True
    use_autoencoder: bool = True
    loss_weights: LossWeights = LossWeights()
    layer_sizes: tuple = (24, 12, 8)
    bottleneck: int = 4
    recon_offset: int = 6
    relu_cell: bool = False
    sigmoid_head: bool = False
    threshold: float = 0.5

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")


@dataclass(frozen=True)
class Prediction:
    month: int
    probability: float
    label: int

    @property
    def month_str(self) -> str:
        return format_ym(self.month)


@dataclass
class ParameterSet:
    """All trainable parameters of the assembled model."""

    bilstm: BiLstmStackParams
    autoencoder: AutoencoderParams | None
    attention: AttentionParams | None
    head_w: Tensor
    head_b: Tensor

    @classmethod
    def init(cls, rng: np.random.Generator, input_dim: int, config: TrainConfig) -> "ParameterSet":
        bilstm = BiLstmStackParams.init(
            rng, input_dim, config.layer_sizes, bidirectional=config.use_bilstm_backward
        )
        pooled_dim = bilstm.output_dim
        autoencoder = None
        if config.use_autoencoder:
            autoencoder = AutoencoderParams.init(rng, bilstm.output_dim, config.bottleneck)
            pooled_dim = config.bottleneck
        attention = AttentionParams.init(rng, pooled_dim) if config.use_attention else None
        return cls(
            bilstm=bilstm,
            autoencoder=autoencoder,
            attention=attention,
            head_w=Tensor(uniform_init(rng, (pooled_dim,), pooled_dim), requires_grad=True),
            head_b=Tensor(uniform_init(rng, (), pooled_dim), requires_grad=True),
        )

    def named_parameters(self):
        """(name, tensor) pairs in a stable order; names ending '.b' are biases."""
        yield from self.bilstm.named_tensors()
        if self.autoencoder is not None:
            yield from self.autoencoder.named_tensors()
        if self.attention is not None:
            yield from self.attention.named_tensors()
        yield "head.w", self.head_w
        yield "head.b", self.head_b

    def tensors(self) -> list:
        return [t for _, t in self.named_parameters()]

    def weight_tensors(self) -> list:
        """Weight matrices/vectors only; biases are exempt from regularization."""
        return [t for name, t in self.named_parameters() if not name.endswith(".b")]

    @property
    def parameter_count(self) -> int:
        return int(sum(t.value.size for t in self.tensors()))

    def snapshot(self) -> list:
        return [t.value.copy() for t in self.tensors()]

    def restore(self, snapshot) -> None:
        for t, value in zip(self.tensors(), snapshot):
            t.value = value.copy()


def model_forward(params: ParameterSet, windows, config: TrainConfig):
    """Probability of recession for each window in the batch.

    Returns ``(prob, steps, final_h)``: the (N,) probability tensor, the list
    of per-step representations, and the final-step representation used by
    the reconstruction objective.
    """
    steps = bilstm_forward(params.bilstm, windows, relu_cell=config.relu_cell)
    final_h = steps[-1]
    if params.autoencoder is not None:
        pooled_steps = [encode(params.autoencoder, s) for s in steps]
    else:
        pooled_steps = steps
    pooled = attention_pool(params.attention, pooled_steps, gate_one=not config.use_attention)
    score = pooled @ params.head_w + params.head_b
    if config.sigmoid_head:
        prob = sigmoid(score)
    else:
        prob = (tanh(score) + 1.0) * 0.5
    return prob, steps, final_h


def composite_loss(params: ParameterSet, blocks: np.ndarray, labels: np.ndarray, config: TrainConfig):
    """Total training loss and its individually reported components.

    Reconstruction pairs are (t, t + offset) over the batch in window order,
    summed only where both windows exist; component values in the returned
    dict are unweighted.
    """
    if len(blocks) == 0:
        raise EmptyBatchError("cannot evaluate loss on an empty batch")
    weights = config.loss_weights
    prob, _, final_h = model_forward(params, blocks, config)
    target = Tensor(np.asarray(labels, dtype=np.float64))
    pred_loss = tsum(square(prob - target))
    loss = pred_loss

    offset = config.recon_offset
    pairs = 0
    recon_value = 0.0
    if params.autoencoder is not None and len(blocks) > offset:
        _, recon = autoencode(params.autoencoder, final_h)
        diff = final_h[offset:] - recon[: len(blocks) - offset]
        recon_loss = tsum(square(diff))
        pairs = len(blocks) - offset
        recon_value = float(recon_loss.value)
        loss = loss + weights.alpha * recon_loss

    reg = None
    for w in params.weight_tensors():
        term = tsum(square(w))
        reg = term if reg is None else reg + term
    loss = loss + weights.beta * reg

    parts = {
        "prediction": float(pred_loss.value),
        "reconstruction": recon_value,
        "regularization": float(reg.value),
        "reconstruction_pairs": pairs,
    }
    return loss, parts


def _probabilities(params: ParameterSet, blocks: np.ndarray, config: TrainConfig) -> np.ndarray:
    prob, _, _ = model_forward(params, blocks, config)
    return prob.value


def train(train_windows, config: TrainConfig, val_windows=None):
    """Full-batch Adam training with best-validation-F1 parameter selection.

    Returns the trained :class:`ParameterSet` and a history dict with one
    entry per epoch (loss components plus validation recession F1). Without
    validation windows the final epoch's parameters are kept.
    """
    if not train_windows:
        raise EmptyBatchError("training split is empty")
    train_windows = sorted(train_windows, key=lambda wdw: wdw.end_month)
    blocks, labels = windows_tensor(train_windows)
    val_blocks, val_labels = (None, None)
    if val_windows:
        val_windows = sorted(val_windows, key=lambda wdw: wdw.end_month)
        val_blocks, val_labels = windows_tensor(val_windows)

    rng = make_rng(config.seed)
    params = ParameterSet.init(rng, blocks.shape[2], config)
    tensors = params.tensors()
    adam = AdamState(lr=config.learning_rate)

    epochs = []
    best = {"epoch": 0, "val_f1": -1.0, "snapshot": None}
    with threadpool_limits(limits=1):
        _train_loop(params, tensors, adam, blocks, labels, val_blocks, val_labels, config, epochs, best)

    if best["snapshot"] is not None:
        params.restore(best["snapshot"])
        chosen_epoch = best["epoch"]
    else:
        chosen_epoch = config.epochs
    history = {
        "epochs": epochs,
        "chosen_epoch": chosen_epoch,
        "best_val_recession_f1": best["val_f1"] if best["snapshot"] is not None else None,
        "parameter_count": params.parameter_count,
    }
    return params, history


def _train_loop(params, tensors, adam, blocks, labels, val_blocks, val_labels, config, epochs, best):
    for epoch in range(1, config.epochs + 1):
        for t in tensors:
            t.zero_grad()
        try:
            with Tape() as tape:
                loss, parts = composite_loss(params, blocks, labels, config)
            if not np.isfinite(loss.value) or loss.value > DIVERGENCE_LOSS_CEILING:
                raise NonFiniteError(f"loss blew up to {float(loss.value):g}")
            backward(tape, loss, params=tensors)
            adam_step(tensors, [t.grad for t in tensors], adam)
        except NonFiniteError as exc:
            raise DivergenceDetectedError(f"training diverged at epoch {epoch}: {exc}") from exc

        record = {"epoch": epoch, "loss": float(loss.value), **parts}
        if val_blocks is not None:
            val_prob = _probabilities(params, val_blocks, config)
            val_pred = (val_prob >= config.threshold).astype(np.int64)
            conf = evaluation.confusion(val_pred, val_labels, positive_class=1)
            record["val_recession_f1"] = evaluation.metrics(conf).f1
            if record["val_recession_f1"] > best["val_f1"]:
                best["epoch"] = epoch
                best["val_f1"] = record["val_recession_f1"]
                best["snapshot"] = params.snapshot()
        epochs.append(record)


def predict(params: ParameterSet, windows, config: TrainConfig) -> list:
    """One prediction per window, ordered by end month."""
    if not windows:
        return []
    ordered = sorted(windows, key=lambda wdw: wdw.end_month)
    blocks, _ = windows_tensor(ordered)
    prob = _probabilities(params, blocks, config)
    return [
        Prediction(month=w.end_month, probability=float(p), label=int(p >= config.threshold))
        for w, p in zip(ordered, prob)
    ]


def checkpoint_entries(params: ParameterSet) -> list:
    """(name, array) pairs for serialization via autodiff.save_checkpoint."""
    return [(name, t.value) for name, t in params.named_parameters()]


def load_into(params: ParameterSet, arrays: dict) -> None:
    """Restore parameter values from a checkpoint mapping, by name."""
    for name, t in params.named_parameters():
        if name not in arrays:
            raise KeyError(f"checkpoint missing parameter {name}")
        if arrays[name].shape != t.value.shape:
            raise ValueError(f"checkpoint shape mismatch for {name}")
        t.value = arrays[name].copy()


def config_with(config: TrainConfig, **overrides) -> TrainConfig:
    return replace(config, **overrides)
