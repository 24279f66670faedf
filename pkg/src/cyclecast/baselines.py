"""The seven comparison models trained on the same windowed features.

SVM, logistic regression, and probit consume the flattened ``w*F`` vector and
are fully deterministic (no seed dependence, so their metrics repeat exactly
across runs). The neural baselines (LSTM, Bi-LSTM, autoencoder, DNN) reuse
the layers/autodiff stack with seeded initialization and full-batch Adam.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import erf
from threadpoolctl import threadpool_limits

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
    tsum,
    uniform_init,
)
from .bilstm_aa import DIVERGENCE_LOSS_CEILING, DivergenceDetectedError, Prediction, TrainConfig
from .features import windows_tensor
from .layers import BiLstmStackParams, bilstm_forward, dense
from . import evaluation


class BaselineError(Exception):
    pass


class SingularSystemError(BaselineError):
    pass


class BaselineKind(str, Enum):
    svm = "svm"
    logistic = "logistic"
    probit = "probit"
    lstm = "lstm"
    bilstm = "bilstm"
    autoencoder = "autoencoder"
    dnn = "dnn"


FLAT_KINDS = (BaselineKind.svm, BaselineKind.logistic, BaselineKind.probit, BaselineKind.dnn)
DETERMINISTIC_KINDS = (BaselineKind.svm, BaselineKind.logistic, BaselineKind.probit)

SVM_C_GRID = (0.01, 0.1, 1.0, 10.0)


@dataclass
class BaselineModel:
    kind: BaselineKind
    arrays: dict
    config: TrainConfig
    info: dict

    def named_entries(self) -> list:
        return [(name, value) for name, value in self.arrays.items()]


def normal_cdf(x):
    """Standard normal CDF, 0.5 * (1 + erf(x / sqrt(2)))."""
    return 0.5 * (1.0 + erf(np.asarray(x, dtype=np.float64) / np.sqrt(2.0)))


def normal_pdf(x):
    x = np.asarray(x, dtype=np.float64)
    return np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)


def _flatten(windows) -> tuple:
    blocks, labels = windows_tensor(windows)
    return blocks.reshape(len(blocks), -1), labels


def _by_split(windows) -> tuple:
    train = [w for w in windows if w.split == "train"]
    val = [w for w in windows if w.split == "validate"]
    return train, val


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def fit_logistic(x: np.ndarray, y: np.ndarray, ridge: float = 1e-6, max_iter: int = 100, tol: float = 1e-8):
    """Ridge-stabilized logistic MLE by Newton-Raphson with step halving.

    Deterministic: zero initialization and no data-order dependence. Returns
    (weights, intercept).
    """
    xb = np.column_stack([x, np.ones(len(x))])
    w = np.zeros(xb.shape[1])

    def nll(wv):
        z = xb @ wv
        return float(np.sum(np.logaddexp(0.0, z) - y * z) + 0.5 * ridge * wv @ wv)

    current = nll(w)
    for _ in range(max_iter):
        z = xb @ w
        p = _sigmoid(z)
        grad = xb.T @ (p - y) + ridge * w
        if np.linalg.norm(grad) < tol:
            break
        weights = p * (1.0 - p)
        hess = (xb * weights[:, None]).T @ xb + ridge * np.eye(len(w))
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError("logistic Newton system is singular") from exc
        scale = 1.0
        for _ in range(30):
            candidate = w - scale * step
            value = nll(candidate)
            if value <= current:
                w, current = candidate, value
                break
            scale *= 0.5
        else:
            break
    return w[:-1], float(w[-1])


def fit_probit(x: np.ndarray, y: np.ndarray, ridge: float = 1e-6, max_iter: int = 100, tol: float = 1e-8):
    """Probit MLE by Fisher-scoring Newton iterations with step halving."""
    xb = np.column_stack([x, np.ones(len(x))])
    w = np.zeros(xb.shape[1])
    eps = 1e-12

    def nll(wv):
        cdf = np.clip(normal_cdf(xb @ wv), eps, 1.0 - eps)
        return float(-np.sum(y * np.log(cdf) + (1.0 - y) * np.log(1.0 - cdf)) + 0.5 * ridge * wv @ wv)

    current = nll(w)
    for _ in range(max_iter):
        z = xb @ w
        cdf = np.clip(normal_cdf(z), eps, 1.0 - eps)
        pdf = normal_pdf(z)
        grad = xb.T @ (pdf * ((1.0 - y) / (1.0 - cdf) - y / cdf)) + ridge * w
        if np.linalg.norm(grad) < tol:
            break
        info = pdf * pdf / (cdf * (1.0 - cdf))
        hess = (xb * info[:, None]).T @ xb + ridge * np.eye(len(w))
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError("probit Newton system is singular") from exc
        scale = 1.0
        for _ in range(30):
            candidate = w - scale * step
            value = nll(candidate)
            if value <= current:
                w, current = candidate, value
                break
            scale *= 0.5
        else:
            break
    return w[:-1], float(w[-1])


def fit_linear_svm(x: np.ndarray, y01: np.ndarray, c: float, steps: int = 2000):
    """Soft-margin linear SVM by deterministic full-batch subgradient descent.

    Minimizes 0.5*lam*||w||^2 + mean(hinge) with lam = 1/(c*n), zero init,
    and the 1/(lam*t) step schedule; no randomness anywhere.
    """
    n, d = x.shape
    y = 2.0 * y01 - 1.0
    lam = 1.0 / (c * n)
    w = np.zeros(d)
    b = 0.0
    for t in range(1, steps + 1):
        margin = y * (x @ w + b)
        viol = margin < 1.0
        grad_w = lam * w - (x[viol] * y[viol, None]).sum(axis=0) / n
        grad_b = -y[viol].sum() / n
        eta = 1.0 / (lam * t)
        w = w - eta * grad_w
        b = b - eta * grad_b
    return w, float(b)


def _val_f1(prob: np.ndarray, labels: np.ndarray, threshold: float = 0.5) -> float:
    pred = (prob >= threshold).astype(np.int64)
    return evaluation.metrics(evaluation.confusion(pred, labels, positive_class=1)).f1


def _train_flat_deterministic(kind: BaselineKind, windows, config: TrainConfig) -> BaselineModel:
    train, val = _by_split(windows)
    x, y = _flatten(train)
    if kind == BaselineKind.logistic:
        w, b = fit_logistic(x, y.astype(np.float64))
        return BaselineModel(kind, {"w": w, "b": np.array(b)}, config, {})
    if kind == BaselineKind.probit:
        w, b = fit_probit(x, y.astype(np.float64))
        return BaselineModel(kind, {"w": w, "b": np.array(b)}, config, {})
    # svm: pick C on the validation split, first grid point on ties
    best = None
    for c in SVM_C_GRID:
        w, b = fit_linear_svm(x, y.astype(np.float64), c)
        if val:
            xv, yv = _flatten(val)
            f1 = _val_f1(_sigmoid(xv @ w + b), yv)
        else:
            f1 = 0.0
        if best is None or f1 > best[0]:
            best = (f1, c, w, b)
    _, c, w, b = best
    return BaselineModel(kind, {"w": w, "b": np.array(b)}, config, {"c": c})


def _dnn_params(rng, input_dim: int) -> dict:
    return {
        "w1": Tensor(uniform_init(rng, (input_dim, 12), input_dim), requires_grad=True),
        "b1": Tensor(uniform_init(rng, (12,), input_dim), requires_grad=True),
        "w2": Tensor(uniform_init(rng, (12, 8), 12), requires_grad=True),
        "b2": Tensor(uniform_init(rng, (8,), 12), requires_grad=True),
        "w3": Tensor(uniform_init(rng, (8,), 8), requires_grad=True),
        "b3": Tensor(uniform_init(rng, (), 8), requires_grad=True),
    }


def _dnn_forward(p: dict, x: np.ndarray) -> Tensor:
    h1 = dense(x, p["w1"], p["b1"], activation="relu")
    h2 = dense(h1, p["w2"], p["b2"], activation="relu")
    return sigmoid(h2 @ p["w3"] + p["b3"])


def _recurrent_params(rng, input_dim: int, bidirectional: bool) -> tuple:
    stack = BiLstmStackParams.init(rng, input_dim, (24, 12, 8), bidirectional=bidirectional)
    head_dim = stack.output_dim
    head_w = Tensor(uniform_init(rng, (head_dim,), head_dim), requires_grad=True)
    head_b = Tensor(uniform_init(rng, (), head_dim), requires_grad=True)
    return stack, head_w, head_b


def _recurrent_forward(stack, head_w, head_b, blocks: np.ndarray) -> Tensor:
    steps = bilstm_forward(stack, blocks)
    return sigmoid(steps[-1] @ head_w + head_b)


def _gradient_train(tensors, loss_fn, config: TrainConfig, val_prob_fn=None, val_labels=None):
    """Shared Adam loop with optional best-validation-F1 snapshotting."""
    with threadpool_limits(limits=1):
        return _gradient_train_loop(tensors, loss_fn, config, val_prob_fn, val_labels)


def _gradient_train_loop(tensors, loss_fn, config, val_prob_fn, val_labels):
    adam = AdamState(lr=config.learning_rate)
    best = None
    losses = []
    for epoch in range(1, config.epochs + 1):
        for t in tensors:
            t.zero_grad()
        try:
            with Tape() as tape:
                loss = loss_fn()
            if not np.isfinite(loss.value) or loss.value > DIVERGENCE_LOSS_CEILING:
                raise NonFiniteError(f"loss blew up to {float(loss.value):g}")
            backward(tape, loss, params=tensors)
            adam_step(tensors, [t.grad for t in tensors], adam)
        except NonFiniteError as exc:
            raise DivergenceDetectedError(f"baseline diverged at epoch {epoch}: {exc}") from exc
        losses.append(float(loss.value))
        if val_prob_fn is not None:
            f1 = _val_f1(val_prob_fn(), val_labels)
            if best is None or f1 > best[0]:
                best = (f1, epoch, [t.value.copy() for t in tensors])
    if best is not None:
        for t, value in zip(tensors, best[2]):
            t.value = value.copy()
        return {"chosen_epoch": best[1], "best_val_recession_f1": best[0], "losses": losses}
    return {"chosen_epoch": config.epochs, "losses": losses}


def train_baseline(kind: BaselineKind, windows, config: TrainConfig) -> BaselineModel:
    """Train one comparison model on the train split of ``windows``.

    ``windows`` carries split tags; the validation split tunes SVM's C and
    selects the best epoch for the gradient-trained kinds, mirroring the main
    model's selection rule.
    """
    kind = BaselineKind(kind)
    if kind in DETERMINISTIC_KINDS:
        return _train_flat_deterministic(kind, windows, config)

    train, val = _by_split(windows)
    rng = make_rng(config.seed)
    val_blocks = val_labels = None
    if val:
        val_blocks, val_labels = windows_tensor(sorted(val, key=lambda w: w.end_month))

    if kind == BaselineKind.dnn:
        x, y = _flatten(sorted(train, key=lambda w: w.end_month))
        params = _dnn_params(rng, x.shape[1])
        tensors = list(params.values())
        target = Tensor(y.astype(np.float64))
        xv = val_blocks.reshape(len(val_blocks), -1) if val_blocks is not None else None

        def loss_fn():
            return tsum(square(_dnn_forward(params, x) - target))

        info = _gradient_train(
            tensors,
            loss_fn,
            config,
            val_prob_fn=(lambda: _dnn_forward(params, xv).value) if xv is not None else None,
            val_labels=val_labels,
        )
        arrays = {name: t.value for name, t in params.items()}
        return BaselineModel(kind, arrays, config, info)

    if kind in (BaselineKind.lstm, BaselineKind.bilstm):
        blocks, y = windows_tensor(sorted(train, key=lambda w: w.end_month))
        stack, head_w, head_b = _recurrent_params(rng, blocks.shape[2], kind == BaselineKind.bilstm)
        tensors = [t for _, t in stack.named_tensors()] + [head_w, head_b]
        target = Tensor(y.astype(np.float64))

        def loss_fn():
            return tsum(square(_recurrent_forward(stack, head_w, head_b, blocks) - target))

        info = _gradient_train(
            tensors,
            loss_fn,
            config,
            val_prob_fn=(
                (lambda: _recurrent_forward(stack, head_w, head_b, val_blocks).value)
                if val_blocks is not None
                else None
            ),
            val_labels=val_labels,
        )
        arrays = dict(stack.named_tensors())
        arrays = {name: t.value for name, t in arrays.items()}
        arrays["head.w"] = head_w.value
        arrays["head.b"] = head_b.value
        info = dict(info, bidirectional=kind == BaselineKind.bilstm)
        return BaselineModel(kind, arrays, config, info)

    if kind == BaselineKind.autoencoder:
        return _train_autoencoder_baseline(windows, config, rng)

    raise ValueError(f"unhandled baseline kind {kind}")


AE_BOTTLENECK = 16


def _train_autoencoder_baseline(windows, config: TrainConfig, rng) -> BaselineModel:
    """Unsupervised linear autoencoder on flattened windows, then a logistic
    head on the bottleneck codes."""
    train, _ = _by_split(windows)
    x, y = _flatten(sorted(train, key=lambda w: w.end_month))
    d = x.shape[1]
    params = {
        "enc.w": Tensor(uniform_init(rng, (d, AE_BOTTLENECK), d), requires_grad=True),
        "enc.b": Tensor(uniform_init(rng, (AE_BOTTLENECK,), d), requires_grad=True),
        "dec.w": Tensor(uniform_init(rng, (AE_BOTTLENECK, d), AE_BOTTLENECK), requires_grad=True),
        "dec.b": Tensor(uniform_init(rng, (d,), AE_BOTTLENECK), requires_grad=True),
    }
    tensors = list(params.values())

    def loss_fn():
        code = Tensor(x) @ params["enc.w"] + params["enc.b"]
        recon = code @ params["dec.w"] + params["dec.b"]
        return tsum(square(recon - Tensor(x)))

    info = _gradient_train(tensors, loss_fn, config)
    codes = x @ params["enc.w"].value + params["enc.b"].value
    head_w, head_b = fit_logistic(codes, y.astype(np.float64))
    arrays = {name: t.value for name, t in params.items()}
    arrays["head.w"] = head_w
    arrays["head.b"] = np.array(head_b)
    return BaselineModel(
        BaselineKind.autoencoder, arrays, config, {"reconstruction_history": info["losses"]}
    )


def ae_reconstruction_loss(model: BaselineModel, windows) -> float:
    """Mean squared reconstruction error of the AE baseline on ``windows``."""
    x, _ = _flatten(windows)
    codes = x @ model.arrays["enc.w"] + model.arrays["enc.b"]
    recon = codes @ model.arrays["dec.w"] + model.arrays["dec.b"]
    return float(np.mean((recon - x) ** 2))


def predict_baseline(model: BaselineModel, windows) -> list:
    """Probability and thresholded label per window, ordered by end month."""
    if not windows:
        return []
    ordered = sorted(windows, key=lambda w: w.end_month)
    kind = model.kind
    if kind in (BaselineKind.svm, BaselineKind.logistic, BaselineKind.probit):
        x, _ = _flatten(ordered)
        margin = x @ model.arrays["w"] + float(model.arrays["b"])
        if kind == BaselineKind.probit:
            prob = normal_cdf(margin)
        else:
            prob = _sigmoid(margin)
    elif kind == BaselineKind.dnn:
        x, _ = _flatten(ordered)
        params = {name: Tensor(value) for name, value in model.arrays.items()}
        prob = _dnn_forward(params, x).value
    elif kind == BaselineKind.autoencoder:
        x, _ = _flatten(ordered)
        codes = x @ model.arrays["enc.w"] + model.arrays["enc.b"]
        prob = _sigmoid(codes @ model.arrays["head.w"] + float(model.arrays["head.b"]))
    elif kind in (BaselineKind.lstm, BaselineKind.bilstm):
        blocks, _ = windows_tensor(ordered)
        stack = _stack_from_arrays(model.arrays, blocks.shape[2], model.info.get("bidirectional", False))
        prob = _recurrent_forward(
            stack, Tensor(model.arrays["head.w"]), Tensor(model.arrays["head.b"]), blocks
        ).value
    else:
        raise ValueError(f"unhandled baseline kind {kind}")
    return [
        Prediction(month=w.end_month, probability=float(p), label=int(p >= model.config.threshold))
        for w, p in zip(ordered, prob)
    ]


def _stack_from_arrays(arrays: dict, input_dim: int, bidirectional: bool) -> BiLstmStackParams:
    from .layers import LstmCellParams

    cells = []
    li = 0
    while f"bilstm.l{li}.fwd.w_x" in arrays:
        fwd = LstmCellParams(
            w_x=Tensor(arrays[f"bilstm.l{li}.fwd.w_x"]),
            w_h=Tensor(arrays[f"bilstm.l{li}.fwd.w_h"]),
            b=Tensor(arrays[f"bilstm.l{li}.fwd.b"]),
        )
        bwd = None
        if f"bilstm.l{li}.bwd.w_x" in arrays:
            bwd = LstmCellParams(
                w_x=Tensor(arrays[f"bilstm.l{li}.bwd.w_x"]),
                w_h=Tensor(arrays[f"bilstm.l{li}.bwd.w_h"]),
                b=Tensor(arrays[f"bilstm.l{li}.bwd.b"]),
            )
        cells.append((fwd, bwd))
        li += 1
    layer_sizes = tuple(cell[0].hidden_size for cell in cells)
    return BiLstmStackParams(
        cells=cells,
        proj_w=Tensor(arrays["bilstm.proj.w"]),
        proj_b=Tensor(arrays["bilstm.proj.b"]),
        layer_sizes=layer_sizes,
        bidirectional=bidirectional,
    )
