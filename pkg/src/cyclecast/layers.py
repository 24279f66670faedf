"""Sequence-model building blocks on top of the autodiff tape.

All forward functions are batched: inputs are ``(N, ...)`` arrays or tensors
where N is the number of windows processed together, and per-step outputs are
returned as lists of ``(N, D)`` tensors (one per window row). A single
``(w, d)`` window is lifted to a batch of one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import (
    ShapeMismatchError,
    Tensor,
    as_tensor,
    concat,
    mul,
    relu,
    reshape,
    sigmoid,
    tanh,
    uniform_init,
)


@dataclass
class LstmCellParams:
    """One LSTM cell's weights, gates stacked in i/f/g/o order.

    ``w_x`` is (input_dim, 4H), ``w_h`` is (H, 4H), ``b`` is (4H,).
    """

    w_x: Tensor
    w_h: Tensor
    b: Tensor

    @property
    def hidden_size(self) -> int:
        return self.w_h.value.shape[0]

    @property
    def input_size(self) -> int:
        return self.w_x.value.shape[0]

    @classmethod
    def init(cls, rng: np.random.Generator, input_dim: int, hidden: int) -> "LstmCellParams":
        return cls(
            w_x=Tensor(uniform_init(rng, (input_dim, 4 * hidden), input_dim), requires_grad=True),
            w_h=Tensor(uniform_init(rng, (hidden, 4 * hidden), hidden), requires_grad=True),
            b=Tensor(uniform_init(rng, (4 * hidden,), hidden), requires_grad=True),
        )

    @classmethod
    def zeros(cls, input_dim: int, hidden: int) -> "LstmCellParams":
        return cls(
            w_x=Tensor(np.zeros((input_dim, 4 * hidden)), requires_grad=True),
            w_h=Tensor(np.zeros((hidden, 4 * hidden)), requires_grad=True),
            b=Tensor(np.zeros(4 * hidden), requires_grad=True),
        )


def lstm_step(params: LstmCellParams, x_t, h_prev, c_prev, relu_cell: bool = False):
    """Standard LSTM recurrence for one time step.

    Gates use sigmoid and the candidate uses tanh; with ``relu_cell`` the
    candidate and cell-output activations become ReLU (the literal reading of
    an LSTM layer configured with ReLU activation), while the gates keep their
    sigmoid semantics.
    """
    x_t, h_prev, c_prev = as_tensor(x_t), as_tensor(h_prev), as_tensor(c_prev)
    h = params.hidden_size
    if x_t.value.ndim != 2 or x_t.value.shape[1] != params.input_size:
        raise ShapeMismatchError(f"lstm_step input {x_t.shape}, expected (N, {params.input_size})")
    gates = x_t @ params.w_x + h_prev @ params.w_h + params.b
    i_gate = sigmoid(gates[:, 0 * h : 1 * h])
    f_gate = sigmoid(gates[:, 1 * h : 2 * h])
    candidate_raw = gates[:, 2 * h : 3 * h]
    candidate = relu(candidate_raw) if relu_cell else tanh(candidate_raw)
    o_gate = sigmoid(gates[:, 3 * h : 4 * h])
    c_t = f_gate * c_prev + i_gate * candidate
    h_t = o_gate * (relu(c_t) if relu_cell else tanh(c_t))
    return h_t, c_t


def _run_direction(params: LstmCellParams, xs, reverse: bool, relu_cell: bool):
    n = xs[0].value.shape[0]
    h = Tensor(np.zeros((n, params.hidden_size)))
    c = Tensor(np.zeros((n, params.hidden_size)))
    order = range(len(xs) - 1, -1, -1) if reverse else range(len(xs))
    outputs = [None] * len(xs)
    for t in order:
        h, c = lstm_step(params, xs[t], h, c, relu_cell=relu_cell)
        outputs[t] = h
    return outputs


@dataclass
class BiLstmStackParams:
    """Stacked (bi)directional LSTM layers plus a per-step output projection.

    ``cells`` holds one (forward, backward) pair per layer; ``backward`` is
    None for a unidirectional stack. ReLU links consecutive layers, and the
    final concatenated states pass through a linear time-distributed
    projection that preserves their dimension.
    """

    cells: list
    proj_w: Tensor
    proj_b: Tensor
    layer_sizes: tuple
    bidirectional: bool

    @property
    def output_dim(self) -> int:
        return self.proj_w.value.shape[1]

    @property
    def input_size(self) -> int:
        return self.cells[0][0].input_size

    @classmethod
    def init(
        cls,
        rng: np.random.Generator,
        input_dim: int,
        layer_sizes=(24, 12, 8),
        bidirectional: bool = True,
    ) -> "BiLstmStackParams":
        cells = []
        d = input_dim
        for hidden in layer_sizes:
            fwd = LstmCellParams.init(rng, d, hidden)
            bwd = LstmCellParams.init(rng, d, hidden) if bidirectional else None
            cells.append((fwd, bwd))
            d = 2 * hidden if bidirectional else hidden
        return cls(
            cells=cells,
            proj_w=Tensor(uniform_init(rng, (d, d), d), requires_grad=True),
            proj_b=Tensor(uniform_init(rng, (d,), d), requires_grad=True),
            layer_sizes=tuple(layer_sizes),
            bidirectional=bidirectional,
        )

    def named_tensors(self):
        for li, (fwd, bwd) in enumerate(self.cells):
            yield f"bilstm.l{li}.fwd.w_x", fwd.w_x
            yield f"bilstm.l{li}.fwd.w_h", fwd.w_h
            yield f"bilstm.l{li}.fwd.b", fwd.b
            if bwd is not None:
                yield f"bilstm.l{li}.bwd.w_x", bwd.w_x
                yield f"bilstm.l{li}.bwd.w_h", bwd.w_h
                yield f"bilstm.l{li}.bwd.b", bwd.b
        yield "bilstm.proj.w", self.proj_w
        yield "bilstm.proj.b", self.proj_b


def bilstm_forward(params: BiLstmStackParams, window, relu_cell: bool = False):
    """Run a window (or batch of windows) through the stacked (bi)LSTM.

    ``window`` is ``(w, d)`` or ``(N, w, d)``; the result is a list of ``w``
    tensors of shape ``(N, output_dim)``, one per month in the window.
    """
    arr = np.asarray(window, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[None, :, :]
    if arr.ndim != 3:
        raise ShapeMismatchError(f"window must be (w, d) or (N, w, d), got {arr.shape}")
    if arr.shape[2] != params.input_size:
        raise ShapeMismatchError(f"window feature dim {arr.shape[2]}, expected {params.input_size}")
    xs = [Tensor(np.ascontiguousarray(arr[:, t, :])) for t in range(arr.shape[1])]
    for li, (fwd, bwd) in enumerate(params.cells):
        fwd_out = _run_direction(fwd, xs, reverse=False, relu_cell=relu_cell)
        if bwd is not None:
            bwd_out = _run_direction(bwd, xs, reverse=True, relu_cell=relu_cell)
            layer_out = [concat([f, b], axis=1) for f, b in zip(fwd_out, bwd_out)]
        else:
            layer_out = fwd_out
        if li < len(params.cells) - 1:
            xs = [relu(h) for h in layer_out]
        else:
            xs = layer_out
    return [h @ params.proj_w + params.proj_b for h in xs]


@dataclass
class AutoencoderParams:
    """Linear encoder/decoder pair around a low-dimensional bottleneck."""

    enc_w: Tensor
    enc_b: Tensor
    dec_w: Tensor
    dec_b: Tensor

    @property
    def bottleneck(self) -> int:
        return self.enc_w.value.shape[1]

    @property
    def input_dim(self) -> int:
        return self.enc_w.value.shape[0]

    @classmethod
    def init(cls, rng: np.random.Generator, dim: int, bottleneck: int) -> "AutoencoderParams":
        return cls(
            enc_w=Tensor(uniform_init(rng, (dim, bottleneck), dim), requires_grad=True),
            enc_b=Tensor(uniform_init(rng, (bottleneck,), dim), requires_grad=True),
            dec_w=Tensor(uniform_init(rng, (bottleneck, dim), bottleneck), requires_grad=True),
            dec_b=Tensor(uniform_init(rng, (dim,), bottleneck), requires_grad=True),
        )

    def named_tensors(self):
        yield "autoencoder.enc.w", self.enc_w
        yield "autoencoder.enc.b", self.enc_b
        yield "autoencoder.dec.w", self.dec_w
        yield "autoencoder.dec.b", self.dec_b


def encode(params: AutoencoderParams, h) -> Tensor:
    return as_tensor(h) @ params.enc_w + params.enc_b


def autoencode(params: AutoencoderParams, h):
    """Bottleneck code and reconstruction for a batch of representations."""
    h = as_tensor(h)
    if h.value.ndim != 2 or h.value.shape[1] != params.input_dim:
        raise ShapeMismatchError(f"autoencode input {h.shape}, expected (N, {params.input_dim})")
    z = encode(params, h)
    recon = z @ params.dec_w + params.dec_b
    return z, recon


@dataclass
class AttentionParams:
    """Per-step sigmoid gate: a_t = sigmoid(step_t . v + b)."""

    v: Tensor
    b: Tensor

    @classmethod
    def init(cls, rng: np.random.Generator, dim: int) -> "AttentionParams":
        return cls(
            v=Tensor(uniform_init(rng, (dim,), dim), requires_grad=True),
            b=Tensor(uniform_init(rng, (), dim), requires_grad=True),
        )

    def named_tensors(self):
        yield "attention.v", self.v
        yield "attention.b", self.b


def attention_gates(params: AttentionParams, steps):
    """Sigmoid gate tensor (N,) for each step."""
    return [sigmoid(as_tensor(s) @ params.v + params.b) for s in steps]


def attention_pool(params: AttentionParams, steps, gate_one: bool = False) -> Tensor:
    """Gated sum over per-step representations.

    Each step contributes ``sigmoid(score(step)) * step``; with ``gate_one``
    the gate is pinned to 1 and the pooling degenerates to a plain sum.
    """
    steps = [as_tensor(s) for s in steps]
    if not steps:
        raise ValueError("attention_pool needs at least one step")
    pooled = None
    for s in steps:
        if gate_one:
            term = s
        else:
            gate = sigmoid(s @ params.v + params.b)
            term = mul(reshape(gate, (s.value.shape[0], 1)), s)
        pooled = term if pooled is None else pooled + term
    return pooled


def dense(x, w: Tensor, b: Tensor, activation: str | None = None) -> Tensor:
    """Affine layer with an optional activation, used by the MLP baselines."""
    out = as_tensor(x) @ w + b
    if activation == "relu":
        return relu(out)
    if activation == "tanh":
        return tanh(out)
    if activation == "sigmoid":
        return sigmoid(out)
    if activation is None:
        return out
    raise ValueError(f"unknown activation {activation!r}")
