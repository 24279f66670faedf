"""Tape-based reverse-mode automatic differentiation over float64 arrays.

Operations execute eagerly on numpy values. While a :class:`Tape` is active
(as a context manager), every op appends a record in creation order, which is
already a valid topological order; :func:`backward` replays the records in
reverse to accumulate gradients. With no active tape, ops just compute values,
which is what inference uses.

All tensors are 64-bit; any op whose result contains a NaN or infinity raises
immediately rather than letting the value propagate.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit


class AutodiffError(Exception):
    pass


class ShapeMismatchError(AutodiffError):
    pass


class NotScalarError(AutodiffError):
    pass


class NonFiniteError(AutodiffError):
    pass


_ACTIVE = threading.local()


def _tape_stack():
    stack = getattr(_ACTIVE, "stack", None)
    if stack is None:
        stack = []
        _ACTIVE.stack = stack
    return stack


class Tape:
    """Ordered op records for one forward computation.

    Records are (output, inputs, backward_fn) triples appended in execution
    order; a tape is meant to live for a single loss evaluation.
    """

    def __init__(self):
        self.records = []

    def __enter__(self):
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        popped = _tape_stack().pop()
        assert popped is self
        return False

    def __len__(self):
        return len(self.records)


class Tensor:
    """A float64 array plus an optional gradient slot."""

    __slots__ = ("value", "requires_grad", "grad", "name")

    def __init__(self, value, requires_grad: bool = False, name: str = ""):
        self.value = np.asarray(value, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = None
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        tag = f" {self.name}" if self.name else ""
        return f"Tensor{tag}(shape={self.value.shape})"

    def zero_grad(self):
        self.grad = None

    # arithmetic sugar; constants are wrapped on the fly
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return take(self, idx)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _record(out_value: np.ndarray, inputs, backward_fn, op: str) -> Tensor:
    if not np.all(np.isfinite(out_value)):
        raise NonFiniteError(f"non-finite result from op {op}")
    out = Tensor(out_value)
    stack = _tape_stack()
    if stack:
        stack[-1].records.append((out, inputs, backward_fn))
    return out


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    """Reduce a broadcast gradient back to the operand's shape."""
    if grad.shape == tuple(shape):
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    try:
        out = a.value + b.value
    except ValueError as exc:
        raise ShapeMismatchError(f"add {a.shape} + {b.shape}") from exc

    def backward_fn(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _record(out, (a, b), backward_fn, "add")


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    try:
        out = a.value - b.value
    except ValueError as exc:
        raise ShapeMismatchError(f"sub {a.shape} - {b.shape}") from exc

    def backward_fn(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _record(out, (a, b), backward_fn, "sub")


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    try:
        out = a.value * b.value
    except ValueError as exc:
        raise ShapeMismatchError(f"mul {a.shape} * {b.shape}") from exc
    av, bv = a.value, b.value

    def backward_fn(g):
        return _unbroadcast(g * bv, a.shape), _unbroadcast(g * av, b.shape)

    return _record(out, (a, b), backward_fn, "mul")


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    av, bv = a.value, b.value
    if av.ndim == 0 or bv.ndim == 0 or av.ndim > 2 or bv.ndim > 2:
        raise ShapeMismatchError(f"matmul needs 1-D or 2-D operands, got {a.shape} @ {b.shape}")
    if av.shape[-1] != (bv.shape[0] if bv.ndim >= 1 else None):
        raise ShapeMismatchError(f"matmul {a.shape} @ {b.shape}")
    out = av @ bv

    def backward_fn(g):
        if av.ndim == 2 and bv.ndim == 2:
            return g @ bv.T, av.T @ g
        if av.ndim == 2 and bv.ndim == 1:
            return np.outer(g, bv), av.T @ g
        if av.ndim == 1 and bv.ndim == 2:
            return g @ bv.T, np.outer(av, g)
        return g * bv, g * av

    return _record(out, (a, b), backward_fn, "matmul")


def tanh(a) -> Tensor:
    a = as_tensor(a)
    out = np.tanh(a.value)

    def backward_fn(g):
        return ((1.0 - out * out) * g,)

    return _record(out, (a,), backward_fn, "tanh")


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    out = expit(a.value)

    def backward_fn(g):
        return (out * (1.0 - out) * g,)

    return _record(out, (a,), backward_fn, "sigmoid")


def relu(a) -> Tensor:
    a = as_tensor(a)
    out = np.maximum(a.value, 0.0)
    mask = a.value > 0

    def backward_fn(g):
        return (g * mask,)

    return _record(out, (a,), backward_fn, "relu")


def square(a) -> Tensor:
    a = as_tensor(a)
    av = a.value

    def backward_fn(g):
        return (2.0 * av * g,)

    return _record(av * av, (a,), backward_fn, "square")


def tsum(a, axis=None) -> Tensor:
    a = as_tensor(a)
    out = a.value.sum(axis=axis)
    in_shape = a.shape

    def backward_fn(g):
        if axis is None:
            return (np.broadcast_to(g, in_shape).copy(),)
        g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, in_shape).copy(),)

    return _record(out, (a,), backward_fn, "sum")


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    try:
        out = np.concatenate([t.value for t in tensors], axis=axis)
    except ValueError as exc:
        raise ShapeMismatchError(f"concat {[t.shape for t in tensors]}") from exc
    sizes = [t.value.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward_fn(g):
        slicer = [slice(None)] * g.ndim
        grads = []
        for i in range(len(sizes)):
            slicer[axis] = slice(offsets[i], offsets[i + 1])
            grads.append(g[tuple(slicer)])
        return tuple(grads)

    return _record(out, tuple(tensors), backward_fn, "concat")


def take(a, idx) -> Tensor:
    """Basic indexing/slicing; gradient scatters back into the source shape."""
    a = as_tensor(a)
    out = a.value[idx]
    in_shape = a.shape

    def backward_fn(g):
        full = np.zeros(in_shape)
        full[idx] = g
        return (full,)

    return _record(np.array(out, dtype=np.float64), (a,), backward_fn, "slice")


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    in_shape = a.shape
    try:
        out = a.value.reshape(shape)
    except ValueError as exc:
        raise ShapeMismatchError(f"reshape {a.shape} -> {shape}") from exc

    def backward_fn(g):
        return (g.reshape(in_shape),)

    return _record(out, (a,), backward_fn, "reshape")


def backward(tape: Tape, loss: Tensor, params=None) -> dict:
    """Accumulate d(loss)/d(leaf) for every reachable tensor on the tape.

    Returns a mapping from tensor to gradient array. Tensors with
    ``requires_grad`` get the result stored in ``.grad`` as well; parameters
    passed explicitly but unreached by the loss receive zero gradients.
    """
    if loss.value.ndim != 0:
        raise NotScalarError(f"loss must be scalar, got shape {loss.shape}")
    grads: dict[int, np.ndarray] = {id(loss): np.array(1.0)}
    by_id = {id(loss): loss}
    for out, inputs, backward_fn in reversed(tape.records):
        gout = grads.get(id(out))
        if gout is None:
            continue
        gins = backward_fn(gout)
        for inp, gin in zip(inputs, gins):
            if gin is None:
                continue
            key = id(inp)
            if key in grads:
                grads[key] = grads[key] + gin
            else:
                grads[key] = gin
                by_id[key] = inp
    result = {}
    for key, tensor in by_id.items():
        if tensor.requires_grad:
            tensor.grad = np.asarray(grads[key], dtype=np.float64)
            result[tensor] = tensor.grad
    if params is not None:
        for p in params:
            if p.grad is None or p not in result:
                p.grad = np.zeros_like(p.value)
                result[p] = p.grad
    return result


@dataclass
class AdamState:
    """Adam optimizer state, one moment pair per parameter slot."""

    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)


def adam_step(params, grads, state: AdamState) -> AdamState:
    """One in-place Adam update over aligned parameter/gradient lists."""
    if not state.m:
        state.m = [np.zeros_like(p.value) for p in params]
        state.v = [np.zeros_like(p.value) for p in params]
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeMismatchError("params, grads and Adam state are misaligned")
    state.t += 1
    bc1 = 1.0 - state.beta1**state.t
    bc2 = 1.0 - state.beta2**state.t
    for i, (p, g) in enumerate(zip(params, grads)):
        g = np.asarray(g, dtype=np.float64)
        if g.shape != p.value.shape:
            raise ShapeMismatchError(f"grad shape {g.shape} vs param {p.value.shape}")
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g
        m_hat = state.m[i] / bc1
        v_hat = state.v[i] / bc2
        p.value = p.value - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return state


@dataclass(frozen=True)
class GradCheckReport:
    max_rel_error: float
    passed: bool
    n_entries: int


def grad_check(f, params, h: float = 1e-5, tol: float = 1e-4, abs_floor: float = 1e-7) -> GradCheckReport:
    """Compare analytic gradients of ``f(params)`` against central differences.

    ``f`` must accept the parameter list and return a scalar Tensor. Entries
    pass when ``|analytic - numeric| <= max(abs_floor, tol * max(|a|, |n|))``.
    """
    for p in params:
        p.zero_grad()
    with Tape() as tape:
        loss = f(params)
    backward(tape, loss, params=params)
    analytic = [p.grad.copy() for p in params]

    max_rel = 0.0
    passed = True
    n_entries = 0
    for p, ana in zip(params, analytic):
        for ix in np.ndindex(p.value.shape):
            orig = p.value[ix]
            p.value[ix] = orig + h
            up = float(f(params).value)
            p.value[ix] = orig - h
            down = float(f(params).value)
            p.value[ix] = orig
            num = (up - down) / (2.0 * h)
            a = ana[ix]
            scale = max(abs(a), abs(num))
            err = abs(a - num)
            if err > max(abs_floor, tol * scale):
                passed = False
            if scale > abs_floor:
                max_rel = max(max_rel, err / scale)
            n_entries += 1
    return GradCheckReport(max_rel_error=max_rel, passed=passed, n_entries=n_entries)


def make_rng(seed: int) -> np.random.Generator:
    """Deterministic generator; every random draw in the library threads one."""
    return np.random.default_rng(seed)


def uniform_init(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    """Uniform(-s, s) with s = 1/sqrt(fan_in)."""
    s = 1.0 / np.sqrt(max(fan_in, 1))
    return rng.uniform(-s, s, size=shape)


CHECKPOINT_FORMAT = "cyclecast-params-v1"


def save_checkpoint(named_arrays, path: str, meta: dict | None = None) -> None:
    """Serialize (name, shape, values) triples as JSON.

    Floats are emitted with ``repr`` semantics, which round-trip float64
    bit-exactly.
    """
    payload = {
        "format": CHECKPOINT_FORMAT,
        "meta": meta or {},
        "params": [
            {
                "name": name,
                "shape": list(np.asarray(arr).shape),
                "values": [float(x) for x in np.asarray(arr, dtype=np.float64).reshape(-1)],
            }
            for name, arr in named_arrays
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)


def load_checkpoint(path: str) -> dict:
    """Read a checkpoint back as an ordered name -> ndarray mapping."""
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"unrecognized checkpoint format in {path}")
    out = {}
    for entry in payload["params"]:
        out[entry["name"]] = np.array(entry["values"], dtype=np.float64).reshape(entry["shape"])
    return out
