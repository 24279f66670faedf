#!/usr/bin/env python3
"""Tour of the autodiff tape and the sequence-model building blocks.

Run from the repository root:  python3 demos/02_autodiff_and_layers.py
"""

import numpy as np

from cyclecast import autodiff as ad
from cyclecast import layers

print("=== 1. Tensors, tape, backward ===")
x = ad.Tensor([1.0, -2.0, 3.0], requires_grad=True)
with ad.Tape() as tape:
    loss = ad.tsum(ad.square(x))
print(f"loss = sum(x^2) = {loss.value}")
ad.backward(tape, loss)
print(f"d loss / d x = {x.grad}  (analytically 2x)")

print("\n=== 2. Gradient checking against central differences ===")
rng = ad.make_rng(0)
cell = layers.LstmCellParams.init(rng, input_dim=3, hidden=2)
x_t = rng.normal(size=(4, 3))


def lstm_loss(_):
    h, c = layers.lstm_step(cell, x_t, np.zeros((4, 2)), np.zeros((4, 2)))
    return ad.tsum(ad.square(h)) + ad.tsum(ad.square(c))


report = ad.grad_check(lstm_loss, [cell.w_x, cell.w_h, cell.b], h=1e-5, tol=1e-4)
print(f"LSTM step: {report.n_entries} parameter entries, max relative error {report.max_rel_error:.2e}"
      f" -> {'PASS' if report.passed else 'FAIL'}")

print("\n=== 3. A bidirectional stack over a 6-month window ===")
stack = layers.BiLstmStackParams.init(rng, input_dim=42, layer_sizes=(24, 12, 8), bidirectional=True)
window = rng.normal(size=(6, 42))
steps = layers.bilstm_forward(stack, window)
print(f"per-step representations: {len(steps)} steps of shape {steps[0].value.shape} (8 hidden x 2 directions)")

print("\n=== 4. Autoencoder bottleneck and attention gates ===")
ae = layers.AutoencoderParams.init(rng, dim=16, bottleneck=4)
encoded = [layers.encode(ae, s) for s in steps]
att = layers.AttentionParams.init(rng, dim=4)
gates = layers.attention_gates(att, encoded)
print("attention gate per month:", np.round([float(g.value[0]) for g in gates], 3))
pooled = layers.attention_pool(att, encoded)
print(f"pooled representation: {np.round(pooled.value[0], 3)}")

print("\n=== 5. Checkpoints round-trip bit-exactly ===")
ad.save_checkpoint([("cell.w_x", cell.w_x.value)], "/tmp/demo_ckpt.json", meta={"demo": True})
loaded = ad.load_checkpoint("/tmp/demo_ckpt.json")
print(f"round trip exact: {np.array_equal(loaded['cell.w_x'], cell.w_x.value)}")
