"""Verify the hand-written gradients against central finite differences.

Walks up from single primitives to the full adapter -> frozen backbone ->
flow-matching loss path, printing the max relative error at each stage.
Everything runs in float64; finite differences are meaningless in float32.
"""

import numpy as np

from adaptts.adapter import AdapterConfig, AdapterParams, forward
from adaptts.backbone import BackboneConfig, FrozenTTSBackbone
from adaptts.nn import Tensor, conv1d_depthwise, gelu, grad_check, layer_norm, linear, mse, tsum
from adaptts.text import TextSequence

rng = np.random.default_rng(0)


def t64(shape, scale=1.0):
    return Tensor(rng.normal(size=shape) * scale)


# 1. A single depthwise convolution. Linear in every input, so the
#    finite-difference estimate is essentially exact.
x, kernel, bias = t64((5, 3)), t64((3, 3)), t64(3)
err = grad_check(lambda x_, k_, b_: tsum(conv1d_depthwise(x_, k_, b_)), [x, kernel, bias])
print(f"depthwise conv              max rel err {err:.2e}")

# 2. The full ConvNeXt-style block chain: conv -> norm -> gelu -> linear.
x = t64((4, 3))
gain, shift, w, b = t64(3), t64(3), t64((3, 2)), t64(2)
target = t64((4, 2))


def block_chain(x_, g_, s_, w_, b_):
    h = layer_norm(conv1d_depthwise(x_, kernel, bias), g_, s_)
    return mse(linear(gelu(h), w_, b_), target)


err = grad_check(block_chain, [x, gain, shift, w, b])
print(f"conv->norm->gelu->linear    max rel err {err:.2e}")

# 3. The path that training actually differentiates: every adapter
#    parameter, through the frozen backbone, to the flow-matching loss.
adapter = AdapterParams(
    AdapterConfig(vocab_size=6, embed_dim=8, hidden_dim=8, n_blocks=2, kernel_size=3, seed=1),
    dtype=np.float64,
)
for p in adapter.parameters():
    p.tensor.data[:] = rng.normal(size=p.tensor.shape) * 0.3
backbone = FrozenTTSBackbone(
    BackboneConfig(hidden_dim=8, mel_dim=4, time_dim=4, n_blocks=2, kernel_size=3, seed=2),
    dtype=np.float64,
)
seq = TextSequence((0, 3, 2, 5, 1))
mel = rng.normal(size=(5, 4))


def full_path(*_):
    return backbone.cfm_loss([mel], [forward(seq, adapter)], np.random.default_rng(7))


err = grad_check(full_path, [p.tensor for p in adapter.parameters()])
print(f"adapter->backbone->cfm loss max rel err {err:.2e} over {adapter.param_count()} parameters")

# 4. Sanity: a corrupted gradient must be caught, not absorbed.
x = t64(4)


def corrupted(x_):
    out = tsum(x_ * x_)
    inner = out._parents[0]
    orig = inner._backward
    inner._backward = lambda g: orig(2.0 * g)
    return out


err = grad_check(corrupted, x)
print(f"deliberately doubled grad   max rel err {err:.2f} (correctly flagged)")
