"""Two-channel 1D convolutional network on plain numpy, with manual backprop.

Architecture: each input channel runs through its own stack of valid (no
padding) strided 1D convolutions followed by one dense layer; the two dense
outputs are concatenated and a linear head produces six logits for softmax
classification. Both stacks share hyperparameters but own independent
weights. Convolutions are evaluated as im2col matrix products so training
stays fast without any framework dependency; all reductions use fixed
summation order, so results are reproducible on a given machine.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PROB_FLOOR = 1e-12


def _activate(pre: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(pre, 0.0)
    if kind == "identity":
        return pre
    raise ValueError(f"unknown activation {kind!r}")


def _activate_grad(pre: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return (pre > 0.0).astype(pre.dtype)
    if kind == "identity":
        return np.ones_like(pre)
    raise ValueError(f"unknown activation {kind!r}")


def conv_output_length(m: int, kernel: int, stride: int) -> int:
    """Number of valid positions for a width-`kernel` window stepped by `stride`."""
    if kernel > m:
        raise ValueError(f"kernel width {kernel} exceeds input length {m}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    return (m - kernel) // stride + 1


@dataclass
class Conv1dLayer:
    """weights[f, k, c]: filter f, kernel tap k, input stream c."""

    weights: np.ndarray
    bias: np.ndarray
    stride: int = 1
    activation: str = "relu"

    @property
    def num_filters(self) -> int:
        return self.weights.shape[0]

    @property
    def kernel(self) -> int:
        return self.weights.shape[1]

    @property
    def in_channels(self) -> int:
        return self.weights.shape[2]


@dataclass
class DenseLayer:
    """weights[out, in] and bias[out]."""

    weights: np.ndarray
    bias: np.ndarray
    activation: str = "relu"


def _conv_pre(x: np.ndarray, layer: Conv1dLayer):
    """Pre-activation of a conv layer. x: [batch, streams, length]."""
    if x.ndim != 3:
        raise ValueError(f"conv input must be [batch, streams, length], got shape {x.shape}")
    n_batch, n_streams, m = x.shape
    n_filt, kernel, in_ch = layer.weights.shape
    if n_streams != in_ch:
        raise ValueError(f"conv expects {in_ch} input streams, got {n_streams}")
    out_len = conv_output_length(m, kernel, layer.stride)
    idx = np.arange(out_len)[:, None] * layer.stride + np.arange(kernel)[None, :]
    xw = x[:, :, idx]  # [batch, streams, out_len, kernel]
    xcol = xw.transpose(0, 2, 3, 1).reshape(n_batch * out_len, kernel * in_ch)
    wmat = layer.weights.transpose(1, 2, 0).reshape(kernel * in_ch, n_filt)
    pre = (xcol @ wmat).reshape(n_batch, out_len, n_filt).transpose(0, 2, 1)
    pre = pre + layer.bias[None, :, None]
    return pre, xcol, wmat


def conv1d_forward(layer: Conv1dLayer, x: np.ndarray) -> np.ndarray:
    """Valid strided convolution: out[b,f,s] = act(sum_{k,c} w[f,k,c] x[b,c,s*z+k] + bias[f]).

    Output length is (len - kernel)//stride + 1.
    """
    pre, _, _ = _conv_pre(x, layer)
    return _activate(pre, layer.activation)


def multistream_forward(layers: list[Conv1dLayer], x: np.ndarray) -> np.ndarray:
    """Chain conv layers; layer k consumes the feature maps of layer k-1."""
    out = x
    for layer in layers:
        out = conv1d_forward(layer, out)
    return out


def dense_forward(layer: DenseLayer, x: np.ndarray) -> np.ndarray:
    """out[b,d] = act(sum_i w[d,i] x[b,i] + bias[d]). Accepts [in] or [batch, in]."""
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    if x.shape[1] != layer.weights.shape[1]:
        raise ValueError(
            f"dense expects input dim {layer.weights.shape[1]}, got {x.shape[1]}"
        )
    out = _activate(x @ layer.weights.T + layer.bias, layer.activation)
    return out[0] if squeeze else out


def softmax(logits: np.ndarray) -> np.ndarray:
    """Max-shifted softmax along the last axis; rows sum to one."""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log-probability of the true classes, floored at 1e-12."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim == 1:
        probs = probs[None, :]
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    if len(labels) != probs.shape[0]:
        raise ValueError(f"{probs.shape[0]} probability rows but {len(labels)} labels")
    picked = probs[np.arange(len(labels)), labels]
    return float(-np.log(np.maximum(picked, PROB_FLOOR)).mean())


@dataclass
class ConvSpec:
    filters: int
    kernel: int
    stride: int = 1


@dataclass
class NetworkSpec:
    """Hyperparameters; both channel stacks are built identically from it."""

    input_bins: int
    conv_layers: list[ConvSpec] = field(
        default_factory=lambda: [ConvSpec(32, 5, 1), ConvSpec(64, 5, 2)]
    )
    dense_units: int = 64
    n_classes: int = 6
    activation: str = "relu"

    def flat_dim(self) -> int:
        """Flattened size of the last conv output feeding the dense layer."""
        length = self.input_bins
        streams = 1
        for cs in self.conv_layers:
            length = conv_output_length(length, cs.kernel, cs.stride)
            streams = cs.filters
        return streams * length


@dataclass
class NetworkState:
    spec: NetworkSpec
    conv_stacks: tuple[list[Conv1dLayer], list[Conv1dLayer]]
    dense_layers: tuple[DenseLayer, DenseLayer]
    head: DenseLayer

    def parameters(self) -> list[tuple[str, np.ndarray]]:
        """All trainable arrays with stable names, in a fixed order."""
        params = []
        for ch in (0, 1):
            for i, conv in enumerate(self.conv_stacks[ch]):
                params.append((f"ch{ch + 1}.conv{i}.weights", conv.weights))
                params.append((f"ch{ch + 1}.conv{i}.bias", conv.bias))
            params.append((f"ch{ch + 1}.dense.weights", self.dense_layers[ch].weights))
            params.append((f"ch{ch + 1}.dense.bias", self.dense_layers[ch].bias))
        params.append(("head.weights", self.head.weights))
        params.append(("head.bias", self.head.bias))
        return params


def init_network(spec: NetworkSpec, rng: np.random.Generator) -> NetworkState:
    """Uniform fan-in-scaled init (+-1/sqrt(fan_in)) in a fixed draw order."""
    spec.flat_dim()  # validates that the conv chain fits the input length

    def uniform(shape, fan_in):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    def build_stack():
        convs = []
        in_ch = 1
        for cs in spec.conv_layers:
            fan_in = cs.kernel * in_ch
            convs.append(
                Conv1dLayer(
                    weights=uniform((cs.filters, cs.kernel, in_ch), fan_in),
                    bias=uniform((cs.filters,), fan_in),
                    stride=cs.stride,
                    activation=spec.activation,
                )
            )
            in_ch = cs.filters
        flat = spec.flat_dim()
        dense = DenseLayer(
            weights=uniform((spec.dense_units, flat), flat),
            bias=uniform((spec.dense_units,), flat),
            activation=spec.activation,
        )
        return convs, dense

    convs1, dense1 = build_stack()
    convs2, dense2 = build_stack()
    head_in = 2 * spec.dense_units
    head = DenseLayer(
        weights=uniform((spec.n_classes, head_in), head_in),
        bias=uniform((spec.n_classes,), head_in),
        activation="identity",
    )
    return NetworkState(
        spec=spec, conv_stacks=(convs1, convs2), dense_layers=(dense1, dense2), head=head
    )


def _stack_forward(convs: list[Conv1dLayer], dense: DenseLayer, x: np.ndarray):
    """One channel: conv chain -> flatten -> dense. x: [batch, input_bins]."""
    act = x[:, None, :]
    conv_caches = []
    for layer in convs:
        pre, xcol, wmat = _conv_pre(act, layer)
        out = _activate(pre, layer.activation)
        conv_caches.append((act.shape, xcol, wmat, pre))
        act = out
    flat = act.reshape(act.shape[0], -1)
    pre_d = flat @ dense.weights.T + dense.bias
    hidden = _activate(pre_d, dense.activation)
    return hidden, (conv_caches, act.shape, flat, pre_d)


def forward(state: NetworkState, x1: np.ndarray, x2: np.ndarray):
    """Full forward pass. Returns (probs [batch, n_classes], cache)."""
    if x1.shape != x2.shape:
        raise ValueError(f"channel batches disagree: {x1.shape} vs {x2.shape}")
    h1, cache1 = _stack_forward(state.conv_stacks[0], state.dense_layers[0], x1)
    h2, cache2 = _stack_forward(state.conv_stacks[1], state.dense_layers[1], x2)
    fused = np.concatenate([h1, h2], axis=1)
    logits = fused @ state.head.weights.T + state.head.bias
    probs = softmax(logits)
    return probs, (cache1, cache2, fused, probs)


def _conv_backward(layer: Conv1dLayer, cache, d_pre: np.ndarray, need_dx: bool):
    in_shape, xcol, wmat, _ = cache
    n_batch, in_ch, m = in_shape
    n_filt, kernel, _ = layer.weights.shape
    out_len = d_pre.shape[2]
    dpre_flat = d_pre.transpose(0, 2, 1).reshape(n_batch * out_len, n_filt)
    dw = (xcol.T @ dpre_flat).reshape(kernel, in_ch, n_filt).transpose(2, 0, 1)
    db = d_pre.sum(axis=(0, 2))
    dx = None
    if need_dx:
        dxcol = dpre_flat @ wmat.T
        dxw = dxcol.reshape(n_batch, out_len, kernel, in_ch).transpose(0, 3, 1, 2)
        dx = np.zeros(in_shape)
        z = layer.stride
        for k in range(kernel):
            # windows at offset k are z apart, so the slice never overlaps itself
            dx[:, :, k : k + z * out_len : z] += dxw[:, :, :, k]
    return dw, db, dx


def _stack_backward(convs, dense, cache, d_hidden, grads, prefix):
    conv_caches, act_shape, flat, pre_d = cache
    d_pre_d = d_hidden * _activate_grad(pre_d, dense.activation)
    grads[f"{prefix}.dense.weights"] = d_pre_d.T @ flat
    grads[f"{prefix}.dense.bias"] = d_pre_d.sum(axis=0)
    d_act = (d_pre_d @ dense.weights).reshape(act_shape)
    for i in range(len(convs) - 1, -1, -1):
        layer = convs[i]
        conv_cache = conv_caches[i]
        d_pre = d_act * _activate_grad(conv_cache[3], layer.activation)
        dw, db, dx = _conv_backward(layer, conv_cache, d_pre, need_dx=i > 0)
        grads[f"{prefix}.conv{i}.weights"] = dw
        grads[f"{prefix}.conv{i}.bias"] = db
        d_act = dx


def backward(state: NetworkState, cache, labels: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of the mean cross-entropy w.r.t. every parameter.

    Keys match NetworkState.parameters() names; shapes mirror the parameters.
    """
    cache1, cache2, fused, probs = cache
    labels = np.asarray(labels, dtype=np.int64)
    n_batch = probs.shape[0]
    d_logits = probs.copy()
    d_logits[np.arange(n_batch), labels] -= 1.0
    d_logits /= n_batch

    grads: dict[str, np.ndarray] = {}
    grads["head.weights"] = d_logits.T @ fused
    grads["head.bias"] = d_logits.sum(axis=0)
    d_fused = d_logits @ state.head.weights
    d_units = state.spec.dense_units
    _stack_backward(
        state.conv_stacks[0], state.dense_layers[0], cache1, d_fused[:, :d_units], grads, "ch1"
    )
    _stack_backward(
        state.conv_stacks[1], state.dense_layers[1], cache2, d_fused[:, d_units:], grads, "ch2"
    )
    return grads


def loss_and_gradients(state: NetworkState, x1, x2, labels):
    """Forward + backward on one batch; returns (loss, gradients)."""
    probs, cache = forward(state, x1, x2)
    loss = cross_entropy(probs, labels)
    grads = backward(state, cache, labels)
    return loss, grads
