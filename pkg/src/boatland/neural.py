"""Dense feed-forward networks with exact reverse-mode gradients, an Adam
optimizer, and a bit-exact binary checkpoint format.

All math is float64. forward/backward accept a single vector or a batch
matrix (rows are samples); gradients over a batch are summed, so the caller
scales the upstream gradient (e.g. by 1/n for a mean loss).
"""

import struct
from dataclasses import dataclass, field
from typing import List

import numpy as np

from boatland.errors import CheckpointError, NumericError

ACTIVATIONS = ("relu", "tanh", "identity")


@dataclass
class DenseLayer:
    weights: np.ndarray  # (out, in)
    biases: np.ndarray  # (out,)
    activation: str

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


@dataclass
class Mlp:
    layers: List[DenseLayer]

    @property
    def input_dim(self):
        return self.layers[0].weights.shape[1]

    @property
    def output_dim(self):
        return self.layers[-1].weights.shape[0]


@dataclass
class Gradients:
    d_weights: list
    d_biases: list


@dataclass
class AdamState:
    m_weights: list
    v_weights: list
    m_biases: list
    v_biases: list
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_net(cls, net: Mlp):
        return cls(
            m_weights=[np.zeros_like(l.weights) for l in net.layers],
            v_weights=[np.zeros_like(l.weights) for l in net.layers],
            m_biases=[np.zeros_like(l.biases) for l in net.layers],
            v_biases=[np.zeros_like(l.biases) for l in net.layers],
        )


def init_mlp(dims, activations, rng) -> Mlp:
    """Hidden layers uniform in +-1/sqrt(fan_in); the final layer uniform in
    +-3e-3 so initial actions and values start near zero."""
    if len(dims) < 2:
        raise ValueError("need at least one layer (two dims)")
    if len(activations) != len(dims) - 1:
        raise ValueError("one activation per layer required")
    layers = []
    for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        bound = 3e-3 if i == len(dims) - 2 else 1.0 / np.sqrt(fan_in)
        layers.append(
            DenseLayer(
                weights=rng.uniform(-bound, bound, size=(fan_out, fan_in)),
                biases=rng.uniform(-bound, bound, size=fan_out),
                activation=activations[i],
            )
        )
    return Mlp(layers)


def clone(net: Mlp) -> Mlp:
    return Mlp(
        [
            DenseLayer(l.weights.copy(), l.biases.copy(), l.activation)
            for l in net.layers
        ]
    )


def param_count(net: Mlp) -> int:
    return sum(l.weights.size + l.biases.size for l in net.layers)


@dataclass
class FwdCache:
    net: Mlp
    x: np.ndarray
    outputs: list  # post-activation output of every layer
    single: bool


def forward(net: Mlp, x):
    """Returns (output, cache). x: (input_dim,) vector or (n, input_dim)."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x2 = x[None, :] if single else x
    if x2.shape[1] != net.input_dim:
        raise ValueError(
            f"input has {x2.shape[1]} features, net expects {net.input_dim}"
        )
    outputs = []
    cur = x2
    for layer in net.layers:
        z = cur @ layer.weights.T
        z += layer.biases
        if layer.activation == "relu":
            np.maximum(z, 0.0, out=z)
        elif layer.activation == "tanh":
            np.tanh(z, out=z)
        outputs.append(z)
        cur = z
    out = cur[0] if single else cur
    return out, FwdCache(net=net, x=x2, outputs=outputs, single=single)


def backward(net: Mlp, cache: FwdCache, output_grad, *, need_params=True,
             need_input=True):
    """Exact gradients of sum(output * output_grad) w.r.t. parameters and
    input. Returns (Gradients, input_grad).

    need_params/need_input skip the corresponding computation (the hot
    training loop wants only one side per pass); skipped results are None.
    """
    if cache.net is not net or len(cache.outputs) != len(net.layers):
        raise ValueError("cache does not match this network")
    g = np.asarray(output_grad, dtype=np.float64)
    if cache.single:
        g = g[None, :]
    if g.shape != cache.outputs[-1].shape:
        raise ValueError("output_grad shape does not match the forward output")
    last = len(net.layers) - 1
    d_w = [None] * len(net.layers)
    d_b = [None] * len(net.layers)
    delta = g
    for i in range(last, -1, -1):
        layer = net.layers[i]
        a = cache.outputs[i]
        if i == last:
            # do not mutate the caller's array
            if layer.activation == "relu":
                delta = delta * (a > 0)
            elif layer.activation == "tanh":
                delta = delta * (1.0 - a * a)
            else:
                delta = delta.copy()
        else:
            if layer.activation == "relu":
                np.multiply(delta, a > 0, out=delta)
            elif layer.activation == "tanh":
                np.multiply(delta, 1.0 - a * a, out=delta)
        if need_params:
            inp = cache.x if i == 0 else cache.outputs[i - 1]
            d_w[i] = delta.T @ inp
            d_b[i] = delta.sum(axis=0)
        if i > 0 or need_input:
            delta = delta @ layer.weights
    if not need_input:
        input_grad = None
    else:
        input_grad = delta[0] if cache.single else delta
    grads = Gradients(d_weights=d_w, d_biases=d_b) if need_params else None
    return grads, input_grad


def grads_finite(grads: Gradients) -> bool:
    return all(np.isfinite(a).all() for a in grads.d_weights) and all(
        np.isfinite(a).all() for a in grads.d_biases
    )


def adam_step(net: Mlp, grads: Gradients, state: AdamState, lr):
    """Bias-corrected Adam update, applied in place. Rejects non-finite
    gradients without touching the parameters."""
    if not grads_finite(grads):
        raise NumericError("non-finite gradient; update rejected")
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1**t
    c2 = 1.0 - state.beta2**t
    for i, layer in enumerate(net.layers):
        for param, g, m, v in (
            (layer.weights, grads.d_weights[i], state.m_weights[i], state.v_weights[i]),
            (layer.biases, grads.d_biases[i], state.m_biases[i], state.v_biases[i]),
        ):
            scratch = np.empty_like(g)
            np.multiply(g, g, out=scratch)
            scratch *= 1.0 - state.beta2
            v *= state.beta2
            v += scratch
            np.multiply(g, 1.0 - state.beta1, out=scratch)
            m *= state.beta1
            m += scratch
            np.divide(v, c2, out=scratch)
            np.sqrt(scratch, out=scratch)
            scratch += state.eps
            np.divide(m, scratch, out=scratch)
            scratch *= lr / c1
            param -= scratch
    return net, state


_MAGIC = b"DDPGCKPT"
_VERSION = 1


def write_checkpoint(path, tensors):
    """Binary checkpoint: magic, u32 LE version, then per tensor: u32 LE name
    length, UTF-8 name, u32 LE rank, u32 LE dims, float64 LE row-major data."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", _VERSION))
        for name, arr in tensors.items():
            raw = name.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            a = np.ascontiguousarray(arr, dtype=np.float64)
            fh.write(struct.pack("<I", a.ndim))
            for d in a.shape:
                fh.write(struct.pack("<I", d))
            fh.write(a.astype("<f8", copy=False).tobytes())


def read_checkpoint(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[: len(_MAGIC)] != _MAGIC:
        raise CheckpointError("bad magic, not a checkpoint", offset=0)
    pos = len(_MAGIC)

    def take(n, what):
        nonlocal pos
        if pos + n > len(data):
            raise CheckpointError(f"truncated while reading {what}", offset=pos)
        chunk = data[pos : pos + n]
        pos += n
        return chunk

    (version,) = struct.unpack("<I", take(4, "version"))
    if version != _VERSION:
        raise CheckpointError(f"unsupported version {version}", offset=8)
    tensors = {}
    while pos < len(data):
        (name_len,) = struct.unpack("<I", take(4, "name length"))
        if name_len > 4096:
            raise CheckpointError(f"implausible name length {name_len}", offset=pos - 4)
        try:
            name = take(name_len, "name").decode("utf-8")
        except UnicodeDecodeError:
            raise CheckpointError("tensor name is not UTF-8", offset=pos - name_len)
        (rank,) = struct.unpack("<I", take(4, "rank"))
        if rank > 8:
            raise CheckpointError(f"implausible rank {rank}", offset=pos - 4)
        shape = tuple(
            struct.unpack("<I", take(4, "dimension"))[0] for _ in range(rank)
        )
        count = int(np.prod(shape)) if shape else 1
        raw = take(8 * count, f"tensor {name!r} data")
        tensors[name] = np.frombuffer(raw, dtype="<f8").reshape(shape).astype(
            np.float64
        )
    return tensors
