"""Minimal MLP machinery: forward with cache, exact backward, Adam.

Everything is plain float64 numpy so gradients can be checked against
central finite differences. Hidden layers are ReLU, outputs linear.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


class Mlp:
    """Fully-connected net. Weights are (fan_in, fan_out); x maps to x @ W + b."""

    def __init__(self, sizes, weights, biases, activation="relu"):
        if activation != "relu":
            raise ValueError(f"unsupported activation {activation!r}")
        self.sizes = list(sizes)
        self.weights = weights
        self.biases = biases
        self.activation = activation
        self.version = 0  # bumped on every parameter update; guards stale caches

    @classmethod
    def create(cls, sizes, rng: np.random.Generator, final_scale: float = 1.0):
        """Kaiming-uniform hidden layers; final layer scaled by final_scale."""
        weights, biases = [], []
        n_layers = len(sizes) - 1
        for i in range(n_layers):
            fan_in, fan_out = sizes[i], sizes[i + 1]
            bound = np.sqrt(6.0 / fan_in)
            w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
            if i == n_layers - 1:
                w *= final_scale
            weights.append(w)
            biases.append(np.zeros(fan_out))
        return cls(sizes, weights, biases)

    def params(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def copy(self) -> "Mlp":
        return Mlp(self.sizes, [w.copy() for w in self.weights],
                   [b.copy() for b in self.biases], self.activation)


def forward(net: Mlp, x):
    """Returns (output, cache). Accepts a single vector or a (B, in) batch."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    a = x[None, :] if single else x
    if a.shape[1] != net.sizes[0]:
        raise ValueError(f"input dim {a.shape[1]}, net expects {net.sizes[0]}")
    inputs = [a]   # layer inputs (post-activation of previous layer)
    pres = []      # pre-activations
    n_layers = len(net.weights)
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w + b
        pres.append(z)
        a = np.maximum(z, 0.0) if i < n_layers - 1 else z
        if i < n_layers - 1:
            inputs.append(a)
    cache = {"inputs": inputs, "pres": pres, "net": net, "version": net.version,
             "single": single}
    return (a[0] if single else a), cache


def backward(net: Mlp, cache, grad_out, param_grads: bool = True):
    """Exact reverse-mode gradients.

    grad_out is dLoss/doutput with the same leading shape forward produced.
    Returns (grads, grad_in) where grads is a flat [dW0, db0, dW1, ...] list
    matching net.params(). With param_grads=False only the input gradient is
    produced (grads is None), which skips the weight-gradient matmuls.
    """
    if cache["net"] is not net or cache["version"] != net.version:
        raise ValueError("stale cache: parameters changed since forward()")
    delta = np.asarray(grad_out, dtype=float)
    if cache["single"]:
        delta = delta[None, :]
    grads = [None] * (2 * len(net.weights)) if param_grads else None
    for i in range(len(net.weights) - 1, -1, -1):
        if param_grads:
            a_in = cache["inputs"][i]
            grads[2 * i] = a_in.T @ delta
            grads[2 * i + 1] = delta.sum(axis=0)
        delta = delta @ net.weights[i].T
        if i > 0:
            delta = delta * (cache["pres"][i - 1] > 0.0)
    return grads, (delta[0] if cache["single"] else delta)


@dataclass
class AdamState:
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    @classmethod
    def for_params(cls, params, lr, **kw):
        state = cls(lr=lr, **kw)
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
        return state


def adam_step(params, grads, state: AdamState):
    """Bias-corrected Adam update, in place. Returns (params, state)."""
    state.t += 1
    c1 = 1.0 - state.beta1 ** state.t
    c2 = 1.0 - state.beta2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state


CHECKPOINT_VERSION = 1


def save_checkpoint(path, nets: dict, arrays: dict | None = None,
                    meta: dict | None = None) -> None:
    """Self-describing npz: shapes + row-major float64 arrays, exact bits."""
    payload = {}
    desc = {"format_version": CHECKPOINT_VERSION, "nets": {}, "meta": meta or {}}
    for name, net in nets.items():
        desc["nets"][name] = {"sizes": net.sizes, "activation": net.activation}
        for i, (w, b) in enumerate(zip(net.weights, net.biases)):
            payload[f"{name}.W{i}"] = w
            payload[f"{name}.b{i}"] = b
    for name, arr in (arrays or {}).items():
        payload[f"array.{name}"] = np.asarray(arr)
    payload["__desc__"] = np.array(json.dumps(desc))
    np.savez(path, **payload)


def load_checkpoint(path):
    """Returns (nets, arrays, meta)."""
    with np.load(path, allow_pickle=False) as data:
        desc = json.loads(str(data["__desc__"]))
        if desc["format_version"] != CHECKPOINT_VERSION:
            raise ValueError(f"checkpoint format {desc['format_version']} not supported")
        nets = {}
        for name, info in desc["nets"].items():
            n_layers = len(info["sizes"]) - 1
            weights = [data[f"{name}.W{i}"] for i in range(n_layers)]
            biases = [data[f"{name}.b{i}"] for i in range(n_layers)]
            nets[name] = Mlp(info["sizes"], weights, biases, info["activation"])
        arrays = {key[len("array."):]: data[key] for key in data.files
                  if key.startswith("array.")}
    return nets, arrays, desc["meta"]
