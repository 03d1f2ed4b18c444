"""A small float64 dense-network substrate with explicit backprop.

Batches are row-major: ``x`` has shape ``(batch, in_dim)`` and a layer
computes ``act(x @ W.T + b)`` with ``W`` of shape ``(out_dim, in_dim)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import DimensionMismatch

ACTIVATIONS = ("relu", "sigmoid", "identity")


def _act(name, z):
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "sigmoid":
        return expit(z)
    return z


def _act_grad(name, z, a):
    if name == "relu":
        return (z > 0.0).astype(float)
    if name == "sigmoid":
        return a * (1.0 - a)
    return np.ones_like(z)


@dataclass
class DenseLayer:
    weight: np.ndarray
    bias: np.ndarray
    activation: str = "identity"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        self.weight = np.asarray(self.weight, dtype=float)
        self.bias = np.asarray(self.bias, dtype=float)
        if self.bias.shape != (self.weight.shape[0],):
            raise DimensionMismatch("bias length must equal layer output dim")

    @property
    def in_dim(self):
        return self.weight.shape[1]

    @property
    def out_dim(self):
        return self.weight.shape[0]


@dataclass
class DenseNet:
    layers: list[DenseLayer] = field(default_factory=list)

    @classmethod
    def build(cls, dims, activations, rng):
        """He-uniform init for relu layers, Xavier-uniform otherwise; zero biases."""
        if isinstance(activations, str):
            activations = [activations] * (len(dims) - 1)
        if len(activations) != len(dims) - 1:
            raise ValueError("need one activation per layer")
        layers = []
        for fan_in, fan_out, act in zip(dims[:-1], dims[1:], activations):
            if act == "relu":
                limit = np.sqrt(6.0 / fan_in)
            else:
                limit = np.sqrt(6.0 / (fan_in + fan_out))
            w = rng.uniform(-limit, limit, size=(fan_out, fan_in))
            layers.append(DenseLayer(w, np.zeros(fan_out), act))
        return cls(layers)

    @property
    def in_dim(self):
        return self.layers[0].in_dim

    @property
    def out_dim(self):
        return self.layers[-1].out_dim

    def parameters(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out += [layer.weight, layer.bias]
        return out

    def copy(self) -> "DenseNet":
        return DenseNet([DenseLayer(l.weight.copy(), l.bias.copy(), l.activation) for l in self.layers])

    def __call__(self, x):
        return forward(self, x)[0]

    def to_dict(self):
        return {
            "layers": [
                {
                    "in": l.in_dim,
                    "out": l.out_dim,
                    "activation": l.activation,
                    "weight": l.weight.tolist(),
                    "bias": l.bias.tolist(),
                }
                for l in self.layers
            ]
        }

    @classmethod
    def from_dict(cls, d):
        return cls([DenseLayer(np.array(l["weight"], dtype=float).reshape(l["out"], l["in"]),
                               np.array(l["bias"], dtype=float), l["activation"]) for l in d["layers"]])


def forward(net: DenseNet, x):
    """Returns ``(output, cache)``; a 1-D input gives a 1-D output."""
    x = np.asarray(x, dtype=float)
    squeeze = x.ndim == 1
    a = x[None, :] if squeeze else x
    cache = []
    for layer in net.layers:
        if a.shape[1] != layer.in_dim:
            raise DimensionMismatch(f"expected input dim {layer.in_dim}, got {a.shape[1]}")
        z = a @ layer.weight.T + layer.bias
        out = _act(layer.activation, z)
        cache.append((a, z, out))
        a = out
    return (a[0] if squeeze else a), cache


def backward(net: DenseNet, cache, loss_grad, input_grad=False):
    """Gradients ``[dW0, db0, dW1, db1, ...]`` for ``d loss / d output = loss_grad``.

    With ``input_grad`` the gradient with respect to the network input is
    returned as a second value.
    """
    if len(cache) != len(net.layers):
        raise DimensionMismatch("cache does not come from this network")
    g = np.asarray(loss_grad, dtype=float)
    squeeze = g.ndim == 1
    if squeeze:
        g = g[None, :]
    if g.shape != cache[-1][2].shape:
        raise DimensionMismatch(f"loss gradient shape {g.shape} != output shape {cache[-1][2].shape}")
    grads = []
    for layer, (a_in, z, a_out) in zip(reversed(net.layers), reversed(cache)):
        dz = g * _act_grad(layer.activation, z, a_out)
        grads.append(dz.sum(axis=0))
        grads.append(dz.T @ a_in)
        g = dz @ layer.weight
    grads.reverse()
    if input_grad:
        return grads, (g[0] if squeeze else g)
    return grads


def sgd_step(net: DenseNet, grads, lr):
    """In-place ``theta <- theta - lr * g``; returns the same network."""
    params = net.parameters()
    if len(params) != len(grads):
        raise DimensionMismatch("gradient list does not match parameters")
    for p, g in zip(params, grads):
        if p.shape != np.shape(g):
            raise DimensionMismatch(f"gradient shape {np.shape(g)} != parameter shape {p.shape}")
        p -= lr * g
    return net


def max_relative_error(analytic, numeric) -> float:
    worst = 0.0
    for ga, gn in zip(analytic, numeric):
        ga, gn = np.asarray(ga, dtype=float), np.asarray(gn, dtype=float)
        if ga.size == 0:
            continue
        denom = np.maximum(np.maximum(np.abs(ga), np.abs(gn)), 1e-8)
        worst = max(worst, float((np.abs(ga - gn) / denom).max()))
    return worst


def numeric_gradients(f, params, eps=1e-5):
    """Central finite differences of scalar ``f()`` w.r.t. arrays in ``params`` (perturbed in place)."""
    out = []
    for p in params:
        g = np.zeros_like(p)
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up = f()
            flat[i] = orig - eps
            down = f()
            flat[i] = orig
            gflat[i] = (up - down) / (2.0 * eps)
        out.append(g)
    return out


def grad_check(net: DenseNet, loss_fn, x, eps=1e-5, analytic=None) -> float:
    """Max relative error between backprop and central differences.

    ``loss_fn(output) -> (loss, d loss / d output)``. ``analytic`` may
    replace backprop with any callable ``(net, x) -> grads``.
    """
    params = net.parameters()
    if not params:
        return 0.0
    if analytic is None:
        out, cache = forward(net, x)
        grads = backward(net, cache, loss_fn(out)[1])
    else:
        grads = analytic(net, x)
    numeric = numeric_gradients(lambda: loss_fn(forward(net, x)[0])[0], params, eps)
    return max_relative_error(grads, numeric)


def half_mse(pred, target):
    """``0.5 * mean((pred - target)^2)`` and its gradient w.r.t. ``pred``."""
    diff = np.asarray(pred, dtype=float) - np.asarray(target, dtype=float)
    n = diff.shape[0]
    return 0.5 * float((diff * diff).sum()) / n, diff / n


@dataclass
class TrainConfig:
    epochs: int = 120
    batch_size: int = 256
    learning_rate: float = 0.01
    seed: int = 42
    shuffle: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
