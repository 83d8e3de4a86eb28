"""Dense networks with hand-written backpropagation (float64)."""

from __future__ import annotations

import numpy as np


def sigmoid(x: np.ndarray) -> np.ndarray:
    # split by sign so neither branch overflows
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


class MLP:
    """``tanh`` hidden layers, configurable output activation.

    Parameters live in ``params`` as ``[W0, b0, W1, b1, ...]`` and every
    gradient list returned by :meth:`backward` has the same layout.
    """

    def __init__(self, sizes, out_act: str = "linear", rng: np.random.Generator | None = None,
                 out_scale: float = 1.0):
        if out_act not in ("linear", "tanh"):
            raise ValueError(f"unknown output activation {out_act}")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.sizes = tuple(int(s) for s in sizes)
        self.out_act = out_act
        self.params: list[np.ndarray] = []
        n_layers = len(self.sizes) - 1
        for i, (fan_in, fan_out) in enumerate(zip(self.sizes[:-1], self.sizes[1:])):
            bound = 1.0 / np.sqrt(fan_in)
            w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
            if i == n_layers - 1:
                w *= out_scale
            self.params += [w, np.zeros(fan_out)]

    @property
    def n_layers(self) -> int:
        return len(self.params) // 2

    def forward(self, x: np.ndarray, dropout: float = 0.0, rng=None, masks=None):
        """Return ``(output, cache)``.

        Inverted dropout is applied to hidden activations when ``dropout`` is
        positive; masks come from ``rng`` unless given explicitly.
        """
        cache = {"inputs": [], "acts": [], "masks": []}
        h = x
        for i in range(self.n_layers):
            w, b = self.params[2 * i], self.params[2 * i + 1]
            cache["inputs"].append(h)
            z = h @ w + b
            last = i == self.n_layers - 1
            if last and self.out_act == "linear":
                h = z
            else:
                h = np.tanh(z)
            cache["acts"].append(h)
            if not last:
                mask = None
                if masks is not None:
                    mask = masks[i]
                elif dropout > 0.0:
                    mask = (rng.random(h.shape) >= dropout) / (1.0 - dropout)
                cache["masks"].append(mask)
                if mask is not None:
                    h = h * mask
        return h, cache

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, cache, dout: np.ndarray):
        """Gradients of ``sum(dout * output)``; returns ``(grads, d_input)``."""
        grads: list[np.ndarray] = [None] * len(self.params)
        d = dout
        for i in reversed(range(self.n_layers)):
            last = i == self.n_layers - 1
            if not last:
                mask = cache["masks"][i]
                if mask is not None:
                    d = d * mask
            act = cache["acts"][i]
            if not (last and self.out_act == "linear"):
                d = d * (1.0 - act ** 2)
            h_in = cache["inputs"][i]
            grads[2 * i] = h_in.T @ d
            grads[2 * i + 1] = d.sum(axis=0)
            d = d @ self.params[2 * i].T
        return grads, d

    def copy(self) -> "MLP":
        other = MLP.__new__(MLP)
        other.sizes = self.sizes
        other.out_act = self.out_act
        other.params = [p.copy() for p in self.params]
        return other

    def soft_update(self, source: "MLP", rate: float) -> None:
        for mine, theirs in zip(self.params, source.params):
            mine *= 1.0 - rate
            mine += rate * theirs

    def sgd(self, grads, lr: float) -> None:
        for p, g in zip(self.params, grads):
            p -= lr * g


def grad_norm(*grad_lists) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for gl in grad_lists for g in gl)))


def clip_grads(grad_lists, max_norm: float):
    """Scale all gradient lists jointly to a global norm of at most ``max_norm``."""
    norm = grad_norm(*grad_lists)
    if max_norm and norm > max_norm:
        scale = max_norm / norm
        return [[g * scale for g in gl] for gl in grad_lists], norm
    return grad_lists, norm
