"""Dense-head training machinery shared by the trainable models.

Everything is float64 numpy with plain mini-batch gradient descent and a
single ``numpy.random.default_rng`` stream per training run (init, epoch
shuffles and dropout masks all draw from it), which makes fitted parameters
bit-reproducible for a given seed.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def silu(x: np.ndarray) -> np.ndarray:
    return x * sigmoid(x)


def silu_grad(x: np.ndarray) -> np.ndarray:
    s = sigmoid(x)
    return s * (1.0 + x * (1.0 - s))


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_grad(x: np.ndarray) -> np.ndarray:
    return (x > 0.0).astype(np.float64)


def softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


_ACT = {"silu": (silu, silu_grad), "relu": (relu, relu_grad)}
_EPS = 1e-12


class DenseHead:
    """One- or two-layer dense head with sigmoid or softmax output.

    ``hidden == 0`` collapses to a single linear map. Dropout (inverted,
    rate ``dropout``) applies to the hidden activations only while a
    dropout rng is supplied, i.e. during training.
    """

    def __init__(self, in_dim: int, out_dim: int, *, hidden: int = 0,
                 activation: str = "silu", output: str = "sigmoid",
                 dropout: float = 0.0, rng: np.random.Generator | None = None):
        if output not in ("sigmoid", "softmax"):
            raise ValidationError(f"unknown output {output!r}")
        if hidden and activation not in _ACT:
            raise ValidationError(f"unknown activation {activation!r}")
        if not (0.0 <= dropout < 1.0):
            raise ValidationError(f"dropout must be in [0, 1), got {dropout}")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.hidden = hidden
        self.activation = activation
        self.output = output
        self.dropout = dropout
        if hidden > 0:
            self.w1 = rng.normal(0.0, in_dim ** -0.5, (in_dim, hidden))
            self.b1 = np.zeros(hidden)
            self.w2 = rng.normal(0.0, hidden ** -0.5, (hidden, out_dim))
            self.b2 = np.zeros(out_dim)
        else:
            self.w1 = rng.normal(0.0, in_dim ** -0.5, (in_dim, out_dim))
            self.b1 = np.zeros(out_dim)
            self.w2 = None
            self.b2 = None

    def parameters(self) -> dict:
        params = {"w1": self.w1, "b1": self.b1}
        if self.hidden > 0:
            params["w2"] = self.w2
            params["b2"] = self.b2
        return params

    def forward(self, x: np.ndarray, dropout_rng: np.random.Generator | None = None):
        """Probabilities plus the cache needed for backprop."""
        cache = {"x": x}
        if self.hidden > 0:
            act, _ = _ACT[self.activation]
            z1 = x @ self.w1 + self.b1
            a1 = act(z1)
            cache["z1"] = z1
            if dropout_rng is not None and self.dropout > 0.0:
                keep = 1.0 - self.dropout
                mask = (dropout_rng.random(a1.shape) < keep).astype(np.float64) / keep
                a1 = a1 * mask
                cache["mask"] = mask
            cache["a1"] = a1
            logits = a1 @ self.w2 + self.b2
        else:
            logits = x @ self.w1 + self.b1
        probs = sigmoid(logits) if self.output == "sigmoid" else softmax(logits)
        cache["probs"] = probs
        return probs, cache

    def predict(self, x: np.ndarray) -> np.ndarray:
        probs, _ = self.forward(x)
        return probs

    def loss(self, probs: np.ndarray, targets: np.ndarray) -> float:
        """Mean over batch; BCE summed over outputs (sigmoid) or CE (softmax)."""
        p = np.clip(probs, _EPS, 1.0 - _EPS)
        if self.output == "sigmoid":
            per_sample = -(targets * np.log(p) + (1.0 - targets) * np.log(1.0 - p)).sum(axis=1)
        else:
            y = self._one_hot(targets)
            per_sample = -(y * np.log(p)).sum(axis=1)
        return float(per_sample.mean())

    def loss_on(self, x: np.ndarray, targets: np.ndarray) -> float:
        probs, _ = self.forward(x)
        return self.loss(probs, targets)

    def backward(self, cache: dict, targets: np.ndarray) -> dict:
        """Analytic gradients of :meth:`loss` w.r.t. every parameter."""
        probs = cache["probs"]
        y = targets if self.output == "sigmoid" else self._one_hot(targets)
        batch = probs.shape[0]
        dz_out = (probs - y) / batch
        grads = {}
        if self.hidden > 0:
            a1 = cache["a1"]
            grads["w2"] = a1.T @ dz_out
            grads["b2"] = dz_out.sum(axis=0)
            da1 = dz_out @ self.w2.T
            if "mask" in cache:
                da1 = da1 * cache["mask"]
            _, act_grad = _ACT[self.activation]
            dz1 = da1 * act_grad(cache["z1"])
            grads["w1"] = cache["x"].T @ dz1
            grads["b1"] = dz1.sum(axis=0)
        else:
            grads["w1"] = cache["x"].T @ dz_out
            grads["b1"] = dz_out.sum(axis=0)
        return grads

    def _one_hot(self, labels: np.ndarray) -> np.ndarray:
        labels = np.asarray(labels)
        if labels.ndim == 2:
            return labels
        y = np.zeros((labels.shape[0], self.out_dim))
        y[np.arange(labels.shape[0]), labels] = 1.0
        return y


def fit_minibatch(head: DenseHead, x: np.ndarray, targets: np.ndarray, *,
                  learning_rate: float, epochs: int, batch_size: int,
                  rng: np.random.Generator):
    """Plain SGD; returns (initial_loss, final_loss), both dropout-free."""
    n = x.shape[0]
    initial = head.loss_on(x, targets)
    use_dropout = head.dropout > 0.0 and head.hidden > 0
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            _, cache = head.forward(x[idx], dropout_rng=rng if use_dropout else None)
            grads = head.backward(cache, _index_targets(targets, idx))
            params = head.parameters()
            for name, grad in grads.items():
                params[name] -= learning_rate * grad
    return initial, head.loss_on(x, targets)


def _index_targets(targets: np.ndarray, idx: np.ndarray) -> np.ndarray:
    return targets[idx]


class FeatureScaler:
    """Per-feature standardization fitted on the training corpus."""

    def __init__(self, mean: np.ndarray, std: np.ndarray):
        self.mean = np.asarray(mean, dtype=np.float64)
        self.std = np.asarray(std, dtype=np.float64)

    @classmethod
    def fit(cls, x: np.ndarray) -> "FeatureScaler":
        mean = x.mean(axis=0)
        std = x.std(axis=0)
        std = np.where(std < 1e-8, 1.0, std)
        return cls(mean, std)

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.std
