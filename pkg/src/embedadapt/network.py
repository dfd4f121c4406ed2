"""Feed-forward projection heads: init, forward/backward, Adam, persistence.

A head is a small ReLU MLP f: R^M -> R^K with an affine output layer,
optionally followed by row-wise L2 normalization. The low-level mlp_*
helpers operate on bare weight/bias lists and are reused by the downstream
MLP classifier, so there is exactly one backprop implementation in the
package and the gradient checks cover both users.

Conventions: Glorot uniform init, zero biases; ReLU'(0) = 0; gradients are
sums over the batch (duplicating a sample doubles its contribution).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

# RNG stream tags: default_rng([seed, _INIT_STREAM]) for parameters,
# default_rng([seed, _SHUFFLE_STREAM, epoch]) for epoch shuffles.
_INIT_STREAM = 0
_SHUFFLE_STREAM = 1


class TrainingDiverged(RuntimeError):
    """Raised when a loss or gradient stops being finite during training."""


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for contrastive head training (defaults as published).

    hidden_width None means 2 * projection_size.
    """

    learning_rate: float = 1e-3
    batch_size: int = 128
    epochs: int = 10
    temperature: float = 0.1
    hidden_layers: int = 1
    hidden_width: int | None = None
    projection_size: int = 128
    include_self_pairs: bool = True
    normalize_outputs: bool = True
    balance_pairs: bool = False
    seed: int = 0

    def resolved_hidden_width(self) -> int:
        return 2 * self.projection_size if self.hidden_width is None else self.hidden_width

    def validate(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2 (pairs need two samples)")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.hidden_layers < 0:
            raise ValueError("hidden_layers must be >= 0")
        if self.resolved_hidden_width() < 1:
            raise ValueError("hidden_width must be >= 1")
        if self.projection_size < 1:
            raise ValueError("projection_size must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")

    def with_seed(self, seed: int) -> "TrainConfig":
        return replace(self, seed=int(seed))


def glorot_uniform(fan_in: int, fan_out: int, rng: np.random.Generator) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_mlp_params(layer_dims, rng) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Glorot-uniform weights and zero biases for consecutive layer dims."""
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        weights.append(glorot_uniform(fan_in, fan_out, rng))
        biases.append(np.zeros(fan_out))
    return weights, biases


def mlp_forward(weights, biases, X):
    """ReLU MLP forward pass (affine final layer); returns (out, cache)."""
    acts = [X]
    h = X
    last = len(weights) - 1
    for i, (W, b) in enumerate(zip(weights, biases)):
        z = h @ W + b
        h = z if i == last else np.maximum(z, 0.0)
        acts.append(h)
    return h, acts


def mlp_backward(weights, acts, grad_out):
    """Gradients of a scalar loss given d(loss)/d(output).

    Returns (dWs, dbs) aligned with the weight list. ReLU derivative at 0 is
    taken as 0 (mask is post-activation > 0).
    """
    dWs = [None] * len(weights)
    dbs = [None] * len(weights)
    delta = grad_out
    for i in range(len(weights) - 1, -1, -1):
        dWs[i] = acts[i].T @ delta
        dbs[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ weights[i].T) * (acts[i] > 0.0)
    return dWs, dbs


def l2_normalize_rows(Z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-normalize; zero rows stay zero. Returns (normalized, norms)."""
    norms = np.sqrt(np.sum(Z * Z, axis=1))
    safe = np.where(norms > 0.0, norms, 1.0)
    return Z / safe[:, None], norms


def l2_normalize_backward(G, norms, grad_G):
    """Backprop through row normalization g = z/|z| (zero rows get zero grad)."""
    safe = np.where(norms > 0.0, norms, 1.0)
    inner = np.sum(G * grad_G, axis=1, keepdims=True)
    grad_Z = (grad_G - G * inner) / safe[:, None]
    grad_Z[norms == 0.0] = 0.0
    return grad_Z


@dataclass
class ProjectionHead:
    """Trained (or freshly initialized) projection g = normalize . f."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    normalize_outputs: bool = True

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return tuple([self.weights[0].shape[0]] + [W.shape[1] for W in self.weights])

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def output_dim(self) -> int:
        return self.weights[-1].shape[1]


def init_head(input_dim: int, config: TrainConfig, seed: int | None = None) -> ProjectionHead:
    """Fresh head for the given input width; dims [M, width*layers, K].

    The head must reduce dimension: projection_size < input_dim.
    """
    config.validate()
    if config.projection_size >= input_dim:
        raise ValueError(
            f"projection_size ({config.projection_size}) must be smaller than "
            f"the input dimension ({input_dim})"
        )
    dims = (
        [input_dim]
        + [config.resolved_hidden_width()] * config.hidden_layers
        + [config.projection_size]
    )
    rng = np.random.default_rng([seed if seed is not None else config.seed, _INIT_STREAM])
    weights, biases = init_mlp_params(dims, rng)
    return ProjectionHead(weights, biases, config.normalize_outputs)


def head_forward(head: ProjectionHead, X: np.ndarray, with_cache: bool = False):
    """Project a batch; returns output or (output, cache) for backprop."""
    X = np.asarray(X, np.float64)
    if X.ndim != 2 or X.shape[1] != head.input_dim:
        raise ValueError(
            f"input has width {X.shape[1] if X.ndim == 2 else None}, "
            f"head expects {head.input_dim}"
        )
    Z, acts = mlp_forward(head.weights, head.biases, X)
    if head.normalize_outputs:
        G, norms = l2_normalize_rows(Z)
    else:
        G, norms = Z, None
    if not with_cache:
        return G
    return G, (acts, G, norms)


def head_backward(head: ProjectionHead, cache, grad_out):
    """Parameter gradients given d(loss)/d(projection)."""
    acts, G, norms = cache
    if head.normalize_outputs:
        grad_out = l2_normalize_backward(G, norms, grad_out)
    return mlp_backward(head.weights, acts, grad_out)


@dataclass
class AdamState:
    """Adam moments; update is m_hat / (sqrt(v_hat) + eps), eps outside sqrt."""

    m_w: list[np.ndarray]
    v_w: list[np.ndarray]
    m_b: list[np.ndarray]
    v_b: list[np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, weights, biases) -> "AdamState":
        return cls(
            m_w=[np.zeros_like(W) for W in weights],
            v_w=[np.zeros_like(W) for W in weights],
            m_b=[np.zeros_like(b) for b in biases],
            v_b=[np.zeros_like(b) for b in biases],
        )


def adam_step(weights, biases, dWs, dbs, state: AdamState, lr: float) -> None:
    """One in-place Adam update; aborts on non-finite gradients."""
    for g in dWs + dbs:
        if not np.all(np.isfinite(g)):
            raise TrainingDiverged("non-finite gradient encountered")
    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    for params, grads, ms, vs in (
        (weights, dWs, state.m_w, state.v_w),
        (biases, dbs, state.m_b, state.v_b),
    ):
        for p, g, m, v in zip(params, grads, ms, vs):
            m *= state.beta1
            m += (1.0 - state.beta1) * g
            v *= state.beta2
            v += (1.0 - state.beta2) * (g * g)
            p -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)


HEAD_FILE_VERSION = 1


def save_head(head: ProjectionHead, path) -> None:
    """Persist a head to .npz (exact float64 round trip)."""
    payload = {
        "version": np.int64(HEAD_FILE_VERSION),
        "n_layers": np.int64(len(head.weights)),
        "normalize_outputs": np.int64(1 if head.normalize_outputs else 0),
    }
    for i, (W, b) in enumerate(zip(head.weights, head.biases)):
        payload[f"W{i}"] = W
        payload[f"b{i}"] = b
    np.savez(path, **payload)


def load_head(path) -> ProjectionHead:
    with np.load(path) as data:
        if int(data["version"]) != HEAD_FILE_VERSION:
            raise ValueError(f"unsupported head file version: {int(data['version'])}")
        n_layers = int(data["n_layers"])
        weights = [np.array(data[f"W{i}"]) for i in range(n_layers)]
        biases = [np.array(data[f"b{i}"]) for i in range(n_layers)]
        normalize = bool(int(data["normalize_outputs"]))
    return ProjectionHead(weights, biases, normalize)
