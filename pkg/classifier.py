"""
Differentiable classifiers over flat parameter vectors.

Two architectures share one flat layout so aggregation never needs to know the
model: weight matrices are stored row-major with the bias as the last row.

    logistic: W  (feature_dim + 1, num_classes)
    mlp:      W1 (feature_dim + 1, hidden_dim) then W2 (hidden_dim + 1, num_classes), ReLU hidden layer

Loss is mean softmax cross-entropy; gradients are exact (hand-derived backprop).
"""
from typing import Callable, Optional, Tuple

import numpy as np

from data import Dataset
from errors import ConfigError, DimensionError, EmptyClientDataError
from models import ModelSpec, TrainConfig

GradientFn = Callable[[ModelSpec, np.ndarray, Dataset], Tuple[float, np.ndarray]]


def _unpack(spec: ModelSpec, params: np.ndarray):
    params = np.asarray(params, dtype=np.float64)
    if params.ndim != 1 or params.shape[0] != spec.param_dim:
        raise DimensionError(f"expected {spec.param_dim} parameters for {spec.kind}, got {params.shape}")
    if spec.kind == "logistic":
        return (params.reshape(spec.feature_dim + 1, spec.num_classes),)
    split = (spec.feature_dim + 1) * spec.hidden_dim
    w1 = params[:split].reshape(spec.feature_dim + 1, spec.hidden_dim)
    w2 = params[split:].reshape(spec.hidden_dim + 1, spec.num_classes)
    return w1, w2


def _check_features(spec: ModelSpec, features: np.ndarray) -> None:
    if features.shape[1] != spec.feature_dim:
        raise DimensionError(f"model expects {spec.feature_dim} features, data has {features.shape[1]}")


def _logits(spec: ModelSpec, params: np.ndarray, features: np.ndarray) -> np.ndarray:
    layers = _unpack(spec, params)
    _check_features(spec, features)
    if spec.kind == "logistic":
        w, = layers
        return features @ w[:-1] + w[-1]
    w1, w2 = layers
    hidden = np.maximum(features @ w1[:-1] + w1[-1], 0.0)
    return hidden @ w2[:-1] + w2[-1]


def _softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean loss and d(loss)/d(logits)"""
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    sums = exp.sum(axis=1, keepdims=True)
    rows = np.arange(labels.shape[0])
    loss = float(np.mean(np.log(sums[:, 0]) - shifted[rows, labels]))
    delta = exp / sums
    delta[rows, labels] -= 1.0
    return loss, delta / labels.shape[0]


def loss_and_gradient(spec: ModelSpec, params: np.ndarray, batch: Dataset) -> Tuple[float, np.ndarray]:
    if len(batch) == 0:
        raise ConfigError("cannot evaluate the loss on an empty batch")
    layers = _unpack(spec, params)
    features, labels = batch.features, batch.labels
    _check_features(spec, features)

    if spec.kind == "logistic":
        w, = layers
        loss, delta = _softmax_cross_entropy(features @ w[:-1] + w[-1], labels)
        grad = np.vstack([features.T @ delta, delta.sum(axis=0)])
        return loss, grad.ravel()

    w1, w2 = layers
    pre = features @ w1[:-1] + w1[-1]
    hidden = np.maximum(pre, 0.0)
    loss, delta = _softmax_cross_entropy(hidden @ w2[:-1] + w2[-1], labels)
    grad_w2 = np.vstack([hidden.T @ delta, delta.sum(axis=0)])
    back = delta @ w2[:-1].T
    back[pre <= 0.0] = 0.0
    grad_w1 = np.vstack([features.T @ back, back.sum(axis=0)])
    return loss, np.concatenate([grad_w1.ravel(), grad_w2.ravel()])


def client_rng(seed: int, round_number: int, client_id: int) -> np.random.Generator:
    # Stream keyed on (seed, round, client) so worker scheduling cannot change results
    return np.random.default_rng([seed, round_number, client_id])


def local_update_with_loss(spec: ModelSpec, global_params: np.ndarray, data: Dataset,
                           cfg: TrainConfig, round_number: int, client_id: int,
                           gradient_fn: Optional[GradientFn] = None) -> Tuple[np.ndarray, Optional[float]]:
    """local_steps SGD steps from global_params; returns the model and the mean minibatch loss"""
    if len(data) == 0:
        raise EmptyClientDataError(client_id)
    gradient_fn = gradient_fn or loss_and_gradient
    params = np.array(global_params, dtype=np.float64, copy=True)
    if cfg.local_steps == 0:
        return params, None

    rng = client_rng(cfg.seed, round_number, client_id)
    batch_size = min(cfg.batch_size, len(data))
    losses = []
    for _ in range(cfg.local_steps):
        batch = data.subset(rng.integers(0, len(data), size=batch_size))
        loss, grad = gradient_fn(spec, params, batch)
        params = params - cfg.learning_rate * grad
        losses.append(loss)
    return params, float(np.mean(losses))


def local_update(spec: ModelSpec, global_params: np.ndarray, data: Dataset, cfg: TrainConfig,
                 round_number: int, client_id: int,
                 gradient_fn: Optional[GradientFn] = None) -> np.ndarray:
    params, _ = local_update_with_loss(spec, global_params, data, cfg, round_number, client_id, gradient_fn)
    return params


def predict(spec: ModelSpec, params: np.ndarray, features: np.ndarray) -> np.ndarray:
    # argmax returns the first maximum, so ties go to the smallest class id
    return np.argmax(_logits(spec, params, features), axis=1)


def test_error(spec: ModelSpec, params: np.ndarray, test: Dataset) -> float:
    if len(test) == 0:
        raise ConfigError("test set is empty")
    return float(np.mean(predict(spec, params, test.features) != test.labels))


def target_hit_rate(spec: ModelSpec, params: np.ndarray, triggered: Dataset) -> Optional[float]:
    """Share of triggered samples classified as their (target) label"""
    if len(triggered) == 0:
        return None
    return float(np.mean(predict(spec, params, triggered.features) == triggered.labels))


def initial_params(spec: ModelSpec, mode: str = "zeros", seed: int = 0) -> np.ndarray:
    if mode == "auto":
        mode = "zeros" if spec.kind == "logistic" else "seeded"
    if mode == "zeros":
        return np.zeros(spec.param_dim)
    if mode != "seeded":
        raise ConfigError(f"unknown initialisation mode '{mode}'")
    rng = np.random.default_rng([seed, 0x1D])
    if spec.kind == "logistic":
        w = np.zeros((spec.feature_dim + 1, spec.num_classes))
        w[:-1] = rng.normal(0.0, 0.01, size=(spec.feature_dim, spec.num_classes))
        return w.ravel()
    w1 = np.zeros((spec.feature_dim + 1, spec.hidden_dim))
    w1[:-1] = rng.normal(0.0, np.sqrt(2.0 / spec.feature_dim), size=(spec.feature_dim, spec.hidden_dim))
    w2 = np.zeros((spec.hidden_dim + 1, spec.num_classes))
    w2[:-1] = rng.normal(0.0, np.sqrt(2.0 / spec.hidden_dim), size=(spec.hidden_dim, spec.num_classes))
    return np.concatenate([w1.ravel(), w2.ravel()])
