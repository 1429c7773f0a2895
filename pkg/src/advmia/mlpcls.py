"""The membership classifier: a small MLP trained from scratch.

Architecture 27 -> 512 -> 512 -> 512 -> 2 with ReLU, inverted dropout on
hidden activations during training, softmax cross-entropy loss, and Adam.
Everything runs in float64 numpy and is bit-deterministic given the
config seed.  Output index 0 is "nonmember", index 1 is "member".
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .seeding import derive_seed

LABELS = ("nonmember", "member")
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class MlpConfig:
    input_dim: int = 27
    hidden_dims: tuple[int, ...] = (512, 512, 512)
    output_dim: int = 2
    dropout_rate: float = 0.1
    learning_rate: float = 1e-3
    weight_decay: float = 0.0
    epochs: int = 25
    batch_size: int = 4
    seed: int = 0

    def __post_init__(self):
        self.hidden_dims = tuple(int(d) for d in self.hidden_dims)
        if not 0 <= self.dropout_rate < 1:
            raise ValidationError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be positive")

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "hidden_dims": list(self.hidden_dims),
            "output_dim": self.output_dim,
            "dropout_rate": self.dropout_rate,
            "learning_rate": self.learning_rate,
            "weight_decay": self.weight_decay,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MlpConfig":
        return cls(**{**data, "hidden_dims": tuple(data["hidden_dims"])})


@dataclass
class Layer:
    weights: np.ndarray  # (out, in)
    biases: np.ndarray   # (out,)


@dataclass
class MlpModel:
    layers: list[Layer]
    config: MlpConfig

    def copy(self) -> "MlpModel":
        return MlpModel(
            layers=[Layer(l.weights.copy(), l.biases.copy()) for l in self.layers],
            config=replace(self.config),
        )


def init(config: MlpConfig) -> MlpModel:
    """Seeded uniform(+-1/sqrt(fan_in)) weights, zero biases."""
    rng = np.random.default_rng(derive_seed(config.seed, "init"))
    dims = [config.input_dim, *config.hidden_dims, config.output_dim]
    layers = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        layers.append(Layer(weights=weights, biases=np.zeros(fan_out)))
    return MlpModel(layers=layers, config=config)


def _forward_batch(model: MlpModel, x: np.ndarray, training: bool, dropout_rng=None):
    """Forward pass on a (batch, input_dim) matrix; returns logits and the
    cache needed for backprop."""
    if not np.all(np.isfinite(x)):
        raise ValidationError("features contain non-finite values")
    rate = model.config.dropout_rate
    h = x
    activations = [x]
    masks = []
    for layer in model.layers[:-1]:
        z = h @ layer.weights.T + layer.biases
        h = np.maximum(z, 0.0)
        if training and rate > 0.0:
            if dropout_rng is None:
                raise ValidationError("training forward pass requires a dropout RNG")
            mask = (dropout_rng.random(h.shape) >= rate) / (1.0 - rate)
            h = h * mask
        else:
            mask = None
        masks.append(mask)
        activations.append(h)
    out = model.layers[-1]
    logits = h @ out.weights.T + out.biases
    return logits, {"activations": activations, "masks": masks}


def forward(model: MlpModel, features, training: bool = False, seed: int = 0):
    """Single-vector forward pass; returns (logits, cache)."""
    x = np.asarray(features, dtype=np.float64).reshape(1, -1)
    if x.shape[1] != model.config.input_dim:
        raise ValidationError(
            f"expected {model.config.input_dim} features, got {x.shape[1]}"
        )
    rng = np.random.default_rng(derive_seed(seed, "dropout")) if training else None
    logits, cache = _forward_batch(model, x, training, rng)
    return logits[0], cache


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> float:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=-1))
    picked = shifted[np.arange(len(labels)), labels]
    return float(np.mean(log_z - picked))


def loss_and_grads(model: MlpModel, x: np.ndarray, labels: np.ndarray,
                   training: bool = False, dropout_rng=None):
    """Mean cross-entropy and analytic gradients for every parameter."""
    logits, cache = _forward_batch(model, x, training, dropout_rng)
    probs = _softmax(logits)
    loss = cross_entropy(logits, labels)

    batch = len(labels)
    delta = probs.copy()
    delta[np.arange(batch), labels] -= 1.0
    delta /= batch

    grads = [None] * len(model.layers)
    activations = cache["activations"]
    masks = cache["masks"]
    upstream = delta
    for li in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[li]
        h_in = activations[li]
        grads[li] = (upstream.T @ h_in, upstream.sum(axis=0))
        if li > 0:
            upstream = upstream @ layer.weights
            if masks[li - 1] is not None:
                upstream = upstream * masks[li - 1]
            # derivative through ReLU: post-dropout activation is nonzero
            # exactly where the pre-activation was positive and kept
            upstream = upstream * (activations[li] > 0.0)
    return loss, grads


def train(model: MlpModel, dataset: list[tuple[list[float], str]]) -> MlpModel:
    """Train on (features, label) pairs; returns a new model.

    Seeded mini-batch shuffling, inverted dropout, Adam; deterministic
    given the config seed.
    """
    if not dataset:
        raise ValidationError("training dataset is empty")
    labels = np.array([LABELS.index(label) for _, label in dataset], dtype=np.int64)
    if len(set(labels.tolist())) < 2:
        raise ValidationError("training dataset must contain both classes")
    x_all = np.array([list(feats) for feats, _ in dataset], dtype=np.float64)
    if x_all.shape[1] != model.config.input_dim:
        raise ValidationError(
            f"dataset features have dimension {x_all.shape[1]}, "
            f"model expects {model.config.input_dim}"
        )

    cfg = model.config
    trained = model.copy()
    m_state = [(np.zeros_like(l.weights), np.zeros_like(l.biases)) for l in trained.layers]
    v_state = [(np.zeros_like(l.weights), np.zeros_like(l.biases)) for l in trained.layers]
    shuffle_rng = np.random.default_rng(derive_seed(cfg.seed, "shuffle"))
    dropout_rng = np.random.default_rng(derive_seed(cfg.seed, "dropout"))
    step = 0

    for _epoch in range(cfg.epochs):
        order = shuffle_rng.permutation(len(dataset))
        for start in range(0, len(dataset), cfg.batch_size):
            batch_idx = order[start : start + cfg.batch_size]
            _, grads = loss_and_grads(
                trained, x_all[batch_idx], labels[batch_idx],
                training=True, dropout_rng=dropout_rng,
            )
            step += 1
            correction1 = 1.0 - ADAM_BETA1**step
            correction2 = 1.0 - ADAM_BETA2**step
            for li, layer in enumerate(trained.layers):
                gw, gb = grads[li]
                if cfg.weight_decay > 0.0:
                    gw = gw + cfg.weight_decay * layer.weights
                mw, mb = m_state[li]
                vw, vb = v_state[li]
                mw[:] = ADAM_BETA1 * mw + (1 - ADAM_BETA1) * gw
                mb[:] = ADAM_BETA1 * mb + (1 - ADAM_BETA1) * gb
                vw[:] = ADAM_BETA2 * vw + (1 - ADAM_BETA2) * gw**2
                vb[:] = ADAM_BETA2 * vb + (1 - ADAM_BETA2) * gb**2
                layer.weights -= cfg.learning_rate * (mw / correction1) / (
                    np.sqrt(vw / correction2) + ADAM_EPS
                )
                layer.biases -= cfg.learning_rate * (mb / correction1) / (
                    np.sqrt(vb / correction2) + ADAM_EPS
                )
    return trained


def predict(model: MlpModel, features) -> tuple[str, float]:
    """(label, member probability); exact logit ties resolve to nonmember."""
    logits, _ = forward(model, features, training=False)
    probs = _softmax(logits)
    label_idx = int(np.argmax(probs))  # argmax takes the first max: nonmember on ties
    return LABELS[label_idx], float(probs[1])


def save_model(model: MlpModel, path: str | Path, meta: dict | None = None):
    Path(path).write_text(model_to_json(model, meta), encoding="utf-8")


def model_to_json(model: MlpModel, meta: dict | None = None) -> str:
    doc = {
        "meta": meta or {},
        "config": model.config.to_dict(),
        "layers": [
            {
                "rows": layer.weights.shape[0],
                "cols": layer.weights.shape[1],
                "weights": layer.weights.reshape(-1).tolist(),
                "biases": layer.biases.tolist(),
            }
            for layer in model.layers
        ],
    }
    return json.dumps(doc, indent=None, separators=(",", ":")) + "\n"


def load_model(path: str | Path) -> MlpModel:
    return model_from_json(Path(path).read_text(encoding="utf-8"))


def model_from_json(text: str) -> MlpModel:
    doc = json.loads(text)
    config = MlpConfig.from_dict(doc["config"])
    layers = []
    for spec in doc["layers"]:
        weights = np.array(spec["weights"], dtype=np.float64).reshape(spec["rows"], spec["cols"])
        layers.append(Layer(weights=weights, biases=np.array(spec["biases"], dtype=np.float64)))
    model = MlpModel(layers=layers, config=config)
    dims = [config.input_dim, *config.hidden_dims, config.output_dim]
    for layer, (fan_in, fan_out) in zip(layers, zip(dims[:-1], dims[1:])):
        if layer.weights.shape != (fan_out, fan_in):
            raise ValidationError(
                f"layer shape {layer.weights.shape} does not chain with config dims {dims}"
            )
    return model
