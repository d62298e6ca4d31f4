"""Filter-argument regressor: per-filter tanh heads over shared features.

Two wirings share the same head shape (tanh hidden layer, scalar tanh out):

* multihead - every head reads the feature vector alone;
* cascade   - head i additionally reads learned 8-float embeddings of the
  already-predicted arguments 1..i-1, concatenated after the features.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .features import FEATURE_DIM
from .filters import FilterKind

MODEL_SCHEMA_VERSION = 1

HIDDEN_DIM = 32
EMBED_DIM = 8

CASCADE = "cascade"
MULTIHEAD = "multihead"


@dataclass
class Head:
    w1: np.ndarray  # (in_dim, hidden)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (hidden,)
    b2: float


@dataclass
class RegressorModel:
    mode: str
    filters: tuple[FilterKind, ...]
    heads: list = field(default_factory=list)
    embeddings: list = field(default_factory=list)  # one (EMBED_DIM,) vector per argument
    feature_dim: int = FEATURE_DIM
    hidden_dim: int = HIDDEN_DIM
    embed_dim: int = EMBED_DIM

    @property
    def k(self) -> int:
        return len(self.filters)

    def head_input_dim(self, i: int) -> int:
        if self.mode == CASCADE:
            return self.feature_dim + self.embed_dim * i
        return self.feature_dim


def init_model(mode: str, filters, seed: int = 0, *,
               feature_dim: int = FEATURE_DIM, hidden_dim: int = HIDDEN_DIM,
               embed_dim: int = EMBED_DIM, init_scale: float = 1.0) -> RegressorModel:
    """Seeded Gaussian init, scaled by 1/sqrt(fan_in); biases start at zero."""
    if mode not in (CASCADE, MULTIHEAD):
        raise ValueError(f"unknown regressor mode {mode!r}")
    model = RegressorModel(mode=mode, filters=tuple(filters), feature_dim=feature_dim,
                           hidden_dim=hidden_dim, embed_dim=embed_dim)
    rng = np.random.default_rng(seed)
    for i in range(model.k):
        in_dim = model.head_input_dim(i)
        model.heads.append(Head(
            w1=rng.normal(0.0, init_scale / np.sqrt(in_dim), size=(in_dim, hidden_dim)),
            b1=np.zeros(hidden_dim),
            w2=rng.normal(0.0, init_scale / np.sqrt(hidden_dim), size=hidden_dim),
            b2=0.0,
        ))
        model.embeddings.append(
            rng.normal(0.0, init_scale / np.sqrt(embed_dim), size=embed_dim))
    return model


# ---------------------------------------------------------------------------
# forward / backward


def _forward(model: RegressorModel, features: np.ndarray):
    """Predict all arguments; the cache carries everything backward needs."""
    z = np.asarray(features, dtype=np.float64)
    if z.shape != (model.feature_dim,):
        raise ValueError(f"expected {model.feature_dim} features, got shape {z.shape}")
    theta = np.empty(model.k)
    xs, hs = [], []
    embeds = []
    for i, head in enumerate(model.heads):
        if model.mode == CASCADE and i > 0:
            x = np.concatenate([z] + embeds)
        else:
            x = z
        h = np.tanh(x @ head.w1 + head.b1)
        theta[i] = np.tanh(h @ head.w2 + head.b2)
        if model.mode == CASCADE:
            embeds.append(theta[i] * model.embeddings[i])
        xs.append(x)
        hs.append(h)
    return theta, {"x": xs, "h": hs, "theta": theta}


def _zero_grads(model: RegressorModel) -> dict:
    return {
        "w1": [np.zeros_like(h.w1) for h in model.heads],
        "b1": [np.zeros_like(h.b1) for h in model.heads],
        "w2": [np.zeros_like(h.w2) for h in model.heads],
        "b2": [0.0] * model.k,
        "embed": [np.zeros_like(e) for e in model.embeddings],
    }


def _backward(model: RegressorModel, cache: dict, dtheta: np.ndarray,
              grads: dict) -> None:
    """Accumulate parameter gradients for d(loss)/d(theta) into `grads`.

    Later heads are unwound first so their input gradients can flow into the
    embeddings (and from there into earlier predicted arguments).
    """
    d = model.feature_dim
    acc = np.array(dtheta, dtype=np.float64)
    if acc.shape != (model.k,):
        raise ValueError(f"expected {model.k} argument gradients, got shape {acc.shape}")
    for i in range(model.k - 1, -1, -1):
        head = model.heads[i]
        theta_i = cache["theta"][i]
        h = cache["h"][i]
        x = cache["x"][i]
        ds = acc[i] * (1.0 - theta_i * theta_i)
        grads["w2"][i] += ds * h
        grads["b2"][i] += ds
        dpre = (ds * head.w2) * (1.0 - h * h)
        grads["w1"][i] += np.outer(x, dpre)
        grads["b1"][i] += dpre
        if model.mode == CASCADE and i > 0:
            dx = head.w1 @ dpre
            for j in range(i):
                de = dx[d + j * model.embed_dim: d + (j + 1) * model.embed_dim]
                grads["embed"][j] += cache["theta"][j] * de
                acc[j] += float(de @ model.embeddings[j])


def _sgd_update(model: RegressorModel, grads: dict, lr: float) -> None:
    for i, head in enumerate(model.heads):
        head.w1 -= lr * grads["w1"][i]
        head.b1 -= lr * grads["b1"][i]
        head.w2 -= lr * grads["w2"][i]
        head.b2 -= lr * grads["b2"][i]
    for i, emb in enumerate(model.embeddings):
        emb -= lr * grads["embed"][i]


# ---------------------------------------------------------------------------
# prediction


def predict_multihead(features: np.ndarray, model: RegressorModel) -> np.ndarray:
    if model.mode != MULTIHEAD:
        raise ValueError(f"model mode is {model.mode!r}, not {MULTIHEAD!r}")
    theta, _ = _forward(model, features)
    return theta


def predict_cascade(features: np.ndarray, model: RegressorModel) -> np.ndarray:
    if model.mode != CASCADE:
        raise ValueError(f"model mode is {model.mode!r}, not {CASCADE!r}")
    theta, _ = _forward(model, features)
    return theta


def predict_args(features: np.ndarray, model: RegressorModel) -> np.ndarray:
    """Mode-dispatching prediction."""
    theta, _ = _forward(model, features)
    return theta


# ---------------------------------------------------------------------------
# serialization


def model_to_dict(model: RegressorModel) -> dict:
    return {
        "schema_version": MODEL_SCHEMA_VERSION,
        "mode": model.mode,
        "filters": [kind.value for kind in model.filters],
        "feature_dim": model.feature_dim,
        "hidden_dim": model.hidden_dim,
        "embed_dim": model.embed_dim,
        "heads": [
            {
                "w1": head.w1.tolist(),
                "b1": head.b1.tolist(),
                "w2": head.w2.tolist(),
                "b2": float(head.b2),
            }
            for head in model.heads
        ],
        "embeddings": [emb.tolist() for emb in model.embeddings],
    }


def model_from_dict(data: dict) -> RegressorModel:
    version = data.get("schema_version")
    if version != MODEL_SCHEMA_VERSION:
        raise ValueError(f"unsupported model schema_version {version!r}")
    model = RegressorModel(
        mode=data["mode"],
        filters=tuple(FilterKind(name) for name in data["filters"]),
        feature_dim=int(data["feature_dim"]),
        hidden_dim=int(data["hidden_dim"]),
        embed_dim=int(data["embed_dim"]),
    )
    if model.mode not in (CASCADE, MULTIHEAD):
        raise ValueError(f"unknown regressor mode {model.mode!r}")
    for i, head in enumerate(data["heads"]):
        w1 = np.asarray(head["w1"], dtype=np.float64)
        expected = (model.head_input_dim(i), model.hidden_dim)
        if w1.shape != expected:
            raise ValueError(f"head {i} weight shape {w1.shape}, expected {expected}")
        model.heads.append(Head(
            w1=w1,
            b1=np.asarray(head["b1"], dtype=np.float64),
            w2=np.asarray(head["w2"], dtype=np.float64),
            b2=float(head["b2"]),
        ))
    model.embeddings = [np.asarray(e, dtype=np.float64) for e in data["embeddings"]]
    if len(model.heads) != model.k or len(model.embeddings) != model.k:
        raise ValueError("head/embedding count does not match the filter list")
    return model


def save_model(model: RegressorModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh)


def load_model(path) -> RegressorModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
