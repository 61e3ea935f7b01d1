"""Micro 1D/2D CNN for 5-class drive-over classification, numpy only.

Per-series 1D convolutions, a 2D aggregator convolution over the stacked
maps, a time-only maxpool, a speed bypass into the dense head, SELU
hidden layers and a softmax output. Forward, analytic backprop and
momentum-SGD training are all implemented here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .dsp import N_FEATURES
from .synth import CLASS_ORDER, Material

SELU_LAMBDA = 1.0507
SELU_ALPHA = 1.6733

KERNEL1_WIDTH = 11
N_KERNELS1 = 3
KERNEL2_SIZE = 11
N_KERNELS2 = 7
N_CLASSES = 5
MIN_FRAMES = 2 * (KERNEL1_WIDTH - 1) + 1  # two valid width-11 convolutions

N_MAPS = N_FEATURES * N_KERNELS1          # 42 stacked maps
POOLED_ROWS = N_MAPS - KERNEL2_SIZE + 1   # 32 channel positions after conv2
N_DENSE_IN = N_KERNELS2 * POOLED_ROWS + 1  # 224 pooled values + speed

MODEL_VERSION = 1

PARAM_NAMES = ["conv1_w", "conv1_b", "conv2_w", "conv2_b",
               "w1", "b1", "w2", "b2", "w3", "b3"]


@dataclass
class SegmentTensor:
    """One segment's (14, T) feature matrix with speed and class label."""

    features: np.ndarray
    speed_mps: float
    label: Material

    def __post_init__(self):
        self.features = np.asarray(self.features, float)
        if self.features.ndim != 2 or self.features.shape[0] != N_FEATURES:
            raise ValueError("features must have shape (14, T)")

    @property
    def label_index(self) -> int:
        return CLASS_ORDER.index(self.label)


@dataclass
class TrainConfig:
    learning_rate: float = 0.02
    epochs: int = 60
    batch_size: int = 16
    seed: int = 0
    momentum: float = 0.9

    def __post_init__(self):
        if self.learning_rate <= 0 or self.epochs < 1:
            raise ValueError("invalid training config")


@dataclass
class CnnModel:
    conv1_w: np.ndarray  # (14, 3, 11) one kernel set per input series
    conv1_b: np.ndarray  # (14, 3)
    conv2_w: np.ndarray  # (7, 11, 11)
    conv2_b: np.ndarray  # (7,)
    w1: np.ndarray       # (225, h1)
    b1: np.ndarray
    w2: np.ndarray       # (h1, h2)
    b2: np.ndarray
    w3: np.ndarray       # (h2, 5)
    b3: np.ndarray
    feat_mean: np.ndarray = field(default_factory=lambda: np.zeros(N_FEATURES))
    feat_std: np.ndarray = field(default_factory=lambda: np.ones(N_FEATURES))
    speed_mean: float = 0.0
    speed_std: float = 1.0

    def params(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def copy(self) -> "CnnModel":
        m = CnnModel(**{k: v.copy() for k, v in self.params().items()})
        m.feat_mean = self.feat_mean.copy()
        m.feat_std = self.feat_std.copy()
        m.speed_mean = self.speed_mean
        m.speed_std = self.speed_std
        return m


def init_model(rng: np.random.Generator, h1: int = 64, h2: int = 32) -> CnnModel:
    """Fan-in scaled uniform initialization."""

    def uni(shape, fan_in):
        lim = np.sqrt(1.0 / fan_in)
        return rng.uniform(-lim, lim, size=shape)

    return CnnModel(
        conv1_w=uni((N_FEATURES, N_KERNELS1, KERNEL1_WIDTH), KERNEL1_WIDTH),
        conv1_b=np.zeros((N_FEATURES, N_KERNELS1)),
        conv2_w=uni((N_KERNELS2, KERNEL2_SIZE, KERNEL2_SIZE), KERNEL2_SIZE ** 2),
        conv2_b=np.zeros(N_KERNELS2),
        w1=uni((N_DENSE_IN, h1), N_DENSE_IN),
        b1=np.zeros(h1),
        w2=uni((h1, h2), h1),
        b2=np.zeros(h2),
        w3=uni((h2, N_CLASSES), h2),
        b3=np.zeros(N_CLASSES),
    )


def selu(x: np.ndarray) -> np.ndarray:
    return SELU_LAMBDA * np.where(x > 0, x, SELU_ALPHA * (np.exp(x) - 1.0))


def selu_grad(x: np.ndarray) -> np.ndarray:
    return SELU_LAMBDA * np.where(x > 0, 1.0, SELU_ALPHA * np.exp(x))


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(p: np.ndarray, y: np.ndarray) -> float:
    """Cross-entropy of one probability vector against a one-hot target."""
    return float(-np.sum(y * np.log(np.clip(p, 1e-12, None))))


def _forward_batch(m: CnnModel, feats: np.ndarray, speeds: np.ndarray,
                   want_cache: bool = False):
    """feats: (N, 14, T) raw features; speeds: (N,) in m/s."""
    n, _, t = feats.shape
    if t < MIN_FRAMES:
        raise ValueError("segment too short")
    xs = (feats - m.feat_mean[None, :, None]) / m.feat_std[None, :, None]
    sw1 = sliding_window_view(xs, KERNEL1_WIDTH, axis=2)      # (N,14,L1,11)
    maps = np.einsum("nitw,ijw->nijt", sw1, m.conv1_w)
    maps += m.conv1_b[None, :, :, None]
    l1 = maps.shape[3]
    image = maps.reshape(n, N_MAPS, l1)
    sw2 = sliding_window_view(image, (KERNEL2_SIZE, KERNEL2_SIZE),
                              axis=(1, 2))                    # (N,32,L2,11,11)
    conv2 = np.einsum("nxtuv,kuv->nkxt", sw2, m.conv2_w)
    conv2 += m.conv2_b[None, :, None, None]
    arg = conv2.argmax(axis=3)
    pooled = np.take_along_axis(conv2, arg[..., None], axis=3)[..., 0]  # (N,7,32)
    speed_std = (speeds - m.speed_mean) / m.speed_std
    z0 = np.concatenate([pooled.reshape(n, -1), speed_std[:, None]], axis=1)
    z1 = z0 @ m.w1 + m.b1
    a1 = selu(z1)
    z2 = a1 @ m.w2 + m.b2
    a2 = selu(z2)
    logits = a2 @ m.w3 + m.b3
    probs = softmax(logits)
    if not want_cache:
        return probs
    cache = dict(sw1=sw1, sw2=sw2, conv2_shape=conv2.shape, arg=arg,
                 z0=z0, z1=z1, a1=a1, z2=z2, a2=a2, probs=probs)
    return probs, cache


def forward(m: CnnModel, s: SegmentTensor) -> np.ndarray:
    """Class probabilities (5,) for one segment."""
    return _forward_batch(m, s.features[None], np.array([s.speed_mps]))[0]


def batch_arrays(batch: list[SegmentTensor]):
    feats = np.stack([s.features for s in batch])
    speeds = np.array([s.speed_mps for s in batch], float)
    onehot = np.zeros((len(batch), N_CLASSES))
    onehot[np.arange(len(batch)), [s.label_index for s in batch]] = 1.0
    return feats, speeds, onehot


def backward(m: CnnModel, batch: list[SegmentTensor]):
    """Mean cross-entropy over the batch and its gradient per parameter."""
    if not batch:
        raise ValueError("empty batch")
    feats, speeds, onehot = batch_arrays(batch)
    probs, cache = _forward_batch(m, feats, speeds, want_cache=True)
    n = len(batch)
    loss = float(-np.sum(onehot * np.log(np.clip(probs, 1e-12, None))) / n)

    grads = {}
    dlogits = (probs - onehot) / n                     # softmax+CE fused
    grads["w3"] = cache["a2"].T @ dlogits
    grads["b3"] = dlogits.sum(axis=0)
    da2 = dlogits @ m.w3.T
    dz2 = da2 * selu_grad(cache["z2"])
    grads["w2"] = cache["a1"].T @ dz2
    grads["b2"] = dz2.sum(axis=0)
    da1 = dz2 @ m.w2.T
    dz1 = da1 * selu_grad(cache["z1"])
    grads["w1"] = cache["z0"].T @ dz1
    grads["b1"] = dz1.sum(axis=0)
    dz0 = dz1 @ m.w1.T
    dpool = dz0[:, :-1].reshape(n, N_KERNELS2, POOLED_ROWS)

    dconv2 = np.zeros(cache["conv2_shape"])
    np.put_along_axis(dconv2, cache["arg"][..., None], dpool[..., None], axis=3)
    grads["conv2_w"] = np.einsum("nkxt,nxtuv->kuv", dconv2, cache["sw2"])
    grads["conv2_b"] = dconv2.sum(axis=(0, 2, 3))

    _, _, _, l2 = cache["conv2_shape"]
    l1 = l2 + KERNEL2_SIZE - 1
    dimage = np.zeros((n, N_MAPS, l1))
    for u in range(KERNEL2_SIZE):
        for v in range(KERNEL2_SIZE):
            contrib = np.tensordot(dconv2, m.conv2_w[:, u, v], axes=([1], [0]))
            dimage[:, u:u + POOLED_ROWS, v:v + l2] += contrib
    dmaps = dimage.reshape(n, N_FEATURES, N_KERNELS1, l1)
    grads["conv1_w"] = np.einsum("nijt,nitw->ijw", dmaps, cache["sw1"])
    grads["conv1_b"] = dmaps.sum(axis=(0, 3))
    return loss, grads


def predict(m: CnnModel, s: SegmentTensor) -> tuple[Material, bool]:
    """Argmax class (lowest index on an exact tie) and event flag."""
    p = forward(m, s)
    cls = CLASS_ORDER[int(np.argmax(p))]
    return cls, cls is not Material.NONE


def accuracy(m: CnnModel, data: list[SegmentTensor]) -> float:
    if not data:
        raise ValueError("empty data")
    feats, speeds, _ = batch_arrays(data)
    probs = _forward_batch(m, feats, speeds)
    pred = probs.argmax(axis=1)
    truth = np.array([s.label_index for s in data])
    return float(np.mean(pred == truth))


def fit_standardization(m: CnnModel, data: list[SegmentTensor]) -> None:
    """Per-dimension feature statistics and speed statistics from training
    data; SELU assumes roughly standardized inputs."""
    stacked = np.concatenate([s.features for s in data], axis=1)
    m.feat_mean = stacked.mean(axis=1)
    m.feat_std = np.maximum(stacked.std(axis=1), 1e-9)
    speeds = np.array([s.speed_mps for s in data])
    m.speed_mean = float(speeds.mean())
    m.speed_std = float(max(speeds.std(), 1e-9))


def train(
    train_data: list[SegmentTensor],
    val_data: list[SegmentTensor],
    cfg: TrainConfig,
    h1: int = 64,
    h2: int = 32,
) -> CnnModel:
    """Mini-batch momentum SGD; returns the model with the best
    validation accuracy seen over the epochs (earliest epoch on ties)."""
    if not train_data:
        raise ValueError("empty training split")
    if len({s.label_index for s in train_data}) < 2:
        raise ValueError("degenerate split: fewer than 2 classes")
    rng = np.random.default_rng(cfg.seed)
    model = init_model(rng, h1=h1, h2=h2)
    fit_standardization(model, train_data)

    velocity = {k: np.zeros_like(v) for k, v in model.params().items()}
    best = model.copy()
    best_acc = accuracy(model, val_data) if val_data else -1.0
    order = np.arange(len(train_data))
    for _ in range(cfg.epochs):
        rng.shuffle(order)
        for lo in range(0, len(order), cfg.batch_size):
            batch = [train_data[i] for i in order[lo:lo + cfg.batch_size]]
            _, grads = backward(model, batch)
            for name, g in grads.items():
                velocity[name] = cfg.momentum * velocity[name] - cfg.learning_rate * g
                getattr(model, name)[...] += velocity[name]
        if val_data:
            acc = accuracy(model, val_data)
            if acc > best_acc:
                best, best_acc = model.copy(), acc
    return best if val_data else model


def save_model(m: CnnModel, path: str | Path) -> None:
    payload = {
        "version": MODEL_VERSION,
        "selu_lambda": SELU_LAMBDA,
        "selu_alpha": SELU_ALPHA,
        "shapes": {k: list(v.shape) for k, v in m.params().items()},
        "params": {k: v.tolist() for k, v in m.params().items()},
        "feat_mean": m.feat_mean.tolist(),
        "feat_std": m.feat_std.tolist(),
        "speed_mean": m.speed_mean,
        "speed_std": m.speed_std,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_model(path: str | Path) -> CnnModel:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported CNN model version: {payload.get('version')!r}")
    params = {k: np.array(v, float) for k, v in payload["params"].items()}
    for k, v in params.items():
        if list(v.shape) != payload["shapes"][k]:
            raise ValueError(f"shape mismatch for parameter {k!r}")
    m = CnnModel(**params)
    m.feat_mean = np.array(payload["feat_mean"], float)
    m.feat_std = np.array(payload["feat_std"], float)
    m.speed_mean = float(payload["speed_mean"])
    m.speed_std = float(payload["speed_std"])
    return m
