"""A small recurrent sequence model, written out by hand.

One scalar-in scalar-out recurrent cell per (metric, batch) slice:

    f = sigmoid(Wf x + Uf h + bf)       forget gate
    i = sigmoid(Wi x + Ui h + bi)       input gate
    o = sigmoid(Wo x + Uo h + bo)       output gate
    g = relu(Wg x + Ug h + bg)          candidate
    c = f * c_prev + i * g
    h = o * relu(c)
    y = Wy h + by

Supervision is next-value prediction: each window of `lookback` values is
one training example whose target is the value right after the window.
Training minimizes the mean squared error of those final predictions by
full-batch gradient descent with Adam. Windows are independent, each run
from zero hidden and cell state. Gradients are exact backpropagation
through time; `fd_gradient_oracle` is a second, slower route for checking
them numerically.

Weight shapes: Wf,Wi,Wo,Wg are (1,H); Uf,Ui,Uo,Ug are (H,H) applied as
h @ U; biases are (H,); the head is Wy (H,1), by (1,). Serialized records
store each array flattened row-major, in PARAM_ORDER.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .model import BatchId, MetricId
from .resample import NormParams, UniformSeries, fit_norm, normalize

PARAM_ORDER = ["Wf", "Uf", "bf", "Wi", "Ui", "bi", "Wo", "Uo", "bo",
               "Wg", "Ug", "bg", "Wy", "by"]

Weights = dict[str, np.ndarray]


@dataclass(frozen=True)
class TrainConfig:
    hidden_size: int = 32
    lookback: int = 16
    max_epochs: int = 200
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    patience: int = 10
    min_delta: float = 1e-6
    seed: int = 0

    def __post_init__(self) -> None:
        if self.hidden_size < 1:
            raise ValueError(f"hidden_size must be >= 1, got {self.hidden_size}")
        if self.lookback < 1:
            raise ValueError(f"lookback must be >= 1, got {self.lookback}")
        if self.max_epochs < 1:
            raise ValueError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.patience < 1:
            raise ValueError(f"patience must be >= 1, got {self.patience}")


@dataclass
class ModelRecord:
    """A trained model plus everything needed to reproduce or apply it."""

    metric: MetricId
    batch: BatchId
    config: TrainConfig
    norm: NormParams
    weights: Weights
    loss_history: list[float] = field(default_factory=list)
    stopped_epoch: int = 0
    best_epoch: int = 0
    best_loss: float = math.inf

    @property
    def lookback(self) -> int:
        return self.config.lookback


def param_shapes(hidden_size: int) -> dict[str, tuple[int, ...]]:
    h = hidden_size
    shapes: dict[str, tuple[int, ...]] = {}
    for gate in "fiog":
        shapes[f"W{gate}"] = (1, h)
        shapes[f"U{gate}"] = (h, h)
        shapes[f"b{gate}"] = (h,)
    shapes["Wy"] = (h, 1)
    shapes["by"] = (1,)
    return shapes


def init_weights(hidden_size: int, rng: np.random.Generator) -> Weights:
    """Uniform(-1/sqrt(H), 1/sqrt(H)) everywhere, then forget bias set to 1."""
    scale = 1.0 / math.sqrt(hidden_size)
    shapes = param_shapes(hidden_size)
    weights = {name: rng.uniform(-scale, scale, size=shapes[name]) for name in PARAM_ORDER}
    weights["bf"] = np.ones_like(weights["bf"])
    return weights


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def lstm_step(weights: Weights, x: float, h_prev: np.ndarray,
              c_prev: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """One cell update for a single scalar input; returns (h, c, y)."""
    h, c, y = _forward_step(weights, np.array([[x]], dtype=np.float64),
                            h_prev[None, :], c_prev[None, :])[:3]
    return h[0], c[0], float(y[0, 0])


def _forward_step(weights: Weights, xt: np.ndarray, h: np.ndarray,
                  c: np.ndarray) -> tuple:
    """Batched cell update; xt is (B, 1), h and c are (B, H)."""
    f = _sigmoid(xt @ weights["Wf"] + h @ weights["Uf"] + weights["bf"])
    i = _sigmoid(xt @ weights["Wi"] + h @ weights["Ui"] + weights["bi"])
    o = _sigmoid(xt @ weights["Wo"] + h @ weights["Uo"] + weights["bo"])
    g = _relu(xt @ weights["Wg"] + h @ weights["Ug"] + weights["bg"])
    c_new = f * c + i * g
    hc = _relu(c_new)
    h_new = o * hc
    y = h_new @ weights["Wy"] + weights["by"]
    return h_new, c_new, y, (f, i, o, g, hc)


def forward_last(weights: Weights, features: np.ndarray) -> tuple[np.ndarray, list[tuple]]:
    """Run every window from zero state; return final-step predictions.

    features has shape (B, L). The returned caches hold the per-step
    intermediates the backward pass needs.
    """
    if features.ndim != 2:
        raise ValueError(f"expected (windows, lookback) features, got shape {features.shape}")
    batch, steps = features.shape
    hidden = weights["bf"].size
    h = np.zeros((batch, hidden))
    c = np.zeros((batch, hidden))
    caches: list[tuple] = []
    y = np.zeros((batch, 1))
    for t in range(steps):
        xt = features[:, t:t + 1]
        h_new, c_new, y, (f, i, o, g, hc) = _forward_step(weights, xt, h, c)
        caches.append((xt, h, c, f, i, o, g, c_new, hc, h_new))
        h, c = h_new, c_new
    return y[:, 0], caches


def predict_window(weights: Weights, window: np.ndarray, lookback: int) -> float:
    """Next-value prediction from exactly `lookback` trailing values."""
    vs = np.asarray(window, dtype=np.float64)
    if vs.shape != (lookback,):
        raise ValueError(f"window must have shape ({lookback},), got {vs.shape}")
    predictions, _ = forward_last(weights, vs[None, :])
    return float(predictions[0])


def mse(predictions: np.ndarray, targets: np.ndarray) -> float:
    p = np.asarray(predictions, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if p.shape != t.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {t.shape}")
    if p.size == 0:
        raise ValueError("mse of empty vectors is undefined")
    return float(np.mean((p - t) ** 2))


def make_supervised(values: np.ndarray, lookback: int) -> tuple[np.ndarray, np.ndarray]:
    """Windows and next-value targets: features[k] = v[k:k+L], targets[k] = v[k+L]."""
    vs = np.asarray(values, dtype=np.float64)
    if vs.ndim != 1:
        raise ValueError("values must be 1-D")
    count = vs.size - lookback
    if count < 1:
        raise ValueError(
            f"series of length {vs.size} is too short for lookback {lookback} "
            f"(need at least {lookback + 1} samples)")
    features = np.empty((count, lookback))
    for k in range(count):
        features[k] = vs[k:k + lookback]
    targets = vs[lookback:].copy()
    return features, targets


def loss_only(weights: Weights, features: np.ndarray, targets: np.ndarray) -> float:
    predictions, _ = forward_last(weights, features)
    return mse(predictions, targets)


def bptt_gradients(weights: Weights, features: np.ndarray,
                   targets: np.ndarray) -> tuple[float, Weights]:
    """Exact full-batch gradients of the final-prediction MSE."""
    predictions, caches = forward_last(weights, features)
    loss = mse(predictions, targets)
    # Only the last step carries loss; earlier steps matter through the
    # recurrent state alone.
    d_last = (2.0 * (predictions - targets) / predictions.size)[:, None]

    grads = {name: np.zeros_like(weights[name]) for name in PARAM_ORDER}
    dh_next = np.zeros_like(caches[0][1])
    dc_next = np.zeros_like(caches[0][2])
    for t in range(len(caches) - 1, -1, -1):
        xt, h_prev, c_prev, f, i, o, g, c_new, hc, h_new = caches[t]
        if t == len(caches) - 1:
            grads["Wy"] += h_new.T @ d_last
            grads["by"] += d_last.sum(axis=0)
            dh = d_last @ weights["Wy"].T + dh_next
        else:
            dh = dh_next

        do = dh * hc
        dzo = do * o * (1.0 - o)
        dc = dh * o * (c_new > 0) + dc_next

        df = dc * c_prev
        dzf = df * f * (1.0 - f)
        di = dc * g
        dzi = di * i * (1.0 - i)
        dg = dc * i
        dzg = dg * (g > 0)

        for gate, dz in (("f", dzf), ("i", dzi), ("o", dzo), ("g", dzg)):
            grads[f"W{gate}"] += xt.T @ dz
            grads[f"U{gate}"] += h_prev.T @ dz
            grads[f"b{gate}"] += dz.sum(axis=0)

        dh_next = (dzf @ weights["Uf"].T + dzi @ weights["Ui"].T
                   + dzo @ weights["Uo"].T + dzg @ weights["Ug"].T)
        dc_next = dc * f
    return loss, grads


def kink_margin(weights: Weights, features: np.ndarray) -> float:
    """Smallest distance of any relu argument from zero over a forward run.

    Finite differences are only trustworthy where the loss is locally
    smooth; a perturbation that flips a relu's sign makes the numeric
    estimate diverge from the exact (sub)gradient. Gradient checks should
    reject evaluation points whose margin is within a couple of orders of
    magnitude of the difference step. Arguments that are exactly zero are
    ignored: they sit on dead paths that a small perturbation cannot move.
    """
    batch, steps = features.shape
    hidden = weights["bf"].size
    h = np.zeros((batch, hidden))
    c = np.zeros((batch, hidden))
    margin = math.inf
    for t in range(steps):
        xt = features[:, t:t + 1]
        zg = xt @ weights["Wg"] + h @ weights["Ug"] + weights["bg"]
        nonzero = np.abs(zg[zg != 0.0])
        if nonzero.size:
            margin = min(margin, float(nonzero.min()))
        h, c = _forward_step(weights, xt, h, c)[:2]
        nonzero = np.abs(c[c != 0.0])
        if nonzero.size:
            margin = min(margin, float(nonzero.min()))
    return margin


def fd_gradient_oracle(weights: Weights, features: np.ndarray, targets: np.ndarray,
                       step: float = 1e-5) -> Weights:
    """Central finite differences on the loss, one parameter entry at a time.

    Slow by construction; exists as an independent route against which the
    analytic gradients can be compared.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    grads = {name: np.zeros_like(weights[name]) for name in PARAM_ORDER}
    for name in PARAM_ORDER:
        flat = weights[name].reshape(-1)
        out = grads[name].reshape(-1)
        for k in range(flat.size):
            kept = flat[k]
            flat[k] = kept + step
            hi = loss_only(weights, features, targets)
            flat[k] = kept - step
            lo = loss_only(weights, features, targets)
            flat[k] = kept
            out[k] = (hi - lo) / (2.0 * step)
    return grads


# ---------------------------------------------------------------------------
# optimization

@dataclass
class AdamState:
    m: Weights
    v: Weights


def adam_init(weights: Weights) -> AdamState:
    return AdamState(
        m={name: np.zeros_like(weights[name]) for name in PARAM_ORDER},
        v={name: np.zeros_like(weights[name]) for name in PARAM_ORDER},
    )


def adam_step(weights: Weights, grads: Weights, state: AdamState, t: int,
              cfg: TrainConfig) -> None:
    """Canonical bias-corrected update, applied in place. t counts from 1."""
    if t < 1:
        raise ValueError(f"step index must be >= 1, got {t}")
    for name in PARAM_ORDER:
        state.m[name] = cfg.beta1 * state.m[name] + (1.0 - cfg.beta1) * grads[name]
        state.v[name] = cfg.beta2 * state.v[name] + (1.0 - cfg.beta2) * grads[name] ** 2
        m_hat = state.m[name] / (1.0 - cfg.beta1 ** t)
        v_hat = state.v[name] / (1.0 - cfg.beta2 ** t)
        weights[name] -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.eps)


# ---------------------------------------------------------------------------
# training

def train_many(metric: MetricId, batch: BatchId, value_arrays: list[np.ndarray],
               cfg: TrainConfig) -> ModelRecord:
    """Train one model on the pooled windows of every series in a slice.

    `value_arrays` hold physical-unit uniform values, one array per log in
    the (metric, batch) group. A single normalization is fitted over all of
    them and stored on the record so generation can map outputs back.
    Early stopping watches the pre-update epoch loss; the weights returned
    are the ones from the best epoch seen.
    """
    if not value_arrays:
        raise ValueError(f"no series to train on for ({metric!r}, {batch!r})")
    arrays = [np.asarray(a, dtype=np.float64) for a in value_arrays]
    norm = fit_norm(np.concatenate(arrays))
    supervised = [make_supervised(normalize(a, norm), cfg.lookback) for a in arrays]
    features = np.concatenate([part[0] for part in supervised], axis=0)
    targets = np.concatenate([part[1] for part in supervised], axis=0)
    if features.shape[0] < 2:
        raise ValueError(
            f"({metric!r}, {batch!r}) yields only {features.shape[0]} training "
            f"window(s); need at least 2")

    rng = np.random.default_rng(cfg.seed)
    weights = init_weights(cfg.hidden_size, rng)
    adam = adam_init(weights)

    history: list[float] = []
    best_loss = math.inf
    best_epoch = 0
    best_weights = copy.deepcopy(weights)
    wait = 0
    for epoch in range(1, cfg.max_epochs + 1):
        loss, grads = bptt_gradients(weights, features, targets)
        if not math.isfinite(loss):
            raise ArithmeticError(
                f"training diverged for ({metric!r}, {batch!r}) at epoch {epoch}: "
                f"loss is {loss!r}")
        history.append(loss)
        if best_loss - loss >= cfg.min_delta:
            best_loss = loss
            best_epoch = epoch
            best_weights = copy.deepcopy(weights)
            wait = 0
        else:
            wait += 1
            if wait >= cfg.patience:
                break
        adam_step(weights, grads, adam, epoch, cfg)

    return ModelRecord(metric=metric, batch=batch, config=cfg, norm=norm,
                       weights=best_weights, loss_history=history,
                       stopped_epoch=len(history), best_epoch=best_epoch,
                       best_loss=best_loss)


def train(u: UniformSeries, cfg: TrainConfig, batch: BatchId = "default") -> ModelRecord:
    """Single-series convenience wrapper around train_many."""
    if len(u) < cfg.lookback + 2:
        raise ValueError(
            f"series of length {len(u)} is too short for lookback {cfg.lookback} "
            f"(need at least {cfg.lookback + 2} samples)")
    return train_many(u.metric, batch, [u.values], cfg)


# ---------------------------------------------------------------------------
# serialization

def record_to_json(record: ModelRecord) -> str:
    """ModelRecord -> JSON text; floats survive the round trip bit for bit."""
    shapes = param_shapes(record.config.hidden_size)
    for name in PARAM_ORDER:
        if record.weights[name].shape != shapes[name]:
            raise ValueError(
                f"weight {name!r} has shape {record.weights[name].shape}, "
                f"expected {shapes[name]}")
    obj = {
        "metric": record.metric,
        "batch": record.batch,
        "config": asdict(record.config),
        "norm": {"lo": record.norm.lo, "hi": record.norm.hi},
        "loss_history": record.loss_history,
        "stopped_epoch": record.stopped_epoch,
        "best_epoch": record.best_epoch,
        "best_loss": record.best_loss,
        "weights": {name: record.weights[name].reshape(-1).tolist()
                    for name in PARAM_ORDER},
    }
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def record_from_json(text: str) -> ModelRecord:
    obj = json.loads(text)
    cfg = TrainConfig(**obj["config"])
    shapes = param_shapes(cfg.hidden_size)
    weights: Weights = {}
    for name in PARAM_ORDER:
        flat = np.asarray(obj["weights"][name], dtype=np.float64)
        expected = int(np.prod(shapes[name]))
        if flat.size != expected:
            raise ValueError(f"weight {name!r} has {flat.size} entries, expected {expected}")
        weights[name] = flat.reshape(shapes[name])
    return ModelRecord(
        metric=obj["metric"], batch=obj["batch"], config=cfg,
        norm=NormParams(float(obj["norm"]["lo"]), float(obj["norm"]["hi"])),
        weights=weights,
        loss_history=[float(v) for v in obj["loss_history"]],
        stopped_epoch=int(obj["stopped_epoch"]),
        best_epoch=int(obj["best_epoch"]), best_loss=float(obj["best_loss"]))
