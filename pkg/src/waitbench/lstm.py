"""Four-layer LSTM with inverted dropout, full-batch backpropagation
through time, and a finite-difference gradient audit.

One cell step, with z = [h_prev, x] concatenated:

    f = sigmoid(z Wf + bf)        forget gate
    i = sigmoid(z Wi + bi)        input gate
    c_tilde = tanh(z Wc + bc)     cell candidate
    o = sigmoid(z Wo + bo)        output gate
    c = f * c_prev + i * c_tilde
    h = o * tanh(c)

Four layers are stacked; an inverted dropout mask (scale 1/(1-rate))
follows each layer, the last one right before the dense head that maps the
final hidden state to a scalar. Training is full-batch squared error with
adaptive-moment updates and global gradient-norm clipping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NonFiniteLoss, ShapeMismatch


@dataclass(frozen=True)
class LstmConfig:
    hidden_size: int = 32
    n_layers: int = 4
    dropout_rate: float = 0.2
    window: int = 4
    epochs: int = 200
    learning_rate: float = 1e-3
    seed: int = 0
    clip_norm: float = 1.0

    def __post_init__(self):
        if self.n_layers != 4:
            raise ConfigError("the stack is fixed at 4 layers")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError("dropout_rate must be in [0,1)")
        if self.window < 1 or self.hidden_size < 1 or self.epochs < 0:
            raise ConfigError("window, hidden_size must be >= 1 and epochs >= 0")


GATES = ("f", "i", "c", "o")


@dataclass
class LayerParams:
    W: dict[str, np.ndarray]  # per gate, (in_dim + hidden, hidden)
    b: dict[str, np.ndarray]  # per gate, (hidden,)

    @property
    def hidden(self) -> int:
        return self.W["f"].shape[1]

    @property
    def in_dim(self) -> int:
        return self.W["f"].shape[0] - self.hidden


@dataclass
class LstmParams:
    layers: tuple[LayerParams, ...]
    head_w: np.ndarray  # (hidden,)
    head_b: float

    def flatten(self) -> np.ndarray:
        parts = []
        for layer in self.layers:
            for g in GATES:
                parts.append(layer.W[g].ravel())
            for g in GATES:
                parts.append(layer.b[g])
        parts.append(self.head_w)
        parts.append(np.array([self.head_b]))
        return np.concatenate(parts)

    def unflatten(self, theta: np.ndarray) -> "LstmParams":
        pos = 0
        layers = []
        for layer in self.layers:
            W = {}
            b = {}
            for g in GATES:
                size = layer.W[g].size
                W[g] = theta[pos : pos + size].reshape(layer.W[g].shape).copy()
                pos += size
            for g in GATES:
                size = layer.b[g].size
                b[g] = theta[pos : pos + size].copy()
                pos += size
            layers.append(LayerParams(W, b))
        H = self.head_w.shape[0]
        head_w = theta[pos : pos + H].copy()
        pos += H
        head_b = float(theta[pos])
        return LstmParams(tuple(layers), head_w, head_b)

    @property
    def n_params(self) -> int:
        return self.flatten().shape[0]

    def head_indices(self) -> np.ndarray:
        n = self.n_params
        H = self.head_w.shape[0]
        return np.arange(n - H - 1, n)

    def dump(self) -> str:
        lines = []
        for li, layer in enumerate(self.layers):
            for g in GATES:
                lines.append(f"layer{li}.W{g} {layer.W[g].ravel().tolist()!r}")
                lines.append(f"layer{li}.b{g} {layer.b[g].tolist()!r}")
        lines.append(f"head.w {self.head_w.tolist()!r}")
        lines.append(f"head.b {self.head_b!r}")
        return "\n".join(lines) + "\n"


def init_params(cfg: LstmConfig, n_features: int, rng: np.random.Generator) -> LstmParams:
    """Uniform(-0.08, 0.08) weights with the forget bias lifted to +1."""
    layers = []
    in_dim = n_features
    H = cfg.hidden_size
    for _ in range(cfg.n_layers):
        W = {g: rng.uniform(-0.08, 0.08, size=(in_dim + H, H)) for g in GATES}
        b = {g: np.zeros(H) for g in GATES}
        b["f"] = b["f"] + 1.0
        layers.append(LayerParams(W, b))
        in_dim = H
    head_w = rng.uniform(-0.08, 0.08, size=H)
    head_b = 0.0
    return LstmParams(tuple(layers), head_w, head_b)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def lstm_cell_forward(x, h_prev, c_prev, layer: LayerParams):
    """One cell step; accepts (B, d) batches or bare vectors."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    h_prev = np.atleast_2d(np.asarray(h_prev, dtype=np.float64))
    c_prev = np.atleast_2d(np.asarray(c_prev, dtype=np.float64))
    H = layer.hidden
    if x.shape[1] != layer.in_dim or h_prev.shape[1] != H or c_prev.shape[1] != H:
        raise ShapeMismatch(
            f"x {x.shape}, h {h_prev.shape}, c {c_prev.shape} vs layer "
            f"(in={layer.in_dim}, hidden={H})"
        )
    z = np.concatenate([h_prev, x], axis=1)
    f = _sigmoid(z @ layer.W["f"] + layer.b["f"])
    i = _sigmoid(z @ layer.W["i"] + layer.b["i"])
    c_tilde = np.tanh(z @ layer.W["c"] + layer.b["c"])
    o = _sigmoid(z @ layer.W["o"] + layer.b["o"])
    # Mathematically the gates live in (0,1) and the candidate in (-1,1);
    # float rounding may touch the boundary under saturation.
    assert np.all((f >= 0) & (f <= 1)) and np.all((i >= 0) & (i <= 1))
    assert np.all((o >= 0) & (o <= 1)) and np.all(np.abs(c_tilde) <= 1)
    c = f * c_prev + i * c_tilde
    h = o * np.tanh(c)
    return h, c


def _layer_forward(x_seq: np.ndarray, layer: LayerParams):
    """Run one layer over (B, T, in_dim); returns h_seq and the cache."""
    B, T, _ = x_seq.shape
    H = layer.hidden
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    cache = []
    h_seq = np.empty((B, T, H))
    for t in range(T):
        z = np.concatenate([h, x_seq[:, t, :]], axis=1)
        f = _sigmoid(z @ layer.W["f"] + layer.b["f"])
        i = _sigmoid(z @ layer.W["i"] + layer.b["i"])
        c_tilde = np.tanh(z @ layer.W["c"] + layer.b["c"])
        o = _sigmoid(z @ layer.W["o"] + layer.b["o"])
        c_new = f * c + i * c_tilde
        tanh_c = np.tanh(c_new)
        h = o * tanh_c
        cache.append((z, f, i, c_tilde, o, c, c_new, tanh_c))
        h_seq[:, t, :] = h
        c = c_new
    return h_seq, cache


def _layer_backward(dh_seq: np.ndarray, layer: LayerParams, cache):
    """BPTT through one layer; returns (grads, dx_seq)."""
    B, T, H = dh_seq.shape
    in_dim = layer.in_dim
    dW = {g: np.zeros_like(layer.W[g]) for g in GATES}
    db = {g: np.zeros_like(layer.b[g]) for g in GATES}
    dx_seq = np.empty((B, T, in_dim))
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    for t in range(T - 1, -1, -1):
        z, f, i, c_tilde, o, c_prev, c_new, tanh_c = cache[t]
        dh = dh_seq[:, t, :] + dh_next
        dc = dc_next + dh * o * (1.0 - tanh_c * tanh_c)
        da = {
            "o": dh * tanh_c * o * (1.0 - o),
            "f": dc * c_prev * f * (1.0 - f),
            "i": dc * c_tilde * i * (1.0 - i),
            "c": dc * i * (1.0 - c_tilde * c_tilde),
        }
        dz = np.zeros((B, z.shape[1]))
        for g in GATES:
            dW[g] += z.T @ da[g]
            db[g] += da[g].sum(axis=0)
            dz += da[g] @ layer.W[g].T
        dh_next = dz[:, :H]
        dc_next = dc * f
        dx_seq[:, t, :] = dz[:, H:]
    return LayerParams(dW, db), dx_seq


def lstm_forward(
    x_seq: np.ndarray,
    params: LstmParams,
    cfg: LstmConfig,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
):
    """Stack forward; (B, T, F) batch or a single (T, F) sequence.

    Train mode draws one inverted-dropout mask per layer output; eval mode
    consumes no randomness. Returns (predictions, cache)."""
    x_seq = np.asarray(x_seq, dtype=np.float64)
    single = x_seq.ndim == 2
    if single:
        x_seq = x_seq[None, :, :]
    if x_seq.ndim != 3:
        raise ShapeMismatch(f"expected (B, T, F) input, got {x_seq.shape}")
    if mode not in ("train", "eval"):
        raise ConfigError(f"mode {mode!r}")
    rate = cfg.dropout_rate if mode == "train" else 0.0
    if rate > 0 and rng is None:
        raise ConfigError("train mode with dropout needs an rng")
    inp = x_seq
    layer_caches = []
    masks = []
    for layer in params.layers:
        h_seq, cache = _layer_forward(inp, layer)
        if rate > 0:
            mask = (rng.random(h_seq.shape) >= rate).astype(np.float64) / (1.0 - rate)
        else:
            mask = None
        layer_caches.append((cache, inp))
        masks.append(mask)
        inp = h_seq if mask is None else h_seq * mask
    final_h = inp[:, -1, :]
    pred = final_h @ params.head_w + params.head_b
    full_cache = (layer_caches, masks, final_h, x_seq.shape)
    if single:
        return float(pred[0]), full_cache
    return pred, full_cache


def lstm_loss(
    params: LstmParams,
    Xs: np.ndarray,
    ys: np.ndarray,
    cfg: LstmConfig,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
) -> float:
    """Mean squared error over the batch, forward pass only."""
    pred, _ = lstm_forward(Xs, params, cfg, mode, rng)
    err = pred - ys
    return float((err @ err) / Xs.shape[0])


def loss_and_grad(
    params: LstmParams,
    Xs: np.ndarray,
    ys: np.ndarray,
    cfg: LstmConfig,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
):
    """Mean squared error over the batch and its gradient."""
    pred, cache = lstm_forward(Xs, params, cfg, mode, rng)
    layer_caches, masks, final_h, _ = cache
    B = Xs.shape[0]
    err = pred - ys
    loss = float((err @ err) / B)
    dpred = 2.0 * err / B
    dhead_w = final_h.T @ dpred
    dhead_b = float(dpred.sum())
    T = Xs.shape[1]
    dh_seq = np.zeros((B, T, params.layers[-1].hidden))
    dh_seq[:, -1, :] = np.outer(dpred, params.head_w)
    grads = [None] * len(params.layers)
    for li in range(len(params.layers) - 1, -1, -1):
        mask = masks[li]
        if mask is not None:
            dh_seq = dh_seq * mask
        cache_l, _ = layer_caches[li]
        grads[li], dx_seq = _layer_backward(dh_seq, params.layers[li], cache_l)
        dh_seq = dx_seq
    gparams = LstmParams(tuple(grads), dhead_w, dhead_b)
    return loss, gparams


def clip_global_norm(g: np.ndarray, max_norm: float) -> np.ndarray:
    norm = float(np.sqrt(g @ g))
    if norm > max_norm:
        return g * (max_norm / norm)
    return g


def make_windows(X: np.ndarray, y: np.ndarray, window: int):
    """Windows of `window` consecutive rows predicting the next row's target.

    Sample t (for t in [window, n)) has inputs X[t-window:t] and target
    y[t]; returns (Xs, ys, t_index)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = X.shape[0]
    if n <= window:
        raise ConfigError(f"need more than window={window} rows, got {n}")
    ts = np.arange(window, n)
    Xs = np.stack([X[t - window : t] for t in ts])
    return Xs, y[ts], ts


@dataclass
class TrainedLstm:
    params: LstmParams
    config: LstmConfig
    loss_curve: np.ndarray  # [0] is the pre-training loss, [-1] the final


def lstm_train(X: np.ndarray, y: np.ndarray, cfg: LstmConfig = LstmConfig()) -> TrainedLstm:
    """Full-batch training of windowed sequences.

    Adaptive-moment updates (beta1 0.9, beta2 0.999, eps 1e-8) on the
    clipped gradient; the recorded curve holds the dropout-free loss at
    the start of every epoch plus the final loss."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] < 2 * cfg.window:
        raise ConfigError(f"need >= {2 * cfg.window} rows, got {X.shape[0]}")
    Xs, ys, _ = make_windows(X, y, cfg.window)
    init_rng = np.random.default_rng([cfg.seed, 0])
    drop_rng = np.random.default_rng([cfg.seed, 1])
    params = init_params(cfg, X.shape[1], init_rng)
    theta = params.flatten()
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    curve = []
    for step in range(1, cfg.epochs + 1):
        cur = params.unflatten(theta)
        eval_loss = lstm_loss(cur, Xs, ys, cfg)
        if not math.isfinite(eval_loss):
            raise NonFiniteLoss(f"epoch {step - 1}: loss {eval_loss}")
        curve.append(eval_loss)
        mode = "train" if cfg.dropout_rate > 0 else "eval"
        _, gparams = loss_and_grad(cur, Xs, ys, cfg, mode=mode, rng=drop_rng)
        g = clip_global_norm(gparams.flatten(), cfg.clip_norm)
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        mhat = m / (1 - beta1**step)
        vhat = v / (1 - beta2**step)
        theta = theta - cfg.learning_rate * mhat / (np.sqrt(vhat) + eps)
    final = params.unflatten(theta)
    final_loss = lstm_loss(final, Xs, ys, cfg)
    if not math.isfinite(final_loss):
        raise NonFiniteLoss(f"final loss {final_loss}")
    curve.append(final_loss)
    return TrainedLstm(final, cfg, np.asarray(curve))


def lstm_predict(model: TrainedLstm, Xs: np.ndarray) -> np.ndarray:
    """Eval-mode predictions for a (B, window, F) batch."""
    pred, _ = lstm_forward(Xs, model.params, model.config, mode="eval")
    return np.asarray(pred)


def central_difference(fn, x: float, eps: float) -> float:
    return (fn(x + eps) - fn(x - eps)) / (2.0 * eps)


def gradient_check(
    params: LstmParams,
    Xs: np.ndarray,
    ys: np.ndarray,
    cfg: LstmConfig,
    eps: float = 1e-5,
    n_samples: int = 200,
    rng: np.random.Generator | None = None,
    indices: np.ndarray | None = None,
) -> float:
    """Max relative error between analytic and central-difference gradients
    over sampled parameter indices; dropout must be disabled."""
    if cfg.dropout_rate != 0.0:
        raise ConfigError("gradient_check requires dropout_rate = 0")
    theta = params.flatten()
    _, gparams = loss_and_grad(params, Xs, ys, cfg, mode="eval")
    analytic = gparams.flatten()
    if indices is None:
        rng = rng or np.random.default_rng(0)
        k = min(n_samples, theta.shape[0])
        indices = rng.choice(theta.shape[0], size=k, replace=False)

    def loss_at(j: int, val: float) -> float:
        t2 = theta.copy()
        t2[j] = val
        return lstm_loss(params.unflatten(t2), Xs, ys, cfg)

    worst = 0.0
    for j in indices:
        num = central_difference(lambda val: loss_at(int(j), val), float(theta[j]), eps)
        a = float(analytic[j])
        rel = abs(a - num) / max(abs(a), abs(num), 1e-8)
        worst = max(worst, rel)
    return worst
