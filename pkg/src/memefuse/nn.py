"""Minimal dense-network engine: layers, activations, dropout, losses, Adam.

Everything is float64 in memory and exactly reproducible from a seed.
Losses return both the scalar and the gradient with respect to the
predictions so callers can chain their own backward passes.
"""

from dataclasses import dataclass, field

import numpy as np

EPS = 1e-7

ADAM_LR = 1e-3
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class Rng:
    """Seeded counter-based generator (Philox) with deterministic splitting.

    Identical seed gives an identical stream; ``split`` derives an
    independent child stream, so parallel consumers cannot perturb each
    other's draws.
    """

    def __init__(self, seed, _ss=None):
        self.seed = int(seed)
        self._ss = np.random.SeedSequence(self.seed) if _ss is None else _ss
        self._gen = np.random.Generator(np.random.Philox(self._ss))

    def split(self):
        child = self._ss.spawn(1)[0]
        return Rng(self.seed, _ss=child)

    def uniform(self, low, high, size=None):
        return self._gen.uniform(low, high, size)

    def random(self, size=None):
        return self._gen.random(size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def permutation(self, n):
        return self._gen.permutation(n)


@dataclass
class DenseLayer:
    W: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        if self.W.ndim != 2 or self.b.ndim != 1 or self.W.shape[0] != self.b.shape[0]:
            raise ValueError(f"inconsistent layer shapes {self.W.shape}, {self.b.shape}")
        if not (np.isfinite(self.W).all() and np.isfinite(self.b).all()):
            raise ValueError("layer parameters must be finite")

    @property
    def in_dim(self):
        return self.W.shape[1]

    @property
    def out_dim(self):
        return self.W.shape[0]


def init_dense(rng, out_dim, in_dim):
    """Uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases."""
    limit = np.sqrt(6.0 / (in_dim + out_dim))
    W = rng.uniform(-limit, limit, (out_dim, in_dim))
    return DenseLayer(W=W, b=np.zeros(out_dim))


def dense_forward(layer, x):
    """Wx + b; accepts a single vector (in,) or a batch (n, in)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != layer.in_dim:
        raise ValueError(f"input dim {x.shape[-1]} != layer in-dim {layer.in_dim}")
    return x @ layer.W.T + layer.b


def dense_backward(layer, x, grad_out):
    """Gradients of a dense layer given upstream grad_out at its output.

    Returns (grad_x, grad_W, grad_b); handles vector or batch inputs with
    gradients summed over the batch.
    """
    x = np.asarray(x, dtype=np.float64)
    grad_out = np.asarray(grad_out, dtype=np.float64)
    if x.ndim == 1:
        grad_W = np.outer(grad_out, x)
        grad_b = grad_out.copy()
    else:
        grad_W = grad_out.T @ x
        grad_b = grad_out.sum(axis=0)
    grad_x = grad_out @ layer.W
    return grad_x, grad_W, grad_b


def sigmoid(x):
    """Numerically stable elementwise logistic (branch on sign)."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid_backward(y, grad_out):
    """Gradient through sigmoid given its output y."""
    return grad_out * y * (1.0 - y)


def relu(x):
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def relu_backward(x, grad_out):
    """Gradient through relu given its pre-activation input x."""
    return np.where(np.asarray(x) > 0, grad_out, 0.0)


def dropout_mask(rng, shape, p):
    """Inverted-dropout mask: entries are 0 with probability p, else 1/(1-p)."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must be in [0, 1), got {p}")
    if p == 0.0:
        return np.ones(shape, dtype=np.float64)
    keep = rng.random(shape) >= p
    return keep.astype(np.float64) / (1.0 - p)


def dropout(x, p, rng, training):
    """Inverted dropout; identity at inference or p=0."""
    x = np.asarray(x, dtype=np.float64)
    if not training or p == 0.0:
        if not 0.0 <= p < 1.0:
            raise ValueError(f"dropout probability must be in [0, 1), got {p}")
        return x.copy()
    return x * dropout_mask(rng, x.shape, p)


def _clamp(pred):
    pred = np.asarray(pred, dtype=np.float64)
    clamped = np.clip(pred, EPS, 1.0 - EPS)
    interior = (pred > EPS) & (pred < 1.0 - EPS)
    return clamped, interior


def _check_pair(pred, target):
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"pred shape {pred.shape} != target shape {target.shape}")
    return pred, target


def bce_loss(pred, target, weights=None):
    """Mean binary cross-entropy over all entries, with optional per-class
    weights (last-axis length must match).

    Returns (loss, gradient wrt pred).  Predictions are clamped to
    [1e-7, 1-1e-7]; the gradient is zero wherever the clamp binds.
    """
    pred, target = _check_pair(pred, target)
    p, interior = _clamp(pred)
    if weights is None:
        w = 1.0
    else:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (pred.shape[-1],):
            raise ValueError(f"weights shape {w.shape} != ({pred.shape[-1]},)")
        if not (w > 0).all():
            raise ValueError("class weights must be positive")
    n = pred.size
    per = -w * (target * np.log(p) + (1.0 - target) * np.log1p(-p))
    loss = float(per.sum() / n)
    grad = np.where(interior, w * (p - target) / (p * (1.0 - p)) / n, 0.0)
    return loss, grad


def focal_loss(pred, target, alpha=0.25, gamma=2.0):
    """Mean focal loss -alpha*(1-p_t)^gamma*log(p_t) over all entries,
    p_t = p where target=1 and 1-p otherwise.

    With gamma=0 and alpha=1 this reduces to bce_loss.  Returns
    (loss, gradient wrt pred) under the same clamp rules as bce_loss.
    """
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    pred, target = _check_pair(pred, target)
    p, interior = _clamp(pred)
    pt = np.where(target == 1.0, p, 1.0 - p)
    n = pred.size
    one_minus = 1.0 - pt
    per = -alpha * one_minus**gamma * np.log(pt)
    loss = float(per.sum() / n)
    # d/dp_t of the per-entry term, then the sign flip for target=0 entries
    dpt = alpha * gamma * one_minus ** (gamma - 1.0) * np.log(pt) - alpha * one_minus**gamma / pt
    grad = dpt * np.where(target == 1.0, 1.0, -1.0) / n
    grad = np.where(interior, grad, 0.0)
    return loss, grad


@dataclass
class LossSpec:
    kind: str = "bce"
    weights: np.ndarray | None = None
    alpha: float = 0.25
    gamma: float = 2.0

    def __post_init__(self):
        if self.kind not in ("bce", "weighted_bce", "focal"):
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if self.kind == "weighted_bce":
            if self.weights is None:
                raise ValueError("weighted_bce requires weights")
            self.weights = np.asarray(self.weights, dtype=np.float64)
            if not (self.weights > 0).all():
                raise ValueError("class weights must be positive")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")

    def __call__(self, pred, target):
        if self.kind == "bce":
            return bce_loss(pred, target)
        if self.kind == "weighted_bce":
            return bce_loss(pred, target, weights=self.weights)
        return focal_loss(pred, target, alpha=self.alpha, gamma=self.gamma)


@dataclass
class AdamState:
    lr: float = ADAM_LR
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params, grads, state):
    """One bias-corrected Adam update over a dict of named parameter arrays.

    Mutates params and state in place and returns them; missing accumulator
    slots are zero-initialized on first use.
    """
    state.t += 1
    b1t = 1.0 - state.beta1**state.t
    b2t = 1.0 - state.beta2**state.t
    for name, p in params.items():
        g = np.asarray(grads[name], dtype=np.float64)
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} != param shape {p.shape} for {name!r}")
        if name not in state.m:
            state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * (m / b1t) / (np.sqrt(v / b2t) + state.eps)
    return params, state
