"""Four fusion topologies over (T, H, I) feature bundles.

Concat feeds the raw [T;I] concatenation to the classifier head.  Early
projects [T;H;I] through a learned affine + ReLU before the head.  Late
runs separate text and image branches to 22 logits each and blends them
with a learned per-class convex gate.  MFAS composes two sigmoid fusion
blocks F' = sig(A[T;H]+a), F = sig(B[T;F';I]+b) and feeds F to the head.

The classifier head is dense(768)+ReLU+dropout, dense(384)+ReLU+dropout,
dense(22)+sigmoid; widths are configurable so exhaustive gradient checks
stay cheap.  All forward passes record the activations needed for an
exact backward pass.
"""

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .archive import FeatureBundle
from .nn import (
    LossSpec,
    AdamState,
    Rng,
    adam_step,
    dropout_mask,
    init_dense,
    relu,
    relu_backward,
    sigmoid,
    sigmoid_backward,
)

N_CLASSES = 22
TOPOLOGIES = ("Concat", "Early", "Late", "MFAS")
_ALIASES = {t.lower(): t for t in TOPOLOGIES}

CHECKPOINT_MAGIC = b"MFNET01"


class CheckpointError(ValueError):
    pass


def canonical_topology(tag):
    try:
        return _ALIASES[str(tag).lower()]
    except KeyError:
        raise ValueError(
            f"unknown topology {tag!r}; valid: {', '.join(TOPOLOGIES)}"
        ) from None


@dataclass
class FusionModel:
    topology: str
    dims: tuple
    head_hidden: tuple
    fusion_dim: int
    mfas_hidden: int
    branch_hidden: int
    dropout_p: float
    seed: int
    params: dict
    step: int = 0


def _manifest(topology, dims, head_hidden, fusion_dim, mfas_hidden, branch_hidden):
    """Dense layers in data-flow order as (name, out_dim, in_dim)."""
    d_t, d_h, d_i = dims
    layers = []
    if topology == "Concat":
        head_in = d_t + d_i
    elif topology == "Early":
        layers.append(("early.proj", fusion_dim, d_t + d_h + d_i))
        head_in = fusion_dim
    elif topology == "MFAS":
        layers.append(("mfas.f1", mfas_hidden, d_t + d_h))
        layers.append(("mfas.f2", fusion_dim, d_t + mfas_hidden + d_i))
        head_in = fusion_dim
    elif topology == "Late":
        layers.append(("late.text.l1", branch_hidden, d_t))
        layers.append(("late.text.out", N_CLASSES, branch_hidden))
        layers.append(("late.img.l1", branch_hidden, d_h + d_i))
        layers.append(("late.img.out", N_CLASSES, branch_hidden))
        return layers
    else:
        raise ValueError(f"unknown topology {topology!r}")
    h1, h2 = head_hidden
    layers.append(("head.l1", h1, head_in))
    layers.append(("head.l2", h2, h1))
    layers.append(("head.out", N_CLASSES, h2))
    return layers


def build(
    topology,
    dims,
    rng,
    head_hidden=(768, 384),
    fusion_dim=512,
    mfas_hidden=512,
    branch_hidden=256,
    dropout_p=0.2,
):
    """Initialize a FusionModel; same seed and config give identical
    parameters."""
    tag = canonical_topology(topology)
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3 or any(d < 1 for d in dims):
        raise ValueError(f"dims must be three positive integers, got {dims}")
    head_hidden = tuple(int(h) for h in head_hidden)
    if len(head_hidden) != 2 or any(h < 1 for h in head_hidden):
        raise ValueError(f"head_hidden must be two positive widths, got {head_hidden}")
    for label, width in (
        ("fusion_dim", fusion_dim),
        ("mfas_hidden", mfas_hidden),
        ("branch_hidden", branch_hidden),
    ):
        if int(width) < 1:
            raise ValueError(f"{label} must be positive, got {width}")
    if not 0.0 <= dropout_p < 1.0:
        raise ValueError(f"dropout_p must be in [0, 1), got {dropout_p}")

    params = {}
    for name, out_dim, in_dim in _manifest(
        tag, dims, head_hidden, fusion_dim, mfas_hidden, branch_hidden
    ):
        layer = init_dense(rng, out_dim, in_dim)
        params[f"{name}.W"] = layer.W
        params[f"{name}.b"] = layer.b
    if tag == "Late":
        params["late.gate"] = np.zeros(N_CLASSES)
    return FusionModel(
        topology=tag,
        dims=dims,
        head_hidden=head_hidden,
        fusion_dim=int(fusion_dim),
        mfas_hidden=int(mfas_hidden),
        branch_hidden=int(branch_hidden),
        dropout_p=float(dropout_p),
        seed=rng.seed,
        params=params,
        step=0,
    )


def _as_batch(a, dim, label):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[None, :]
    if a.ndim != 2 or a.shape[1] != dim:
        raise ValueError(f"{label} has shape {a.shape}, expected (n, {dim})")
    return a


def _head_forward(model, x, training, rng):
    p = model.params
    drop = model.dropout_p if training else 0.0
    c = {"x": x}
    c["z1"] = x @ p["head.l1.W"].T + p["head.l1.b"]
    a1 = relu(c["z1"])
    c["m1"] = dropout_mask(rng, a1.shape, drop) if drop > 0 else 1.0
    c["d1"] = a1 * c["m1"]
    c["z2"] = c["d1"] @ p["head.l2.W"].T + p["head.l2.b"]
    a2 = relu(c["z2"])
    c["m2"] = dropout_mask(rng, a2.shape, drop) if drop > 0 else 1.0
    c["d2"] = a2 * c["m2"]
    z3 = c["d2"] @ p["head.out.W"].T + p["head.out.b"]
    c["y"] = sigmoid(z3)
    return c


def _head_backward(model, c, grad_y, grads):
    p = model.params
    g = sigmoid_backward(c["y"], grad_y)
    grads["head.out.W"] = g.T @ c["d2"]
    grads["head.out.b"] = g.sum(axis=0)
    g = g @ p["head.out.W"]
    g = relu_backward(c["z2"], g * c["m2"])
    grads["head.l2.W"] = g.T @ c["d1"]
    grads["head.l2.b"] = g.sum(axis=0)
    g = g @ p["head.l2.W"]
    g = relu_backward(c["z1"], g * c["m1"])
    grads["head.l1.W"] = g.T @ c["x"]
    grads["head.l1.b"] = g.sum(axis=0)
    return g @ p["head.l1.W"]


def forward(model, t, h, i, training=False, rng=None, gate_override=None):
    """Batched forward pass; returns (probabilities (n, 22), cache).

    The cache holds every activation and dropout mask the matching
    backward pass needs.  gate_override pins the Late gate to an exact
    value (tests only; it bypasses the learned gate parameter).
    """
    if training and model.dropout_p > 0 and rng is None:
        raise ValueError("training forward with dropout requires an rng")
    d_t, d_h, d_i = model.dims
    t = _as_batch(t, d_t, "T")
    h = _as_batch(h, d_h, "H")
    i = _as_batch(i, d_i, "I")
    if not (t.shape[0] == h.shape[0] == i.shape[0]):
        raise ValueError("T, H, I batches must have equal length")
    p = model.params
    cache = {"topology": model.topology}

    if model.topology == "Concat":
        cache["head"] = _head_forward(model, np.hstack([t, i]), training, rng)
        return cache["head"]["y"], cache

    if model.topology == "Early":
        x = np.hstack([t, h, i])
        cache["pz"] = x @ p["early.proj.W"].T + p["early.proj.b"]
        cache["px"] = x
        pa = relu(cache["pz"])
        cache["head"] = _head_forward(model, pa, training, rng)
        return cache["head"]["y"], cache

    if model.topology == "MFAS":
        u = np.hstack([t, h])
        cache["u"] = u
        cache["fp"] = sigmoid(u @ p["mfas.f1.W"].T + p["mfas.f1.b"])
        v = np.hstack([t, cache["fp"], i])
        cache["v"] = v
        cache["f"] = sigmoid(v @ p["mfas.f2.W"].T + p["mfas.f2.b"])
        cache["head"] = _head_forward(model, cache["f"], training, rng)
        return cache["head"]["y"], cache

    # Late
    hi = np.hstack([h, i])
    cache["t"] = t
    cache["hi"] = hi
    cache["tz1"] = t @ p["late.text.l1.W"].T + p["late.text.l1.b"]
    ta = relu(cache["tz1"])
    cache["ta"] = ta
    zt = ta @ p["late.text.out.W"].T + p["late.text.out.b"]
    cache["iz1"] = hi @ p["late.img.l1.W"].T + p["late.img.l1.b"]
    ia = relu(cache["iz1"])
    cache["ia"] = ia
    zi = ia @ p["late.img.out.W"].T + p["late.img.out.b"]
    if gate_override is None:
        a = sigmoid(p["late.gate"])
        cache["gate_learned"] = True
    else:
        a = np.broadcast_to(np.asarray(gate_override, dtype=np.float64), (N_CLASSES,))
        cache["gate_learned"] = False
    cache["zt"], cache["zi"], cache["a"] = zt, zi, a
    y = sigmoid(a * zt + (1.0 - a) * zi)
    cache["y"] = y
    return y, cache


def backward(model, cache, grad_y):
    """Exact gradients for every parameter given d(loss)/d(probabilities)."""
    if cache["topology"] != model.topology:
        raise ValueError("cache topology does not match model")
    p = model.params
    grads = {}

    if model.topology == "Concat":
        _head_backward(model, cache["head"], grad_y, grads)
        return grads

    if model.topology == "Early":
        gx = _head_backward(model, cache["head"], grad_y, grads)
        g = relu_backward(cache["pz"], gx)
        grads["early.proj.W"] = g.T @ cache["px"]
        grads["early.proj.b"] = g.sum(axis=0)
        return grads

    if model.topology == "MFAS":
        d_t, _, _ = model.dims
        gf = _head_backward(model, cache["head"], grad_y, grads)
        g2 = sigmoid_backward(cache["f"], gf)
        grads["mfas.f2.W"] = g2.T @ cache["v"]
        grads["mfas.f2.b"] = g2.sum(axis=0)
        gv = g2 @ p["mfas.f2.W"]
        gfp = gv[:, d_t : d_t + model.mfas_hidden]
        g1 = sigmoid_backward(cache["fp"], gfp)
        grads["mfas.f1.W"] = g1.T @ cache["u"]
        grads["mfas.f1.b"] = g1.sum(axis=0)
        return grads

    # Late
    a = cache["a"]
    gs = sigmoid_backward(cache["y"], grad_y)
    gzt = gs * a
    gzi = gs * (1.0 - a)
    if cache["gate_learned"]:
        ga = (gs * (cache["zt"] - cache["zi"])).sum(axis=0)
        grads["late.gate"] = ga * a * (1.0 - a)
    grads["late.text.out.W"] = gzt.T @ cache["ta"]
    grads["late.text.out.b"] = gzt.sum(axis=0)
    g = relu_backward(cache["tz1"], gzt @ p["late.text.out.W"])
    grads["late.text.l1.W"] = g.T @ cache["t"]
    grads["late.text.l1.b"] = g.sum(axis=0)
    grads["late.img.out.W"] = gzi.T @ cache["ia"]
    grads["late.img.out.b"] = gzi.sum(axis=0)
    g = relu_backward(cache["iz1"], gzi @ p["late.img.out.W"])
    grads["late.img.l1.W"] = g.T @ cache["hi"]
    grads["late.img.l1.b"] = g.sum(axis=0)
    return grads


def loss_and_grads(model, t, h, i, targets, loss_spec, training=False, rng=None):
    """Forward + loss + full backward in one call."""
    probs, cache = forward(model, t, h, i, training=training, rng=rng)
    targets = np.asarray(targets, dtype=np.float64)
    if targets.ndim == 1:
        targets = targets[None, :]
    loss, grad_y = loss_spec(probs, targets)
    return loss, backward(model, cache, grad_y)


def _bundle_probs(model, bundle, gate_override=None):
    probs, _ = forward(model, bundle.t, bundle.h, bundle.i, gate_override=gate_override)
    return probs[0]


def forward_concat(model, bundle):
    if model.topology != "Concat":
        raise ValueError(f"model topology is {model.topology}, not Concat")
    return _bundle_probs(model, bundle)


def forward_early(model, bundle):
    if model.topology != "Early":
        raise ValueError(f"model topology is {model.topology}, not Early")
    return _bundle_probs(model, bundle)


def forward_late(model, bundle, gate_override=None):
    if model.topology != "Late":
        raise ValueError(f"model topology is {model.topology}, not Late")
    return _bundle_probs(model, bundle, gate_override=gate_override)


def forward_mfas(model, bundle):
    if model.topology != "MFAS":
        raise ValueError(f"model topology is {model.topology}, not MFAS")
    return _bundle_probs(model, bundle)


def predict(model, bundle, threshold=0.5):
    """LabelVector with bits[c] = 1 iff probability[c] >= threshold."""
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    probs = _bundle_probs(model, bundle)
    return (probs >= threshold).astype(np.uint8)


@dataclass
class TrainConfig:
    loss: LossSpec = field(default_factory=LossSpec)
    lr: float = 1e-3
    batch_size: int = 16
    epochs: int = 30
    seed: int = 0
    threshold: float = 0.5
    patience: int = 5

    def __post_init__(self):
        if self.lr < 0:
            raise ValueError(f"lr must be >= 0, got {self.lr}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError(f"threshold must be in (0, 1], got {self.threshold}")
        if self.patience < 0:
            raise ValueError(f"patience must be >= 0, got {self.patience}")


def _stack_bundles(model, bundles, labels):
    if not bundles:
        raise ValueError("empty dataset")
    if set(bundles) != set(labels):
        only_b = sorted(set(bundles) - set(labels))[:3]
        only_l = sorted(set(labels) - set(bundles))[:3]
        raise ValueError(
            f"bundle/label id mismatch (bundles only: {only_b}, labels only: {only_l})"
        )
    ids = sorted(bundles)
    t = np.stack([bundles[k].t for k in ids]).astype(np.float64)
    h = np.stack([bundles[k].h for k in ids]).astype(np.float64)
    i = np.stack([bundles[k].i for k in ids]).astype(np.float64)
    y = np.stack([np.asarray(labels[k], dtype=np.float64) for k in ids])
    if y.shape[1] != N_CLASSES:
        raise ValueError(f"label vectors must have length {N_CLASSES}")
    return ids, t, h, i, y


def _micro_f1(model, t, h, i, y, threshold):
    probs, _ = forward(model, t, h, i)
    preds = probs >= threshold
    gold = y == 1.0
    tp = np.sum(preds & gold)
    fp = np.sum(preds & ~gold)
    fn = np.sum(~preds & gold)
    denom = 2 * tp + fp + fn
    return float(2 * tp / denom) if denom > 0 else 0.0


def train(model, bundles, labels, config, dev_bundles=None, dev_labels=None):
    """Minibatch Adam training; returns (model, per-epoch history).

    History rows carry the mean train-batch loss and, when a dev split is
    given, dev micro-F1 at config.threshold.  The best-dev parameters are
    restored at the end; patience > 0 stops early after that many epochs
    without dev improvement.
    """
    _, t, h, i, y = _stack_bundles(model, bundles, labels)
    has_dev = dev_bundles is not None and dev_labels is not None
    if has_dev:
        _, dt, dh, di, dy = _stack_bundles(model, dev_bundles, dev_labels)

    rng = Rng(config.seed)
    state = AdamState(lr=config.lr)
    n = t.shape[0]
    history = []
    best_f1 = -1.0
    best_params = None
    best_step = model.step
    stale = 0

    for epoch in range(config.epochs):
        order = rng.permutation(n)
        losses = []
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            loss, grads = loss_and_grads(
                model, t[idx], h[idx], i[idx], y[idx], config.loss,
                training=True, rng=rng,
            )
            adam_step(model.params, grads, state)
            model.step += 1
            losses.append(loss)
        row = {"epoch": epoch, "train_loss": float(np.mean(losses))}
        if has_dev:
            f1 = _micro_f1(model, dt, dh, di, dy, config.threshold)
            row["dev_micro_f1"] = f1
            if f1 > best_f1:
                best_f1 = f1
                best_params = {k: v.copy() for k, v in model.params.items()}
                best_step = model.step
                stale = 0
            else:
                stale += 1
        history.append(row)
        if has_dev and config.patience > 0 and stale >= config.patience:
            break

    if has_dev and best_params is not None:
        model.params = best_params
        model.step = best_step
    return model, history


# ---------------------------------------------------------------------------
# checkpoint file format: 7-byte magic, u32 little-endian header length,
# canonical JSON header, then all parameters as float32 little-endian in
# header-listed order


def write_checkpoint(model, path):
    manifest = [(name, list(model.params[name].shape)) for name in _param_order(model)]
    header = {
        "topology": model.topology,
        "dims": list(model.dims),
        "head_hidden": list(model.head_hidden),
        "fusion_dim": model.fusion_dim,
        "mfas_hidden": model.mfas_hidden,
        "branch_hidden": model.branch_hidden,
        "dropout_p": model.dropout_p,
        "seed": model.seed,
        "step": model.step,
        "params": manifest,
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for name, _ in manifest:
            fh.write(np.ascontiguousarray(model.params[name], dtype="<f4").tobytes())


def _param_order(model):
    names = [
        f"{name}.{suffix}"
        for name, _, _ in _manifest(
            model.topology,
            model.dims,
            model.head_hidden,
            model.fusion_dim,
            model.mfas_hidden,
            model.branch_hidden,
        )
        for suffix in ("W", "b")
    ]
    if model.topology == "Late":
        names.append("late.gate")
    return names


def read_checkpoint(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[: len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: bad magic, not a checkpoint file")
    off = len(CHECKPOINT_MAGIC)
    if len(data) < off + 4:
        raise CheckpointError(f"{path}: truncated header length")
    (hlen,) = struct.unpack_from("<I", data, off)
    off += 4
    if len(data) < off + hlen:
        raise CheckpointError(f"{path}: truncated header")
    try:
        header = json.loads(data[off : off + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: invalid header JSON: {exc}") from exc
    off += hlen

    model = FusionModel(
        topology=canonical_topology(header["topology"]),
        dims=tuple(header["dims"]),
        head_hidden=tuple(header["head_hidden"]),
        fusion_dim=int(header["fusion_dim"]),
        mfas_hidden=int(header["mfas_hidden"]),
        branch_hidden=int(header["branch_hidden"]),
        dropout_p=float(header["dropout_p"]),
        seed=int(header["seed"]),
        params={},
        step=int(header["step"]),
    )
    expected = _param_order(model)
    listed = [name for name, _ in header["params"]]
    if listed != expected:
        raise CheckpointError(f"{path}: parameter manifest does not match topology")
    for name, shape in header["params"]:
        count = int(np.prod(shape))
        nbytes = count * 4
        if len(data) < off + nbytes:
            raise CheckpointError(
                f"{path}: truncated payload at {name!r} "
                f"(need {nbytes} bytes, have {len(data) - off})"
            )
        arr = np.frombuffer(data[off : off + nbytes], dtype="<f4").reshape(shape)
        model.params[name] = arr.astype(np.float64)
        off += nbytes
    if off != len(data):
        raise CheckpointError(f"{path}: {len(data) - off} trailing bytes")
    return model
