"""Approximative probes predicting a parent embedding from its children.

Six probe kinds: three arithmetic (ADD, W1, W2) and three learned (LIN, AFF,
MLP).  Learned probes are fit by mini-batch Adam under mean cosine distance,
with early stopping on a dev split.  Training is fully deterministic given
the seed.
"""

import struct
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimError, EmptyDataset, NotTrainable, TooSmall

ARITHMETIC_KINDS = ("ADD", "W1", "W2")
LEARNED_KINDS = ("LIN", "AFF", "MLP")
PROBE_KINDS = ARITHMETIC_KINDS + LEARNED_KINDS

MLP_H1 = 300
MLP_H2 = 768


@dataclass
class ProbeModel:
    kind: str
    dim: int
    alpha1: float = 0.0
    alpha2: float = 0.0
    beta: Optional[np.ndarray] = None
    mlp_weights: Optional[dict] = None


@dataclass
class TrainConfig:
    batch_size: int = 512
    learning_rate: float = 0.512
    max_epochs: int = 20
    patience: int = 2
    seed: int = 0
    train_fraction: float = 1.0


@dataclass
class FoldResult:
    fold_index: int
    probe: ProbeModel
    test_mean_cosine: float
    dev_curve: list = field(default_factory=list)


def init_probe(kind, dim, seed=0):
    """Deterministic initial parameters for a probe of the given kind."""
    if kind in ARITHMETIC_KINDS:
        return ProbeModel(kind=kind, dim=dim)
    if kind == "LIN":
        return ProbeModel(kind=kind, dim=dim, alpha1=0.5, alpha2=0.5)
    if kind == "AFF":
        return ProbeModel(kind=kind, dim=dim, alpha1=0.5, alpha2=0.5, beta=np.zeros(dim))
    if kind == "MLP":
        rng = np.random.default_rng(seed)

        def layer(n_out, n_in):
            bound = 1.0 / np.sqrt(n_in)
            return rng.uniform(-bound, bound, size=(n_out, n_in))

        weights = {
            "W1": layer(MLP_H1, 2 * dim),
            "b1": np.zeros(MLP_H1),
            "W2": layer(MLP_H2, MLP_H1),
            "b2": np.zeros(MLP_H2),
            "W3": layer(dim, MLP_H2),
            "b3": np.zeros(dim),
        }
        return ProbeModel(kind=kind, dim=dim, mlp_weights=weights)
    raise ValueError(f"unknown probe kind {kind!r}")


def apply_probe(probe, a, b):
    """Apply a probe to child vectors; accepts single vectors or (n, d) batches."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.shape[-1] != probe.dim:
        raise DimError(f"expected dim {probe.dim}, got {a.shape} and {b.shape}")
    if probe.kind == "ADD":
        return a + b
    if probe.kind == "W1":
        return a.copy()
    if probe.kind == "W2":
        return b.copy()
    if probe.kind == "LIN":
        return probe.alpha1 * a + probe.alpha2 * b
    if probe.kind == "AFF":
        return probe.alpha1 * a + probe.alpha2 * b + probe.beta
    if probe.kind == "MLP":
        w = probe.mlp_weights
        x = np.concatenate([a, b], axis=-1)
        h1 = np.maximum(x @ w["W1"].T + w["b1"], 0.0)
        h2 = np.maximum(h1 @ w["W2"].T + w["b2"], 0.0)
        return h2 @ w["W3"].T + w["b3"]
    raise ValueError(f"unknown probe kind {probe.kind!r}")


def _cosine_rows(pred, target, eps=1e-12):
    pn = np.linalg.norm(pred, axis=1)
    tn = np.linalg.norm(target, axis=1)
    denom = np.maximum(pn * tn, eps)
    return np.sum(pred * target, axis=1) / denom


def mean_cosine_distance(probe, triples):
    pred = apply_probe(probe, triples.left, triples.right)
    return float(np.mean(1.0 - _cosine_rows(pred, triples.parent)))


def mean_cosine_similarity(probe, triples):
    pred = apply_probe(probe, triples.left, triples.right)
    return float(np.mean(_cosine_rows(pred, triples.parent)))


def _cosine_grad(pred, target, eps=1e-12):
    """Gradient of mean(1 - cos(pred, target)) w.r.t. pred; shape (n, d)."""
    n = pred.shape[0]
    pn = np.maximum(np.linalg.norm(pred, axis=1, keepdims=True), eps)
    tn = np.maximum(np.linalg.norm(target, axis=1, keepdims=True), eps)
    cos = np.sum(pred * target, axis=1, keepdims=True) / (pn * tn)
    # d cos/d pred = target/(|p||t|) - cos * pred/|p|^2
    dcos = target / (pn * tn) - cos * pred / (pn * pn)
    return -dcos / n


class _Adam:
    """Plain Adam over a flat list of ndarray parameters."""

    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            mhat = m / (1 - b1**self.t)
            vhat = v / (1 - b2**self.t)
            p -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


def _probe_params(probe):
    if probe.kind == "LIN":
        return [np.array([probe.alpha1]), np.array([probe.alpha2])]
    if probe.kind == "AFF":
        return [np.array([probe.alpha1]), np.array([probe.alpha2]), probe.beta.copy()]
    w = probe.mlp_weights
    return [w[k].copy() for k in ("W1", "b1", "W2", "b2", "W3", "b3")]


def _params_to_probe(kind, dim, params):
    if kind == "LIN":
        return ProbeModel(kind=kind, dim=dim, alpha1=float(params[0][0]), alpha2=float(params[1][0]))
    if kind == "AFF":
        return ProbeModel(
            kind=kind,
            dim=dim,
            alpha1=float(params[0][0]),
            alpha2=float(params[1][0]),
            beta=params[2].copy(),
        )
    keys = ("W1", "b1", "W2", "b2", "W3", "b3")
    return ProbeModel(kind=kind, dim=dim, mlp_weights={k: p.copy() for k, p in zip(keys, params)})


def _grads(kind, params, a, b, target):
    if kind in ("LIN", "AFF"):
        alpha1, alpha2 = params[0][0], params[1][0]
        pred = alpha1 * a + alpha2 * b
        if kind == "AFF":
            pred = pred + params[2]
        g = _cosine_grad(pred, target)
        out = [np.array([np.sum(g * a)]), np.array([np.sum(g * b)])]
        if kind == "AFF":
            out.append(np.sum(g, axis=0))
        return out
    w1, b1, w2, b2, w3, b3 = params
    x = np.concatenate([a, b], axis=1)
    z1 = x @ w1.T + b1
    h1 = np.maximum(z1, 0.0)
    z2 = h1 @ w2.T + b2
    h2 = np.maximum(z2, 0.0)
    pred = h2 @ w3.T + b3
    g = _cosine_grad(pred, target)
    gw3 = g.T @ h2
    gb3 = np.sum(g, axis=0)
    gh2 = (g @ w3) * (z2 > 0)
    gw2 = gh2.T @ h1
    gb2 = np.sum(gh2, axis=0)
    gh1 = (gh2 @ w2) * (z1 > 0)
    gw1 = gh1.T @ x
    gb1 = np.sum(gh1, axis=0)
    return [gw1, gb1, gw2, gb2, gw3, gb3]


def train_probe(kind, triples, dev, cfg):
    """Fit a learned probe; returns the best-dev-loss snapshot.

    Raises NotTrainable for arithmetic kinds and EmptyDataset on no rows.
    """
    if kind in ARITHMETIC_KINDS:
        raise NotTrainable(f"probe kind {kind} has no parameters")
    if kind not in LEARNED_KINDS:
        raise ValueError(f"unknown probe kind {kind!r}")
    if len(triples) == 0:
        raise EmptyDataset("no training rows")
    dim = triples.dim
    rng = np.random.default_rng(cfg.seed)
    probe = init_probe(kind, dim, seed=cfg.seed)
    params = _probe_params(probe)
    opt = _Adam(params, lr=cfg.learning_rate)
    n = len(triples)

    best_dev = np.inf
    best_params = [p.copy() for p in params]
    dev_curve = []
    stale = 0
    for _epoch in range(cfg.max_epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            grads = _grads(kind, params, triples.left[idx], triples.right[idx], triples.parent[idx])
            opt.step(grads)
        snapshot = _params_to_probe(kind, dim, params)
        dev_loss = mean_cosine_distance(snapshot, dev)
        dev_curve.append(dev_loss)
        if dev_loss < best_dev - 1e-6:
            best_dev = dev_loss
            best_params = [p.copy() for p in params]
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break
    best = _params_to_probe(kind, dim, best_params)
    if kind in ("LIN", "AFF"):
        _canonicalize_scale(best, triples)
    best.dev_curve = dev_curve
    return best


def _canonicalize_scale(probe, triples):
    """Fix the scale left free by cosine loss for LIN/AFF probes.

    Cosine distance is invariant to positive rescaling of the prediction, so
    (alpha1, alpha2, beta) are only identified up to a common factor.  Pick
    the factor minimizing squared error to the training targets; the loss is
    unchanged and coefficients become comparable across runs.
    """
    pred = apply_probe(probe, triples.left, triples.right)
    denom = float(np.sum(pred * pred))
    if denom <= 0.0:
        return
    scale = float(np.sum(pred * triples.parent)) / denom
    if scale <= 0.0:
        return
    probe.alpha1 *= scale
    probe.alpha2 *= scale
    if probe.beta is not None:
        probe.beta *= scale


def fold_indices(n, folds, seed):
    """Deterministic shuffled fold layout: per fold (train, test, dev) indices.

    Each fold holds out one of `folds` equal chunks, split into a test half
    and a dev half; test sets are disjoint across folds.
    """
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    chunks = np.array_split(order, folds)
    out = []
    for i in range(folds):
        held = chunks[i]
        half = len(held) // 2
        test, dev = held[:half], held[half:]
        train = np.concatenate([chunks[j] for j in range(folds) if j != i])
        out.append((train, test, dev))
    return out


def crossvalidate(kind, triples, cfg, folds=10):
    """10-fold cross-validation; arithmetic probes skip training."""
    n = len(triples)
    if n < 20:
        raise TooSmall(f"need at least 20 rows, got {n}")
    results = []
    for i, (train_idx, test_idx, dev_idx) in enumerate(fold_indices(n, folds, cfg.seed)):
        test = triples.subset(test_idx)
        if kind in ARITHMETIC_KINDS:
            probe = init_probe(kind, triples.dim)
            dev_curve = []
        else:
            if cfg.train_fraction < 1.0:
                keep = max(1, int(round(cfg.train_fraction * len(train_idx))))
                train_idx = train_idx[:keep]
            probe = train_probe(kind, triples.subset(train_idx), triples.subset(dev_idx), cfg)
            dev_curve = probe.dev_curve
        results.append(
            FoldResult(
                fold_index=i,
                probe=probe,
                test_mean_cosine=mean_cosine_similarity(probe, test),
                dev_curve=dev_curve,
            )
        )
    return results


CHECKPOINT_MAGIC = b"CTP1"


def save_probe(probe, cfg, path):
    """Serialize a probe: header (kind, dim, seed, cfg) + float32 blobs."""
    blobs = []
    if probe.kind == "LIN":
        blobs.append(np.array([probe.alpha1, probe.alpha2]))
    elif probe.kind == "AFF":
        blobs.append(np.array([probe.alpha1, probe.alpha2]))
        blobs.append(probe.beta)
    elif probe.kind == "MLP":
        for k in ("W1", "b1", "W2", "b2", "W3", "b3"):
            blobs.append(probe.mlp_weights[k].ravel())
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        kind = probe.kind.encode("ascii")
        fh.write(struct.pack("<B", len(kind)) + kind)
        fh.write(
            struct.pack(
                "<IqIfIIf",
                probe.dim,
                cfg.seed,
                cfg.batch_size,
                cfg.learning_rate,
                cfg.max_epochs,
                cfg.patience,
                cfg.train_fraction,
            )
        )
        fh.write(struct.pack("<I", len(blobs)))
        for blob in blobs:
            raw = np.asarray(blob, dtype="<f4")
            fh.write(struct.pack("<I", raw.size))
            fh.write(raw.tobytes())


def load_probe(path):
    with open(path, "rb") as fh:
        if fh.read(4) != CHECKPOINT_MAGIC:
            raise DimError("not a probe checkpoint")
        (klen,) = struct.unpack("<B", fh.read(1))
        kind = fh.read(klen).decode("ascii")
        dim, seed, batch, lr, max_epochs, patience, frac = struct.unpack("<IqIfIIf", fh.read(32))
        (nblobs,) = struct.unpack("<I", fh.read(4))
        blobs = []
        for _ in range(nblobs):
            (size,) = struct.unpack("<I", fh.read(4))
            blobs.append(np.frombuffer(fh.read(4 * size), dtype="<f4").astype(np.float64))
    cfg = TrainConfig(
        batch_size=batch,
        learning_rate=lr,
        max_epochs=max_epochs,
        patience=patience,
        seed=seed,
        train_fraction=frac,
    )
    probe = ProbeModel(kind=kind, dim=dim)
    if kind == "LIN":
        probe.alpha1, probe.alpha2 = float(blobs[0][0]), float(blobs[0][1])
    elif kind == "AFF":
        probe.alpha1, probe.alpha2 = float(blobs[0][0]), float(blobs[0][1])
        probe.beta = blobs[1]
    elif kind == "MLP":
        shapes = {
            "W1": (MLP_H1, 2 * dim),
            "b1": (MLP_H1,),
            "W2": (MLP_H2, MLP_H1),
            "b2": (MLP_H2,),
            "W3": (dim, MLP_H2),
            "b3": (dim,),
        }
        probe.mlp_weights = {
            k: blob.reshape(shape) for (k, shape), blob in zip(shapes.items(), blobs)
        }
    return probe, cfg
