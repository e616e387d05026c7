"""Compositionality scoring, anisotropy-corrected error ratios and MDL curves."""

from dataclasses import dataclass, field

import numpy as np

from .errors import CurveTooShort, DegenerateControl, TooSmall, ZeroVector
from .probes import (
    ARITHMETIC_KINDS,
    _cosine_rows,
    apply_probe,
    fold_indices,
    init_probe,
    mean_cosine_similarity,
    train_probe,
)

DEFAULT_FRACTIONS = (0.00005, 0.0001, 0.001, 0.005, 0.01, 0.1, 1.0)


@dataclass
class ScoreRecord:
    phrase_id: str
    tree_type: str
    cosine_score: float
    cosine_distance: float
    parent_len: int
    flagged: bool = False


@dataclass
class LearningCurve:
    fractions: list
    test_scores: list
    probe_kind: str
    skipped_fractions: list = field(default_factory=list)


def cosine_similarity(u, v):
    """Plain cosine similarity; raises ZeroVector on a zero-norm argument."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine similarity undefined for zero vector")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def score_phrases(probe, triples):
    """Per-phrase compositionality scores (cosine of prediction vs. parent).

    Zero-norm rows come back flagged with NaN scores rather than aborting.
    """
    pred = apply_probe(probe, triples.left, triples.right)
    records = []
    lens = triples.parent_lens or [0] * len(triples)
    for i in range(len(triples)):
        try:
            score = cosine_similarity(pred[i], triples.parent[i])
            flagged = False
        except ZeroVector:
            score = float("nan")
            flagged = True
        records.append(
            ScoreRecord(
                phrase_id=triples.phrase_ids[i],
                tree_type=triples.tree_types[i],
                cosine_score=score,
                cosine_distance=1.0 - score,
                parent_len=lens[i],
                flagged=flagged,
            )
        )
    return records


def score_summary(records):
    vals = np.array([r.cosine_score for r in records if not r.flagged])
    return {"n": int(vals.size), "mean": float(np.mean(vals)), "std": float(np.std(vals))}


def control_error_ratio(probe_or_predictions, triples, seed):
    """Probe error relative to predicting a random stored parent embedding.

    dist_probe is the mean cosine distance of the predictions to the true
    parents; dist_control the mean distance of the same predictions to
    parents resampled uniformly per row (own parent excluded).
    """
    n = len(triples)
    if n < 2:
        raise TooSmall("need at least 2 rows for a control")
    if isinstance(probe_or_predictions, np.ndarray):
        pred = probe_or_predictions
    else:
        pred = apply_probe(probe_or_predictions, triples.left, triples.right)
    dist_probe = float(np.mean(1.0 - _cosine_rows(pred, triples.parent)))
    rng = np.random.default_rng(seed)
    # Uniform over the other n-1 parents: draw in [0, n-1) and shift past self.
    draw = rng.integers(0, n - 1, size=n)
    draw = np.where(draw >= np.arange(n), draw + 1, draw)
    dist_control = float(np.mean(1.0 - _cosine_rows(pred, triples.parent[draw])))
    if dist_control == 0.0:
        raise DegenerateControl("control distance is zero")
    return dist_probe / dist_control


def learning_curve(kind, triples, cfg, fractions=DEFAULT_FRACTIONS, folds=10):
    """Test score as a function of training-set fraction (first fold's split).

    Each fraction retrains from scratch with the same seed and init on that
    prefix of the shuffled train split.  Fractions yielding zero train rows
    are skipped and recorded.
    """
    train_idx, test_idx, dev_idx = fold_indices(len(triples), folds, cfg.seed)[0]
    test = triples.subset(test_idx)
    dev = triples.subset(dev_idx)
    used, scores, skipped = [], [], []
    for frac in fractions:
        n_train = int(round(frac * len(train_idx)))
        if n_train < 1:
            skipped.append(frac)
            continue
        if kind in ARITHMETIC_KINDS:
            probe = init_probe(kind, triples.dim)
        else:
            probe = train_probe(kind, triples.subset(train_idx[:n_train]), dev, cfg)
        used.append(frac)
        scores.append(mean_cosine_similarity(probe, test))
    if len(used) < 2:
        raise CurveTooShort(f"only {len(used)} usable fractions")
    return LearningCurve(fractions=used, test_scores=scores, probe_kind=kind, skipped_fractions=skipped)


def curve_auc(curve):
    """Trapezoidal AUC over log10(fraction), normalized to the log range, x100.

    A constant curve at c therefore has AUC = 100 c.
    """
    if len(curve.fractions) < 2:
        raise CurveTooShort("need at least 2 curve points")
    xs = np.log10(np.asarray(curve.fractions, dtype=np.float64))
    ys = np.asarray(curve.test_scores, dtype=np.float64)
    if np.any(np.diff(xs) <= 0):
        raise CurveTooShort("fractions must be strictly increasing")
    area = np.trapezoid(ys, xs) if hasattr(np, "trapezoid") else np.trapz(ys, xs)
    return float(100.0 * area / (xs[-1] - xs[0]))
