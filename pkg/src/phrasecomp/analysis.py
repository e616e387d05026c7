"""Aggregation of compositionality scores against tree types, named entities,
phrase features and human judgments."""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import EmptyTest, FormatError, NotFound, TooSmall
from .evaluation import cosine_similarity
from .stats import holm_bonferroni, spearman
from .trees import text_key

DECLINED = "NA"


@dataclass
class AnnotationRecord:
    phrase_id: str
    annotator_id: str
    compositionality: Optional[int]  # None = declined
    left_contrib: int
    right_contrib: int
    is_idiom: bool
    pair_id: str


ANNOTATION_COLUMNS = (
    "phrase_id",
    "annotator_id",
    "comp",
    "left_contrib",
    "right_contrib",
    "is_idiom",
    "pair_id",
)


def read_annotations(path):
    """Load annotation rows from TSV; `NA` marks a declined judgment."""
    records = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if tuple(header) != ANNOTATION_COLUMNS:
            raise FormatError(f"unexpected annotation header: {header}")
        for line in fh:
            if not line.strip():
                continue
            f = line.rstrip("\n").split("\t")
            if len(f) != len(ANNOTATION_COLUMNS):
                raise FormatError(f"bad annotation row: {line!r}")
            comp = None if f[2] == DECLINED else int(f[2])
            if comp is not None and comp not in (1, 2, 3):
                raise FormatError(f"compositionality must be 1-3 or NA, got {f[2]!r}")
            records.append(
                AnnotationRecord(
                    phrase_id=f[0],
                    annotator_id=f[1],
                    compositionality=comp,
                    left_contrib=int(f[3]),
                    right_contrib=int(f[4]),
                    is_idiom=f[5].lower() in ("1", "true", "yes"),
                    pair_id=f[6],
                )
            )
    return records


def read_ne_labels(path):
    """Load a phrase_id -> entity_type map from TSV (headerless or headered)."""
    labels = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            f = line.rstrip("\n").split("\t")
            if f[0] == "phrase_id":
                continue
            if len(f) != 2:
                raise FormatError(f"bad NE label row: {line!r}")
            labels[f[0]] = f[1]
    return labels


def group_scores_by_tree_type(scores):
    """Mean reconstruction error per tree type, highest mean distance first."""
    if not scores:
        raise EmptyTest("no scores to group")
    groups = {}
    for rec in scores:
        if rec.flagged:
            continue
        groups.setdefault(rec.tree_type, []).append(rec.cosine_distance)
    rows = []
    for tree_type, dists in groups.items():
        arr = np.asarray(dists)
        rows.append(
            {
                "tree_type": tree_type,
                "mean_distance": float(arr.mean()),
                "count": int(arr.size),
                "std": float(arr.std()),
            }
        )
    rows.sort(key=lambda r: (-r["mean_distance"], r["tree_type"]))
    return rows


def aggregate_human(annotations):
    """Mean compositionality judgment per phrase; declined responses excluded."""
    sums, counts = {}, {}
    for rec in annotations:
        if rec.compositionality is None:
            continue
        sums[rec.phrase_id] = sums.get(rec.phrase_id, 0.0) + rec.compositionality
        counts[rec.phrase_id] = counts.get(rec.phrase_id, 0) + 1
    return {pid: sums[pid] / counts[pid] for pid in sums}


def human_model_correlation(human, score_sets, seed=0):
    """Spearman of human vs. model scores per family, Holm-corrected jointly.

    `score_sets` is a list of (family_name, scores) pairs; returns a list of
    (family_name, CorrelationResult) in the same order.
    """
    results = []
    for name, scores in score_sets:
        xs, ys = [], []
        for rec in scores:
            if rec.flagged or rec.phrase_id not in human:
                continue
            xs.append(human[rec.phrase_id])
            ys.append(rec.cosine_score)
        if len(xs) < 3:
            raise TooSmall(f"family {name!r} overlaps on only {len(xs)} phrases")
        results.append((name, spearman(xs, ys, seed=seed)))
    adjusted = holm_bonferroni([res.p_raw for _, res in results])
    for (_, res), adj in zip(results, adjusted):
        res.p_adjusted = adj
    return results


def _contribution_means(annotations):
    acc = {}
    for rec in annotations:
        if rec.compositionality is None:
            continue
        left, right, n = acc.get(rec.phrase_id, (0.0, 0.0, 0))
        acc[rec.phrase_id] = (left + rec.left_contrib, right + rec.right_contrib, n + 1)
    return {pid: (l / n, r / n) for pid, (l, r, n) in acc.items() if n > 0}


def subphrase_contribution_test(annotations, store, catalog):
    """Fraction of phrases where the child humans rate higher is the child
    closer (in cosine) to the parent representation.

    Eligible phrases have unequal mean left/right contributions; model
    distance ties count as incorrect.
    """
    contribs = _contribution_means(annotations)
    by_id = {rec.phrase_id: rec for rec in catalog.records}
    eligible = 0
    correct = 0
    for pid, (left_mean, right_mean) in contribs.items():
        if left_mean == right_mean or pid not in by_id:
            continue
        rec = by_id[pid]
        keys = (text_key(rec.parent_text), text_key(rec.left_text), text_key(rec.right_text))
        if any(k not in store for k in keys):
            continue
        x = store.vectors[keys[0]]
        dist_left = 1.0 - cosine_similarity(x, store.vectors[keys[1]])
        dist_right = 1.0 - cosine_similarity(x, store.vectors[keys[2]])
        eligible += 1
        if dist_left == dist_right:
            continue
        model_favors_left = dist_left < dist_right
        humans_favor_left = left_mean > right_mean
        if model_favors_left == humans_favor_left:
            correct += 1
    if eligible == 0:
        raise EmptyTest("no phrase has unequal contributions plus embeddings")
    return correct / eligible


def idiomaticity_test(annotations, scores):
    """Fraction of idiom/match pairs where the model also scores the idiom
    as less compositional; eligible pairs are those humans rate that way."""
    human = aggregate_human(annotations)
    model = {rec.phrase_id: rec.cosine_score for rec in scores if not rec.flagged}
    pairs = {}
    for rec in annotations:
        if not rec.pair_id:
            continue
        slot = pairs.setdefault(rec.pair_id, {})
        slot["idiom" if rec.is_idiom else "match"] = rec.phrase_id
    eligible = 0
    correct = 0
    for pair in pairs.values():
        idiom, match = pair.get("idiom"), pair.get("match")
        if idiom is None or match is None:
            continue
        if idiom not in human or match not in human:
            continue
        if not human[idiom] < human[match]:
            continue
        if idiom not in model or match not in model:
            continue
        eligible += 1
        if model[idiom] < model[match]:
            correct += 1
    if eligible == 0:
        raise EmptyTest("no eligible idiom/match pairs")
    return correct / eligible


def feature_correlation(scores, feature, source=None, seed=0):
    """Spearman of a per-phrase feature against the compositionality score.

    feature "word_length" uses parent_len; "log_frequency" reads counts from
    an n-gram index via the catalog in `source` = (catalog, index).
    """
    xs, ys = [], []
    if feature == "word_length":
        for rec in scores:
            if rec.flagged:
                continue
            xs.append(rec.parent_len)
            ys.append(rec.cosine_score)
    elif feature == "log_frequency":
        catalog, index = source
        by_id = {rec.phrase_id: rec for rec in catalog.records}
        for rec in scores:
            if rec.flagged or rec.phrase_id not in by_id:
                continue
            surface = by_id[rec.phrase_id].parent_text
            count = index.total_count(surface)
            if count is None:
                continue
            xs.append(math.log10(count))
            ys.append(rec.cosine_score)
    else:
        raise NotFound(f"unknown feature {feature!r}")
    if not xs:
        raise EmptyTest(f"no phrase has a {feature} value")
    if len(xs) < 3:
        raise TooSmall(f"only {len(xs)} phrases have a {feature} value")
    return spearman(xs, ys, seed=seed)


def ne_split(scores, ne_labels):
    """Score distributions for named entities vs. the rest, plus per type."""
    groups = {"ne": [], "non_ne": []}
    by_type = {}
    for rec in scores:
        if rec.flagged:
            continue
        etype = ne_labels.get(rec.phrase_id)
        if etype is None:
            groups["non_ne"].append(rec.cosine_score)
        else:
            groups["ne"].append(rec.cosine_score)
            by_type.setdefault(etype, []).append(rec.cosine_score)

    def describe(vals):
        arr = np.asarray(vals, dtype=np.float64)
        if arr.size == 0:
            return {"count": 0, "mean": None, "histogram": []}
        hist, edges = np.histogram(arr, bins=10, range=(-1.0, 1.0))
        return {
            "count": int(arr.size),
            "mean": float(arr.mean()),
            "histogram": [
                {"lo": float(lo), "hi": float(hi), "count": int(c)}
                for lo, hi, c in zip(edges[:-1], edges[1:], hist)
            ],
        }

    out = {"ne": describe(groups["ne"]), "non_ne": describe(groups["non_ne"]), "by_type": {}}
    for etype in sorted(by_type):
        out["by_type"][etype] = describe(by_type[etype])
    return out
