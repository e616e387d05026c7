import numpy as np
import pytest

from conftest import affine_triples, make_triples
from phrasecomp import evaluation
from phrasecomp.errors import CurveTooShort, DegenerateControl, TooSmall, ZeroVector
from phrasecomp.evaluation import (
    LearningCurve,
    control_error_ratio,
    cosine_similarity,
    curve_auc,
    learning_curve,
    score_phrases,
)
from phrasecomp.probes import TrainConfig, init_probe


def test_cosine_basic():
    assert cosine_similarity([1.0, 0.0], [1.0, 0.0]) == 1.0
    assert cosine_similarity([1.0, 0.0], [0.0, 1.0]) == 0.0


def test_cosine_zero_vector():
    with pytest.raises(ZeroVector):
        cosine_similarity([0.0, 0.0], [1.0, 0.0])


def test_cosine_symmetry_and_scale_invariance():
    rng = np.random.default_rng(0)
    for _ in range(50):
        u, v = rng.normal(size=6), rng.normal(size=6)
        s = float(rng.uniform(0.1, 100))
        assert abs(cosine_similarity(u, v) - cosine_similarity(v, u)) < 1e-12
        assert abs(cosine_similarity(u * s, v) - cosine_similarity(u, v)) < 1e-12


def test_score_phrases_identity_oracle():
    triples, _ = affine_triples(n=50, d=8, seed=0)
    oracle = make_triples(triples.parent, triples.parent, triples.parent)
    probe = init_probe("W1", 8)
    records = score_phrases(probe, oracle)
    assert all(abs(r.cosine_score - 1.0) < 1e-12 for r in records)
    assert all(abs(r.cosine_distance) < 1e-12 for r in records)


def test_score_phrases_orthogonal_construction():
    # Hand-built orthogonal complements in d=4: predictions live on axes the
    # targets never touch.
    parent = np.array([[1.0, 0, 0, 0], [0, 1.0, 0, 0], [1.0, 1.0, 0, 0]])
    pred_source = np.array([[0, 0, 1.0, 0], [0, 0, 0, 1.0], [0, 0, 1.0, 1.0]])
    triples = make_triples(parent, pred_source, np.zeros_like(parent))
    records = score_phrases(init_probe("W1", 4), triples)
    assert all(abs(r.cosine_score) < 1e-12 for r in records)


def test_score_phrases_flags_zero_rows():
    parent = np.array([[1.0, 0.0], [1.0, 1.0]])
    left = np.array([[0.0, 0.0], [1.0, 0.0]])
    triples = make_triples(parent, left, np.zeros_like(parent))
    records = score_phrases(init_probe("W1", 2), triples)
    assert records[0].flagged
    assert np.isnan(records[0].cosine_score)
    assert not records[1].flagged


def test_control_ratio_oracle_probe_is_zero():
    # Exact predictions of distinct anisotropic parents: numerator 0.
    rng = np.random.default_rng(1)
    parent = rng.normal(size=(50, 8)) + 10.0
    triples = make_triples(parent, parent, np.zeros_like(parent))
    assert control_error_ratio(init_probe("W1", 8), triples, seed=0) <= 1e-12


def test_control_ratio_symmetric_construction():
    # Predictions orthogonal to every stored parent: distance 1 to the truth
    # and to any resampled control target, so the ratio is exactly 1.
    n = 40
    parent = np.zeros((n, 4))
    parent[:, 0] = 1.0
    parent[:, 1] = np.arange(n) + 1.0
    pred = np.zeros((n, 4))
    pred[:, 2] = 1.0
    parent[:, 1] = 0.0  # identical parents: any control target equals the truth
    triples = make_triples(parent, pred, np.zeros_like(parent))
    ratio = control_error_ratio(init_probe("W1", 4), triples, seed=3)
    assert abs(ratio - 1.0) < 1e-12


def test_control_ratio_random_baseline_near_one():
    # A fixed random stored embedding as the prediction for every row.
    rng = np.random.default_rng(7)
    n, d = 5000, 16
    parent = rng.normal(size=(n, d)) + rng.normal(size=d) * 3.0  # anisotropic cloud
    pred = np.tile(parent[rng.integers(n)], (n, 1))
    triples = make_triples(parent, pred, np.zeros_like(parent))
    ratio = control_error_ratio(init_probe("W1", d), triples, seed=11)
    assert abs(ratio - 1.0) <= 0.05


def test_control_ratio_too_small():
    triples, _ = affine_triples(n=1, d=4, seed=0)
    with pytest.raises(TooSmall):
        control_error_ratio(init_probe("ADD", 4), triples, seed=0)


def test_control_ratio_degenerate():
    parent = np.tile([1.0, 0.0], (5, 1))
    triples = make_triples(parent, parent, np.zeros_like(parent))
    with pytest.raises(DegenerateControl):
        control_error_ratio(init_probe("W1", 2), triples, seed=0)


def test_auc_constant_curve():
    curve = LearningCurve(
        fractions=list(evaluation.DEFAULT_FRACTIONS), test_scores=[0.95] * 7, probe_kind="ADD"
    )
    assert curve_auc(curve) == pytest.approx(95.0, abs=1e-12)


def test_auc_two_point_trapezoid():
    curve = LearningCurve(fractions=[0.01, 1.0], test_scores=[0.8, 1.0], probe_kind="AFF")
    assert curve_auc(curve) == pytest.approx(90.0, abs=1e-12)


def test_auc_within_bounds():
    rng = np.random.default_rng(3)
    for _ in range(25):
        k = int(rng.integers(2, 8))
        fractions = np.sort(rng.uniform(1e-5, 1.0, size=k))
        while len(np.unique(fractions)) < k:
            fractions = np.sort(rng.uniform(1e-5, 1.0, size=k))
        scores = rng.uniform(-1, 1, size=k)
        curve = LearningCurve(fractions=fractions.tolist(), test_scores=scores.tolist(), probe_kind="LIN")
        auc = curve_auc(curve)
        assert 100 * scores.min() - 1e-9 <= auc <= 100 * scores.max() + 1e-9


def test_learning_curve_shapes_and_skips():
    triples, _ = affine_triples(n=400, d=8, seed=5)
    cfg = TrainConfig(seed=2)
    curve = learning_curve("AFF", triples, cfg)
    # 360 train rows: the three smallest default fractions round to zero rows.
    assert curve.skipped_fractions == [0.00005, 0.0001, 0.001]
    assert len(curve.fractions) == len(curve.test_scores) == 4
    assert curve.test_scores[-1] > 0.99


def test_learning_curve_deterministic():
    triples, _ = affine_triples(n=300, d=8, seed=8)
    cfg = TrainConfig(seed=4)
    c1 = learning_curve("AFF", triples, cfg, fractions=(0.1, 1.0))
    c2 = learning_curve("AFF", triples, cfg, fractions=(0.1, 1.0))
    assert c1.test_scores == c2.test_scores


def test_learning_curve_too_short():
    triples, _ = affine_triples(n=300, d=8, seed=8)
    with pytest.raises(CurveTooShort):
        learning_curve("AFF", triples, TrainConfig(seed=0), fractions=(0.000001, 1.0))
