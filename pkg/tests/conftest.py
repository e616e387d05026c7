import numpy as np
import pytest

from phrasecomp.store import TripleMatrix


def make_triples(parent, left, right):
    n = parent.shape[0]
    return TripleMatrix(
        parent=np.asarray(parent, dtype=np.float64),
        left=np.asarray(left, dtype=np.float64),
        right=np.asarray(right, dtype=np.float64),
        phrase_ids=[f"p{i:05d}" for i in range(n)],
        tree_types=["A → B C" if i % 2 == 0 else "X → Y Z" for i in range(n)],
        parent_lens=[2 + i % 5 for i in range(n)],
    )


def affine_triples(n=2000, d=32, alpha1=3.0, alpha2=5.0, beta_scale=2.0, noise=0.0, seed=42):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, d))
    b = rng.normal(size=(n, d))
    beta = rng.normal(size=d) * beta_scale
    parent = alpha1 * a + alpha2 * b + beta
    if noise:
        parent = parent + rng.normal(size=(n, d)) * noise
    return make_triples(parent, a, b), beta


@pytest.fixture
def small_affine():
    triples, beta = affine_triples(n=400, d=16, seed=3)
    return triples
