"""Toolkit for measuring how compositionally language models represent phrases.

Pipeline: harvest binary subphrases from constituency treebanks, pair them
with phrase embeddings, fit approximative probes predicting parent vectors
from child vectors, then score and analyze deviation from the best-fit
composition function.
"""

__version__ = "0.1.0"
