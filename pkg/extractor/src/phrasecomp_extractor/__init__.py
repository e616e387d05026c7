"""Embedding extraction from pretrained transformer checkpoints.

Runs each phrase standalone through a checkpoint and writes CLS / LAST / AVG
last-layer vectors in the phrase-embedding store format.
"""

__version__ = "0.1.0"
