"""Batched last-layer representation extraction.

Each phrase is embedded standalone (its own input sequence with special
tokens).  Three representation kinds:

* CLS:  last-layer hidden state at position 0
* LAST: last-layer hidden state at the final non-padding position
* AVG:  mean of the last-layer hidden states over all non-padding positions,
        special tokens included

Mixed precision stays disabled so repeated runs agree to float32 accuracy.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import torch

from phrasecomp.store import EmbeddingRecord, write_store
from phrasecomp.trees import text_key

log = logging.getLogger(__name__)

REP_KINDS = ("CLS", "LAST", "AVG")


@dataclass
class ExtractJob:
    model_id: str
    rep_kinds: tuple
    phrases: list
    batch_size: int = 32
    device: str = "cpu"


@dataclass
class ExtractResult:
    records: dict  # rep_kind -> list of EmbeddingRecord
    skipped: list = field(default_factory=list)  # phrases over the context limit


def load_checkpoint(model_id, device="cpu"):
    from transformers import AutoModel, AutoTokenizer

    tokenizer = AutoTokenizer.from_pretrained(model_id)
    model = AutoModel.from_pretrained(model_id)
    model.to(device)
    model.eval()
    return tokenizer, model


def _dedup(phrases):
    seen = set()
    out = []
    for text in phrases:
        key = text_key(text)
        if key in seen:
            continue
        seen.add(key)
        out.append(text)
    return out


def run_job(job, tokenizer=None, model=None):
    """Extract the requested representations for every unique phrase."""
    for rep in job.rep_kinds:
        if rep not in REP_KINDS:
            raise ValueError(f"unknown rep kind {rep!r}")
    if tokenizer is None or model is None:
        tokenizer, model = load_checkpoint(job.model_id, job.device)
    max_len = getattr(model.config, "max_position_embeddings", None)

    phrases = _dedup(job.phrases)
    records = {rep: [] for rep in job.rep_kinds}
    skipped = []
    torch.set_grad_enabled(False)
    for start in range(0, len(phrases), job.batch_size):
        batch = phrases[start : start + job.batch_size]
        kept = []
        for text in batch:
            n_tokens = len(tokenizer(text)["input_ids"])
            if max_len is not None and n_tokens > max_len:
                skipped.append(text)
                continue
            kept.append(text)
        if not kept:
            continue
        encoded = tokenizer(kept, padding=True, return_tensors="pt").to(job.device)
        hidden = model(**encoded).last_hidden_state  # (n, T, d)
        mask = encoded["attention_mask"]  # (n, T)
        lengths = mask.sum(dim=1)
        for i, text in enumerate(kept):
            n_pos = int(lengths[i])
            states = hidden[i, :n_pos]
            vectors = {}
            if "CLS" in job.rep_kinds:
                vectors["CLS"] = states[0]
            if "LAST" in job.rep_kinds:
                vectors["LAST"] = states[n_pos - 1]
            if "AVG" in job.rep_kinds:
                vectors["AVG"] = states.mean(dim=0)
            for rep, vec in vectors.items():
                records[rep].append(
                    EmbeddingRecord(
                        phrase_id=text_key(text),
                        text=text,
                        model_id=job.model_id,
                        rep_kind=rep,
                        vector=vec.cpu().numpy().astype(np.float32),
                    )
                )
    if skipped:
        log.warning("skipped %d phrases over the model context limit", len(skipped))
    return ExtractResult(records=records, skipped=skipped)


def write_stores(result, out_path, rep_kinds):
    """Write one store file per representation kind.

    A single kind goes exactly to out_path; multiple kinds get the lowercased
    kind inserted before the extension.
    """
    paths = {}
    for rep in rep_kinds:
        if len(rep_kinds) == 1:
            path = out_path
        else:
            stem, dot, ext = out_path.rpartition(".")
            path = f"{stem}.{rep.lower()}{dot}{ext}" if dot else f"{out_path}.{rep.lower()}"
        write_store(result.records[rep], path)
        paths[rep] = path
    return paths
