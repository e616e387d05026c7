"""Persistent phrase-embedding stores and aligned triple assembly.

Two interchangeable on-disk formats:

* binary: magic ``CTE1``, u32 dim, u32 count, length-prefixed model_id and
  rep_kind, then per record a length-prefixed key and dim little-endian
  float32 values.  Bit-exact round trips, O(1) lookup after load.
* JSON lines: one object per line with keys id, text, model, rep, vector.
"""

import hashlib
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DimError, DuplicateError, EmptyDataset, FormatError, NotFound
from .trees import text_key

MAGIC = b"CTE1"
REP_KINDS = ("CLS", "LAST", "AVG")


@dataclass
class EmbeddingRecord:
    phrase_id: str
    text: str
    model_id: str
    rep_kind: str
    vector: np.ndarray


@dataclass
class EmbeddingStore:
    """In-memory handle over one (model, rep_kind) embedding table."""

    model_id: str
    rep_kind: str
    dim: int
    vectors: dict = field(default_factory=dict)
    texts: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.vectors)

    def lookup(self, key):
        try:
            return self.vectors[key]
        except KeyError:
            raise NotFound(f"no vector for key {key!r}") from None

    def lookup_text(self, text):
        return self.lookup(text_key(text))

    def __contains__(self, key):
        return key in self.vectors

    def has_text(self, text):
        return text_key(text) in self.vectors

    def checksum(self):
        h = hashlib.sha256()
        for key in sorted(self.vectors):
            h.update(key.encode("utf-8"))
            h.update(np.asarray(self.vectors[key], dtype="<f4").tobytes())
        return h.hexdigest()


@dataclass
class TripleMatrix:
    """Aligned (parent, left, right) rows for probe training and scoring."""

    parent: np.ndarray
    left: np.ndarray
    right: np.ndarray
    phrase_ids: list
    tree_types: list
    parent_lens: list = field(default_factory=list)
    skipped: int = 0

    def __len__(self):
        return self.parent.shape[0]

    @property
    def dim(self):
        return self.parent.shape[1]

    def subset(self, idx):
        idx = np.asarray(idx)
        return TripleMatrix(
            parent=self.parent[idx],
            left=self.left[idx],
            right=self.right[idx],
            phrase_ids=[self.phrase_ids[i] for i in idx],
            tree_types=[self.tree_types[i] for i in idx],
            parent_lens=[self.parent_lens[i] for i in idx] if self.parent_lens else [],
        )


def _check_records(records):
    if not records:
        raise EmptyDataset("no records to write")
    first = records[0]
    dim = len(first.vector)
    seen = set()
    for rec in records:
        if len(rec.vector) != dim:
            raise DimError(f"vector of dim {len(rec.vector)} in a dim-{dim} store")
        if rec.model_id != first.model_id or rec.rep_kind != first.rep_kind:
            raise DimError("records mix model_id or rep_kind")
        if rec.phrase_id in seen:
            raise DuplicateError(f"duplicate key {rec.phrase_id!r}")
        seen.add(rec.phrase_id)
    return dim


def _pack_str(s):
    raw = s.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


def write_store(records, path):
    """Write records in the binary format; all must share dim/model/rep."""
    dim = _check_records(records)
    first = records[0]
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", dim, len(records)))
        fh.write(_pack_str(first.model_id))
        fh.write(_pack_str(first.rep_kind))
        for rec in records:
            fh.write(_pack_str(rec.phrase_id))
            fh.write(np.asarray(rec.vector, dtype="<f4").tobytes())


def write_store_jsonl(records, path):
    """Write records in the JSON-lines mirror format."""
    _check_records(records)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(
                json.dumps(
                    {
                        "id": rec.phrase_id,
                        "text": rec.text,
                        "model": rec.model_id,
                        "rep": rec.rep_kind,
                        "vector": [float(x) for x in np.asarray(rec.vector, dtype=np.float32)],
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_store(path):
    """Open a store file (binary or JSON-lines, sniffed by magic bytes)."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == MAGIC:
        return _read_binary(path)
    if magic.lstrip()[:1] == b"{":
        return _read_jsonl(path)
    raise FormatError(f"{path}: neither a binary store nor JSON lines")


def _read_exact(fh, n):
    data = fh.read(n)
    if len(data) != n:
        raise FormatError("truncated store file")
    return data


def _read_str(fh):
    (length,) = struct.unpack("<I", _read_exact(fh, 4))
    return _read_exact(fh, length).decode("utf-8")


def _read_binary(path):
    with open(path, "rb") as fh:
        if _read_exact(fh, 4) != MAGIC:
            raise FormatError("bad magic bytes")
        dim, count = struct.unpack("<II", _read_exact(fh, 8))
        model_id = _read_str(fh)
        rep_kind = _read_str(fh)
        store = EmbeddingStore(model_id=model_id, rep_kind=rep_kind, dim=dim)
        for _ in range(count):
            key = _read_str(fh)
            vec = np.frombuffer(_read_exact(fh, 4 * dim), dtype="<f4").copy()
            if key in store.vectors:
                raise DuplicateError(f"duplicate key {key!r}")
            store.vectors[key] = vec
    return store


def _read_jsonl(path):
    store = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                key, vec = obj["id"], np.asarray(obj["vector"], dtype=np.float32)
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise FormatError(f"bad store line {lineno}: {exc}") from exc
            if store is None:
                store = EmbeddingStore(
                    model_id=obj.get("model", ""), rep_kind=obj.get("rep", ""), dim=len(vec)
                )
            if len(vec) != store.dim:
                raise DimError(f"line {lineno}: dim {len(vec)} in a dim-{store.dim} store")
            if key in store.vectors:
                raise DuplicateError(f"duplicate key {key!r}")
            store.vectors[key] = vec
            if "text" in obj:
                store.texts[key] = obj["text"]
    if store is None:
        raise FormatError("empty store file")
    return store


def assemble_triples(catalog, store):
    """Align (parent, left, right) vectors for every catalog record.

    Records missing any of the three vectors are skipped and counted.
    """
    parents, lefts, rights = [], [], []
    ids, types, lens = [], [], []
    skipped = 0
    for rec in catalog.records:
        keys = (text_key(rec.parent_text), text_key(rec.left_text), text_key(rec.right_text))
        if any(k not in store for k in keys):
            skipped += 1
            continue
        parents.append(store.vectors[keys[0]])
        lefts.append(store.vectors[keys[1]])
        rights.append(store.vectors[keys[2]])
        ids.append(rec.phrase_id)
        types.append(rec.tree_type)
        lens.append(rec.parent_len)
    if not parents:
        raise EmptyDataset("no catalog record has all three vectors in the store")
    return TripleMatrix(
        parent=np.vstack(parents).astype(np.float64),
        left=np.vstack(lefts).astype(np.float64),
        right=np.vstack(rights).astype(np.float64),
        phrase_ids=ids,
        tree_types=types,
        parent_lens=lens,
        skipped=skipped,
    )
