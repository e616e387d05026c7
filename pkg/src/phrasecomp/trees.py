"""Constituency tree ingestion, right-factored binarization and subphrase harvesting.

Trees come in as Penn-Treebank-style bracketings.  They are converted to
right-factored Chomsky Normal Form (synthetic nodes labeled
``PARENT|<C1-C2>``), and every internal binary node whose yield is at least
two words becomes one harvested phrase record.
"""

import hashlib
import os
from dataclasses import dataclass, field
from typing import Optional

from .errors import FormatError, ParseError

DEFAULT_NULL_LABELS = frozenset({"-NONE-"})


@dataclass
class ConstituencyTree:
    """An n-ary constituency node; either a preterminal (leaf set) or internal."""

    label: str
    children: list = field(default_factory=list)
    leaf: Optional[str] = None

    def leaves(self):
        if self.leaf is not None:
            return [self.leaf]
        out = []
        for child in self.children:
            out.extend(child.leaves())
        return out

    def __eq__(self, other):
        if not isinstance(other, ConstituencyTree):
            return NotImplemented
        return (
            self.label == other.label
            and self.leaf == other.leaf
            and self.children == other.children
        )


@dataclass
class BinaryTree:
    """A binarized node: leaf, unary wrapper (left only) or binary (left+right)."""

    label: str
    left: Optional["BinaryTree"] = None
    right: Optional["BinaryTree"] = None
    leaf: Optional[str] = None

    def leaves(self):
        if self.leaf is not None:
            return [self.leaf]
        out = []
        if self.left is not None:
            out.extend(self.left.leaves())
        if self.right is not None:
            out.extend(self.right.leaves())
        return out


@dataclass(frozen=True)
class PhraseRecord:
    """One binary parent/left/right phrase harvested from a tree."""

    parent_text: str
    left_text: str
    right_text: str
    tree_type: str
    parent_len: int
    left_len: int
    right_len: int
    source_doc: str
    phrase_id: str


@dataclass
class PhraseCatalog:
    records: list
    tree_type_counts: dict
    length_histogram: dict


def phrase_id(parent_text, left_text, right_text, tree_type):
    """Stable id for a (parent, left, right, production) tuple."""
    key = "\x1f".join((parent_text, left_text, right_text, tree_type))
    return hashlib.sha1(key.encode("utf-8")).hexdigest()[:16]


def text_key(text):
    """Stable id for a bare phrase text; used to key embedding stores."""
    return hashlib.sha1(text.encode("utf-8")).hexdigest()[:16]


def parse_bracketed(text):
    """Parse a single bracketed tree.

    Raises ParseError (with byte offset) on unbalanced parentheses, empty
    input, or trailing content after the root.
    """
    data = text.encode("utf-8")
    pos = 0
    n = len(data)

    def skip_ws(p):
        while p < n and data[p : p + 1].isspace():
            p += 1
        return p

    def read_token(p):
        start = p
        while p < n and not data[p : p + 1].isspace() and data[p : p + 1] not in (b"(", b")"):
            p += 1
        return data[start:p].decode("utf-8"), p

    def parse_node(p):
        p = skip_ws(p)
        if p >= n or data[p : p + 1] != b"(":
            raise ParseError("expected '('", offset=p)
        p = skip_ws(p + 1)
        label, p = read_token(p)
        p = skip_ws(p)
        children = []
        leaf = None
        while True:
            if p >= n:
                raise ParseError("unexpected end of input", offset=p)
            ch = data[p : p + 1]
            if ch == b")":
                p += 1
                break
            if ch == b"(":
                child, p = parse_node(p)
                children.append(child)
            else:
                token, p = read_token(p)
                if leaf is not None or children:
                    # Multi-token terminal content; treat each extra token as
                    # its own leaf child to stay robust to odd inputs.
                    raise ParseError("mixed terminal and nonterminal content", offset=p)
                leaf = token
            p = skip_ws(p)
        if leaf is None and not children:
            raise ParseError("empty node", offset=p)
        return ConstituencyTree(label=label, children=children, leaf=leaf), p

    pos = skip_ws(pos)
    if pos >= n:
        raise ParseError("empty input", offset=pos)
    tree, pos = parse_node(pos)
    pos = skip_ws(pos)
    if pos != n:
        raise ParseError("trailing content after root", offset=pos)
    return tree


def iter_trees(text):
    """Yield successive top-level trees from a PTB-style file body.

    PTB .mrg files wrap each sentence in an extra pair of parens with an
    empty label; such wrappers holding a single child are unwrapped.
    """
    data = text.encode("utf-8")
    n = len(data)
    pos = 0
    while True:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= n:
            return
        depth = 0
        start = pos
        end = None
        for i in range(pos, n):
            ch = data[i : i + 1]
            if ch == b"(":
                depth += 1
            elif ch == b")":
                depth -= 1
                if depth == 0:
                    end = i + 1
                    break
                if depth < 0:
                    raise ParseError("unbalanced ')'", offset=i)
        if end is None:
            raise ParseError("unbalanced '('", offset=n)
        tree = parse_bracketed(data[start:end].decode("utf-8"))
        if tree.label == "" and len(tree.children) == 1:
            tree = tree.children[0]
        yield tree
        pos = end


def to_cnf_right_factored(tree):
    """Convert to right-factored CNF with synthetic ``PARENT|<C1-C2>`` labels."""
    if tree.leaf is not None:
        return BinaryTree(label=tree.label, leaf=tree.leaf)

    def factor(parent_label, children):
        if len(children) == 1:
            return BinaryTree(label=parent_label, left=to_cnf_right_factored(children[0]))
        if len(children) == 2:
            return BinaryTree(
                label=parent_label,
                left=to_cnf_right_factored(children[0]),
                right=to_cnf_right_factored(children[1]),
            )
        rest = children[1:]
        synth = f"{parent_label.split('|')[0]}|<{rest[0].label}-{rest[1].label}>"
        return BinaryTree(
            label=parent_label,
            left=to_cnf_right_factored(children[0]),
            right=factor(synth, rest),
        )

    if len(tree.children) == 1:
        return BinaryTree(label=tree.label, left=to_cnf_right_factored(tree.children[0]))
    return factor(tree.label, list(tree.children))


def collapse_cnf(tree):
    """Invert to_cnf_right_factored; re-inlines synthetic nodes."""
    if tree.leaf is not None:
        return ConstituencyTree(label=tree.label, leaf=tree.leaf)

    def expand(node):
        # Returns the list of original children encoded by this node.
        out = [collapse_cnf(node.left)]
        if node.right is not None:
            if _is_synthetic(node.right.label):
                out.extend(expand(node.right))
            else:
                out.append(collapse_cnf(node.right))
        return out

    if _is_synthetic(tree.label):
        raise FormatError(f"cannot collapse tree rooted at synthetic label {tree.label!r}")
    return ConstituencyTree(label=tree.label, children=expand(tree))


def _is_synthetic(label):
    if "|<" not in label:
        if "|" in label and "<" in label.partition("|")[2]:
            raise FormatError(f"malformed synthetic label {label!r}")
        return False
    if not label.endswith(">"):
        raise FormatError(f"malformed synthetic label {label!r}")
    return True


def prune_nulls(tree, null_labels=DEFAULT_NULL_LABELS):
    """Drop subtrees covering only null elements (e.g. -NONE- traces).

    Binary nodes losing one branch become unary wrappers; nodes losing
    everything are dropped (returns None).
    """
    if tree.leaf is not None:
        return None if tree.label in null_labels else tree
    left = prune_nulls(tree.left, null_labels) if tree.left is not None else None
    right = prune_nulls(tree.right, null_labels) if tree.right is not None else None
    if left is None and right is None:
        return None
    if left is None or right is None:
        return BinaryTree(label=tree.label, left=left if left is not None else right)
    return BinaryTree(label=tree.label, left=left, right=right)


def _normalize(tokens):
    return " ".join(" ".join(tokens).split())


def harvest_subphrases(tree, source_doc, null_labels=DEFAULT_NULL_LABELS):
    """Collect one PhraseRecord per binary node with a >= 2 word yield."""
    pruned = prune_nulls(tree, null_labels)
    if pruned is None:
        return []
    records = []

    def walk(node):
        if node.leaf is not None:
            return
        if node.left is not None:
            walk(node.left)
        if node.right is not None:
            walk(node.right)
        if node.left is None or node.right is None:
            return
        left_text = _normalize(node.left.leaves())
        right_text = _normalize(node.right.leaves())
        if not left_text or not right_text:
            return
        parent_text = f"{left_text} {right_text}"
        left_len = len(left_text.split())
        right_len = len(right_text.split())
        tree_type = f"{node.label} → {node.left.label} {node.right.label}"
        records.append(
            PhraseRecord(
                parent_text=parent_text,
                left_text=left_text,
                right_text=right_text,
                tree_type=tree_type,
                parent_len=left_len + right_len,
                left_len=left_len,
                right_len=right_len,
                source_doc=source_doc,
                phrase_id=phrase_id(parent_text, left_text, right_text, tree_type),
            )
        )

    walk(pruned)
    return records


def build_catalog(records):
    """Deduplicate by phrase_id and tabulate tree types and phrase lengths."""
    seen = {}
    for rec in records:
        if rec.phrase_id not in seen:
            seen[rec.phrase_id] = rec
    unique = list(seen.values())
    type_counts = {}
    length_hist = {}
    for rec in unique:
        type_counts[rec.tree_type] = type_counts.get(rec.tree_type, 0) + 1
        length_hist[rec.parent_len] = length_hist.get(rec.parent_len, 0) + 1
    return PhraseCatalog(records=unique, tree_type_counts=type_counts, length_histogram=length_hist)


CATALOG_COLUMNS = (
    "phrase_id",
    "parent_text",
    "left_text",
    "right_text",
    "tree_type",
    "parent_len",
    "left_len",
    "right_len",
    "source_doc",
)


def harvest_directory(tree_dir, null_labels=DEFAULT_NULL_LABELS):
    """Harvest every tree file in a directory, merged in sorted-name order."""
    records = []
    for name in sorted(os.listdir(tree_dir)):
        path = os.path.join(tree_dir, name)
        if not os.path.isfile(path):
            continue
        with open(path, encoding="utf-8") as fh:
            body = fh.read()
        for tree in iter_trees(body):
            binarized = to_cnf_right_factored(tree)
            records.extend(harvest_subphrases(binarized, name, null_labels))
    return build_catalog(records)


def write_catalog(catalog, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(CATALOG_COLUMNS) + "\n")
        for rec in catalog.records:
            fh.write(
                "\t".join(
                    (
                        rec.phrase_id,
                        rec.parent_text,
                        rec.left_text,
                        rec.right_text,
                        rec.tree_type,
                        str(rec.parent_len),
                        str(rec.left_len),
                        str(rec.right_len),
                        rec.source_doc,
                    )
                )
                + "\n"
            )


def read_catalog(path):
    records = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if tuple(header) != CATALOG_COLUMNS:
            raise FormatError(f"unexpected catalog header: {header}")
        for line in fh:
            if not line.strip():
                continue
            fields = line.rstrip("\n").split("\t")
            if len(fields) != len(CATALOG_COLUMNS):
                raise FormatError(f"bad catalog row: {line!r}")
            records.append(
                PhraseRecord(
                    phrase_id=fields[0],
                    parent_text=fields[1],
                    left_text=fields[2],
                    right_text=fields[3],
                    tree_type=fields[4],
                    parent_len=int(fields[5]),
                    left_len=int(fields[6]),
                    right_len=int(fields[7]),
                    source_doc=fields[8],
                )
            )
    return build_catalog(records)
