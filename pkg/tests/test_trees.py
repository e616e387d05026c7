import pytest

from phrasecomp import trees
from phrasecomp.errors import FormatError, ParseError
from phrasecomp.trees import (
    BinaryTree,
    ConstituencyTree,
    build_catalog,
    collapse_cnf,
    harvest_subphrases,
    parse_bracketed,
    to_cnf_right_factored,
)


def test_parse_simple_np():
    tree = parse_bracketed("(NP (DT the) (NN way))")
    assert tree.label == "NP"
    assert [c.label for c in tree.children] == ["DT", "NN"]
    assert tree.leaves() == ["the", "way"]


def test_parse_unary():
    tree = parse_bracketed("(X (A a))")
    assert tree.label == "X"
    assert len(tree.children) == 1
    assert tree.children[0].leaf == "a"


def test_parse_unbalanced_reports_offset():
    text = "(NP (DT the"
    with pytest.raises(ParseError) as exc:
        parse_bracketed(text)
    assert exc.value.offset == len(text)


def test_parse_empty_input():
    with pytest.raises(ParseError):
        parse_bracketed("")
    with pytest.raises(ParseError):
        parse_bracketed("   ")


def test_parse_trailing_content():
    with pytest.raises(ParseError):
        parse_bracketed("(A (B b)) (C c)")


def test_functional_tags_kept():
    tree = parse_bracketed("(NP-SBJ (PRP he))")
    assert tree.label == "NP-SBJ"


def test_cnf_table_case():
    tree = parse_bracketed("(S (NP-SBJ (PRP he)) (VP (VBD ran)) (. .))")
    cnf = to_cnf_right_factored(tree)
    assert cnf.label == "S"
    assert cnf.left.label == "NP-SBJ"
    assert cnf.right.label == "S|<VP-.>"
    assert cnf.right.left.label == "VP"
    assert cnf.right.right.label == "."


def test_cnf_binary_unchanged():
    tree = parse_bracketed("(NP (DT the) (NN way))")
    cnf = to_cnf_right_factored(tree)
    assert cnf.label == "NP"
    assert cnf.left.leaf == "the"
    assert cnf.right.leaf == "way"


def test_cnf_four_children():
    # (X A B C D) -> (X A (X|<B-C> B (X|<C-D> C D)))
    tree = parse_bracketed("(X (A a) (B b) (C c) (D d))")
    cnf = to_cnf_right_factored(tree)
    assert cnf.right.label == "X|<B-C>"
    assert cnf.right.right.label == "X|<C-D>"
    assert cnf.leaves() == ["a", "b", "c", "d"]


def test_cnf_roundtrip():
    tree = parse_bracketed("(S (NP-SBJ (PRP he)) (VP (VBD ran)) (. .))")
    assert collapse_cnf(to_cnf_right_factored(tree)) == tree


def test_collapse_without_synthetic_labels_is_identity():
    tree = parse_bracketed("(NP (DT the) (NN way))")
    assert collapse_cnf(to_cnf_right_factored(tree)) == tree


def test_collapse_malformed_label():
    bad = BinaryTree(
        label="NP",
        left=BinaryTree(label="DT", leaf="the"),
        right=BinaryTree(
            label="X|<A",
            left=BinaryTree(label="A", leaf="a"),
            right=BinaryTree(label="B", leaf="b"),
        ),
    )
    with pytest.raises(FormatError):
        collapse_cnf(bad)


def test_harvest_two_records():
    tree = parse_bracketed("(NP (DT the) (JJ big) (NN dog))")
    records = harvest_subphrases(to_cnf_right_factored(tree), "doc")
    assert len(records) == 2
    by_parent = {r.parent_text: r for r in records}
    assert by_parent["the big dog"].tree_type == "NP → DT NP|<JJ-NN>"
    assert by_parent["the big dog"].left_text == "the"
    assert by_parent["the big dog"].right_text == "big dog"
    assert by_parent["big dog"].tree_type == "NP|<JJ-NN> → JJ NN"
    for rec in records:
        assert rec.parent_len == rec.left_len + rec.right_len
        assert rec.parent_text == f"{rec.left_text} {rec.right_text}"


def test_harvest_single_leaf_empty():
    tree = parse_bracketed("(NN dog)")
    assert harvest_subphrases(to_cnf_right_factored(tree), "doc") == []


def test_harvest_null_branch_excluded():
    tree = parse_bracketed("(VP (VB go) (NP (-NONE- *T*)))")
    assert harvest_subphrases(to_cnf_right_factored(tree), "doc") == []


def test_harvest_null_pruned_inside():
    # The trace disappears but the surrounding binary node survives.
    tree = parse_bracketed("(S (NP (-NONE- *)) (NP (DT the) (NN dog)))")
    records = harvest_subphrases(to_cnf_right_factored(tree), "doc")
    assert [r.parent_text for r in records] == ["the dog"]


def test_catalog_dedup_and_counts():
    tree = parse_bracketed("(NP (DT the) (NN way))")
    records = harvest_subphrases(to_cnf_right_factored(tree), "doc")
    catalog = build_catalog(records + records)
    assert len(catalog.records) == 1
    assert catalog.tree_type_counts == {"NP → DT NN": 1}
    assert catalog.length_histogram == {2: 1}


def test_catalog_type_counts():
    t1 = parse_bracketed("(NP (DT the) (NN way))")
    t2 = parse_bracketed("(NP (DT a) (NN dog))")
    t3 = parse_bracketed("(VP (VB go) (RB away))")
    records = []
    for t in (t1, t2, t3):
        records.extend(harvest_subphrases(to_cnf_right_factored(t), "doc"))
    catalog = build_catalog(records)
    assert catalog.tree_type_counts == {"NP → DT NN": 2, "VP → VB RB": 1}


def test_iter_trees_unwraps_ptb_wrapper():
    body = "( (S (NP (NN dog)) (VP (VBD ran))))\n( (NP (DT a) (NN cat)))\n"
    parsed = list(trees.iter_trees(body))
    assert [t.label for t in parsed] == ["S", "NP"]


def test_catalog_roundtrip(tmp_path):
    tree = parse_bracketed("(NP (DT the) (JJ big) (NN dog))")
    catalog = build_catalog(harvest_subphrases(to_cnf_right_factored(tree), "doc"))
    path = tmp_path / "catalog.tsv"
    trees.write_catalog(catalog, path)
    loaded = trees.read_catalog(path)
    assert loaded.records == catalog.records
    assert loaded.tree_type_counts == catalog.tree_type_counts


def _random_tree(rng, n_leaves, counter):
    if n_leaves == 1:
        i = counter[0]
        counter[0] += 1
        return ConstituencyTree(label=f"P{i % 7}", leaf=f"w{i}")
    k = min(int(rng.integers(1, 5)), n_leaves)
    if k == 1:
        return ConstituencyTree(label=f"U{n_leaves}", children=[_random_tree(rng, n_leaves, counter)]) \
            if rng.random() < 0.3 else _random_tree(rng, n_leaves, counter)
    cuts = sorted(rng.choice(range(1, n_leaves), size=k - 1, replace=False))
    sizes = [b - a for a, b in zip([0] + list(cuts), list(cuts) + [n_leaves])]
    return ConstituencyTree(
        label=f"N{k}", children=[_random_tree(rng, s, counter) for s in sizes]
    )


def test_yield_preservation_and_roundtrip_generated():
    import numpy as np

    rng = np.random.default_rng(7)
    cases = 0
    while cases < 500:
        n_leaves = int(rng.integers(1, 9))
        tree = _random_tree(rng, n_leaves, [0])
        cnf = to_cnf_right_factored(tree)
        assert cnf.leaves() == tree.leaves()
        assert collapse_cnf(cnf) == tree
        cases += 1


def test_determinism_of_harvest_directory(tmp_path):
    d = tmp_path / "trees"
    d.mkdir()
    (d / "a.mrg").write_text("( (NP (DT the) (NN way)))\n")
    (d / "b.mrg").write_text("( (VP (VB go) (RB away)))\n")
    c1 = trees.harvest_directory(d)
    c2 = trees.harvest_directory(d)
    assert c1.records == c2.records
