import math

import numpy as np
import pytest

from entrograph.errors import DegenerateGraphError, ParseError, ValidationError
from entrograph.fixtures import k2, path3, triangle
from entrograph.graph import Graph
from entrograph.sampling import (
    ProbabilityTree,
    SampledEdgeSet,
    annotate_probabilities,
    deduction_entropy,
    load_sampled,
    reconstruct,
    sample_edges,
    sibling_probabilities,
)
from entrograph.tree import EncodingTree, TreeNode, build_optimal_tree, single_level_tree
from helpers import barbell_two_level

BARBELL_GROUP_TERM = 0.07142857142857142
BARBELL_LEAF0_TERM = 0.2581935602939434


def lca(t, u, v):
    anc = set()
    x = u
    while x is not None:
        anc.add(x)
        x = t.nodes[x].parent
    y = v
    while y not in anc:
        y = t.nodes[y].parent
    return y


def three_leaf_pt(probs):
    """Triangle graph under a flat tree with hand-set descent probabilities."""
    g = triangle()
    t = single_level_tree(g)
    prob = {leaf: p for leaf, p in zip(sorted(t.root.children), probs)}
    return ProbabilityTree(tree=t, deduction={c: 0.0 for c in prob}, prob=prob)


# ---- deduction entropy -------------------------------------------------


def test_deduction_entropy_group_node():
    g, t = barbell_two_level()
    assert deduction_entropy(g, t, 7) == pytest.approx(0.071429, abs=1e-6)


def test_deduction_entropy_leaf_accumulates():
    g, t = barbell_two_level()
    expect = BARBELL_LEAF0_TERM + BARBELL_GROUP_TERM
    assert deduction_entropy(g, t, 0) == pytest.approx(0.329623, abs=1e-6)
    assert deduction_entropy(g, t, 0) == pytest.approx(expect, abs=1e-12)


def test_deduction_entropy_root_child_is_own_term():
    g = triangle()
    t = single_level_tree(g)
    from entrograph.graph import volume

    vol = volume(g)
    for c in t.root.children:
        assert deduction_entropy(g, t, c) == pytest.approx(t.node_term(c, vol), abs=1e-12)


def test_deduction_entropy_rejects_root_and_unknown():
    g, t = barbell_two_level()
    with pytest.raises(ValidationError):
        deduction_entropy(g, t, t.root_id)
    with pytest.raises(ValidationError):
        deduction_entropy(g, t, 99)


# ---- probability annotation --------------------------------------------


def test_probabilities_sum_to_one_per_sibling_group():
    g, t = barbell_two_level()
    pt = annotate_probabilities(g, t)
    for nid, node in t.nodes.items():
        if node.children:
            assert sum(pt.prob[c] for c in node.children) == pytest.approx(1.0, abs=1e-9)


def test_equal_terms_split_evenly():
    g = k2()
    pt = annotate_probabilities(g, single_level_tree(g))
    assert pt.prob[0] == pytest.approx(0.5, abs=1e-12)
    assert pt.prob[1] == pytest.approx(0.5, abs=1e-12)


def test_softmax_hand_values_and_shift_invariance():
    g = triangle()
    t = single_level_tree(g)
    kids = list(t.root.children)
    raised = sibling_probabilities(t, dict(zip(kids, (0.6, 0.7, 0.8))))
    assert [raised[c] for c in kids] == pytest.approx(
        [0.30061, 0.33222, 0.36717], abs=1e-5
    )
    base = sibling_probabilities(t, dict(zip(kids, (0.1, 0.2, 0.3))))
    for c in kids:
        assert raised[c] == pytest.approx(base[c], abs=1e-12)


def test_only_child_probability_one():
    g = path3()
    nodes = {
        5: TreeNode(5, None, [4, 2], 0.0, 0.0, None),
        4: TreeNode(4, 5, [3], 0.0, 0.0, None),
        3: TreeNode(3, 4, [0, 1], 0.0, 0.0, None),
        0: TreeNode(0, 3, [], 0.0, 0.0, 0),
        1: TreeNode(1, 3, [], 0.0, 0.0, 1),
        2: TreeNode(2, 5, [], 0.0, 0.0, 2),
    }
    t = EncodingTree(g, nodes, 5)
    for nid, (v, c) in t.recompute_caches().items():
        t.nodes[nid].volume, t.nodes[nid].cut = v, c
    pt = annotate_probabilities(g, t)
    assert pt.prob[3] == pytest.approx(1.0, abs=1e-12)


def test_probabilities_on_built_trees():
    rng = np.random.default_rng(11)
    for _ in range(5):
        n = int(rng.integers(5, 12))
        edges = [(i, i + 1, 1.0) for i in range(n - 1)]
        for _ in range(n):
            u, v = int(rng.integers(n)), int(rng.integers(n))
            if u != v:
                key = (min(u, v), max(u, v), 1.0)
                if key not in edges:
                    edges.append(key)
        g = Graph(n, edges)
        t = build_optimal_tree(g, 3)
        pt = annotate_probabilities(g, t)
        # independent softmax recomputation from the deduction values
        for nid, node in t.nodes.items():
            if not node.children:
                continue
            ex = [math.exp(pt.deduction[c]) for c in node.children]
            for c, e in zip(node.children, ex):
                assert pt.prob[c] == pytest.approx(e / sum(ex), abs=1e-9)
                assert 0.0 < pt.prob[c] <= 1.0


# ---- edge sampling ------------------------------------------------------


def test_two_leaf_tree_samples_single_pair():
    g = k2()
    pt = annotate_probabilities(g, single_level_tree(g))
    out = sample_edges(pt, theta=5.0, seed=7)
    assert set(out.pairs) == {(0, 1)}
    origin, count = out.pairs[(0, 1)]
    assert origin == pt.tree.root_id
    assert count == math.ceil(5.0 * 2)


def test_sampling_locality_on_barbell():
    g, t = barbell_two_level()
    pt = annotate_probabilities(g, t)
    for seed in range(3):
        out = sample_edges(pt, theta=3.0, seed=seed)
        assert out.pairs
        for (u, v), (origin, _) in out.pairs.items():
            assert u != v
            assert lca(t, u, v) == origin
            if origin == 7:
                assert {u, v} <= {0, 1, 2}
            if origin == 8:
                assert {u, v} <= {3, 4, 5}


def test_sampling_deterministic(tmp_path):
    g, t = barbell_two_level()
    pt = annotate_probabilities(g, t)
    a = sample_edges(pt, theta=3.0, seed=99)
    b = sample_edges(pt, theta=3.0, seed=99)
    assert a.pairs == b.pairs
    pa, pb = tmp_path / "a.tsv", tmp_path / "b.tsv"
    a.save(pa)
    b.save(pb)
    assert pa.read_bytes() == pb.read_bytes()


def test_single_child_nodes_are_skipped():
    g = path3()
    nodes = {
        5: TreeNode(5, None, [4, 2], 0.0, 0.0, None),
        4: TreeNode(4, 5, [3], 0.0, 0.0, None),
        3: TreeNode(3, 4, [0, 1], 0.0, 0.0, None),
        0: TreeNode(0, 3, [], 0.0, 0.0, 0),
        1: TreeNode(1, 3, [], 0.0, 0.0, 1),
        2: TreeNode(2, 5, [], 0.0, 0.0, 2),
    }
    t = EncodingTree(g, nodes, 5)
    for nid, (v, c) in t.recompute_caches().items():
        t.nodes[nid].volume, t.nodes[nid].cut = v, c
    pt = annotate_probabilities(g, t)
    out = sample_edges(pt, theta=2.0, seed=0)
    origins = {origin for origin, _ in out.pairs.values()}
    assert 4 not in origins
    assert origins <= {5, 3}


def test_sample_count_uses_ceiling():
    pt = three_leaf_pt((0.2, 0.3, 0.5))
    out = sample_edges(pt, theta=0.4, seed=1)
    total = sum(c for _, c in out.pairs.values())
    assert total == 2  # ceil(0.4 * 3)


def test_theta_must_be_positive():
    pt = three_leaf_pt((0.2, 0.3, 0.5))
    for theta in (0.0, -1.0):
        with pytest.raises(ValidationError):
            sample_edges(pt, theta=theta, seed=0)


def test_pair_frequencies_match_draw_then_redraw():
    pt = three_leaf_pt((0.2, 0.3, 0.5))
    out = sample_edges(pt, theta=33334.0, seed=424242)
    total = sum(c for _, c in out.pairs.values())
    assert total == math.ceil(33334.0 * 3)
    # analytic distribution: P{i,j} = p_i p_j/(1-p_i) + p_j p_i/(1-p_j)
    expect = {(0, 1): 0.2 * 0.3 / 0.8 + 0.3 * 0.2 / 0.7,
              (0, 2): 0.2 * 0.5 / 0.8 + 0.5 * 0.2 / 0.5,
              (1, 2): 0.3 * 0.5 / 0.7 + 0.5 * 0.3 / 0.5}
    assert sum(expect.values()) == pytest.approx(1.0, abs=1e-12)
    for pair, p in expect.items():
        freq = out.pairs[pair][1] / total
        assert freq == pytest.approx(p, abs=0.01)


def test_sampled_set_roundtrip(tmp_path):
    g, t = barbell_two_level()
    pt = annotate_probabilities(g, t)
    out = sample_edges(pt, theta=2.0, seed=5)
    p = tmp_path / "sampled.tsv"
    out.save(p)
    back = load_sampled(p)
    assert back.pairs == out.pairs
    assert back.seed == 5


def test_load_sampled_rejects_malformed(tmp_path):
    p = tmp_path / "bad.tsv"
    p.write_text("0\t1\t1.0\n")
    with pytest.raises(ParseError):
        load_sampled(p)
    p.write_text("0\t1\t1.0\t#x:y\n")
    with pytest.raises(ParseError):
        load_sampled(p)


# ---- reconstruction -----------------------------------------------------


def sampled_of(pairs, seed=0):
    return SampledEdgeSet(pairs={p: (0, 1) for p in pairs}, seed=seed)


def test_reconstruct_plain_mode():
    g = Graph(4, [(0, 1, 2.0), (2, 3, 2.0)], attributes=np.eye(4))
    out = reconstruct(g, sampled_of({(0, 2), (1, 3)}))
    assert out.edges() == [(0, 2, 1.0), (1, 3, 1.0)]
    assert np.array_equal(out.attributes, g.attributes)


def test_reconstruct_union_with_zero_drop():
    g = Graph(4, [(0, 1, 2.0), (2, 3, 2.0)])
    s = np.zeros((4, 4))
    out = reconstruct(g, sampled_of({(0, 2)}), s, retain=True, drop_frac=0.0)
    pairs = {(u, v) for u, v, _ in out.edges()}
    assert pairs == {(0, 1), (2, 3), (0, 2)}
    weights = {(u, v): w for u, v, w in out.edges()}
    assert weights[(0, 1)] == 2.0  # retained edges keep their weight
    assert weights[(0, 2)] == 1.0  # sampled pairs come in at unit weight


def test_reconstruct_auto_drop_matches_input_count():
    from entrograph.fixtures import barbell6

    g = barbell6()
    assert len(g.edges()) == 7
    new_pairs = {(0, 4), (1, 5), (2, 3)}
    s = np.full((6, 6), 0.5)
    # make the three bridge-like pairs the clear losers
    s[0, 4] = s[4, 0] = 0.01
    s[1, 5] = s[5, 1] = 0.02
    s[2, 3] = s[3, 2] = 0.03
    out = reconstruct(g, sampled_of(new_pairs), s, retain=True)
    pairs = {(u, v) for u, v, _ in out.edges()}
    assert len(pairs) == 7
    assert pairs == {(u, v) for u, v, _ in g.edges()}


def test_reconstruct_drop_frac_floor_and_ties():
    g = Graph(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 3, 1.0)])
    s = np.full((4, 4), 0.5)  # every pair ties; lexicographic order decides
    out = reconstruct(g, sampled_of(set()), s, retain=True, drop_frac=0.5)
    pairs = {(u, v) for u, v, _ in out.edges()}
    assert pairs == {(1, 2), (2, 3)}  # (0,1) and (0,3) sort first, get dropped
    # floor semantics: 0.4 of 4 edges drops just one
    out2 = reconstruct(g, sampled_of(set()), s, retain=True, drop_frac=0.4)
    assert len(out2.edges()) == 3


def test_reconstruct_degenerate_and_validation():
    g = Graph(3, [(0, 1, 1.0), (1, 2, 1.0)])
    s = np.zeros((3, 3))
    with pytest.raises(DegenerateGraphError):
        reconstruct(g, sampled_of(set()), s, retain=True, drop_frac=1.0)
    with pytest.raises(DegenerateGraphError):
        reconstruct(g, sampled_of(set()))
    with pytest.raises(ValidationError):
        reconstruct(g, sampled_of({(0, 2)}), drop_frac=0.5)
    with pytest.raises(ValidationError):
        reconstruct(g, sampled_of({(0, 2)}), retain=True)
    with pytest.raises(ValidationError):
        reconstruct(g, sampled_of({(0, 5)}))
    with pytest.raises(ValidationError):
        reconstruct(g, sampled_of({(0, 2)}), np.zeros((2, 2)), retain=True)