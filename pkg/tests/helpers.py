"""Shared fixture builders used by more than one test module."""

import numpy as np

from entrograph.fixtures import barbell6
from entrograph.graph import Graph
from entrograph.tree import EncodingTree, TreeNode

PLATEAU_N = 30
PLATEAU_PEER_K = 7


def plateau_fixture():
    """A 30-vertex graph and similarity matrix tuned so the k sweep
    plateaus at exactly 7.

    Every vertex has seven standout peers (ring offsets 1, 2, 3 and the
    antipode) whose similarities step down with distance, so the sweep
    keeps finding heavy edges up to k = 7.  Vertex 0 is a hub joined to
    everyone in the base graph at middling similarity, which keeps the
    fused graph irregular while the peer classes fill in; each class
    dilutes the hub, so the entropy climbs step by step.  All remaining
    pairs sit at -0.2, which the reweighting floor turns into weightless
    edges, so k = 8 and beyond add nothing measurable.
    """
    n = PLATEAU_N
    s = np.full((n, n), -0.2)
    for j in range(1, n):
        s[0, j] = s[j, 0] = 0.5
    by_offset = {1: 0.95, 2: 0.90, 3: 0.85, 15: 0.80}
    for i in range(n):
        for off, val in by_offset.items():
            j = (i + off) % n
            s[i, j] = val
            s[j, i] = val
    np.fill_diagonal(s, 1.0)

    edges = [(i, (i + 1) % n, 1.0) for i in range(n)]
    edges += [(0, j, 1.0) for j in range(4, n - 3) if j != 15]
    g = Graph(n, [(min(u, v), max(u, v), w) for u, v, w in edges])
    return g, s


def sparse_random_graph(rng, n, avg_deg=10):
    """Connected sparse random graph: shuffled spanning path plus
    uniform random chords up to the target edge count."""
    perm = rng.permutation(n)
    edges = {}
    for i in range(n - 1):
        u, v = int(perm[i]), int(perm[i + 1])
        edges[(min(u, v), max(u, v))] = 1.0
    target = (avg_deg * n) // 2
    while len(edges) < target:
        u, v = int(rng.integers(n)), int(rng.integers(n))
        if u == v:
            continue
        edges[(min(u, v), max(u, v))] = 1.0
    return Graph(n, [(u, v, w) for (u, v), w in edges.items()])


def barbell_two_level():
    """The 6-vertex barbell with its optimal two-community tree:
    root 6, group nodes 7 = {0,1,2} and 8 = {3,4,5}."""
    g = barbell6()
    nodes = {
        6: TreeNode(6, None, [7, 8], 0.0, 0.0, None),
        7: TreeNode(7, 6, [0, 1, 2], 0.0, 0.0, None),
        8: TreeNode(8, 6, [3, 4, 5], 0.0, 0.0, None),
    }
    for v in range(6):
        nodes[v] = TreeNode(v, 7 if v < 3 else 8, [], 0.0, 0.0, v)
    t = EncodingTree(g, nodes, 6)
    for nid, (v, c) in t.recompute_caches().items():
        nodes[nid].volume, nodes[nid].cut = v, c
    return g, t


def two_block_sbm(rng, n, p_in, p_out):
    """Two planted communities; vertices [0, n/2) and [n/2, n)."""
    half = n // 2
    edges = []
    for u in range(n):
        for v in range(u + 1, n):
            same = (u < half) == (v < half)
            if rng.random() < (p_in if same else p_out):
                edges.append((u, v, 1.0))
    return Graph(n, edges)
