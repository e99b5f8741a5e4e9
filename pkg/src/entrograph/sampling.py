"""Top-down edge sampling over an encoding tree.

A built tree scores every community by how much information it takes to
reach it from the root.  Those scores become sibling-softmax
probabilities, and repeated root-to-leaf draws inside each subtree
produce candidate edges between vertices the hierarchy considers close.
`reconstruct` turns a sampled pair set back into a graph, optionally
keeping the old edges and shedding the least similar ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGraphError, ParseError, ValidationError
from .graph import Graph, volume
from .tree import EncodingTree

SEED_MASK = 0xFFFF_FFFF_FFFF_FFFF


def deduction_entropy(g: Graph, t: EncodingTree, node_id: int) -> float:
    """Summed entropy terms of a node and its strict ancestors below the
    root: the bits needed to locate the community top-down."""
    if node_id == t.root_id:
        raise ValidationError("deduction entropy is undefined for the root")
    if node_id not in t.nodes:
        raise ValidationError(f"unknown node {node_id}")
    vol = volume(g)
    total = 0.0
    nid = node_id
    while nid != t.root_id:
        total += t.node_term(nid, vol)
        nid = t.nodes[nid].parent
    return total


@dataclass
class ProbabilityTree:
    """Encoding tree with per-node descent scores.

    `deduction` holds each non-root node's top-down entropy, `prob` its
    probability among siblings (softmax of the deduction entropies,
    natural base).  An only child always has probability 1.
    """

    tree: EncodingTree
    deduction: dict[int, float] = field(repr=False)
    prob: dict[int, float] = field(repr=False)


def sibling_probabilities(t: EncodingTree, deduction: dict[int, float]) -> dict[int, float]:
    """Softmax of the deduction entropies within every sibling group.

    Natural base; shifting all of a group's entropies by a constant
    (for instance a shared ancestor's contribution) cancels out.
    """
    prob: dict[int, float] = {}
    for node in t.nodes.values():
        kids = node.children
        if not kids:
            continue
        hs = np.array([deduction[c] for c in kids])
        ex = np.exp(hs - hs.max())
        p = ex / ex.sum()
        for c, pc in zip(kids, p):
            prob[c] = float(pc)
    return prob


def annotate_probabilities(g: Graph, t: EncodingTree) -> ProbabilityTree:
    t.validate(g)
    vol = volume(g)
    deduction: dict[int, float] = {}
    stack = [(t.root_id, 0.0)]
    while stack:
        nid, acc = stack.pop()
        for c in t.nodes[nid].children:
            h = acc + t.node_term(c, vol)
            deduction[c] = h
            stack.append((c, h))
    return ProbabilityTree(tree=t, deduction=deduction,
                           prob=sibling_probabilities(t, deduction))


@dataclass
class SampledEdgeSet:
    """Deduplicated sampled pairs with their generating subtree root and
    draw count, plus the seed that produced them."""

    pairs: dict[tuple[int, int], tuple[int, int]]
    seed: int

    def edge_pairs(self) -> list[tuple[int, int]]:
        return sorted(self.pairs)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# seed={self.seed}\n")
            for (u, v), (origin, count) in sorted(self.pairs.items()):
                fh.write(f"{u}\t{v}\t1.0\t#{origin}:{count}\n")


def load_sampled(path) -> SampledEdgeSet:
    pairs: dict[tuple[int, int], tuple[int, int]] = {}
    seed = 0
    with open(path, encoding="utf-8") as fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                if line[1:].strip().startswith("seed="):
                    seed = int(line.split("=", 1)[1])
                continue
            parts = line.split("\t")
            if len(parts) != 4 or not parts[3].startswith("#"):
                raise ParseError("expected u, v, weight, #origin:count", path=str(path), line=ln)
            try:
                u, v = int(parts[0]), int(parts[1])
                origin, count = (int(x) for x in parts[3][1:].split(":"))
            except ValueError as exc:
                raise ParseError(str(exc), path=str(path), line=ln) from None
            pairs[(u, v)] = (origin, count)
    return SampledEdgeSet(pairs=pairs, seed=seed)


def _draw(rng, kids: list[int], prob: dict[int, float]) -> int:
    r = rng.random()
    acc = 0.0
    for c in kids:
        acc += prob[c]
        if r < acc:
            return c
    return kids[-1]


def _descend(rng, pt: ProbabilityTree, nid: int) -> int:
    node = pt.tree.nodes[nid]
    while node.children:
        nid = _draw(rng, node.children, pt.prob)
        node = pt.tree.nodes[nid]
    return node.vertex


def sample_edges(pt: ProbabilityTree, theta: float, seed: int) -> SampledEdgeSet:
    """Draw ceil(theta * fanout) leaf pairs under every internal node
    with at least two children.

    Each sample picks two distinct children by probability (second draw
    repeats until it differs from the first), then walks each one down
    to a leaf.  Every subtree uses its own substream of the seed, so the
    result is independent of traversal order.
    """
    if not theta > 0:
        raise ValidationError(f"theta must be positive, got {theta}")
    tree = pt.tree
    pairs: dict[tuple[int, int], tuple[int, int]] = {}
    for nid in sorted(tree.nodes):
        kids = tree.nodes[nid].children
        if len(kids) < 2:
            continue
        rng = np.random.default_rng(np.random.SeedSequence([seed & SEED_MASK, nid]))
        count = max(1, math.ceil(theta * len(kids) - 1e-9))
        for _ in range(count):
            c1 = _draw(rng, kids, pt.prob)
            c2 = c1
            while c2 == c1:
                c2 = _draw(rng, kids, pt.prob)
            u = _descend(rng, pt, c1)
            v = _descend(rng, pt, c2)
            key = (u, v) if u < v else (v, u)
            prev = pairs.get(key)
            pairs[key] = (nid, 1 if prev is None else prev[1] + 1)
    return SampledEdgeSet(pairs=pairs, seed=seed)


def reconstruct(
    g_input: Graph,
    sampled: SampledEdgeSet,
    s: np.ndarray | None = None,
    retain: bool = False,
    drop_frac: float | None = None,
) -> Graph:
    """Build the next graph from sampled pairs.

    Plain mode returns exactly the sampled pairs at weight 1.  With
    `retain` the input's edges join the pool and the lowest-similarity
    edges are dropped: a fixed fraction when `drop_frac` is given,
    otherwise just enough to keep the edge count at the input's level.
    """
    n = g_input.n
    for u, v in sampled.pairs:
        if not (0 <= u < n and 0 <= v < n) or u == v:
            raise ValidationError(f"sampled pair ({u}, {v}) invalid for n={n}")
    if not retain:
        if drop_frac is not None:
            raise ValidationError("drop_frac requires retain")
        if not sampled.pairs:
            raise DegenerateGraphError("no sampled pairs to build from")
        edges = [(u, v, 1.0) for u, v in sorted(sampled.pairs)]
        return Graph(n, edges, attributes=g_input.attributes)

    if s is None:
        raise ValidationError("retain mode needs the similarity matrix")
    if s.shape != (n, n):
        raise ValidationError("similarity matrix does not match the graph")
    if drop_frac is not None and not 0.0 <= drop_frac <= 1.0:
        raise ValidationError(f"drop_frac must be in [0, 1], got {drop_frac}")

    weights = {(u, v): 1.0 for u, v in sampled.pairs}
    input_count = 0
    for u, v, w in g_input.edges():
        weights[(u, v)] = w
        input_count += 1
    pool = sorted(weights)
    if drop_frac is not None:
        n_drop = math.floor(drop_frac * len(pool))
    else:
        n_drop = max(0, len(pool) - input_count)
    if n_drop:
        ranked = sorted(pool, key=lambda p: (float(s[p[0], p[1]]), p))
        dropped = set(ranked[:n_drop])
        pool = [p for p in pool if p not in dropped]
    if not pool:
        raise DegenerateGraphError("every edge was dropped during reconstruction")
    edges = [(u, v, weights[(u, v)]) for u, v in pool]
    return Graph(n, edges, attributes=g_input.attributes)
