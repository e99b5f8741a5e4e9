"""Hierarchical encodings of weighted graphs and their entropy accounting.

An encoding tree is a rooted tree whose leaves correspond one-to-one to
the graph's vertices; every internal node stands for the vertex set
covered by its leaf descendants, so the children of a node partition its
set.  Each node carries two cached quantities:

* ``volume``: the summed weighted degree of the vertices it covers, and
* ``cut``: the total weight of edges leaving that vertex set.

The degree-distribution entropy of the graph (``one_dim_entropy``) is
the entropy of the random walk's stationary distribution over vertices.
A tree refines that view: each non-root node contributes

    (cut / vol) * log2(parent_volume / volume)

and the sum over nodes is the tree's entropy.  Flat trees reproduce the
one-dimensional value exactly; a good hierarchy scores lower because
random-walk codewords can be shared inside dense groups.

Two local edits are supported and are the moves of the greedy optimizer:

* ``combine``: wrap two sibling nodes in a fresh intermediate node, and
* ``lift``: reattach a node to its grandparent, deleting the old parent
  if that leaves it childless.

``build_optimal_tree`` runs combine moves to a binary hierarchy, cuts
the result down to the height budget by dissolving every internal node
that sits too deep (their leaves attach to the deepest surviving
ancestor), and then applies lift moves while the best entropy delta
stays strictly positive.
"""

from __future__ import annotations

import bisect
import heapq
import json
import math
from dataclasses import dataclass, field
from itertools import islice
from pathlib import Path

import numpy as np

from .errors import ConfigError, DegenerateGraphError, ParseError, ValidationError
from .graph import Graph, connected_components, volume

CACHE_TOL = 1e-9
# Floating-point guard for "strictly positive" move deltas.
POSITIVE_EPS = 1e-12


def one_dim_entropy(g: Graph) -> float:
    """Entropy of the degree distribution d_v / vol, in bits.

    Undefined (DegenerateGraphError) for graphs with no edges or with
    isolated vertices.
    """
    if g.n == 0 or g.edge_count == 0:
        raise DegenerateGraphError("entropy is undefined for graphs without edges")
    if np.any(g.degrees <= 0.0):
        bad = int(np.argmax(g.degrees <= 0.0))
        raise DegenerateGraphError(f"vertex {bad} is isolated; entropy is undefined")
    p = g.degrees / np.sum(g.degrees)
    return float(-np.sum(p * np.log2(p)))


class TreeNode:
    __slots__ = ("id", "parent", "children", "volume", "cut", "vertex")

    def __init__(self, id, parent, children, volume, cut, vertex=None):
        self.id = id
        self.parent = parent          # parent node id, None for the root
        self.children = children      # ordered list of child ids
        self.volume = volume
        self.cut = cut
        self.vertex = vertex          # graph vertex id for leaves, else None

    def is_leaf(self) -> bool:
        return self.vertex is not None

    def __repr__(self):
        return (
            f"TreeNode(id={self.id}, parent={self.parent}, vertex={self.vertex}, "
            f"volume={self.volume}, cut={self.cut}, children={self.children})"
        )


@dataclass
class EntropyReport:
    """Entropy of a tree next to the flat baseline of the same graph."""

    h1: float
    h_tree: float
    per_node: dict[int, float]
    normalized: float


class EncodingTree:
    """Mutable encoding tree over a fixed graph.

    Node ids are stable: vertices keep their ids as leaf ids, newly
    created intermediate nodes get fresh increasing ids.
    """

    def __init__(self, graph: Graph, nodes: dict[int, TreeNode], root_id: int):
        self.graph = graph
        self.nodes = nodes
        self.root_id = root_id
        self._next_id = (max(nodes) + 1) if nodes else 0

    # -- inspection -----------------------------------------------------

    @property
    def root(self) -> TreeNode:
        return self.nodes[self.root_id]

    def height(self) -> int:
        """Maximum number of edges from the root down to a leaf."""
        best = 0
        stack = [(self.root_id, 0)]
        while stack:
            nid, d = stack.pop()
            node = self.nodes[nid]
            if node.is_leaf():
                best = max(best, d)
            for c in node.children:
                stack.append((c, d + 1))
        return best

    def depth(self, nid: int) -> int:
        d = 0
        while self.nodes[nid].parent is not None:
            nid = self.nodes[nid].parent
            d += 1
        return d

    def leaf_ids(self) -> list[int]:
        return [nid for nid, node in self.nodes.items() if node.is_leaf()]

    def subtree_vertices(self, nid: int) -> list[int]:
        """Sorted vertex ids covered by the node."""
        out = []
        stack = [nid]
        while stack:
            cur = self.nodes[stack.pop()]
            if cur.is_leaf():
                out.append(cur.vertex)
            else:
                stack.extend(cur.children)
        out.sort()
        return out

    def top_partition(self) -> list[list[int]]:
        """Vertex sets of the root's children, each sorted, ordered by minimum."""
        parts = [self.subtree_vertices(c) for c in self.root.children]
        parts.sort(key=lambda p: p[0])
        return parts

    def copy(self) -> "EncodingTree":
        nodes = {
            nid: TreeNode(n.id, n.parent, list(n.children), n.volume, n.cut, n.vertex)
            for nid, n in self.nodes.items()
        }
        return EncodingTree(self.graph, nodes, self.root_id)

    # -- validation and recomputation -----------------------------------

    def recompute_caches(self) -> dict[int, tuple[float, float]]:
        """Volumes and cuts recomputed from scratch; the debug oracle for
        the incrementally maintained values."""
        g = self.graph
        vols: dict[int, float] = {}
        cuts: dict[int, float] = {nid: 0.0 for nid in self.nodes}
        # bottom-up volumes via iterative post-order
        order: list[int] = []
        stack = [self.root_id]
        while stack:
            nid = stack.pop()
            order.append(nid)
            stack.extend(self.nodes[nid].children)
        for nid in reversed(order):
            node = self.nodes[nid]
            if node.is_leaf():
                vols[nid] = float(g.degrees[node.vertex])
            else:
                vols[nid] = sum(vols[c] for c in node.children)
        # depths and parent chains for cut accumulation
        depth = {self.root_id: 0}
        for nid in order:
            for c in self.nodes[nid].children:
                depth[c] = depth[nid] + 1
        leaf_of = {node.vertex: nid for nid, node in self.nodes.items() if node.is_leaf()}
        for u, v, w in g.edges():
            a, b = leaf_of[u], leaf_of[v]
            # climb to the lowest common ancestor; every node strictly
            # below it on either path has this edge crossing its boundary
            while a != b:
                if depth[a] < depth[b]:
                    a, b = b, a
                cuts[a] += w
                a = self.nodes[a].parent
        return {nid: (vols[nid], cuts[nid]) for nid in self.nodes}

    def validate(self, graph: Graph | None = None, tol: float = CACHE_TOL) -> None:
        """Check structure and caches; raises ValidationError on any breach."""
        self._validate_structure(graph)
        fresh = self.recompute_caches()
        for nid, (v_ref, g_ref) in fresh.items():
            node = self.nodes[nid]
            if abs(node.volume - v_ref) > tol or abs(node.cut - g_ref) > tol:
                raise ValidationError(
                    f"cached volume/cut of node {nid} drifted: "
                    f"({node.volume}, {node.cut}) vs recomputed ({v_ref}, {g_ref})"
                )

    def _validate_structure(self, graph: Graph | None = None) -> None:
        g = graph if graph is not None else self.graph
        if g.n != self.graph.n:
            raise ValidationError("tree was built over a graph with a different vertex count")
        roots = [nid for nid, n in self.nodes.items() if n.parent is None]
        if roots != [self.root_id] and set(roots) != {self.root_id}:
            raise ValidationError(f"expected exactly one root {self.root_id}, found {roots}")
        seen = set()
        stack = [self.root_id]
        leaf_vertices = []
        while stack:
            nid = stack.pop()
            if nid in seen:
                raise ValidationError(f"node {nid} reachable twice; not a tree")
            seen.add(nid)
            node = self.nodes.get(nid)
            if node is None:
                raise ValidationError(f"child reference to unknown node {nid}")
            if node.id != nid:
                raise ValidationError(f"node {nid} carries mismatched id {node.id}")
            if node.is_leaf():
                if node.children:
                    raise ValidationError(f"leaf node {nid} has children")
                if not (0 <= node.vertex < g.n):
                    raise ValidationError(f"leaf {nid} names vertex {node.vertex} outside the graph")
                leaf_vertices.append(node.vertex)
            else:
                if not node.children:
                    raise ValidationError(f"internal node {nid} has no children")
            for c in node.children:
                child = self.nodes.get(c)
                if child is None or child.parent != nid:
                    raise ValidationError(f"parent/child links disagree between {nid} and {c}")
                stack.append(c)
        if len(seen) != len(self.nodes):
            raise ValidationError("tree contains nodes unreachable from the root")
        if sorted(leaf_vertices) != list(range(g.n)):
            raise ValidationError("leaves do not biject onto the vertex set")

    # -- entropy --------------------------------------------------------

    def node_term(self, nid: int, vol: float) -> float:
        """Entropy contribution of one non-root node."""
        node = self.nodes[nid]
        if node.parent is None:
            return 0.0
        if node.cut == 0.0:
            return 0.0
        pv = self.nodes[node.parent].volume
        return (node.cut / vol) * math.log2(pv / node.volume)

    # -- local edits ----------------------------------------------------

    def _leaf_set(self, nid: int) -> set[int]:
        out = set()
        stack = [nid]
        while stack:
            cur = self.nodes[stack.pop()]
            if cur.is_leaf():
                out.add(cur.vertex)
            else:
                stack.extend(cur.children)
        return out

    def _cut_between(self, a: int, b: int) -> float:
        """Total weight of edges running between the two nodes' vertex sets."""
        va, vb = self._leaf_set(a), self._leaf_set(b)
        if len(vb) < len(va):
            va, vb = vb, va
        acc = 0.0
        for u in sorted(va):
            for v, w in self.graph.neighbors(u):
                if v in vb:
                    acc += w
        return acc

    def combine(self, a: int, b: int) -> float:
        """Insert a new node wrapping siblings a and b; returns the entropy
        drop (old entropy minus new entropy, positive when the tree improved).

        Only the terms of a, b and the new node change, and the change
        telescopes to (2 * cut(a, b) / vol) * log2(parent_vol / merged_vol).
        """
        if a == b:
            raise ValidationError("cannot combine a node with itself")
        na, nb = self.nodes.get(a), self.nodes.get(b)
        if na is None or nb is None:
            raise ValidationError(f"unknown node in combine({a}, {b})")
        if na.parent is None or na.parent != nb.parent:
            raise ValidationError(f"combine requires siblings, got parents {na.parent} and {nb.parent}")
        gamma = self.nodes[na.parent]
        cut_ab = self._cut_between(a, b)
        new_id = self._next_id
        self._next_id += 1
        merged = TreeNode(
            new_id,
            gamma.id,
            [a, b],
            na.volume + nb.volume,
            na.cut + nb.cut - 2.0 * cut_ab,
            None,
        )
        self.nodes[new_id] = merged
        ia, ib = gamma.children.index(a), gamma.children.index(b)
        first = min(ia, ib)
        gamma.children[first] = new_id
        gamma.children.remove(b if first == ia else a)
        na.parent = new_id
        nb.parent = new_id
        vol = volume(self.graph)
        if cut_ab == 0.0 or gamma.volume == merged.volume:
            return 0.0
        return (2.0 * cut_ab / vol) * math.log2(gamma.volume / merged.volume)

    def lift(self, a: int) -> float:
        """Reattach node a to its grandparent; returns the entropy drop.

        The old parent's volume and cut are recomputed for its reduced
        vertex set, and the parent is deleted if a was its only child.
        """
        na = self.nodes.get(a)
        if na is None:
            raise ValidationError(f"unknown node {a} in lift")
        if na.parent is None:
            raise ValidationError("cannot lift the root")
        beta = self.nodes[na.parent]
        if beta.parent is None:
            raise ValidationError(f"node {a} is already a child of the root")
        gamma = self.nodes[beta.parent]
        vol = volume(self.graph)
        ga, va = na.cut, na.volume
        gb, vb = beta.cut, beta.volume
        vg = gamma.volume

        if len(beta.children) == 1:
            delta = 0.0 if vg == vb else ((gb - ga) / vol) * math.log2(vg / vb)
            beta.children.remove(a)
            gamma.children.remove(beta.id)
            gamma.children.append(a)
            na.parent = gamma.id
            del self.nodes[beta.id]
            return delta

        # cut from a's vertex set to the rest of the old parent's set
        set_a = self._leaf_set(a)
        rest = self._leaf_set(beta.id) - set_a
        r = 0.0
        for u in sorted(set_a):
            for v, w in self.graph.neighbors(u):
                if v in rest:
                    r += w
        vbp = vb - va
        gbp = gb - ga + 2.0 * r
        child_g = sum(self.nodes[c].cut for c in beta.children) - ga
        delta = 0.0
        if ga:
            delta += (ga / vol) * math.log2(vb / vg) if vb != vg else 0.0
        if child_g:
            delta += (child_g / vol) * math.log2(vb / vbp)
        if gb:
            delta += (gb / vol) * math.log2(vg / vb) if vb != vg else 0.0
        if gbp:
            delta -= (gbp / vol) * math.log2(vg / vbp)
        beta.children.remove(a)
        beta.volume = vbp
        beta.cut = gbp
        gamma.children.append(a)
        na.parent = gamma.id
        return delta

    # -- serialization --------------------------------------------------

    def to_tsv(self, path) -> None:
        """Rows of ``node_id<TAB>parent_id<TAB>vertex_or_dash``; the root's
        parent is written as -1.  Rows come out in depth-first preorder so
        that loading the file reproduces sibling order."""
        lines = []
        stack = [self.root_id]
        while stack:
            nid = stack.pop()
            node = self.nodes[nid]
            parent = -1 if node.parent is None else node.parent
            vertex = str(node.vertex) if node.is_leaf() else "-"
            lines.append(f"{nid}\t{parent}\t{vertex}")
            stack.extend(reversed(node.children))
        Path(path).write_text("\n".join(lines) + "\n")

    def to_json_obj(self) -> dict:
        vol = volume(self.graph)

        def render(nid: int) -> dict:
            node = self.nodes[nid]
            obj = {
                "id": nid,
                "vertex": node.vertex,
                "volume": node.volume,
                "cut": node.cut,
                "entropy_term": self.node_term(nid, vol),
                "children": [render(c) for c in node.children],
            }
            return obj

        return render(self.root_id)

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json_obj(), indent=2) + "\n")

    @classmethod
    def from_tsv(cls, path, graph: Graph) -> "EncodingTree":
        """Rebuild a tree from its TSV form; caches are recomputed from the
        graph and the result is validated."""
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as e:
            raise ParseError(f"cannot read file: {e.strerror or e}", path=str(path))
        rows: list[tuple[int, int, int | None]] = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise ParseError("expected node_id, parent_id, vertex_or_dash", path=str(path), line=lineno)
            try:
                nid = int(fields[0])
                pid = int(fields[1])
                vertex = None if fields[2] == "-" else int(fields[2])
            except ValueError:
                raise ParseError(f"malformed tree row: {line!r}", path=str(path), line=lineno)
            rows.append((nid, pid, vertex))
        if not rows:
            raise ParseError("tree file has no rows", path=str(path))
        nodes: dict[int, TreeNode] = {}
        root_id = None
        for nid, pid, vertex in rows:
            if nid in nodes:
                raise ParseError(f"duplicate node id {nid}", path=str(path))
            nodes[nid] = TreeNode(nid, None if pid == -1 else pid, [], 0.0, 0.0, vertex)
            if pid == -1:
                if root_id is not None:
                    raise ParseError("multiple roots in tree file", path=str(path))
                root_id = nid
        if root_id is None:
            raise ParseError("tree file has no root (parent -1)", path=str(path))
        for nid, pid, _ in rows:
            if pid == -1:
                continue
            if pid not in nodes:
                raise ParseError(f"node {nid} references unknown parent {pid}", path=str(path))
            nodes[pid].children.append(nid)
        tree = cls(graph, nodes, root_id)
        tree._validate_structure()
        fresh = tree.recompute_caches()
        for nid, (v_ref, g_ref) in fresh.items():
            nodes[nid].volume = v_ref
            nodes[nid].cut = g_ref
        tree.validate()
        return tree


# -- module-level operations -------------------------------------------


def _require_positive_degrees(g: Graph) -> None:
    if g.edge_count == 0:
        raise DegenerateGraphError("graph has no edges")
    if np.any(g.degrees <= 0.0):
        bad = int(np.argmax(g.degrees <= 0.0))
        raise DegenerateGraphError(f"vertex {bad} is isolated")


def single_level_tree(g: Graph) -> EncodingTree:
    """Root with every vertex as a direct leaf child."""
    _require_positive_degrees(g)
    vol = volume(g)
    nodes: dict[int, TreeNode] = {}
    root_id = g.n
    nodes[root_id] = TreeNode(root_id, None, list(range(g.n)), vol, 0.0, None)
    for v in range(g.n):
        d = float(g.degrees[v])
        nodes[v] = TreeNode(v, root_id, [], d, d, v)
    return EncodingTree(g, nodes, root_id)


def tree_entropy(g: Graph, t: EncodingTree) -> EntropyReport:
    """Entropy of the tree on g, with per-node terms and the flat baseline."""
    t.validate(g)
    vol = volume(g)
    per_node: dict[int, float] = {}
    total = 0.0
    for nid in sorted(t.nodes):
        if nid == t.root_id:
            continue
        term = t.node_term(nid, vol)
        per_node[nid] = term
        total += term
    h1 = one_dim_entropy(g)
    return EntropyReport(h1=h1, h_tree=total, per_node=per_node, normalized=total / h1)


def combine(t: EncodingTree, a: int, b: int) -> float:
    return t.combine(a, b)


def lift(t: EncodingTree, a: int) -> float:
    return t.lift(a)


# -- greedy builder -----------------------------------------------------


class _Builder:
    """Array-backed state for the greedy construction.

    Children are kept as insertion-ordered dicts for O(1) removal.  For
    the lift phase every node is assigned the contiguous leaf-position
    interval it covered when the binary hierarchy was finished; a node's
    current vertex set is its interval minus the intervals that departed
    via lifts, so membership tests and boundary ("cut") sums stay
    vectorizable throughout.
    """

    def __init__(self, g: Graph, k_height: int, binary_combine: bool):
        self.g = g
        self.k = k_height
        self.binary = binary_combine
        self.vol = volume(g)
        n = g.n
        cap = 2 * n + 4
        self.parent = np.full(cap, -1, dtype=np.int64)
        self.vols = np.zeros(cap, dtype=np.float64)
        self.cuts = np.zeros(cap, dtype=np.float64)
        self.childg = np.zeros(cap, dtype=np.float64)
        self.alive = np.zeros(cap, dtype=bool)
        self.children: list[dict[int, None] | None] = [None] * cap
        self.root = n
        self.next_id = n + 1
        # cross-check every cached boundary weight after each lift; only
        # for tests, the rescan is quadratic
        self._audit = False
        self.alive[: n + 1] = True
        self.vols[:n] = g.degrees
        self.cuts[:n] = g.degrees
        self.vols[self.root] = self.vol
        self.children[self.root] = {}
        for v in range(n):
            self.parent[v] = self.root

    def _grow(self, need: int) -> None:
        cap = len(self.parent)
        if need < cap:
            return
        new_cap = max(need + 1, cap * 2)
        for name in ("parent", "vols", "cuts", "childg"):
            arr = getattr(self, name)
            fill = -1 if name == "parent" else 0
            grown = np.full(new_cap, fill, dtype=arr.dtype)
            grown[:cap] = arr
            setattr(self, name, grown)
        grown_alive = np.zeros(new_cap, dtype=bool)
        grown_alive[:cap] = self.alive
        self.alive = grown_alive
        self.children.extend([None] * (new_cap - cap))

    # ---- phase 1: greedy combines ------------------------------------

    def run_combine_phase(self) -> None:
        comps = connected_components(self.g)
        self.merge_cut: dict[int, float] = {}
        self.final_adj: dict[int, float] = {}
        self._uf = list(range(self.g.n))
        self._top_of = list(range(self.g.n))
        if len(comps) == 1:
            self._combine_component(comps[0], self.root)
            group_parents = [self.root]
        else:
            group_parents = []
            for comp in comps:
                cid = self.next_id
                self.next_id += 1
                self._grow(cid)
                self.alive[cid] = True
                self.parent[cid] = self.root
                self.vols[cid] = float(np.sum(self.g.degrees[comp]))
                self.cuts[cid] = 0.0
                self.children[cid] = {}
                for v in comp:
                    self.parent[v] = cid
                self.children[self.root][cid] = None
                self._combine_component(comp, cid)
                group_parents.append(cid)
        # assemble the children dicts that were tracked only by count,
        # in id order so runs are reproducible
        for pnode in group_parents:
            kids = {}
            for nid in range(self.next_id):
                if self.alive[nid] and self.parent[nid] == pnode:
                    kids[nid] = None
            self.children[pnode] = kids
            self.childg[pnode] = float(sum(self.cuts[c] for c in kids))
        if len(comps) > 1:
            rk = {cid: None for cid in group_parents}
            self.children[self.root] = rk
            self.childg[self.root] = float(sum(self.cuts[c] for c in rk))

    def _uf_find(self, x: int) -> int:
        uf = self._uf
        while uf[x] != x:
            uf[x] = uf[uf[x]]
            x = uf[x]
        return x

    def _combine_component(self, comp: list[int], pnode: int) -> None:
        """Greedy pair merging within one component.

        The quotient graph is tracked over representatives (always the
        original vertex id of a cluster's larger half), with small-to-large
        folding so adjacency upkeep stays near-linear.  Queue entries are
        revalidated lazily: a popped key is never below the pair's current
        value, so a key that matches its recomputation is the true maximum.
        """
        parent_vol = float(self.vols[pnode])
        vol = self.vol
        adj: dict[int, dict[int, float]] = {v: {} for v in comp}
        heap: list[tuple[float, int, int, int, int]] = []
        for u in comp:
            for v, w in self.g.neighbors(u):
                if u < v:
                    adj[u][v] = w
                    adj[v][u] = w
                    delta = (2.0 * w / vol) * math.log2(parent_vol / (self.vols[u] + self.vols[v]))
                    heapq.heappush(heap, (-delta, u, v, u, v))
        top_of = self._top_of
        child_count = len(comp)
        while heap and child_count > 2:
            neg, _, _, ru, rv = heapq.heappop(heap)
            key = -neg
            if not self.binary and key <= 0.0:
                break
            fa, fb = self._uf_find(ru), self._uf_find(rv)
            if fa == fb:
                continue
            ta, tb = top_of[fa], top_of[fb]
            w = adj[fa][fb]
            true_delta = (2.0 * w / vol) * math.log2(parent_vol / (self.vols[ta] + self.vols[tb]))
            if true_delta != key:
                lo_t, hi_t = (ta, tb) if ta < tb else (tb, ta)
                heapq.heappush(heap, (-true_delta, lo_t, hi_t, fa, fb))
                continue
            if not self.binary and true_delta <= 0.0:
                break
            nid = self.next_id
            self.next_id += 1
            self._grow(nid)
            self.alive[nid] = True
            self.parent[nid] = pnode
            self.parent[ta] = nid
            self.parent[tb] = nid
            if ta > tb:
                ta, tb = tb, ta
            self.children[nid] = {ta: None, tb: None}
            self.vols[nid] = self.vols[ta] + self.vols[tb]
            self.cuts[nid] = self.cuts[ta] + self.cuts[tb] - 2.0 * w
            self.childg[nid] = self.cuts[ta] + self.cuts[tb]
            self.merge_cut[nid] = w
            child_count -= 1
            if len(adj[fa]) < len(adj[fb]):
                small, big = fa, fb
            else:
                small, big = fb, fa
            ds = adj.pop(small)
            db = adj[big]
            db.pop(small)
            changed = []
            for x, wx in ds.items():
                if x == big:
                    continue
                ax = adj[x]
                ax.pop(small)
                if x in db:
                    db[x] += wx
                    changed.append(x)
                else:
                    db[x] = wx
                ax[big] = db[x]
            self._uf[small] = big
            top_of[big] = nid
            for x in changed:
                tx = top_of[x]
                wx = db[x]
                delta = (2.0 * wx / vol) * math.log2(parent_vol / (self.vols[nid] + self.vols[tx]))
                lo_t, hi_t = (nid, tx) if nid < tx else (tx, nid)
                heapq.heappush(heap, (-delta, lo_t, hi_t, big, x))
        # leftover quotient adjacency gives each survivor's boundary
        # weight toward its siblings, which seeds the lift phase
        for rep, row in adj.items():
            self.final_adj[top_of[rep]] = float(sum(row[k] for k in sorted(row)))

    # ---- phase 2: greedy lifts ---------------------------------------

    def _set_coordinates(self) -> None:
        """(Re)number the leaves in depth-first order and rebuild every
        position-indexed structure.  Rerunning this during the lift phase
        clears accumulated departure intervals, which keeps the per-node
        fragment lists short."""
        n = self.g.n
        children = self.children
        lo = [0] * self.next_id
        hi = [0] * self.next_id
        depth_of = [0] * self.next_id
        pos2v_list: list[int] = []
        leafdepth_list: list[int] = []
        cursor = 0
        # integer-only stack; ~nid marks the post-visit return to a node
        stack = [self.root]
        while stack:
            nid = stack.pop()
            if nid < 0:
                hi[~nid] = cursor
                continue
            lo[nid] = cursor
            kids = children[nid]
            if not kids:
                pos2v_list.append(nid)
                leafdepth_list.append(depth_of[nid])
                cursor += 1
                hi[nid] = cursor
                continue
            stack.append(~nid)
            d1 = depth_of[nid] + 1
            for c in reversed(list(kids)):
                depth_of[c] = d1
                stack.append(c)
        self.lo = lo
        self.hi = hi
        pos2v = np.array(pos2v_list, dtype=np.int64)
        depth_of_leafpos = np.array(leafdepth_list, dtype=np.int64)
        v2pos = np.zeros(n, dtype=np.int64)
        v2pos[pos2v] = np.arange(n)
        indptr, nbr, wt = self.g.csr()
        lens = indptr[pos2v + 1] - indptr[pos2v]
        starts = indptr[pos2v]
        total = int(lens.sum())
        offs = np.zeros(n, dtype=np.int64)
        np.cumsum(lens[:-1], out=offs[1:])
        flat = np.arange(total, dtype=np.int64) - np.repeat(offs, lens) + np.repeat(starts, lens)
        self.pos_indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(lens, out=self.pos_indptr[1:])
        self.pos_nbr = v2pos[nbr[flat]]
        self.pos_wt = wt[flat].astype(np.float64)
        deg_pos = self.g.degrees[pos2v]
        self.deg_prefix = np.zeros(n + 1, dtype=np.float64)
        np.cumsum(deg_pos, out=self.deg_prefix[1:])
        self.leaf_depth = depth_of_leafpos
        self.deep_count = int(np.count_nonzero(self.leaf_depth > self.k))
        self.removed: dict[int, list[tuple[int, int]]] = {}
        self.removed_ver: dict[int, int] = {}
        self._bounds_cache: dict[int, tuple[int, np.ndarray]] = {}
        self._pieces_cache: dict[int, tuple[int, list[tuple[int, int]]]] = {}
        self.pos2v = pos2v
        self._frag_since = 0

    def prepare_lift_phase(self) -> None:
        self._set_coordinates()
        # rebuild coordinates once the departure intervals have grown by
        # this many fragments; resets the interval lists to empty
        self.rebuild_cap = max(1024, self.g.n // 4)
        # two staleness clocks per node: ver_set ticks when the node's own
        # vertex set shrinks (departures, changing volume, boundary and the
        # boundary weights of its children toward it), ver_childg also
        # ticks on arrivals (which only change the summed child boundary)
        self.ver_set = np.zeros(self.next_id + 1, dtype=np.int64)
        self.ver_childg = np.zeros(self.next_id + 1, dtype=np.int64)
        self.r_cache: dict[int, tuple[int, float]] = {}
        # seed boundary weights from the combine bookkeeping; entries for
        # nodes the height pass reparents simply miss on their key and get
        # recomputed on demand
        self.heap: list = []
        # one live queue entry per node: every push bumps the node's
        # counter, so older duplicates die in O(1) at pop time instead of
        # going through a recompute-and-repush round each
        self._pv = [0] * len(self.parent)
        # leaf candidates with the same degree, volume and boundary toward
        # the same parent have identical lift deltas, so they share one
        # queue entry: the class member with the smallest id stands in for
        # the rest (which also matches the tie-break order)
        self._cls_of: dict[int, tuple[int, float, float, float]] = {}
        self._cls_members: dict[tuple[int, float, float, float], list[int]] = {}
        self._rep: dict[tuple[int, float, float, float], int] = {}
        for nid in range(self.next_id):
            if not self.alive[nid]:
                continue
            p = self.parent[nid]
            if p == -1 or p == self.root:
                continue
            if nid in self.merge_cut_children_r:
                r = self.merge_cut_children_r[nid]
            else:
                r = self._cut_to_parent_rest(nid)
            self.r_cache[nid] = (int(p), r)
        # the queue itself is filled by the first pop's rebuild, which also
        # registers the candidate classes (uniform for both the flattened
        # and the already-short case)

    @property
    def merge_cut_children_r(self) -> dict[int, float]:
        # r of a child of a binary merge node is just the recorded cut
        # between the two merged halves; for children of component nodes
        # it is the summed leftover quotient adjacency
        if not hasattr(self, "_mccr"):
            out: dict[int, float] = {}
            for nid, c in self.merge_cut.items():
                a, b = self.children[nid]
                out[a] = c
                out[b] = c
            for x, s in self.final_adj.items():
                if self.alive[x] and self.parent[x] != self.root and self.parent[x] != -1:
                    out.setdefault(x, s)
            self._mccr = out
        return self._mccr

    def _pieces(self, nid: int) -> list[tuple[int, int]]:
        ver = self.removed_ver.get(nid, 0)
        cached = self._pieces_cache.get(nid)
        if cached is not None and cached[0] == ver:
            return cached[1]
        lo, hi = self.lo[nid], self.hi[nid]
        removed = self.removed.get(nid)
        if not removed:
            out = [(lo, hi)]
        else:
            out = []
            cur = lo
            for l, h in removed:
                if l > cur:
                    out.append((cur, l))
                cur = h
            if cur < hi:
                out.append((cur, hi))
        self._pieces_cache[nid] = (ver, out)
        return out

    @staticmethod
    def _subtract_pieces(base: list[tuple[int, int]],
                         minus: list[tuple[int, int]]) -> list[tuple[int, int]]:
        """Set difference of two sorted disjoint interval lists."""
        out = []
        j = 0
        for l, h in base:
            cur = l
            while j < len(minus) and minus[j][1] <= cur:
                j += 1
            k = j
            while k < len(minus) and minus[k][0] < h:
                ml, mh = minus[k]
                if ml > cur:
                    out.append((cur, ml))
                cur = max(cur, mh)
                if mh >= h:
                    break
                k += 1
            if cur < h:
                out.append((cur, h))
        return out

    def _gather_edges(self, pieces) -> tuple[np.ndarray, np.ndarray]:
        if len(pieces) == 1:
            l, h = pieces[0]
            s, e = self.pos_indptr[l], self.pos_indptr[h]
            return self.pos_nbr[s:e], self.pos_wt[s:e]
        nbrs = [self.pos_nbr[self.pos_indptr[l]: self.pos_indptr[h]] for l, h in pieces]
        wts = [self.pos_wt[self.pos_indptr[l]: self.pos_indptr[h]] for l, h in pieces]
        return np.concatenate(nbrs), np.concatenate(wts)

    def _bounds_of(self, nid: int, removed) -> np.ndarray:
        ver = self.removed_ver.get(nid, 0)
        cached = self._bounds_cache.get(nid)
        if cached is not None and cached[0] == ver:
            return cached[1]
        arr = np.array([b for iv in removed for b in iv], dtype=np.int64)
        self._bounds_cache[nid] = (ver, arr)
        return arr

    def _member_mask(self, nb: np.ndarray, nid: int) -> np.ndarray:
        mask = (nb >= self.lo[nid]) & (nb < self.hi[nid])
        removed = self.removed.get(nid)
        if removed:
            bounds = self._bounds_of(nid, removed)
            inside_removed = (np.searchsorted(bounds, nb, side="right") % 2) == 1
            mask &= ~inside_removed
        return mask

    def _cut_to_parent_rest(self, nid: int) -> float:
        """Boundary weight from nid's current set to the rest of its
        parent's current set."""
        beta = int(self.parent[nid])
        pieces = self._pieces(nid)
        if len(pieces) == 1 and pieces[0][1] - pieces[0][0] == 1:
            # single-leaf fast path: the row is tiny and a leaf cannot
            # contain its neighbors, so membership in the parent suffices
            l = pieces[0][0]
            s, e = int(self.pos_indptr[l]), int(self.pos_indptr[l + 1])
            nb = self.pos_nbr[s:e]
            wt = self.pos_wt[s:e]
            return float(wt[self._member_mask(nb, beta)].sum())
        size_a = sum(h - l for l, h in pieces)
        pieces_b = self._pieces(beta)
        size_b = sum(h - l for l, h in pieces_b)
        if size_b - size_a < size_a:
            # enumerating from the smaller side of the split touches far
            # fewer edge rows; the boundary weight is the same either way
            rest = self._subtract_pieces(pieces_b, pieces)
            nb, wt = self._gather_edges(rest)
            return float(wt[self._member_mask(nb, nid)].sum())
        nb, wt = self._gather_edges(pieces)
        in_beta = self._member_mask(nb, beta)
        in_self = self._member_mask(nb, nid)
        return float(wt[in_beta & ~in_self].sum())

    def _check_r_invariant(self) -> None:
        for x, ent in list(self.r_cache.items()):
            if not self.alive[x]:
                continue
            p = int(self.parent[x])
            if ent[0] != p or p == self.root or p == -1:
                continue
            brute = self._cut_to_parent_rest(x)
            if abs(ent[1] - brute) > 1e-6:
                raise AssertionError(f"boundary cache drift on node {x}: {ent[1]} vs {brute}")

    def _r_of(self, nid: int) -> float:
        # cached boundary weights are patched on every departure that
        # touches them, so an entry keyed by the current parent is exact
        beta = int(self.parent[nid])
        cached = self.r_cache.get(nid)
        if cached is not None and cached[0] == beta:
            return cached[1]
        r = self._cut_to_parent_rest(nid)
        self.r_cache[nid] = (beta, r)
        return r

    def _lift_delta(self, nid: int, r: float | None) -> tuple[float, float]:
        """Entropy drop of lifting nid to its grandparent.  With r=None the
        boundary weight is resolved (cache or fresh); passing r=0.0 gives a
        cheap optimistic value since the delta is non-increasing in r."""
        beta = int(self.parent[nid])
        gamma = int(self.parent[beta])
        ga, va = float(self.cuts[nid]), float(self.vols[nid])
        gb, vb = float(self.cuts[beta]), float(self.vols[beta])
        vg = self.vol if gamma == self.root else float(self.vols[gamma])
        vol = self.vol
        if len(self.children[beta]) == 1:
            d = 0.0 if vb == vg else ((gb - ga) / vol) * math.log2(vg / vb)
            return d, 0.0
        if r is None:
            r = self._r_of(nid)
        vbp = vb - va
        gbp = gb - ga + 2.0 * r
        d = 0.0
        if ga and vb != vg:
            d += (ga / vol) * math.log2(vb / vg)
        cgm = self.childg[beta] - ga
        if cgm and vbp > 0.0:
            d += (cgm / vol) * math.log2(vb / vbp)
        if gb and vb != vg:
            d += (gb / vol) * math.log2(vg / vb)
        if gbp and vbp > 0.0:
            d -= (gbp / vol) * math.log2(vg / vbp)
        return d, r

    def _reseat(self, key: tuple[int, float, float, float]) -> None:
        """Restore a candidate class after membership churn: drop stale
        ids, and when the smallest member changed give it a fresh queue
        entry (the displaced one dies at pop via the rep check)."""
        mem = self._cls_members.get(key)
        if mem is None:
            return
        cls = self._cls_of
        while mem and cls.get(mem[0]) != key:
            heapq.heappop(mem)
        if not mem:
            del self._cls_members[key]
            self._rep.pop(key, None)
            return
        top = mem[0]
        if self._rep.get(key) != top:
            self._rep[key] = top
            self._push(top, exact=True, r=key[3])

    def _check_cls_invariant(self) -> None:
        n = self.g.n
        live = {e[3] for e in self.heap if e[12] == self._pv[e[3]]}
        for v in range(n):
            p = int(self.parent[v])
            if p == -1 or p == self.root:
                continue
            key = self._cls_of.get(v)
            if key is None or key[0] != p:
                raise AssertionError(f"leaf {v} not indexed under parent {p}")
            if key[1] != float(self.cuts[v]) or key[2] != float(self.vols[v]):
                raise AssertionError(f"leaf {v} classed under wrong scalars")
            ent = self.r_cache.get(v)
            if ent is not None and (ent[0] != p or ent[1] != key[3]):
                raise AssertionError(f"leaf {v} class r diverged from cache")
            rep = self._rep.get(key)
            if rep is None or self._cls_of.get(rep) != key:
                raise AssertionError(f"class of leaf {v} has no valid representative")
            if rep > v:
                raise AssertionError(f"representative {rep} is not the smallest id (leaf {v})")
            if rep not in live:
                raise AssertionError(f"representative {rep} has no live queue entry")

    def _push(self, nid: int, exact: bool, r: float | None = None) -> None:
        beta = int(self.parent[nid])
        if beta == -1 or beta == self.root or not self.alive[nid]:
            return
        gamma = int(self.parent[beta])
        if exact:
            delta, r_used = self._lift_delta(nid, r if r is not None else None)
            flag = True
        else:
            cached = self.r_cache.get(nid)
            if cached is not None and cached[0] == beta:
                delta, r_used = self._lift_delta(nid, cached[1])
                flag = True
            else:
                delta, r_used = self._lift_delta(nid, 0.0)
                flag = len(self.children[beta]) == 1
        lo_t, hi_t = (nid, beta) if nid < beta else (beta, nid)
        pv = self._pv[nid] + 1
        self._pv[nid] = pv
        heapq.heappush(
            self.heap,
            (-delta, lo_t, hi_t, nid, beta, int(self.ver_set[nid]),
             int(self.ver_set[beta]), int(self.ver_childg[beta]),
             gamma, int(self.ver_set[gamma]), flag, r_used, pv),
        )

    def _repush(self, nid: int, beta: int, gamma: int, delta: float, r: float) -> None:
        lo_t, hi_t = (nid, beta) if nid < beta else (beta, nid)
        pv = self._pv[nid] + 1
        self._pv[nid] = pv
        heapq.heappush(
            self.heap,
            (-delta, lo_t, hi_t, nid, beta, int(self.ver_set[nid]),
             int(self.ver_set[beta]), int(self.ver_childg[beta]),
             gamma, int(self.ver_set[gamma]), True, r, pv),
        )

    def _pop_valid(self):
        """Next exact best lift as (delta, r, node), or None when no
        candidates remain."""
        rebuilds = 0
        while True:
            if not self.heap:
                if rebuilds >= 1:
                    return None
                rebuilds += 1
                self._cls_of = {}
                self._cls_members = {}
                self._rep = {}
                n = self.g.n
                for nid in range(self.next_id):
                    if not self.alive[nid]:
                        continue
                    p = int(self.parent[nid])
                    if p == -1 or p == self.root:
                        continue
                    if nid < n:
                        r = self._r_of(nid)
                        key = (p, float(self.cuts[nid]), float(self.vols[nid]), r)
                        self._cls_of[nid] = key
                        bucket = self._cls_members.get(key)
                        if bucket is None:
                            # the ascending scan makes the first member the
                            # smallest id, hence the representative
                            self._cls_members[key] = [nid]
                            self._rep[key] = nid
                            self._push(nid, exact=True, r=r)
                        else:
                            bucket.append(nid)
                    else:
                        self._push(nid, exact=True)
                if not self.heap:
                    return None
                continue
            neg, _, _, nid, beta, vsn, vsb, vcb, gamma, vsg, exact, r, pv = heapq.heappop(self.heap)
            if pv != self._pv[nid] or not self.alive[nid] or self.parent[nid] != beta:
                continue
            key = self._cls_of.get(nid)
            if key is not None and self._rep.get(key) != nid:
                # a classmate with a smaller id speaks for this delta now
                continue
            sets_ok = self.ver_set[nid] == vsn and self.ver_set[beta] == vsb
            if (
                sets_ok
                and self.parent[beta] == gamma
                and self.ver_set[gamma] == vsg
            ):
                if exact and self.ver_childg[beta] == vcb:
                    return (-neg, r, nid)
                # both vertex sets are unchanged, so an exact entry's
                # boundary weight is still right; only arithmetic reruns
                r_true = r if exact else self._r_of(nid)
                delta, r_true = self._lift_delta(nid, r_true)
            elif exact and sets_ok:
                # the grandparent moved or changed, but the boundary weight
                # only involves the node and its parent, so it still holds
                delta, r_true = self._lift_delta(nid, r)
            else:
                delta, r_true = self._lift_delta(nid, None)
            if delta == -neg:
                return (delta, r_true, nid)
            self._repush(nid, beta, int(self.parent[beta]), delta, r_true)

    def _merge_removed(self, nid: int, pieces: list[tuple[int, int]]) -> None:
        cur = self.removed.setdefault(nid, [])
        for l, h in pieces:
            i = bisect.bisect_left(cur, (l, h))
            if i > 0 and cur[i - 1][1] >= l:
                i -= 1
                l = cur[i][0]
                h = max(h, cur[i][1])
                del cur[i]
            while i < len(cur) and cur[i][0] <= h:
                h = max(h, cur[i][1])
                del cur[i]
            cur.insert(i, (l, h))
        self.removed_ver[nid] = self.removed_ver.get(nid, 0) + 1
        self._frag_since += len(pieces)

    def _execute_lift(self, nid: int, r: float) -> None:
        beta = int(self.parent[nid])
        gamma = int(self.parent[beta])
        pieces = self._pieces(nid)
        kids_b = self.children[beta]
        del kids_b[nid]
        ga = float(self.cuts[nid])
        gb_old = float(self.cuts[beta])
        if kids_b:
            self.vols[beta] -= self.vols[nid]
            self.cuts[beta] = gb_old - ga + 2.0 * r
            self.childg[beta] -= ga
            self.ver_set[beta] += 1
            self.ver_childg[beta] += 1
            self._merge_removed(beta, pieces)
            self.childg[gamma] += 2.0 * r
        else:
            self.alive[beta] = False
            del self.children[gamma][beta]
            self.childg[gamma] += ga - gb_old
        self.parent[nid] = gamma
        self.children[gamma][nid] = None
        self.ver_childg[gamma] += 1
        # keep cached boundary weights exact instead of invalidating them:
        # the departure changes r only for siblings adjacent to the moved
        # set (by the connecting weight), shifts beta's own r toward gamma
        # by the crossing balance, and nid's r under gamma is its edge
        # weight staying inside gamma
        rc = self.r_cache
        cls = self._cls_of
        members = self._cls_members
        track_nid = gamma != self.root
        ent_b = rc.get(beta) if kids_b else None
        if ent_b is not None and ent_b[0] != gamma:
            ent_b = None
        dirty: set = set()
        old_key = cls.get(nid)
        if old_key is not None:
            # the moved leaf leaves its class; the reseat below cleans its
            # stale membership and queues the next smallest classmate
            dirty.add(old_key)
        if kids_b or track_nid:
            parent = self.parent
            pos2v = self.pos2v
            pos_nbr = self.pos_nbr
            pos_wt = self.pos_wt
            indptr = self.pos_indptr
            r_nid = 0.0
            rb_shift = 0.0
            for l, h in pieces:
                for idx in range(int(indptr[l]), int(indptr[h])):
                    c = int(pos2v[pos_nbr[idx]])
                    while True:
                        p = int(parent[c])
                        if p == nid or p == -1:
                            c = -1
                            break
                        if p == beta or p == gamma:
                            break
                        c = p
                    if c == -1:
                        continue
                    w = float(pos_wt[idx])
                    r_nid += w
                    if p == beta:
                        rb_shift += w
                        ent_c = rc.get(c)
                        if ent_c is not None and ent_c[0] == beta:
                            r_new = ent_c[1] - w
                            rc[c] = (beta, r_new)
                            key_c = cls.get(c)
                            if key_c is not None:
                                nk = (beta, key_c[1], key_c[2], r_new)
                                cls[c] = nk
                                mem = members.get(nk)
                                if mem is None:
                                    members[nk] = [c]
                                else:
                                    heapq.heappush(mem, c)
                                dirty.add(key_c)
                                dirty.add(nk)
                    else:
                        rb_shift -= w
            if ent_b is not None:
                rc[beta] = (gamma, ent_b[1] + rb_shift)
            if track_nid:
                rc[nid] = (gamma, r_nid)
        if not kids_b:
            rc.pop(beta, None)
        if nid < self.g.n:
            if track_nid:
                nk = (gamma, ga, float(self.vols[nid]), r_nid)
                cls[nid] = nk
                mem = members.get(nk)
                if mem is None:
                    members[nk] = [nid]
                else:
                    heapq.heappush(mem, nid)
                dirty.add(nk)
            else:
                cls.pop(nid, None)
        for k in dirty:
            self._reseat(k)
        # stale heap entries elsewhere self-heal when popped (the version
        # fields force a recompute-and-repush); fresh pushes are only
        # needed where a node would otherwise have no entry at all, or
        # where the delta jumps discontinuously (the old parent down to a
        # single child)
        if nid >= self.g.n and gamma != self.root:
            self._push(nid, exact=False)
        if len(kids_b) == 1:
            self._push(next(iter(kids_b)), exact=True)
        if self._audit:
            self._check_r_invariant()
            self._check_cls_invariant()

    def _flatten_below_budget(self) -> None:
        """Cut the hierarchy at the last depth where internal nodes are
        allowed.  Every internal node sitting at the cut adopts its whole
        leaf set as direct children and the internals below it dissolve.

        Dissolving a too-deep internal node (lifting its children out one
        by one until it disappears) is mandatory to meet the height
        budget, and doing so exhaustively lands on the same tree in any
        order: each leaf ends up under its deepest surviving ancestor.
        So the fixed point is materialized in one pass instead of paying
        for one lift at a time.  Spans must be fresh (no departures yet),
        which holds right after prepare_lift_phase."""
        cut_d = self.k - 1
        stack = [(self.root, 0)]
        while stack:
            nid, d = stack.pop()
            kids = self.children[nid]
            if not kids:
                continue
            if d < cut_d:
                for c in kids:
                    stack.append((c, d + 1))
                continue
            if all(not self.children[c] for c in kids):
                continue
            sub = list(kids)
            while sub:
                x = sub.pop()
                ck = self.children[x]
                if ck:
                    sub.extend(ck)
                    self.alive[x] = False
            l, h = self.lo[nid], self.hi[nid]
            leaves = self.pos2v[l:h]
            self.children[nid] = {int(v): None for v in leaves}
            self.parent[leaves] = nid
            # every child is now a single vertex, so the summed child
            # boundary is just the degree mass of the span
            self.childg[nid] = float(self.deg_prefix[h] - self.deg_prefix[l])
            self.ver_childg[nid] += 1
        self.deep_count = 0

    def run_lift_phase(self) -> None:
        if self.deep_count > 0:
            self._flatten_below_budget()
        # stale keys may understate a delta that rose since its push, so a
        # non-positive top is only trusted right after a full exact rebuild
        clean = True
        while True:
            best = self._pop_valid()
            if best is None:
                return
            delta, r, nid = best
            if delta <= POSITIVE_EPS:
                if clean:
                    return
                clean = True
                self.heap = []
                continue
            self._execute_lift(nid, r)
            clean = False
            if self._frag_since >= self.rebuild_cap:
                self._set_coordinates()

    # ---- finalization -------------------------------------------------

    def finalize(self) -> EncodingTree:
        n = self.g.n
        nodes: dict[int, TreeNode] = {}
        for nid in range(self.next_id):
            if not self.alive[nid]:
                continue
            if nid < n:
                d = float(self.g.degrees[nid])
                parent = int(self.parent[nid])
                nodes[nid] = TreeNode(nid, parent, [], d, d, nid)
            else:
                parent = None if nid == self.root else int(self.parent[nid])
                kids = list(self.children[nid]) if self.children[nid] else []
                if nid == self.root:
                    v_exact, g_exact = self.vol, 0.0
                else:
                    v_exact, g_exact = self._exact_caches(nid)
                nodes[nid] = TreeNode(nid, parent, kids, v_exact, g_exact, None)
        return EncodingTree(self.g, nodes, self.root)

    def _exact_caches(self, nid: int) -> tuple[float, float]:
        """Volume and boundary weight of a node's final vertex set,
        recomputed from the graph so incremental drift cannot leak out."""
        pieces = self._pieces(nid)
        v = float(sum(self.deg_prefix[h] - self.deg_prefix[l] for l, h in pieces))
        nb, wt = self._gather_edges(pieces)
        inside = self._member_mask(nb, nid)
        cut = float(wt[~inside].sum())
        return v, cut


def build_optimal_tree(g: Graph, k_height: int, *, binary_combine: bool = False) -> EncodingTree:
    """Greedy construction of a low-entropy encoding tree of height at most
    k_height.

    Phase one repeatedly wraps the sibling pair with the best strictly
    positive entropy drop (only pairs joined by at least one edge are
    candidates); with ``binary_combine`` the merging continues regardless
    of sign until only two top groups remain.  Phase two first enforces
    the height budget: every internal node deeper than the budget allows
    must dissolve (its children lift out until it disappears), and since
    exhaustive dissolution lands on the same tree in any order it is done
    in one flattening pass.  It then applies the lift with the best delta
    while that delta stays strictly positive.  Ties prefer the
    lexicographically smallest (min id, max id) pair.  Components of a
    disconnected graph are grouped under their own top-level nodes and
    never mixed by combines.
    """
    if not isinstance(k_height, int) or k_height < 2:
        raise ConfigError(f"height budget must be an integer >= 2, got {k_height!r}")
    _require_positive_degrees(g)
    builder = _Builder(g, k_height, binary_combine)
    builder.run_combine_phase()
    builder.prepare_lift_phase()
    builder.run_lift_phase()
    return builder.finalize()
