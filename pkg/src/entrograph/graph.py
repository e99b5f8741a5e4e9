"""Weighted undirected graphs and their TSV serialization.

A graph is a set of vertices 0..n-1, a set of undirected edges with
strictly positive weights, and an optional dense attribute matrix with
one row per vertex.  Instances are treated as immutable after
construction; everything derived (degree vector, adjacency) is either
computed up front or cached on first use.

Edge-list files are tab-separated with one edge per line::

    u<TAB>v[<TAB>weight]

Lines starting with ``#`` are comments.  A missing weight means 1.0.
``save_edge_list`` additionally writes a ``# n=<n>`` comment so graphs
with trailing isolated vertices round-trip; ``load_edge_list`` honours
it when present.

Attribute files are tab-separated ``id<TAB>f1<TAB>...<TAB>fd`` rows, one
per vertex, in any order.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .errors import DegenerateGraphError, ParseError, ValidationError


class Graph:
    """Simple undirected graph with positive edge weights.

    Parameters
    ----------
    n : int
        Number of vertices; vertex ids are exactly 0..n-1.
    edges : iterable of (u, v, w)
        Undirected edges.  Self loops, duplicate pairs (in either
        orientation), out-of-range ids and non-positive or non-finite
        weights are rejected.
    attributes : ndarray, optional
        Float matrix of shape (n, d) with finite entries.
    """

    __slots__ = ("n", "_edges", "attributes", "degrees", "_sorted_edges", "_adj", "_csr")

    def __init__(self, n, edges, attributes=None):
        if not isinstance(n, (int, np.integer)) or n < 0:
            raise ValidationError(f"vertex count must be a non-negative integer, got {n!r}")
        self.n = int(n)
        edge_map: dict[tuple[int, int], float] = {}
        degrees = np.zeros(self.n, dtype=np.float64)
        for item in edges:
            try:
                u, v, w = item
            except (TypeError, ValueError):
                raise ValidationError(f"edge must be a (u, v, w) triple, got {item!r}")
            u, v, w = int(u), int(v), float(w)
            if u == v:
                raise ValidationError(f"self-loop on vertex {u} is not allowed")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValidationError(f"edge ({u}, {v}) references a vertex outside 0..{self.n - 1}")
            if not math.isfinite(w) or w <= 0.0:
                raise ValidationError(f"edge ({u}, {v}) has non-positive or non-finite weight {w!r}")
            key = (u, v) if u < v else (v, u)
            if key in edge_map:
                raise ValidationError(f"duplicate edge for pair {key}")
            edge_map[key] = w
            degrees[u] += w
            degrees[v] += w
        self._edges = edge_map
        self.degrees = degrees
        self.degrees.flags.writeable = False
        if attributes is not None:
            attributes = validate_attributes(attributes, n=self.n)
        self.attributes = attributes
        self._sorted_edges = None
        self._adj = None
        self._csr = None

    # -- basic accessors ------------------------------------------------

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    def edges(self) -> list[tuple[int, int, float]]:
        """Edges as (u, v, w) with u < v, sorted by pair."""
        if self._sorted_edges is None:
            self._sorted_edges = [(u, v, w) for (u, v), w in sorted(self._edges.items())]
        return self._sorted_edges

    def edge_pairs(self) -> set[tuple[int, int]]:
        return set(self._edges.keys())

    def has_edge(self, u: int, v: int) -> bool:
        key = (u, v) if u < v else (v, u)
        return key in self._edges

    def weight(self, u: int, v: int) -> float:
        key = (u, v) if u < v else (v, u)
        return self._edges[key]

    def neighbors(self, u: int) -> list[tuple[int, float]]:
        """Neighbors of u as (v, w), sorted by v."""
        if self._adj is None:
            adj: list[list[tuple[int, float]]] = [[] for _ in range(self.n)]
            for (a, b), w in sorted(self._edges.items()):
                adj[a].append((b, w))
                adj[b].append((a, w))
            for row in adj:
                row.sort()
            self._adj = adj
        return self._adj[u]

    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Adjacency in CSR form: (indptr, neighbor ids, weights)."""
        if self._csr is None:
            counts = np.zeros(self.n, dtype=np.int64)
            for (u, v) in self._edges:
                counts[u] += 1
                counts[v] += 1
            indptr = np.zeros(self.n + 1, dtype=np.int64)
            np.cumsum(counts, out=indptr[1:])
            nbr = np.zeros(indptr[-1], dtype=np.int64)
            wt = np.zeros(indptr[-1], dtype=np.float64)
            cursor = indptr[:-1].copy()
            for (u, v), w in sorted(self._edges.items()):
                nbr[cursor[u]] = v
                wt[cursor[u]] = w
                cursor[u] += 1
                nbr[cursor[v]] = u
                wt[cursor[v]] = w
                cursor[v] += 1
            self._csr = (indptr, nbr, wt)
        return self._csr

    def with_attributes(self, attributes) -> "Graph":
        """Copy of this graph with a different attribute matrix."""
        g = Graph.__new__(Graph)
        g.n = self.n
        g._edges = self._edges
        g.degrees = self.degrees
        g.attributes = validate_attributes(attributes, n=self.n) if attributes is not None else None
        g._sorted_edges = self._sorted_edges
        g._adj = self._adj
        g._csr = self._csr
        return g

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        if self.n != other.n or self._edges != other._edges:
            return False
        if (self.attributes is None) != (other.attributes is None):
            return False
        if self.attributes is not None and not np.array_equal(self.attributes, other.attributes):
            return False
        return True

    def __repr__(self):
        d = 0 if self.attributes is None else self.attributes.shape[1]
        return f"Graph(n={self.n}, edges={self.edge_count}, attr_dim={d})"


def volume(g: Graph) -> float:
    """Total weighted degree, i.e. twice the sum of edge weights.

    Raises DegenerateGraphError for graphs without edges.
    """
    if g.edge_count == 0:
        raise DegenerateGraphError("graph has no edges; volume is undefined")
    return float(np.sum(g.degrees))


def connected_components(g: Graph) -> list[list[int]]:
    """Connected components as sorted vertex lists, ordered by smallest member."""
    seen = np.zeros(g.n, dtype=bool)
    comps: list[list[int]] = []
    for start in range(g.n):
        if seen[start]:
            continue
        stack = [start]
        seen[start] = True
        comp = []
        while stack:
            u = stack.pop()
            comp.append(u)
            for v, _ in g.neighbors(u):
                if not seen[v]:
                    seen[v] = True
                    stack.append(v)
        comp.sort()
        comps.append(comp)
    return comps


def is_connected(g: Graph) -> bool:
    return g.n <= 1 or len(connected_components(g)) == 1


def validate_attributes(attributes, n: int | None = None) -> np.ndarray:
    """Check an attribute matrix: 2-D, float, finite, optionally n rows."""
    arr = np.asarray(attributes, dtype=np.float64)
    if arr.ndim != 2:
        raise ValidationError(f"attribute matrix must be 2-D, got shape {arr.shape}")
    if arr.shape[1] < 1:
        raise ValidationError("attribute matrix must have at least one column")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("attribute matrix contains non-finite values")
    if n is not None and arr.shape[0] != n:
        raise ValidationError(f"attribute matrix has {arr.shape[0]} rows, expected {n}")
    return arr


# -- TSV I/O ------------------------------------------------------------


def load_edge_list(path) -> Graph:
    """Read a graph from an edge-list TSV file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ParseError(f"cannot read file: {e.strerror or e}", path=str(path))
    declared_n = None
    triples: list[tuple[int, int, float]] = []
    seen: set[tuple[int, int]] = set()
    max_id = -1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("n="):
                try:
                    declared_n = int(body[2:].strip())
                except ValueError:
                    raise ParseError(f"bad vertex-count comment {line!r}", path=str(path), line=lineno)
            continue
        fields = line.split("\t")
        if len(fields) not in (2, 3):
            raise ParseError(
                f"expected 2 or 3 tab-separated fields, got {len(fields)}", path=str(path), line=lineno
            )
        try:
            u = int(fields[0])
            v = int(fields[1])
        except ValueError:
            raise ParseError(f"vertex ids must be integers: {line!r}", path=str(path), line=lineno)
        if u < 0 or v < 0:
            raise ParseError(f"vertex ids must be non-negative: {line!r}", path=str(path), line=lineno)
        if u == v:
            raise ParseError(f"self-loop on vertex {u}", path=str(path), line=lineno)
        w = 1.0
        if len(fields) == 3:
            try:
                w = float(fields[2])
            except ValueError:
                raise ParseError(f"weight must be a number: {fields[2]!r}", path=str(path), line=lineno)
        if not math.isfinite(w) or w <= 0.0:
            raise ParseError(f"weight must be positive and finite, got {w}", path=str(path), line=lineno)
        key = (u, v) if u < v else (v, u)
        if key in seen:
            raise ParseError(f"duplicate edge for pair {key}", path=str(path), line=lineno)
        seen.add(key)
        triples.append((u, v, w))
        max_id = max(max_id, u, v)
    n = max_id + 1
    if declared_n is not None:
        if declared_n < n:
            raise ParseError(
                f"declared n={declared_n} but file references vertex {max_id}", path=str(path)
            )
        n = declared_n
    return Graph(n, triples)


def save_edge_list(g: Graph, path) -> None:
    """Write a graph as an edge-list TSV file (weights in full precision)."""
    path = Path(path)
    lines = [f"# n={g.n}"]
    for u, v, w in g.edges():
        lines.append(f"{u}\t{v}\t{w!r}")
    path.write_text("\n".join(lines) + "\n")


def load_attributes(path) -> np.ndarray:
    """Read an attribute matrix from an ``id<TAB>f1...fd`` TSV file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ParseError(f"cannot read file: {e.strerror or e}", path=str(path))
    rows: dict[int, list[float]] = {}
    width = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) < 2:
            raise ParseError("expected an id and at least one feature", path=str(path), line=lineno)
        try:
            vid = int(fields[0])
        except ValueError:
            raise ParseError(f"vertex id must be an integer: {fields[0]!r}", path=str(path), line=lineno)
        if vid < 0:
            raise ParseError(f"vertex id must be non-negative: {vid}", path=str(path), line=lineno)
        if vid in rows:
            raise ParseError(f"duplicate row for vertex {vid}", path=str(path), line=lineno)
        try:
            values = [float(f) for f in fields[1:]]
        except ValueError:
            raise ParseError(f"features must be numbers: {line!r}", path=str(path), line=lineno)
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise ParseError(
                f"ragged row: {len(values)} features, expected {width}", path=str(path), line=lineno
            )
        if not all(math.isfinite(x) for x in values):
            raise ParseError("features must be finite", path=str(path), line=lineno)
        rows[vid] = values
    if not rows:
        raise ParseError("attribute file has no data rows", path=str(path))
    n = len(rows)
    missing = [i for i in range(n) if i not in rows]
    if missing:
        raise ParseError(
            f"vertex ids must cover 0..{n - 1} exactly once; missing {missing[:5]}", path=str(path)
        )
    mat = np.array([rows[i] for i in range(n)], dtype=np.float64)
    return mat


def save_attributes(x, path) -> None:
    """Write an attribute matrix in ``id<TAB>f1...fd`` form."""
    arr = validate_attributes(x)
    path = Path(path)
    lines = []
    for i in range(arr.shape[0]):
        lines.append(str(i) + "\t" + "\t".join(repr(float(v)) for v in arr[i]))
    path.write_text("\n".join(lines) + "\n")


def relabel_edge_list(src, dst, mapping_path) -> dict[str, int]:
    """Rewrite an edge list whose endpoints are arbitrary string ids.

    Ids are assigned densely in order of first appearance.  The mapping is
    written as ``original<TAB>new`` TSV and also returned.
    """
    src, dst, mapping_path = Path(src), Path(dst), Path(mapping_path)
    try:
        text = src.read_text()
    except OSError as e:
        raise ParseError(f"cannot read file: {e.strerror or e}", path=str(src))
    mapping: dict[str, int] = {}
    out_lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) not in (2, 3):
            raise ParseError(
                f"expected 2 or 3 tab-separated fields, got {len(fields)}", path=str(src), line=lineno
            )
        ids = []
        for tok in fields[:2]:
            if tok not in mapping:
                mapping[tok] = len(mapping)
            ids.append(mapping[tok])
        rest = "\t" + fields[2] if len(fields) == 3 else ""
        out_lines.append(f"{ids[0]}\t{ids[1]}{rest}")
    dst.write_text("\n".join(out_lines) + "\n")
    mapping_path.write_text(
        "\n".join(f"{orig}\t{new}" for orig, new in mapping.items()) + "\n"
    )
    return mapping
