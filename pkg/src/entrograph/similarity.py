"""Attribute similarity, nearest-neighbor overlays, and edge fusion.

The functions here turn a vertex attribute matrix into a denser working
graph: pairwise Pearson similarity, a k-nearest-neighbor edge overlay,
and a reweighted union of the overlay with the original edges.  The k
parameter is chosen by probing successive values and watching the
one-dimensional entropy of the fused graph for a plateau.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ValidationError
from .graph import Graph
from .tree import one_dim_entropy

log = logging.getLogger(__name__)

# floor for fused edge weights; entropy needs every degree positive
WEIGHT_FLOOR = 1e-6

# dense n-by-n similarity guard (8 bytes per entry, two live copies)
MAX_DENSE_VERTICES = 50_000


def pcc_similarity(x: np.ndarray, max_vertices: int = MAX_DENSE_VERTICES) -> np.ndarray:
    """Pearson correlation between all attribute rows.

    Returns an n-by-n symmetric matrix with unit diagonal and entries in
    [-1, 1].  Rows with zero variance correlate with nothing; their
    off-diagonal entries are 0 and a warning is logged.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValidationError("attribute matrix must be two-dimensional")
    n, d = x.shape
    if n < 2:
        raise ValidationError("need at least two attribute rows")
    if d < 1:
        raise ValidationError("need at least one attribute column")
    if not np.isfinite(x).all():
        raise ValidationError("attribute matrix contains non-finite values")
    if n > max_vertices:
        est_gb = 2 * 8 * n * n / 1e9
        raise ConfigError(
            f"dense similarity for n={n} exceeds the {max_vertices}-vertex guard "
            f"(would need about {est_gb:.1f} GB); raise max_vertices to override"
        )
    sd = x.std(axis=1)
    good = np.flatnonzero(sd != 0.0)
    if good.size < n:
        log.warning(
            "%d attribute row(s) have zero variance; their similarities are set to 0",
            n - good.size,
        )
    s = np.zeros((n, n))
    if good.size >= 2:
        c = np.corrcoef(x[good])
        # BLAS reductions are not bitwise symmetric; average the halves
        s[np.ix_(good, good)] = (c + c.T) / 2.0
    np.clip(s, -1.0, 1.0, out=s)
    np.fill_diagonal(s, 1.0)
    return s


def knn_edges(s: np.ndarray, k: int) -> set[tuple[int, int]]:
    """Undirected union of every vertex's k most similar peers.

    Ties prefer the smaller vertex id.  A pair is present when either
    endpoint picked the other.
    """
    n = s.shape[0]
    if s.shape != (n, n):
        raise ValidationError("similarity matrix must be square")
    if not 1 <= k <= n - 1:
        raise ValidationError(f"k must be in [1, {n - 1}], got {k}")
    work = s.copy()
    np.fill_diagonal(work, -np.inf)
    # stable sort on the negated row: larger similarity first, then
    # smaller id among equals
    order = np.argsort(-work, axis=1, kind="stable")[:, :k]
    rows = np.repeat(np.arange(n), k)
    cols = order.ravel()
    lo = np.minimum(rows, cols)
    hi = np.maximum(rows, cols)
    return set(zip(lo.tolist(), hi.tolist()))


def fusion_offset(s: np.ndarray, fused_edge_count: int) -> float:
    """Constant added to every similarity when reweighting.

    Scales the total pairwise similarity by the vertex and fused edge
    counts so sparse graphs are not drowned by the overlay.
    """
    n = s.shape[0]
    total = (float(s.sum()) - float(np.trace(s))) / 2.0
    return total / (2.0 * n * fused_edge_count)


def fuse_and_reweight(g: Graph, overlay: set[tuple[int, int]], s: np.ndarray) -> Graph:
    """Union the graph's edges with an overlay pair set and reweight.

    Every fused edge (i, j) gets weight similarity[i, j] plus a shared
    offset, floored at WEIGHT_FLOOR.  Original weights do not carry over;
    the similarity signal replaces them.
    """
    n = g.n
    if s.shape != (n, n):
        raise ValidationError("similarity matrix does not match the graph")
    pairs = {(u, v) for u, v, _ in g.edges()}
    for u, v in overlay:
        if u == v:
            raise ValidationError(f"overlay contains self-pair ({u}, {v})")
        if not (0 <= u < n and 0 <= v < n):
            raise ValidationError(f"overlay pair ({u}, {v}) out of range")
        pairs.add((u, v) if u < v else (v, u))
    off = fusion_offset(s, len(pairs))
    edges = [
        (u, v, max(float(s[u, v]) + off, WEIGHT_FLOOR))
        for u, v in sorted(pairs)
    ]
    return Graph(n, edges, attributes=g.attributes)


@dataclass
class FusionResult:
    """Outcome of the k sweep: the fused graph at the chosen k."""

    fused: Graph
    k_selected: int
    h1_trace: list[tuple[int, float]] = field(repr=False)
    offset: float = 0.0


def select_k(
    g: Graph,
    s: np.ndarray,
    k_max: int | None = None,
    plateau_tol: float = 1e-3,
    window: int = 2,
) -> FusionResult:
    """Probe k = 2, 3, ... and keep the smallest k whose entropy gain
    has flattened out.

    The fused graph's one-dimensional entropy is recorded at each k.  The
    chosen k is the first whose next `window` relative gains all stay
    below plateau_tol; if the trace never flattens, the k with the
    largest entropy wins.
    """
    n = g.n
    if n < 3:
        raise ValidationError("k selection needs at least three vertices")
    if k_max is None:
        k_max = min(n - 1, 100)
    if not 2 <= k_max <= n - 1:
        raise ValidationError(f"k_max must be in [2, {n - 1}], got {k_max}")
    if plateau_tol <= 0:
        raise ValidationError("plateau_tol must be positive")
    if window < 1:
        raise ValidationError("window must be at least 1")

    trace: list[tuple[int, float]] = []
    entro: dict[int, float] = {}
    chosen: int | None = None
    for k in range(2, min(k_max + window, n - 1) + 1):
        fused = fuse_and_reweight(g, knn_edges(s, k), s)
        h1 = one_dim_entropy(fused)
        trace.append((k, h1))
        entro[k] = h1
        # candidate km plateaus when gains at km .. km+window-1 are all small
        km = k - window
        if km >= 2:
            flat = all(
                (entro[j + 1] - entro[j]) / entro[j] < plateau_tol
                for j in range(km, km + window)
            )
            if flat:
                chosen = km
                break
    if chosen is None:
        in_range = [(k, h) for k, h in trace if k <= k_max]
        best = max(h for _, h in in_range)
        chosen = min(k for k, h in in_range if h == best)
    fused = fuse_and_reweight(g, knn_edges(s, chosen), s)
    off = fusion_offset(s, len(fused.edges()))
    return FusionResult(fused=fused, k_selected=chosen, h1_trace=trace, offset=off)
