"""The iterative rebuild loop, plus the perturbation and synthetic-graph
helpers used to exercise it.

Each iteration embeds the attributes, fuses a similarity overlay into
the working graph, builds an encoding tree of bounded height, samples
edges down the tree, and reconstructs the working graph from them.  A
trace row per iteration records the chosen k, the fused graph's flat and
tree entropies, and per-stage wall times.
"""

from __future__ import annotations

import logging
import math
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, ProviderError, StageError, ValidationError
from .graph import Graph, is_connected, save_attributes, save_edge_list
from .sampling import SEED_MASK, annotate_probabilities, reconstruct, sample_edges
from .similarity import pcc_similarity, select_k
from .tree import build_optimal_tree, tree_entropy

log = logging.getLogger(__name__)

TRACE_HEADER = "iter,k,H1,HT,normalized,edges,ms_fusion,ms_tree,ms_sample"


# ---- providers ----------------------------------------------------------


class IdentityProvider:
    """Passes the attribute matrix through untouched."""

    name = "identity"

    def __call__(self, g: Graph, x: np.ndarray, iteration: int = 0) -> np.ndarray:
        return x


class SmoothingProvider:
    """Feature propagation: `rounds` passes of row-normalized
    (adjacency + self-loop) averaging under the current edge weights."""

    name = "smoothing"

    def __init__(self, rounds: int):
        if rounds < 0:
            raise ConfigError(f"smoothing rounds must be >= 0, got {rounds}")
        self.rounds = rounds

    def __call__(self, g: Graph, x: np.ndarray, iteration: int = 0) -> np.ndarray:
        if self.rounds == 0:
            return x
        from scipy.sparse import csr_matrix, identity

        indptr, nbr, wt = g.csr()
        a = csr_matrix((wt, nbr, indptr), shape=(g.n, g.n)) + identity(g.n, format="csr")
        inv = 1.0 / np.asarray(a.sum(axis=1)).ravel()
        out = np.asarray(x, dtype=np.float64)
        for _ in range(self.rounds):
            out = a @ out * inv[:, None]
        return out


class ExternalProvider:
    """Runs a command over a work directory holding the current graph and
    features, and reads the embeddings it writes back.

    Work-dir contents: graph.tsv, features.tsv, meta.tsv (one line:
    iteration, n, d).  The command gets the directory as its only
    argument and must leave embeddings.tsv with rows "id<TAB>e1..." for
    every vertex id.
    """

    name = "external"

    def __init__(self, command: str, timeout: float = 300.0, work_root: Path | None = None):
        if not command.strip():
            raise ConfigError("external provider needs a nonempty command")
        self.command = command
        self.timeout = timeout
        self.work_root = work_root

    def __call__(self, g: Graph, x: np.ndarray, iteration: int = 0) -> np.ndarray:
        if self.work_root is not None:
            work = Path(self.work_root) / f"work_iter_{iteration}"
            work.mkdir(parents=True, exist_ok=True)
            return self._run(work, g, x, iteration)
        with tempfile.TemporaryDirectory(prefix="provider_") as tmp:
            return self._run(Path(tmp), g, x, iteration)

    def _run(self, work: Path, g: Graph, x: np.ndarray, iteration: int) -> np.ndarray:
        save_edge_list(g, work / "graph.tsv")
        save_attributes(x, work / "features.tsv")
        n, d = x.shape
        (work / "meta.tsv").write_text(f"iteration\t{iteration}\t{n}\t{d}\n")
        argv = shlex.split(self.command) + [str(work)]
        try:
            proc = subprocess.run(
                argv, capture_output=True, text=True, timeout=self.timeout
            )
        except subprocess.TimeoutExpired:
            raise ProviderError(f"provider timed out after {self.timeout}s: {self.command}")
        except OSError as e:
            raise ProviderError(f"cannot run provider command: {e}")
        if proc.returncode != 0:
            tail = proc.stderr.strip().splitlines()[-3:]
            raise ProviderError(
                f"provider exited with {proc.returncode}: {' | '.join(tail) or 'no stderr'}"
            )
        return self._read_embeddings(work / "embeddings.tsv", n)

    @staticmethod
    def _read_embeddings(path: Path, n: int) -> np.ndarray:
        if not path.exists():
            raise ProviderError(f"provider wrote no {path.name}")
        rows: dict[int, list[float]] = {}
        width = None
        for ln, raw in enumerate(path.read_text().splitlines(), start=1):
            if not raw.strip() or raw.startswith("#"):
                continue
            parts = raw.split("\t")
            try:
                vid = int(parts[0])
                vec = [float(p) for p in parts[1:]]
            except ValueError:
                raise ProviderError(f"{path.name}: line {ln} is not id<TAB>floats")
            if not vec:
                raise ProviderError(f"{path.name}: line {ln} has no embedding values")
            if width is None:
                width = len(vec)
            elif len(vec) != width:
                raise ProviderError(f"{path.name}: line {ln} has {len(vec)} values, expected {width}")
            if vid in rows:
                raise ProviderError(f"{path.name}: duplicate id {vid}")
            rows[vid] = vec
        if sorted(rows) != list(range(n)):
            raise ProviderError(f"{path.name}: expected ids 0..{n - 1}, got {len(rows)} rows")
        return np.array([rows[i] for i in range(n)], dtype=np.float64)


def make_provider(cfg: "PipelineConfig") -> object:
    if cfg.provider == "identity":
        return IdentityProvider()
    if cfg.provider == "smoothing":
        return SmoothingProvider(cfg.smoothing_rounds)
    if cfg.provider == "external":
        root = Path(cfg.out_dir) if cfg.out_dir is not None else None
        return ExternalProvider(cfg.command, timeout=cfg.timeout, work_root=root)
    raise ConfigError(f"unknown provider '{cfg.provider}'")


def embed(provider, g: Graph, x: np.ndarray, iteration: int = 0) -> np.ndarray:
    out = provider(g, x, iteration)
    out = np.asarray(out, dtype=np.float64)
    if out.shape[0] != g.n:
        raise ProviderError(
            f"provider returned {out.shape[0]} rows for {g.n} vertices"
        )
    return out


# ---- configuration and trace -------------------------------------------


@dataclass
class PipelineConfig:
    seed: int
    iterations: int = 1
    height: int = 2
    theta: float = 3.0
    provider: str = "identity"
    smoothing_rounds: int = 1
    command: str = ""
    timeout: float = 300.0
    retain: bool = False
    drop_frac: float | None = None
    k_max: int | None = None
    plateau_tol: float = 1e-3
    window: int = 2
    reset_features: bool = False
    out_dir: str | None = None

    def validate(self) -> None:
        if self.iterations < 0:
            raise ConfigError(f"iterations must be >= 0, got {self.iterations}")
        if self.height < 2:
            raise ConfigError(f"tree height must be >= 2, got {self.height}")
        if not self.theta > 0:
            raise ConfigError(f"theta must be positive, got {self.theta}")
        if self.provider not in ("identity", "smoothing", "external"):
            raise ConfigError(f"unknown provider '{self.provider}'")
        if self.provider == "external" and not self.command.strip():
            raise ConfigError("provider=external requires a command")
        if self.provider == "smoothing" and self.smoothing_rounds < 0:
            raise ConfigError("smoothing_rounds must be >= 0")
        if self.drop_frac is not None:
            if not self.retain:
                raise ConfigError("drop_frac only applies with retain")
            if not 0.0 <= self.drop_frac <= 1.0:
                raise ConfigError(f"drop_frac must be in [0, 1], got {self.drop_frac}")
        if self.k_max is not None and self.k_max < 2:
            raise ConfigError(f"k_max must be >= 2, got {self.k_max}")
        if self.plateau_tol <= 0:
            raise ConfigError("plateau_tol must be positive")
        if self.window < 1:
            raise ConfigError("window must be >= 1")
        if self.timeout <= 0:
            raise ConfigError("timeout must be positive")


@dataclass
class TraceRecord:
    iteration: int
    k_selected: int
    h1: float
    h_tree: float
    normalized: float
    edge_count: int
    ms_fusion: float
    ms_tree: float
    ms_sample: float

    def csv_row(self) -> str:
        return (
            f"{self.iteration},{self.k_selected},{self.h1:.9f},{self.h_tree:.9f},"
            f"{self.normalized:.9f},{self.edge_count},"
            f"{self.ms_fusion:.3f},{self.ms_tree:.3f},{self.ms_sample:.3f}"
        )


def write_trace(trace: list[TraceRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(TRACE_HEADER + "\n")
        for rec in trace:
            fh.write(rec.csv_row() + "\n")


def iteration_seed(seed: int, iteration: int) -> int:
    """Stable per-iteration sampling seed; adding iterations never
    changes the seeds of earlier ones."""
    ss = np.random.SeedSequence([seed & SEED_MASK, iteration])
    return int(ss.generate_state(1, np.uint64)[0])


# ---- the loop -----------------------------------------------------------


def run_pipeline(cfg: PipelineConfig, g0: Graph) -> tuple[Graph, list[TraceRecord]]:
    """Run the configured number of rebuild iterations over g0.

    Returns the final graph and one trace record per iteration.  On a
    stage failure the partial trace is still written to the output
    directory before the error (wrapped with iteration and stage) is
    raised.
    """
    cfg.validate()
    if g0.attributes is None:
        raise ValidationError("pipeline input graph needs vertex attributes")
    out_dir = Path(cfg.out_dir) if cfg.out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    provider = make_provider(cfg)

    g = g0
    x = g0.attributes
    trace: list[TraceRecord] = []
    try:
        for i in range(1, cfg.iterations + 1):
            stage = "embed"
            try:
                t0 = time.perf_counter()
                x_emb = embed(provider, g, x, i)
                stage = "fusion"
                s = pcc_similarity(x_emb)
                fr = select_k(g, s, k_max=cfg.k_max,
                              plateau_tol=cfg.plateau_tol, window=cfg.window)
                ms_fusion = (time.perf_counter() - t0) * 1000.0

                stage = "tree"
                t0 = time.perf_counter()
                t = build_optimal_tree(fr.fused, cfg.height)
                rep = tree_entropy(fr.fused, t)
                ms_tree = (time.perf_counter() - t0) * 1000.0

                stage = "sample"
                t0 = time.perf_counter()
                pt = annotate_probabilities(fr.fused, t)
                sampled = sample_edges(pt, cfg.theta, iteration_seed(cfg.seed, i))
                g = reconstruct(g, sampled, s, retain=cfg.retain, drop_frac=cfg.drop_frac)
                ms_sample = (time.perf_counter() - t0) * 1000.0
            except Exception as e:
                raise StageError(i, stage, e) from e

            x = g0.attributes if cfg.reset_features else x_emb
            trace.append(TraceRecord(
                iteration=i, k_selected=fr.k_selected,
                h1=rep.h1, h_tree=rep.h_tree, normalized=rep.normalized,
                edge_count=len(g.edges()),
                ms_fusion=ms_fusion, ms_tree=ms_tree, ms_sample=ms_sample,
            ))
            if out_dir is not None:
                save_edge_list(g, out_dir / f"graph_iter_{i}.tsv")
    finally:
        if out_dir is not None:
            write_trace(trace, out_dir / "trace.csv")
    return g, trace


# ---- perturbation and synthetic graphs ---------------------------------


def perturb(g: Graph, rate: float, seed: int) -> Graph:
    """Add floor(rate * edge count) random pairs that are not already
    edges.  Original edges are untouched."""
    if rate < 0:
        raise ValidationError(f"perturbation rate must be >= 0, got {rate}")
    m = len(g.edges())
    n_add = math.floor(rate * m)
    if n_add == 0:
        return Graph(g.n, g.edges(), attributes=g.attributes)
    capacity = g.n * (g.n - 1) // 2 - m
    if n_add > capacity:
        raise ValidationError(
            f"cannot add {n_add} edges; only {capacity} vertex pairs are free"
        )
    existing = {(u, v) for u, v, _ in g.edges()}
    rng = np.random.default_rng(np.random.SeedSequence([seed & SEED_MASK, 0x70B5]))
    added: list[tuple[int, int, float]] = []
    while len(added) < n_add:
        u = int(rng.integers(g.n))
        v = int(rng.integers(g.n))
        if u == v:
            continue
        key = (u, v) if u < v else (v, u)
        if key in existing:
            continue
        existing.add(key)
        added.append((key[0], key[1], 1.0))
    return Graph(g.n, g.edges() + added, attributes=g.attributes)


def generate_sbm(
    n: int, blocks: int, p_in: float, p_out: float, seed: int
) -> tuple[Graph, np.ndarray]:
    """Planted-partition random graph with equal block sizes.

    Returns the graph and the block label per vertex.  Disconnected
    output is allowed; a warning is logged so callers notice.
    """
    if blocks < 1 or n % blocks != 0:
        raise ValidationError(f"n={n} must divide evenly into {blocks} blocks")
    if not 0.0 <= p_out <= p_in <= 1.0:
        raise ValidationError("need 0 <= p_out <= p_in <= 1")
    size = n // blocks
    labels = np.arange(n) // size
    rng = np.random.default_rng(np.random.SeedSequence([seed & SEED_MASK, 0x5B3]))
    iu, iv = np.triu_indices(n, k=1)
    same = labels[iu] == labels[iv]
    prob = np.where(same, p_in, p_out)
    keep = rng.random(iu.size) < prob
    edges = [(int(u), int(v), 1.0) for u, v in zip(iu[keep], iv[keep])]
    g = Graph(n, edges)
    if not edges:
        log.warning("generated graph has no edges (p_in=%s, p_out=%s)", p_in, p_out)
    elif not is_connected(g):
        log.warning("generated graph is disconnected")
    return g, labels
