"""Work-directory file protocol.

The caller (a graph-rebuilding pipeline) drops graph.tsv, features.tsv
and meta.tsv into a directory and invokes this driver with the directory
as its sole positional argument.  The driver answers by writing
embeddings.tsv (one row per vertex, ids 0..n-1 ascending) and
metrics.tsv, then exiting 0.  Anything missing or malformed on the way
in is a protocol violation.

All files are UTF-8 TSV.  This module deliberately reimplements the
small parsers instead of importing the pipeline package: the directory
layout is the contract, not anyone's Python API.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


class ProtocolError(Exception):
    """The work directory or labels file does not follow the contract."""


class DivergenceError(Exception):
    """Training produced a non-finite loss."""


def read_meta(work: Path) -> tuple[int, int, int]:
    """meta.tsv is a single line: iteration<TAB>i<TAB>n<TAB>d."""
    path = work / "meta.tsv"
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ProtocolError(f"{path}: {e.strerror or e}")
    fields = text.strip().split("\t")
    if len(fields) != 4 or fields[0] != "iteration":
        raise ProtocolError(f"{path}: expected 'iteration<TAB>i<TAB>n<TAB>d'")
    try:
        iteration, n, d = int(fields[1]), int(fields[2]), int(fields[3])
    except ValueError:
        raise ProtocolError(f"{path}: non-integer meta fields")
    if n < 1 or d < 1:
        raise ProtocolError(f"{path}: n and d must be positive, got n={n} d={d}")
    return iteration, n, d


def read_edges(work: Path, n: int) -> list[tuple[int, int, float]]:
    """graph.tsv rows are u<TAB>v[<TAB>weight]; '#' lines are comments.

    Vertices with no incident edges are legal here (the rebuild step can
    leave some out); the self-loop added during adjacency normalization
    keeps them trainable.
    """
    path = work / "graph.tsv"
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ProtocolError(f"{path}: {e.strerror or e}")
    edges = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) not in (2, 3):
            raise ProtocolError(f"{path}: line {ln}: expected 2 or 3 fields")
        try:
            u, v = int(fields[0]), int(fields[1])
            w = float(fields[2]) if len(fields) == 3 else 1.0
        except ValueError:
            raise ProtocolError(f"{path}: line {ln}: malformed edge row")
        if not (0 <= u < n and 0 <= v < n):
            raise ProtocolError(f"{path}: line {ln}: vertex id outside 0..{n - 1}")
        if u == v:
            raise ProtocolError(f"{path}: line {ln}: self-loop on {u}")
        if not np.isfinite(w) or w <= 0:
            raise ProtocolError(f"{path}: line {ln}: weight must be positive, got {w}")
        edges.append((u, v, w))
    return edges


def _read_id_rows(path: Path, n: int, what: str) -> list[list[str]]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ProtocolError(f"{path}: {e.strerror or e}")
    rows: dict[int, list[str]] = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        try:
            vid = int(fields[0])
        except ValueError:
            raise ProtocolError(f"{path}: line {ln}: id is not an integer")
        if vid in rows:
            raise ProtocolError(f"{path}: line {ln}: duplicate id {vid}")
        rows[vid] = fields[1:]
    if sorted(rows) != list(range(n)):
        raise ProtocolError(f"{path}: {what} must cover ids 0..{n - 1} exactly "
                            f"(got {len(rows)} rows)")
    return [rows[i] for i in range(n)]


def read_features(work: Path, n: int, d: int) -> np.ndarray:
    path = work / "features.tsv"
    rows = _read_id_rows(path, n, "features")
    try:
        x = np.array([[float(v) for v in row] for row in rows], dtype=np.float64)
    except ValueError:
        raise ProtocolError(f"{path}: non-numeric feature value")
    if x.ndim != 2 or x.shape != (n, d):
        raise ProtocolError(f"{path}: expected shape ({n}, {d}), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ProtocolError(f"{path}: non-finite feature value")
    return x


def read_labels(path: Path, n: int) -> np.ndarray:
    """labels.tsv: id<TAB>class, one integer class per vertex."""
    rows = _read_id_rows(Path(path), n, "labels")
    out = np.empty(n, dtype=np.int64)
    for i, row in enumerate(rows):
        if len(row) != 1:
            raise ProtocolError(f"{path}: vertex {i}: expected exactly one class")
        try:
            out[i] = int(row[0])
        except ValueError:
            raise ProtocolError(f"{path}: vertex {i}: class is not an integer")
    if out.min() < 0:
        raise ProtocolError(f"{path}: negative class id")
    return out


def write_embeddings(work: Path, h: np.ndarray) -> None:
    lines = []
    for i, row in enumerate(h):
        vals = "\t".join(f"{v:.8e}" for v in row)
        lines.append(f"{i}\t{vals}")
    (work / "embeddings.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_metrics(work: Path, accuracy: float) -> None:
    (work / "metrics.tsv").write_text(f"accuracy\t{accuracy:.9f}\n", encoding="utf-8")
