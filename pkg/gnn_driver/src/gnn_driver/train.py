"""Training loop: fit the GCN on a work directory, keep the state with
the best validation accuracy, and write embeddings plus the test
accuracy back into the directory."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .model import TwoLayerGCN, norm_adjacency
from .protocol import (
    DivergenceError,
    ProtocolError,
    read_edges,
    read_features,
    read_labels,
    read_meta,
    write_embeddings,
    write_metrics,
)


@dataclass
class DriverConfig:
    labels: str
    seed: int
    hidden: int = 32
    dropout: float = 0.5
    epochs: int = 200
    lr: float = 0.01
    weight_decay: float = 5e-4
    train_frac: float = 0.48
    val_frac: float = 0.32
    test_frac: float = 0.20

    def validate(self) -> None:
        if self.epochs < 1:
            raise ProtocolError(f"epochs must be >= 1, got {self.epochs}")
        if self.hidden < 1:
            raise ProtocolError(f"hidden width must be >= 1, got {self.hidden}")
        if not 0.0 <= self.dropout < 1.0:
            raise ProtocolError(f"dropout must be in [0, 1), got {self.dropout}")
        total = self.train_frac + self.val_frac + self.test_frac
        if abs(total - 1.0) > 1e-9:
            raise ProtocolError(f"split fractions must sum to 1, got {total}")
        if min(self.train_frac, self.val_frac, self.test_frac) <= 0.0:
            raise ProtocolError("every split fraction must be positive")


def split_indices(n: int, cfg: DriverConfig, rng: np.random.Generator):
    """Random permutation cut into train/val/test by the configured
    fractions; the same seed gives the same split on every invocation,
    so repeated calls over one dataset never leak test vertices."""
    perm = rng.permutation(n)
    n_train = int(np.floor(cfg.train_frac * n))
    n_val = int(np.floor(cfg.val_frac * n))
    if n_train < 1 or n_val < 1 or n_train + n_val >= n:
        raise ProtocolError(f"n={n} is too small for a {cfg.train_frac:.0%}/"
                            f"{cfg.val_frac:.0%}/{cfg.test_frac:.0%} split")
    return (perm[:n_train], perm[n_train:n_train + n_val], perm[n_train + n_val:])


def _accuracy(logits: torch.Tensor, y: torch.Tensor, idx: np.ndarray) -> float:
    pred = logits[idx].argmax(dim=1)
    return float((pred == y[idx]).float().mean())


def train_and_embed(work_dir, cfg: DriverConfig) -> float:
    """Train on the work dir, write embeddings.tsv and metrics.tsv,
    return the test accuracy.  Raises ProtocolError / DivergenceError."""
    cfg.validate()
    work = Path(work_dir)
    if not work.is_dir():
        raise ProtocolError(f"{work}: not a directory")
    _, n, d = read_meta(work)
    edges = read_edges(work, n)
    x_np = read_features(work, n, d)
    y_np = read_labels(cfg.labels, n)
    classes = int(y_np.max()) + 1
    if classes < 2:
        raise ProtocolError(f"{cfg.labels}: need at least two classes")

    # single-threaded torch keeps reductions bit-stable run to run
    torch.set_num_threads(1)
    torch.manual_seed(cfg.seed)
    train_idx, val_idx, test_idx = split_indices(
        n, cfg, np.random.default_rng(cfg.seed))

    a_hat = norm_adjacency(n, edges)
    x = torch.from_numpy(x_np).to(torch.float32)
    y = torch.from_numpy(y_np)
    model = TwoLayerGCN(d, cfg.hidden, classes, cfg.dropout)
    opt = torch.optim.Adam(model.parameters(), lr=cfg.lr,
                           weight_decay=cfg.weight_decay)
    loss_fn = nn.CrossEntropyLoss()

    best_val = -1.0
    best_state = {k: v.clone() for k, v in model.state_dict().items()}
    for _ in range(cfg.epochs):
        model.train()
        opt.zero_grad()
        logits = model(x, a_hat)
        loss = loss_fn(logits[train_idx], y[train_idx])
        if not torch.isfinite(loss):
            raise DivergenceError(f"non-finite training loss: {loss.item()}")
        loss.backward()
        opt.step()
        model.eval()
        with torch.no_grad():
            val_acc = _accuracy(model(x, a_hat), y, val_idx)
        if val_acc > best_val:
            best_val = val_acc
            best_state = {k: v.clone() for k, v in model.state_dict().items()}

    model.load_state_dict(best_state)
    model.eval()
    with torch.no_grad():
        h = model.hidden_layer(x, a_hat)
        test_acc = _accuracy(model(x, a_hat), y, test_idx)
    write_embeddings(work, h.numpy().astype(np.float64))
    write_metrics(work, test_acc)
    return test_acc
