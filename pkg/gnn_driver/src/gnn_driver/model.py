"""Two-layer graph convolution on a dense normalized adjacency.

Small enough to write directly on torch tensors; the target graphs are
a few hundred vertices, so dense D^-1/2 (A+I) D^-1/2 is simpler and
faster than pulling in a sparse-graph framework.
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn


def norm_adjacency(n: int, edges: list[tuple[int, int, float]]) -> torch.Tensor:
    a = np.zeros((n, n), dtype=np.float64)
    for u, v, w in edges:
        a[u, v] += w
        a[v, u] += w
    a += np.eye(n)
    d = a.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(d)
    a_hat = a * inv_sqrt[:, None] * inv_sqrt[None, :]
    return torch.from_numpy(a_hat).to(torch.float32)


class TwoLayerGCN(nn.Module):
    def __init__(self, d_in: int, hidden: int, classes: int, dropout: float = 0.5):
        super().__init__()
        self.lin1 = nn.Linear(d_in, hidden)
        self.lin2 = nn.Linear(hidden, classes)
        self.drop = nn.Dropout(dropout)

    def hidden_layer(self, x: torch.Tensor, a_hat: torch.Tensor) -> torch.Tensor:
        """Penultimate representations: first propagation + ReLU."""
        return torch.relu(a_hat @ self.lin1(x))

    def forward(self, x: torch.Tensor, a_hat: torch.Tensor) -> torch.Tensor:
        h = self.drop(self.hidden_layer(x, a_hat))
        return a_hat @ self.lin2(h)
