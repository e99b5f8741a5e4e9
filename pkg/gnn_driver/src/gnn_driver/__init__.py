"""Reference external embedding provider for the graph-rebuild pipeline.

Reads a work directory per the file protocol, trains a two-layer GCN,
and writes back penultimate-layer embeddings plus the test accuracy.
"""

from .protocol import DivergenceError, ProtocolError
from .train import DriverConfig, split_indices, train_and_embed

__version__ = "0.1.0"

__all__ = [
    "DivergenceError", "ProtocolError", "DriverConfig",
    "split_indices", "train_and_embed", "__version__",
]
