"""Command line: ``gnn-driver [flags] <work_dir>``.

Exit codes: 0 success, 2 protocol violation (bad or missing inputs),
3 training divergence.  The resolved settings go to stderr.
"""

from __future__ import annotations

import argparse
import sys

from .protocol import DivergenceError, ProtocolError
from .train import DriverConfig, train_and_embed


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gnn-driver", description=__doc__.splitlines()[0])
    p.add_argument("work_dir", help="directory with graph.tsv, features.tsv, meta.tsv")
    p.add_argument("--labels", required=True, help="id<TAB>class TSV for all vertices")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--hidden", type=int, default=32,
                   help="hidden width (sensible values: 8, 16, 32, 48, 64)")
    p.add_argument("--dropout", type=float, default=0.5)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--weight-decay", type=float, default=5e-4)
    p.add_argument("--split", default="0.48,0.32,0.20",
                   help="train,val,test fractions (must sum to 1)")
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        parts = [float(v) for v in args.split.split(",")]
        if len(parts) != 3:
            raise ValueError
    except ValueError:
        print(f"error: --split must be three comma-separated fractions, "
              f"got {args.split!r}", file=sys.stderr)
        return 2
    cfg = DriverConfig(
        labels=args.labels, seed=args.seed, hidden=args.hidden,
        dropout=args.dropout, epochs=args.epochs, lr=args.lr,
        weight_decay=args.weight_decay,
        train_frac=parts[0], val_frac=parts[1], test_frac=parts[2],
    )
    for key in ("work_dir", "labels", "seed", "hidden", "dropout", "epochs",
                "lr", "weight_decay", "split"):
        print(f"config {key}={getattr(args, key)}", file=sys.stderr)
    try:
        acc = train_and_embed(args.work_dir, cfg)
    except ProtocolError as e:
        print(f"protocol error: {e}", file=sys.stderr)
        return 2
    except DivergenceError as e:
        print(f"divergence: {e}", file=sys.stderr)
        return 3
    print(f"accuracy\t{acc:.9f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
