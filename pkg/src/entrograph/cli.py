"""Command-line front end.

Subcommands: entropy, tree, fuse, reconstruct, pipeline, perturb, sbm.
Exit codes follow one table everywhere: 0 success, 1 usage error
(unknown flag, missing required argument), 2 bad input (unparseable
file, contract violation), 3 runtime failure.  Every run prints its
fully resolved settings to stderr, defaults included, so a captured log
always shows what actually ran.

Floats printed to stdout use 9 decimal places, which keeps golden-file
comparisons byte-stable across platforms.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import (
    ConfigError,
    DegenerateGraphError,
    EntrographError,
    ParseError,
    ValidationError,
)
from .graph import (
    Graph,
    is_connected,
    load_attributes,
    load_edge_list,
    save_edge_list,
    validate_attributes,
)
from .pipeline import PipelineConfig, generate_sbm, perturb, run_pipeline
from .sampling import annotate_probabilities, reconstruct, sample_edges
from .similarity import pcc_similarity, select_k
from .tree import EncodingTree, build_optimal_tree, one_dim_entropy, tree_entropy


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of calling sys.exit(2), so usage
    problems can map onto our exit code 1."""

    def error(self, message):
        raise _UsageError(message)


def _echo(settings: dict) -> None:
    for key in sorted(settings):
        print(f"config {key}={settings[key]}", file=sys.stderr)


def _load_graph_with_attrs(graph_path, attrs_path) -> Graph:
    g = load_edge_list(graph_path)
    x = validate_attributes(load_attributes(attrs_path), g.n)
    return Graph(g.n, g.edges(), attributes=x)


# ---- subcommand bodies --------------------------------------------------


def _cmd_entropy(args) -> int:
    _echo({"graph": args.graph, "tree": args.tree})
    g = load_edge_list(args.graph)
    if args.tree is None:
        print(f"H1\t{one_dim_entropy(g):.9f}")
        return 0
    t = EncodingTree.from_tsv(args.tree, g)
    rep = tree_entropy(g, t)
    print(f"H1\t{rep.h1:.9f}")
    print(f"HT\t{rep.h_tree:.9f}")
    print(f"normalized\t{rep.normalized:.9f}")
    return 0


def _cmd_tree(args) -> int:
    out = Path(args.out)
    _echo({"graph": args.graph, "height": args.height, "out": out})
    g = load_edge_list(args.graph)
    t = build_optimal_tree(g, args.height)
    rep = tree_entropy(g, t)
    t.to_tsv(out.with_suffix(".tsv"))
    t.to_json(out.with_suffix(".json"))
    print(f"H1\t{rep.h1:.9f}")
    print(f"HT\t{rep.h_tree:.9f}")
    print(f"normalized\t{rep.normalized:.9f}")
    return 0


def _cmd_fuse(args) -> int:
    _echo({
        "graph": args.graph, "attrs": args.attrs, "k_max": args.k_max,
        "plateau_tol": args.plateau_tol, "window": args.window, "out": args.out,
    })
    g = load_edge_list(args.graph)
    x = validate_attributes(load_attributes(args.attrs), g.n)
    s = pcc_similarity(x)
    fr = select_k(g, s, k_max=args.k_max,
                  plateau_tol=args.plateau_tol, window=args.window)
    save_edge_list(fr.fused, args.out)
    print(f"k\t{fr.k_selected}")
    return 0


def _cmd_reconstruct(args) -> int:
    _echo({
        "graph": args.graph, "tree": args.tree, "attrs": args.attrs,
        "theta": args.theta, "seed": args.seed, "retain": args.retain,
        "drop_frac": args.drop_frac, "out": args.out,
    })
    g = load_edge_list(args.graph)
    t = EncodingTree.from_tsv(args.tree, g)
    pt = annotate_probabilities(g, t)
    sampled = sample_edges(pt, args.theta, args.seed)
    s = None
    if args.attrs is not None:
        x = validate_attributes(load_attributes(args.attrs), g.n)
        s = pcc_similarity(x)
    g2 = reconstruct(g, sampled, s, retain=args.retain, drop_frac=args.drop_frac)
    save_edge_list(g2, args.out)
    print(f"edges\t{len(g2.edges())}")
    return 0


def _cmd_perturb(args) -> int:
    _echo({"graph": args.graph, "rate": args.rate, "seed": args.seed,
           "out": args.out})
    g = load_edge_list(args.graph)
    g2 = perturb(g, args.rate, args.seed)
    save_edge_list(g2, args.out)
    print(f"edges\t{len(g2.edges())}")
    return 0


def _cmd_sbm(args) -> int:
    labels_out = args.labels_out
    if labels_out is None:
        p = Path(args.out)
        labels_out = str(p.with_name(p.stem + "_labels.tsv"))
    _echo({"n": args.n, "blocks": args.blocks, "p_in": args.p_in,
           "p_out": args.p_out, "seed": args.seed, "out": args.out,
           "labels_out": labels_out})
    g, labels = generate_sbm(args.n, args.blocks, args.p_in, args.p_out, args.seed)
    save_edge_list(g, args.out)
    with open(labels_out, "w", encoding="utf-8") as fh:
        for i, lab in enumerate(labels):
            fh.write(f"{i}\t{int(lab)}\n")
    print(f"edges\t{len(g.edges())}")
    print(f"connected\t{1 if g.edge_count and is_connected(g) else 0}")
    return 0


# ---- pipeline config plumbing ------------------------------------------

# key -> converter from config-file text; None means keep the string
_PIPE_KEYS = {
    "graph": None, "attrs": None, "seed": int, "iterations": int,
    "height": int, "theta": float, "provider": None,
    "smoothing_rounds": int, "command": None, "timeout": float,
    "retain": "bool", "drop_frac": float, "k_max": int,
    "plateau_tol": float, "window": int, "reset_features": "bool",
    "out_dir": None,
}


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _read_config(path) -> dict:
    """Flat key=value file; blank lines and # comments skipped."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"cannot read file: {e.strerror or e}", path=str(path))
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError("expected key=value", path=str(path), line=lineno)
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _PIPE_KEYS:
            raise ParseError(f"unknown setting {key!r}", path=str(path), line=lineno)
        conv = _PIPE_KEYS[key]
        try:
            if conv == "bool":
                out[key] = _parse_bool(value)
            elif conv is not None:
                out[key] = conv(value)
            else:
                out[key] = value
        except ValueError as e:
            raise ParseError(f"bad value for {key}: {e}", path=str(path), line=lineno)
    return out


def _cmd_pipeline(args) -> int:
    settings = {
        "graph": None, "attrs": None, "seed": None, "iterations": 1,
        "height": 2, "theta": 3.0, "provider": "identity",
        "smoothing_rounds": 1, "command": "", "timeout": 300.0,
        "retain": False, "drop_frac": None, "k_max": None,
        "plateau_tol": 1e-3, "window": 2, "reset_features": False,
        "out_dir": "pipeline_out",
    }
    if args.config is not None:
        settings.update(_read_config(args.config))
    # explicit flags win over the config file
    for key in _PIPE_KEYS:
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            settings[key] = flag_val
    if settings["seed"] is None:
        raise _UsageError("a seed is required (config key seed= or --seed)")
    if settings["graph"] is None:
        raise _UsageError("an input graph is required (config key graph= or --graph)")
    if settings["attrs"] is None:
        raise _UsageError("vertex attributes are required (config key attrs= or --attrs)")
    _echo(settings)

    cfg = PipelineConfig(
        seed=settings["seed"], iterations=settings["iterations"],
        height=settings["height"], theta=settings["theta"],
        provider=settings["provider"],
        smoothing_rounds=settings["smoothing_rounds"],
        command=settings["command"], timeout=settings["timeout"],
        retain=settings["retain"], drop_frac=settings["drop_frac"],
        k_max=settings["k_max"], plateau_tol=settings["plateau_tol"],
        window=settings["window"], reset_features=settings["reset_features"],
        out_dir=settings["out_dir"],
    )
    cfg.validate()
    g0 = _load_graph_with_attrs(settings["graph"], settings["attrs"])
    g_final, trace = run_pipeline(cfg, g0)
    save_edge_list(g_final, Path(cfg.out_dir) / "graph_final.tsv")
    print(f"iterations\t{len(trace)}")
    print(f"edges\t{len(g_final.edges())}")
    if trace:
        print(f"normalized\t{trace[-1].normalized:.9f}")
    return 0


# ---- parser wiring ------------------------------------------------------


def _build_parser() -> _Parser:
    top = _Parser(prog="entrograph", description=__doc__.splitlines()[0])
    sub = top.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")

    p = sub.add_parser("entropy", help="print flat (and tree) entropy")
    p.add_argument("--graph", required=True, help="edge-list TSV")
    p.add_argument("--tree", default=None, help="encoding-tree TSV")
    p.set_defaults(func=_cmd_entropy)

    p = sub.add_parser("tree", help="build a height-bounded encoding tree")
    p.add_argument("--graph", required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--out", default="tree", help="basename for .tsv/.json output")
    p.set_defaults(func=_cmd_tree)

    p = sub.add_parser("fuse", help="similarity overlay with automatic k")
    p.add_argument("--graph", required=True)
    p.add_argument("--attrs", required=True, help="attribute TSV")
    p.add_argument("--k-max", type=int, default=None)
    p.add_argument("--plateau-tol", type=float, default=1e-3)
    p.add_argument("--window", type=int, default=2)
    p.add_argument("--out", default="fused.tsv")
    p.set_defaults(func=_cmd_fuse)

    p = sub.add_parser("reconstruct", help="sample pairs from a tree, build the next graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--tree", required=True)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--attrs", default=None,
                   help="attribute TSV; needed for --retain edge ranking")
    p.add_argument("--retain", action="store_true")
    p.add_argument("--drop-frac", type=float, default=None)
    p.add_argument("--out", default="reconstructed.tsv")
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("pipeline", help="run the iterative rebuild loop")
    p.add_argument("--config", default=None, help="flat key=value file")
    p.add_argument("--graph", default=None)
    p.add_argument("--attrs", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--height", type=int, default=None)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--provider", choices=("identity", "smoothing", "external"),
                   default=None)
    p.add_argument("--smoothing-rounds", type=int, default=None)
    p.add_argument("--command", default=None, help="external provider command")
    p.add_argument("--timeout", type=float, default=None)
    p.add_argument("--retain", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--drop-frac", type=float, default=None)
    p.add_argument("--k-max", type=int, default=None)
    p.add_argument("--plateau-tol", type=float, default=None)
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--reset-features", action=argparse.BooleanOptionalAction,
                   default=None)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=_cmd_pipeline)

    p = sub.add_parser("perturb", help="add random noise edges")
    p.add_argument("--graph", required=True)
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default="perturbed.tsv")
    p.set_defaults(func=_cmd_perturb)

    p = sub.add_parser("sbm", help="generate a planted-partition graph")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--blocks", type=int, default=2)
    p.add_argument("--p-in", type=float, required=True)
    p.add_argument("--p-out", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default="sbm.tsv")
    p.add_argument("--labels-out", default=None)
    p.set_defaults(func=_cmd_sbm)

    return top


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "func", None) is None:
            raise _UsageError("a subcommand is required (see --help)")
        return args.func(args)
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except (ParseError, ValidationError, ConfigError, DegenerateGraphError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return 2
    except EntrographError as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return 3
    except OSError as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
