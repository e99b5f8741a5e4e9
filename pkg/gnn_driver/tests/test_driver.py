import subprocess
import sys

import numpy as np
import pytest

from gnn_driver import DriverConfig, ProtocolError, split_indices, train_and_embed
from test_protocol import make_workdir


def run_driver(work, extra=()):
    return subprocess.run(
        [sys.executable, "-m", "gnn_driver", "--labels",
         str(work / "labels.tsv"), "--seed", "7", *extra, str(work)],
        capture_output=True, text=True)


def quick_cfg(work, **kw):
    kw.setdefault("labels", str(work / "labels.tsv"))
    kw.setdefault("seed", 7)
    kw.setdefault("epochs", 30)
    return DriverConfig(**kw)


def test_wellformed_dir_trains_and_writes(tmp_path):
    work = make_workdir(tmp_path)
    r = run_driver(work, extra=("--epochs", "30"))
    assert r.returncode == 0, r.stderr
    lines = (work / "embeddings.tsv").read_text().splitlines()
    assert len(lines) == 6
    assert [int(ln.split("\t")[0]) for ln in lines] == list(range(6))
    name, value = (work / "metrics.tsv").read_text().split()
    assert name == "accuracy" and 0.0 <= float(value) <= 1.0
    assert r.stdout.startswith("accuracy\t")
    assert "config seed=7" in r.stderr


def test_missing_features_exits_2_writes_nothing(tmp_path):
    work = make_workdir(tmp_path)
    (work / "features.tsv").unlink()
    r = run_driver(work)
    assert r.returncode == 2
    assert not (work / "embeddings.tsv").exists()
    assert not (work / "metrics.tsv").exists()


def test_missing_workdir_exits_2(tmp_path):
    work = make_workdir(tmp_path)
    r = subprocess.run(
        [sys.executable, "-m", "gnn_driver", "--labels",
         str(work / "labels.tsv"), "--seed", "7", str(tmp_path / "nope")],
        capture_output=True, text=True)
    assert r.returncode == 2


def test_divergence_exits_3(tmp_path):
    work = make_workdir(tmp_path)
    # values this size are finite in the file but overflow the model's
    # float32 cast, so the very first loss comes out non-finite
    rows = "".join(f"{i}\t" + "\t".join("1e40" for _ in range(4)) + "\n"
                   for i in range(6))
    (work / "features.tsv").write_text(rows)
    r = run_driver(work)
    assert r.returncode == 3
    assert "divergence" in r.stderr


def test_same_seed_same_bytes(tmp_path):
    work = make_workdir(tmp_path, n=20)
    cfg = quick_cfg(work)
    acc1 = train_and_embed(work, cfg)
    emb1 = (work / "embeddings.tsv").read_bytes()
    acc2 = train_and_embed(work, cfg)
    emb2 = (work / "embeddings.tsv").read_bytes()
    assert abs(acc1 - acc2) < 1e-6
    assert emb1 == emb2


def test_split_sizes_and_disjointness():
    cfg = DriverConfig(labels="x", seed=0)
    tr, va, te = split_indices(100, cfg, np.random.default_rng(0))
    assert (len(tr), len(va), len(te)) == (48, 32, 20)
    assert sorted(np.concatenate([tr, va, te])) == list(range(100))


def test_split_reproducible():
    cfg = DriverConfig(labels="x", seed=0)
    a = split_indices(50, cfg, np.random.default_rng(5))
    b = split_indices(50, cfg, np.random.default_rng(5))
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


def test_config_validation(tmp_path):
    work = make_workdir(tmp_path)
    with pytest.raises(ProtocolError):
        train_and_embed(work, quick_cfg(work, epochs=0))
    with pytest.raises(ProtocolError):
        train_and_embed(work, quick_cfg(work, train_frac=0.5, val_frac=0.5,
                                        test_frac=0.5))
    with pytest.raises(ProtocolError):
        train_and_embed(work, quick_cfg(work, dropout=1.0))


def test_too_small_for_split(tmp_path):
    work = make_workdir(tmp_path, n=2, edges=[(0, 1)])
    (work / "labels.tsv").write_text("0\t0\n1\t1\n")
    with pytest.raises(ProtocolError):
        train_and_embed(work, quick_cfg(work))


def test_single_class_rejected(tmp_path):
    work = make_workdir(tmp_path)
    (work / "labels.tsv").write_text("".join(f"{i}\t0\n" for i in range(6)))
    with pytest.raises(ProtocolError):
        train_and_embed(work, quick_cfg(work))


def test_learns_separable_communities(tmp_path):
    # two 10-cliques with informative features: near-perfect test accuracy
    edges = [(u, v) for u in range(10) for v in range(u + 1, 10)]
    edges += [(u, v) for u in range(10, 20) for v in range(u + 1, 20)]
    edges += [(0, 10)]
    work = make_workdir(tmp_path, n=20, edges=edges)
    rng = np.random.default_rng(3)
    x = np.vstack([rng.normal(0, 0.3, (10, 4)) + [1, 0, 1, 0],
                   rng.normal(0, 0.3, (10, 4)) + [0, 1, 0, 1]])
    (work / "features.tsv").write_text(
        "".join(f"{i}\t" + "\t".join(f"{v:.6f}" for v in row) + "\n"
                for i, row in enumerate(x)))
    acc = train_and_embed(work, quick_cfg(work, epochs=100))
    assert acc >= 0.75
