"""Command line front end: ``mdhstream {fit,assign,eval,synth,diagnose}``.

Failures print one line ``error: <category>: <message>`` to stderr and exit
with status 1.  Reports are tab separated; their layout is in the README.
"""

from __future__ import annotations

import argparse
import contextlib
import sys
import warnings
from pathlib import Path

import numpy as np

from . import diagnostics, io, metrics, oracle, selection
from .exceptions import ConfigError, InputError, MDHError
from .optimizer import LearnConfig
from .tree import TreeModel, new_tree

_CFG_FLAGS = {
    "C": float, "alpha_factor": float, "q": float, "r": float, "gbar1_scale": float,
    "gbar2": float, "eta": float, "h_floor": float, "warmup": int,
}


@contextlib.contextmanager
def _open_out(path):
    if path is None or str(path) == "-":
        yield sys.stdout
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            yield fh


def _add_cfg_flags(p):
    defaults = LearnConfig()
    g = p.add_argument_group("learning constants")
    for name, typ in _CFG_FLAGS.items():
        g.add_argument("--" + name.replace("_", "-"), dest=name, type=typ,
                       default=getattr(defaults, name),
                       help=f"default {getattr(defaults, name)}")
    p.add_argument("--seed", type=int, default=0, help="seed for the initial hyperplanes")


def _cfg_from(args) -> LearnConfig:
    return LearnConfig(seed=args.seed, **{k: getattr(args, k) for k in _CFG_FLAGS})


def _chunks(args):
    blocks = io.iter_csv(args.data, header=args.header, chunk_rows=args.chunk_rows)
    if args.shuffle_seed is None:
        yield from blocks
        return
    # a permutation needs the whole data set in memory
    parts = list(blocks)
    if not parts:
        return
    X = np.concatenate(parts)
    perm = np.random.default_rng(args.shuffle_seed).permutation(X.shape[0])
    for i in range(0, X.shape[0], args.chunk_rows):
        yield X[perm[i:i + args.chunk_rows]]


def fit_stream(blocks, depth: int, cfg: LearnConfig) -> TreeModel:
    tree = None
    for X in blocks:
        if tree is None:
            tree = new_tree(depth, X.shape[1], cfg)
        tree.observe_many(X)
    if tree is None:
        raise InputError("data file contains no observations")
    return tree


def choose(tree: TreeModel, k=None, kmax_range=None):
    """Prune, then pick the model: fixed ``k``, the elbow vote, or the full tree.

    Returns ``(sequence, selection_or_None, chosen_model, method)``.
    """
    seq = selection.prune_sequence(tree)
    if k is not None:
        return seq, None, selection.cut_to_k(seq, k), "fixed-k"
    if kmax_range is not None:
        lo, hi = kmax_range
        rng = list(range(lo, hi + 1))
    else:
        rng = selection.default_kmax_range(seq.max_leaves)
    if not rng and kmax_range is None:
        warnings.warn(f"no Kmax candidates for {seq.max_leaves} leaves; keeping the full tree",
                      RuntimeWarning, stacklevel=2)
        return seq, None, selection.full_model(tree.depth, tree.node_ss()), "full"
    sel = selection.select_k_detailed(seq, rng)
    return seq, sel, selection.cut_to_k(seq, sel.k), "elbow"


def cmd_fit(args) -> None:
    if args.depth < 2:
        raise ConfigError(f"depth must be >= 2, got {args.depth}")
    cfg = _cfg_from(args)
    tree = fit_stream(_chunks(args), args.depth, cfg)
    seq, sel, chosen, method = choose(tree, args.k, args.kmax_range)
    tree.clusters = list(chosen.leaves)
    tree.save(args.model)
    with _open_out(args.report) as fh:
        selection.write_report(fh, seq, sel, chosen, method)
    if args.figures:
        from .plotting import selection_figure
        selection_figure(seq, sel, chosen.n_clusters, Path(args.figures) / "selection.png")


def cmd_assign(args) -> None:
    tree = TreeModel.load(args.model)
    with _open_out(args.output) as fh:
        for X in io.iter_csv(args.data, header=args.header, dim=tree.dim,
                             chunk_rows=args.chunk_rows):
            io.write_labels(fh, tree.cluster_labels(tree.assign_many(X)))


def cmd_eval(args) -> None:
    pred = io.read_labels(args.pred)
    truth = io.read_labels(args.truth)
    if len(pred) != len(truth):
        raise InputError(f"label files differ in length ({len(pred)} vs {len(truth)})")
    with _open_out(args.output) as fh:
        fh.write("metric\tvalue\n")
        fh.write(f"nmi\t{metrics.nmi(truth, pred)!r}\n")
        fh.write(f"ari\t{metrics.ari(truth, pred)!r}\n")
        fh.write(f"k\t{len(np.unique(pred))}\n")
        fh.write(f"n\t{len(pred)}\n")


def cmd_synth(args) -> None:
    gmm = oracle.GaussianMixture.load(args.mixture)
    if args.n < 0:
        raise ConfigError(f"n must be >= 0, got {args.n}")
    with _open_out(args.data) as fd, _open_out(args.labels) as fl:
        for X, lab in oracle.sample_chunks(gmm, args.n, args.seed):
            io.write_rows(fd, X)
            io.write_labels(fl, lab)


def cmd_diagnose(args) -> None:
    gmm = oracle.GaussianMixture.load(args.mixture)
    cfg = _cfg_from(args)
    records = diagnostics.run(gmm, args.n, cfg, seed=args.data_seed,
                              bias_samples=args.bias_samples)
    with _open_out(args.output) as fh:
        diagnostics.write_tsv(fh, records, gmm.dim)
    if args.figures:
        from .plotting import diagnostics_figure
        diagnostics_figure(records, Path(args.figures) / "diagnostics.png")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mdhstream",
                                description="Streaming minimum density hyperplane clustering.")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="fit a tree in one pass and select the cluster count")
    f.add_argument("data", help="CSV file, one observation per row")
    f.add_argument("-m", "--model", required=True, help="output model file (JSON)")
    f.add_argument("-r", "--report", default="-", help="selection report (default stdout)")
    f.add_argument("--figures", help="directory for a PNG of the pruning path")
    f.add_argument("--header", action="store_true", help="skip the first line")
    f.add_argument("--shuffle-seed", type=int, help="visit rows in a seeded random order")
    f.add_argument("--depth", type=int, default=8)
    f.add_argument("--k", type=int, help="return the pruned model with exactly k clusters")
    f.add_argument("--kmax-range", type=int, nargs=2, metavar=("LO", "HI"))
    f.add_argument("--chunk-rows", type=int, default=io.CHUNK_ROWS, help=argparse.SUPPRESS)
    _add_cfg_flags(f)
    f.set_defaults(func=cmd_fit)

    a = sub.add_parser("assign", help="label rows with a fitted model")
    a.add_argument("model")
    a.add_argument("data")
    a.add_argument("-o", "--output", default="-")
    a.add_argument("--header", action="store_true")
    a.add_argument("--chunk-rows", type=int, default=io.CHUNK_ROWS, help=argparse.SUPPRESS)
    a.set_defaults(func=cmd_assign)

    e = sub.add_parser("eval", help="NMI and ARI of predicted against true labels")
    e.add_argument("pred")
    e.add_argument("truth")
    e.add_argument("-o", "--output", default="-")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("synth", help="sample a Gaussian mixture")
    s.add_argument("mixture", help="JSON with weights, means, covariances")
    s.add_argument("-n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--data", required=True, help="output CSV")
    s.add_argument("--labels", required=True, help="output component labels")
    s.set_defaults(func=cmd_synth)

    d = sub.add_parser("diagnose", help="track one hyperplane against an exact mixture")
    d.add_argument("mixture")
    d.add_argument("-n", type=int, default=100000)
    d.add_argument("--data-seed", type=int, default=0, help="seed for the sampled stream")
    d.add_argument("--bias-samples", type=int, default=diagnostics.BIAS_SAMPLES)
    d.add_argument("-o", "--output", default="-")
    d.add_argument("--figures")
    _add_cfg_flags(d)
    d.set_defaults(func=cmd_diagnose)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        try:
            args.func(args)
        except MDHError as exc:
            print(f"error: {exc.category}: {exc}", file=sys.stderr)
            return 1
        except OSError as exc:
            print(f"error: io: {exc.strerror or exc}: {exc.filename or ''}".rstrip(": "),
                  file=sys.stderr)
            return 1
        finally:
            for w in caught:
                if issubclass(w.category, RuntimeWarning):
                    print(f"warning: {w.message}", file=sys.stderr)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
