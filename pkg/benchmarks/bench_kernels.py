"""Timing comparison of the jitted and pure-numpy kernel backends.

Runs the two loop-bound kernels (gini tree growth + prediction, Pegasos SVM)
on identical inputs through both implementations and reports wall times,
speedup, and the numeric gap between outputs. Tree outputs must match
bit for bit; Pegasos weights may differ by rounding only.

Usage:
    python3 benchmarks/bench_kernels.py [--n 4000] [--d 64] [--repeats 5]
"""

import argparse
import time

import numpy as np

from embedadapt.kernels import numba_impl, numpy_impl

NO_DEPTH_CAP = np.int64(2**31)


def best_of(fn, args, repeats):
    """(best wall seconds, last result) over several runs."""
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def tree_equal(a, b) -> bool:
    na, nb = int(a[5]), int(b[5])
    if na != nb:
        return False
    return all(np.array_equal(x[:na], y[:na]) for x, y in zip(a[:5], b[:5]))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=4000, help="training rows")
    parser.add_argument("--d", type=int, default=64, help="feature count")
    parser.add_argument("--repeats", type=int, default=5, help="timed runs per kernel")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    X = np.ascontiguousarray(rng.normal(size=(args.n, args.d)))
    y = rng.integers(0, 2, args.n).astype(np.int64)
    bootstrap = rng.integers(0, args.n, size=args.n).astype(np.int64)
    mtry = np.int64(max(1, int(np.sqrt(args.d))))
    tree_args = (X, y, bootstrap, NO_DEPTH_CAP, np.int64(1), mtry, np.uint64(7))

    Xq = np.ascontiguousarray(rng.normal(size=(args.n, args.d)))

    Xa = np.ascontiguousarray(np.hstack([X, np.ones((args.n, 1))]))
    y_signed = np.where(y == 1, 1.0, -1.0)
    order = np.concatenate(
        [rng.permutation(args.n) for _ in range(10)]
    ).astype(np.int64)
    pegasos_args = (Xa, y_signed, 1e-4, order)

    # jit warmup so compilation is not timed
    numba_impl.grow_tree(*tree_args)
    numba_impl.pegasos_train(*pegasos_args)

    rows = []

    t_np, tree_np = best_of(numpy_impl.grow_tree, tree_args, args.repeats)
    t_nb, tree_nb = best_of(numba_impl.grow_tree, tree_args, args.repeats)
    rows.append(("grow_tree", t_np, t_nb, "exact" if tree_equal(tree_np, tree_nb) else "MISMATCH"))

    n_nodes = int(tree_np[5])
    trimmed = tuple(arr[:n_nodes] for arr in tree_np[:5])
    t_np, pred_np = best_of(numpy_impl.tree_predict_value, (*trimmed, Xq), args.repeats)
    numba_impl.tree_predict_value(*trimmed, Xq)
    t_nb, pred_nb = best_of(numba_impl.tree_predict_value, (*trimmed, Xq), args.repeats)
    rows.append(
        ("tree_predict", t_np, t_nb, "exact" if np.array_equal(pred_np, pred_nb) else "MISMATCH")
    )

    t_np, w_np = best_of(numpy_impl.pegasos_train, pegasos_args, args.repeats)
    t_nb, w_nb = best_of(numba_impl.pegasos_train, pegasos_args, args.repeats)
    gap = float(np.abs(w_np - w_nb).max())
    rows.append(("pegasos_train", t_np, t_nb, f"max|dw| {gap:.2e}"))

    print(f"n={args.n} d={args.d} repeats={args.repeats} (best-of timing)")
    print(f"{'kernel':<14} {'numpy':>10} {'numba':>10} {'speedup':>8}  output")
    for name, t_np, t_nb, verdict in rows:
        print(f"{name:<14} {t_np:>9.4f}s {t_nb:>9.4f}s {t_np / t_nb:>7.1f}x  {verdict}")

    bad = [r for r in rows if r[3] == "MISMATCH"]
    return 1 if bad else 0


if __name__ == "__main__":
    raise SystemExit(main())
