"""Shared test fixtures and independent oracles.

The oracles here deliberately avoid the library's own code paths: gradients
come from central finite differences, eigenpairs from a cyclic Jacobi
solver, AUC from brute-force pair counting.
"""

from __future__ import annotations

import numpy as np
import pytest


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(num, title): tags a test as an acceptance criterion"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call":
        return
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    num, title = marker.args
    status = "PASS" if report.passed else "FAIL"
    reporter = item.config.pluginmanager.get_plugin("terminalreporter")
    if reporter is not None:
        reporter.write_line(f"[acceptance] criterion {num} ({title}): {status}")


# ---------------------------------------------------------------------------
# gradient oracle


def finite_diff_grads(loss_fn, arrays, step=1e-5):
    """Central-difference gradient of loss_fn() w.r.t. each array, in place."""
    grads = []
    for arr in arrays:
        g = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        while not it.finished:
            ix = it.multi_index
            orig = arr[ix]
            arr[ix] = orig + step
            lp = loss_fn()
            arr[ix] = orig - step
            lm = loss_fn()
            arr[ix] = orig
            g[ix] = (lp - lm) / (2.0 * step)
            it.iternext()
        grads.append(g)
    return grads


def assert_grads_close(analytic, numeric, rtol=1e-4, floor=1e-6):
    """Elementwise |a - fd| <= rtol * (|fd| + floor)."""
    for a, f in zip(analytic, numeric):
        err = np.abs(a - f)
        bound = rtol * (np.abs(f) + floor)
        assert np.all(err <= bound), (
            f"gradient mismatch: max rel err "
            f"{float((err / (np.abs(f) + floor)).max()):.3e}"
        )


def min_kink_distance(head, X):
    """Smallest |pre-activation| over hidden ReLUs (and smallest row norm
    when normalizing). Finite differences are only valid away from these
    kinks, so gradient-check instances keep this above the step size."""
    h = np.asarray(X, np.float64)
    dist = np.inf
    last = len(head.weights) - 1
    for i, (W, b) in enumerate(zip(head.weights, head.biases)):
        z = h @ W + b
        if i < last:
            dist = min(dist, float(np.abs(z).min()))
            h = np.maximum(z, 0.0)
        else:
            h = z
    if head.normalize_outputs:
        dist = min(dist, float(np.sqrt((h * h).sum(axis=1)).min()))
    return dist


# ---------------------------------------------------------------------------
# eigen oracle (cyclic Jacobi, no numpy.linalg)


def jacobi_eigh(A, sweeps=100, tol=1e-13):
    """Eigenpairs of a symmetric matrix by cyclic Jacobi rotations."""
    A = np.array(A, np.float64)
    n = A.shape[0]
    V = np.eye(n)
    for _ in range(sweeps):
        off = np.sqrt(np.sum(np.tril(A, -1) ** 2))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if theta == 0.0:
                    t = 1.0
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                J = np.eye(n)
                J[p, p] = c
                J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                A = J.T @ A @ J
                V = V @ J
    return np.diag(A).copy(), V


# ---------------------------------------------------------------------------
# AUC oracle


def brute_force_auc(y_true, scores):
    """P(score_pos > score_neg) + 0.5 P(equal), by explicit pair counting."""
    y_true = np.asarray(y_true)
    scores = np.asarray(scores, np.float64)
    pos = scores[y_true == 1]
    neg = scores[y_true == 0]
    gt = int(np.sum(pos[:, None] > neg[None, :]))
    eq = int(np.sum(pos[:, None] == neg[None, :]))
    return (gt + 0.5 * eq) / (pos.size * neg.size)
