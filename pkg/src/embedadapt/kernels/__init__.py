"""Hot numeric kernels with a selectable backend.

Decision-tree growth and the Pegasos SVM loop are the two genuinely
loop-bound kernels in this package; everything else is BLAS-dominated numpy.
Both kernels exist twice: a numba-jitted implementation (default) and a
pure-numpy fallback. The EMBEDADAPT_BACKEND environment variable picks one
at import time:

* ``auto`` (default): numba when importable, else numpy with a warning;
* ``numba``: require numba, fail loudly if missing;
* ``numpy``: force the fallback.

The flag selects an acceleration backend only; it never changes experiment
semantics. Trees are bit-identical across backends by construction; Pegasos
may differ by a few ULPs in its dot products. Both implementations stay
importable directly (``numpy_impl`` / ``numba_impl``) for tests and
benchmarks regardless of the selected backend.
"""

from __future__ import annotations

import os
import warnings

import numpy as np

_ENV_VAR = "EMBEDADAPT_BACKEND"
_CHOICES = ("auto", "numba", "numpy")


def resolve_backend(requested: str, numba_available: bool) -> str:
    """Map a requested backend name to the one that will actually run."""
    req = requested.strip().lower()
    if req not in _CHOICES:
        raise ValueError(
            f"unknown {_ENV_VAR} value {requested!r}; expected one of {_CHOICES}"
        )
    if req == "numpy":
        return "numpy"
    if req == "numba":
        if not numba_available:
            raise ImportError(
                f"{_ENV_VAR}=numba but numba is not importable in this environment"
            )
        return "numba"
    if numba_available:
        return "numba"
    warnings.warn(
        "numba is not importable; falling back to the pure-numpy kernels "
        f"(set {_ENV_VAR}=numpy to silence this warning)",
        RuntimeWarning,
        stacklevel=2,
    )
    return "numpy"


def _numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


_ACTIVE = resolve_backend(os.environ.get(_ENV_VAR, "auto"), _numba_available())

if _ACTIVE == "numba":
    from . import numba_impl as _impl
else:
    from . import numpy_impl as _impl


def active_backend() -> str:
    """Name of the kernel backend selected at import time."""
    return _ACTIVE


def grow_tree(X, y, sample_idx, max_depth=None, min_leaf=1, mtry=None, rng_seed=0):
    """Grow a gini decision tree; see numpy_impl.grow_tree for semantics.

    Canonicalizes dtypes and translates max_depth=None / mtry=None into the
    unlimited sentinels before handing off to the active backend.
    """
    X = np.ascontiguousarray(X, np.float64)
    y = np.ascontiguousarray(y, np.int64)
    sample_idx = np.ascontiguousarray(sample_idx, np.int64)
    d = X.shape[1]
    depth_cap = np.int64(2**31) if max_depth is None else np.int64(max_depth)
    mtry_eff = np.int64(d if mtry is None else min(mtry, d))
    out = _impl.grow_tree(
        X, y, sample_idx, depth_cap, np.int64(min_leaf), mtry_eff, np.uint64(rng_seed)
    )
    feature, threshold, left, right, value, n_nodes = out
    n = int(n_nodes)
    return feature[:n], threshold[:n], left[:n], right[:n], value[:n]


def tree_predict_value(feature, threshold, left, right, value, X):
    """Class-1 fraction of the leaf each row of X lands in."""
    X = np.ascontiguousarray(X, np.float64)
    return _impl.tree_predict_value(feature, threshold, left, right, value, X)


def pegasos_train(X, y_signed, lam, order):
    """Pegasos SVM weights after visiting rows in the given order."""
    X = np.ascontiguousarray(X, np.float64)
    y_signed = np.ascontiguousarray(y_signed, np.float64)
    order = np.ascontiguousarray(order, np.int64)
    return _impl.pegasos_train(X, y_signed, float(lam), order)


def splitmix64_next(state: int) -> tuple[int, int]:
    """Advance the shared SplitMix64 generator (backend-dispatched)."""
    return _impl.splitmix64_next(state)
