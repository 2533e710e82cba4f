"""Hot kernels with a compiled core and a numpy fallback.

The compiled extension is preferred when it imported cleanly; set
``RANKFOLIO_PURE=1`` to force the fallback. Both backends implement the
same arithmetic contract (see ``pure.py``) and return identical results.
"""

import os

import numpy as np

from . import pure

_BACKENDS = {"pure": pure}
try:
    from . import _ck
    _BACKENDS["compiled"] = _ck
except ImportError:
    _ck = None

if os.environ.get("RANKFOLIO_PURE", "") in ("1", "true", "yes"):
    _active = "pure"
else:
    _active = "compiled" if _ck is not None else "pure"


def active_backend():
    return _active


def available_backends():
    return tuple(sorted(_BACKENDS))


def use_backend(name):
    """Switch kernel backend (used by benchmarks and parity tests)."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; available: {available_backends()}")
    _active = name


def _as_matrix(X):
    return np.ascontiguousarray(X, dtype=np.float64)


def best_split_classification(X, y_codes, n_classes, min_leaf):
    return _BACKENDS[_active].best_split_classification(
        _as_matrix(X), np.ascontiguousarray(y_codes, dtype=np.int64),
        int(n_classes), int(min_leaf))


def best_split_regression(X, y, min_leaf):
    return _BACKENDS[_active].best_split_regression(
        _as_matrix(X), np.ascontiguousarray(y, dtype=np.float64), int(min_leaf))


def knn_query(train, queries, k):
    return _BACKENDS[_active].knn_query(_as_matrix(train), _as_matrix(queries), int(k))
