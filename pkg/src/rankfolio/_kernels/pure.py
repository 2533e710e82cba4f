"""Numpy fallback for the compiled split-search / neighbor kernels.

Both backends follow the same arithmetic contract so they are exchangeable
bit for bit:

* classification split scores use integer class counts (exact) and a single
  float division per side;
* regression split scores accumulate target sums strictly left to right;
* neighbor distances accumulate squared feature differences in feature
  order, and neighbors are ordered by (distance, training index).

Split convention: a row goes left when ``x[feature] <= threshold`` and the
threshold is the largest feature value on the left side, which makes the
realized partition exactly the one the score was computed for.
"""

import numpy as np


def best_split_classification(X, y_codes, n_classes, min_leaf):
    """Best (feature, threshold) by the Gini-equivalent count score.

    Maximizes sum_c(count_left_c^2)/n_left + sum_c(count_right_c^2)/n_right,
    keeping the first maximum in (feature, sorted position) order. Returns
    (found, feature, threshold).
    """
    n = X.shape[0]
    if n < 2 * min_leaf:
        return False, -1, 0.0
    total = np.bincount(y_codes, minlength=n_classes).astype(np.int64)
    parent = float(np.sum(total * total)) / n
    best_score = parent
    best_feature = -1
    best_threshold = 0.0
    onehot = np.zeros((n, n_classes), dtype=np.int64)
    onehot[np.arange(n), y_codes] = 1
    for f in range(X.shape[1]):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        left = np.cumsum(onehot[order], axis=0)
        pos = np.arange(min_leaf - 1, n - min_leaf)
        valid = xs[pos] < xs[pos + 1]
        if not np.any(valid):
            continue
        pos = pos[valid]
        cl = left[pos]
        cr = total[None, :] - cl
        nl = (pos + 1).astype(np.float64)
        nr = n - nl
        score = np.sum(cl * cl, axis=1) / nl + np.sum(cr * cr, axis=1) / nr
        i = int(np.argmax(score))
        if score[i] > best_score:
            best_score = float(score[i])
            best_feature = f
            best_threshold = float(xs[pos[i]])
    return best_feature >= 0, best_feature, best_threshold


def best_split_regression(X, y, min_leaf):
    """Best (feature, threshold) by the variance-reduction sum score.

    Maximizes S_left^2/n_left + S_right^2/n_right with sums accumulated
    strictly left to right. Returns (found, feature, threshold).
    """
    n = X.shape[0]
    if n < 2 * min_leaf:
        return False, -1, 0.0
    total = float(np.cumsum(y)[-1])
    best_score = total * total / n
    best_feature = -1
    best_threshold = 0.0
    for f in range(X.shape[1]):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        cs = np.cumsum(y[order])
        pos = np.arange(min_leaf - 1, n - min_leaf)
        valid = xs[pos] < xs[pos + 1]
        if not np.any(valid):
            continue
        pos = pos[valid]
        sl = cs[pos]
        nl = (pos + 1).astype(np.float64)
        score = sl * sl / nl + (total - sl) * (total - sl) / (n - nl)
        i = int(np.argmax(score))
        if score[i] > best_score:
            best_score = float(score[i])
            best_feature = f
            best_threshold = float(xs[pos[i]])
    return best_feature >= 0, best_feature, best_threshold


def knn_query(train, queries, k):
    """Indices of the k nearest training rows per query row.

    Squared Euclidean distance accumulated feature by feature; ties in
    distance resolved toward the smaller training index. Returns an
    (n_queries, k) int64 array ordered nearest first.
    """
    nq = queries.shape[0]
    nt = train.shape[0]
    d = np.zeros((nq, nt), dtype=np.float64)
    for j in range(train.shape[1]):
        diff = queries[:, j][:, None] - train[:, j][None, :]
        d += diff * diff
    out = np.empty((nq, k), dtype=np.int64)
    for i in range(nq):
        out[i] = np.argsort(d[i], kind="stable")[:k]
    return out
