"""Cluster-recovery metrics and degree diagnostics."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from sklearn.metrics import normalized_mutual_info_score

from .model import ValidationError, check_assignment


@dataclass(frozen=True)
class MetricReport:
    error_rate: float
    error_count: int
    nmi: float
    confusion: np.ndarray  # (K_true, K_pred) counts
    matching: tuple  # pairs (true_label, pred_label) used for matching


def confusion_matrix(truth, pred):
    truth = check_assignment(truth)
    pred = check_assignment(pred)
    if truth.shape != pred.shape:
        raise ValidationError("truth and pred must have equal length")
    kt = int(truth.max()) + 1 if truth.size else 1
    kp = int(pred.max()) + 1 if pred.size else 1
    c = np.zeros((kt, kp), dtype=np.int64)
    np.add.at(c, (truth, pred), 1)
    return c


def clustering_error(truth, pred):
    """Permutation-matched clustering error.

    Builds the confusion matrix and finds the label matching that
    maximizes the matched count (optimal assignment, rectangular
    allowed); the error is the number of unmatched nodes.
    """
    c = confusion_matrix(truth, pred)
    rows, cols = linear_sum_assignment(c, maximize=True)
    matched = int(c[rows, cols].sum())
    n = int(c.sum())
    return MetricReport(
        error_rate=(n - matched) / n if n else 0.0,
        error_count=n - matched,
        nmi=nmi(truth, pred),
        confusion=c,
        matching=tuple(zip(rows.tolist(), cols.tolist())),
    )


def nmi(truth, pred, average_method="arithmetic"):
    """Normalized mutual information in [0,1].

    Default normalization is the arithmetic mean of the label entropies;
    min/max/geometric variants are exposed for sensitivity checks.
    """
    truth = check_assignment(truth)
    pred = check_assignment(pred)
    if truth.shape != pred.shape:
        raise ValidationError("truth and pred must have equal length")
    return float(
        normalized_mutual_info_score(truth, pred, average_method=average_method)
    )


def degree_histogram(g):
    """Exact degree -> count mapping, zero-degree bin included."""
    return degree_histogram_from_degrees(g.degree())


def degree_histogram_from_degrees(degrees):
    counts = Counter(int(d) for d in degrees)
    return dict(sorted(counts.items()))


def _as_value_counts(samples):
    """Normalize input to (values, counts) arrays, zeros removed."""
    if isinstance(samples, dict):
        vals = np.array(sorted(samples), dtype=np.float64)
        cnts = np.array([samples[v] for v in sorted(samples)], dtype=np.float64)
    else:
        arr = np.asarray(samples, dtype=np.float64)
        c = Counter(arr.tolist())
        vals = np.array(sorted(c), dtype=np.float64)
        cnts = np.array([c[v] for v in sorted(c)], dtype=np.float64)
    keep = (vals > 0) & (cnts > 0)
    return vals[keep], cnts[keep]


def powerlaw_slope(samples, bins=25, binned=True, tail_quantile=None):
    """Least-squares line through (log value, log frequency).

    binned=True: logarithmically spaced bins (counts normalized by bin
    width, geometric bin centers). binned=False: raw frequency of each
    distinct positive value, no binning — matches a node-count vs degree
    scatter.

    tail_quantile, when set (e.g. 0.95), drops values above that
    quantile of the sample mass before fitting. Finite networks cut the
    power law off at a maximum attainable degree, and the count-of-one
    scatter near that cutoff otherwise steepens the fitted line.

    Returns (slope, intercept, r2).
    """
    vals, cnts = _as_value_counts(samples)
    if tail_quantile is not None:
        if not 0.0 < tail_quantile <= 1.0:
            raise ValidationError("tail_quantile must be in (0, 1]")
        cdf = np.cumsum(cnts) / cnts.sum()
        cut = vals[np.searchsorted(cdf, tail_quantile)]
        keep = vals <= cut
        vals, cnts = vals[keep], cnts[keep]
    if binned:
        if vals.size < 2 or vals[0] == vals[-1]:
            raise ValidationError("degenerate input: need a spread of positive values")
        edges = np.geomspace(vals[0], vals[-1] * (1 + 1e-12), int(bins) + 1)
        which = np.clip(np.searchsorted(edges, vals, side="right") - 1, 0, bins - 1)
        bc = np.zeros(int(bins))
        np.add.at(bc, which, cnts)
        widths = np.diff(edges)
        centers = np.sqrt(edges[:-1] * edges[1:])
        keep = bc > 0
        x = np.log(centers[keep])
        y = np.log(bc[keep] / widths[keep])
    else:
        x = np.log(vals)
        y = np.log(cnts)
    if x.size < 3:
        raise ValidationError("need at least 3 usable points/bins for a slope fit")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2
