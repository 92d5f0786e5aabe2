"""Multi-label losses and the statistical comparison battery.

All losses are "smaller is better" and lie in [0, 1].  F1 measures are turned
into losses as ``1 - F1``.
"""

from __future__ import annotations

import csv
import math
import warnings
from pathlib import Path

import numpy as np
from scipy import stats

LOSSES = ("hamming", "zero_one", "micro_f1", "macro_f1")

# Two-tailed Nemenyi critical values q_alpha (studentized range / sqrt 2),
# indexed by the number of compared algorithms k = 2..10.
NEMENYI_Q = {
    0.05: (1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164),
    0.10: (1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920),
}

WILCOXON_EXACT_MAX = 25
WILCOXON_MIN_PAIRS = 5


def _pair(truth, pred):
    y = np.asarray(truth)
    h = np.asarray(pred)
    if y.shape != h.shape:
        raise ValueError(f"shape mismatch: {y.shape} vs {h.shape}")
    y = np.atleast_2d(y).astype(bool)
    h = np.atleast_2d(h).astype(bool)
    if y.size == 0:
        raise ValueError("empty prediction set")
    return y, h


def hamming_loss(truth, pred) -> float:
    y, h = _pair(truth, pred)
    return float(np.mean(y != h))


def zero_one_loss(truth, pred) -> float:
    y, h = _pair(truth, pred)
    return float(np.mean(np.any(y != h, axis=1)))


def _f1(tp, fp, fn):
    den = 2 * tp + fp + fn
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 0, 2 * tp / np.where(den > 0, den, 1), np.nan)


def _counts(y, h, axis=None):
    tp = np.sum(y & h, axis=axis)
    fp = np.sum(~y & h, axis=axis)
    fn = np.sum(y & ~h, axis=axis)
    return tp, fp, fn


def micro_f1_loss(truth, pred, undefined: str = "one") -> float:
    """``1 - 2TP / (2TP + FP + FN)`` on counts pooled over all labels.

    ``undefined`` decides what 0/0 means: ``"one"`` (nothing relevant and
    nothing predicted is a perfect score) or ``"skip"``, which here has no
    other label to fall back on and yields NaN.
    """
    y, h = _pair(truth, pred)
    f1 = float(_f1(*_counts(y, h)))
    if math.isnan(f1):
        return 0.0 if undefined == "one" else math.nan
    return 1.0 - f1


def macro_f1_loss(truth, pred, undefined: str = "one") -> float:
    """``1 - mean per-label F1``; labels with 0/0 count as 1 or are skipped."""
    if undefined not in ("one", "skip"):
        raise ValueError(f"undefined must be 'one' or 'skip', got {undefined!r}")
    y, h = _pair(truth, pred)
    f1 = _f1(*_counts(y, h, axis=0))
    if undefined == "one":
        f1 = np.where(np.isnan(f1), 1.0, f1)
    elif np.all(np.isnan(f1)):
        return math.nan
    return float(1.0 - np.nanmean(f1))


def all_losses(truth, pred) -> dict[str, float]:
    return {"hamming": hamming_loss(truth, pred), "zero_one": zero_one_loss(truth, pred),
            "micro_f1": micro_f1_loss(truth, pred), "macro_f1": macro_f1_loss(truth, pred)}


# ---------------------------------------------------------------------------
# Rank statistics

def average_ranks(losses) -> np.ndarray:
    """Row-wise midranks (1 = smallest loss) averaged over rows."""
    lm = np.asarray(losses, dtype=np.float64)
    return stats.rankdata(lm, axis=1).mean(axis=0)


def friedman_test(losses):
    """Chi-square Friedman test on an (n rows, k algorithms) loss matrix.

    Returns
    -------
    statistic, p_value, ranks
        ``ranks`` are the average midranks per algorithm.
    """
    lm = np.asarray(losses, dtype=np.float64)
    if lm.ndim != 2 or lm.shape[0] < 2 or lm.shape[1] < 2:
        raise ValueError("need at least 2 rows and 2 algorithms")
    if not np.isfinite(lm).all():
        raise ValueError("loss matrix has missing or non-finite values")
    n, k = lm.shape
    ranks = average_ranks(lm)
    stat = 12.0 * n / (k * (k + 1)) * (np.sum(ranks ** 2) - k * (k + 1) ** 2 / 4.0)
    stat = max(float(stat), 0.0)
    return stat, float(stats.chi2.sf(stat, k - 1)), ranks


def nemenyi_critical_difference(k: int, n: int, alpha: float = 0.05) -> float:
    """``q_alpha * sqrt(k (k + 1) / (6 n))`` for k = 2..10, alpha in {0.05, 0.1}."""
    table = NEMENYI_Q.get(round(float(alpha), 10))
    if table is None:
        raise ValueError(f"unsupported alpha {alpha}; use 0.05 or 0.1")
    if not 2 <= k <= len(table) + 1:
        raise ValueError(f"unsupported number of algorithms k={k}; need 2..10")
    if n < 1:
        raise ValueError("need n >= 1")
    return table[k - 2] * math.sqrt(k * (k + 1) / (6.0 * n))


def _signed_rank_null(doubled_ranks: np.ndarray) -> np.ndarray:
    """Null distribution of 2*W+ over all 2**n sign assignments (counts)."""
    total = int(doubled_ranks.sum())
    dist = np.zeros(total + 1, dtype=np.float64)
    dist[0] = 1.0
    for r in doubled_ranks.astype(int):
        shifted = np.zeros_like(dist)
        shifted[r:] = dist[:total + 1 - r]
        dist = dist + shifted
    return dist


def wilcoxon_signed_rank(a, b, exact: bool | None = None) -> float:
    """Two-sided Wilcoxon signed-rank p-value for paired samples.

    Zero differences are discarded and tied absolute differences get
    midranks.  The exact null distribution (which accounts for midranks) is
    used for at most 25 non-zero pairs; above that a normal approximation with
    continuity and tie correction.  When every difference is zero the p-value
    is 1 and a warning is issued.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("samples must be 1-d and of equal length")
    diff = a - b
    diff = diff[diff != 0]
    if diff.size == 0:
        warnings.warn("all paired differences are zero; returning p = 1", RuntimeWarning,
                      stacklevel=2)
        return 1.0
    n = diff.size
    if n < WILCOXON_MIN_PAIRS:
        raise ValueError(f"need at least {WILCOXON_MIN_PAIRS} non-zero differences, got {n}")
    ranks = stats.rankdata(np.abs(diff))
    w_plus = float(ranks[diff > 0].sum())
    if exact is None:
        exact = n <= WILCOXON_EXACT_MAX
    if exact:
        doubled = np.rint(2 * ranks).astype(int)
        dist = _signed_rank_null(doubled)
        w2 = int(round(2 * w_plus))
        lower = dist[:w2 + 1].sum()
        upper = dist[w2:].sum()
        return float(min(1.0, 2.0 * min(lower, upper) / dist.sum()))
    mean = n * (n + 1) / 4.0
    _, counts = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(counts ** 3 - counts) / 48.0
    dev = w_plus - mean
    z = (abs(dev) - 0.5) / math.sqrt(var) if abs(dev) >= 0.5 else 0.0
    return float(min(1.0, 2.0 * stats.norm.sf(z)))


def spearman(xs, ys) -> float:
    """Pearson correlation of midranks; NaN when either input is constant."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("inputs must be 1-d and of equal length")
    if x.size < 3:
        raise ValueError("need at least 3 observations")
    rx = stats.rankdata(x) - (x.size + 1) / 2.0
    ry = stats.rankdata(y) - (y.size + 1) / 2.0
    den = math.sqrt(float(rx @ rx) * float(ry @ ry))
    if den == 0:
        return math.nan
    return float(np.clip((rx @ ry) / den, -1.0, 1.0))


def holm(p_values) -> np.ndarray:
    """Holm step-down adjusted p-values (used in place of Bergmann-Hommel)."""
    p = np.asarray(p_values, dtype=np.float64)
    order = np.argsort(p, kind="stable")
    m = p.size
    adj = np.empty(m)
    running = 0.0
    for i, idx in enumerate(order):
        running = max(running, (m - i) * p[idx])
        adj[idx] = min(1.0, running)
    return adj


# ---------------------------------------------------------------------------
# Loss-matrix CSV: header row of algorithm names, first column = row id.

def write_loss_matrix(path, row_ids, algorithms, values) -> None:
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (len(row_ids), len(algorithms)):
        raise ValueError("loss matrix shape does not match ids and algorithm names")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", *algorithms])
        for rid, row in zip(row_ids, values):
            w.writerow([rid, *(repr(float(v)) for v in row)])


def read_loss_matrix(path):
    """Returns ``(row_ids, algorithms, values)``."""
    with open(Path(path), newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or len(rows[0]) < 2:
        raise ValueError(f"{path}: missing header")
    algorithms = rows[0][1:]
    ids, values = [], []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(algorithms) + 1:
            raise ValueError(f"{path}: line {i} has {len(row)} fields")
        ids.append(row[0])
        values.append([float(v) for v in row[1:]])
    vals = np.array(values, dtype=np.float64).reshape(len(ids), len(algorithms))
    if np.isnan(vals).any():
        raise ValueError(f"{path}: missing values")
    return ids, algorithms, vals
