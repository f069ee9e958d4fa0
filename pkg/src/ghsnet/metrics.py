"""Graph-recovery evaluation: precision, recall, pairwise edge
disagreement, and truncated precision-recall curves.

Conventions are stated explicitly because they matter for ranking sparse
estimators: an estimate with no edges has precision 1 (a conservative
estimator makes no false claims), and a truth with no edges gives recall 1.
"""

from __future__ import annotations

import csv
from typing import Iterable

import numpy as np

from .model import GraphEstimate


def _edge_sets(est: np.ndarray, truth: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    est = np.asarray(est, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if est.shape != truth.shape:
        raise ValueError(f"shape mismatch: {est.shape} vs {truth.shape}")
    iu = np.triu_indices(est.shape[0], 1)
    return est[iu], truth[iu]


def precision_recall(estimated: GraphEstimate | np.ndarray, truth: np.ndarray) -> tuple[float, float]:
    """Precision and recall of an estimated edge set against the truth."""
    adj = estimated.adjacency if isinstance(estimated, GraphEstimate) else estimated
    e, t = _edge_sets(adj, truth)
    tp = int((e & t).sum())
    n_est = int(e.sum())
    n_true = int(t.sum())
    precision = tp / n_est if n_est else 1.0
    recall = tp / n_true if n_true else 1.0
    return precision, recall


def edge_disagreement(a: GraphEstimate | np.ndarray, b: GraphEstimate | np.ndarray) -> float:
    """Mean of the two directed fractions of edges absent from the other.

    Symmetric; 0 for identical graphs, 1 for edge-disjoint ones, and 0 when
    both graphs are empty. A fraction with an empty numerator graph counts
    as 0.
    """
    adj_a = a.adjacency if isinstance(a, GraphEstimate) else a
    adj_b = b.adjacency if isinstance(b, GraphEstimate) else b
    ea, eb = _edge_sets(adj_a, adj_b)
    n_a = int(ea.sum())
    n_b = int(eb.sum())
    only_a = int((ea & ~eb).sum())
    only_b = int((eb & ~ea).sum())
    frac_a = only_a / n_a if n_a else 0.0
    frac_b = only_b / n_b if n_b else 0.0
    return (frac_a + frac_b) / 2.0


def _pr_points(score_matrix: np.ndarray, truth: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One (threshold, recall, precision) point per distinct score value,
    sweeping from the largest magnitude down; ties enter together."""
    score_matrix = np.asarray(score_matrix, dtype=float)
    truth = np.asarray(truth, dtype=bool)
    if score_matrix.shape != truth.shape:
        raise ValueError(f"shape mismatch: {score_matrix.shape} vs {truth.shape}")
    if not np.allclose(score_matrix, score_matrix.T, rtol=0.0, atol=1e-10):
        raise ValueError("score matrix must be symmetric")
    iu = np.triu_indices(truth.shape[0], 1)
    scores = np.abs(score_matrix[iu])
    labels = truth[iu].astype(float)
    n_true = labels.sum()
    if n_true == 0:
        raise ValueError("truth has no edges")

    order = np.argsort(-scores, kind="stable")
    scores = scores[order]
    labels = labels[order]
    cum_tp = np.cumsum(labels)
    counts = np.arange(1, scores.size + 1)
    # last index of each tie group
    boundary = np.flatnonzero(np.diff(scores) != 0.0)
    last = np.append(boundary, scores.size - 1)
    thresholds = scores[last]
    recalls = cum_tp[last] / n_true
    precisions = cum_tp[last] / counts[last]
    return thresholds, recalls, precisions


def cutoff_pr_curve(
    score_matrix: np.ndarray,
    truth: np.ndarray,
    recall_cap: float = 0.3,
) -> tuple[np.ndarray, float]:
    """Precision-recall curve truncated at ``recall_cap`` and its area.

    Returns the (recall, precision) points with recall at most the cap
    (plus an interpolated point at the cap when the sweep crosses it) and
    the trapezoidal area from recall 0 to the cap. A method ranking all
    true edges first scores exactly ``recall_cap``.
    """
    if not 0.0 < recall_cap <= 1.0:
        raise ValueError(f"recall_cap must be in (0, 1], got {recall_cap}")
    _, recalls, precisions = _pr_points(score_matrix, truth)

    # integrate from (0, p_first): precision is constant over the first block
    xs = [0.0]
    ys = [float(precisions[0])]
    for r, q in zip(recalls, precisions):
        if r >= recall_cap:
            r_prev, q_prev = xs[-1], ys[-1]
            if r > r_prev:
                frac = (recall_cap - r_prev) / (r - r_prev)
                q_cap = q_prev + frac * (q - q_prev)
            else:
                q_cap = float(q)
            xs.append(recall_cap)
            ys.append(q_cap)
            break
        xs.append(float(r))
        ys.append(float(q))
    curve = np.column_stack([xs, ys])
    auprc = float(np.trapezoid(ys, xs))
    return curve, auprc


def pr_curve_rows(
    score_matrix: np.ndarray,
    truth: np.ndarray,
    recall_cap: float = 1.0,
) -> list[tuple[float, float, float]]:
    """(threshold, recall, precision) rows for file output."""
    thresholds, recalls, precisions = _pr_points(score_matrix, truth)
    rows = []
    for t, r, q in zip(thresholds, recalls, precisions):
        rows.append((float(t), float(r), float(q)))
        if r >= recall_cap:
            break
    return rows


def write_pr_curve_csv(path, rows: Iterable[tuple[float, float, float]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "recall", "precision"])
        for t, r, q in rows:
            writer.writerow([f"{t:.17g}", f"{r:.17g}", f"{q:.17g}"])
