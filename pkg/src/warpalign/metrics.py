"""Evaluation metrics over learned frame embeddings.

All five metrics are deterministic pure functions. Nearest-neighbor
ties break toward the smallest frame index, matching the propagation
tie rule used during training. Kendall's tau counts duplicate
nearest neighbors (p == q) as discordant: the stricter convention.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import alignment
from .errors import InvalidInputError


@dataclass
class EvalReport:
    kendall_tau: float
    phase_classification: dict[float, float]  # label fraction -> accuracy
    phase_progression: float
    ap_at_k: dict[int, float]  # K -> precision
    dtw_accuracy: float

    def validate(self) -> None:
        if not -1.0 <= self.kendall_tau <= 1.0:
            raise InvalidInputError(f"kendall_tau out of range: {self.kendall_tau}")
        if not self.phase_classification or not self.ap_at_k:
            raise InvalidInputError("metric maps must be nonempty")
        for frac, acc in self.phase_classification.items():
            if not 0.0 <= acc <= 1.0:
                raise InvalidInputError(f"classification accuracy out of range at {frac}")
        for k, prec in self.ap_at_k.items():
            if not 0.0 <= prec <= 1.0:
                raise InvalidInputError(f"AP@{k} out of range: {prec}")
        if self.phase_progression > 1.0:
            raise InvalidInputError("phase_progression cannot exceed 1")
        if not 0.0 <= self.dtw_accuracy <= 1.0:
            raise InvalidInputError(f"dtw_accuracy out of range: {self.dtw_accuracy}")

    def as_dict(self) -> dict:
        return {
            "kendall_tau": self.kendall_tau,
            "phase_classification": {str(k): v for k, v in self.phase_classification.items()},
            "phase_progression": self.phase_progression,
            "ap_at_k": {str(k): v for k, v in self.ap_at_k.items()},
            "dtw_accuracy": self.dtw_accuracy,
        }


def _nearest_neighbors(embA: np.ndarray, embB: np.ndarray) -> np.ndarray:
    """Index in B of each A frame's nearest neighbor; ties -> smallest index."""
    D = alignment.distance_matrix(embA, embB)
    return D.argmin(axis=1)


def kendall_tau(embA: np.ndarray, embB: np.ndarray) -> float:
    """Rank correlation of nearest-neighbor retrieval order.

    For every ordered frame pair i < j of the first video, look up the
    nearest frames (p, q) in the second; the pair is concordant when
    p < q. p == q and p > q both count as discordant.
    """
    embA = np.asarray(embA, dtype=np.float64)
    n = embA.shape[0] if embA.ndim == 2 else 0
    if n < 2:
        raise InvalidInputError("kendall_tau needs at least 2 frames in the first video")
    nn = _nearest_neighbors(embA, embB)
    concordant = 0
    total = n * (n - 1) // 2
    for i in range(n - 1):
        concordant += int(np.sum(nn[i] < nn[i + 1:]))
    discordant = total - concordant
    return (concordant - discordant) / total


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    w = np.exp(shifted)
    return w / w.sum(axis=1, keepdims=True)


def _fit_multinomial_logistic(
    x: np.ndarray, y: np.ndarray, n_classes: int,
    iters: int = 500, lr: float = 0.5, l2: float = 1e-4,
) -> np.ndarray:
    """Full-batch gradient descent from zero init; returns (d+1, K) weights."""
    n = x.shape[0]
    xb = np.hstack([x, np.ones((n, 1))])
    W = np.zeros((xb.shape[1], n_classes))
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), y] = 1.0
    for _ in range(iters):
        probs = _softmax_rows(xb @ W)
        grad = xb.T @ (probs - onehot) / n + l2 * W
        W -= lr * grad
    return W


def _predict_multinomial(W: np.ndarray, x: np.ndarray) -> np.ndarray:
    xb = np.hstack([x, np.ones((x.shape[0], 1))])
    return (xb @ W).argmax(axis=1)


def phase_classification(
    train_embs: np.ndarray,
    train_labels: Sequence[int],
    test_embs: np.ndarray,
    test_labels: Sequence[int],
    fractions: Iterable[float] = (0.1, 0.5, 1.0),
) -> dict[float, float]:
    """Test accuracy of a linear classifier fit on a label-fraction subsample.

    The subsample is stratified and deterministic: the first
    ceil(fraction * count) frames of each class, in dataset order.
    """
    train_embs = np.asarray(train_embs, dtype=np.float64)
    test_embs = np.asarray(test_embs, dtype=np.float64)
    train_labels = np.asarray(train_labels, dtype=np.int64)
    test_labels = np.asarray(test_labels, dtype=np.int64)
    if train_embs.shape[0] != train_labels.shape[0]:
        raise InvalidInputError("one label per training frame required")
    if test_embs.shape[0] != test_labels.shape[0]:
        raise InvalidInputError("one label per test frame required")
    classes = np.unique(np.concatenate([train_labels, test_labels]))
    n_classes = int(classes.max()) + 1
    result: dict[float, float] = {}
    for frac in fractions:
        if not 0.0 < frac <= 1.0:
            raise InvalidInputError(f"label fraction must be in (0, 1], got {frac}")
        keep: list[np.ndarray] = []
        for c in np.unique(train_labels):
            idx = np.flatnonzero(train_labels == c)
            keep.append(idx[: int(np.ceil(frac * idx.size))])
        sel = np.sort(np.concatenate(keep))
        W = _fit_multinomial_logistic(train_embs[sel], train_labels[sel], n_classes)
        pred = _predict_multinomial(W, test_embs)
        result[float(frac)] = float(np.mean(pred == test_labels))
    return result


def phase_progression(
    train_embs: np.ndarray,
    train_targets: Sequence[float],
    test_sets: Sequence[tuple[np.ndarray, Sequence[float]]],
) -> float:
    """R-squared of a linear progress regressor, averaged over test videos.

    The regressor (least squares with intercept) is fit once on pooled
    training frames; each test video contributes its own R-squared
    against its own target variance.
    """
    train_embs = np.asarray(train_embs, dtype=np.float64)
    train_targets = np.asarray(train_targets, dtype=np.float64)
    if train_embs.shape[0] != train_targets.shape[0]:
        raise InvalidInputError("one progress target per training frame required")
    if not test_sets:
        raise InvalidInputError("phase_progression needs at least one test video")
    xb = np.hstack([train_embs, np.ones((train_embs.shape[0], 1))])
    coef, *_ = np.linalg.lstsq(xb, train_targets, rcond=None)
    scores = []
    for emb, target in test_sets:
        emb = np.asarray(emb, dtype=np.float64)
        target = np.asarray(target, dtype=np.float64)
        pred = np.hstack([emb, np.ones((emb.shape[0], 1))]) @ coef
        ss_res = float(np.sum((target - pred) ** 2))
        ss_tot = float(np.sum((target - target.mean()) ** 2))
        scores.append(1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0)
    return float(np.mean(scores))


def average_precision_at_k(
    query_embs: np.ndarray,
    query_labels: Sequence[int],
    corpus_embs: np.ndarray,
    corpus_labels: Sequence[int],
    K: int,
) -> float:
    """Mean fraction of the K nearest corpus frames sharing the query label.

    The caller is responsible for keeping the corpus cross-video (no
    frames from the query's own video).
    """
    query_embs = np.asarray(query_embs, dtype=np.float64)
    corpus_embs = np.asarray(corpus_embs, dtype=np.float64)
    query_labels = np.asarray(query_labels, dtype=np.int64)
    corpus_labels = np.asarray(corpus_labels, dtype=np.int64)
    if K < 1 or K > corpus_embs.shape[0]:
        raise InvalidInputError(f"K={K} out of range for corpus of {corpus_embs.shape[0]}")
    D = alignment.distance_matrix(query_embs, corpus_embs)
    # Stable sort: equal distances resolve to the smallest corpus index.
    order = np.argsort(D, axis=1, kind="stable")[:, :K]
    hits = corpus_labels[order] == query_labels[:, None]
    return float(np.mean(hits))


def dtw_accuracy(
    embA: np.ndarray,
    labelsA: Sequence[int],
    embB: np.ndarray,
    labelsB: Sequence[int],
) -> float:
    """Fraction of DTW path steps connecting frames with equal labels."""
    labelsA = np.asarray(labelsA, dtype=np.int64)
    labelsB = np.asarray(labelsB, dtype=np.int64)
    D = alignment.distance_matrix(embA, embB)
    if labelsA.shape[0] != D.shape[0] or labelsB.shape[0] != D.shape[1]:
        raise InvalidInputError("one label per frame required on both sides")
    path = alignment.dtw_path(D)
    same = sum(1 for i, j in path if labelsA[i] == labelsB[j])
    return same / len(path)


def evaluate(
    embed_fn,
    train_videos,
    test_videos,
    fractions: Iterable[float] = (0.1, 0.5, 1.0),
    ks: Iterable[int] = (5, 10, 15),
) -> EvalReport:
    """All five metrics over a train/test split of annotated videos.

    ``embed_fn`` maps a (F, d_in) feature matrix to (F, d_z) embeddings.
    Pairwise metrics (tau, DTW accuracy) average over ordered test-video
    pairs; retrieval uses, per query video, all other test videos as
    the corpus.
    """
    test_videos = list(test_videos)
    train_videos = list(train_videos)
    if len(test_videos) < 2:
        raise InvalidInputError("evaluation needs at least 2 test videos")
    test_embs = [embed_fn(v.features) for v in test_videos]
    train_embs = [embed_fn(v.features) for v in train_videos]

    taus, dtws = [], []
    for a in range(len(test_videos)):
        for b in range(len(test_videos)):
            if a == b:
                continue
            taus.append(kendall_tau(test_embs[a], test_embs[b]))
            dtws.append(
                dtw_accuracy(
                    test_embs[a], test_videos[a].phase_labels,
                    test_embs[b], test_videos[b].phase_labels,
                )
            )

    pooled_train = np.vstack(train_embs)
    pooled_train_labels = np.concatenate([v.phase_labels for v in train_videos])
    pooled_test = np.vstack(test_embs)
    pooled_test_labels = np.concatenate([v.phase_labels for v in test_videos])
    classification = phase_classification(
        pooled_train, pooled_train_labels, pooled_test, pooled_test_labels, fractions
    )

    progression = phase_progression(
        pooled_train,
        np.concatenate([v.progress for v in train_videos]),
        [(emb, v.progress) for emb, v in zip(test_embs, test_videos)],
    )

    ap: dict[int, float] = {}
    for K in ks:
        per_query = []
        for q in range(len(test_videos)):
            corpus_embs = np.vstack([e for t, e in enumerate(test_embs) if t != q])
            corpus_labels = np.concatenate(
                [test_videos[t].phase_labels for t in range(len(test_videos)) if t != q]
            )
            per_query.append(
                average_precision_at_k(
                    test_embs[q], test_videos[q].phase_labels,
                    corpus_embs, corpus_labels, K,
                )
            )
        ap[int(K)] = float(np.mean(per_query))

    report = EvalReport(
        kendall_tau=float(np.mean(taus)),
        phase_classification=classification,
        phase_progression=progression,
        ap_at_k=ap,
        dtw_accuracy=float(np.mean(dtws)),
    )
    report.validate()
    return report


def write_report_json(path, report: EvalReport) -> None:
    with open(path, "w") as fh:
        json.dump(report.as_dict(), fh, indent=2)
        fh.write("\n")


def write_report_csv(path, report: EvalReport) -> None:
    """One-row CSV shaped like the usual results-table column layout."""
    headers = ["kendall_tau"]
    values = [f"{report.kendall_tau:.6f}"]
    for frac in sorted(report.phase_classification):
        headers.append(f"classification@{frac:g}")
        values.append(f"{report.phase_classification[frac]:.6f}")
    headers.append("phase_progression")
    values.append(f"{report.phase_progression:.6f}")
    for k in sorted(report.ap_at_k):
        headers.append(f"ap@{k}")
        values.append(f"{report.ap_at_k[k]:.6f}")
    headers.append("dtw_accuracy")
    values.append(f"{report.dtw_accuracy:.6f}")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(headers)
        writer.writerow(values)
