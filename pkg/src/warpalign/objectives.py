"""Training objective: similarity distributions, priors, and the pair loss.

Frame similarity is matched to index-based priors through row-wise
KL divergence. Same-video pairs get a Gaussian prior on source-index
differences; cross-video pairs get a prior propagated through the
exact-DTW alignment path (held constant under differentiation) plus a
soft-DTW regularizer on the embeddings themselves.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import alignment, softdtw
from .errors import InfiniteDivergenceError, InvalidInputError

# Entries this small only arise from temperatures far beyond the
# defaults; the floor keeps log(q) finite without touching normal runs.
KL_FLOOR = 1e-12


@dataclass(frozen=True)
class HyperParams:
    """Loss hyperparameters; defaults follow the reference configuration."""

    tau: float = 0.1
    sigma_sq: float = 10.0
    lambda1: float = 0.01
    lambda2: float = 0.01
    gamma: float = 0.1
    T: int = 32
    sdtw_normalize: bool = False

    def __post_init__(self):
        if self.tau <= 0 or self.sigma_sq <= 0 or self.gamma <= 0 or self.T <= 0:
            raise InvalidInputError("tau, sigma_sq, gamma, and T must be positive")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise InvalidInputError("loss weights must be nonnegative")


@dataclass
class LossReport:
    """Per-pair loss breakdown.

    ``combined`` reproduces the training objective from the parts:
    loss_same for a same-video pair, lambda1 * loss_prop + lambda2 *
    loss_sdtw for a cross-video pair.
    """

    loss_same: float
    loss_prop: float
    loss_sdtw: float
    combined: float
    grad_norm: float
    pair_kind: str  # "same-video" | "cross-video"
    zero_distance_steps: int = 0


def _unit_rows(z: np.ndarray, what: str) -> tuple[np.ndarray, np.ndarray]:
    norms = np.linalg.norm(z, axis=1)
    if np.any(norms == 0.0):
        raise InvalidInputError(f"{what} contains a zero-norm embedding row")
    return z / norms[:, None], norms


def similarity_distribution(zA: np.ndarray, zB: np.ndarray, tau: float) -> np.ndarray:
    """Row-stochastic similarity matrix Q.

    Row j is the softmax over i of cos(zB_j, zA_i) / tau: a distribution
    over the frames of the first sequence, one row per frame of the
    second.
    """
    zA = np.asarray(zA, dtype=np.float64)
    zB = np.asarray(zB, dtype=np.float64)
    if tau <= 0:
        raise InvalidInputError(f"tau must be positive, got {tau}")
    if zA.ndim != 2 or zB.ndim != 2 or zA.shape[1] != zB.shape[1]:
        raise InvalidInputError("embedding sequences must be 2-D with equal dimension")
    ua, _ = _unit_rows(zA, "first sequence")
    ub, _ = _unit_rows(zB, "second sequence")
    logits = (ub @ ua.T) / tau
    return _row_softmax(logits)


def _row_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    w = np.exp(shifted)
    return w / w.sum(axis=1, keepdims=True)


def _gaussian_rows(centers: np.ndarray, positions: np.ndarray, sigma_sq: float) -> np.ndarray:
    """Row j proportional to exp(-(centers_j - positions_i)^2 / (2 sigma^2))."""
    if sigma_sq <= 0:
        raise InvalidInputError(f"sigma_sq must be positive, got {sigma_sq}")
    delta = centers[:, None] - positions[None, :]
    exponents = -(delta * delta) / (2.0 * sigma_sq)
    w = np.exp(exponents)
    sums = w.sum(axis=1, keepdims=True)
    # A center far from every position can underflow its whole row to
    # zero; renormalize only those rows in a shifted domain so the
    # common case keeps its exact bit patterns.
    dead = np.flatnonzero(sums[:, 0] == 0.0)
    if dead.size:
        rescued = np.exp(exponents[dead] - exponents[dead].max(axis=1, keepdims=True))
        w[dead] = rescued
        sums[dead, 0] = rescued.sum(axis=1)
    return w / sums


def same_video_prior(sA: Sequence[int], sB: Sequence[int], sigma_sq: float) -> np.ndarray:
    """Gaussian prior over source-index differences between two samplings."""
    sA = np.asarray(sA, dtype=np.float64)
    sB = np.asarray(sB, dtype=np.float64)
    return _gaussian_rows(sB, sA, sigma_sq)


def propagation_prior(sB: Sequence[int], A: np.ndarray, sigma_sq: float) -> np.ndarray:
    """Prior for a cross-video pair, propagated through an alignment matrix.

    ``A`` has rows indexed by the second video's frames and columns by
    the first video's frames. Column i's propagated timestamp is
    sB[k*(i)] where k*(i) is the smallest row with A(k, i) = 1; the
    prior is then the same Gaussian form as the same-video prior, with
    those propagated timestamps in place of the first video's indices.
    ``A`` is a constant here: no gradient flows through it.
    """
    sB = np.asarray(sB, dtype=np.float64)
    A = np.asarray(A)
    if A.ndim != 2:
        raise InvalidInputError("alignment matrix must be 2-D")
    if A.shape[0] != sB.shape[0]:
        raise InvalidInputError(
            f"alignment matrix has {A.shape[0]} rows but sB has {sB.shape[0]} entries"
        )
    hit = A != 0
    if not hit.any(axis=0).all():
        raise InvalidInputError("alignment matrix has a column with no set entry")
    kstar = hit.argmax(axis=0)  # first (smallest-index) hit per column
    return _gaussian_rows(sB, sB[kstar], sigma_sq)


def kl_row(p: np.ndarray, q: np.ndarray) -> float:
    """KL(p || q) for two distributions over the same support."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    support = p > 0
    if np.any(q[support] == 0.0):
        raise InfiniteDivergenceError("q is exactly zero where p has mass")
    q = np.maximum(q, KL_FLOOR)
    ps = p[support]
    return float(np.sum(ps * (np.log(ps) - np.log(q[support]))))


def _mean_row_kl(prior: np.ndarray, q: np.ndarray) -> float:
    if prior.shape != q.shape:
        raise InvalidInputError(f"shape mismatch: prior {prior.shape} vs q {q.shape}")
    return float(np.mean([kl_row(prior[j], q[j]) for j in range(prior.shape[0])]))


def loss_same(prior: np.ndarray, q: np.ndarray) -> float:
    """Mean over rows of KL(prior row || q row), same-video flavor."""
    return _mean_row_kl(prior, q)


def loss_prop(prior: np.ndarray, q: np.ndarray) -> float:
    """Mean row KL against the propagated prior; same form as loss_same."""
    return _mean_row_kl(prior, q)


def _kl_matching_grads(
    prior: np.ndarray,
    zA: np.ndarray,
    zB: np.ndarray,
    tau: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean row KL(prior || Q) and its gradients with respect to both sequences.

    With the prior fixed, d(loss)/d(logit_ji) = (Q - prior)_ji / T; the
    rest is the cosine-similarity chain rule.
    """
    ua, norms_a = _unit_rows(np.asarray(zA, dtype=np.float64), "first sequence")
    ub, norms_b = _unit_rows(np.asarray(zB, dtype=np.float64), "second sequence")
    S = ub @ ua.T
    q = _row_softmax(S / tau)
    loss = _mean_row_kl(prior, q)
    T = prior.shape[0]
    G = (q - prior) / (T * tau)
    # d sim(u, v)/du = (v_hat - sim * u_hat) / ||u||, u = zB_j, v = zA_i
    row_dot = np.sum(G * S, axis=1, keepdims=True)
    grad_b = (G @ ua - row_dot * ub) / norms_b[:, None]
    col_dot = np.sum(G * S, axis=0)[:, None]
    grad_a = (G.T @ ub - col_dot * ua) / norms_a[:, None]
    return loss, grad_a, grad_b


def pair_loss(
    clip_a,
    clip_b,
    z_a: np.ndarray,
    z_b: np.ndarray,
    hp: HyperParams,
    same_video: bool,
    frozen_path: list[tuple[int, int]] | None = None,
) -> tuple[LossReport, np.ndarray, np.ndarray]:
    """Training loss for one clip pair, with gradients for both embeddings.

    Same-video pairs: mean row KL between the Gaussian index prior and
    the similarity distribution. Cross-video pairs: the propagated
    prior's KL (weight lambda1) plus the soft-DTW cost of the pair
    (weight lambda2). The alignment path behind the propagated prior is
    recomputed from the current embeddings unless ``frozen_path`` is
    supplied, and is treated as a constant either way; gradients flow
    only through the similarity distribution and the soft-DTW cost.
    """
    z_a = np.asarray(z_a, dtype=np.float64)
    z_b = np.asarray(z_b, dtype=np.float64)
    T = len(clip_b.source_indices)
    if z_a.shape[0] != len(clip_a.source_indices) or z_b.shape[0] != T:
        raise InvalidInputError("embedding row counts do not match clip lengths")

    if same_video:
        prior = same_video_prior(clip_a.source_indices, clip_b.source_indices, hp.sigma_sq)
        l_same, grad_a, grad_b = _kl_matching_grads(prior, z_a, z_b, hp.tau)
        grad_norm = float(np.sqrt(np.sum(grad_a**2) + np.sum(grad_b**2)))
        report = LossReport(
            loss_same=l_same,
            loss_prop=0.0,
            loss_sdtw=0.0,
            combined=l_same,
            grad_norm=grad_norm,
            pair_kind="same-video",
        )
        return report, grad_a, grad_b

    # Rows of the alignment problem are the second video's frames so the
    # propagated index lookup lands in clip_b's timeline.
    D = alignment.distance_matrix(z_b, z_a)
    path = frozen_path if frozen_path is not None else alignment.dtw_path(D)
    A = alignment.alignment_matrix(path, T, z_a.shape[0])
    prior = propagation_prior(clip_b.source_indices, A, hp.sigma_sq)
    l_prop, kl_grad_a, kl_grad_b = _kl_matching_grads(prior, z_a, z_b, hp.tau)

    sdtw_value, tables = softdtw.softdtw_cost(D, hp.gamma)
    grad_d = softdtw.softdtw_grad_wrt_distance(tables, D)
    sd_grad_b, sd_grad_a, n_zero = softdtw.softdtw_grad_wrt_embeddings(z_b, z_a, grad_d)
    scale = 1.0 / (z_a.shape[0] + T) if hp.sdtw_normalize else 1.0
    l_sdtw = sdtw_value * scale

    combined = hp.lambda1 * l_prop + hp.lambda2 * l_sdtw
    grad_a = hp.lambda1 * kl_grad_a + (hp.lambda2 * scale) * sd_grad_a
    grad_b = hp.lambda1 * kl_grad_b + (hp.lambda2 * scale) * sd_grad_b
    grad_norm = float(np.sqrt(np.sum(grad_a**2) + np.sum(grad_b**2)))
    report = LossReport(
        loss_same=0.0,
        loss_prop=l_prop,
        loss_sdtw=l_sdtw,
        combined=combined,
        grad_norm=grad_norm,
        pair_kind="cross-video",
        zero_distance_steps=n_zero,
    )
    return report, grad_a, grad_b
