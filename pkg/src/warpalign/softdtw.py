"""Smooth dynamic time warping and its exact gradients.

The hard minimum of the DTW recursion is replaced by the soft minimum
-gamma * log(sum_i exp(-a_i / gamma)), which makes the accumulated cost
differentiable. The backward sweep yields the gradient with respect to
the distance matrix, which equals the expected alignment indicator
under the Gibbs distribution over paths; a chain-rule step carries it
to the embeddings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .alignment import _check_distance_matrix
from .errors import InvalidInputError


def soft_min(values: Sequence[float], gamma: float) -> float:
    """Max-shifted log-sum-exp soft minimum of ``values``.

    A singleton input returns its value unchanged (the formula reduces
    to the identity there); +inf entries drop out.
    """
    if gamma <= 0:
        raise InvalidInputError(f"gamma must be positive, got {gamma}")
    vals = [float(v) for v in values]
    if not vals:
        raise InvalidInputError("soft_min of an empty collection")
    if len(vals) == 1:
        return vals[0]
    shifted = [-v / gamma for v in vals]
    mx = max(shifted)
    if mx == -math.inf:
        return math.inf
    s = sum(math.exp(x - mx) for x in shifted)
    return -gamma * (mx + math.log(s))


@dataclass
class SoftDtwTables:
    """Forward table of one soft-DTW evaluation, plus its cached adjoint.

    ``forward[-1, -1]`` is the soft-DTW cost. ``grad_d`` is filled by
    :func:`softdtw_grad_wrt_distance`; its entries lie in [0, 1] and the
    two corner entries equal 1 (every path passes through both corners).
    """

    gamma: float
    forward: np.ndarray
    grad_d: np.ndarray | None = field(default=None, repr=False)


def softdtw_cost(D: np.ndarray, gamma: float) -> tuple[float, SoftDtwTables]:
    """Soft-DTW cost of ``D`` and the tables needed for its gradient."""
    if gamma <= 0:
        raise InvalidInputError(f"gamma must be positive, got {gamma}")
    D = _check_distance_matrix(D)
    R = _kernels.softdtw_forward(D, float(gamma))
    return float(R[-1, -1]), SoftDtwTables(gamma=float(gamma), forward=R)


def softdtw_grad_wrt_distance(tables: SoftDtwTables, D: np.ndarray) -> np.ndarray:
    """Gradient of the soft-DTW cost with respect to every entry of ``D``."""
    D = _check_distance_matrix(D)
    R = tables.forward
    if R.shape != D.shape:
        raise InvalidInputError(
            f"tables were built for shape {R.shape}, got distance matrix {D.shape}"
        )
    if R[0, 0] != D[0, 0]:
        raise InvalidInputError("tables do not belong to this distance matrix")
    E = _kernels.softdtw_backward(D, R, tables.gamma)
    tables.grad_d = E
    return E


def softdtw_grad_wrt_embeddings(
    z1: np.ndarray,
    z2: np.ndarray,
    grad_d: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Chain grad_d through D(i, j) = ||z1_i - z2_j||.

    Returns (grad_z1, grad_z2, n_zero) where n_zero counts cells with a
    nonzero gradient weight sitting on a zero distance. The norm is not
    differentiable there; those cells contribute the zero subgradient
    and the count is surfaced so loss reports can flag it.
    """
    z1 = np.asarray(z1, dtype=np.float64)
    z2 = np.asarray(z2, dtype=np.float64)
    grad_d = np.asarray(grad_d, dtype=np.float64)
    if grad_d.shape != (z1.shape[0], z2.shape[0]):
        raise InvalidInputError(
            f"grad_d shape {grad_d.shape} does not match sequences "
            f"({z1.shape[0]}, {z2.shape[0]})"
        )
    diff = z1[:, None, :] - z2[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    zero_mask = (dist == 0.0) & (grad_d != 0.0)
    n_zero = int(np.count_nonzero(zero_mask))
    safe = np.where(dist == 0.0, 1.0, dist)
    weights = np.where(dist == 0.0, 0.0, grad_d / safe)
    weighted = weights[:, :, None] * diff
    grad_z1 = weighted.sum(axis=1)
    grad_z2 = -weighted.sum(axis=0)
    return grad_z1, grad_z2, n_zero
