"""Exact dynamic time warping between two embedding sequences.

A path walks an n x m grid from (0, 0) to (n-1, m-1) using the moves
right, down, and diagonal; its cost is the sum of the distance-matrix
entries it touches. Everything here is a pure function, safe to call
from multiple threads.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .errors import EnumerationLimitError, InvalidInputError

# Exhaustive enumeration explodes combinatorially; 7x7 already has 48639
# paths, which is as much as the test oracles ever need.
ENUMERATION_LIMIT = 7

Path = list[tuple[int, int]]


def distance_matrix(
    z1: np.ndarray,
    z2: np.ndarray,
    metric: Callable[[np.ndarray, np.ndarray], float] | None = None,
) -> np.ndarray:
    """Pairwise distances between the rows of two embedding sequences.

    The default metric is the Euclidean norm of the row difference,
    computed from explicit differences so that identical rows give an
    exact zero. ``metric`` may override it with any scalar function of
    two vectors (used by tests).
    """
    z1 = np.asarray(z1, dtype=np.float64)
    z2 = np.asarray(z2, dtype=np.float64)
    if z1.ndim != 2 or z2.ndim != 2 or z1.shape[0] == 0 or z2.shape[0] == 0:
        raise InvalidInputError("embedding sequences must be nonempty 2-D arrays")
    if z1.shape[1] != z2.shape[1]:
        raise InvalidInputError(
            f"embedding dimensions differ: {z1.shape[1]} vs {z2.shape[1]}"
        )
    if metric is None:
        diff = z1[:, None, :] - z2[None, :, :]
        return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    out = np.empty((z1.shape[0], z2.shape[0]))
    for i, a in enumerate(z1):
        for j, b in enumerate(z2):
            out[i, j] = metric(a, b)
    return out


def _check_distance_matrix(D: np.ndarray) -> np.ndarray:
    D = np.ascontiguousarray(D, dtype=np.float64)
    if D.ndim != 2 or D.size == 0:
        raise InvalidInputError("distance matrix must be a nonempty 2-D array")
    return D


def dtw_accumulated(D: np.ndarray) -> np.ndarray:
    """Accumulated min-cost table r(i, j); r(-1, -1) is the DTW cost."""
    return _kernels.dtw_accumulate(_check_distance_matrix(D))


def dtw_cost(D: np.ndarray) -> float:
    """Minimum path cost through ``D``."""
    return float(dtw_accumulated(D)[-1, -1])


def dtw_path(D: np.ndarray) -> Path:
    """A minimum-cost path through ``D``.

    Ties during backtracking are broken by a fixed predecessor
    preference: diagonal, then vertical, then horizontal, which makes
    the result deterministic.
    """
    D = _check_distance_matrix(D)
    R = _kernels.dtw_accumulate(D)
    i, j = D.shape[0] - 1, D.shape[1] - 1
    steps = [(i, j)]
    while i > 0 or j > 0:
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            best = R[i - 1, j - 1]
            move = 0
            if R[i - 1, j] < best:
                best = R[i - 1, j]
                move = 1
            if R[i, j - 1] < best:
                move = 2
            if move == 0:
                i -= 1
                j -= 1
            elif move == 1:
                i -= 1
            else:
                j -= 1
        steps.append((i, j))
    steps.reverse()
    return steps


def validate_path(path: Sequence[tuple[int, int]], n: int, m: int) -> None:
    """Raise InvalidInputError unless ``path`` is a monotone corner-to-corner path."""
    if len(path) == 0:
        raise InvalidInputError("path is empty")
    if tuple(path[0]) != (0, 0):
        raise InvalidInputError(f"path must start at (0, 0), got {path[0]}")
    if tuple(path[-1]) != (n - 1, m - 1):
        raise InvalidInputError(
            f"path must end at ({n - 1}, {m - 1}), got {path[-1]}"
        )
    for k, (i, j) in enumerate(path):
        if not (0 <= i < n and 0 <= j < m):
            raise InvalidInputError(f"step {k} = ({i}, {j}) is out of bounds")
        if k > 0:
            di = i - path[k - 1][0]
            dj = j - path[k - 1][1]
            if (di, dj) not in ((0, 1), (1, 0), (1, 1)):
                raise InvalidInputError(
                    f"step {k} moves by ({di}, {dj}); only right, down, "
                    "and diagonal moves are allowed"
                )


def alignment_matrix(path: Sequence[tuple[int, int]], n: int, m: int) -> np.ndarray:
    """Binary n x m matrix with ones exactly on the path steps."""
    validate_path(path, n, m)
    A = np.zeros((n, m), dtype=np.int8)
    for i, j in path:
        A[i, j] = 1
    return A


def path_cost(D: np.ndarray, path: Sequence[tuple[int, int]]) -> float:
    """Sum of D over the path steps, accumulated in step order.

    Step-order accumulation reproduces the DP recursion's association
    exactly, so oracle comparisons against ``dtw_cost`` can use strict
    equality.
    """
    total = 0.0
    for i, j in path:
        total += D[i, j]
    return total


def enumerate_paths(n: int, m: int) -> list[Path]:
    """All monotone paths from (0, 0) to (n-1, m-1), for small grids only."""
    if n < 1 or m < 1:
        raise InvalidInputError("grid dimensions must be positive")
    if n > ENUMERATION_LIMIT or m > ENUMERATION_LIMIT:
        raise EnumerationLimitError(
            f"refusing to enumerate a {n}x{m} grid (limit {ENUMERATION_LIMIT})"
        )
    paths: list[Path] = []
    prefix: Path = [(0, 0)]

    def extend(i: int, j: int) -> None:
        if i == n - 1 and j == m - 1:
            paths.append(prefix.copy())
            return
        for di, dj in ((1, 1), (1, 0), (0, 1)):
            ni, nj = i + di, j + dj
            if ni < n and nj < m:
                prefix.append((ni, nj))
                extend(ni, nj)
                prefix.pop()

    extend(0, 0)
    return paths


def enumerate_alignments(n: int, m: int) -> list[np.ndarray]:
    """All alignment matrices for an n x m grid (test oracle)."""
    return [alignment_matrix(p, n, m) for p in enumerate_paths(n, m)]
