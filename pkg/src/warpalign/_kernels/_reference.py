"""Pure-Python fallback for the alignment DP kernels.

Mirrors the compiled extension cell for cell: same accumulation order,
same single-predecessor edge handling, same max-shifted soft minimum.
The hard-DTW table is bit-identical across backends; the soft tables
agree to within a few ulp (libm vs vectorized exp/log).

Inner loops run over nested lists because scalar indexing into
ndarrays is several times slower in CPython.
"""

from __future__ import annotations

import math

import numpy as np


def dtw_accumulate(D: np.ndarray) -> np.ndarray:
    """Fill the accumulated min-cost table for the moves {right, down, diagonal}."""
    n, m = D.shape
    d = D.tolist()
    r = [[0.0] * m for _ in range(n)]
    row = r[0]
    drow = d[0]
    row[0] = drow[0]
    for j in range(1, m):
        row[j] = drow[j] + row[j - 1]
    for i in range(1, n):
        prev = r[i - 1]
        row = r[i]
        drow = d[i]
        row[0] = drow[0] + prev[0]
        for j in range(1, m):
            best = prev[j - 1]
            if prev[j] < best:
                best = prev[j]
            if row[j - 1] < best:
                best = row[j - 1]
            row[j] = drow[j] + best
    return np.asarray(r, dtype=np.float64)


def softdtw_forward(D: np.ndarray, gamma: float) -> np.ndarray:
    """Fill the smoothed accumulated-cost table.

    Interior cells take a max-shifted log-sum-exp soft minimum over the
    three predecessors; edge cells have a single predecessor, for which
    the soft minimum reduces to the value itself, so they use a plain
    addition (exact, and consistent with the backward weights).
    """
    n, m = D.shape
    d = D.tolist()
    r = [[0.0] * m for _ in range(n)]
    exp = math.exp
    log = math.log
    row = r[0]
    drow = d[0]
    row[0] = drow[0]
    for j in range(1, m):
        row[j] = drow[j] + row[j - 1]
    for i in range(1, n):
        prev = r[i - 1]
        row = r[i]
        drow = d[i]
        row[0] = drow[0] + prev[0]
        for j in range(1, m):
            xa = -prev[j - 1] / gamma
            xb = -prev[j] / gamma
            xc = -row[j - 1] / gamma
            mx = xa
            if xb > mx:
                mx = xb
            if xc > mx:
                mx = xc
            s = exp(xa - mx) + exp(xb - mx) + exp(xc - mx)
            row[j] = drow[j] - gamma * (mx + log(s))
    return np.asarray(r, dtype=np.float64)


def softdtw_backward(D: np.ndarray, R: np.ndarray, gamma: float) -> np.ndarray:
    """Adjoint sweep: E[i, j] = d(cost)/d(D[i, j]).

    Each cell accumulates its successors' sensitivities weighted by the
    soft-min branch probabilities, recovered from the forward table as
    exp((R[succ] - D[succ] - R[i, j]) / gamma). Contributions are added
    in the fixed order vertical, horizontal, diagonal.
    """
    n, m = D.shape
    d = D.tolist()
    r = R.tolist()
    e = [[0.0] * m for _ in range(n)]
    e[n - 1][m - 1] = 1.0
    exp = math.exp
    for i in range(n - 1, -1, -1):
        erow = e[i]
        rrow = r[i]
        enext = e[i + 1] if i + 1 < n else None
        rnext = r[i + 1] if i + 1 < n else None
        dnext = d[i + 1] if i + 1 < n else None
        for j in range(m - 1, -1, -1):
            if i == n - 1 and j == m - 1:
                continue
            rij = rrow[j]
            acc = 0.0
            if enext is not None:
                acc += enext[j] * exp((rnext[j] - dnext[j] - rij) / gamma)
            if j + 1 < m:
                acc += erow[j + 1] * exp((rrow[j + 1] - d[i][j + 1] - rij) / gamma)
                if enext is not None:
                    acc += enext[j + 1] * exp((rnext[j + 1] - dnext[j + 1] - rij) / gamma)
            erow[j] = acc
    return np.asarray(e, dtype=np.float64)
