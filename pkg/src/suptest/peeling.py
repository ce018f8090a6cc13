"""Reversed peeling and the forward-peeling baseline.

Reversed peeling consumes a pre-generated noisy matrix: round k removes
the index minimizing peeling row k over the surviving set, and the
inference row (row 0) is only ever read at the peeled indices. The
forward baseline instead adds fresh noise each round, as the classic
private BH pipeline does.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import RandomStream
from .transform import NoisyMatrix

__all__ = ["PeelOutcome", "reversed_peel", "forward_peel_baseline"]


@dataclass(frozen=True)
class PeelOutcome:
    """Peeled indices in peel order plus their inference-row values.

    inference_pvals[k] is row 0 of the matrix at column peeled_indices[k];
    the order is the peel order, not sorted.
    """

    peeled_indices: np.ndarray
    inference_pvals: np.ndarray


def reversed_peel(matrix: NoisyMatrix) -> PeelOutcome:
    """Run the peeling rounds over the matrix's peeling rows.

    Round k (k = 1..m_peel) selects argmin of row k over the indices not
    yet peeled; ties break toward the smallest index. Returns the peel
    order together with the row-0 values at those indices.
    """
    rows = matrix.rows
    m_peel, m = matrix.m_peel, matrix.m
    if m_peel < 1:
        raise ValueError("matrix must contain at least one peeling row")
    if m_peel > m:
        raise ValueError("cannot peel more indices than hypotheses")
    alive = np.ones(m, dtype=bool)
    order = np.empty(m_peel, dtype=np.intp)
    for k in range(1, m_peel + 1):
        # argmin returns the first minimizer, i.e. the smallest index
        j = int(np.argmin(np.where(alive, rows[k], np.inf)))
        order[k - 1] = j
        alive[j] = False
    return PeelOutcome(order, rows[0, order])


def forward_peel_baseline(
    log_pvals,
    m_peel: int,
    laplace_scale: float,
    stream: RandomStream,
) -> tuple:
    """Forward peeling on the log scale with fresh noise every round.

    Each round adds i.i.d. Laplace(laplace_scale) noise to the logs of the
    surviving p-values, peels the minimizer (ties toward the smallest
    index), and records its noisy value.

    Returns:
        (indices, noisy_values): both length m_peel, in peel order.
    """
    if laplace_scale < 0.0:
        raise ValueError("laplace_scale must be nonnegative")
    work = np.asarray(log_pvals, dtype=float).copy()
    m = work.size
    if m_peel < 1 or m_peel > m:
        raise ValueError("m_peel must lie in [1, len(log_pvals)]")
    gen = stream.generator()
    remaining = np.arange(m)
    picked = np.empty(m_peel, dtype=np.intp)
    values = np.empty(m_peel)
    for k in range(m_peel):
        noisy = work + gen.laplace(0.0, laplace_scale, work.size)
        pos = int(np.argmin(noisy))
        picked[k] = remaining[pos]
        values[k] = noisy[pos]
        remaining = np.delete(remaining, pos)
        work = np.delete(work, pos)
    return picked, values
