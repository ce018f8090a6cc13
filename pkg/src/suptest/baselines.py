"""Non-private textbook procedures and the log-scale private comparators.

classic_procedure is an independent implementation of BH, BY, Bonferroni
and Holm on raw p-values; it doubles as the zero-noise reference for the
private tests and is deliberately not routed through the threshold module.

dp_bh and dp_bonf forward-peel noisy log p-values and compare them against
log thresholds deflated by a privacy penalty:

    dp_bh   log(alpha j / m) - eta sqrt(10 m' ln(1/delta) ln(6 m'/alpha)) / eps
    dp_bonf log(alpha / m)   - eta sqrt(10 m  ln(1/delta) ln(5 m /alpha)) / (2 eps)

theorem8_check evaluates the sufficient condition under which the
Gaussian-free (Laplace) peeling test dominates these comparators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .numerics import RandomStream
from .peeling import forward_peel_baseline

__all__ = [
    "DworkParams",
    "classic_procedure",
    "dp_bh",
    "dp_bonf",
    "dp_bh_penalty",
    "dp_bonf_penalty",
    "dp_bh_scale",
    "dp_bonf_scale",
    "theorem8_check",
]


@dataclass(frozen=True)
class DworkParams:
    """Parameters of the log-scale comparators.

    laplace_scale = None uses the calibrated default for the variant.
    nu floors raw p-values before logs are taken.
    """

    eta: float
    nu: float
    eps: float
    delta: float
    m_peel: int
    laplace_scale: Optional[float] = None

    def __post_init__(self):
        if self.eta <= 0.0:
            raise ValueError("eta must be positive")
        if not 0.0 < self.nu < 1.0:
            raise ValueError("nu must lie in (0,1)")
        if self.eps <= 0.0:
            raise ValueError("eps must be positive")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0,1)")
        if self.m_peel < 1:
            raise ValueError("m_peel must be a positive integer")
        if self.laplace_scale is not None and self.laplace_scale < 0.0:
            raise ValueError("laplace_scale must be nonnegative")


def classic_procedure(pvals, family: str, alpha: float) -> np.ndarray:
    """Textbook multiple-testing procedure; returns sorted rejected indices.

    bh / by are step-up, bonf is a plain cutoff, holm is step-down.
    """
    p = np.asarray(pvals, dtype=float)
    fam = family.lower()
    if fam not in ("bh", "by", "bonf", "holm"):
        raise ValueError(f"unknown family {family!r}")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0,1)")
    m = p.size
    if m == 0:
        return np.empty(0, dtype=np.intp)
    if fam == "bonf":
        return np.flatnonzero(p <= alpha / m).astype(np.intp)
    order = np.argsort(p, kind="stable")
    s = p[order]
    j = np.arange(1, m + 1)
    if fam in ("bh", "by"):
        lam = alpha * j / m
        if fam == "by":
            lam /= np.sum(1.0 / j)
        hits = np.flatnonzero(s <= lam)
        k = hits[-1] + 1 if hits.size else 0
    else:  # holm
        bad = np.flatnonzero(s > alpha / (m - j + 1))
        k = bad[0] if bad.size else m
    return np.sort(order[:k]).astype(np.intp)


def dp_bh_penalty(params: DworkParams, alpha: float) -> float:
    mp = params.m_peel
    return params.eta * math.sqrt(
        10.0 * mp * math.log(1.0 / params.delta) * math.log(6.0 * mp / alpha)
    ) / params.eps


def dp_bonf_penalty(params: DworkParams, alpha: float, m: int) -> float:
    return params.eta * math.sqrt(
        10.0 * m * math.log(1.0 / params.delta) * math.log(5.0 * m / alpha)
    ) / (2.0 * params.eps)


def dp_bh_scale(params: DworkParams) -> float:
    return params.eta * math.sqrt(
        10.0 * params.m_peel * math.log(1.0 / params.delta)
    ) / params.eps


def dp_bonf_scale(params: DworkParams, m: int) -> float:
    return params.eta * math.sqrt(
        10.0 * m * math.log(1.0 / params.delta)
    ) / (2.0 * params.eps)


def _floored_logs(pvals, nu: float) -> np.ndarray:
    p = np.asarray(pvals, dtype=float)
    if p.size == 0:
        raise ValueError("p-value array is empty")
    return np.log(np.maximum(p, nu))


def dp_bh(
    pvals,
    params: DworkParams,
    alpha: float,
    stream: RandomStream,
    penalty: Optional[float] = None,
) -> np.ndarray:
    """Private BH comparator: forward-peel params.m_peel noisy log
    p-values, then step-up against log(alpha j / m) minus the penalty.

    Returns sorted rejected indices. penalty overrides the calibrated
    value (used by reduction checks)."""
    logs = _floored_logs(pvals, params.nu)
    m = logs.size
    if params.m_peel > m:
        raise ValueError("m_peel cannot exceed the number of hypotheses")
    scale = params.laplace_scale
    if scale is None:
        scale = dp_bh_scale(params)
    if penalty is None:
        penalty = dp_bh_penalty(params, alpha)
    picked, values = forward_peel_baseline(logs, params.m_peel, scale, stream)
    order = np.argsort(values, kind="stable")
    thr = np.log(alpha * np.arange(1, params.m_peel + 1) / m) - penalty
    hits = np.flatnonzero(values[order] <= thr)
    k = hits[-1] + 1 if hits.size else 0
    return np.sort(picked[order[:k]])


def dp_bonf(
    pvals,
    params: DworkParams,
    alpha: float,
    stream: RandomStream,
    penalty: Optional[float] = None,
) -> np.ndarray:
    """Private Bonferroni comparator: m forward-peeling rounds, constant
    threshold log(alpha / m) minus the penalty. Returns sorted indices."""
    logs = _floored_logs(pvals, params.nu)
    m = logs.size
    scale = params.laplace_scale
    if scale is None:
        scale = dp_bonf_scale(params, m)
    if penalty is None:
        penalty = dp_bonf_penalty(params, alpha, m)
    picked, values = forward_peel_baseline(logs, m, scale, stream)
    thr = math.log(alpha / m) - penalty
    return np.sort(picked[values <= thr])


def theorem8_check(params: DworkParams, alpha: float, m: int, variant: str) -> bool:
    """Sufficient-dominance condition of the Laplace peeling test over the
    corresponding log-scale comparator."""
    v = variant.lower()
    if v == "bh":
        lhs = params.eta * math.sqrt(
            10.0 * params.m_peel * math.log(1.0 / params.delta)
        ) / params.eps
        rhs = 1.0 - 1.0 / math.log(6.0 * params.m_peel / alpha)
    elif v == "bonf":
        lhs = 0.5 * params.eta * math.sqrt(
            10.0 * m * math.log(1.0 / params.delta)
        ) / params.eps
        rhs = 1.0 - 1.0 / math.log(5.0 * m / alpha)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return lhs <= rhs
