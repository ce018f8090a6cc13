"""Super-uniformity-preserving noisy p-value transform.

A raw p-value is mapped to the normal-quantile scale, perturbed with
calibrated noise, and mapped back through the CDF of quantile-plus-noise.
Because that CDF matches the distribution of the perturbed statistic
under a uniform p-value, a super-uniform input stays super-uniform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import RandomStream, normal_laplace_cdf, std_normal_cdf, std_normal_quantile
from .privacy import NoiseScales

__all__ = [
    "P_CLAMP",
    "NOISE_KINDS",
    "NoisyMatrix",
    "clamp_pvalues",
    "noisy_p_gaussian",
    "noisy_p_laplace",
    "noisy_row",
    "generate_noisy_matrix",
]

# Phi^-1 diverges at 0 and 1; real pipelines do produce exact 0/1 p-values.
P_CLAMP = 1e-15

NOISE_KINDS = ("gaussian", "laplace")

# keep matrix entries strictly inside (0,1) even when the CDF saturates
_ENTRY_LO = 1e-300
_ENTRY_HI = 1.0 - 1e-16


@dataclass(frozen=True)
class NoisyMatrix:
    """(1 + m_peel) x m noisy p-values: row 0 is the inference set, rows
    1..m_peel the peeling sets."""

    rows: np.ndarray
    sigma0: float
    sigma1: float
    noise_kind: str = "gaussian"

    @property
    def m(self) -> int:
        return self.rows.shape[1]

    @property
    def m_peel(self) -> int:
        return self.rows.shape[0] - 1


def clamp_pvalues(pvals) -> np.ndarray:
    """Clamp p-values into [P_CLAMP, 1 - P_CLAMP] as a float array."""
    return np.clip(np.asarray(pvals, dtype=float), P_CLAMP, 1.0 - P_CLAMP)


def noisy_p_gaussian(p, sigma, z):
    """Noisy p-value under Gaussian noise on the quantile scale.

    Computes Phi((Phi^-1(p) + z) / sqrt(1 + sigma^2)); for a uniform p and
    z ~ N(0, sigma^2) the output is exactly uniform. sigma = 0 with z = 0
    passes the (clamped) p-value through unchanged.
    """
    if sigma < 0.0:
        raise ValueError("sigma must be nonnegative")
    pc = clamp_pvalues(p)
    q = std_normal_quantile(pc)
    out = std_normal_cdf((q + z) / math.sqrt(1.0 + sigma * sigma))
    if sigma == 0.0:
        # exact passthrough rather than Phi(Phi^-1(p)) roundoff
        out = np.where(np.asarray(z, dtype=float) == 0.0, pc, out)[()]
    return out


def noisy_p_laplace(p, b, z):
    """Noisy p-value under Laplace noise on the quantile scale.

    Returns normal_laplace_cdf(Phi^-1(p) + z, b), the CDF of the perturbed
    statistic under a uniform p-value.
    """
    if b <= 0.0:
        raise ValueError("Laplace scale b must be positive")
    pc = clamp_pvalues(p)
    return normal_laplace_cdf(std_normal_quantile(pc) + z, b)


def _row_from_quantiles(q: np.ndarray, scale: float, stream: RandomStream,
                        noise_kind: str) -> np.ndarray:
    # scale > 0; one fresh generator per row keeps rows order-independent
    gen = stream.generator()
    if noise_kind == "gaussian":
        z = gen.normal(0.0, scale, q.size)
        row = std_normal_cdf((q + z) / math.sqrt(1.0 + scale * scale))
    else:
        z = gen.laplace(0.0, scale, q.size)
        row = normal_laplace_cdf(q + z, scale)
    return np.clip(row, _ENTRY_LO, _ENTRY_HI)


def noisy_row(pvals, scale: float, stream: RandomStream, noise_kind: str) -> np.ndarray:
    """One row of noisy p-values with i.i.d. noise drawn from `stream`.

    A zero scale short-circuits to the clamped raw p-values (the zero-noise
    transform is the identity), drawing nothing from the stream.
    """
    if noise_kind not in NOISE_KINDS:
        raise ValueError(f"unknown noise kind {noise_kind!r}")
    pc = clamp_pvalues(pvals)
    if scale == 0.0:
        return pc
    return _row_from_quantiles(std_normal_quantile(pc), scale, stream, noise_kind)


def generate_noisy_matrix(
    pvals,
    m_peel: int,
    scales: NoiseScales,
    stream: RandomStream,
    noise_kind: str = "gaussian",
) -> NoisyMatrix:
    """Generate the (1 + m_peel) x m matrix of noisy p-values.

    Row 0 uses scales.sigma0, rows 1..m_peel use scales.sigma1. Row k draws
    from stream.child(k), so rows are order-independent and a separate
    caller can regenerate any single row bit-identically.

    Args:
        pvals: raw p-values, nonempty.
        m_peel: number of peeling rows, >= 1.
        scales: noise scales from the privacy calibration.
        stream: root stream for this matrix.
        noise_kind: "gaussian" or "laplace".
    """
    p = np.asarray(pvals, dtype=float)
    if p.size == 0:
        raise ValueError("pvals must be nonempty")
    if m_peel < 1:
        raise ValueError("m_peel must be a positive integer")
    if noise_kind not in NOISE_KINDS:
        raise ValueError(f"unknown noise kind {noise_kind!r}")
    pc = clamp_pvalues(p)
    q = None
    rows = np.empty((1 + m_peel, p.size))
    for k in range(1 + m_peel):
        scale = scales.sigma0 if k == 0 else scales.sigma1
        if scale == 0.0:
            rows[k] = pc
            continue
        if q is None:
            q = std_normal_quantile(pc)
        rows[k] = _row_from_quantiles(q, scale, stream.child(k), noise_kind)
    return NoisyMatrix(rows, scales.sigma0, scales.sigma1, noise_kind)
