"""Threshold families, step selection, and the peeled/truncated tests.

Four threshold families are supported, always indexed against the full
hypothesis count m even when only m_peel values are tested:

    bh    lambda_j = alpha * j / m          (step-up)
    by    lambda_j = alpha * j / (m * H_m)  (step-up, H_m harmonic sum)
    bonf  lambda_j = alpha / m              (step-up; identical either way)
    holm  lambda_j = alpha / (m + 1 - j)    (step-down)

An optional pi0_inv_scale >= 1 multiplies every threshold; the adaptive
variants set it to 1/pi0_hat.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .numerics import RandomStream
from .peeling import PeelOutcome, reversed_peel
from .privacy import (
    NoiseScales,
    PrivacyBudget,
    calibrate_laplace_scales,
    calibrate_peeling_scales,
    experiment_mu,
)
from .transform import NoisyMatrix, generate_noisy_matrix, noisy_row

__all__ = [
    "FAMILIES",
    "DEFAULT_ZETA",
    "ThresholdFamily",
    "TestConfig",
    "AdaptiveInfo",
    "RejectionResult",
    "threshold_value",
    "threshold_values",
    "select_step",
    "reject_from_matrix",
    "reject_truncated",
    "sup_test",
    "truncated_sup_test",
    "resolve_scales",
    "budget_as_mu",
]

FAMILIES = ("bh", "by", "bonf", "holm")

# step parameter per family: 1 = step-up, 0 = step-down
DEFAULT_ZETA = {"bh": 1, "by": 1, "bonf": 1, "holm": 0}


@dataclass(frozen=True)
class ThresholdFamily:
    kind: str
    alpha: float
    m: int
    pi0_inv_scale: float = 1.0

    def __post_init__(self):
        if self.kind not in FAMILIES:
            raise ValueError(f"unknown threshold family {self.kind!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0,1)")
        if self.m < 1:
            raise ValueError("m must be a positive integer")
        if self.pi0_inv_scale < 1.0:
            raise ValueError("pi0_inv_scale must be >= 1")


@dataclass(frozen=True)
class TestConfig:
    """Configuration of a single private test run.

    sigma_override replaces the calibrated (sigma0, sigma1) pair, which is
    only meant for analysis and reduction checks; it also silences the
    estimator noise in adaptive runs.
    """

    family: str
    alpha: float = 0.1
    budget: PrivacyBudget = PrivacyBudget.gdp(1.0)
    gs: float = 1e-4
    m_peel: int = 200
    zeta: Optional[int] = None
    noise_kind: str = "gaussian"
    seed: int = 0
    sigma_override: Optional[tuple] = None

    def resolved_zeta(self) -> int:
        return DEFAULT_ZETA[self.family] if self.zeta is None else self.zeta


@dataclass(frozen=True)
class AdaptiveInfo:
    """Diagnostics attached to adaptive runs."""

    pi0_hat: float
    m_star: int
    pi0_inv_bar: float
    sigma_tau: float


@dataclass(frozen=True)
class RejectionResult:
    peeled: PeelOutcome
    j_star: int
    rejected_indices: np.ndarray
    thresholds_used: np.ndarray
    adaptive_info: Optional[AdaptiveInfo] = None


def _harmonic(m: int) -> float:
    return float(np.sum(1.0 / np.arange(1, m + 1)))


def threshold_values(family: ThresholdFamily, j) -> np.ndarray:
    """Thresholds at (1-based) indices j, scaled by pi0_inv_scale."""
    j = np.asarray(j)
    if j.size and (j.min() < 1 or j.max() > family.m):
        raise ValueError("threshold index out of range [1, m]")
    a, m = family.alpha, family.m
    if family.kind == "bh":
        lam = a * j / m
    elif family.kind == "by":
        lam = a * j / (m * _harmonic(m))
    elif family.kind == "bonf":
        lam = np.full(j.shape, a / m)
    else:  # holm
        lam = a / (m + 1 - j)
    return lam * family.pi0_inv_scale


def threshold_value(family: ThresholdFamily, j: int) -> float:
    """Threshold lambda_j for a single index j in [1, m]."""
    return float(threshold_values(family, np.asarray([j]))[0])


def select_step(sorted_pvals, family: ThresholdFamily, zeta: int) -> int:
    """Pick j_star from sorted values against the family thresholds.

    zeta = 1 (step-up): largest j with p_(j) <= lambda_j, else 0.
    zeta = 0 (step-down): one less than the first violation; the full
    length if nothing violates; 0 if the first entry already does.
    j_star = 0 encodes the empty rejection set.
    """
    s = np.asarray(sorted_pvals, dtype=float)
    if s.size > 1 and np.any(np.diff(s) < 0.0):
        raise ValueError("input must be sorted nondecreasing")
    if zeta not in (0, 1):
        raise ValueError("zeta must be 0 or 1")
    if s.size == 0:
        return 0
    lam = threshold_values(family, np.arange(1, s.size + 1))
    ok = s <= lam
    if zeta == 1:
        hits = np.flatnonzero(ok)
        return int(hits[-1] + 1) if hits.size else 0
    violations = np.flatnonzero(~ok)
    return int(violations[0]) if violations.size else int(s.size)


def reject_from_matrix(matrix: NoisyMatrix, family: ThresholdFamily, zeta: int) -> RejectionResult:
    """Peel the matrix, sort the peeled inference values, select, reject."""
    peel = reversed_peel(matrix)
    order = np.argsort(peel.inference_pvals, kind="stable")
    j_star = select_step(peel.inference_pvals[order], family, zeta)
    rejected = np.sort(peel.peeled_indices[order[:j_star]])
    lam = threshold_values(family, np.arange(1, peel.peeled_indices.size + 1))
    return RejectionResult(peel, j_star, rejected, lam)


def reject_truncated(row0, family: ThresholdFamily, zeta: int) -> RejectionResult:
    """Selection over all m inference values, skipping the peeling step."""
    row0 = np.asarray(row0, dtype=float)
    order = np.argsort(row0, kind="stable")
    j_star = select_step(row0[order], family, zeta)
    rejected = np.sort(order[:j_star])
    lam = threshold_values(family, np.arange(1, row0.size + 1))
    peel = PeelOutcome(np.arange(row0.size), row0)
    return RejectionResult(peel, j_star, rejected, lam)


def budget_as_mu(budget: PrivacyBudget) -> float:
    """GDP parameter of a budget; approximate-DP budgets are mapped through
    the experiment convention mu = 4*eps/sqrt(10*ln(1/delta))."""
    if budget.kind == "gdp":
        return budget.mu
    return experiment_mu(budget.eps, budget.delta)


def resolve_scales(config: TestConfig, m_peel: int) -> NoiseScales:
    """Noise scales implied by the config for a given peeling count."""
    if config.sigma_override is not None:
        s0, s1 = config.sigma_override
        return NoiseScales(float(s0), float(s1))
    if config.noise_kind == "gaussian":
        return calibrate_peeling_scales(budget_as_mu(config.budget), config.gs, m_peel)
    if config.budget.kind != "approx_dp":
        raise ValueError("laplace noise requires an (eps, delta) budget")
    return calibrate_laplace_scales(
        config.budget.eps, config.budget.delta, config.gs, m_peel
    )


def _check_m_peel(m_peel: int, m: int):
    if m_peel < 1:
        raise ValueError("m_peel must be a positive integer")
    if m_peel > m:
        raise ValueError("m_peel cannot exceed the number of hypotheses")


def sup_test(pvals, config: TestConfig, stream: Optional[RandomStream] = None) -> RejectionResult:
    """Full private test: calibrate, generate the noisy matrix, peel, select.

    Args:
        pvals: raw p-values.
        config: test configuration; config.m_peel rows are peeled.
        stream: randomness source; defaults to RandomStream(config.seed).

    Returns:
        RejectionResult with the peel outcome, j_star, and the rejected
        hypothesis indices (0-based positions into pvals).
    """
    p = np.asarray(pvals, dtype=float)
    _check_m_peel(config.m_peel, p.size)
    scales = resolve_scales(config, config.m_peel)
    if stream is None:
        stream = RandomStream(config.seed)
    matrix = generate_noisy_matrix(p, config.m_peel, scales, stream, config.noise_kind)
    family = ThresholdFamily(config.family, config.alpha, p.size)
    return reject_from_matrix(matrix, family, config.resolved_zeta())


def truncated_sup_test(
    pvals, config: TestConfig, stream: Optional[RandomStream] = None
) -> RejectionResult:
    """No-peeling variant: only the inference row is generated and all m
    noisy values enter selection. Analysis tool only; releasing all m
    values carries no privacy guarantee under the peeling calibration.

    Row 0 is drawn from stream.child(0) exactly as sup_test does, so a
    shared stream yields a shared inference row.
    """
    p = np.asarray(pvals, dtype=float)
    _check_m_peel(config.m_peel, p.size)
    scales = resolve_scales(config, config.m_peel)
    if stream is None:
        stream = RandomStream(config.seed)
    row0 = noisy_row(p, scales.sigma0, stream.child(0), config.noise_kind)
    family = ThresholdFamily(config.family, config.alpha, p.size)
    return reject_truncated(row0, family, config.resolved_zeta())


def with_adaptive_info(result: RejectionResult, info: AdaptiveInfo) -> RejectionResult:
    return replace(result, adaptive_info=info)
