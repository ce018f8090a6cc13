"""Synthetic data generation, the replication engine, and the asymptotic
power-loss oracle for the private BH test.

Scenarios draw correlated normal test statistics, convert them to p-values
via p_j = Phi(T_j - theta_j), and run a configurable list of methods over
independent replicates. Metrics are averaged with Monte Carlo standard
errors and exported as CSV rows `method,metric,mean,stderr,reps`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize

from .adaptive import AdaptiveConfig, adaptive_sup_test
from .baselines import DworkParams, classic_procedure, dp_bh, dp_bonf
from .numerics import RandomStream, std_normal_cdf, std_normal_quantile
from .privacy import PrivacyBudget, experiment_mu
from .thresholds import TestConfig, sup_test, truncated_sup_test

__all__ = [
    "METHOD_NAMES",
    "METRIC_NAMES",
    "MethodSpec",
    "SimScenario",
    "LabeledPValues",
    "MetricsTable",
    "MixtureScenario",
    "TdpGapResult",
    "gen_pvalues",
    "run_method",
    "run_replications",
    "noise_inflation",
    "asymptotic_bh_threshold",
    "empirical_tdp_gap",
    "desk_scenario",
    "full_scenario",
]

METHOD_NAMES = (
    "bh", "by", "bonf", "holm",
    "sup-bh", "sup-by", "sup-bonf", "sup-holm",
    "asup-bh", "asup-bonf",
    "dp-bh", "dp-bonf",
)

METRIC_NAMES = ("fdr", "fwer", "power", "n_reject", "v_tau_frac")

NULL_MODES = ("uniform", "conservative")
DEPENDENCE_MODES = ("independent", "block")


@dataclass(frozen=True)
class MethodSpec:
    """A method to run in a scenario: registry name, display label, and
    per-method option overrides (eps, delta, mu, gs, m_peel, noise, ...)."""

    name: str
    label: Optional[str] = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in METHOD_NAMES:
            raise ValueError(f"unknown method {self.name!r}")
        if self.label is None:
            object.__setattr__(self, "label", self.name)


@dataclass(frozen=True)
class SimScenario:
    m: int
    m1: int
    methods: tuple
    theta_signal: float = 4.0
    null_mode: str = "uniform"
    dependence: str = "independent"
    block_size: int = 200
    block_rho: float = 0.6
    alpha: float = 0.1
    reps: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be a positive integer")
        if not 0 <= self.m1 <= self.m:
            raise ValueError("m1 must lie in [0, m]")
        if self.null_mode not in NULL_MODES:
            raise ValueError(f"unknown null_mode {self.null_mode!r}")
        if self.dependence not in DEPENDENCE_MODES:
            raise ValueError(f"unknown dependence {self.dependence!r}")
        if self.dependence == "block":
            if self.block_size < 1 or self.m % self.block_size != 0:
                raise ValueError("block_size must divide m")
            # the common-factor generator needs a nonnegative correlation
            if not 0.0 <= self.block_rho < 1.0:
                raise ValueError("block_rho must lie in [0, 1)")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0,1)")
        if self.reps < 1:
            raise ValueError("reps must be a positive integer")
        if not self.methods:
            raise ValueError("scenario configures no methods")
        labels = [s.label for s in self.methods]
        if len(set(labels)) != len(labels):
            raise ValueError("method labels must be unique")


@dataclass(frozen=True)
class LabeledPValues:
    pvals: np.ndarray
    is_signal: np.ndarray

    @property
    def n_signals(self) -> int:
        return int(np.count_nonzero(self.is_signal))


def gen_pvalues(scenario: SimScenario, stream: RandomStream) -> LabeledPValues:
    """Draw one replicate: correlated statistics, signal placement, and the
    p-values p_j = Phi(T_j - theta_j)."""
    g = stream.generator()
    m = scenario.m
    if scenario.dependence == "independent":
        t = g.standard_normal(m)
    else:
        bs, rho = scenario.block_size, scenario.block_rho
        shared = g.standard_normal(m // bs)
        t = math.sqrt(rho) * np.repeat(shared, bs) \
            + math.sqrt(1.0 - rho) * g.standard_normal(m)
    sig_idx = g.choice(m, size=scenario.m1, replace=False)
    is_signal = np.zeros(m, dtype=bool)
    is_signal[sig_idx] = True
    theta = np.zeros(m)
    theta[sig_idx] = scenario.theta_signal
    if scenario.null_mode == "conservative":
        null_idx = g.permutation(np.flatnonzero(~is_signal))
        n_zero = round(0.6 * null_idx.size)
        shifted = null_idx[n_zero:]
        theta[shifted] = g.uniform(-0.3, 0.0, size=shifted.size)
    pvals = std_normal_cdf(t - theta)
    return LabeledPValues(pvals, is_signal)


def _budget_from_options(options: dict) -> PrivacyBudget:
    if "mu" in options:
        return PrivacyBudget.gdp(float(options["mu"]))
    eps = float(options.get("eps", 0.5))
    delta = float(options.get("delta", 1e-3))
    return PrivacyBudget.approx_dp(eps, delta)


def _sup_config(family: str, alpha: float, options: dict) -> TestConfig:
    sigma_override = None
    if "sigma0" in options or "sigma1" in options:
        s0 = float(options.get("sigma0", 0.0))
        s1 = float(options.get("sigma1", 2.0 * s0))
        sigma_override = (s0, s1)
    zeta = int(options["zeta"]) if "zeta" in options else None
    return TestConfig(
        family=family,
        alpha=alpha,
        budget=_budget_from_options(options),
        gs=float(options.get("gs", 1e-4)),
        m_peel=int(options.get("m_peel", 200)),
        zeta=zeta,
        noise_kind=str(options.get("noise", "gaussian")),
        sigma_override=sigma_override,
    )


def _adaptive_config(options: dict) -> AdaptiveConfig:
    return AdaptiveConfig(
        tau=float(options.get("tau", 0.5)),
        c=float(options["c"]) if "c" in options else None,
        m_tilde=int(options.get("m_tilde", 100)),
        c0=float(options.get("c0", 0.5)),
        rho=float(options.get("rho", 0.1)),
    )


def _dwork_params(alpha: float, m: int, options: dict) -> DworkParams:
    scale = options.get("laplace_scale")
    return DworkParams(
        eta=float(options.get("eta", 1e-4)),
        nu=float(options.get("nu", 0.5 * alpha / m)),
        eps=float(options.get("eps", 0.5)),
        delta=float(options.get("delta", 1e-3)),
        m_peel=int(options.get("m_peel", 200)),
        laplace_scale=float(scale) if scale is not None else None,
    )


def run_method(spec: MethodSpec, pvals, alpha: float, stream: RandomStream) -> np.ndarray:
    """Run one registered method, returning sorted rejected indices."""
    name, opts = spec.name, spec.options
    p = np.asarray(pvals, dtype=float)
    if name in ("bh", "by", "bonf", "holm"):
        return classic_procedure(p, name, alpha)
    if name.startswith("sup-"):
        cfg = _sup_config(name[4:], alpha, opts)
        return sup_test(p, cfg, stream).rejected_indices
    if name.startswith("asup-"):
        cfg = _sup_config(name[5:], alpha, opts)
        return adaptive_sup_test(p, cfg, _adaptive_config(opts), stream).rejected_indices
    params = _dwork_params(alpha, p.size, opts)
    if name == "dp-bh":
        return dp_bh(p, params, alpha, stream)
    return dp_bonf(p, params, alpha, stream)


def _metrics(rejected: np.ndarray, data: LabeledPValues, tau: float) -> dict:
    r = rejected.size
    false_mask = ~data.is_signal[rejected]
    v = int(np.count_nonzero(false_mask))
    s = r - v
    m1 = data.n_signals
    v_tau = int(np.count_nonzero(false_mask & (data.pvals[rejected] > tau)))
    denom = max(r, 1)
    return {
        "fdr": v / denom,
        "fwer": 1.0 if v > 0 else 0.0,
        "power": s / max(m1, 1),
        "n_reject": float(r),
        "v_tau_frac": v_tau / denom,
    }


@dataclass(frozen=True)
class MetricsTable:
    """Per-method metric means and Monte Carlo standard errors."""

    labels: tuple
    reps: int
    table: dict  # (label, metric) -> (mean, stderr)

    def mean(self, label: str, metric: str) -> float:
        return self.table[(label, metric)][0]

    def stderr(self, label: str, metric: str) -> float:
        return self.table[(label, metric)][1]

    def to_csv(self) -> str:
        lines = ["method,metric,mean,stderr,reps"]
        for label in self.labels:
            for metric in METRIC_NAMES:
                mean, se = self.table[(label, metric)]
                lines.append(f"{label},{metric},{float(mean)!r},{float(se)!r},{self.reps}")
        return "\n".join(lines) + "\n"


def run_replications(scenario: SimScenario) -> MetricsTable:
    """Run every configured method over scenario.reps fresh replicates.

    Replicate r uses RandomStream(seed, r); the data and each method draw
    from disjoint sub-streams, so the aggregate does not depend on
    execution order.
    """
    reps = scenario.reps
    acc = {s.label: {k: np.empty(reps) for k in METRIC_NAMES} for s in scenario.methods}
    for rep in range(reps):
        root = RandomStream(scenario.seed, rep)
        data = gen_pvalues(scenario, root.child(0))
        for mi, spec in enumerate(scenario.methods):
            rejected = run_method(spec, data.pvals, scenario.alpha, root.child(1 + mi))
            tau = float(spec.options.get("tau", 0.5))
            for k, val in _metrics(rejected, data, tau).items():
                acc[spec.label][k][rep] = val
    table = {}
    for label, per_metric in acc.items():
        for k, vals in per_metric.items():
            mean = float(np.mean(vals))
            se = float(np.std(vals, ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
            table[(label, k)] = (mean, se)
    return MetricsTable(tuple(s.label for s in scenario.methods), reps, table)


def noise_inflation(m_peel: int, gs: float, mu: float) -> float:
    """Variance inflation 2 m' gs^2 / mu^2 of the inference row noise."""
    if m_peel < 1 or gs < 0.0 or mu <= 0.0:
        raise ValueError("need m_peel >= 1, gs >= 0, mu > 0")
    return 2.0 * m_peel * gs * gs / (mu * mu)


def asymptotic_bh_threshold(
    omega1: float, alpha: float, signal: float, noise_inflation: float = 0.0
) -> tuple:
    """Limiting BH threshold and power under the two-group mixture.

    Solves F1(p) = beta p for the largest positive root, where
    F1(p) = Phi(Phi^{-1}(p) + s_eff), s_eff = |signal|/sqrt(1+inflation),
    beta = (1 - alpha (1-omega1)) / (alpha omega1).

    Returns:
        (lambda_star, tdp_limit) with tdp_limit = F1(lambda_star).

    Raises:
        ValueError if beta <= 1 (degenerate all-rejected regime) or no
        positive root exists.
    """
    if not 0.0 < omega1 < 1.0:
        raise ValueError("omega1 must lie in (0,1)")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0,1)")
    if signal == 0.0:
        raise ValueError("signal magnitude must be nonzero")
    if noise_inflation < 0.0:
        raise ValueError("noise_inflation must be nonnegative")
    beta = (1.0 - alpha * (1.0 - omega1)) / (alpha * omega1)
    if beta <= 1.0:
        raise ValueError("beta <= 1: the threshold equation has no positive root")
    s_eff = abs(signal) / math.sqrt(1.0 + noise_inflation)

    def f1(p):
        return std_normal_cdf(std_normal_quantile(p) + s_eff)

    def g(p):
        return f1(p) - beta * p

    # g is concave with g(0)=0 and g(1)=1-beta<0, so the unique positive
    # root is bracketed by the first halving point where g turns positive
    hi = 1.0 - 1e-12
    lo = None
    for k in range(1, 80):
        cand = 2.0 ** -k
        if g(cand) > 0.0:
            lo = cand
            break
        hi = cand
    if lo is None:
        raise ValueError("no positive root found for the threshold equation")
    lam = float(optimize.brentq(g, lo, hi, xtol=1e-16, rtol=8.9e-16))
    return lam, float(f1(lam))


@dataclass(frozen=True)
class MixtureScenario:
    """Two-group mixture used by the asymptotic power-loss experiments.

    m_peel = None calibrates the noise for a full release (m' = m), the
    regime the truncated test actually operates in.
    """

    m: int = 100_000
    omega1: float = 0.1
    alpha: float = 0.2
    signal: float = 2.0
    gs: float = 1e-4
    mu: Optional[float] = None
    m_peel: Optional[int] = None
    sigma_override: Optional[tuple] = None

    def resolved_mu(self) -> float:
        return experiment_mu(0.5, 1e-3) if self.mu is None else self.mu

    def resolved_m_peel(self) -> int:
        return self.m if self.m_peel is None else self.m_peel


@dataclass(frozen=True)
class TdpGapResult:
    gap: float
    tdp_classic: float
    tdp_noisy: float
    n_signals: int


def empirical_tdp_gap(scn: MixtureScenario, stream: RandomStream) -> TdpGapResult:
    """One-replicate true-discovery-proportion gap between classic BH and
    the truncated private test on the same mixture draw.

    Signals are Bernoulli(omega1); zero drawn signals returns a zero gap
    with n_signals = 0.
    """
    g = stream.child(0).generator()
    is_signal = g.random(scn.m) < scn.omega1
    t = g.standard_normal(scn.m)
    pvals = std_normal_cdf(t - scn.signal * is_signal)
    n_sig = int(np.count_nonzero(is_signal))
    if n_sig == 0:
        return TdpGapResult(0.0, 0.0, 0.0, 0)

    classic = classic_procedure(pvals, "bh", scn.alpha)
    tdp_classic = np.count_nonzero(is_signal[classic]) / n_sig

    cfg = TestConfig(
        family="bh",
        alpha=scn.alpha,
        budget=PrivacyBudget.gdp(scn.resolved_mu()),
        gs=scn.gs,
        m_peel=scn.resolved_m_peel(),
        sigma_override=scn.sigma_override,
    )
    noisy = truncated_sup_test(pvals, cfg, stream.child(1))
    tdp_noisy = np.count_nonzero(is_signal[noisy.rejected_indices]) / n_sig
    return TdpGapResult(float(tdp_classic - tdp_noisy),
                        float(tdp_classic), float(tdp_noisy), n_sig)


def _default_methods() -> tuple:
    return (
        MethodSpec("bh"),
        MethodSpec("sup-bh"),
        MethodSpec("sup-by"),
        MethodSpec("sup-bonf"),
        MethodSpec("sup-holm"),
        MethodSpec("asup-bh"),
        MethodSpec("dp-bh"),
        MethodSpec("dp-bonf"),
    )


def desk_scenario(**overrides) -> SimScenario:
    """Moderate-scale default scenario (m = 5000, m1 = 50, 200 reps)."""
    base = dict(m=5000, m1=50, methods=_default_methods(),
                theta_signal=4.0, alpha=0.1, reps=200, seed=0)
    base.update(overrides)
    return SimScenario(**base)


def full_scenario(**overrides) -> SimScenario:
    """Full-scale scenario (m = 20000, m1 = 100, 200 reps); slow."""
    base = dict(m=20000, m1=100, methods=_default_methods(),
                theta_signal=4.0, alpha=0.1, reps=200, seed=0)
    base.update(overrides)
    return SimScenario(**base)
