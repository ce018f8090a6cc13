import numpy as np
import pytest

from suptest.baselines import classic_procedure
from suptest.numerics import RandomStream
from suptest.privacy import PrivacyBudget
from suptest.thresholds import (
    TestConfig,
    ThresholdFamily,
    resolve_scales,
    select_step,
    sup_test,
    threshold_value,
    threshold_values,
    truncated_sup_test,
)


def test_threshold_values_bh():
    fam = ThresholdFamily("bh", 0.05, 10)
    lam = threshold_values(fam, np.arange(1, 11))
    assert np.allclose(lam, 0.05 * np.arange(1, 11) / 10)
    assert threshold_value(fam, 10) == pytest.approx(0.05)


def test_threshold_values_by_harmonic():
    fam = ThresholdFamily("by", 0.05, 4)
    h4 = 1 + 0.5 + 1 / 3 + 0.25
    assert threshold_value(fam, 2) == pytest.approx(0.05 * 2 / (4 * h4))
    # worked example: m = 3, alpha = 0.12, j = 2 -> 0.12*2/(3*(11/6)) = 0.24/5.5
    fam3 = ThresholdFamily("by", 0.12, 3)
    assert threshold_value(fam3, 2) == pytest.approx(0.24 / 5.5)


def test_threshold_values_bonf_and_holm():
    bonf = ThresholdFamily("bonf", 0.1, 20)
    assert np.allclose(threshold_values(bonf, [1, 7, 20]), 0.1 / 20)
    holm = ThresholdFamily("holm", 0.1, 20)
    assert threshold_value(holm, 1) == pytest.approx(0.1 / 20)
    assert threshold_value(holm, 20) == pytest.approx(0.1)
    assert threshold_value(holm, 5) == pytest.approx(0.1 / 16)


def test_threshold_pi0_scaling():
    plain = ThresholdFamily("bh", 0.1, 50)
    scaled = ThresholdFamily("bh", 0.1, 50, pi0_inv_scale=2.0)
    j = np.arange(1, 51)
    assert np.allclose(threshold_values(scaled, j), 2 * threshold_values(plain, j))


def test_threshold_family_validation():
    with pytest.raises(ValueError):
        ThresholdFamily("bhh", 0.1, 10)
    with pytest.raises(ValueError):
        ThresholdFamily("bh", 0.0, 10)
    with pytest.raises(ValueError):
        ThresholdFamily("bh", 0.1, 0)
    with pytest.raises(ValueError):
        ThresholdFamily("bh", 0.1, 10, pi0_inv_scale=0.5)
    with pytest.raises(ValueError):
        threshold_values(ThresholdFamily("bh", 0.1, 10), [0])


def test_select_step_up():
    fam = ThresholdFamily("bh", 0.5, 4)  # thresholds .125 .25 .375 .5
    assert select_step(np.array([0.10, 0.30, 0.35, 0.9]), fam, 1) == 3
    assert select_step(np.array([0.12, 0.25, 0.4, 0.6]), fam, 1) == 2
    assert select_step(np.array([0.9, 0.95, 0.99, 1.0]), fam, 1) == 0
    assert select_step(np.array([0.1, 0.2, 0.3, 0.5]), fam, 1) == 4


def test_select_step_down():
    fam = ThresholdFamily("holm", 0.4, 4)  # thresholds .1 .1333 .2 .4
    assert select_step(np.array([0.05, 0.2, 0.21, 0.9]), fam, 0) == 1
    assert select_step(np.array([0.2, 0.3, 0.4, 0.9]), fam, 0) == 0
    assert select_step(np.array([0.01, 0.02, 0.03, 0.04]), fam, 0) == 4
    # truncated list: no violation among the first two -> both kept
    assert select_step(np.array([0.05, 0.12]), fam, 0) == 2


def test_select_step_validates_input():
    fam = ThresholdFamily("bh", 0.1, 5)
    with pytest.raises(ValueError):
        select_step(np.array([0.3, 0.2]), fam, 1)
    with pytest.raises(ValueError):
        select_step(np.array([0.1, 0.2]), fam, 2)
    assert select_step(np.array([]), fam, 1) == 0


def test_step_up_vs_step_down_on_same_family():
    # step-up can jump a local violation, step-down stops at it
    fam = ThresholdFamily("bh", 0.8, 4)  # thresholds .2 .4 .6 .8
    s = np.array([0.3, 0.35, 0.5, 0.7])
    assert select_step(s, fam, 1) == 4
    assert select_step(s, fam, 0) == 0


def test_sup_test_deterministic_and_reproducible():
    g = np.random.default_rng(12)
    p = g.uniform(size=400)
    p[:20] = g.uniform(size=20) * 1e-5
    cfg = TestConfig(family="bh", alpha=0.2, budget=PrivacyBudget.gdp(0.5), m_peel=50)
    a = sup_test(p, cfg, RandomStream(1))
    b = sup_test(p, cfg, RandomStream(1))
    assert np.array_equal(a.rejected_indices, b.rejected_indices)
    assert a.j_star == b.j_star
    c = sup_test(p, cfg, RandomStream(2))
    assert a.j_star >= 0 and c.j_star >= 0
    # default stream comes from config.seed
    d = sup_test(p, cfg)
    e = sup_test(p, TestConfig(family="bh", alpha=0.2,
                               budget=PrivacyBudget.gdp(0.5), m_peel=50, seed=0))
    assert np.array_equal(d.rejected_indices, e.rejected_indices)


def test_sup_test_rejections_subset_of_peeled():
    g = np.random.default_rng(5)
    p = g.uniform(size=300)
    p[:15] *= 1e-4
    cfg = TestConfig(family="bh", alpha=0.1, budget=PrivacyBudget.gdp(0.3), m_peel=40)
    res = sup_test(p, cfg, RandomStream(7))
    assert set(res.rejected_indices) <= set(res.peeled.peeled_indices)
    assert res.j_star == res.rejected_indices.size
    assert np.all(np.diff(res.rejected_indices) > 0)


def test_zero_noise_override_reproduces_classic():
    g = np.random.default_rng(33)
    p = g.uniform(size=200)
    p[:10] *= 1e-4
    for family in ("bh", "by", "bonf", "holm"):
        cfg = TestConfig(family=family, alpha=0.1, m_peel=200,
                         sigma_override=(0.0, 0.0))
        res = sup_test(p, cfg)
        ref = classic_procedure(p, family, 0.1)
        assert np.array_equal(res.rejected_indices, ref), family


def test_truncated_shares_inference_row():
    g = np.random.default_rng(8)
    p = g.uniform(size=250)
    p[:12] *= 1e-5
    cfg = TestConfig(family="bh", alpha=0.15, budget=PrivacyBudget.gdp(0.4), m_peel=30)
    s = RandomStream(21)
    full = sup_test(p, cfg, s)
    trunc = truncated_sup_test(p, cfg, s)
    # identical row 0 noise: the peeled inference values reappear verbatim
    peeled = dict(zip(full.peeled.peeled_indices.tolist(),
                      full.peeled.inference_pvals.tolist()))
    trunc_vals = dict(zip(trunc.peeled.peeled_indices.tolist(),
                          trunc.peeled.inference_pvals.tolist()))
    for idx, val in peeled.items():
        assert trunc_vals[idx] == val
    assert set(full.rejected_indices) <= set(trunc.rejected_indices)


def test_zeta_override_changes_rule():
    # step-up jumps the first violation, step-down stops immediately
    p = np.array([0.25, 0.3, 0.5, 0.7])
    cfg_up = TestConfig(family="bh", alpha=0.8, m_peel=4, sigma_override=(0.0, 0.0))
    cfg_down = TestConfig(family="bh", alpha=0.8, m_peel=4, zeta=0,
                          sigma_override=(0.0, 0.0))
    assert sup_test(p, cfg_up).j_star == 4
    assert sup_test(p, cfg_down).j_star == 0


def test_resolve_scales_routes():
    gauss = TestConfig(family="bh", budget=PrivacyBudget.gdp(0.5), gs=1e-4)
    sc = resolve_scales(gauss, 200)
    assert sc.sigma0 == pytest.approx(np.sqrt(400) * 1e-4 / 0.5)
    lap = TestConfig(family="bh", budget=PrivacyBudget.approx_dp(0.5, 1e-3),
                     noise_kind="laplace")
    sl = resolve_scales(lap, 200)
    assert sl.sigma0 > 0 and sl.sigma1 == 2 * sl.sigma0
    bad = TestConfig(family="bh", budget=PrivacyBudget.gdp(0.5), noise_kind="laplace")
    with pytest.raises(ValueError):
        resolve_scales(bad, 200)
    forced = TestConfig(family="bh", sigma_override=(0.3, 0.9))
    so = resolve_scales(forced, 200)
    assert (so.sigma0, so.sigma1) == (0.3, 0.9)


def test_sup_test_rejects_bad_m_peel():
    p = np.full(10, 0.5)
    with pytest.raises(ValueError):
        sup_test(p, TestConfig(family="bh", m_peel=11, sigma_override=(0.0, 0.0)))
    with pytest.raises(ValueError):
        sup_test(p, TestConfig(family="bh", m_peel=0, sigma_override=(0.0, 0.0)))
