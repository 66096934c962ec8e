"""Reliability profiles and frozen-set selection tests."""

import numpy as np
import pytest

from polargscl.channels import snr_to_sigma
from polargscl.code import mixing_factor
from polargscl.construction import (
    BEC_METRIC,
    GA_METRIC,
    ReliabilityProfile,
    _phi,
    _phi_inv,
    bec_reliabilities,
    construct_constrained,
    construct_unconstrained,
    ga_reliabilities,
)


def test_bec_one_step():
    prof = bec_reliabilities(0.5, 2)
    assert prof.values == (0.75, 0.25)
    assert prof.metric_kind == BEC_METRIC


def test_bec_two_steps_hand_values():
    # applying z -> (2z - z^2, z^2) twice to 0.5
    prof = bec_reliabilities(0.5, 4)
    assert np.allclose(prof.values, [0.9375, 0.5625, 0.4375, 0.0625], atol=1e-15)


def test_bec_edges_and_errors():
    assert bec_reliabilities(0.0, 8).values == (0.0,) * 8
    assert bec_reliabilities(1.0, 8).values == (1.0,) * 8
    with pytest.raises(ValueError):
        bec_reliabilities(1.5, 8)
    with pytest.raises(ValueError):
        bec_reliabilities(0.5, 6)


def test_bec_degrades_monotonically_in_epsilon():
    lo = np.array(bec_reliabilities(0.3, 64).values)
    hi = np.array(bec_reliabilities(0.4, 64).values)
    assert np.all(hi >= lo)


def test_ga_plus_branch_doubles_and_orders():
    sigma = np.sqrt(2.0 / 4.0)  # 2/sigma^2 = 4
    prof = ga_reliabilities(sigma, 2)
    minus, plus = prof.values
    assert plus == pytest.approx(8.0, rel=1e-12)
    assert minus < 4.0 < plus
    with pytest.raises(ValueError):
        ga_reliabilities(0.0, 2)


def test_phi_inverse_round_trip():
    for x in (0.01, 0.3, 1.0, 4.0, 9.9, 10.5, 40.0):
        y = _phi(x)
        x_back = _phi_inv(y)
        assert abs(_phi(x_back) - y) <= 1e-8 * max(y, 1e-12)


def quantized_de_profiles(sigma: float, n: int, lim: float = 64.0, bins: int = 8193):
    """Exact density evolution on a quantized LLR grid (biAWGN, all-zero).

    Tracks the decision-LLR density of each synthetic channel through the
    polarization recursion; the check-node output is accumulated by
    binning the exact pairwise combination, the variable-node output by
    full convolution. Returns the per-index error probability
    P(LLR < 0) + P(LLR = 0)/2.
    """
    grid = np.linspace(-lim, lim, bins)
    du = grid[1] - grid[0]
    mean, var = 2.0 / sigma**2, 4.0 / sigma**2
    pdf = np.exp(-((grid - mean) ** 2) / (2 * var)) / np.sqrt(2 * np.pi * var)
    p = pdf * du
    p /= p.sum()

    def var_node(p1):
        out = np.convolve(p1, p1)
        full = np.arange(out.size) * du + 2 * grid[0]
        res = np.zeros_like(p1)
        idx = np.clip(np.round((full - grid[0]) / du).astype(int), 0, bins - 1)
        np.add.at(res, idx, out)
        return res

    def check_node(p1):
        t = np.tanh(grid / 2.0)
        res = np.zeros_like(p1)
        for i in np.flatnonzero(p1 > 1e-14):
            prod = np.clip(t[i] * t, -1 + 1e-15, 1 - 1e-15)
            vals = 2.0 * np.arctanh(prod)
            idx = np.clip(np.round((vals - grid[0]) / du).astype(int), 0, bins - 1)
            np.add.at(res, idx, p1[i] * p1)
        return res

    dists = [p]
    m = n.bit_length() - 1
    for _ in range(m):
        nxt = []
        for d in dists:
            nxt.append(check_node(d))
            nxt.append(var_node(d))
        dists = nxt
    zero_bin = (bins - 1) // 2
    return np.array(
        [d[:zero_bin].sum() + 0.5 * d[zero_bin] for d in dists]
    )


def test_ga_ranking_agrees_with_quantized_de():
    sigma = 1.0
    n = 8
    ga = np.array(ga_reliabilities(sigma, n).values)
    pe = quantized_de_profiles(sigma, n)
    # higher mean LLR must mean lower error probability, pairwise
    order_ga = np.argsort(-ga, kind="stable")
    order_de = np.argsort(pe, kind="stable")
    assert np.array_equal(order_ga, order_de), (ga, pe)


def test_unreliable_order_ties_toward_smaller_index():
    prof = ReliabilityProfile(4, BEC_METRIC, (0.5, 0.9, 0.9, 0.1), 0.5)
    assert prof.unreliable_order().tolist() == [1, 2, 0, 3]
    prof = ReliabilityProfile(4, GA_METRIC, (2.0, 1.0, 1.0, 3.0), 1.0)
    assert prof.unreliable_order().tolist() == [1, 2, 0, 3]


def test_unconstrained_construction():
    prof = bec_reliabilities(0.5, 4)
    assert construct_unconstrained(4, 4, prof).frozen == ()
    assert construct_unconstrained(4, 0, prof).frozen == (1, 2, 3, 4)
    assert construct_unconstrained(4, 2, prof).frozen == (1, 2)


def test_constrained_matches_unconstrained_at_full_window():
    rng = np.random.default_rng(2)
    for _ in range(20):
        n = int(2 ** rng.integers(2, 7))
        k = int(rng.integers(1, n + 1))
        prof = (
            bec_reliabilities(float(rng.uniform(0.05, 0.9)), n)
            if rng.integers(2)
            else ga_reliabilities(float(rng.uniform(0.5, 1.5)), n)
        )
        assert construct_constrained(n, k, k, prof) == construct_unconstrained(n, k, prof)


def test_constrained_gamma_zero_freezes_prefix():
    prof = ga_reliabilities(1.0, 16)
    code = construct_constrained(16, 10, 0, prof)
    assert code.frozen == tuple(range(1, 7))
    assert code.gamma == 0


def test_constrained_caps_mixing_factor_randomized():
    rng = np.random.default_rng(9)
    for _ in range(60):
        n = int(2 ** rng.integers(2, 8))
        k = int(rng.integers(1, n + 1))
        gstar = int(rng.integers(0, k + 1))
        prof = (
            bec_reliabilities(float(rng.uniform(0.05, 0.9)), n)
            if rng.integers(2)
            else ga_reliabilities(float(rng.uniform(0.5, 2.0)), n)
        )
        code = construct_constrained(n, k, gstar, prof)
        assert mixing_factor(code) <= gstar
        assert code.k == k


def test_constrained_rejects_gamma_star_above_k():
    prof = ga_reliabilities(1.0, 8)
    with pytest.raises(ValueError):
        construct_constrained(8, 4, 5, prof)


def test_construction_is_deterministic():
    prof = ga_reliabilities(0.8, 64)
    a = construct_constrained(64, 48, 8, prof)
    b = construct_constrained(64, 48, 8, ga_reliabilities(0.8, 64))
    assert a == b


def test_target_code_shapes():
    # gamma*-capped designs for the two simulated code sizes
    sigma128 = snr_to_sigma(3.0, 96 / 128)
    code128 = construct_constrained(128, 96, 8, ga_reliabilities(sigma128, 128))
    assert code128.gamma <= 8
    sigma64 = snr_to_sigma(3.0, 48 / 64)
    code64 = construct_constrained(64, 48, 8, ga_reliabilities(sigma64, 64))
    assert code64.gamma <= 8
