"""Synthetic-channel reliability profiles and frozen-set selection."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .code import PolarCode

GA_METRIC = "gaussian-approximation-mean-llr"
BEC_METRIC = "bec-erasure-probability"

# Two-piece fit for the Gaussian-approximation transfer function
#   phi(x) ~= E[tanh(L/2)] complement for L ~ N(x, 2x):
# exp(c - a*x^b) on (0, 10], and the asymptotic tail beyond.
_PHI_A = 0.4527
_PHI_B = 0.86
_PHI_C = 0.0218
_PHI_SPLIT = 10.0
_PHI_INV_RTOL = 1e-9


@dataclass(frozen=True)
class ReliabilityProfile:
    """Per-index reliability scores for the n synthetic channels.

    `metric_kind` determines the ordering direction: for
    `bec-erasure-probability` a lower value is more reliable, for
    `gaussian-approximation-mean-llr` a higher value is more reliable.
    `design_param` records the design point (sigma or epsilon).
    """

    n: int
    metric_kind: str
    values: tuple
    design_param: float

    def __post_init__(self):
        if len(self.values) != self.n:
            raise ValueError("profile length must equal n")
        if self.metric_kind not in (GA_METRIC, BEC_METRIC):
            raise ValueError(f"unknown metric kind: {self.metric_kind}")

    def unreliable_order(self) -> np.ndarray:
        """0-based indices sorted least reliable first, ties toward the
        smaller index."""
        vals = np.asarray(self.values, dtype=float)
        key = vals if self.metric_kind == GA_METRIC else -vals
        # lexsort is stable: equal keys keep ascending index order.
        return np.lexsort((np.arange(self.n), key))


def _check_block_length(n: int) -> int:
    if n <= 0 or n & (n - 1) != 0:
        raise ValueError(f"n must be a power of two, got {n}")
    return n.bit_length() - 1


def bec_reliabilities(epsilon: float, n: int) -> ReliabilityProfile:
    """Exact per-index erasure probabilities on the erasure channel.

    One polarization step maps an erasure probability z to the pair
    (2z - z^2, z^2); the minus branch comes first, matching the
    plain-Kronecker transform convention. Lower value = more reliable.
    """
    m = _check_block_length(n)
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
    z = np.array([epsilon], dtype=float)
    for _ in range(m):
        z = np.stack([2.0 * z - z * z, z * z], axis=-1).reshape(-1)
    return ReliabilityProfile(n, BEC_METRIC, tuple(z.tolist()), float(epsilon))


def _phi(x: float) -> float:
    """GA transfer function (two-piece approximation, monotone decreasing).

    The fitted form slightly exceeds 1 near the origin; the value at 0 is
    the fit's own limit exp(c) so that the function stays monotone and
    invertible everywhere it is used.
    """
    if x <= 0.0:
        return math.exp(_PHI_C)
    if x <= _PHI_SPLIT:
        return math.exp(_PHI_C - _PHI_A * x**_PHI_B)
    return math.sqrt(math.pi / x) * math.exp(-x / 4.0) * (1.0 - 10.0 / (7.0 * x))


def _phi_inv(y: float) -> float:
    """Invert _phi by bisection to relative tolerance 1e-9."""
    if y >= math.exp(_PHI_C):
        return 0.0
    lo, hi = 0.0, 1.0
    while _phi(hi) > y:
        hi *= 2.0
        if hi > 1e9:
            return hi
    while hi - lo > _PHI_INV_RTOL * max(hi, 1.0):
        mid = 0.5 * (lo + hi)
        if _phi(mid) > y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def ga_reliabilities(sigma: float, n: int) -> ReliabilityProfile:
    """Mean decision-LLR of each synthetic channel on the biAWGN channel,
    via Gaussian-approximation density evolution.

    Starting from mean LLR 2/sigma^2, one polarization step maps a mean m
    to the pair (phi_inv(1 - (1 - phi(m))^2), 2m); the minus branch comes
    first. Higher value = more reliable.
    """
    m = _check_block_length(n)
    if sigma <= 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    mu = np.array([2.0 / sigma**2], dtype=float)
    for _ in range(m):
        minus = np.array([_phi_inv(1.0 - (1.0 - _phi(v)) ** 2) for v in mu])
        mu = np.stack([minus, 2.0 * mu], axis=-1).reshape(-1)
    return ReliabilityProfile(n, GA_METRIC, tuple(mu.tolist()), float(sigma))


def construct_unconstrained(n: int, k: int, profile: ReliabilityProfile) -> PolarCode:
    """Freeze the n-k least reliable indices (ties toward the smaller index)."""
    if profile.n != n:
        raise ValueError("profile block length does not match n")
    if not 0 <= k <= n:
        raise ValueError(f"k must be in 0..{n}, got {k}")
    frozen0 = profile.unreliable_order()[: n - k]
    return PolarCode(n, tuple(int(i) + 1 for i in sorted(frozen0)))


def construct_constrained(
    n: int, k: int, gamma_star: int, profile: ReliabilityProfile
) -> PolarCode:
    """Freeze the n-k least reliable indices among the first n-k+gamma_star
    coordinates, which caps the mixing factor at gamma_star."""
    if profile.n != n:
        raise ValueError("profile block length does not match n")
    if not 0 <= k <= n:
        raise ValueError(f"k must be in 0..{n}, got {k}")
    if gamma_star < 0 or gamma_star > k:
        raise ValueError(f"gamma_star must be in 0..k={k}, got {gamma_star}")
    window = n - k + gamma_star
    order = profile.unreliable_order()
    frozen0 = [int(i) for i in order if i < window][: n - k]
    return PolarCode(n, tuple(int(i) + 1 for i in sorted(frozen0)))
