"""Channel models, LLR computation, and per-symbol evidence.

Log-likelihood ratios use the natural logarithm throughout, with the
convention llr = log W(y|0) / W(y|1). Besides the LLR vector, every
observation carries the scalar

    evidence_log = sum_i log( (W(y_i|0) + W(y_i|1)) / 2 ),

the log-density of the received word under uniformly random channel
inputs. Relative path metrics plus this single scalar are sufficient to
recover absolute codeword likelihoods:

    log W^n(y|x) = n*log 2 + evidence_log - sum_i softplus((2 x_i - 1) llr_i),

which is how `codeword_loglik` evaluates transition probabilities without
access to the raw channel output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .code import as_bits

_LOG_HALF = math.log(0.5)


@dataclass(frozen=True)
class SnrPoint:
    """An Eb/N0 operating point together with its noise level for a given
    code rate, tied by Eb/N0 = 1 / (2 R sigma^2)."""

    eb_n0_db: float
    sigma: float
    rate: float


def snr_to_sigma(eb_n0_db: float, rate: float) -> float:
    """Noise standard deviation for a BPSK Eb/N0 point at the given rate."""
    if not 0.0 < rate <= 1.0 or not math.isfinite(eb_n0_db):
        raise ValueError(f"need rate in (0, 1] and finite Eb/N0, got {rate}, {eb_n0_db}")
    return math.sqrt(1.0 / (2.0 * rate * 10.0 ** (eb_n0_db / 10.0)))


def snr_point(eb_n0_db: float, rate: float) -> SnrPoint:
    return SnrPoint(float(eb_n0_db), snr_to_sigma(eb_n0_db, rate), float(rate))


@dataclass
class ChannelObservation:
    """Sufficient statistics of one received word.

    `llrs` holds per-symbol log-likelihood ratios (+inf/-inf on perfectly
    known erasure-channel symbols), `evidence_log` the uniform-input
    log-density of the word, and `erasures` a boolean mask for erased
    symbols (None for continuous-output channels).
    """

    llrs: np.ndarray
    evidence_log: float
    erasures: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.llrs.size


def bpsk_modulate(x) -> np.ndarray:
    """Map bits to antipodal symbols: 0 -> +1.0, 1 -> -1.0."""
    return 1.0 - 2.0 * as_bits(x).astype(float)


def biawgn_observe(x, sigma: float, rng: np.random.Generator) -> ChannelObservation:
    """Transmit over the binary-input AWGN channel.

    y = s + sigma*N(0,1) with s the BPSK symbol; llr = 2y/sigma^2. The
    evidence term sums, per symbol, the log of the two-sided Gaussian
    mixture density, evaluated with log-sum-exp.
    """
    if sigma <= 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    s = bpsk_modulate(x)
    y = s + sigma * rng.standard_normal(s.size)
    return observation_from_outputs(y, sigma)


def observation_from_outputs(y: np.ndarray, sigma: float) -> ChannelObservation:
    """Build the biAWGN observation for given raw channel outputs."""
    inv2 = 1.0 / (2.0 * sigma * sigma)
    ev = np.logaddexp(-((y - 1.0) ** 2) * inv2, -((y + 1.0) ** 2) * inv2)
    ev += _LOG_HALF - math.log(math.sqrt(2.0 * math.pi) * sigma)
    return ChannelObservation(llrs=2.0 * y / (sigma * sigma), evidence_log=float(ev.sum()))


def bec_observe(x, epsilon: float, rng: np.random.Generator) -> ChannelObservation:
    """Transmit over the binary erasure channel.

    Each symbol is erased independently with probability epsilon. Erased
    symbols carry llr = 0 and are flagged; surviving symbols carry exact
    +inf/-inf. Per-symbol evidence is log(epsilon) when erased and
    log((1-epsilon)/2) otherwise.
    """
    bits = as_bits(x)
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
    erased = rng.random(bits.size) < epsilon
    llrs = np.where(bits == 0, np.inf, -np.inf)
    llrs[erased] = 0.0
    n_erased = int(np.count_nonzero(erased))
    ev = 0.0
    if n_erased:
        ev += n_erased * math.log(epsilon)
    if n_erased < bits.size:
        ev += (bits.size - n_erased) * math.log((1.0 - epsilon) / 2.0)
    return ChannelObservation(llrs=llrs, evidence_log=ev, erasures=erased)


def codeword_loglik(obs: ChannelObservation, x) -> float | np.ndarray:
    """log W^n(y | x) for one codeword or a batch of codewords.

    Accepts a length-n bit vector or a (..., n) array of them; returns a
    scalar or the matching leading-shape array. Works for any channel via
    the observation's sufficient statistics; on the erasure channel a
    codeword disagreeing with a known symbol gets -inf exactly.
    """
    bits = np.asarray(x, dtype=np.uint8)
    signed = np.where(bits == 0, -1.0, 1.0) * obs.llrs
    out = (
        obs.n * math.log(2.0)
        + obs.evidence_log
        - np.logaddexp(0.0, signed).sum(axis=-1)
    )
    return float(out) if np.ndim(out) == 0 else out


def frame_rng(master_seed: int, point_key: int, frame_index: int) -> np.random.Generator:
    """Counter-based per-frame random stream.

    Philox keyed by (master_seed, point_key) with the frame index placed
    in the high counter word, so streams never overlap and results are
    independent of how frames are partitioned across workers.
    """
    mask = (1 << 64) - 1
    bg = np.random.Philox(
        key=[master_seed & mask, point_key & mask],
        counter=[0, 0, 0, frame_index & mask],
    )
    return np.random.Generator(bg)
