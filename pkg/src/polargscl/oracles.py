"""Brute-force reference decoders for validating the list-decoder identities.

Everything here enumerates the codebook, so the guards are tight; these
functions exist to cross-check the production decoders on small codes,
not to decode anything at scale.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from scipy.special import logsumexp

from .channels import ChannelObservation, codeword_loglik
from .code import PolarCode, codebook_matrix

LN2 = math.log(2.0)
MAX_ORACLE_K = 16


class OracleForneyOutcome(NamedTuple):
    accepted: bool
    codewords: list  # accepted codewords; empty on erasure


def _guard(code: PolarCode) -> None:
    if code.k > MAX_ORACLE_K:
        raise ValueError(f"oracle enumeration limited to k <= {MAX_ORACLE_K}")


def _all_logliks(obs: ChannelObservation, code: PolarCode) -> np.ndarray:
    return np.asarray(codeword_loglik(obs, codebook_matrix(code)), dtype=float)


def oracle_ml(obs: ChannelObservation, code: PolarCode) -> np.ndarray:
    """Exhaustive maximum-likelihood codeword; ties resolve to the
    lexicographically smallest codeword."""
    _guard(code)
    mat = codebook_matrix(code)
    logw = _all_logliks(obs, code)
    best = np.flatnonzero(logw == logw.max())
    if best.size == 1:
        return mat[best[0]]
    return mat[best[np.lexsort(mat[best].T[::-1])[0]]]


def oracle_output_dist(obs: ChannelObservation, code: PolarCode) -> float:
    """log P_Y(y) by summing the likelihood of every codeword, each
    weighted 2^-k."""
    _guard(code)
    return float(logsumexp(_all_logliks(obs, code)) - code.k * LN2)


def oracle_forney(
    obs: ChannelObservation, code: PolarCode, T: float, mode: str = "remark1"
) -> OracleForneyOutcome:
    """Exhaustive threshold-test decoding.

    mode="original": return every codeword x whose likelihood dominates
    the rest of the codebook, W(y|x) / sum_{x'!=x} W(y|x') >= 2^(nT);
    with T <= 0 this may be a list. mode="remark1": apply the same test
    only to the ML decision, so the output is a single codeword or an
    erasure for any T.

    Both forms divide by the sum over the *other* codewords; rearranging
    against the total sum S gives W/S >= 2^(nT)/(1+2^(nT)), the
    ratio-form test used by the production decoder, and the two accept
    regions coincide exactly.
    """
    _guard(code)
    if mode not in ("original", "remark1"):
        raise ValueError(f"unknown mode: {mode}")
    mat = codebook_matrix(code)
    logw = _all_logliks(obs, code)
    nt = code.n * T * LN2

    def passes(idx: int) -> bool:
        if T == -math.inf:
            return True
        rest = logsumexp(np.delete(logw, idx))
        if logw[idx] == -math.inf:
            return False
        if rest == -math.inf:
            return True
        return bool(logw[idx] - rest >= nt)

    if mode == "remark1":
        x_hat = oracle_ml(obs, code)
        idx = int(np.flatnonzero((mat == x_hat).all(axis=1))[0])
        ok = passes(idx)
        return OracleForneyOutcome(accepted=ok, codewords=[x_hat] if ok else [])

    passing = [mat[i] for i in range(mat.shape[0]) if passes(i)]
    return OracleForneyOutcome(accepted=bool(passing), codewords=passing)
