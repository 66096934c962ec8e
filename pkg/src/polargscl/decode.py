"""Successive cancellation, list, and generalized list decoding.

Path metrics are exact: with decision LLR lambda_j for bit j along a path,
the increment log(1 + exp(-(1-2u_j) lambda_j)) makes

    pm = -log P(u^i | y^n)

hold with equality, so exp(-pm) is the absolute posterior of the path
prefix. Combined with the observation's uniform-input evidence p(y^n)
(see `channels`), the synthetic-channel transition value of a prefix is

    W^(i)(y^n, u^(i-1) | u_i) = 2 * p(y^n) * exp(-pm),

which follows from the definition of the synthetic channels as
2^-(n-1)-weighted sums of W^n over free tail bits. Summing over the full
list of the 2^gamma surviving prefixes at the last frozen bit therefore
gives the codebook-induced output density

    log P_Y(y^n) = (n-k) log 2 + evidence_log + logsumexp_l(-pm_l)

without ever enumerating the codebook. `codebook_output_logprob`
implements exactly this identity and is cross-checked against exhaustive
enumeration in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np
from scipy.special import logsumexp

from .channels import ChannelObservation, codeword_loglik
from .code import PolarCode

LN2 = math.log(2.0)


class ErrorClass(Enum):
    CORRECT = "correct"
    ERASURE = "erasure"
    UNDETECTED = "undetected"


@dataclass
class DecoderPath:
    """One list entry: decision prefix and its exact path metric."""

    decisions: np.ndarray
    pm: float
    alive: bool = True


@dataclass
class GsclOutcome:
    """Result of one generalized list decode.

    `codeword`/`u_hat` are None when the threshold test rejects the list
    decision (an erasure); `best_codeword`/`best_u` always carry the
    pre-test list decision for diagnostics.
    """

    accepted: bool
    codeword: np.ndarray | None
    u_hat: np.ndarray | None
    log_w_best: float
    log_p_y: float
    threshold_log: float
    best_codeword: np.ndarray
    best_u: np.ndarray
    list_dump: list | None = None

    @property
    def is_erasure(self) -> bool:
        return not self.accepted


def check_node_llr(a, b) -> np.ndarray:
    """Exact check-node combination 2*atanh(tanh(a/2)*tanh(b/2)).

    Evaluated as sign(a)sign(b)min(|a|,|b|) plus a bounded correction,
    which is stable for large inputs. Infinite inputs saturate exactly:
    combining with +inf returns the other argument, with -inf its
    negation, and a zero input always yields zero.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(invalid="ignore"):
        s = np.abs(a + b)
        d = np.abs(a - b)
        out = 0.5 * (s - d) + np.log1p(np.exp(-s)) - np.log1p(np.exp(-d))
    # nan marks an infinite input; there the sign-min limit is exact.
    nan = np.isnan(out)
    if nan.any():
        exact = np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))
        out = np.where(nan, exact, out)
    return out


def _var_node_llr(a, b, beta):
    """Variable-node combination b + (1-2*beta)*a with inf + (-inf) := 0."""
    with np.errstate(invalid="ignore"):
        out = b + (1.0 - 2.0 * beta) * a
    nan = np.isnan(out)
    if nan.any():
        out = np.where(nan, 0.0, out)
    return out


def _bit_penalty(lam, bits):
    """Path-metric increment log(1 + exp(-(1-2u)*lambda))."""
    return np.logaddexp(0.0, np.where(bits == 1, lam, -lam))


class _BatchResult(NamedTuple):
    dec: np.ndarray  # (B, P, n) input decisions
    pm: np.ndarray  # (B, P)
    cw: np.ndarray  # (B, P, n) codewords of the final paths
    snap_dec: np.ndarray | None  # (B, Ps, s)
    snap_pm: np.ndarray | None  # (B, Ps)


def _select_smallest(cand: np.ndarray, keep: int) -> np.ndarray:
    """Per-row indices of the `keep` smallest entries, ascending by index.

    Ties at the cut value are resolved toward the smaller index, so the
    selection is deterministic and stable without a full sort.
    """
    nb = cand.shape[0]
    tau = np.partition(cand, keep - 1, axis=1)[:, keep - 1 : keep]
    below = cand < tau
    need = keep - below.sum(axis=1, keepdims=True)
    at = cand == tau
    fill = at & (np.cumsum(at, axis=1) <= need)
    return np.nonzero(below | fill)[1].reshape(nb, keep)


def _batch_list_decode(
    llrs: np.ndarray,
    code: PolarCode,
    list_size: int,
    snapshot_step: int = -1,
    forced: np.ndarray | None = None,
) -> _BatchResult:
    """Core list decoder, vectorized over a batch of frames and the path list.

    `llrs` has shape (B, n). If `snapshot_step` is a 1-based bit index s,
    the decision prefixes and path metrics of the whole list are captured
    right after processing bit s (s = 0 captures the empty-prefix state).
    If `forced` is given, the single path follows those decisions and the
    returned pm is the metric recomputed from scratch.

    LLR memory per path uses the compact 2n-1 layout: level l (leaf = 0,
    channel = m) occupies slots [2^l - 1, 2^(l+1) - 1); the channel level
    is shared across paths. Pruning does not move the per-level storage;
    instead each level keeps a row-permutation map from current path
    index to stored row, applied on read and reset whenever the level is
    rewritten. Decisions are recorded as per-bit (bits, parent) columns
    and reconstructed by backtracking, so pruning touches O(list) data
    instead of whole decoder states.
    """
    ch = np.ascontiguousarray(llrs, dtype=float)
    if ch.ndim != 2 or ch.shape[1] != code.n:
        raise ValueError(f"llrs must have shape (B, {code.n})")
    if list_size < 1:
        raise ValueError("list size must be >= 1")
    if forced is not None and list_size != 1:
        raise ValueError("forced decoding uses a single path")
    nb, n = ch.shape
    m = code.m
    half = n >> 1
    fmask = code.frozen_mask
    fvals = code.base_input
    idx_dtype = np.uint8 if list_size <= 255 else np.uint32

    p = 1
    width = max(n - 1, 1)
    mem = np.zeros((nb, list_size, width), dtype=float)
    pleft = np.zeros((nb, list_size, width), dtype=np.uint8)
    mem_perm: list = [None] * max(m, 1)
    pl_perm: list = [None] * max(m, 1)
    pm = np.zeros((nb, 1), dtype=float)
    cw = np.zeros((nb, list_size, n), dtype=np.uint8)
    rows = np.arange(nb)[:, None]
    # Per bit: ("frozen", value) | ("dup", old_p) | ("sel", bits, parent).
    history: list = []
    snap_dec = snap_pm = None
    if snapshot_step == 0:
        snap_dec = np.zeros((nb, 1, 0), dtype=np.uint8)
        snap_pm = np.zeros((nb, 1), dtype=float)

    def read_block(store, perms, lev, w):
        """Active block of level `lev` as the (a, b) half pair."""
        if lev == m:
            return ch[:, None, :half], ch[:, None, half:]
        base = (1 << lev) - 1
        perm = perms[lev]
        if perm is None:
            return (
                store[:, :p, base : base + w],
                store[:, :p, base + w : base + 2 * w],
            )
        blk = store[rows, perm, base : base + 2 * w]
        return blk[:, :, :w], blk[:, :, w:]

    def read_level(store, perms, lev, w):
        base = (1 << lev) - 1
        perm = perms[lev]
        if perm is None:
            return store[:, :p, base : base + w]
        return store[rows, perm, base : base + w]

    for i in range(n):
        # Refresh LLR memory down to the leaf. Level z is a right child
        # (variable node); everything below is a left child (check node).
        z = m if i == 0 else (i & -i).bit_length() - 1
        for lev in range(z, -1, -1):
            if lev == m:
                continue
            w = 1 << lev
            a, b = read_block(mem, mem_perm, lev + 1, w)
            base = w - 1
            if lev == z and i > 0:
                beta = read_level(pleft, pl_perm, lev, w)
                mem[:, :p, base : base + w] = _var_node_llr(a, b, beta)
            else:
                mem[:, :p, base : base + w] = check_node_llr(a, b)
            mem_perm[lev] = None

        lam = np.broadcast_to(ch[:, :1], (nb, p)) if m == 0 else mem[:, :p, 0]

        if forced is not None:
            bits = forced[:, None, i]
            pm = pm + _bit_penalty(lam, bits)
            cur_bits = np.broadcast_to(bits, (nb, p))
        elif fmask[i]:
            u = int(fvals[i])
            pm = pm + _bit_penalty(lam, u)
            cur_bits = np.full((nb, p), u, dtype=np.uint8)
            history.append(("frozen", u))
        else:
            pen0 = np.logaddexp(0.0, -lam)
            pen1 = np.logaddexp(0.0, lam)
            if 2 * p <= list_size:
                # No pruning needed: physically clone the decoder state,
                # keeping all permutation maps identity.
                mem[:, p : 2 * p] = mem[:, :p]
                pleft[:, p : 2 * p] = pleft[:, :p]
                if any(pp is not None for pp in mem_perm + pl_perm):
                    raise AssertionError("permutations must be identity while growing")
                pm = np.concatenate([pm + pen0, pm + pen1], axis=1)
                history.append(("dup", p))
                cur_bits = np.zeros((nb, 2 * p), dtype=np.uint8)
                cur_bits[:, p:] = 1
                p *= 2
            else:
                # Candidate c is the (c // p)-valued child of parent c % p.
                # Keep the list_size smallest metrics; candidates tied at
                # the cut survive in candidate-index order, and the kept
                # list stays in candidate-index order.
                cand = np.empty((nb, 2 * p))
                np.add(pm, pen0, out=cand[:, :p])
                np.add(pm, pen1, out=cand[:, p:])
                idx = _select_smallest(cand, list_size)
                parent = (idx % p).astype(idx_dtype)
                cur_bits = (idx // p).astype(np.uint8)
                pm = cand[rows, idx]
                for perms in (mem_perm, pl_perm):
                    for lev in range(m):
                        cur = perms[lev]
                        perms[lev] = parent if cur is None else cur[rows, parent]
                history.append(("sel", cur_bits, parent))
                p = list_size

        # Propagate partial sums: climb while the finished block is a
        # right child, combining with the stored left-sibling codeword.
        cur = cw[:, :p]
        cur[:, :, 0] = cur_bits
        w = 1
        lev = 0
        while (i >> lev) & 1:
            cur[:, :, w : 2 * w] = cur[:, :, :w]
            cur[:, :, :w] ^= read_level(pleft, pl_perm, lev, w)
            w <<= 1
            lev += 1
        if lev < m:
            base = w - 1
            pleft[:, :p, base : base + w] = cur[:, :, :w]
            pl_perm[lev] = None

        if snapshot_step == i + 1:
            if forced is not None:
                snap_dec = forced[:, None, : i + 1].copy()
            else:
                snap_dec = _backtrack(history, nb, p, i + 1)
            snap_pm = pm.copy()

    dec = forced[:, None, :].copy() if forced is not None else _backtrack(history, nb, p, n)
    return _BatchResult(
        dec=dec,
        pm=pm,
        cw=cw[:, :p],
        snap_dec=snap_dec,
        snap_pm=snap_pm,
    )


def _backtrack(history, nb: int, p: int, upto: int) -> np.ndarray:
    """Rebuild the first `upto` decision columns for the current paths."""
    dec = np.empty((nb, p, upto), dtype=np.uint8)
    rows = np.arange(nb)[:, None]
    cur = np.broadcast_to(np.arange(p, dtype=np.int32), (nb, p))
    for i in range(upto - 1, -1, -1):
        entry = history[i]
        kind = entry[0]
        if kind == "frozen":
            dec[:, :, i] = entry[1]
        elif kind == "dup":
            old = entry[1]
            dec[:, :, i] = (cur >= old).astype(np.uint8)
            cur = cur % old
        else:
            _, bits, parent = entry
            dec[:, :, i] = bits[rows, cur]
            cur = parent[rows, cur]
    return dec


def sc_decode(obs: ChannelObservation, code: PolarCode) -> np.ndarray:
    """Successive cancellation decoding; returns the length-n input decisions.

    Frozen bits take their fixed values; information bits follow the hard
    decision on the exact decision LLR, with ties (LLR exactly 0) decided
    as 0.
    """
    if obs.n != code.n:
        raise ValueError(f"observation length {obs.n} != block length {code.n}")
    res = _batch_list_decode(obs.llrs[None, :], code, 1)
    return res.dec[0, 0]


def scl_decode(obs: ChannelObservation, code: PolarCode, list_size: int):
    """Successive cancellation list decoding.

    Returns (paths, best_index): the final list as `DecoderPath` objects
    ordered as maintained by the decoder, and the index of the
    smallest-metric path (ties resolve to the lowest index).
    """
    if obs.n != code.n:
        raise ValueError(f"observation length {obs.n} != block length {code.n}")
    res = _batch_list_decode(obs.llrs[None, :], code, list_size)
    paths = [DecoderPath(decisions=res.dec[0, j], pm=float(res.pm[0, j]))
             for j in range(res.pm.shape[1])]
    return paths, int(np.argmin(res.pm[0]))


def path_metric_of(obs: ChannelObservation, code: PolarCode, u) -> float:
    """Recompute the path metric of a full decision vector from scratch."""
    forced = np.asarray(u, dtype=np.uint8)[None, :]
    res = _batch_list_decode(obs.llrs[None, :], code, 1, forced=forced)
    return float(res.pm[0, 0])


def codebook_output_logprob(paths_at_s, obs: ChannelObservation, code: PolarCode) -> float:
    """log of the codebook-induced output density, from the step-s list.

    `paths_at_s` must be the complete list of 2^gamma surviving paths
    right after the last frozen bit (list size 2^gamma guarantees no
    valid prefix was pruned). See the module docstring for the identity
    this evaluates.
    """
    pms = np.array([path.pm for path in paths_at_s], dtype=float)
    if pms.size != code.list_size_ml:
        raise ValueError(
            f"need the full list of {code.list_size_ml} step-s paths, got {pms.size}"
        )
    return float((code.n - code.k) * LN2 + obs.evidence_log + logsumexp(-pms))


def forney_threshold_log(n: int, k: int, T: float) -> float:
    """Natural-log acceptance threshold k log2 + nT log2 - log(1 + 2^(nT)).

    T = -inf yields -inf (accept everything). Evaluated in a form that is
    stable for large |nT|.
    """
    if T == -math.inf:
        return -math.inf
    nt = n * T * LN2
    if nt > 0:
        return k * LN2 - math.log1p(math.exp(-nt))
    return k * LN2 + nt - math.log1p(math.exp(nt))


def forney_test(log_w_best: float, log_p_y: float, code: PolarCode, T: float):
    """Threshold test on the likelihood-to-output-density ratio.

    Returns (accepted, threshold_log) with
    accepted = (log_w_best - log_p_y >= threshold_log).
    """
    threshold_log = forney_threshold_log(code.n, code.k, T)
    if T == -math.inf:
        return True, threshold_log
    return bool(log_w_best - log_p_y >= threshold_log), threshold_log


def gscl_decode(
    obs: ChannelObservation, code: PolarCode, T: float, keep_list: bool = False
) -> GsclOutcome:
    """Generalized list decoding with erasure option.

    Runs list decoding with list size 2^gamma, evaluates the codebook
    output density from the step-s list, and accepts the list decision
    only if its likelihood passes the threshold test; otherwise the frame
    is erased. log_w_best is evaluated from the channel statistics of the
    decided codeword, independently of the path metrics.
    """
    if obs.n != code.n:
        raise ValueError(f"observation length {obs.n} != block length {code.n}")
    res = _batch_list_decode(
        obs.llrs[None, :], code, code.list_size_ml, snapshot_step=code.s
    )
    if res.snap_pm.shape[1] != code.list_size_ml:
        raise RuntimeError(
            "list decoder lost a prefix before the last frozen bit: "
            f"{res.snap_pm.shape[1]} paths, expected {code.list_size_ml}"
        )
    log_p_y = float(
        (code.n - code.k) * LN2 + obs.evidence_log + logsumexp(-res.snap_pm[0])
    )
    best = int(np.argmin(res.pm[0]))
    best_u = res.dec[0, best]
    best_cw = res.cw[0, best]
    log_w_best = codeword_loglik(obs, best_cw)
    accepted, threshold_log = forney_test(log_w_best, log_p_y, code, T)
    dump = None
    if keep_list:
        dump = [
            DecoderPath(decisions=res.snap_dec[0, j], pm=float(res.snap_pm[0, j]))
            for j in range(res.snap_pm.shape[1])
        ]
    return GsclOutcome(
        accepted=accepted,
        codeword=best_cw if accepted else None,
        u_hat=best_u if accepted else None,
        log_w_best=log_w_best,
        log_p_y=log_p_y,
        threshold_log=threshold_log,
        best_codeword=best_cw,
        best_u=best_u,
        list_dump=dump,
    )


def gscl_metrics_batch(llrs: np.ndarray, evidence: np.ndarray, code: PolarCode):
    """Batched decision metrics for the simulator.

    Parameters
    ----------
    llrs : ndarray, shape (B, n)
    evidence : ndarray, shape (B,)
        Per-frame evidence_log values.

    Returns
    -------
    best_cw : ndarray, shape (B, n)
    log_w : ndarray, shape (B,)
    log_p_y : ndarray, shape (B,)
    """
    res = _batch_list_decode(llrs, code, code.list_size_ml, snapshot_step=code.s)
    if res.snap_pm.shape[1] != code.list_size_ml:
        raise RuntimeError("list decoder lost a prefix before the last frozen bit")
    log_p_y = (code.n - code.k) * LN2 + evidence + logsumexp(-res.snap_pm, axis=1)
    best = np.argmin(res.pm, axis=1)
    rows = np.arange(llrs.shape[0])
    best_cw = res.cw[rows, best]
    signed = np.where(best_cw == 0, -1.0, 1.0) * llrs
    log_w = code.n * LN2 + evidence - np.logaddexp(0.0, signed).sum(axis=1)
    return best_cw, log_w, log_p_y
