"""Randomized small-code identity checks tying the list decoder to the
exhaustive oracles.

Used by the `oracle-check` CLI subcommand and reused by the test suite.
All checks run on codes small enough for full codebook enumeration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .channels import biawgn_observe, bec_observe, codeword_loglik
from .code import PolarCode, encode, partition_subset
from .decode import (
    DecoderPath,
    _batch_list_decode,
    codebook_output_logprob,
    forney_threshold_log,
    gscl_decode,
    path_metric_of,
)
from .oracles import oracle_forney, oracle_ml, oracle_output_dist

LN2 = math.log(2.0)

TOL_OUTPUT_DIST = 1e-9
TOL_COSET = 1e-9
TOL_PM = 1e-10
MARGIN = 1e-9


@dataclass
class CheckEntry:
    max_deviation: float
    tolerance: float
    ok: bool
    detail: str = ""


@dataclass
class CheckReport:
    checks: dict = field(default_factory=dict)
    ok: bool = True
    first_failure: str | None = None

    def add(self, name: str, deviation: float, tolerance: float, context: str) -> None:
        entry = self.checks.get(name)
        if entry is None:
            entry = CheckEntry(max_deviation=0.0, tolerance=tolerance, ok=True)
            self.checks[name] = entry
        entry.max_deviation = max(entry.max_deviation, deviation)
        if deviation > tolerance:
            entry.ok = False
            if self.ok:
                self.ok = False
                self.first_failure = f"{name} deviated {deviation:.3e} at {context}"


def random_code(
    rng: np.random.Generator,
    n: int,
    k_min: int = 1,
    k_max: int | None = None,
    gamma_max: int | None = None,
    random_frozen_values: bool = False,
) -> PolarCode:
    """Draw a random frozen set, optionally rejecting large mixing factors."""
    k_max = n - 1 if k_max is None else min(k_max, n - 1)
    while True:
        k = int(rng.integers(k_min, k_max + 1))
        frozen0 = rng.choice(n, size=n - k, replace=False)
        frozen = tuple(int(i) + 1 for i in sorted(frozen0))
        values = None
        if random_frozen_values:
            values = tuple(int(v) for v in rng.integers(0, 2, size=n - k))
        code = PolarCode(n, frozen, values)
        if gamma_max is None or code.gamma <= gamma_max:
            return code


def step_s_paths(obs, code: PolarCode, corrupt_pm: bool = False):
    """The full list of step-s paths at list size 2^gamma."""
    res = _batch_list_decode(
        obs.llrs[None, :], code, code.list_size_ml, snapshot_step=code.s
    )
    paths = [
        DecoderPath(decisions=res.snap_dec[0, j], pm=float(res.snap_pm[0, j]))
        for j in range(res.snap_pm.shape[1])
    ]
    if corrupt_pm and paths:
        paths[0].pm += 1e-6
    return paths


def run_oracle_check(
    n_max: int = 16, trials: int = 1000, seed: int = 1, corrupt_pm: bool = False
) -> CheckReport:
    """Run every identity check over randomized codes and observations.

    `trials` counts observations per block length in {4, 8, 16}. The
    `corrupt_pm` hook perturbs one path metric before the
    output-density checks and exists as a negative control: enabling it
    must make the report fail.
    """
    report = CheckReport()
    rng = np.random.default_rng(seed)
    for n in (4, 8, 16):
        if n > n_max:
            continue
        codes = [
            random_code(rng, n, k_max=min(n - 1, 12), gamma_max=6,
                        random_frozen_values=bool(i % 2))
            for i in range(6)
        ]
        for trial in range(trials):
            code = codes[trial % len(codes)]
            sigma = float(rng.uniform(0.3, 1.5))
            info = rng.integers(0, 2, size=code.k, dtype=np.uint8)
            x = encode(info, code)
            obs = biawgn_observe(x, sigma, rng)
            ctx = f"(n={n}, trial={trial}, seed={seed})"

            paths = step_s_paths(obs, code, corrupt_pm=corrupt_pm)
            log_p_y = codebook_output_logprob(paths, obs, code)
            report.add(
                "output-dist identity",
                abs(log_p_y - oracle_output_dist(obs, code)),
                TOL_OUTPUT_DIST,
                ctx,
            )

            if trial % 10 == 0:
                dev = _coset_deviation(paths, obs, code)
                report.add("coset identity", dev, TOL_COSET, ctx)

            t_value = float(rng.uniform(-0.05, 0.1))
            outcome = gscl_decode(obs, code, t_value)
            report.add(
                "pm identity",
                abs(path_metric_of(obs, code, outcome.best_u)
                    - _incremental_pm(obs, code, outcome.best_u)),
                TOL_PM,
                ctx,
            )

            ml = oracle_ml(obs, code)
            if np.array_equal(ml, outcome.best_codeword):
                margin = abs(
                    (outcome.log_w_best - outcome.log_p_y) - outcome.threshold_log
                )
                if margin >= MARGIN:
                    ref = oracle_forney(obs, code, t_value, mode="remark1")
                    agree = ref.accepted == outcome.accepted
                    report.add(
                        "threshold-rule agreement",
                        0.0 if agree else 1.0,
                        0.0,
                        ctx,
                    )
                    report.add(
                        "ratio-form equivalence",
                        0.0 if _ratio_form_accept(obs, code, t_value) == ref.accepted
                        else 1.0,
                        0.0,
                        ctx,
                    )

            # Erasure-channel run: list size 2^gamma must match exhaustive
            # ML likelihood exactly.
            eps = float(rng.uniform(0.1, 0.6))
            obs_bec = bec_observe(x, eps, rng)
            out_bec = gscl_decode(obs_bec, code, -math.inf)
            dev = abs(
                codeword_loglik(obs_bec, out_bec.best_codeword)
                - codeword_loglik(obs_bec, oracle_ml(obs_bec, code))
            )
            report.add("erasure-channel ML match", dev, 0.0, ctx)
    return report


def _incremental_pm(obs, code: PolarCode, u_hat) -> float:
    """The decoder-maintained pm of the path that decided u_hat."""
    res = _batch_list_decode(obs.llrs[None, :], code, code.list_size_ml)
    hits = np.flatnonzero((res.dec[0] == u_hat).all(axis=1))
    return float(res.pm[0, hits[0]])


def _coset_deviation(paths, obs, code: PolarCode) -> float:
    """Max per-path deviation of the partition-cell likelihood identity.

    For the step-s path l the decoder's metric satisfies
    log p(y) - pm_l = log sum_{x in C_l} W(y|x) - n log 2.
    """
    worst = 0.0
    for path in paths:
        cell = partition_subset(code, path.decisions)
        rhs = float(logsumexp(codeword_loglik(obs, cell)) - code.n * LN2)
        lhs = obs.evidence_log - path.pm
        if math.isinf(lhs) and math.isinf(rhs):
            continue
        worst = max(worst, abs(lhs - rhs))
    return worst


def _ratio_form_accept(obs, code: PolarCode, t_value: float) -> bool:
    """Accept decision computed from exhaustive sums in the ratio form."""
    log_w = codeword_loglik(obs, oracle_ml(obs, code))
    log_p_y = oracle_output_dist(obs, code)
    return bool(log_w - log_p_y >= forney_threshold_log(code.n, code.k, t_value))
