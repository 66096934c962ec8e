"""Seeded, parallel Monte Carlo estimation of total and undetected error
rates versus SNR and detection threshold.

Reproducibility model: every frame owns a counter-based random substream
keyed by (master_seed, channel point, frame index), so results do not
depend on how frames are partitioned across workers or batches. All
threshold values at one channel point share the same frames (the
threshold test is a cheap post-processing of one decode), which both
saves decoding work and makes threshold comparisons paired. The stopping
rule is evaluated at fixed chunk boundaries, which keeps the frame count
of a record a pure function of the configuration.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from multiprocessing import Pool

import numpy as np

from .channels import SnrPoint, bec_observe, biawgn_observe, frame_rng
from .code import PolarCode, encode
from .decode import ErrorClass, GsclOutcome, forney_threshold_log, gscl_metrics_batch

_WILSON_Z = 1.959963984540054

CSV_HEADER = (
    "channel,n,k,gamma,L,ebn0_db_or_eps,T,frames,"
    "n_correct,n_erasure,n_undetected,tep,uep,tep_ci95,uep_ci95,seed"
)


@dataclass(frozen=True)
class SimConfig:
    """Sweep definition: one code, one channel family, and the grids."""

    code: PolarCode
    channel: str  # "biawgn" | "bec"
    snr_points: tuple  # SnrPoint entries for biawgn, epsilon floats for bec
    T_values: tuple
    max_frames: int = 100_000
    min_error_events: int = 100
    master_seed: int = 1
    workers: int = 1
    info_source: str = "random"  # "random" | "all-zero"
    chunk_frames: int = 256

    def __post_init__(self):
        if self.channel not in ("biawgn", "bec"):
            raise ValueError(f"unknown channel: {self.channel}")
        if self.info_source not in ("random", "all-zero"):
            raise ValueError(f"unknown info source: {self.info_source}")
        if self.max_frames < 1 or self.min_error_events < 1 or self.chunk_frames < 1:
            raise ValueError("max_frames, min_error_events, chunk_frames must be >= 1")


@dataclass
class SimRecord:
    """Counts and estimates for one (channel point, threshold) cell."""

    channel: str
    point: object  # SnrPoint or epsilon float
    T: float
    frames: int
    n_correct: int
    n_erasure: int
    n_undetected: int
    seed: int
    wall_time: float = 0.0
    tep: float = field(init=False)
    uep: float = field(init=False)
    tep_ci95: float = field(init=False)
    uep_ci95: float = field(init=False)

    def __post_init__(self):
        if self.n_correct + self.n_erasure + self.n_undetected != self.frames:
            raise ValueError("counts must sum to the frame count")
        errors = self.n_erasure + self.n_undetected
        self.tep = errors / self.frames
        self.uep = self.n_undetected / self.frames
        self.tep_ci95 = wilson_halfwidth(errors, self.frames)
        self.uep_ci95 = wilson_halfwidth(self.n_undetected, self.frames)

    @property
    def param(self) -> float:
        """The x-axis value: Eb/N0 in dB or the erasure probability."""
        return self.point.eb_n0_db if isinstance(self.point, SnrPoint) else self.point


def wilson_halfwidth(count: int, total: int) -> float:
    """Half-width of the 95% Wilson score interval; well behaved at 0."""
    z = _WILSON_Z
    return z * math.sqrt(count * (total - count) / total + z * z / 4.0) / (total + z * z)


def classify(transmitted, outcome: GsclOutcome) -> ErrorClass:
    """Sort one decoding outcome into correct / erasure / undetected."""
    if not outcome.accepted:
        return ErrorClass.ERASURE
    if np.array_equal(np.asarray(transmitted, dtype=np.uint8), outcome.codeword):
        return ErrorClass.CORRECT
    return ErrorClass.UNDETECTED


def _point_key(param: float) -> int:
    """Stable 64-bit stream key from the channel parameter's bit pattern."""
    return int(np.float64(param).view(np.uint64))


def _channel_param(config: SimConfig, point) -> float:
    if config.channel == "biawgn":
        return point.sigma
    return float(point)


def _chunk_task(args):
    """Simulate and classify one chunk of frames; returns (nT, 3) counts.

    Column order per threshold: (correct, erasure, undetected).
    """
    (code, channel, param, t_values, seed, start, count, info_source) = args
    n, k = code.n, code.k
    llrs = np.empty((count, n), dtype=float)
    evidence = np.empty(count, dtype=float)
    sent = np.empty((count, n), dtype=np.uint8)
    key = _point_key(param)
    zero_info = np.zeros(k, dtype=np.uint8)
    for j in range(count):
        rng = frame_rng(seed, key, start + j)
        if info_source == "random":
            info = rng.integers(0, 2, size=k, dtype=np.uint8)
        else:
            info = zero_info
        x = encode(info, code)
        obs = (
            biawgn_observe(x, param, rng)
            if channel == "biawgn"
            else bec_observe(x, param, rng)
        )
        llrs[j] = obs.llrs
        evidence[j] = obs.evidence_log
        sent[j] = x

    best_cw, log_w, log_p_y = gscl_metrics_batch(llrs, evidence, code)
    match = (best_cw == sent).all(axis=1)
    ratio = log_w - log_p_y
    counts = np.zeros((len(t_values), 3), dtype=np.int64)
    for t_idx, t in enumerate(t_values):
        thr = forney_threshold_log(n, k, t)
        accepted = np.ones(count, dtype=bool) if thr == -math.inf else ratio >= thr
        counts[t_idx, 0] = np.count_nonzero(accepted & match)
        counts[t_idx, 1] = np.count_nonzero(~accepted)
        counts[t_idx, 2] = np.count_nonzero(accepted & ~match)
    return counts


def _run_group(config: SimConfig, point, t_values, seed: int) -> list[SimRecord]:
    """Simulate all thresholds of one channel point on shared frames."""
    started = time.monotonic()
    param = _channel_param(config, point)
    chunk = config.chunk_frames
    n_chunks = -(-config.max_frames // chunk)

    def tasks():
        for c in range(n_chunks):
            start = c * chunk
            count = min(chunk, config.max_frames - start)
            yield (
                config.code,
                config.channel,
                param,
                tuple(t_values),
                seed,
                start,
                count,
                config.info_source,
            )

    counts = np.zeros((len(t_values), 3), dtype=np.int64)
    frames = np.zeros(len(t_values), dtype=np.int64)
    active = [True] * len(t_values)

    def consume(chunk_counts, count):
        for t_idx in range(len(t_values)):
            if not active[t_idx]:
                continue
            counts[t_idx] += chunk_counts[t_idx]
            frames[t_idx] += count
            done_events = (
                counts[t_idx, 1] >= config.min_error_events
                and counts[t_idx, 2] >= config.min_error_events
            )
            if done_events or frames[t_idx] >= config.max_frames:
                active[t_idx] = False

    if config.workers <= 1:
        for args in tasks():
            consume(_chunk_task(args), args[6])
            if not any(active):
                break
    else:
        with Pool(config.workers) as pool:
            task_list = list(tasks())
            for idx, chunk_counts in enumerate(pool.imap(_chunk_task, task_list)):
                consume(chunk_counts, task_list[idx][6])
                if not any(active):
                    break

    elapsed = time.monotonic() - started
    return [
        SimRecord(
            channel=config.channel,
            point=point,
            T=t,
            frames=int(frames[t_idx]),
            n_correct=int(counts[t_idx, 0]),
            n_erasure=int(counts[t_idx, 1]),
            n_undetected=int(counts[t_idx, 2]),
            seed=seed,
            wall_time=elapsed,
        )
        for t_idx, t in enumerate(t_values)
    ]


def run_point(config: SimConfig, point, T: float, seed: int | None = None) -> SimRecord:
    """Simulate one (channel point, threshold) cell.

    Frames are drawn until both error counters reach
    `config.min_error_events` (checked at chunk boundaries) or
    `config.max_frames` is hit. The result is byte-identical for any
    worker count.
    """
    if seed is None:
        seed = config.master_seed
    return _run_group(config, point, (T,), seed)[0]


def run_sweep(
    config: SimConfig,
    csv_path=None,
    meta_path=None,
    gnuplot_path=None,
) -> list[SimRecord]:
    """Run the Cartesian product of channel points and thresholds.

    Records are appended to `csv_path` as each channel point finishes.
    Thresholds at one point share frames; see the module docstring.
    """
    records: list[SimRecord] = []
    fh = None
    if csv_path is not None:
        fh = open(csv_path, "w")
        fh.write(CSV_HEADER + "\n")
        fh.flush()
    try:
        for point in config.snr_points:
            if not config.T_values:
                break
            group = _run_group(config, point, config.T_values, config.master_seed)
            records.extend(group)
            if fh is not None:
                for rec in group:
                    fh.write(csv_row(rec, config.code) + "\n")
                fh.flush()
    finally:
        if fh is not None:
            fh.close()
    if meta_path is not None:
        write_metadata(config, meta_path)
    if gnuplot_path is not None and csv_path is not None:
        write_gnuplot(config, csv_path, gnuplot_path)
    return records


def _fmt(x: float) -> str:
    if x == -math.inf:
        return "-inf"
    return f"{x:.12g}"


def csv_row(rec: SimRecord, code: PolarCode) -> str:
    return ",".join(
        [
            rec.channel,
            str(code.n),
            str(code.k),
            str(code.gamma),
            str(code.list_size_ml),
            _fmt(rec.param),
            _fmt(rec.T),
            str(rec.frames),
            str(rec.n_correct),
            str(rec.n_erasure),
            str(rec.n_undetected),
            _fmt(rec.tep),
            _fmt(rec.uep),
            _fmt(rec.tep_ci95),
            _fmt(rec.uep_ci95),
            str(rec.seed),
        ]
    )


def write_csv(records, code: PolarCode, path) -> None:
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for rec in records:
            fh.write(csv_row(rec, code) + "\n")


def write_metadata(config: SimConfig, path) -> None:
    """Companion JSON with the full configuration and code definition."""
    code = config.code
    doc = {
        "code": {
            "n": code.n,
            "k": code.k,
            "frozen": list(code.frozen),
            "frozen_values": list(code.frozen_values),
            "gamma": code.gamma,
            "list_size": code.list_size_ml,
        },
        "channel": config.channel,
        "points": [
            {"eb_n0_db": p.eb_n0_db, "sigma": p.sigma, "rate": p.rate}
            if isinstance(p, SnrPoint)
            else {"epsilon": p}
            for p in config.snr_points
        ],
        "T_values": ["-inf" if t == -math.inf else t for t in config.T_values],
        "max_frames": config.max_frames,
        "min_error_events": config.min_error_events,
        "master_seed": config.master_seed,
        "workers": config.workers,
        "info_source": config.info_source,
        "chunk_frames": config.chunk_frames,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def write_gnuplot(config: SimConfig, csv_path, gp_path) -> None:
    """Emit a gnuplot script: solid total-error curves, dashed
    undetected-error curves, one pair per threshold."""
    xlabel = "Eb/N0 [dB]" if config.channel == "biawgn" else "erasure probability"
    lines = [
        "set datafile separator ','",
        "set logscale y",
        f"set xlabel '{xlabel}'",
        "set ylabel 'error probability'",
        "set key outside",
        "set grid",
    ]
    plots = []
    for idx, t in enumerate(config.T_values):
        label = "-inf" if t == -math.inf else f"{t:g}"
        cond = f"strcol(7) eq '{_fmt(t)}'"
        plots.append(
            f"'{csv_path}' using 6:({cond} ? column(12) : NaN) "
            f"with linespoints lt {idx + 1} dt 1 title 'TEP T={label}'"
        )
        plots.append(
            f"'{csv_path}' using 6:({cond} ? column(13) : NaN) "
            f"with linespoints lt {idx + 1} dt 2 title 'UEP T={label}'"
        )
    lines.append("plot \\\n    " + ", \\\n    ".join(plots))
    with open(gp_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
