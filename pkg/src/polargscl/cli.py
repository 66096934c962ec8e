"""Command-line front end: construct, encode, decode, simulate, oracle-check."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .channels import ChannelObservation, snr_point, snr_to_sigma
from .code import PolarCode, as_bits, encode, load_code, save_code
from .construction import (
    bec_reliabilities,
    construct_constrained,
    ga_reliabilities,
)
from .decode import gscl_decode, scl_decode
from .sim import SimConfig, run_sweep
from .selfcheck import run_oracle_check

WORKERS_ENV = "POLARGSCL_WORKERS"


def _parse_threshold(text: str) -> float:
    if text.strip().lower() in ("neg-inf", "-inf"):
        return -math.inf
    return float(text)


def _default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """If --config FILE is present, install its entries as parser defaults."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        parser.error("--config requires a file path")
    with open(argv[idx + 1]) as fh:
        doc = json.load(fh)
    defaults = {key.replace("-", "_"): value for key, value in doc.items()}
    parser.set_defaults(**defaults)
    return argv[:idx] + argv[idx + 2 :]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polargscl")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="design a code with a capped mixing factor")
    p.add_argument("--config", help="JSON file providing flag defaults")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--gamma-star", type=int, required=True)
    p.add_argument("--channel", choices=["biawgn", "bec"], default="biawgn")
    p.add_argument("--design-snr-db", type=float, help="design Eb/N0 for biawgn")
    p.add_argument("--epsilon", type=float, help="design erasure probability for bec")
    p.add_argument("--out", required=True)

    p = sub.add_parser("encode", help="encode information bits")
    p.add_argument("--config", help="JSON file providing flag defaults")
    p.add_argument("--code", required=True)
    p.add_argument("--info", required=True, help="bit string, e.g. 0110")
    p.add_argument("--out", help="output file (default stdout)")

    p = sub.add_parser("decode", help="decode one LLR vector")
    p.add_argument("--config", help="JSON file providing flag defaults")
    p.add_argument("--code", required=True)
    p.add_argument("--llr-file", required=True, help="text file, one LLR per line")
    p.add_argument("--list-size", type=int, help="default: 2^gamma of the code")
    p.add_argument("--threshold-T", default="neg-inf", help="number or 'neg-inf'")
    p.add_argument(
        "--evidence-log",
        type=float,
        default=0.0,
        help="log p(y) of the observation; with the default 0 the reported "
        "metrics are shifted by a common constant, the decision is unaffected",
    )
    p.add_argument("--out", help="output file (default stdout)")

    p = sub.add_parser("simulate", help="Monte Carlo sweep")
    p.add_argument("--config", help="JSON file providing flag defaults")
    p.add_argument("--code", required=True)
    p.add_argument("--channel", choices=["biawgn", "bec"], default="biawgn")
    p.add_argument("--snr-db", type=float, nargs="+", help="Eb/N0 grid for biawgn")
    p.add_argument("--epsilon", type=float, nargs="+", help="erasure grid for bec")
    p.add_argument("--T", nargs="+", required=True, help="thresholds, 'neg-inf' allowed")
    p.add_argument("--max-frames", type=int, default=100_000)
    p.add_argument("--min-errors", type=int, default=100)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--chunk-frames", type=int, default=256)
    p.add_argument("--info-source", choices=["random", "all-zero"], default="random")
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--meta", help="JSON metadata path")
    p.add_argument("--emit-gnuplot", help="write a gnuplot script to this path")

    p = sub.add_parser("oracle-check", help="run the small-code identity checks")
    p.add_argument("--config", help="JSON file providing flag defaults")
    p.add_argument("--n-max", type=int, default=16)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=1)

    return parser


def _cmd_construct(args) -> int:
    if args.k > args.n:
        print("error: k must not exceed n", file=sys.stderr)
        return 2
    if args.gamma_star > args.k:
        print(
            f"error: mixing-factor cap {args.gamma_star} exceeds k={args.k}",
            file=sys.stderr,
        )
        return 1
    if args.channel == "biawgn":
        if args.design_snr_db is None:
            print("error: --design-snr-db is required for biawgn", file=sys.stderr)
            return 2
        sigma = snr_to_sigma(args.design_snr_db, args.k / args.n)
        profile = ga_reliabilities(sigma, args.n)
        meta = {"design_snr_db": args.design_snr_db}
    else:
        if args.epsilon is None:
            print("error: --epsilon is required for bec", file=sys.stderr)
            return 2
        profile = bec_reliabilities(args.epsilon, args.n)
        meta = {"epsilon": args.epsilon}
    code = construct_constrained(args.n, args.k, args.gamma_star, profile)
    meta.update(
        {
            "gamma_star": args.gamma_star,
            "metric_kind": profile.metric_kind,
            "gamma_achieved": code.gamma,
        }
    )
    save_code(code, args.out, metadata=meta)
    print(f"({code.n},{code.k}) code: gamma={code.gamma} list_size={code.list_size_ml}")
    return 0


def _cmd_encode(args) -> int:
    code = load_code(args.code)
    bits = as_bits([int(c) for c in args.info.strip()], length=code.k)
    word = "".join(str(int(b)) for b in encode(bits, code))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(word + "\n")
    else:
        print(word)
    return 0


def _cmd_decode(args) -> int:
    code = load_code(args.code)
    llrs = np.loadtxt(args.llr_file, dtype=float, ndmin=1)
    if llrs.size != code.n:
        print(f"error: expected {code.n} LLRs, got {llrs.size}", file=sys.stderr)
        return 1
    obs = ChannelObservation(llrs=llrs, evidence_log=args.evidence_log)
    t_value = _parse_threshold(args.threshold_T)
    if args.list_size is not None and args.list_size != code.list_size_ml:
        # A non-standard list size cannot feed the output-density identity;
        # report plain list decoding without the threshold test.
        paths, best = scl_decode(obs, code, args.list_size)
        from .code import polar_transform

        u_hat = paths[best].decisions
        doc = {
            "decision": "".join(str(int(b)) for b in polar_transform(u_hat)),
            "u_hat": "".join(str(int(b)) for b in u_hat),
            "pm_best": paths[best].pm,
        }
    else:
        outcome = gscl_decode(obs, code, t_value)
        doc = {
            "decision": (
                "erasure"
                if not outcome.accepted
                else "".join(str(int(b)) for b in outcome.codeword)
            ),
            "log_w_best": outcome.log_w_best,
            "log_p_y": outcome.log_p_y,
            "threshold_log": outcome.threshold_log,
        }
    text = json.dumps(doc, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def _cmd_simulate(args) -> int:
    try:
        code = load_code(args.code)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: cannot read code file: {exc}", file=sys.stderr)
        return 1
    t_values = tuple(_parse_threshold(t) for t in args.T)
    if args.channel == "biawgn":
        if not args.snr_db:
            print("error: --snr-db is required for biawgn", file=sys.stderr)
            return 2
        points = tuple(snr_point(db, code.k / code.n) for db in args.snr_db)
    else:
        if not args.epsilon:
            print("error: --epsilon is required for bec", file=sys.stderr)
            return 2
        points = tuple(float(e) for e in args.epsilon)
    workers = args.workers if args.workers is not None else _default_workers()
    config = SimConfig(
        code=code,
        channel=args.channel,
        snr_points=points,
        T_values=t_values,
        max_frames=args.max_frames,
        min_error_events=args.min_errors,
        master_seed=args.seed,
        workers=workers,
        info_source=args.info_source,
        chunk_frames=args.chunk_frames,
    )
    run_sweep(config, csv_path=args.out, meta_path=args.meta, gnuplot_path=args.emit_gnuplot)
    return 0


def _cmd_oracle_check(args) -> int:
    if args.n_max > 16:
        print("error: --n-max is limited to 16", file=sys.stderr)
        return 2
    report = run_oracle_check(n_max=args.n_max, trials=args.trials, seed=args.seed)
    for name, entry in report.checks.items():
        print(f"{name}: max deviation {entry.max_deviation:.3e} "
              f"({'ok' if entry.ok else 'FAIL'})")
    if not report.ok:
        print(f"FAILED: {report.first_failure}", file=sys.stderr)
        return 1
    print("all identity checks passed")
    return 0


_HANDLERS = {
    "construct": _cmd_construct,
    "encode": _cmd_encode,
    "decode": _cmd_decode,
    "simulate": _cmd_simulate,
    "oracle-check": _cmd_oracle_check,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    argv = _apply_config_file(parser, argv)
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
