"""``beamdenoise`` command line: run, denoise, theory."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import os
import sys

import numpy as np

from .channel_model import ChannelFileError, load_channels, save_channels
from .denoiser import DenoiserConfig, denoise
from .harness import ConfigError, emit_csv, load_config, run_experiment
from .numerics import inverse_unitary_dft, unitary_dft
from .theory import predict

SEED_ENV = "BEAMDENOISE_SEED"


def _cmd_run(args) -> int:
    spec = load_config(args.config)
    seed = spec.seed
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            seed = int(env, 0)
        except ValueError:
            raise ConfigError(f"{SEED_ENV}: cannot parse {env!r} as int") from None
    if args.seed is not None:
        seed = args.seed
    if seed != spec.seed:
        spec = dataclasses.replace(spec, seed=seed)
    rows = run_experiment(spec, threads=args.threads)
    emit_csv(rows, args.out)
    return 0


def _cmd_denoise(args) -> int:
    channels = load_channels(args.inp)
    cfg = DenoiserConfig(args.cost_c)
    out = np.empty_like(channels)
    report = []
    for i, h in enumerate(channels):
        y = h if args.beamspace else unitary_dft(h)
        res = denoise(y, cfg)
        out[i] = res.estimate if args.beamspace else inverse_unitary_dft(res.estimate)
        est = res.estimates_used
        report.append((i, res.tau, est.e0_elem, est.snr, est.q_hat, int(res.support.sum()), int(res.bypassed)))
    save_channels(args.out, out)
    if args.report:
        with open(args.report, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["record", "tau", "e0", "snr", "q_hat", "kept", "bypassed"])
            for row in report:
                w.writerow([format(v, ".9g") if isinstance(v, float) else v for v in row])
    return 0


def _cmd_theory(args) -> int:
    p = predict(args.e0, args.snr, args.q, args.cost_c)
    print(f"tau={p.tau:.9g}")
    print(f"p_d={p.p_d:.9g}")
    print(f"p_fa={p.p_fa:.9g}")
    print(f"mse={p.mse:.9g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="beamdenoise", description="Beamspace channel denoising toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment sweep and write CSV")
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True)
    run.add_argument("--seed", type=int, default=None, help=f"overrides the config and ${SEED_ENV}")
    run.add_argument("--threads", type=int, default=1)
    run.set_defaults(func=_cmd_run)

    den = sub.add_parser("denoise", help="denoise every channel vector in a file")
    den.add_argument("--in", dest="inp", required=True)
    den.add_argument("--out", required=True)
    den.add_argument("--cost-c", type=float, default=5.0)
    den.add_argument("--beamspace", action="store_true", help="input is already in beamspace")
    den.add_argument("--report", help="optional per-record CSV summary")
    den.set_defaults(func=_cmd_denoise)

    th = sub.add_parser("theory", help="print threshold, P_D, P_FA and predicted MSE")
    th.add_argument("--e0", type=float, required=True)
    th.add_argument("--snr", type=float, required=True, help="linear per-element SNR")
    th.add_argument("--q", type=float, required=True)
    th.add_argument("--cost-c", type=float, default=5.0)
    th.set_defaults(func=_cmd_theory)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        print("beamdenoise: error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ConfigError, ChannelFileError, ValueError, OSError) as exc:
        print(f"beamdenoise: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
