"""Command line entry point: ``mfgf <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .baselines import D_CHOICES, binomial_gf_sample
from .core import InvalidInputError, NonconformityMeasure, Sample, transducer_values, ranks
from .distributions import parse_distribution
from .experiments import (
    ExperimentConfig,
    _rows_to_csv,
    emit_figures,
    replicate_rng,
    run_concentration,
    run_longitudinal,
    run_survival,
    run_validity,
)
from .imprecise import evaluate
from .precise import cp_analogue_sample, med_from_partition, med_probability, med_sample
from .regions import IntervalSet, focal_partition


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _grid(text: str) -> list[float]:
    """``a:b:step`` inclusive range or a comma list."""
    if ":" in text:
        a, b, step = (float(x) for x in text.split(":"))
        count = int(round((b - a) / step)) + 1
        return [a + i * step for i in range(count)]
    return _floats(text)


def _common(p: argparse.ArgumentParser, n_default: str = "100", reps: int = 1000) -> None:
    p.add_argument("--n", default=n_default, help="sample size or comma list of sizes")
    p.add_argument("--reps", type=int, default=reps, help="Monte-Carlo replicates")
    p.add_argument("--alpha", default="0.1", help="significance level(s), comma separated")
    p.add_argument("--dist", default="gaussian(0,1)", help="data generator, e.g. lognormal(1,2)")
    p.add_argument("--measure", choices=("identity", "meandev"), default="identity")
    p.add_argument("--event", default=None, help='interval list such as "[0,2]" or "(3.9,5.1),[7,inf)"')
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--prior-shape", type=float, default=1.0)
    p.add_argument("--prior-rate", type=float, default=1.0)
    p.add_argument("--out", default=None, help="output path (stdout if omitted)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--workers", type=int, default=1)


def _data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", default=None, help="comma-separated observations; otherwise drawn from --dist")
    p.add_argument("--bounds", default=None, help="truncation bounds lo,hi")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mfgf", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validity", help="type-1 error of GF prediction sets")
    _common(p, reps=10_000)

    p = sub.add_parser("concentration", help="MED concentration around the data law")
    _common(p, n_default="500,2000", reps=2000)
    p.add_argument("--mode", choices=("cdf", "focal"), default="cdf")
    p.add_argument("--gamma", default="0,0.25")
    p.add_argument("--tau", type=float, default=0.0)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--v", default="", help="focal-set ranks for --mode focal")
    p.add_argument("--y", type=float, default=None, help="CDF evaluation point (default: median)")

    p = sub.add_parser("longitudinal", help="probability of an event across sample sizes")
    _common(p, n_default="10,50,100,200", reps=200)
    p.set_defaults(dist="lognormal(1,2)")

    p = sub.add_parser("survival", help="survival probabilities over a time grid")
    _common(p, n_default="10,100", reps=200)
    p.add_argument("--t-grid", default="0:100:1")
    p.set_defaults(dist="lognormal(1,2)")

    p = sub.add_parser("figures", help="sampler histograms and transducer curve as CSV")
    _common(p)
    p.add_argument("--draws", type=int, default=10_000)
    p.add_argument("--bins", type=int, default=60)
    p.set_defaults(measure="meandev")

    p = sub.add_parser("transducer", help="transducer and rank on a grid")
    _common(p)
    _data_args(p)
    p.add_argument("--y", default=None, help="points (comma list) or lo:hi:step")

    p = sub.add_parser("belief", help="belief, plausibility and MED probability of an event")
    _common(p)
    _data_args(p)

    p = sub.add_parser("sample", help="draw from the MED or its CP analogue")
    _common(p)
    _data_args(p)
    p.add_argument("--size", type=int, default=1000)
    p.add_argument("--sampler", choices=("med", "cp"), default="med")

    p = sub.add_parser("binomial-demo", help="precise binomial GF draws for the five D choices")
    p.add_argument("--y", type=int, default=3)
    p.add_argument("--m", type=int, default=10)
    p.add_argument("--choice", default="1,2,3,4,5")
    p.add_argument("--size", type=int, default=50_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def _config(args, kind: str, **extra) -> ExperimentConfig:
    return ExperimentConfig(
        kind=kind,
        n=_ints(args.n),
        replicates=args.reps,
        alpha=_floats(args.alpha),
        event=args.event,
        distribution=args.dist,
        measure=args.measure,
        seed=args.seed,
        prior_shape=args.prior_shape,
        prior_rate=args.prior_rate,
        out=args.out,
        workers=args.workers,
        **extra,
    )


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_rows(rows: list[dict], args, meta: Optional[dict] = None) -> None:
    if args.format == "json":
        doc = {"schema_version": "1", "rows": rows}
        if meta:
            doc.update(meta)
        _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.out)
    else:
        _emit(_rows_to_csv(rows), args.out)


def _sample_and_partition(args):
    if args.data:
        sample = Sample(_floats(args.data))
    else:
        n = _ints(args.n)[0]
        sample = Sample(parse_distribution(args.dist).sample(replicate_rng(args.seed, "figures", 0), n))
    measure = NonconformityMeasure.from_name(args.measure)
    bounds = tuple(_floats(args.bounds)) if args.bounds else None
    return sample, measure, focal_partition(sample, measure, bounds)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (InvalidInputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    cmd = args.command
    if cmd == "validity":
        report = run_validity(_config(args, "validity"))
    elif cmd == "concentration":
        kind = "concentration-cdf" if args.mode == "cdf" else "concentration-focal"
        report = run_concentration(
            _config(
                args,
                kind,
                gamma=_floats(args.gamma),
                tau=args.tau,
                epsilon=args.epsilon,
                v=_ints(args.v),
                y=args.y,
            )
        )
    elif cmd == "longitudinal":
        report = run_longitudinal(_config(args, "longitudinal"))
    elif cmd == "survival":
        report = run_survival(_config(args, "survival", t_grid=_grid(args.t_grid)))
    elif cmd == "figures":
        cfg = _config(args, "figures", draws=args.draws, bins=args.bins)
        if cfg.out is None:
            cfg.out = "figures"
        for name, path in emit_figures(cfg).items():
            print(f"{name}: {path}")
        return 0
    elif cmd == "transducer":
        sample, measure, part = _sample_and_partition(args)
        ys = np.array(_grid(args.y)) if args.y else np.linspace(part.kappa_min, part.kappa_max, 201)
        f = transducer_values(sample, measure, ys)
        r = ranks(sample, measure, ys)
        rows = [{"y": float(a), "f": float(b), "rank": int(c)} for a, b, c in zip(ys, f, r)]
        _emit_rows(rows, args)
        return 0
    elif cmd == "belief":
        sample, measure, part = _sample_and_partition(args)
        event = IntervalSet.parse(args.event or "[0,2]")
        iv = evaluate(part, event)
        med = med_from_partition(part)
        rows = [
            {
                "event": str(event),
                "n": sample.n,
                "belief": iv.belief,
                "plausibility": iv.plausibility,
                "med": med_probability(med, event),
            }
        ]
        _emit_rows(rows, args, {"partition": part.to_json(), "med": med.to_json()})
        return 0
    elif cmd == "sample":
        sample, measure, part = _sample_and_partition(args)
        rng = replicate_rng(args.seed, "figures", 1)
        if args.sampler == "med":
            draws = med_sample(med_from_partition(part), rng, args.size)
        else:
            draws = cp_analogue_sample(part, rng, args.size)
        _emit_rows([{"draw": i, "y": float(x)} for i, x in enumerate(draws)], args)
        return 0
    elif cmd == "binomial-demo":
        rows = []
        for choice in _ints(args.choice):
            rng = np.random.default_rng(np.random.SeedSequence(args.seed, spawn_key=(7, choice)))
            r = binomial_gf_sample(args.y, args.m, choice, rng, args.size)
            ks = stats.kstest(r, stats.beta(args.y + 1, args.m - args.y + 1).cdf).statistic
            rows.append(
                {
                    "choice": choice,
                    "d": D_CHOICES[choice],
                    "y": args.y,
                    "m": args.m,
                    "draws": args.size,
                    "mean": float(np.mean(r)),
                    "sd": float(np.std(r, ddof=1)),
                    "ks_vs_beta": float(ks),
                }
            )
        _emit_rows(rows, args)
        return 0
    else:  # pragma: no cover - argparse rejects unknown commands
        raise InvalidInputError(cmd)

    text = report.to_json() if args.format == "json" else report.to_csv()
    _emit(text, args.out)
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
