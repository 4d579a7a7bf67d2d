"""Seeded Monte-Carlo harness for the validity, concentration and simulation studies.

Each replicate draws from its own generator seeded by ``(seed, experiment,
replicate)``, so results do not depend on how replicates are split across
workers.  Reports are plain rows of numbers and serialise byte-identically for
identical configurations.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import partial
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats

from .baselines import LomaxPredictive, lomax_fit
from .core import (
    AssumptionViolatedError,
    IDENTITY,
    MEAN_ABS_DEVIATION,
    InvalidInputError,
    NonconformityMeasure,
    Sample,
    transducer_values,
)
from .distributions import Distribution, parse_distribution
from .imprecise import evaluate
from .precise import (
    cp_analogue_sample,
    identity_med_cdf,
    med_from_partition,
    med_probability,
    med_sample,
)
from .regions import IntervalSet, focal_partition

SCHEMA_VERSION = "1"

EXPERIMENT_IDS = {
    "validity": 1,
    "concentration-cdf": 2,
    "concentration-focal": 3,
    "longitudinal": 4,
    "survival": 5,
    "figures": 6,
}

KINDS = tuple(EXPERIMENT_IDS)


def replicate_rng(seed: int, experiment: str, replicate: int, cell: tuple = ()) -> np.random.Generator:
    """Independent stream for one replicate of one cell of one experiment."""
    key = (EXPERIMENT_IDS[experiment], *(int(c) for c in cell), int(replicate))
    ss = np.random.SeedSequence(int(seed), spawn_key=key)
    return np.random.default_rng(ss)


@dataclass
class ExperimentConfig:
    kind: str
    n: Sequence[int] = (100,)
    replicates: int = 1000
    alpha: Sequence[float] = (0.1,)
    event: Optional[str] = None
    distribution: str = "gaussian(0,1)"
    measure: str = "identity"
    seed: int = 0
    prior_shape: float = 1.0
    prior_rate: float = 1.0
    out: Optional[str] = None
    # concentration studies
    gamma: Sequence[float] = (0.0,)
    tau: float = 0.0
    epsilon: float = 0.1
    v: Sequence[int] = ()
    y: Optional[float] = None
    # survival
    t_grid: Sequence[float] = tuple(range(0, 101))
    # figures
    draws: int = 10_000
    bins: int = 60
    curve_points: int = 400
    workers: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown experiment kind {self.kind!r}")
        self.n = tuple(int(v) for v in np.atleast_1d(self.n))
        self.alpha = tuple(float(a) for a in np.atleast_1d(self.alpha))
        self.gamma = tuple(float(g) for g in np.atleast_1d(self.gamma))
        self.v = tuple(int(x) for x in np.atleast_1d(self.v)) if len(np.atleast_1d(self.v)) else ()
        self.t_grid = tuple(float(t) for t in np.atleast_1d(self.t_grid))
        if self.replicates < 1:
            raise InvalidInputError("replicates must be at least 1")
        if not self.n or not self.alpha or not self.gamma or not self.t_grid:
            raise InvalidInputError("grids must be non-empty")
        if any(k < 2 for k in self.n):
            raise InvalidInputError("sample sizes must be at least 2")
        if self.workers < 1:
            raise InvalidInputError("workers must be at least 1")

    def echo(self) -> dict:
        d = asdict(self)
        d.pop("workers")
        d.pop("out")
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


@dataclass
class ExperimentReport:
    kind: str
    config: dict
    rows: list[dict]
    notes: list[str] = field(default_factory=list)
    tables: dict[str, list[dict]] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.get("pass", True) for r in self.rows)

    def to_csv(self) -> str:
        return _rows_to_csv(self.rows)

    def to_json(self) -> str:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind,
            "config": self.config,
            "notes": self.notes,
            "rows": self.rows,
            "tables": self.tables,
        }
        return json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n"

    def write(self, path: str, fmt: str = "csv") -> None:
        text = self.to_json() if fmt == "json" else self.to_csv()
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"not serialisable: {type(obj)}")


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _rows_to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    cols = list(rows[0])
    for r in rows[1:]:
        cols.extend(k for k in r if k not in cols)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(r.get(c, "")) for c in cols])
    return buf.getvalue()


def run_replicates(fn: Callable[[int], object], replicates: int, workers: int = 1) -> list:
    """Evaluate ``fn(r)`` for ``r = 0..replicates-1``, results in replicate order.

    ``fn`` must be picklable when ``workers > 1``.
    """
    if workers <= 1 or replicates < 2:
        return [fn(r) for r in range(replicates)]
    chunks = np.array_split(np.arange(replicates), workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(_run_chunk, [fn] * len(chunks), [c.tolist() for c in chunks])
        out = []
        for part in parts:
            out.extend(part)
    return out


def _run_chunk(fn, indices):
    return [fn(r) for r in indices]


def _mc_se(p: float, reps: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / reps)


def _measure(config: ExperimentConfig) -> NonconformityMeasure:
    return NonconformityMeasure.from_name(config.measure)


def _continuous(config: ExperimentConfig) -> Distribution:
    dist = parse_distribution(config.distribution)
    if not dist.continuous:
        raise AssumptionViolatedError(f"{config.distribution} is discrete; the study assumes continuous data")
    return dist


# -- validity ----------------------------------------------------------------


def transducer_batch(y: np.ndarray, measure: NonconformityMeasure) -> np.ndarray:
    """``f_n`` of the last column given the others, for each row of ``y``."""
    y = np.asarray(y, dtype=float)
    n = y.shape[1] - 1
    if measure.kind == IDENTITY:
        t = y
    elif measure.kind == MEAN_ABS_DEVIATION:
        t = np.abs((y.sum(axis=1, keepdims=True) - y) / n - y)
    else:
        return np.array([transducer_values(row[:-1], measure, [row[-1]])[0] for row in y])
    return np.count_nonzero(t[:, -1:] <= t, axis=1) / (n + 1)


def _draw_rows(dist: Distribution, size: int, seed: int, kind: str, rep: int) -> np.ndarray:
    return dist.sample(replicate_rng(seed, kind, rep, (size - 1,)), size)


def exact_type1_rate(n: int, alpha: float) -> Fraction:
    """``floor(alpha (n+1)) / (n+1)``: the error rate for untied scores."""
    a = Fraction(str(alpha))
    return Fraction(math.floor(a * (n + 1)), n + 1)


def run_validity(config: ExperimentConfig) -> ExperimentReport:
    """Type-1 error of ``{y : f_n(y) > alpha}`` for a fresh exchangeable point."""
    dist = _continuous(config)
    measure = _measure(config)
    for a in config.alpha:
        if not 0 < a < 1:
            raise InvalidInputError(f"alpha must lie in (0, 1), got {a}")
    rows, dist_rows = [], []
    R = config.replicates
    for n in config.n:
        draw = partial(_draw_rows, dist, n + 1, config.seed, "validity")
        y = np.vstack(run_replicates(draw, R, config.workers))
        f = transducer_batch(y, measure)
        counts = np.rint(f * (n + 1)).astype(int)
        freq = np.bincount(counts, minlength=n + 2)[1:] / R
        uniform = 1.0 / (n + 1)
        chi = stats.chisquare(freq * R, np.full(n + 1, R * uniform))
        for k, q in enumerate(freq, start=1):
            dist_rows.append({"n": n, "f_value": k / (n + 1), "frequency": float(q), "oracle": uniform})
        for a in config.alpha:
            rate = float(np.mean(f <= a))
            se = _mc_se(rate, R)
            exact = exact_type1_rate(n, a)
            oracle_se = _mc_se(float(exact), R)
            rows.append(
                {
                    "experiment": "validity",
                    "seed": config.seed,
                    "n": n,
                    "alpha": a,
                    "replicates": R,
                    "distribution": config.distribution,
                    "measure": config.measure,
                    "estimate": rate,
                    "se": se,
                    "oracle": float(exact),
                    "abs_error": abs(rate - float(exact)),
                    "oracle_se": oracle_se,
                    "within_oracle": abs(rate - float(exact)) <= 3 * oracle_se + 1e-15,
                    "pmf_max_abs_dev": float(np.max(np.abs(freq - uniform))),
                    "pmf_chisq_pvalue": float(chi.pvalue),
                    "pass": rate <= a + 3 * se + 1e-15,
                }
            )
    return ExperimentReport("validity", config.echo(), rows, tables={"pvalue_distribution": dist_rows})


# -- concentration -------------------------------------------------------------


def cdf_concentration_bound(n: int, gamma: float, epsilon: float, F_y: float) -> float:
    """Right-hand side of the pointwise CDF concentration inequality."""
    if F_y <= 0:
        return 0.0
    return 2.0 * math.exp(-(epsilon**2) / 8.0 * n ** (1.0 - 2.0 * gamma)) + math.exp(-n * F_y)


def focal_exceedance_probability(n: int, v: int, tau: float, epsilon: float) -> float:
    """Exact ``P(n^tau |Pi(A_v) - P(A_v)| > epsilon)`` under the Identity measure."""
    if v in (1, n + 1):
        return float(n**tau / (n + 1) > epsilon)
    if not 2 <= v <= n:
        raise InvalidInputError(f"v must lie in 1..{n + 1}")
    b = max(1.0 / (n + 1) - epsilon / n**tau, 0.0)
    c = min(1.0 / (n + 1) + epsilon / n**tau, 1.0)
    return 1.0 - (1.0 - b) ** n + (1.0 - c) ** n


def _sorted_draw(dist: Distribution, n: int, seed: int, kind: str, rep: int) -> np.ndarray:
    return np.sort(dist.sample(replicate_rng(seed, kind, rep, (n,)), n))


def _focal_gap(dist: Distribution, n: int, vs: tuple, seed: int, rep: int) -> np.ndarray:
    """``|Pi(A_v) - P(A_v)|`` for each requested ``v``, from the actual MED."""
    ys = _sorted_draw(dist, n, seed, "concentration-focal", rep)
    part = focal_partition(Sample(ys), NonconformityMeasure.identity())
    med = med_from_partition(part)
    out = []
    for v in vs:
        region = part.region(v)
        if region.is_point:
            true_mass = 0.0
        else:
            lo, hi = region.bounds
            true_mass = float(dist.cdf(hi) - dist.cdf(lo))
        out.append(abs(med_probability(med, region) - true_mass))
    return np.array(out)


def run_concentration(config: ExperimentConfig) -> ExperimentReport:
    """Concentration of the MED around the data law (Identity measure).

    ``concentration-cdf`` checks ``n^gamma |Pi((-inf,y]) - F(y)| > epsilon``
    against its exponential bound; ``concentration-focal`` checks focal-set
    masses against their exact exceedance probability.
    """
    if config.measure.lower() not in ("identity", "id"):
        raise InvalidInputError("concentration studies use the Identity measure")
    if config.epsilon <= 0:
        raise InvalidInputError("epsilon must be positive")
    dist = _continuous(config)
    R = config.replicates
    rows = []
    if config.kind == "concentration-focal":
        if not 0 <= config.tau < 1:
            raise InvalidInputError(f"tau must lie in [0, 1), got {config.tau}")
        for n in config.n:
            vs = config.v or (n // 5,)
            fn = partial(_focal_gap, dist, n, tuple(vs), config.seed)
            gaps = np.vstack(run_replicates(fn, R, config.workers))
            for j, v in enumerate(vs):
                freq = float(np.mean(n**config.tau * gaps[:, j] > config.epsilon))
                exact = focal_exceedance_probability(n, v, config.tau, config.epsilon)
                se = _mc_se(freq, R)
                oracle_se = _mc_se(exact, R)
                rows.append(
                    {
                        "experiment": "concentration-focal",
                        "seed": config.seed,
                        "n": n,
                        "v": v,
                        "tau": config.tau,
                        "epsilon": config.epsilon,
                        "replicates": R,
                        "distribution": config.distribution,
                        "estimate": freq,
                        "se": se,
                        "oracle": exact,
                        "abs_error": abs(freq - exact),
                        "pass": abs(freq - exact) <= 3 * max(se, oracle_se) + 1e-15,
                    }
                )
        return ExperimentReport(config.kind, config.echo(), rows)

    for g in config.gamma:
        if not 0 <= g < 0.5:
            raise InvalidInputError(f"gamma must lie in [0, 0.5), got {g}")
    y = dist.median() if config.y is None else float(config.y)
    F_y = float(dist.cdf(y))
    for n in config.n:
        fn = partial(_sorted_draw, dist, n, config.seed, "concentration-cdf")
        samples = run_replicates(fn, R, config.workers)
        gap = np.array([abs(float(identity_med_cdf(ys, y)) - F_y) for ys in samples])
        for g in config.gamma:
            freq = float(np.mean(n**g * gap > config.epsilon))
            se = _mc_se(freq, R)
            bound = cdf_concentration_bound(n, g, config.epsilon, F_y)
            rows.append(
                {
                    "experiment": "concentration-cdf",
                    "seed": config.seed,
                    "n": n,
                    "gamma": g,
                    "epsilon": config.epsilon,
                    "y": y,
                    "replicates": R,
                    "distribution": config.distribution,
                    "estimate": freq,
                    "se": se,
                    "bound": bound,
                    "bound_applies": n > 4 * n**g / config.epsilon - 1,
                    "pass": freq <= bound + 3 * se + 1e-15,
                }
            )
    return ExperimentReport(config.kind, config.echo(), rows)


# -- simulation studies --------------------------------------------------------


def lomax_event_probability(pred: LomaxPredictive, event: IntervalSet) -> float:
    total = 0.0
    for p in event.pieces:
        lo, hi = max(p.lo, 0.0), max(p.hi, 0.0)
        if hi > lo:
            total += (1.0 if math.isinf(hi) else pred.cdf(hi)) - pred.cdf(lo)
    return float(total)


def _event_replicate(config: ExperimentConfig, dist: Distribution, events: tuple, n: int, kind: str, rep: int):
    """Lomax, MED, belief and plausibility probabilities of each event for one data set."""
    rng = replicate_rng(config.seed, kind, rep, (n,))
    ys = dist.sample(rng, n)
    sample = Sample(ys)
    part = focal_partition(sample, _measure(config))
    med = med_from_partition(part)
    pred = lomax_fit(sample, config.prior_shape, config.prior_rate)
    out = np.empty((len(events), 4))
    for i, ev in enumerate(events):
        iv = evaluate(part, ev)
        out[i] = (lomax_event_probability(pred, ev), med_probability(med, ev), iv.belief, iv.plausibility)
    return out


def _summarise(vals: np.ndarray) -> tuple[float, float]:
    se = float(np.std(vals, ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
    return float(np.mean(vals)), se


def _event_rows(config, dist, events, labels, kind) -> list[dict]:
    rows = []
    R = config.replicates
    for n in config.n:
        fn = partial(_event_replicate, config, dist, tuple(events), n, kind)
        res = np.stack(run_replicates(fn, R, config.workers))  # (R, events, 4)
        for i, (ev, label) in enumerate(zip(events, labels)):
            lomax, med, bel, pl = (res[:, i, j] for j in range(4))
            truth = dist.probability(ev)
            row = {"experiment": kind, "seed": config.seed, "n": n}
            row.update(label)
            row.update({"replicates": R, "true": truth})
            for name, vals in (("lomax", lomax), ("med", med), ("belief", bel), ("plausibility", pl)):
                m, se = _summarise(vals)
                row[name] = m
                row[f"{name}_se"] = se
            violations = int(np.sum((bel > med + 1e-12) | (med > pl + 1e-12)))
            row.update(
                {
                    "sandwich_violations": violations,
                    "prior_shape": config.prior_shape,
                    "prior_rate": config.prior_rate,
                    "pass": violations == 0,
                }
            )
            rows.append(row)
    return rows


def run_longitudinal(config: ExperimentConfig) -> ExperimentReport:
    """Average Lomax, MED, belief and plausibility probabilities of one event per n."""
    dist = _continuous(config)
    event = IntervalSet.parse(config.event or "[0,2]")
    rows = _event_rows(config, dist, [event], [{"event": str(event)}], "longitudinal")
    notes = [f"gamma prior (shape, rate) = ({config.prior_shape}, {config.prior_rate}) on the exponential rate"]
    return ExperimentReport("longitudinal", config.echo(), rows, notes)


def run_survival(config: ExperimentConfig) -> ExperimentReport:
    """Survival ``P(Y >= t)`` on a grid of t by each approach, per n."""
    dist = _continuous(config)
    events = [IntervalSet.from_pieces([(t, False, math.inf, True)]) for t in config.t_grid]
    labels = [{"t": t} for t in config.t_grid]
    rows = _event_rows(config, dist, events, labels, "survival")
    notes = [
        f"gamma prior (shape, rate) = ({config.prior_shape}, {config.prior_rate}) on the exponential rate",
        "support is truncated to the data range, so belief([t, inf)) can fall below 1 at t = 0",
    ]
    return ExperimentReport("survival", config.echo(), rows, notes)


# -- figures -------------------------------------------------------------------


def emit_figures(config: ExperimentConfig) -> dict[str, str]:
    """Write the raw ingredients of the sampler histograms and transducer plots.

    Files (prefix ``config.out``): ``_data.csv``, ``_samples.csv`` (MED and
    CP-analogue draws), ``_hist.csv`` (shared bins, counts and true density)
    and ``_transducer.csv``.  Returns a mapping from name to path.
    """
    dist = _continuous(config)
    measure = _measure(config)
    n = config.n[0]
    prefix = config.out or "figures"
    data_rng = replicate_rng(config.seed, "figures", 0)
    ys = dist.sample(data_rng, n)
    sample = Sample(ys)
    part = focal_partition(sample, measure)
    med = med_from_partition(part)
    med_draws = med_sample(med, replicate_rng(config.seed, "figures", 1), config.draws)
    cp_draws = cp_analogue_sample(part, replicate_rng(config.seed, "figures", 2), config.draws)
    lo, hi = part.kappa_min, part.kappa_max
    edges = np.linspace(lo, hi, config.bins + 1)
    grid = np.linspace(lo, hi, config.curve_points)
    curve = transducer_values(sample, measure, grid)

    paths = {k: f"{prefix}_{k}.csv" for k in ("data", "samples", "hist", "transducer")}
    directory = os.path.dirname(prefix)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(paths["data"], "w") as fh:
        fh.write(_rows_to_csv([{"i": i, "y": float(v)} for i, v in enumerate(ys)]))
    with open(paths["samples"], "w") as fh:
        fh.write(
            _rows_to_csv([{"draw": i, "med": float(a), "cp": float(b)} for i, (a, b) in enumerate(zip(med_draws, cp_draws))])
        )
    counts = [np.histogram(x, bins=edges)[0] for x in (ys, med_draws, cp_draws)]
    mids = 0.5 * (edges[:-1] + edges[1:])
    true_density = dist.pdf(mids)
    with open(paths["hist"], "w") as fh:
        fh.write(
            _rows_to_csv(
                [
                    {
                        "bin_lo": float(edges[i]),
                        "bin_hi": float(edges[i + 1]),
                        "data": int(counts[0][i]),
                        "med": int(counts[1][i]),
                        "cp": int(counts[2][i]),
                        "true_density": float(true_density[i]),
                    }
                    for i in range(config.bins)
                ]
            )
        )
    with open(paths["transducer"], "w") as fh:
        fh.write(_rows_to_csv([{"y": float(a), "f": float(b)} for a, b in zip(grid, curve)]))
    return paths


def run(config: ExperimentConfig):
    if config.kind == "validity":
        return run_validity(config)
    if config.kind.startswith("concentration"):
        return run_concentration(config)
    if config.kind == "longitudinal":
        return run_longitudinal(config)
    if config.kind == "survival":
        return run_survival(config)
    return emit_figures(config)
