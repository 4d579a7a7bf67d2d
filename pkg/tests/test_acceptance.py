"""Acceptance gate: one test per criterion, each printing a single summary line."""

import time
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from mfgf.baselines import binomial_gf_endpoints, binomial_gf_sample
from mfgf.core import NonconformityMeasure, Sample, transducer
from mfgf.distributions import parse_distribution
from mfgf.experiments import (
    ExperimentConfig,
    focal_exceedance_probability,
    run_concentration,
    run_longitudinal,
    run_validity,
)
from mfgf.imprecise import evaluate
from mfgf.precise import (
    cp_analogue_sample,
    inverse_cdf_sample,
    med_from_partition,
    med_probability,
    med_sample,
)
from mfgf.regions import IntervalSet, focal_partition, focal_partition_numeric

MAD = NonconformityMeasure.mean_abs_deviation()
ID = NonconformityMeasure.identity()

# 1 - (1 - b)^n + (1 - c)^n at n=50, eps=0.005, tau=0, pinned before any run
FOCAL_EXCEEDANCE_PINNED = 0.808583426554134
# P(Y <= 2) for lognormal(meanlog=1, sdlog=2)
LOGNORMAL_F2 = 0.43903100974768944


def _report(k: int, ok: bool, detail: str) -> None:
    print(f"\nCRITERION {k}: {'PASS' if ok else 'FAIL'} {detail}")


def test_criterion_1_two_point_regression():
    start = time.perf_counter()
    sample = Sample([4, 5])
    inner = [4.01, 4.5, 4.99]
    middle = [3.01, 3.5, 3.99, 5.01, 5.5, 5.99]
    outer = [-100.0, 0.0, 2.99, 6.01, 9.0, 1e6]
    exact = all(transducer(sample, MAD, y) == 1 for y in inner)
    exact &= all(transducer(sample, MAD, y) == Fraction(2, 3) for y in middle)
    exact &= all(transducer(sample, MAD, y) == Fraction(1, 3) for y in outer)
    part = focal_partition_numeric(sample, MAD, (0, 9))
    inner_b = sorted({round(b, 6) for b in part.boundaries()} - {0.0, 9.0})
    err = max(abs(b - t) for b, t in zip(sorted(b for b in part.boundaries() if 0 < b < 9), [3, 4, 5, 6]))
    elapsed = time.perf_counter() - start
    ok = exact and inner_b == [3, 4, 5, 6] and err <= 1e-8 and elapsed < 1
    _report(1, ok, f"exact={exact} boundary_err={err:.2e} time={elapsed:.2f}s")
    assert exact
    assert inner_b == [3, 4, 5, 6]
    assert err <= 1e-8
    assert elapsed < 1


def test_criterion_2_validity():
    start = time.perf_counter()
    cfg = ExperimentConfig("validity", n=100, replicates=10_000, alpha=(0.05, 0.1, 0.2), seed=2024)
    rep = run_validity(cfg)
    elapsed = time.perf_counter() - start
    lines, ok = [], True
    for r in rep.rows:
        near = abs(r["estimate"] - r["oracle"]) <= 3 * r["se"]
        below = r["estimate"] <= r["alpha"] + 3 * r["se"]
        ok &= near and below
        lines.append(f"a={r['alpha']}: {r['estimate']:.4f} vs {r['oracle']:.4f} (se {r['se']:.4f})")
    ok &= elapsed < 120
    _report(2, ok, "; ".join(lines) + f" time={elapsed:.1f}s")
    for r in rep.rows:
        assert abs(r["estimate"] - r["oracle"]) <= 3 * r["se"]
        assert r["estimate"] <= r["alpha"] + 3 * r["se"]
    assert elapsed < 120


def test_criterion_3_focal_exceedance_oracle():
    exact = focal_exceedance_probability(50, 10, 0.0, 0.005)
    assert exact == pytest.approx(FOCAL_EXCEEDANCE_PINNED, abs=1e-12)
    start = time.perf_counter()
    cfg = ExperimentConfig(
        "concentration-focal", n=50, replicates=20_000, v=(10,), tau=0.0, epsilon=0.005, seed=10
    )
    rep = run_concentration(cfg)
    elapsed = time.perf_counter() - start
    est = rep.rows[0]["estimate"]
    ok = abs(est - FOCAL_EXCEEDANCE_PINNED) <= 0.01 and elapsed < 120
    _report(3, ok, f"estimate={est:.5f} pinned={FOCAL_EXCEEDANCE_PINNED:.5f} time={elapsed:.1f}s")
    assert abs(est - FOCAL_EXCEEDANCE_PINNED) <= 0.01
    assert elapsed < 120


def test_criterion_4_cdf_concentration_bound():
    start = time.perf_counter()
    cfg = ExperimentConfig("concentration-cdf", n=(500, 2000), replicates=2000, gamma=(0.0, 0.25), epsilon=0.1, seed=9)
    rep = run_concentration(cfg)
    elapsed = time.perf_counter() - start
    ok = all(r["estimate"] <= r["bound"] + 3 * r["se"] for r in rep.rows) and elapsed < 300
    detail = "; ".join(f"n={r['n']} g={r['gamma']}: {r['estimate']:.4f}<={r['bound']:.4f}" for r in rep.rows)
    _report(4, ok, detail + f" time={elapsed:.1f}s")
    for r in rep.rows:
        assert r["estimate"] <= r["bound"] + 3 * r["se"]
    assert elapsed < 300


def _random_event(rng, lo, hi):
    k = rng.integers(1, 4)
    pts = np.sort(rng.uniform(lo - 0.2 * (hi - lo), hi + 0.2 * (hi - lo), size=2 * k))
    pieces = [(a, bool(rng.integers(2)), b, bool(rng.integers(2))) for a, b in zip(pts[::2], pts[1::2])]
    return IntervalSet.from_pieces(pieces)


def test_criterion_5_credal_mass_and_sandwich():
    start = time.perf_counter()
    rng = np.random.default_rng(56)
    worst_mass, violations, checked = 0.0, 0, 0
    for i in range(100):
        n = int(rng.integers(2, 51))
        sample = Sample(rng.normal(size=n) * rng.uniform(0.5, 5))
        for measure in (ID, MAD):
            part = focal_partition(sample, measure)
            med = med_from_partition(part)
            for v in range(1, n + 2):
                worst_mass = max(worst_mass, abs(med_probability(med, part.region(v)) - 1 / (n + 1)))
            for _ in range(1000):
                ev = _random_event(rng, part.kappa_min, part.kappa_max)
                p = med_probability(med, ev)
                iv = evaluate(part, ev)
                if not iv.belief - 1e-12 <= p <= iv.plausibility + 1e-12:
                    violations += 1
                checked += 1
    elapsed = time.perf_counter() - start
    ok = worst_mass <= 1e-10 and violations == 0 and elapsed < 60
    _report(5, ok, f"max_mass_err={worst_mass:.1e} violations={violations}/{checked} time={elapsed:.1f}s")
    assert worst_mass <= 1e-10
    assert violations == 0
    assert elapsed < 60


def test_criterion_6_longitudinal_desk_scale():
    assert float(parse_distribution("lognormal(1,2)").cdf(2.0)) == pytest.approx(LOGNORMAL_F2, abs=1e-15)
    start = time.perf_counter()
    cfg = ExperimentConfig(
        "longitudinal", n=(10, 50, 100, 200), replicates=200, distribution="lognormal(1,2)", event="[0,2]", seed=5
    )
    rep = run_longitudinal(cfg)
    elapsed = time.perf_counter() - start
    med200 = next(r["med"] for r in rep.rows if r["n"] == 200)
    lomax = [r["lomax"] for r in rep.rows]
    ok = abs(med200 - 0.439) < 0.05 and max(lomax) < 0.25 and elapsed < 600
    _report(6, ok, f"med(n=200)={med200:.4f} lomax={[round(x, 4) for x in lomax]} time={elapsed:.1f}s")
    assert abs(med200 - 0.439) < 0.05
    assert max(lomax) < 0.25
    assert elapsed < 600


def test_criterion_7_binomial_demo():
    start = time.perf_counter()
    r4 = binomial_gf_sample(3, 10, 4, np.random.default_rng(71), 50_000)
    ks = stats.kstest(r4, stats.beta(4, 8).cdf).statistic
    lo, hi = binomial_gf_endpoints(3, 10, np.random.default_rng(72), 1000)
    r5 = binomial_gf_sample(3, 10, 5, np.random.default_rng(72), 1000)
    midpoints = bool(np.all(r5 == lo + 0.5 * (hi - lo)))
    elapsed = time.perf_counter() - start
    ok = ks < 0.01 and midpoints and elapsed < 30
    _report(7, ok, f"ks={ks:.4f} midpoints={midpoints} time={elapsed:.2f}s")
    assert ks < 0.01
    assert midpoints
    assert elapsed < 30


def test_criterion_8_sampler_fidelity_and_bimodal_contrast():
    start = time.perf_counter()
    two_point = focal_partition_numeric(Sample([4, 5]), MAD, (0, 9))
    med = med_from_partition(two_point)
    a = med_sample(med, np.random.default_rng(81), 50_000)
    b = inverse_cdf_sample(med, np.random.default_rng(82), 50_000)
    ks = stats.ks_2samp(a, b).statistic

    dist = parse_distribution("gaussian-mixture(0.5:-5:1,0.5:5:1)")
    ys = dist.sample(np.random.default_rng(83), 100)
    part = focal_partition(Sample(ys), MAD)
    between = IntervalSet.open(-1, 1)
    med_b = med_from_partition(part)
    med_mass = float(np.mean(between_mask(med_sample(med_b, np.random.default_rng(84), 50_000))))
    cp_mass = float(np.mean(between_mask(cp_analogue_sample(part, np.random.default_rng(85), 50_000))))
    exact_med_mass = med_probability(med_b, between)
    elapsed = time.perf_counter() - start
    ok = ks < 0.015 and med_mass < 0.01 and cp_mass > 0.05 and elapsed < 60
    _report(
        8,
        ok,
        f"ks={ks:.4f} med_between={med_mass:.4f} (exact {exact_med_mass:.4f}) cp_between={cp_mass:.4f} time={elapsed:.1f}s",
    )
    assert ks < 0.015
    assert med_mass < 0.01
    assert cp_mass > 0.05
    assert elapsed < 60


def between_mask(x):
    return np.abs(x) < 1
