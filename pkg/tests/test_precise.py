import json
import math

import numpy as np
import pytest
from scipy import stats

from mfgf.core import NonconformityMeasure, Sample
from mfgf.precise import (
    MEDistribution,
    TiePathologyError,
    TruncationRequiredError,
    cp_analogue_sample,
    differential_entropy,
    identity_med_cdf,
    inverse_cdf_sample,
    med_cdf,
    med_from_partition,
    med_probability,
    med_quantile,
    med_sample,
    piecewise_entropy,
)
from mfgf.regions import FocalPartition, IntervalSet, focal_partition, focal_partition_numeric

MAD = NonconformityMeasure.mean_abs_deviation()
ID = NonconformityMeasure.identity()


@pytest.fixture(scope="module")
def two_point():
    return focal_partition_numeric(Sample([4, 5]), MAD, (0, 9))


def test_identity_three_points():
    med = med_from_partition(focal_partition(Sample([1, 2, 3]), ID))
    np.testing.assert_allclose(med.atoms, [[1, 0.25], [3, 0.25]])
    np.testing.assert_allclose(med.pieces, [[1, 2, 0.25], [2, 3, 0.25]])
    assert med.total_mass == pytest.approx(1.0, abs=1e-15)
    assert med_probability(med, IntervalSet.parse("(-inf,2.5]")) == pytest.approx(0.625, abs=1e-15)


def test_identity_two_points():
    med = med_from_partition(focal_partition(Sample([4, 5]), ID))
    np.testing.assert_allclose(med.pieces, [[4, 5, 1 / 3]])
    assert med_probability(med, IntervalSet.open(4, 5)) == pytest.approx(1 / 3, abs=1e-15)
    assert med_probability(med, IntervalSet.point(4)) == pytest.approx(1 / 3, abs=1e-15)


def test_two_point_densities(two_point):
    med = med_from_partition(two_point)
    np.testing.assert_allclose(med.density([4.5, 3.5, 5.5, 1.0, 8.0]), [1 / 3, 1 / 6, 1 / 6, 1 / 18, 1 / 18], rtol=1e-9)
    assert med.density(10.0)[0] == 0.0
    assert med_probability(med, IntervalSet.open(3.9, 5.1)) == pytest.approx(1 / 3 + 0.2 / 6, abs=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_every_focal_set_gets_equal_mass(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 30))
    sample = Sample(rng.normal(size=n))
    for measure in (ID, MAD):
        part = focal_partition(sample, measure)
        med = med_from_partition(part)
        for v in range(1, n + 2):
            assert med.region_mass(v) == pytest.approx(1 / (n + 1), abs=1e-10)
            assert med_probability(med, part.region(v)) == pytest.approx(1 / (n + 1), abs=1e-10)


def test_med_sample_point_frequency():
    med = med_from_partition(focal_partition(Sample([4, 5]), ID))
    x = med_sample(med, np.random.default_rng(0), 30_000)
    assert abs(np.mean(x == 4) - 1 / 3) < 0.01
    assert abs(np.mean(x == 5) - 1 / 3) < 0.01
    assert np.all((x >= 4) & (x <= 5))


def test_med_sample_ecdf():
    med = med_from_partition(focal_partition(Sample([1, 2, 3]), ID))
    x = med_sample(med, np.random.default_rng(1), 30_000)
    assert abs(np.mean(x <= 2.5) - 0.625) < 0.01
    assert isinstance(med_sample(med, np.random.default_rng(1)), float)


def test_sampler_matches_inverse_cdf_oracle(two_point):
    med = med_from_partition(two_point)
    a = med_sample(med, np.random.default_rng(2), 50_000)
    b = inverse_cdf_sample(med, np.random.default_rng(3), 50_000)
    assert stats.ks_2samp(a, b).statistic < 0.015


@pytest.mark.parametrize("seed", range(5))
def test_identity_cdf_closed_form(seed):
    rng = np.random.default_rng(seed)
    ys = np.sort(rng.normal(size=25))
    med = med_from_partition(focal_partition(Sample(ys), ID))
    grid = np.concatenate([np.linspace(ys[0] - 1, ys[-1] + 1, 301), ys])
    np.testing.assert_allclose(identity_med_cdf(ys, grid), med_cdf(med, grid), atol=1e-12)


def test_quantile_inverts_cdf(two_point):
    med = med_from_partition(two_point)
    u = np.linspace(0.01, 0.99, 50)
    np.testing.assert_allclose(med_cdf(med, med_quantile(med, u)), u, atol=1e-9)


def test_quantile_hits_atoms():
    med = med_from_partition(focal_partition(Sample([1, 2, 3]), ID))
    np.testing.assert_array_equal(med_quantile(med, [0.1, 0.24, 0.9]), [1.0, 1.0, 3.0])


# -- entropy -----------------------------------------------------------------------


def test_entropy_closed_form(two_point):
    med = med_from_partition(two_point)
    n = 2
    lengths = [r.lebesgue for r in two_point.regions]
    expected = sum(math.log(L * (n + 1)) / (n + 1) for L in lengths)
    assert differential_entropy(med) == pytest.approx(expected, rel=1e-9)


def test_entropy_ignores_atoms():
    med = med_from_partition(focal_partition(Sample([1, 2, 3]), ID))
    assert differential_entropy(med) == pytest.approx(2 * 0.25 * math.log(4), rel=1e-12)


def test_med_maximises_entropy_in_credal_set(two_point):
    """Perturbing the density inside each focal set, mass fixed, never raises entropy."""
    med = med_from_partition(two_point)
    h_max = differential_entropy(med)
    rng = np.random.default_rng(11)
    for _ in range(200):
        edges, dens = [], []
        for lo, hi, d in med.pieces:
            k = int(rng.integers(1, 6))
            cuts = np.sort(rng.uniform(lo, hi, size=k - 1))
            e = np.concatenate([[lo], cuts, [hi]])
            w = rng.dirichlet(np.ones(k))
            dens.extend(w * d * (hi - lo) / np.diff(e))
            edges.append(e)
        # merge per-piece edges into a single ascending grid
        grid = np.concatenate([edges[0]] + [e[1:] for e in edges[1:]])
        assert piecewise_entropy(grid, np.array(dens)) <= h_max + 1e-9


# -- CP analogue ---------------------------------------------------------------------


def test_cp_analogue_concentrates_on_inner_sets(two_point):
    x = cp_analogue_sample(two_point, np.random.default_rng(4), 60_000)
    inner = np.mean((x > 4) & (x < 5))
    # 1/3 + 1/3 * 1/3 + 1/3 * 1/9
    assert abs(inner - 13 / 27) < 0.01
    assert np.all((x >= 0) & (x <= 9))


def test_bimodal_contrast():
    rng = np.random.default_rng(5)
    ys = np.concatenate([rng.normal(-5, 1, 50), rng.normal(5, 1, 50)])
    part = focal_partition(Sample(ys), MAD)
    med = med_from_partition(part)
    a = med_sample(med, np.random.default_rng(6), 20_000)
    b = cp_analogue_sample(part, np.random.default_rng(7), 20_000)
    assert np.mean(np.abs(a) < 1) < 0.01
    assert np.mean(np.abs(b) < 1) > 0.05


# -- serialisation and errors --------------------------------------------------------


def test_json_round_trip(two_point):
    med = med_from_partition(two_point)
    again = MEDistribution.from_json(json.dumps(med.to_json()))
    np.testing.assert_array_equal(again.pieces, med.pieces)
    np.testing.assert_array_equal(again.piece_region, med.piece_region)
    assert again.support == med.support
    assert again.n_regions == med.n_regions


def test_json_round_trip_with_atoms():
    med = med_from_partition(focal_partition(Sample([1, 2, 3]), ID))
    again = MEDistribution.from_json(med.to_json())
    np.testing.assert_array_equal(again.atoms, med.atoms)
    assert again.to_json() == med.to_json()


def test_empty_focal_set_rejected():
    part = FocalPartition((IntervalSet.closed(0, 1), IntervalSet.empty(), IntervalSet.parse("(1,2]")), 0.0, 2.0)
    with pytest.raises(TiePathologyError):
        med_from_partition(part)


def test_infinite_focal_set_rejected():
    part = FocalPartition((IntervalSet.closed(0, 1), IntervalSet.parse("(1,2]"), IntervalSet.parse("(2,inf)")), 0.0, math.inf)
    with pytest.raises(TruncationRequiredError):
        med_from_partition(part)


def test_multi_point_focal_set_rejected():
    part = FocalPartition(
        (IntervalSet.parse("(0,1)"), IntervalSet.parse("0,1"), IntervalSet.parse("(1,2]")), 0.0, 2.0
    )
    with pytest.raises(TiePathologyError):
        med_from_partition(part)
