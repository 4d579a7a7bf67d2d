import itertools
import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfgf.core import (
    InvalidInputError,
    NonconformityMeasure,
    Sample,
    compute_scores,
    pvalue_pmf_given_bag,
    rank_of_candidate,
    ranks,
    transducer,
    transducer_values,
)

MAD = NonconformityMeasure.mean_abs_deviation()
ID = NonconformityMeasure.identity()


def test_mean_abs_deviation_scores_at_midpoint():
    sv = compute_scores(Sample([4, 5]), 4.5, MAD)
    np.testing.assert_allclose(sv.scores, [0.75, 0.75, 0.0])
    assert sv.candidate == 4.5
    assert rank_of_candidate(sv) == 1


def test_mean_abs_deviation_scores_off_centre():
    sv = compute_scores(Sample([4, 5]), 3.5, MAD)
    np.testing.assert_allclose(sv.scores, [0.25, 1.25, 1.0])
    assert rank_of_candidate(sv) == 2


def test_identity_scores_are_the_values():
    sv = compute_scores(Sample([1, 2, 3]), 7, ID)
    np.testing.assert_array_equal(sv.scores, [1, 2, 3, 7])
    assert rank_of_candidate(sv) == 4


@pytest.mark.parametrize("y, expected", [(4.5, Fraction(1)), (3.5, Fraction(2, 3)), (7, Fraction(1, 3))])
def test_transducer_two_point_example(y, expected):
    assert transducer(Sample([4, 5]), MAD, y) == expected


def test_rank_ties_count_zero():
    # y = 4 ties with t_1 = 0.5: strict inequality gives rank 1
    sv = compute_scores(Sample([4, 5]), 4.0, MAD)
    assert rank_of_candidate(sv) == 1


def test_custom_measure_matches_builtin():
    custom = NonconformityMeasure.custom(lambda bag, v: abs(np.mean(bag) - v))
    for y in (-1.0, 3.5, 4.2, 8.0):
        a = compute_scores(Sample([4, 5, 9]), y, custom).scores
        b = compute_scores(Sample([4, 5, 9]), y, MAD).scores
        np.testing.assert_allclose(a, b, rtol=1e-13)


def test_invalid_inputs():
    with pytest.raises(InvalidInputError):
        Sample([1.0])
    with pytest.raises(InvalidInputError):
        Sample([1.0, math.nan])
    with pytest.raises(InvalidInputError):
        compute_scores(Sample([1, 2]), math.inf, ID)
    with pytest.raises(InvalidInputError):
        NonconformityMeasure("other")
    with pytest.raises(InvalidInputError):
        NonconformityMeasure.from_name("bogus")


def test_strictly_distinct_flag():
    assert Sample([1, 2, 3]).strictly_distinct
    assert not Sample([1, 2, 2]).strictly_distinct


# -- bag-conditional p-value pmf --------------------------------------------------


def _brute_force_pmf(bag):
    """Enumerate every ordering of the bag; the last entry plays the candidate."""
    counts = Counter()
    perms = list(itertools.permutations(bag))
    for perm in perms:
        counts[sum(1 for t in perm if t >= perm[-1])] += 1
    return {k: Fraction(c, len(perms)) for k, c in counts.items()}


@pytest.mark.parametrize(
    "mult, expected",
    [
        ((1, 1, 1), {3: Fraction(1, 3), 2: Fraction(1, 3), 1: Fraction(1, 3)}),
        ((2, 1), {3: Fraction(2, 3), 1: Fraction(1, 3)}),
        ((3,), {3: Fraction(1)}),
    ],
)
def test_pvalue_pmf_examples(mult, expected):
    assert pvalue_pmf_given_bag(mult) == expected


@pytest.mark.parametrize("mult", [(1, 1, 1), (2, 1), (1, 2), (1, 1, 1, 1, 1), (2, 2, 1), (1, 3, 1), (4,)])
def test_pvalue_pmf_matches_enumeration(mult):
    bag = [k for k, m in enumerate(mult) for _ in range(m)]
    assert pvalue_pmf_given_bag(mult) == _brute_force_pmf(bag)


@pytest.mark.parametrize("bad", [(), (0, 1), (2, -1)])
def test_pvalue_pmf_rejects_bad_multiplicities(bad):
    with pytest.raises(InvalidInputError):
        pvalue_pmf_given_bag(bad)


def test_pvalue_pmf_sums_to_one():
    assert sum(pvalue_pmf_given_bag((3, 1, 4, 1, 5)).values()) == 1


# -- invariants ----------------------------------------------------------------

# values on a 1/64 lattice keep midpoints exactly representable
distinct_samples = st.lists(st.integers(-64_000, 64_000), min_size=2, max_size=12, unique=True).map(
    lambda xs: [x / 64 for x in xs]
)


@settings(max_examples=60, deadline=None)
@given(distinct_samples)
def test_identity_rank_is_a_unit_step_function(values):
    ys = np.sort(values)
    gaps = np.diff(ys)
    mids = np.concatenate([[ys[0] - 1], ys[:-1] + gaps / 2, [ys[-1] + 1]])
    r = ranks(Sample(values), ID, mids)
    np.testing.assert_array_equal(r, np.arange(1, len(values) + 2))


@settings(max_examples=60, deadline=None)
@given(distinct_samples, st.floats(-2e3, 2e3, allow_nan=False))
def test_transducer_rank_identity(values, y):
    sample = Sample(values)
    for measure in (ID, MAD):
        sv = compute_scores(sample, y, measure)
        if np.unique(sv.scores).size < sv.scores.size:
            continue
        n = sample.n
        assert transducer(sample, measure, y) == Fraction(n + 2 - rank_of_candidate(sv), n + 1)


@settings(max_examples=40, deadline=None)
@given(distinct_samples, st.floats(-2e3, 2e3, allow_nan=False), st.randoms(use_true_random=False))
def test_permutation_invariance(values, y, rnd):
    shuffled = list(values)
    rnd.shuffle(shuffled)
    for measure in (ID, MAD):
        a = compute_scores(Sample(values), y, measure)
        b = compute_scores(Sample(shuffled), y, measure)
        np.testing.assert_allclose(np.sort(a.scores), np.sort(b.scores), rtol=1e-12, atol=1e-12)
        assert rank_of_candidate(a) == rank_of_candidate(b)
        assert transducer(Sample(values), measure, y) == transducer(Sample(shuffled), measure, y)


def test_transducer_floor():
    sample = Sample([0.1, 0.7, 2.0])
    f = transducer_values(sample, MAD, np.linspace(-50, 50, 101))
    assert f.min() >= 1 / 4
