"""Samples, nonconformity measures, score vectors and candidate ranks.

Everything here is a pure function of immutable inputs.  Score arithmetic is
done in double precision and rank comparisons use exact floating equality:
the rank of a candidate is ``1 + #{i : t_cand > t_i}`` with ties contributing
nothing.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np


class InvalidInputError(ValueError):
    """Raised when an argument violates an operation's precondition."""


class AssumptionViolatedError(ValueError):
    """Raised when data break the exchangeable-and-continuous assumption (ties)."""


@dataclass(frozen=True)
class Sample:
    """An ordered collection of real observations ``y_1..y_n`` with ``n >= 2``."""

    values: np.ndarray

    def __init__(self, values: Sequence[float] | np.ndarray):
        arr = np.array(values, dtype=float).ravel()
        if arr.size < 2:
            raise InvalidInputError(f"a sample needs at least 2 values, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("sample values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return int(self.values.size)

    @property
    def strictly_distinct(self) -> bool:
        return bool(np.unique(self.values).size == self.values.size)

    def sorted(self) -> np.ndarray:
        return np.sort(self.values)

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Sample):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    def __hash__(self) -> int:
        return hash(self.values.tobytes())


IDENTITY = "identity"
MEAN_ABS_DEVIATION = "meandev"
CUSTOM = "custom"


@dataclass(frozen=True)
class NonconformityMeasure:
    """A bag-invariant nonconformity measure ``Psi(bag, value)``.

    Use the constructors :meth:`identity`, :meth:`mean_abs_deviation` and
    :meth:`custom`.  A custom measure receives the other ``n`` values (as a
    1-d array, order irrelevant) and the value being scored, and returns a
    real score.
    """

    kind: str
    func: Optional[Callable[[np.ndarray, float], float]] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in (IDENTITY, MEAN_ABS_DEVIATION, CUSTOM):
            raise InvalidInputError(f"unknown nonconformity measure kind {self.kind!r}")
        if self.kind == CUSTOM and self.func is None:
            raise InvalidInputError("a custom measure needs an evaluation function")

    @classmethod
    def identity(cls) -> "NonconformityMeasure":
        return cls(IDENTITY)

    @classmethod
    def mean_abs_deviation(cls) -> "NonconformityMeasure":
        return cls(MEAN_ABS_DEVIATION)

    @classmethod
    def custom(cls, func: Callable[[np.ndarray, float], float]) -> "NonconformityMeasure":
        return cls(CUSTOM, func)

    @classmethod
    def from_name(cls, name: str) -> "NonconformityMeasure":
        key = name.strip().lower().replace("_", "").replace("-", "")
        if key in ("identity", "id"):
            return cls.identity()
        if key in ("meandev", "meanabsdeviation", "mad"):
            return cls.mean_abs_deviation()
        raise InvalidInputError(f"unknown measure name {name!r}")

    def score_matrix(self, data: np.ndarray, candidates: np.ndarray) -> np.ndarray:
        """Scores ``t_1..t_{n+1}`` for each candidate, shape ``(m, n+1)``.

        Column ``n`` holds the candidate's own score.
        """
        data = np.asarray(data, dtype=float)
        cand = np.atleast_1d(np.asarray(candidates, dtype=float))
        n = data.size
        full = np.concatenate([np.broadcast_to(data, (cand.size, n)), cand[:, None]], axis=1)
        if self.kind == IDENTITY:
            return full
        if self.kind == MEAN_ABS_DEVIATION:
            # mean of the other n values, from the running total
            total = data.sum() + cand
            others_mean = (total[:, None] - full) / n
            return np.abs(others_mean - full)
        out = np.empty_like(full)
        for r, row in enumerate(full):
            for i in range(n + 1):
                out[r, i] = float(self.func(np.delete(row, i), row[i]))
        return out


@dataclass(frozen=True)
class ScoreVector:
    """Scores ``t_1..t_{n+1}``; the last entry belongs to the candidate."""

    scores: np.ndarray
    candidate: float

    @property
    def n(self) -> int:
        return int(self.scores.size) - 1

    @property
    def candidate_score(self) -> float:
        return float(self.scores[-1])


def _as_sample(sample) -> Sample:
    return sample if isinstance(sample, Sample) else Sample(sample)


def compute_scores(sample: Sample, candidate: float, measure: NonconformityMeasure) -> ScoreVector:
    """Nonconformity scores of the augmented data ``y_1..y_n, candidate``."""
    sample = _as_sample(sample)
    if not np.isfinite(candidate):
        raise InvalidInputError(f"candidate must be finite, got {candidate!r}")
    scores = measure.score_matrix(sample.values, np.array([candidate]))[0]
    if not np.all(np.isfinite(scores)):
        raise InvalidInputError("nonconformity scores must be finite")
    scores.setflags(write=False)
    return ScoreVector(scores, float(candidate))


def rank_of_candidate(scores: ScoreVector) -> int:
    """``1 + #{i : t_{n+1} > t_i}`` with strict inequality (ties count 0)."""
    s = np.asarray(scores.scores)
    return 1 + int(np.count_nonzero(s[-1] > s[:-1]))


def ranks(sample: Sample, measure: NonconformityMeasure, candidates) -> np.ndarray:
    """Vectorised :func:`rank_of_candidate` over an array of candidate values."""
    sample = _as_sample(sample)
    t = measure.score_matrix(sample.values, np.asarray(candidates, dtype=float))
    if not np.all(np.isfinite(t)):
        raise InvalidInputError("nonconformity scores must be finite")
    return 1 + np.count_nonzero(t[:, -1:] > t[:, :-1], axis=1)


def transducer(sample: Sample, measure: NonconformityMeasure, y: float) -> Fraction:
    """GF transducer ``f_n(y) = #{i : t_{n+1}(y) <= t_i} / (n+1)``.

    The sum runs over all ``n+1`` scores, so the value is at least ``1/(n+1)``.
    """
    sv = compute_scores(sample, y, measure)
    s = sv.scores
    return Fraction(int(np.count_nonzero(s[-1] <= s)), s.size)


def transducer_values(sample: Sample, measure: NonconformityMeasure, ys) -> np.ndarray:
    """Float transducer values on an array of points (for curves and Monte Carlo)."""
    sample = _as_sample(sample)
    t = measure.score_matrix(sample.values, np.asarray(ys, dtype=float))
    return np.count_nonzero(t[:, -1:] <= t, axis=1) / t.shape[1]


def pvalue_pmf_given_bag(multiplicities: Sequence[int]) -> dict[int, Fraction]:
    """Conditional pmf of ``#{i : t_i >= t_{n+1}}`` given the bag of scores.

    ``multiplicities[k]`` is the number of scores equal to the ``k``-th smallest
    distinct value.  The candidate's score is equally likely to be any of the
    ``n+1`` positions, so the count equals ``n+1 - sum(multiplicities[:j])``
    with probability ``multiplicities[j] / (n+1)``.
    """
    mult = [int(m) for m in multiplicities]
    if not mult or any(m <= 0 for m in mult):
        raise InvalidInputError("multiplicities must be a non-empty list of positive integers")
    total = sum(mult)
    pmf: dict[int, Fraction] = {}
    below = 0
    for m in mult:
        pmf[total - below] = Fraction(m, total)
        below += m
    return pmf
