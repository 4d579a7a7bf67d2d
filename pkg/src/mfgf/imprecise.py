"""Belief and plausibility of interval events, and credal-set membership."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import InvalidInputError
from .precise import MEDistribution, med_probability
from .regions import FocalPartition, IntervalSet

CREDAL_TOL = 1e-10


@dataclass(frozen=True)
class ImpreciseValue:
    """Lower and upper probability of one event."""

    belief: float
    plausibility: float

    def __post_init__(self):
        if not 0.0 <= self.belief <= self.plausibility <= 1.0:
            raise InvalidInputError(f"need 0 <= belief <= plausibility <= 1, got {self}")

    @property
    def width(self) -> float:
        return self.plausibility - self.belief


def _warn_empty(partition: FocalPartition) -> None:
    if any(partition.empty_flags):
        empty = [v for v, e in enumerate(partition.empty_flags, start=1) if e]
        warnings.warn(f"empty focal sets {empty} contribute nothing (tied scores)", RuntimeWarning, stacklevel=3)


def contained_count(partition: FocalPartition, event: IntervalSet) -> int:
    """Number of non-empty focal sets lying inside ``event`` (set-algebra route)."""
    _warn_empty(partition)
    return sum(1 for r in partition.regions if not r.is_empty and r.issubset(event))


def intersecting_count(partition: FocalPartition, event: IntervalSet) -> int:
    """Number of focal sets meeting ``event`` (set-algebra route)."""
    _warn_empty(partition)
    return sum(1 for r in partition.regions if r.intersects(event))


def _piece_relations(partition: FocalPartition, event: IntervalSet):
    """Per-region containment and overlap flags, vectorised over all pieces.

    Endpoints become exact integer keys: ``2 * rank(value)`` (first index in the sorted endpoints), plus one for an
    open lower end and minus one for an open upper end.  A piece ``[a, b]``
    then lies in ``[c, d]`` iff ``a >= c`` and ``b <= d`` on keys, and two
    pieces meet iff the larger lower key is at most the smaller upper key.
    The event pieces are sorted and disjoint, so one ``searchsorted`` per test
    finds the only candidate event piece.
    """
    lo, lo_open, hi, hi_open, region = partition.piece_table
    m = len(partition.regions)
    if event.is_empty or lo.size == 0:
        return np.zeros(m, dtype=bool), np.zeros(m, dtype=bool)
    ev = event.pieces
    e_lo = np.array([p.lo for p in ev])
    e_hi = np.array([p.hi for p in ev])
    vals = np.sort(np.concatenate([lo, hi, e_lo, e_hi]))
    p_klo = 2 * np.searchsorted(vals, lo) + lo_open
    p_khi = 2 * np.searchsorted(vals, hi) - hi_open
    e_klo = 2 * np.searchsorted(vals, e_lo) + np.array([p.lo_open for p in ev])
    e_khi = 2 * np.searchsorted(vals, e_hi) - np.array([p.hi_open for p in ev])

    last = e_klo.size - 1
    j = np.searchsorted(e_klo, p_klo, side="right") - 1
    piece_in = (j >= 0) & (p_khi <= e_khi[np.maximum(j, 0)])
    j = np.searchsorted(e_khi, p_klo, side="left")
    piece_meets = (j <= last) & (e_klo[np.minimum(j, last)] <= p_khi)

    outside = np.bincount(region[~piece_in], minlength=m)
    touching = np.bincount(region[piece_meets], minlength=m)
    nonempty = np.bincount(region, minlength=m) > 0
    return nonempty & (outside == 0), touching > 0


def belief_fraction(partition: FocalPartition, event: IntervalSet) -> Fraction:
    _warn_empty(partition)
    contained, _ = _piece_relations(partition, event)
    return Fraction(int(contained.sum()), len(partition.regions))


def plausibility_fraction(partition: FocalPartition, event: IntervalSet) -> Fraction:
    _warn_empty(partition)
    _, meets = _piece_relations(partition, event)
    return Fraction(int(meets.sum()), len(partition.regions))


def belief(partition: FocalPartition, event: IntervalSet) -> float:
    """Total focal mass of the sets contained in ``event``."""
    return float(belief_fraction(partition, event))


def plausibility(partition: FocalPartition, event: IntervalSet) -> float:
    """Total focal mass of the sets that intersect ``event``."""
    return float(plausibility_fraction(partition, event))


def evaluate(partition: FocalPartition, event: IntervalSet) -> ImpreciseValue:
    _warn_empty(partition)
    contained, meets = _piece_relations(partition, event)
    m = len(partition.regions)
    return ImpreciseValue(int(contained.sum()) / m, int(meets.sum()) / m)


def credal_check(partition: FocalPartition, med: MEDistribution, tol: float = CREDAL_TOL) -> bool:
    """True iff ``med`` gives every focal set mass ``1/(n+1)`` within ``tol``.

    That condition characterises membership in the credal set.
    """
    if med.n_regions != len(partition.regions):
        raise InvalidInputError("distribution and partition disagree on the number of focal sets")
    if med.support != (partition.kappa_min, partition.kappa_max):
        raise InvalidInputError(
            f"support mismatch: {med.support} vs {(partition.kappa_min, partition.kappa_max)}"
        )
    target = 1.0 / len(partition.regions)
    return all(abs(med_probability(med, r) - target) <= tol for r in partition.regions)
