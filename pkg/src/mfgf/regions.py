"""Interval-set algebra, focal partitions, CP sets and GF prediction sets."""

from __future__ import annotations

import json
import math
import re
import warnings
from dataclasses import dataclass
from functools import cached_property
from fractions import Fraction
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .core import (
    IDENTITY,
    MEAN_ABS_DEVIATION,
    AssumptionViolatedError,
    InvalidInputError,
    NonconformityMeasure,
    Sample,
    _as_sample,
    ranks,
    transducer_values,
)

INF = math.inf


class Piece(NamedTuple):
    """One interval ``lo..hi``; a point is ``lo == hi`` with both ends closed."""

    lo: float
    lo_open: bool
    hi: float
    hi_open: bool

    def is_valid(self) -> bool:
        if math.isnan(self.lo) or math.isnan(self.hi):
            return False
        if self.lo < self.hi:
            return True
        return self.lo == self.hi and not self.lo_open and not self.hi_open and math.isfinite(self.lo)

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def contains(self, x: float) -> bool:
        above = x > self.lo or (x == self.lo and not self.lo_open)
        below = x < self.hi or (x == self.hi and not self.hi_open)
        return above and below


def _normalise(p: Piece) -> Piece:
    # infinite endpoints are always open
    return Piece(
        float(p.lo), bool(p.lo_open) or p.lo == -INF, float(p.hi), bool(p.hi_open) or p.hi == INF
    )


def _touches(a: Piece, b: Piece) -> bool:
    """True when ``b`` (with ``b.lo >= a.lo``) overlaps or abuts ``a`` without a gap."""
    if b.lo < a.hi:
        return True
    return b.lo == a.hi and not (a.hi_open and b.lo_open)


def _canonicalise(pieces: Iterable[Piece]) -> tuple[Piece, ...]:
    ps = sorted((_normalise(p) for p in pieces), key=lambda p: (p.lo, p.lo_open))
    out: list[Piece] = []
    for p in ps:
        if not p.is_valid():
            continue
        if out and _touches(out[-1], p):
            cur = out[-1]
            if p.hi > cur.hi:
                hi, hi_open = p.hi, p.hi_open
            elif p.hi == cur.hi:
                hi, hi_open = cur.hi, cur.hi_open and p.hi_open
            else:
                hi, hi_open = cur.hi, cur.hi_open
            out[-1] = Piece(cur.lo, cur.lo_open, hi, hi_open)
        else:
            out.append(p)
    return tuple(out)


def _intersect_pieces(a: Piece, b: Piece) -> Optional[Piece]:
    if a.lo > b.lo:
        lo, lo_open = a.lo, a.lo_open
    elif b.lo > a.lo:
        lo, lo_open = b.lo, b.lo_open
    else:
        lo, lo_open = a.lo, a.lo_open or b.lo_open
    if a.hi < b.hi:
        hi, hi_open = a.hi, a.hi_open
    elif b.hi < a.hi:
        hi, hi_open = b.hi, b.hi_open
    else:
        hi, hi_open = a.hi, a.hi_open or b.hi_open
    p = Piece(lo, lo_open, hi, hi_open)
    return p if p.is_valid() else None


@dataclass(frozen=True)
class IntervalSet:
    """A canonical finite union of disjoint real intervals.

    The constructor rejects non-canonical input; build from arbitrary pieces
    with :meth:`from_pieces`, which sorts and merges them.
    """

    pieces: tuple[Piece, ...] = ()

    def __post_init__(self):
        ps = tuple(_normalise(Piece(*p)) for p in self.pieces)
        for p in ps:
            if not p.is_valid():
                raise InvalidInputError(f"invalid interval piece {p}")
        for a, b in zip(ps, ps[1:]):
            if b.lo < a.lo or _touches(a, b):
                raise InvalidInputError("interval pieces must be sorted, disjoint and non-adjacent")
        object.__setattr__(self, "pieces", ps)

    # -- constructors -------------------------------------------------
    @classmethod
    def from_pieces(cls, pieces: Iterable[Sequence]) -> "IntervalSet":
        return cls(_canonicalise(Piece(*p) for p in pieces))

    @classmethod
    def empty(cls) -> "IntervalSet":
        return cls(())

    @classmethod
    def point(cls, x: float) -> "IntervalSet":
        return cls((Piece(x, False, x, False),))

    @classmethod
    def open(cls, lo: float, hi: float) -> "IntervalSet":
        return cls.from_pieces([(lo, True, hi, True)])

    @classmethod
    def closed(cls, lo: float, hi: float) -> "IntervalSet":
        return cls.from_pieces([(lo, False, hi, False)])

    @classmethod
    def real_line(cls) -> "IntervalSet":
        return cls((Piece(-INF, True, INF, True),))

    @classmethod
    def parse(cls, text: str) -> "IntervalSet":
        """Parse comma-separated interval literals such as ``"[0,2],(3.9,5.1),[7,inf)"``.

        A bare number denotes a point and ``{}`` or an empty string the empty set.
        """
        text = text.strip()
        if text in ("", "{}", "empty"):
            return cls.empty()
        pattern = re.compile(r"\s*([\[\(])\s*([^,\s]+)\s*,\s*([^\]\)\s]+)\s*([\]\)])\s*(?:,|$)|\s*([^,\[\(]+?)\s*(?:,|$)")
        pieces = []
        pos = 0
        while pos < len(text):
            m = pattern.match(text, pos)
            if not m or m.end() == pos:
                raise InvalidInputError(f"cannot parse interval list {text!r}")
            if m.group(5) is not None:
                x = _parse_number(m.group(5))
                pieces.append((x, False, x, False))
            else:
                pieces.append(
                    (_parse_number(m.group(2)), m.group(1) == "(", _parse_number(m.group(3)), m.group(4) == ")")
                )
            pos = m.end()
        for p in pieces:
            if not _normalise(Piece(*p)).is_valid():
                raise InvalidInputError(f"empty or reversed interval in {text!r}")
        return cls.from_pieces(pieces)

    # -- predicates and measures --------------------------------------
    @property
    def is_empty(self) -> bool:
        return not self.pieces

    @property
    def lebesgue(self) -> float:
        return float(sum(p.length for p in self.pieces))

    @property
    def is_point(self) -> bool:
        return len(self.pieces) == 1 and self.pieces[0].lo == self.pieces[0].hi

    @property
    def points(self) -> list[float]:
        """Locations of the degenerate (single point) pieces."""
        return [p.lo for p in self.pieces if p.lo == p.hi]

    @property
    def bounds(self) -> tuple[float, float]:
        if self.is_empty:
            raise InvalidInputError("empty set has no bounds")
        return self.pieces[0].lo, self.pieces[-1].hi

    def contains(self, x: float) -> bool:
        return any(p.contains(x) for p in self.pieces)

    def __contains__(self, x: float) -> bool:
        return self.contains(x)

    def intersection(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        i = j = 0
        a, b = self.pieces, other.pieces
        while i < len(a) and j < len(b):
            p = _intersect_pieces(a[i], b[j])
            if p is not None:
                out.append(p)
            # advance whichever piece ends first
            if a[i].hi < b[j].hi or (a[i].hi == b[j].hi and a[i].hi_open and not b[j].hi_open):
                i += 1
            else:
                j += 1
        return IntervalSet.from_pieces(out)

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet.from_pieces(self.pieces + other.pieces)

    def complement(self) -> "IntervalSet":
        out = []
        lo, lo_open = -INF, True
        for p in self.pieces:
            out.append((lo, lo_open, p.lo, not p.lo_open))
            lo, lo_open = p.hi, not p.hi_open
        out.append((lo, lo_open, INF, True))
        return IntervalSet.from_pieces(q for q in out if _normalise(Piece(*q)).is_valid())

    def difference(self, other: "IntervalSet") -> "IntervalSet":
        return self.intersection(other.complement())

    def issubset(self, other: "IntervalSet") -> bool:
        return self.intersection(other) == self

    def intersects(self, other: "IntervalSet") -> bool:
        return not self.intersection(other).is_empty

    __and__ = intersection
    __or__ = union
    __sub__ = difference
    __le__ = issubset

    # -- serialisation ------------------------------------------------
    def to_json(self) -> list:
        return [[_encode(p.lo), p.lo_open, _encode(p.hi), p.hi_open] for p in self.pieces]

    @classmethod
    def from_json(cls, data) -> "IntervalSet":
        if isinstance(data, str):
            data = json.loads(data)
        return cls(tuple(Piece(_decode(lo), bool(lo_o), _decode(hi), bool(hi_o)) for lo, lo_o, hi, hi_o in data))

    def __str__(self) -> str:
        if self.is_empty:
            return "{}"
        parts = []
        for p in self.pieces:
            if p.lo == p.hi:
                parts.append(f"{{{p.lo:g}}}")
            else:
                parts.append(f"{'(' if p.lo_open else '['}{p.lo:g},{p.hi:g}{')' if p.hi_open else ']'}")
        return " U ".join(parts)


def _parse_number(s: str) -> float:
    s = s.strip().lower()
    if s in ("inf", "+inf", "infinity"):
        return INF
    if s in ("-inf", "-infinity"):
        return -INF
    try:
        return float(s)
    except ValueError:
        raise InvalidInputError(f"not a number: {s!r}") from None


def _encode(x: float):
    if x == INF:
        return "inf"
    if x == -INF:
        return "-inf"
    return x


def _decode(x) -> float:
    if isinstance(x, str):
        return _parse_number(x)
    return float(x)


class SetRelation(NamedTuple):
    intersection: IntervalSet
    a_subset_of_b: bool
    intersects: bool
    lebesgue_of_a: float


def intervalset_algebra(a: IntervalSet, b: IntervalSet) -> SetRelation:
    """Intersection, containment and overlap of two canonical interval sets."""
    for s in (a, b):
        if not isinstance(s, IntervalSet):
            raise InvalidInputError("interval_set_algebra expects IntervalSet arguments")
        if _canonicalise(s.pieces) != s.pieces:
            raise InvalidInputError("non-canonical interval set")
    inter = a.intersection(b)
    return SetRelation(inter, inter == a, not inter.is_empty, a.lebesgue)


@dataclass(frozen=True)
class FocalPartition:
    """Focal sets ``A_n(1..n+1)`` truncated to ``[kappa_min, kappa_max]``.

    ``regions[v-1]`` is the set of candidate values with rank ``v``.  Each
    region carries GF mass ``1/(n+1)``.  Boundary points between open pieces
    belong to no region.
    """

    regions: tuple[IntervalSet, ...]
    kappa_min: float
    kappa_max: float

    def __post_init__(self):
        object.__setattr__(self, "regions", tuple(self.regions))
        if len(self.regions) < 3:
            raise InvalidInputError("a focal partition needs n+1 >= 3 regions")
        if not self.kappa_min < self.kappa_max:
            raise InvalidInputError("kappa_min must be below kappa_max")

    @property
    def n(self) -> int:
        return len(self.regions) - 1

    @property
    def mass_per_region(self) -> Fraction:
        return Fraction(1, len(self.regions))

    @cached_property
    def empty_flags(self) -> tuple[bool, ...]:
        return tuple(r.is_empty for r in self.regions)

    @property
    def support(self) -> IntervalSet:
        return IntervalSet.closed(self.kappa_min, self.kappa_max)

    def region(self, v: int) -> IntervalSet:
        """Focal set of rank ``v`` (1-based)."""
        if not 1 <= v <= len(self.regions):
            raise InvalidInputError(f"rank {v} outside 1..{len(self.regions)}")
        return self.regions[v - 1]

    @cached_property
    def piece_table(self) -> tuple[np.ndarray, ...]:
        """Arrays ``(lo, lo_open, hi, hi_open, region)`` over every piece; ``region`` is 0-based."""
        rows = [(p.lo, p.lo_open, p.hi, p.hi_open, v) for v, r in enumerate(self.regions) for p in r.pieces]
        lo = np.array([r[0] for r in rows], dtype=float)
        lo_open = np.array([r[1] for r in rows], dtype=bool)
        hi = np.array([r[2] for r in rows], dtype=float)
        hi_open = np.array([r[3] for r in rows], dtype=bool)
        region = np.array([r[4] for r in rows], dtype=int)
        return lo, lo_open, hi, hi_open, region

    def boundaries(self) -> list[float]:
        """Sorted finite endpoints of all region pieces."""
        pts = {x for r in self.regions for p in r.pieces for x in (p.lo, p.hi)}
        return sorted(pts)

    def to_json(self) -> dict:
        return {
            "kappa_min": self.kappa_min,
            "kappa_max": self.kappa_max,
            "regions": [r.to_json() for r in self.regions],
        }


def focal_partition_identity(sample: Sample) -> FocalPartition:
    """Closed-form partition for ``t(y) = y`` truncated to ``[Y_(1), Y_(n)]``.

    ``A(1) = {Y_(1)}``, ``A(v) = (Y_(v-1), Y_(v))`` for ``v = 2..n`` and
    ``A(n+1) = {Y_(n)}``.
    """
    sample = _as_sample(sample)
    if not sample.strictly_distinct:
        raise AssumptionViolatedError("identity partition needs pairwise distinct values")
    ys = sample.sorted()
    regions = [IntervalSet.point(float(ys[0]))]
    regions += [IntervalSet.open(float(a), float(b)) for a, b in zip(ys[:-1], ys[1:])]
    regions.append(IntervalSet.point(float(ys[-1])))
    return FocalPartition(tuple(regions), float(ys[0]), float(ys[-1]))


def default_bounds(sample: Sample, measure: NonconformityMeasure) -> tuple[float, float]:
    """Data range for Identity; data range widened by its own width otherwise.

    When a known score crossing reaches the widened range (MAD with n = 2),
    the bound moves half a width past it so the outermost focal set keeps
    positive length.
    """
    sample = _as_sample(sample)
    lo, hi = float(sample.values.min()), float(sample.values.max())
    if measure.kind == IDENTITY:
        return lo, hi
    width = hi - lo
    if width == 0:
        width = max(abs(lo), 1.0)
    lo, hi = lo - width, hi + width
    cross = _score_crossings(sample, measure)
    if cross.size:
        lo = min(lo, float(cross[0]) - width / 2)
        hi = max(hi, float(cross[-1]) + width / 2)
    return lo, hi


def _score_crossings(sample: Sample, measure: NonconformityMeasure) -> np.ndarray:
    """Exact candidate values where the candidate score meets some t_i.

    Known for the built-in measures; empty for custom ones.
    """
    y = sample.values
    if measure.kind == IDENTITY:
        return np.sort(y)
    if measure.kind == MEAN_ABS_DEVIATION:
        # |y - c_i| / n = |y - S/n| with c_i = (n+1) y_i - S
        n, total = y.size, float(np.sum(y))
        return np.sort(np.concatenate([y, (2.0 * total - (n + 1) * y) / (n - 1)]))
    return np.empty(0)


def focal_partition_numeric(
    sample: Sample,
    measure: NonconformityMeasure,
    bounds: Optional[tuple[float, float]] = None,
    grid_points: Optional[int] = None,
    refine_tol: Optional[float] = None,
) -> FocalPartition:
    """Focal partition of a general measure by grid scan plus bisection.

    The rank function is evaluated on a uniform grid over the bounds, refined
    with the exact score crossings (and midpoints between them) when the
    measure is a built-in one, so narrow focal sets are not skipped; every
    rank change between neighbouring grid points is bracketed by bisection down
    to ``refine_tol``.  Pieces are open at the located boundaries and closed at
    the bounds.  A rank that holds only within ``refine_tol`` of a bound (a tie
    at the bound) collapses to a point there, and when the rank just outside a
    bound differs from the rank at it, the bound point is handed to the outer
    region: this is how the unbounded outer focal sets are truncated.

    Regions never reached keep an empty set; check ``empty_flags``.
    """
    sample = _as_sample(sample)
    n = sample.n
    if bounds is None:
        bounds = default_bounds(sample, measure)
    kmin, kmax = float(bounds[0]), float(bounds[1])
    if not (math.isfinite(kmin) and math.isfinite(kmax) and kmin < kmax):
        raise InvalidInputError(f"bounds must be finite with kappa_min < kappa_max, got {bounds}")
    if grid_points is None:
        grid_points = 64 * (n + 1)
    if grid_points < 2 * (n + 1):
        raise InvalidInputError(f"grid_points must be at least 2(n+1) = {2 * (n + 1)}")
    if refine_tol is None:
        refine_tol = 1e-10 * (kmax - kmin)
    if not refine_tol > 0:
        raise InvalidInputError("refine_tol must be positive")

    def rank_at(x: float) -> int:
        return int(ranks(sample, measure, [x])[0])

    grid = np.linspace(kmin, kmax, int(grid_points))
    cross = _score_crossings(sample, measure)
    if cross.size:
        mids = 0.5 * (cross[1:] + cross[:-1])
        extra = np.concatenate([cross, mids])
        grid = np.unique(np.concatenate([grid, extra[(extra > kmin) & (extra < kmax)]]))
    grid_ranks = ranks(sample, measure, grid)

    # (location, rank to the right) for every located rank change
    changes: list[tuple[float, int]] = []

    def locate(a: float, ra: int, b: float, rb: int) -> None:
        while True:
            if b - a <= refine_tol:
                changes.append((0.5 * (a + b), rb))
                return
            m = 0.5 * (a + b)
            if m <= a or m >= b:
                changes.append((m, rb))
                return
            rm = rank_at(m)
            if rm != ra and rm != rb:
                locate(a, ra, m, rm)
                a, ra = m, rm
            elif rm == ra:
                a, ra = m, rm
            else:
                b, rb = m, rm

    for j in np.flatnonzero(grid_ranks[1:] != grid_ranks[:-1]):
        locate(float(grid[j]), int(grid_ranks[j]), float(grid[j + 1]), int(grid_ranks[j + 1]))

    # segments between change points: (lo, hi, rank)
    cuts = [kmin] + [c for c, _ in changes] + [kmax]
    seg_ranks = [int(grid_ranks[0])] + [r for _, r in changes]
    segments = [[lo, hi, r] for lo, hi, r in zip(cuts[:-1], cuts[1:], seg_ranks)]

    pieces: dict[int, list[tuple]] = {}

    def add(r: int, piece: tuple) -> None:
        pieces.setdefault(r, []).append(piece)

    left_point = right_point = None
    if len(segments) > 1 and segments[0][1] - kmin <= refine_tol:
        left_point = segments.pop(0)[2]
        segments[0][0] = kmin
    if len(segments) > 1 and kmax - segments[-1][0] <= refine_tol:
        right_point = segments.pop()[2]
        segments[-1][1] = kmax

    out_left = rank_at(min(kmin - refine_tol, np.nextafter(kmin, -INF)))
    out_right = rank_at(max(kmax + refine_tol, np.nextafter(kmax, INF)))
    left_rank = left_point if left_point is not None else segments[0][2]
    right_rank = right_point if right_point is not None else segments[-1][2]
    if out_left != left_rank:
        left_point = out_left
    if out_right != right_rank:
        right_point = out_right

    for idx, (lo, hi, r) in enumerate(segments):
        lo_open = idx > 0 or left_point is not None
        hi_open = idx < len(segments) - 1 or right_point is not None
        add(r, (lo, lo_open, hi, hi_open))
    if left_point is not None:
        add(left_point, (kmin, False, kmin, False))
    if right_point is not None:
        add(right_point, (kmax, False, kmax, False))

    regions = []
    for v in range(1, n + 2):
        regions.append(IntervalSet.from_pieces(pieces.get(v, [])))
    extra = set(pieces) - set(range(1, n + 2))
    if extra:
        raise InvalidInputError(f"rank values {sorted(extra)} outside 1..n+1")
    return FocalPartition(tuple(regions), kmin, kmax)


def focal_partition(
    sample: Sample,
    measure: NonconformityMeasure,
    bounds: Optional[tuple[float, float]] = None,
    **kwargs,
) -> FocalPartition:
    """Closed form for Identity with default bounds, numeric scan otherwise."""
    sample = _as_sample(sample)
    if measure.kind == IDENTITY and bounds is None and not kwargs:
        return focal_partition_identity(sample)
    return focal_partition_numeric(sample, measure, bounds, **kwargs)


def cp_set(partition: FocalPartition, k: int) -> IntervalSet:
    """CP set ``Omega_n(k)``: union of the ``k`` lowest-rank focal sets."""
    if not 1 <= k <= len(partition.regions):
        raise InvalidInputError(f"k must lie in 1..{len(partition.regions)}, got {k}")
    pieces = [p for r in partition.regions[:k] for p in r.pieces]
    return IntervalSet.from_pieces(pieces)


def cp_sets(partition: FocalPartition) -> list[IntervalSet]:
    """All nested CP sets ``Omega_n(1..n+1)``."""
    out = []
    acc = IntervalSet.empty()
    for r in partition.regions:
        acc = acc.union(r)
        out.append(acc)
    return out


def level_index(n: int, alpha: float) -> int:
    """Largest ``k`` with ``(n+2-k)/(n+1) > alpha``, i.e. the ranks kept at level alpha."""
    a = Fraction(alpha)
    k = 0
    for cand in range(1, n + 2):
        if Fraction(n + 2 - cand, n + 1) > a:
            k = cand
    return k


def prediction_set(
    sample: Sample,
    measure: NonconformityMeasure,
    alpha: float,
    partition: FocalPartition,
    check: bool = False,
) -> IntervalSet:
    """GF prediction set ``{y : f_n(y) > alpha}`` as a union of focal sets.

    With ``check=True`` the transducer is evaluated at each piece midpoint and
    a warning is raised if it disagrees with the region's rank.
    """
    if not 0 < alpha < 1:
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}")
    sample = _as_sample(sample)
    n = sample.n
    if partition.n != n:
        raise InvalidInputError("partition was built for a different sample size")
    k = level_index(n, alpha)
    if k == 0:
        return IntervalSet.empty()
    if check:
        for v, region in enumerate(partition.regions, start=1):
            mids = [0.5 * (p.lo + p.hi) for p in region.pieces if p.lo < p.hi]
            if not mids:
                continue
            f = transducer_values(sample, measure, mids)
            expected = (n + 2 - v) / (n + 1)
            if not np.allclose(f, expected, rtol=0, atol=1e-12):
                warnings.warn(f"transducer disagrees with rank {v} at region midpoints", RuntimeWarning)
    return cp_set(partition, k)
