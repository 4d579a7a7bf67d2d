"""Maximum-entropy precise approximation of the imprecise GF distribution.

Within each focal set the density is flat: a set of positive length ``L``
gets density ``1/(L (n+1))`` and a singleton becomes an atom of mass
``1/(n+1)``.  Sampling follows the two-step recipe (pick a rank uniformly,
then a point uniformly inside that focal set); an inverse-CDF sampler is kept
alongside as an independent check.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import InvalidInputError
from .regions import FocalPartition, IntervalSet, cp_sets


class TiePathologyError(InvalidInputError):
    """A focal set is empty, so it cannot carry its mass (tied scores)."""


class TruncationRequiredError(InvalidInputError):
    """A focal set has infinite length; bound the support first."""


@dataclass(frozen=True)
class MEDistribution:
    """Atoms plus piecewise-uniform pieces, grouped by focal set.

    ``atoms`` rows are ``(location, mass)``; ``pieces`` rows are
    ``(lo, hi, density)``.  ``atom_region`` and ``piece_region`` give the
    0-based focal-set index of every row.
    """

    atoms: np.ndarray
    pieces: np.ndarray
    support: tuple[float, float]
    atom_region: np.ndarray
    piece_region: np.ndarray
    n_regions: int

    def __post_init__(self):
        for name in ("atoms", "pieces", "atom_region", "piece_region"):
            getattr(self, name).setflags(write=False)

    @property
    def n(self) -> int:
        return self.n_regions - 1

    @property
    def total_mass(self) -> float:
        return float(math.fsum(self.atoms[:, 1]) + math.fsum(self.pieces[:, 2] * (self.pieces[:, 1] - self.pieces[:, 0])))

    def region_mass(self, v: int) -> float:
        """Mass of focal set ``v`` (1-based) taken directly from the tables."""
        a = self.atoms[self.atom_region == v - 1, 1]
        p = self.pieces[self.piece_region == v - 1]
        return float(math.fsum(a) + math.fsum(p[:, 2] * (p[:, 1] - p[:, 0])))

    def density(self, y) -> np.ndarray:
        """Continuous part of the density (atoms excluded), zero off the pieces."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.zeros_like(y)
        if self.pieces.size:
            lo, hi, dens = self.pieces[:, 0], self.pieces[:, 1], self.pieces[:, 2]
            idx = np.searchsorted(lo, y, side="right") - 1
            ok = idx >= 0
            idx = np.clip(idx, 0, len(lo) - 1)
            inside = ok & (y > lo[idx]) & (y < hi[idx])
            out[inside] = dens[idx[inside]]
        return out

    def to_json(self) -> dict:
        return {
            "atoms": [[float(x), float(m)] for x, m in self.atoms],
            "pieces": [[float(lo), float(hi), float(d)] for lo, hi, d in self.pieces],
            "support": [self.support[0], self.support[1]],
            "atom_region": [int(v) + 1 for v in self.atom_region],
            "piece_region": [int(v) + 1 for v in self.piece_region],
        }

    @classmethod
    def from_json(cls, data) -> "MEDistribution":
        if isinstance(data, str):
            data = json.loads(data)
        atoms = np.array(data["atoms"], dtype=float).reshape(-1, 2)
        pieces = np.array(data["pieces"], dtype=float).reshape(-1, 3)
        # files without region labels: one focal set per row
        a_reg = np.array(data.get("atom_region", range(1, len(atoms) + 1)), dtype=int) - 1
        if "piece_region" in data:
            p_reg = np.array(data["piece_region"], dtype=int) - 1
        else:
            p_reg = np.arange(len(pieces)) + len(atoms)
        n_regions = int(max(a_reg.max(initial=-1), p_reg.max(initial=-1)) + 1)
        order = np.argsort(pieces[:, 0], kind="stable")
        return cls(atoms, pieces[order], tuple(data["support"]), a_reg, p_reg[order], n_regions)


def med_from_partition(partition: FocalPartition) -> MEDistribution:
    """Maximum-entropy member of the credal set of a focal partition."""
    m = len(partition.regions)
    mass = 1.0 / m
    atoms, a_reg, pieces, p_reg = [], [], [], []
    for v, region in enumerate(partition.regions):
        if region.is_empty:
            raise TiePathologyError(f"focal set {v + 1} is empty (tied scores)")
        length = region.lebesgue
        if math.isinf(length):
            raise TruncationRequiredError(f"focal set {v + 1} has infinite length")
        if length > 0:
            dens = mass / length
            for p in region.pieces:
                if p.hi > p.lo:
                    pieces.append((p.lo, p.hi, dens))
                    p_reg.append(v)
        elif region.is_point:
            atoms.append((region.pieces[0].lo, mass))
            a_reg.append(v)
        else:
            raise TiePathologyError(f"focal set {v + 1} is a finite set of several points")
    pieces_arr = np.array(pieces, dtype=float).reshape(-1, 3)
    order = np.argsort(pieces_arr[:, 0], kind="stable")
    return MEDistribution(
        np.array(atoms, dtype=float).reshape(-1, 2),
        pieces_arr[order],
        (partition.kappa_min, partition.kappa_max),
        np.array(a_reg, dtype=int),
        np.array(p_reg, dtype=int)[order],
        m,
    )


def med_probability(med: MEDistribution, event: IntervalSet) -> float:
    """``Pi(B)``: atoms inside the event plus density times overlap length."""
    total = [float(m) for x, m in med.atoms if event.contains(float(x))]
    if med.pieces.size and not event.is_empty:
        lo, hi, dens = med.pieces[:, 0], med.pieces[:, 1], med.pieces[:, 2]
        for p in event.pieces:
            overlap = np.clip(np.minimum(hi, p.hi) - np.maximum(lo, p.lo), 0.0, None)
            total.extend((overlap * dens)[overlap > 0])
    return float(math.fsum(total))


def _cdf_table(med: MEDistribution):
    """Position-sorted components with cumulative mass, for CDF and quantiles."""
    rows = [(float(x), 0, float(x), float(m), 0.0) for x, m in med.atoms]
    rows += [(float(lo), 1, float(hi), float(d * (hi - lo)), float(d)) for lo, hi, d in med.pieces]
    rows.sort(key=lambda r: (r[0], r[1]))
    start = np.array([r[0] for r in rows])
    end = np.array([r[2] for r in rows])
    mass = np.array([r[3] for r in rows])
    dens = np.array([r[4] for r in rows])
    is_atom = np.array([r[1] == 0 for r in rows])
    cum = np.cumsum(mass)
    return start, end, mass, dens, is_atom, cum


def med_cdf(med: MEDistribution, y) -> np.ndarray:
    """``Pi((-inf, y])`` evaluated on an array of points."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    start, end, mass, dens, is_atom, cum = _cdf_table(med)
    out = np.zeros_like(y)
    for s, e, m, d, atom in zip(start, end, mass, dens, is_atom):
        if atom:
            out += np.where(y >= s, m, 0.0)
        else:
            out += np.clip(y - s, 0.0, e - s) * d
    return out


def med_quantile(med: MEDistribution, u) -> np.ndarray:
    """Generalised inverse of :func:`med_cdf`."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    start, end, mass, dens, is_atom, cum = _cdf_table(med)
    total = cum[-1]
    cum = cum / total
    mass = mass / total
    idx = np.minimum(np.searchsorted(cum, u, side="left"), len(cum) - 1)
    before = cum[idx] - mass[idx]
    safe = np.where(mass[idx] > 0, mass[idx], 1.0)
    frac = np.clip((u - before) / safe, 0.0, 1.0)
    return np.where(is_atom[idx], start[idx], start[idx] + frac * (end[idx] - start[idx]))


def inverse_cdf_sample(med: MEDistribution, rng: np.random.Generator, size: Optional[int] = None):
    """Draws by inverting the CDF; the oracle for :func:`med_sample`."""
    u = rng.random(1 if size is None else size)
    x = med_quantile(med, u)
    return float(x[0]) if size is None else x


class _RegionSampler:
    """Uniform draws inside a family of sets, each a union of atoms and pieces.

    Sets with positive length are sampled proportionally to length (points
    inside them get zero weight); zero-length sets pick one of their points.
    """

    def __init__(self, sets: list[tuple[list[float], list[tuple[float, float]]]]):
        self.lengths = np.zeros(len(sets))
        self.offset = np.zeros(len(sets))
        self.point_start = np.zeros(len(sets), dtype=int)
        self.point_count = np.zeros(len(sets), dtype=int)
        los, his, points = [], [], []
        acc = 0.0
        for k, (pts, pcs) in enumerate(sets):
            self.offset[k] = acc
            length = sum(hi - lo for lo, hi in pcs)
            self.lengths[k] = length
            for lo, hi in pcs:
                los.append(lo)
                his.append(hi)
            acc += length
            self.point_start[k] = len(points)
            self.point_count[k] = len(pts)
            points.extend(pts)
        self.lo = np.array(los)
        self.hi = np.array(his)
        self.cum_end = np.cumsum(self.hi - self.lo)
        self.points = np.array(points)
        if np.any((self.lengths == 0) & (self.point_count == 0)):
            raise TiePathologyError("cannot sample from an empty set")

    def draw(self, which: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        out = np.empty(which.size)
        cont = self.lengths[which] > 0
        if np.any(cont):
            w = which[cont]
            pos = self.offset[w] + rng.random(w.size) * self.lengths[w]
            j = np.minimum(np.searchsorted(self.cum_end, pos, side="right"), len(self.cum_end) - 1)
            piece_start = self.cum_end[j] - (self.hi[j] - self.lo[j])
            out[cont] = np.clip(self.lo[j] + (pos - piece_start), self.lo[j], self.hi[j])
        if np.any(~cont):
            w = which[~cont]
            pick = (rng.random(w.size) * self.point_count[w]).astype(int)
            out[~cont] = self.points[self.point_start[w] + pick]
        return out


def _region_sampler(med: MEDistribution) -> _RegionSampler:
    sets = []
    for v in range(med.n_regions):
        pts = [float(x) for x in med.atoms[med.atom_region == v, 0]]
        pcs = [(float(lo), float(hi)) for lo, hi, _ in med.pieces[med.piece_region == v]]
        sets.append((pts, pcs))
    return _RegionSampler(sets)


def med_sample(med: MEDistribution, rng: np.random.Generator, size: Optional[int] = None):
    """Draw a rank uniformly, then a point uniformly within that focal set."""
    k = 1 if size is None else int(size)
    sampler = _region_sampler(med)
    v = rng.integers(0, med.n_regions, size=k)
    x = sampler.draw(v, rng)
    return float(x[0]) if size is None else x


def cp_analogue_sample(partition: FocalPartition, rng: np.random.Generator, size: Optional[int] = None):
    """Like :func:`med_sample` but uniform over the nested CP set of the drawn rank."""
    sets = []
    for omega in cp_sets(partition):
        pts = [p.lo for p in omega.pieces if p.lo == p.hi]
        pcs = [(p.lo, p.hi) for p in omega.pieces if p.hi > p.lo]
        if any(math.isinf(hi - lo) for lo, hi in pcs):
            raise TruncationRequiredError("CP set has infinite length")
        sets.append((pts, pcs))
    sampler = _RegionSampler(sets)
    k = 1 if size is None else int(size)
    v = rng.integers(0, len(sets), size=k)
    x = sampler.draw(v, rng)
    return float(x[0]) if size is None else x


def differential_entropy(med: MEDistribution) -> float:
    """Entropy of the continuous part, ``-sum d log(d) L`` over pieces (atoms excluded)."""
    if not med.pieces.size:
        return 0.0
    lo, hi, d = med.pieces[:, 0], med.pieces[:, 1], med.pieces[:, 2]
    return float(-math.fsum(d * np.log(d) * (hi - lo)))


def piecewise_entropy(edges: np.ndarray, densities: np.ndarray) -> float:
    """Differential entropy of a step density given bin edges and heights."""
    widths = np.diff(np.asarray(edges, dtype=float))
    d = np.asarray(densities, dtype=float)
    keep = d > 0
    return float(-math.fsum(d[keep] * np.log(d[keep]) * widths[keep]))


def identity_med_cdf(sorted_values: np.ndarray, y) -> np.ndarray:
    """``Pi((-inf, y])`` for the Identity measure truncated to the data range.

    Closed form of :func:`med_cdf` applied to the identity partition: the CDF
    interpolates linearly between ``v/(n+1)`` at the ``v``-th order statistic.
    """
    ys = np.asarray(sorted_values, dtype=float)
    n = ys.size
    levels = np.arange(1, n + 1) / (n + 1)
    y = np.asarray(y, dtype=float)
    out = np.interp(y, ys, levels)
    out = np.where(y < ys[0], 0.0, out)
    return np.where(y >= ys[-1], 1.0, out)
