"""Synthetic data generators used by the simulation studies.

Specs are strings such as ``gaussian(0,1)``, ``cauchy``, ``lognormal(1,2)``,
``exponential(0.5)`` or ``gaussian-mixture(0.5:-5:1,0.5:5:1)`` (weight:mean:sd
triples).  ``lognormal(a,b)`` is meanlog ``a`` and sdlog ``b``; ``exponential``
takes a rate.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats

from .core import InvalidInputError
from .regions import IntervalSet


@dataclass(frozen=True)
class Distribution:
    spec: str
    frozen: object = None
    weights: tuple = ()
    components: tuple = ()
    continuous: bool = True

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.components:
            which = rng.choice(len(self.weights), size=size, p=np.asarray(self.weights))
            means = np.array([c[0] for c in self.components])
            sds = np.array([c[1] for c in self.components])
            return means[which] + sds[which] * rng.standard_normal(size)
        return np.asarray(self.frozen.rvs(size=size, random_state=rng), dtype=float)

    def cdf(self, x):
        if self.components:
            x = np.asarray(x, dtype=float)
            return sum(w * stats.norm.cdf(x, m, s) for w, (m, s) in zip(self.weights, self.components))
        return self.frozen.cdf(x)

    def pdf(self, x):
        if not self.continuous:
            raise InvalidInputError(f"{self.spec} has no density")
        if self.components:
            x = np.asarray(x, dtype=float)
            return sum(w * stats.norm.pdf(x, m, s) for w, (m, s) in zip(self.weights, self.components))
        return self.frozen.pdf(x)

    def median(self) -> float:
        if self.components:
            lo = min(m - 20 * s for m, s in self.components)
            hi = max(m + 20 * s for m, s in self.components)
            return float(optimize.brentq(lambda x: self.cdf(x) - 0.5, lo, hi, xtol=1e-14))
        return float(self.frozen.median())

    def probability(self, event: IntervalSet) -> float:
        """True probability of a union of intervals (continuous laws only)."""
        if not self.continuous:
            raise InvalidInputError("event probabilities are only provided for continuous laws")
        return float(sum(self.cdf(p.hi) - self.cdf(p.lo) for p in event.pieces))


_CALL = re.compile(r"^\s*([a-zA-Z_\-]+)\s*(?:\((.*)\))?\s*$")


def parse_distribution(spec: str) -> Distribution:
    m = _CALL.match(spec)
    if not m:
        raise InvalidInputError(f"cannot parse distribution {spec!r}")
    name = m.group(1).lower().replace("_", "-")
    raw = (m.group(2) or "").strip()
    try:
        if name in ("gaussian-mixture", "mixture"):
            comps = [tuple(float(v) for v in part.split(":")) for part in raw.split(",") if part.strip()]
            if not comps or any(len(c) != 3 for c in comps):
                raise InvalidInputError("mixture components are weight:mean:sd triples")
            w = np.array([c[0] for c in comps])
            if np.any(w <= 0) or any(c[2] <= 0 for c in comps):
                raise InvalidInputError("mixture weights and sds must be positive")
            w = w / w.sum()
            return Distribution(spec, None, tuple(float(x) for x in w), tuple((c[1], c[2]) for c in comps))
        args = [float(v) for v in raw.split(",") if v.strip()]
    except ValueError:
        raise InvalidInputError(f"bad arguments in {spec!r}") from None

    def want(k: int, default: tuple) -> tuple:
        out = tuple(args) if args else default
        if len(out) != k:
            raise InvalidInputError(f"{name} takes {k} argument(s), got {len(args)}")
        if not all(np.isfinite(out)) or out[-1] <= 0:
            raise InvalidInputError(f"{name} needs finite parameters and a positive scale, got {out}")
        return out

    if name in ("gaussian", "normal"):
        mu, sd = want(2, (0.0, 1.0))
        frozen = stats.norm(mu, sd)
    elif name == "cauchy":
        loc, scale = want(2, (0.0, 1.0))
        frozen = stats.cauchy(loc, scale)
    elif name in ("lognormal", "log-normal"):
        mu, sd = want(2, (0.0, 1.0))
        frozen = stats.lognorm(s=sd, scale=np.exp(mu))
    elif name == "exponential":
        (rate,) = want(1, (1.0,))
        frozen = stats.expon(scale=1.0 / rate)
    elif name == "poisson":
        (lam,) = want(1, (1.0,))
        return Distribution(spec, stats.poisson(lam), continuous=False)
    else:
        raise InvalidInputError(f"unknown distribution {name!r}")
    return Distribution(spec, frozen)
