"""Comparison baselines: the conjugate exponential/gamma predictive and binomial GF draws."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import InvalidInputError, Sample, _as_sample


@dataclass(frozen=True)
class LomaxPredictive:
    """Lomax(shape ``alpha``, scale ``lam``) with CDF ``1 - (1 + y/lam)^-alpha``."""

    alpha: float
    lam: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.lam > 0):
            raise InvalidInputError(f"Lomax parameters must be positive, got ({self.alpha}, {self.lam})")

    def cdf(self, y):
        return lomax_cdf(self, y)

    def sf(self, y):
        """Survival ``1 - F(y)``, computed without cancellation."""
        y = np.asarray(y, dtype=float)
        if np.any(y < 0):
            raise InvalidInputError("Lomax is supported on y >= 0")
        out = np.exp(-self.alpha * np.log1p(y / self.lam))
        return float(out) if out.ndim == 0 else out


def lomax_fit(sample: Sample, prior_shape: float = 1.0, prior_rate: float = 1.0) -> LomaxPredictive:
    """Posterior predictive of an exponential model under a gamma prior on its rate.

    The gamma(shape, rate) prior updates to gamma(shape + n, rate + sum(y)) and
    the predictive is Lomax with those two numbers as shape and scale.
    """
    sample = _as_sample(sample)
    if prior_shape <= 0 or prior_rate <= 0:
        raise InvalidInputError("prior shape and rate must be positive")
    y = sample.values
    if np.any(y < 0):
        raise InvalidInputError("exponential model needs non-negative observations")
    return LomaxPredictive(prior_shape + sample.n, prior_rate + float(np.sum(y)))


def lomax_cdf(pred: LomaxPredictive, y):
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise InvalidInputError("Lomax is supported on y >= 0")
    out = -np.expm1(-pred.alpha * np.log1p(y / pred.lam))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class BinomialGFInterval:
    """The random interval ``(U_(y), U_(y+1)]`` for ``y`` successes in ``m`` trials."""

    lower: float
    upper: float
    y: int
    m: int

    def __post_init__(self):
        if not 0.0 <= self.lower <= self.upper <= 1.0:
            raise InvalidInputError(f"bad interval ({self.lower}, {self.upper}]")


D_CHOICES = {
    1: "uniform(0,1)",
    2: "uniform{0,1}",
    3: "beta(1/2,1/2)",
    4: "endpoint mixture",
    5: "midpoint",
}


def _check_counts(y: int, m: int) -> None:
    if m < 1 or not 0 <= y <= m:
        raise InvalidInputError(f"need m >= 1 and 0 <= y <= m, got y={y}, m={m}")


def binomial_gf_endpoints(y: int, m: int, rng: np.random.Generator, size: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Order statistics ``U_(y)`` and ``U_(y+1)`` of ``m`` uniforms, with ``U_(0)=0``, ``U_(m+1)=1``."""
    _check_counts(y, m)
    u = np.sort(rng.random((size, m)), axis=1)
    padded = np.concatenate([np.zeros((size, 1)), u, np.ones((size, 1))], axis=1)
    return padded[:, y], padded[:, y + 1]


def binomial_gf_interval(y: int, m: int, rng: np.random.Generator) -> BinomialGFInterval:
    lo, hi = binomial_gf_endpoints(y, m, rng)
    return BinomialGFInterval(float(lo[0]), float(hi[0]), y, m)


def select_in_interval(lower, upper, d_choice: int, rng: np.random.Generator) -> np.ndarray:
    """``lower + D (upper - lower)`` with ``D`` drawn per ``d_choice``."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    k = lower.shape
    if d_choice == 1:
        d = rng.random(k)
    elif d_choice == 2:
        d = rng.integers(0, 2, size=k).astype(float)
    elif d_choice == 3:
        d = rng.beta(0.5, 0.5, size=k)
    elif d_choice == 4:
        u = rng.random(k)
        d = np.where(u < lower, 0.0, np.where(u < lower + (1.0 - upper), 1.0, rng.random(k)))
    elif d_choice == 5:
        d = np.full(k, 0.5)
    else:
        raise InvalidInputError(f"d_choice must be one of 1..5, got {d_choice!r}")
    return lower + d * (upper - lower)


def binomial_gf_sample(y: int, m: int, d_choice: int, rng: np.random.Generator, size: Optional[int] = None):
    """Precise binomial GF draw ``R = U_(y) + D (U_(y+1) - U_(y))``.

    Choice 4 gives ``R ~ beta(y+1, m-y+1)`` exactly.
    """
    if d_choice not in D_CHOICES:
        raise InvalidInputError(f"d_choice must be one of 1..5, got {d_choice!r}")
    lo, hi = binomial_gf_endpoints(y, m, rng, 1 if size is None else int(size))
    r = select_in_interval(lo, hi, d_choice, rng)
    return float(r[0]) if size is None else r
