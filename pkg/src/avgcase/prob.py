"""Seeded sampling primitives and scalar distribution descriptions.

Everything downstream draws randomness through :class:`RngStream`, a value
type identifying a substream of a counter-based generator (Philox) keyed by
hashing ``(seed, path)``.  Two streams with the same seed and path produce
bit-identical output; streams with distinct paths are independent for all
practical purposes.  Streams are immutable, so the usage pattern is to derive
a child stream per logical random object and draw from its generator
sequentially::

    rng = RngStream(7)
    g = rng.child("edges").generator()
    bits = g.random(100) < 0.5

Gaussian draws are statistically (not bit-) exact across numpy versions; the
method is numpy's ziggurat ``standard_normal``.  Within one installed
toolchain all draws are bit-reproducible.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Union

import numpy as np
import scipy.special as _sps
import scipy.stats as _sst

from .errors import DomainError, ParameterError

__all__ = [
    "RngStream",
    "Bernoulli",
    "Binomial",
    "Hypergeometric",
    "Gaussian",
    "Tern",
    "FinitePmf",
    "Mixture",
    "DistSpec",
    "validate_spec",
    "sample",
    "finite_pmf",
    "tern_pmf",
    "normal_cdf",
    "normal_quantile",
]

_PROB_TOL = 1e-12


# ---------------------------------------------------------------------------
# Streams
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RngStream:
    """A (seed, path) pair naming one substream of the keyed generator.

    ``path`` is a tuple of ``(tag, index)`` pairs.  The 128-bit Philox key is
    blake2b over a canonical encoding of seed and path, so substream
    derivation is order-independent and collision-resistant.
    """

    seed: int
    path: tuple = ()

    def child(self, tag: str, index: int = 0) -> "RngStream":
        """Derive the substream named by appending ``(tag, index)``."""
        return RngStream(self.seed, self.path + ((str(tag), int(index)),))

    def key(self) -> int:
        h = hashlib.blake2b(digest_size=16)
        h.update(int(self.seed).to_bytes(8, "little", signed=True))
        for tag, index in self.path:
            raw = tag.encode("utf-8")
            h.update(len(raw).to_bytes(4, "little"))
            h.update(raw)
            h.update(int(index).to_bytes(8, "little", signed=True))
        return int.from_bytes(h.digest(), "little")

    def generator(self) -> np.random.Generator:
        """A fresh numpy Generator positioned at the start of this substream."""
        # seed= routes the 128-bit digest through SeedSequence (pure, no OS
        # entropy); key= would pull urandom for an unused seed sequence.
        return np.random.Generator(np.random.Philox(seed=self.key()))


# ---------------------------------------------------------------------------
# Distribution specs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Bernoulli:
    p: float


@dataclass(frozen=True)
class Binomial:
    n: int
    p: float


@dataclass(frozen=True)
class Hypergeometric:
    """`n` draws without replacement from a population of `N` with `K` successes."""

    N: int
    K: int
    n: int


@dataclass(frozen=True)
class Gaussian:
    mu: float
    sigma: float = 1.0


@dataclass(frozen=True)
class Tern:
    """Three-point law on {-1, 0, +1} with masses ((1-a)/2 - mu1 + mu2, a - 2 mu2, (1-a)/2 + mu1 + mu2)."""

    a: float
    mu1: float
    mu2: float


@dataclass(frozen=True)
class FinitePmf:
    values: tuple
    probs: tuple

    def as_arrays(self):
        return np.asarray(self.values, dtype=float), np.asarray(self.probs, dtype=float)


@dataclass(frozen=True)
class Mixture:
    """Draw ``left`` with probability ``1 - eps`` and ``right`` with probability ``eps``."""

    eps: float
    left: "DistSpec"
    right: "DistSpec"


DistSpec = Union[Bernoulli, Binomial, Hypergeometric, Gaussian, Tern, FinitePmf, Mixture]


def _check_prob(p, name):
    if not (0.0 <= p <= 1.0) or not np.isfinite(p):
        raise ParameterError(f"{name} must lie in [0, 1], got {p!r}")


def validate_spec(spec: DistSpec) -> None:
    """Raise ParameterError if the distribution spec's parameters are invalid."""
    if isinstance(spec, Bernoulli):
        _check_prob(spec.p, "Bernoulli p")
    elif isinstance(spec, Binomial):
        if spec.n < 0:
            raise ParameterError(f"Binomial n must be >= 0, got {spec.n}")
        _check_prob(spec.p, "Binomial p")
    elif isinstance(spec, Hypergeometric):
        if not (0 <= spec.K <= spec.N) or not (0 <= spec.n <= spec.N):
            raise ParameterError(
                f"Hypergeometric needs 0 <= K, n <= N, got N={spec.N} K={spec.K} n={spec.n}"
            )
    elif isinstance(spec, Gaussian):
        if not (spec.sigma > 0) or not np.isfinite(spec.sigma) or not np.isfinite(spec.mu):
            raise ParameterError(f"Gaussian needs finite mu and sigma > 0, got {spec!r}")
    elif isinstance(spec, Tern):
        tern_pmf(spec.a, spec.mu1, spec.mu2)
    elif isinstance(spec, FinitePmf):
        values, probs = spec.as_arrays()
        if values.shape != probs.shape or values.ndim != 1 or values.size == 0:
            raise ParameterError("FinitePmf needs matching non-empty value/prob sequences")
        if np.any(probs < -_PROB_TOL):
            raise ParameterError("FinitePmf probabilities must be nonnegative")
        if abs(float(probs.sum()) - 1.0) > _PROB_TOL:
            raise ParameterError(f"FinitePmf probabilities sum to {probs.sum()!r}, not 1")
    elif isinstance(spec, Mixture):
        _check_prob(spec.eps, "Mixture eps")
        validate_spec(spec.left)
        validate_spec(spec.right)
    else:
        raise ParameterError(f"unknown distribution spec {spec!r}")


def tern_pmf(a: float, mu1: float, mu2: float):
    """Probability masses of Tern(a, mu1, mu2) at outcomes (-1, 0, +1).

    Raises ParameterError identifying the first outcome with negative mass.
    """
    masses = (
        (-1, (1.0 - a) / 2.0 - mu1 + mu2),
        (0, a - 2.0 * mu2),
        (1, (1.0 - a) / 2.0 + mu1 + mu2),
    )
    for outcome, mass in masses:
        if mass < -_PROB_TOL:
            raise ParameterError(
                f"Tern(a={a}, mu1={mu1}, mu2={mu2}) puts mass {mass} < 0 on outcome {outcome:+d}"
            )
    return tuple(max(m, 0.0) for _, m in masses)


def _sample_with(spec: DistSpec, g: np.random.Generator, size):
    if isinstance(spec, Bernoulli):
        return (g.random(size) < spec.p).astype(np.int64)
    if isinstance(spec, Binomial):
        return g.binomial(spec.n, spec.p, size=size)
    if isinstance(spec, Hypergeometric):
        return g.hypergeometric(spec.K, spec.N - spec.K, spec.n, size=size)
    if isinstance(spec, Gaussian):
        return spec.mu + spec.sigma * g.standard_normal(size)
    if isinstance(spec, Tern):
        probs = np.array(tern_pmf(spec.a, spec.mu1, spec.mu2))
        idx = g.choice(3, size=size, p=probs / probs.sum())
        return idx - 1
    if isinstance(spec, FinitePmf):
        values, probs = spec.as_arrays()
        idx = g.choice(values.size, size=size, p=np.clip(probs, 0, None) / probs.sum())
        return values[idx]
    if isinstance(spec, Mixture):
        take_right = g.random(size) < spec.eps
        left = np.asarray(_sample_with(spec.left, g, size), dtype=float)
        right = np.asarray(_sample_with(spec.right, g, size), dtype=float)
        return np.where(take_right, right, left)
    raise ParameterError(f"unknown distribution spec {spec!r}")


def sample(spec: DistSpec, rng: RngStream, size=None):
    """Draw from ``spec`` deterministically given ``rng``.

    The same (spec, rng) always returns the same value; callers wanting an
    i.i.d. sequence across calls advance the stream, e.g.
    ``sample(spec, rng.child("draw", i))``, or pass ``size`` to get the
    sequence in one call.
    """
    validate_spec(spec)
    g = rng.generator()
    out = _sample_with(spec, g, size)
    if size is None and np.ndim(out) == 0:
        return out.item() if isinstance(out, np.generic) else out
    return out


def finite_pmf(spec: DistSpec):
    """Exact FinitePmf of a finite-support spec, or None for continuous specs."""
    if isinstance(spec, Bernoulli):
        return FinitePmf((0.0, 1.0), (1.0 - spec.p, spec.p))
    if isinstance(spec, Binomial):
        ks = np.arange(spec.n + 1)
        return FinitePmf(tuple(ks.astype(float)), tuple(_sst.binom.pmf(ks, spec.n, spec.p)))
    if isinstance(spec, Hypergeometric):
        lo = max(0, spec.n - (spec.N - spec.K))
        hi = min(spec.n, spec.K)
        ks = np.arange(lo, hi + 1)
        pmf = _sst.hypergeom.pmf(ks, spec.N, spec.K, spec.n)
        return FinitePmf(tuple(ks.astype(float)), tuple(pmf))
    if isinstance(spec, Tern):
        return FinitePmf((-1.0, 0.0, 1.0), tern_pmf(spec.a, spec.mu1, spec.mu2))
    if isinstance(spec, FinitePmf):
        return spec
    if isinstance(spec, Mixture):
        left = finite_pmf(spec.left)
        right = finite_pmf(spec.right)
        if left is None or right is None:
            return None
        support = np.union1d(left.as_arrays()[0], right.as_arrays()[0])
        probs = np.zeros_like(support)
        for part, weight in ((left, 1.0 - spec.eps), (right, spec.eps)):
            vals, ps = part.as_arrays()
            probs[np.searchsorted(support, vals)] += weight * ps
        return FinitePmf(tuple(support), tuple(probs))
    return None


# ---------------------------------------------------------------------------
# Standard normal CDF / quantile
# ---------------------------------------------------------------------------

def normal_cdf(x):
    """Standard normal CDF via scipy's erf-based ``ndtr``.

    Absolute error is below 1e-15 everywhere, well inside the 1e-12 contract.
    """
    return _sps.ndtr(x)


def normal_quantile(p):
    """Inverse standard normal CDF; domain (0, 1) exclusive."""
    arr = np.asarray(p, dtype=float)
    if np.any(~((arr > 0.0) & (arr < 1.0))):
        raise DomainError(f"normal_quantile requires p in (0, 1), got {p!r}")
    out = _sps.ndtri(arr)
    return float(out) if np.ndim(p) == 0 else out
