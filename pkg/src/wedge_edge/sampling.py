"""Seeded random streams, quasi-random points and Monte Carlo measure estimates.

Every stochastic routine takes an integer seed and a *stream index*; the pair
determines the generator, so work split across threads reproduces the
sequential result exactly.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import stats
from scipy.stats import qmc

Indicator = Callable[[np.ndarray], np.ndarray]


def stream(seed: int, *index: int) -> np.random.Generator:
    """Independent generator for substream ``index`` of ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(i) for i in index)))


def ordered_map(fn: Callable, items: Sequence, workers: int = 1) -> list:
    """``[fn(x) for x in items]``, optionally on a thread pool; order is preserved."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def halton(nvars: int, count: int, seed: int = 0, skip: int = 1) -> np.ndarray:
    """Low-discrepancy points in ``[0, 1)^nvars``.

    Scrambling is keyed on ``seed``; the first ``skip`` points (the origin for
    an unscrambled sequence) are dropped.
    """
    sampler = qmc.Halton(d=nvars, scramble=True, seed=np.random.default_rng(seed))
    if skip:
        sampler.fast_forward(skip)
    return sampler.random(count)


def clopper_pearson_lower(hits: int, trials: int, confidence: float = 0.99) -> float:
    """One-sided lower confidence bound for a binomial proportion."""
    if trials <= 0:
        return 0.0
    if hits <= 0:
        return 0.0
    return float(stats.beta.ppf(1.0 - confidence, hits, trials - hits + 1))


@dataclass(frozen=True)
class MeasureEstimate:
    value: float
    lower: float
    hits: int
    trials: int


def as_indicator(fn: Callable, nvars: int) -> Indicator:
    """Wrap a scalar predicate ``fn(x) -> bool`` as a vectorised indicator."""

    def vec(points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, nvars)
        return np.fromiter((bool(fn(p)) for p in pts), dtype=bool, count=len(pts))

    return vec


def estimate_measure(
    indicator: Indicator,
    nvars: int,
    samples: int = 100_000,
    seed: int = 0,
    confidence: float = 0.99,
    chunks: int = 16,
    workers: int = 1,
) -> MeasureEstimate:
    """Monte Carlo volume of ``{x in [0,1]^n : indicator(x)}``.

    Samples are drawn in ``chunks`` independent substreams so the result does
    not depend on ``workers``.
    """
    if nvars == 0:
        hit = bool(np.asarray(indicator(np.zeros((1, 0)))).reshape(-1)[0])
        return MeasureEstimate(float(hit), float(hit), int(hit), 1)
    sizes = [samples // chunks + (1 if i < samples % chunks else 0) for i in range(chunks)]

    def run(i):
        if sizes[i] == 0:
            return 0
        pts = stream(seed, 0x5EED, i).random((sizes[i], nvars))
        return int(np.count_nonzero(indicator(pts)))

    hits = sum(ordered_map(run, list(range(chunks)), workers))
    return MeasureEstimate(hits / samples, clopper_pearson_lower(hits, samples, confidence), hits, samples)
