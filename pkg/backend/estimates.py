# backend/estimates.py
"""
Monte Carlo plumbing: per-sample seed streams, an order-preserving worker
pool, and mean / ratio estimators with normal confidence intervals.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .sampling import SeedSpec


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    ci_low: float
    ci_high: float
    n: int
    seed: int
    level: float = 0.95

    def limits(self, level: float) -> Tuple[float, float]:
        z = z_value(level)
        return self.value - z * self.stderr, self.value + z * self.stderr

    def within(self, target: float, n_se: float = 4.0) -> bool:
        return abs(self.value - target) <= n_se * self.stderr

    def to_dict(self) -> Dict[str, Any]:
        return {
            "value": self.value,
            "stderr": self.stderr,
            "ci95": [self.ci_low, self.ci_high],
            "n": self.n,
            "seed": self.seed,
        }


def z_value(level: float) -> float:
    return float(stats.norm.ppf(0.5 + level / 2.0))


def _build(value: float, stderr: float, n: int, seed: int, level: float) -> Estimate:
    z = z_value(level)
    return Estimate(
        value=float(value),
        stderr=float(stderr),
        ci_low=float(value - z * stderr),
        ci_high=float(value + z * stderr),
        n=int(n),
        seed=int(seed),
        level=level,
    )


def mean_estimate(values: Sequence[float], seed: int, level: float = 0.95) -> Estimate:
    x = np.asarray(values, dtype=np.float64)
    n = len(x)
    if n == 0:
        raise ValueError("cannot estimate a mean from zero samples")
    # np.sum is pairwise, so the result does not depend on how samples were chunked
    mean = np.sum(x) / n
    stderr = float(np.std(x, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return _build(mean, stderr, n, seed, level)


def ratio_estimate(
    numerator: Sequence[float],
    denominator: Sequence[float],
    seed: int,
    level: float = 0.95,
) -> Optional[Estimate]:
    """
    Ratio of means E[X]/E[Y] with a delta-method standard error.
    Returns None when the denominator never fires.
    """
    x = np.asarray(numerator, dtype=np.float64)
    y = np.asarray(denominator, dtype=np.float64)
    n = len(x)
    y_bar = np.sum(y) / n if n else 0.0
    if n == 0 or y_bar == 0.0:
        return None
    ratio = (np.sum(x) / n) / y_bar
    residual = x - ratio * y
    stderr = float(np.std(residual, ddof=1) / (np.sqrt(n) * y_bar)) if n > 1 else 0.0
    return _build(ratio, stderr, n, seed, level)


def paired_difference(a: Sequence[float], b: Sequence[float], seed: int) -> Estimate:
    return mean_estimate(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64), seed)


# --------- Sample streams --------- #

def _run_chunk(fn: Callable[[SeedSpec], Any], seed: SeedSpec, start: int, stop: int) -> List[Any]:
    return [fn(seed.offset(i)) for i in range(start, stop)]


def run_streams(
    fn: Callable[[SeedSpec], Any],
    n_samples: int,
    seed: SeedSpec,
    workers: int = 1,
    label: str = "samples",
) -> List[Any]:
    """
    Evaluate fn on the streams seed.offset(0..n_samples-1), returning results
    in stream order whatever the worker count. fn must be picklable when
    workers > 1 (module-level function or partial of one).
    """
    step = max(1, n_samples // 10)
    if workers <= 1 or n_samples < 2 * workers:
        results = []
        for i in range(n_samples):
            results.append(fn(seed.offset(i)))
            if (i + 1) % step == 0:
                logging.info("%d/%d %s", i + 1, n_samples, label)
        return results

    n_chunks = workers * 4
    bounds = [n_samples * j // n_chunks for j in range(n_chunks + 1)]
    results: List[Any] = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(_run_chunk, fn, seed, a, b) for a, b in zip(bounds, bounds[1:]) if b > a
        ]
        for fut in futures:
            results.extend(fut.result())
            logging.info("%d/%d %s", len(results), n_samples, label)
    return results
