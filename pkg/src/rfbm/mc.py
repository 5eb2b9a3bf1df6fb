"""Monte Carlo estimates and the replication driver."""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import norm


@dataclass(frozen=True)
class McEstimate:
    value: float
    stderr: float
    reps: int
    seed: int
    stream: str
    ci_low: float = math.nan
    ci_high: float = math.nan
    hits: int | None = None

    def summary(self):
        """The JSON record written by the CLI."""
        return {
            "estimate": self.value,
            "stderr": self.stderr,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "reps": self.reps,
            "seed": self.seed,
        }

    def as_dict(self):
        return asdict(self)


def wilson_interval(hits, n, level=0.95):
    if n == 0:
        return math.nan, math.nan
    z = norm.ppf(0.5 + level / 2)
    p = hits / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def binomial_estimate(hits, n, seed, stream):
    p = hits / n
    lo, hi = wilson_interval(hits, n)
    return McEstimate(p, math.sqrt(p * (1 - p) / n), n, seed, stream, lo, hi, hits)


def mean_estimate(samples, seed, stream):
    x = np.asarray(samples, dtype=float)
    m = float(np.mean(x))
    se = float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else math.nan
    return McEstimate(m, se, int(x.size), seed, stream, m - 1.96 * se, m + 1.96 * se)


def worker_count():
    env = os.environ.get("RFBM_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def chunk_ranges(reps, chunk):
    return [(a, min(a + chunk, reps)) for a in range(0, reps, chunk)]


def run_chunks(fn, reps, chunk):
    """Apply ``fn(first, count)`` over replication chunks, concatenated in chunk order.

    Each chunk derives its own substreams, so the result does not depend on
    the number of workers.
    """
    ranges = chunk_ranges(reps, chunk)
    workers = min(worker_count(), len(ranges))
    if workers <= 1:
        parts = [fn(a, b - a) for a, b in ranges]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda ab: fn(ab[0], ab[1] - ab[0]), ranges))
    return np.concatenate(parts)
