"""Mining difficulty and success-time sampling.

Difficulty is a single global constant for the whole run: the sum of all
node capacities times the target block interval. Each node's time to
mine on a given tip is then exponential with mean difficulty/capacity
(the continuous limit of the per-attempt geometric race). The
exponential is memoryless, so cancelling a pending mining event on a tip
change and drawing a fresh interval is statistically neutral.

`sample_mining_interval` is the consensus-timing seam: an alternative
success-time model plugs in by providing the same
(rng_state, capacity, difficulty) -> milliseconds signature.
"""

import math

import numpy as np

from ._backend import inline_kernel
from .errors import ConfigError
from .rng import normal, uniform_open01

CAPACITY_FLOOR_DIV = 1000.0  # truncation floor = mean / 1000


def derive_difficulty(capacities, target_interval_ms) -> float:
    """difficulty = (sum of capacities) * target interval."""
    caps = list(capacities)
    if not caps:
        raise ConfigError("need at least one node capacity")
    if target_interval_ms <= 0:
        raise ConfigError(f"target interval must be positive, got {target_interval_ms}")
    if any(c <= 0 for c in caps):
        raise ConfigError("node capacities must be strictly positive")
    return float(sum(caps)) * float(target_interval_ms)


@inline_kernel
def interval_from_uniform(u, capacity, difficulty):
    """Mining interval in ms for a uniform draw u in (0, 1], clamped >= 1."""
    iv = int(math.floor(-(difficulty / capacity) * math.log(u) + 0.5))
    if iv < 1:
        return 1
    return iv


@inline_kernel
def sample_mining_interval(rng_state, capacity, difficulty):
    return interval_from_uniform(uniform_open01(rng_state), capacity, difficulty)


def sample_capacities(rng_state, n, mean) -> np.ndarray:
    """n capacity draws from Normal(mean, mean/3), floored at mean/1000."""
    if n < 1:
        raise ConfigError(f"need n >= 1 capacities, got {n}")
    if mean <= 0:
        raise ConfigError(f"capacity mean must be positive, got {mean}")
    floor = mean / CAPACITY_FLOOR_DIV
    out = np.empty(n, dtype=np.float64)
    sigma = mean / 3.0
    for i in range(n):
        c = normal(rng_state, mean, sigma)
        out[i] = c if c > floor else floor
    return out
