"""Seedable random stream shared by every stochastic draw in a run.

The generator is splitmix64: a 64-bit counter-mix PRNG with a single
uint64 word of state, kept in a one-element numpy array so kernels can
advance it in place. The core step has two flavors with identical output:
native wrapping uint64 arithmetic under numba, masked Python integers
under the interpreted backend (numpy scalar arithmetic warns on
overflow, Python ints don't wrap). Everything downstream of the core is
shared source, so a given seed yields the same stream on both backends.

All continuous samplers use inverse-CDF or Box-Muller forms built only
on ``math.log``/``sqrt``/``cos``/``pow`` so that compiled and interpreted
runs agree bit for bit.
"""

import math

import numpy as np

from ._backend import USING_NUMBA, inline_kernel

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# Pareto shape with coefficient of variation 0.2: alpha*(alpha-2) = 25.
PARETO_ALPHA = 1.0 + math.sqrt(26.0)

_TWO_PI = 6.283185307179586
_INV_2_53 = 1.0 / 9007199254740992.0  # 2**-53


def new_stream(seed: int) -> np.ndarray:
    """Fresh generator state from a 64-bit seed."""
    st = np.zeros(1, dtype=np.uint64)
    st[0] = np.uint64(seed & _MASK64)
    return st


if USING_NUMBA:

    @inline_kernel
    def next_u64(state):
        s = state[0] + np.uint64(_GOLDEN)
        state[0] = s
        z = s
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))

else:

    def next_u64(state):
        s = (int(state[0]) + _GOLDEN) & _MASK64
        state[0] = s
        z = s
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)


@inline_kernel
def uniform_open01(state):
    """Uniform draw in (0, 1], safe as a log/pow argument."""
    return (float(next_u64(state) >> np.uint64(11)) + 1.0) * _INV_2_53


@inline_kernel
def randint_below(state, n):
    """Uniform integer in [0, n). Modulo bias is ~n/2**64, negligible."""
    return int(next_u64(state) % np.uint64(n))


@inline_kernel
def exponential(state, mean):
    """Exponential draw with the given mean (inverse CDF)."""
    return -mean * math.log(uniform_open01(state))


@inline_kernel
def pareto_cv20(state, mean):
    """Pareto draw with the given mean and a 20% coefficient of variation.

    Shape alpha = 1 + sqrt(26); scale x_m = mean * (alpha - 1) / alpha, so
    every sample is >= x_m ~= 0.836 * mean.
    """
    xm = mean * (PARETO_ALPHA - 1.0) / PARETO_ALPHA
    return xm * uniform_open01(state) ** (-1.0 / PARETO_ALPHA)


@inline_kernel
def normal(state, mu, sigma):
    """Gaussian draw via Box-Muller (consumes two uniforms)."""
    u1 = uniform_open01(state)
    u2 = uniform_open01(state)
    r = math.sqrt(-2.0 * math.log(u1))
    return mu + sigma * r * math.cos(_TWO_PI * u2)


@inline_kernel
def round_half_up(x):
    """Round a non-negative float to the nearest integer, halves up."""
    return int(math.floor(x + 0.5))
