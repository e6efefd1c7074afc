"""Seedable, portable pseudo-random source for synthetic cohorts.

Relying on a platform or library default generator would tie simulated
cohorts to one runtime, so the whole pipeline is pinned down explicitly:

* 64-bit stream: xoshiro256++ (Blackman & Vigna), state seeded by four
  successive outputs of splitmix64 applied to the user seed;
* uniform on [0, 1): ``(word >> 11) * 2**-53``;
* uniform on (0, 1), used for inversion sampling: ``((word >> 11) + 0.5)
  * 2**-53``;
* standard normal: inverse normal CDF of the open-interval uniform,
  evaluated with Wichura's PPND16 rational approximation (algorithm
  AS 241, accurate to ~1e-16 over the full range).

Any implementation of this recipe reproduces the same cohorts bit for
bit from the same seed. The batch word generator lives in
``centile._kernels`` (compiled when available).
"""

from __future__ import annotations

import numpy as np

from . import _kernels

_MASK64 = (1 << 64) - 1
_TWO53_INV = 2.0 ** -53


def _splitmix64_stream(seed: int, n: int) -> list[int]:
    """First ``n`` outputs of splitmix64 started at ``seed``."""
    x = seed & _MASK64
    out = []
    for _ in range(n):
        x = (x + 0x9E3779B97F4A7C15) & _MASK64
        z = x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        out.append(z ^ (z >> 31))
    return out


class Xoshiro256pp:
    """xoshiro256++ stream with documented uniform/normal derivations."""

    def __init__(self, seed: int):
        if not isinstance(seed, (int, np.integer)):
            raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
        self.seed = int(seed)
        words = _splitmix64_stream(self.seed, 4)
        self._state = np.array(words, dtype=np.uint64)

    def raw(self, n: int) -> np.ndarray:
        """Next ``n`` 64-bit words as a uint64 array."""
        if n < 0:
            raise ValueError("n must be nonnegative")
        return _kernels.xoshiro_fill(self._state, n)

    def uniform(self, n: int) -> np.ndarray:
        """Uniforms on [0, 1)."""
        return (self.raw(n) >> np.uint64(11)).astype(np.float64) * _TWO53_INV

    def open_uniform(self, n: int) -> np.ndarray:
        """Uniforms on the open interval (0, 1); safe for CDF inversion."""
        w = (self.raw(n) >> np.uint64(11)).astype(np.float64)
        return (w + 0.5) * _TWO53_INV

    def uniform_range(self, lo: float, hi: float, n: int) -> np.ndarray:
        return lo + (hi - lo) * self.uniform(n)

    def normal(self, n: int) -> np.ndarray:
        """Standard normals by inversion (PPND16)."""
        return ppnd16(self.open_uniform(n))


# Coefficients of Wichura's PPND16 (AS 241), double precision.
_A = (
    3.3871328727963666080e0,
    1.3314166789178437745e2,
    1.9715909503065514427e3,
    1.3731693765509461125e4,
    4.5921953931549871457e4,
    6.7265770927008700853e4,
    3.3430575583588128105e4,
    2.5090809287301226727e3,
)
_B = (
    1.0,
    4.2313330701600911252e1,
    6.8718700749205790830e2,
    5.3941960214247511077e3,
    2.1213794301586595867e4,
    3.9307895800092710610e4,
    2.8729085735721942674e4,
    5.2264952788528545610e3,
)
_C = (
    1.42343711074968357734e0,
    4.63033784615654529590e0,
    5.76949722146069140550e0,
    3.64784832476320460504e0,
    1.27045825245236838258e0,
    2.41780725177450611770e-1,
    2.27238449892691845833e-2,
    7.74545014278341407640e-4,
)
_D = (
    1.0,
    2.05319162663775882187e0,
    1.67638483018380384940e0,
    6.89767334985100004550e-1,
    1.48103976427480074590e-1,
    1.51986665636164571966e-2,
    5.47593808499534494600e-4,
    1.05075007164441684324e-9,
)
_E = (
    6.65790464350110377720e0,
    5.46378491116411436990e0,
    1.78482653991729133580e0,
    2.96560571828504891230e-1,
    2.65321895265761230930e-2,
    1.24266094738807843860e-3,
    2.71155556874348757815e-5,
    2.01033439929228813265e-7,
)
_F = (
    1.0,
    5.99832206555887937690e-1,
    1.36929880922735805310e-1,
    1.48753612908506148525e-2,
    7.86869131145613259100e-4,
    1.84631831751005468180e-5,
    1.42151175831644588870e-7,
    2.04426310338993978564e-15,
)


def _poly(coef, x):
    """Horner evaluation with coefficients ordered low to high degree."""
    acc = np.full_like(x, coef[-1], dtype=np.float64)
    for c in reversed(coef[:-1]):
        acc = acc * x + c
    return acc


def ppnd16(p):
    """Inverse standard normal CDF, Wichura's AS 241 (PPND16 variant).

    Accepts scalars or arrays with entries strictly inside (0, 1).
    """
    p = np.asarray(p, dtype=np.float64)
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ValueError("ppnd16 requires probabilities strictly in (0, 1)")
    q = p - 0.5
    out = np.empty_like(q)

    central = np.abs(q) <= 0.425
    if np.any(central):
        r = 0.180625 - q[central] * q[central]
        out[central] = q[central] * _poly(_A, r) / _poly(_B, r)

    tails = ~central
    if np.any(tails):
        qt = q[tails]
        r = np.where(qt < 0.0, p[tails], 1.0 - p[tails])
        r = np.sqrt(-np.log(r))
        near = r <= 5.0
        val = np.empty_like(r)
        if np.any(near):
            rr = r[near] - 1.6
            val[near] = _poly(_C, rr) / _poly(_D, rr)
        if np.any(~near):
            rr = r[~near] - 5.0
            val[~near] = _poly(_E, rr) / _poly(_F, rr)
        out[tails] = np.where(qt < 0.0, -val, val)

    if out.ndim == 0:
        return float(out)
    return out
