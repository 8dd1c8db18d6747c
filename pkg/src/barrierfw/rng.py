"""Pinned, seedable pseudo-random draws for reproducible instances.

All distributions are derived from the raw 64-bit output stream of a PCG64
bit generator (seeded through numpy's SeedSequence), so a fixed seed yields
bit-identical instances regardless of numpy's distribution implementations:

* uniforms map the top 53 bits of each word into the open interval (0, 1),
* normals use the Box-Muller transform (two uniforms per value),
* Poisson draws use sequential inversion for small means and the PTRS
  transformed-rejection sampler for means of 10 and above.

The stream contract is the sequence of method calls; callers must keep call
order fixed to keep instances reproducible.
"""

from __future__ import annotations

import math

import numpy as np

GENERATOR_NAME = "pcg64-boxmuller-ptrs"
GENERATOR_VERSION = "1"

_PTRS_SWITCH = 10.0
_TWO_PI = 2.0 * math.pi


class SeededRng:
    def __init__(self, seed: int):
        self.seed = int(seed)
        self._bits = np.random.PCG64(np.random.SeedSequence(self.seed))

    def _raw(self, n: int) -> np.ndarray:
        return self._bits.random_raw(n)

    def uniform(self, low: float = 0.0, high: float = 1.0, size: int | None = None):
        """Uniform draws on the open interval (low, high)."""
        n = 1 if size is None else int(size)
        u = ((self._raw(n) >> np.uint64(11)).astype(np.float64) + 0.5) * (2.0 ** -53)
        out = low + (high - low) * u
        return float(out[0]) if size is None else out

    def normal(self, mean: float = 0.0, std: float = 1.0, size: int | None = None):
        n = 1 if size is None else int(size)
        pairs = (n + 1) // 2
        u1 = self.uniform(size=pairs)
        u2 = self.uniform(size=pairs)
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.empty(2 * pairs)
        z[0::2] = r * np.cos(_TWO_PI * u2)
        z[1::2] = r * np.sin(_TWO_PI * u2)
        out = mean + std * z[:n]
        return float(out[0]) if size is None else out

    def poisson(self, lam: float) -> int:
        if lam < 0.0 or not math.isfinite(lam):
            raise ValueError("Poisson mean must be finite and nonnegative")
        if lam == 0.0:
            return 0
        if lam < _PTRS_SWITCH:
            return self._poisson_inversion(lam)
        return self._poisson_ptrs(lam)

    def poisson_array(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=np.float64)
        return np.array([self.poisson(v) for v in lam.ravel()], dtype=np.int64).reshape(lam.shape)

    def _poisson_inversion(self, lam: float) -> int:
        # sequential search through the CDF; one uniform per draw
        u = self.uniform()
        p = math.exp(-lam)
        cum = p
        k = 0
        while u > cum and k < 10_000:
            k += 1
            p *= lam / k
            cum += p
        return k

    def _poisson_ptrs(self, lam: float) -> int:
        # transformed rejection with squeeze; constants from the PTRS sampler
        slam = math.sqrt(lam)
        loglam = math.log(lam)
        b = 0.931 + 2.53 * slam
        a = -0.059 + 0.02483 * b
        inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
        v_r = 0.9277 - 3.6224 / (b - 2.0)
        while True:
            u = self.uniform() - 0.5
            v = self.uniform()
            us = 0.5 - abs(u)
            k = int(math.floor((2.0 * a / us + b) * u + lam + 0.43))
            if us >= 0.07 and v <= v_r:
                return k
            if k < 0 or (us < 0.013 and v > us):
                continue
            if math.log(v * inv_alpha / (a / (us * us) + b)) <= k * loglam - lam - math.lgamma(k + 1.0):
                return k

    def choice_without_replacement(self, n: int, k: int) -> np.ndarray:
        """k distinct indices from range(n), sorted ascending."""
        if not 0 < k <= n:
            raise ValueError("need 0 < k <= n")
        pool = np.arange(n)
        for i in range(k):
            j = i + int(self.uniform() * (n - i))
            j = min(j, n - 1)
            pool[i], pool[j] = pool[j], pool[i]
        return np.sort(pool[:k])

    def simplex_uniform(self, m: int) -> np.ndarray:
        """A uniform draw from the interior of the unit simplex."""
        g = -np.log(self.uniform(size=m))
        return g / g.sum()
