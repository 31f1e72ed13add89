"""Hurwitz zeta by Euler-Maclaurin summation, and power-law weight series.

Everything here returns certified absolute error bounds alongside values;
the g-function evaluators build their error budgets on top of these.
"""
from __future__ import annotations

import math

import numpy as np

# B_2, B_4, ..., B_16
_BERNOULLI = (1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6, -3617 / 510)
_SHIFT = 10
_TERMS = 7
_EPS = np.finfo(float).eps


def _em_coefficients(s: float):
    coeffs = []
    rising = s  # s (s+1) ... (s+2j-2)
    for j in range(1, _TERMS + 2):
        coeffs.append(_BERNOULLI[j - 1] / math.factorial(2 * j) * rising)
        rising *= (s + 2 * j - 1) * (s + 2 * j)
    return coeffs


def hurwitz_zeta(s: float, q, with_error: bool = False):
    """sum_{k>=0} (q+k)^{-s} for s > 1 and q > 0 (q may be an array)."""
    if not s > 1:
        raise ValueError("hurwitz_zeta needs s > 1")
    q = np.asarray(q, dtype=float)
    if np.any(q <= 0):
        raise ValueError("hurwitz_zeta needs q > 0")
    k = np.arange(_SHIFT, dtype=float)
    head = np.sum((q[..., None] + k) ** (-s), axis=-1)
    a = q + _SHIFT
    coeffs = _em_coefficients(s)
    total = head + a ** (1 - s) / (s - 1) + 0.5 * a ** (-s)
    for j in range(1, _TERMS + 1):
        total = total + coeffs[j - 1] * a ** (-s - 2 * j + 1)
    if not with_error:
        return total if total.ndim else float(total)
    # remainder is bounded by twice the first omitted term; add summation rounding
    err = 2 * np.abs(coeffs[_TERMS] * a ** (-s - 2 * _TERMS - 1)) + 8 * _EPS * np.abs(total)
    if total.ndim:
        return total, err
    return float(total), float(err)


def riemann_zeta(s: float) -> float:
    return hurwitz_zeta(s, 1.0)


class PowerWeights:
    """Weights w_k = scale * k^{-power} for k >= 1 with closed-form tails."""

    def __init__(self, power: float, scale: float = 1.0):
        if power <= 1:
            raise ValueError("power-law weights need power > 1 to be summable")
        if scale <= 0:
            raise ValueError("scale must be positive")
        self.power = float(power)
        self.scale = float(scale)
        self._cache = np.empty(0)
        self._cutoffs = {}

    def __repr__(self):
        return f"PowerWeights(power={self.power}, scale={self.scale})"

    def __call__(self, k):
        return self.scale * np.asarray(k, dtype=float) ** (-self.power)

    def first(self, n: int) -> np.ndarray:
        """w_1, ..., w_n (cached, read-only)."""
        if len(self._cache) < n:
            size = max(n, 2 * len(self._cache))
            w = self(np.arange(1, size + 1))
            w.flags.writeable = False
            self._cache = w
        return self._cache[:n]

    def total(self) -> float:
        return self.scale * riemann_zeta(self.power)

    def tail(self, n, with_error: bool = False):
        """sum_{k >= n} w_k, n >= 1."""
        v, e = hurwitz_zeta(self.power, n, with_error=True)
        if with_error:
            return self.scale * v, self.scale * e
        return self.scale * v

    def class_sum(self, start, period: int, with_error: bool = False):
        """sum_{m >= 0} w_{start + m*period}."""
        p = float(period)
        v, e = hurwitz_zeta(self.power, np.asarray(start, dtype=float) / p, with_error=True)
        f = self.scale * p ** (-self.power)
        if with_error:
            return f * v, f * e
        return f * v

    def cutoff(self, budget: float) -> int:
        """Smallest L with sum_{k > L} w_k <= budget."""
        if budget not in self._cutoffs:
            self._cutoffs[budget] = self._cutoff(budget)
        return self._cutoffs[budget]

    def _cutoff(self, budget: float) -> int:
        # integral estimate, then walk to the exact boundary
        L = max(1, int((self.scale / ((self.power - 1) * budget)) ** (1 / (self.power - 1))))
        while L > 1 and self.tail(L) <= budget:
            L //= 2
        while self.tail(L + 1) > budget:
            L *= 2
        lo, hi = L // 2, L
        while lo < hi:
            mid = (lo + hi) // 2
            if self.tail(mid + 1) <= budget:
                hi = mid
            else:
                lo = mid + 1
        return lo
