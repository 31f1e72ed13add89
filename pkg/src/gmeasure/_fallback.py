"""Pure-Python versions of the compiled path kernels.

Same signatures and the same arithmetic order as ``_kernels.pyx`` so that a
given uniform stream yields the same symbol sequence on either backend.
"""
import math

import numpy as np


def _phi(t):
    return 1.0 / (1.0 + math.exp(-2.0 * t)) if t > -350.0 else 0.0


def linear_pair_path(a, field_b, delta, u):
    """Binary +-1 chain with field h = sum_i a_i x_{i-1}, simulated under the
    ``b`` initial condition while scoring against ``a``.

    a[i] holds a_{i+1}; field_b[n-1] and field_b[n-1] + delta[n-1] are the
    initial-context contributions to the field at step n under the two
    initial conditions.  Returns (symbols, alpha, d).
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    N = len(u)
    w = np.empty(N, dtype=np.int64)
    alpha = np.empty(N)
    d = np.empty(N)
    wrev = np.zeros(N)
    hc = 0.0
    for i in range(N):
        n = i + 1
        if n > 1:
            hc = float(np.dot(a[: n - 1], wrev[N - n + 1:]))
        tb = hc + field_b[i]
        ta = tb + delta[i]
        pb, qb = _phi(tb), _phi(-tb)
        pa, qa = _phi(ta), _phi(-ta)
        if u[i] < pb:
            w[i] = 1
            alpha[i] = pb / pa if pa > 0.0 else math.inf
        else:
            w[i] = -1
            alpha[i] = qb / qa if qa > 0.0 else math.inf
        # phi(x) - phi(y) = phi(x) phi(-y) (1 - exp(-2(x-y))) without cancellation
        diff = pb * qa * -math.expm1(2.0 * delta[i])
        s1 = math.sqrt(pb) + math.sqrt(pa)
        s2 = math.sqrt(qb) + math.sqrt(qa)
        d[i] = diff * diff * ((1.0 / (s1 * s1) if s1 > 0.0 else 0.0) + (1.0 / (s2 * s2) if s2 > 0.0 else 0.0))
        wrev[N - n] = w[i]
    return w, alpha, d


def table_pair_path(table, k, state_a, state_b, u):
    """Depth-k table chain simulated from row ``state_b`` and scored against
    the chain started at row ``state_a``.  Returns (symbols, alpha, d)."""
    table = np.ascontiguousarray(table, dtype=np.float64)
    S = table.shape[1]
    top = S ** (k - 1) if k > 0 else 0
    N = len(u)
    w = np.empty(N, dtype=np.int64)
    alpha = np.empty(N)
    d = np.empty(N)
    sa, sb = int(state_a), int(state_b)
    for i in range(N):
        rb = table[sb]
        ra = table[sa]
        cum = 0.0
        sym = -1
        for j in range(S):
            cum += rb[j]
            if u[i] < cum:
                sym = j
                break
        if sym < 0:
            for j in range(S - 1, -1, -1):
                if rb[j] > 0.0:
                    sym = j
                    break
        w[i] = sym
        alpha[i] = rb[sym] / ra[sym] if ra[sym] > 0.0 else math.inf
        if sa == sb:
            d[i] = 0.0
        else:
            acc = 0.0
            for j in range(S):
                t = math.sqrt(ra[j]) - math.sqrt(rb[j])
                acc += t * t
            d[i] = acc
        if k > 0:
            sa = sym * top + sa // S
            sb = sym * top + sb // S
    return w, alpha, d
