"""g-functions: certified evaluation, variation brackets and the example registry.

A g-function assigns to each point sigma.x of the one-sided shift the
conditional probability of the symbol ``sigma`` given the context ``x``.
Every evaluator returns a value together with a certified absolute error,
built from closed-form series tails.

Index conventions (used consistently by every bound below):

* ``var_n g`` is the oscillation of g over pairs of points agreeing on
  coordinates 0..n, i.e. same symbol and contexts agreeing on context
  coordinates 0..n-1.
* ``(svar_n sqrt g)^2`` is ``sup_x sum_sigma (var_{n+1} sqrt g(sigma, x))^2``
  where the inner oscillation is taken at the point (sigma, x), i.e. over
  contexts agreeing with x on context coordinates 0..n.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, HeavyTail, OutsideSubshift, PrecisionUnavailable
from .seqspace import Alphabet, Context, concat, random_context
from .zeta import PowerWeights, riemann_zeta

DEFAULT_TOL = 1e-9
SAMPLING_CUTOFF = 1e-12
_EPS = float(np.finfo(float).eps)
# sup_t of d/dt sqrt(phi(t)) for the logistic phi(t) = 1/(1+exp(-2t))
_SQRT_PHI_LIPSCHITZ = 2 / (3 * math.sqrt(3))


class Evaluation(NamedTuple):
    value: float
    error: float


class Bracket(NamedTuple):
    """Sampled lower bound and analytic upper bound (None when unknown)."""

    lower: float
    upper: float | None


@dataclass
class SymbolDistribution:
    """Conditional law of the next symbol over an enumerated prefix.

    ``tail_mass`` bounds the probability of the symbols not listed and
    ``error`` bounds the absolute error of each listed probability.
    """

    symbols: np.ndarray
    probs: np.ndarray
    tail_mass: float = 0.0
    error: float = 0.0

    def __post_init__(self):
        self.symbols = np.asarray(self.symbols, dtype=np.int64)
        self.probs = np.asarray(self.probs, dtype=float)

    def __len__(self):
        return len(self.symbols)

    def prob(self, sigma: int) -> float:
        idx = np.flatnonzero(self.symbols == sigma)
        return float(self.probs[idx[0]]) if idx.size else 0.0

    def total(self) -> float:
        return float(self.probs.sum())


class GFunction:
    """Base class.  Subclasses implement ``_evaluate`` and the bound hooks."""

    kind = "g"
    alphabet: Alphabet
    depth = math.inf
    description = ""

    @property
    def spec_string(self) -> str:
        raise NotImplementedError

    def __repr__(self):
        return f"<{type(self).__name__} {self.spec_string}>"

    # -- evaluation -------------------------------------------------------

    def allowed(self, sigma: int, ctx: Context) -> bool:
        return sigma in self.alphabet

    def evaluate(self, sigma: int, ctx: Context, tol: float = DEFAULT_TOL) -> Evaluation:
        """g(sigma . ctx) with ``|value - g| <= error <= tol``."""
        if tol <= 0:
            raise ValueError("tol must be positive")
        if not self.allowed(sigma, ctx):
            raise OutsideSubshift(f"symbol {sigma} not allowed before {ctx!r}")
        value, err = self._evaluate(sigma, ctx, tol)
        if err > tol:
            raise PrecisionUnavailable(f"{self.spec_string}: error {err:.3g} exceeds tol {tol:.3g}")
        return Evaluation(value, err)

    def __call__(self, sigma: int, ctx: Context) -> float:
        return self.evaluate(sigma, ctx).value

    def _evaluate(self, sigma, ctx, tol):
        raise NotImplementedError

    def candidates(self, ctx: Context, M=None) -> tuple:
        """Allowed symbols before ``ctx`` under truncation rank ``M``."""
        return tuple(s for s in self.alphabet.truncate(M) if self.allowed(s, ctx))

    def tail_mass_bound(self, ctx: Context, M) -> float:
        """Upper bound on the g-mass of allowed symbols beyond rank ``M``."""
        if self.alphabet.is_finite:
            return 0.0
        raise NotImplementedError

    def distribution(
        self,
        ctx: Context,
        M=None,
        cutoff: float = SAMPLING_CUTOFF,
        tol: float = DEFAULT_TOL,
    ) -> SymbolDistribution:
        if not self.alphabet.is_finite and M is None:
            M = 8
            while self.tail_mass_bound(ctx, M) > cutoff:
                M *= 2
                if M > 1 << 22:
                    raise HeavyTail(f"{self.spec_string}: tail mass above {cutoff:g} at rank {M}")
        syms = self.candidates(ctx, M)
        vals = [self.evaluate(s, ctx, tol) for s in syms]
        return SymbolDistribution(
            syms,
            [v.value for v in vals],
            self.tail_mass_bound(ctx, M),
            max((v.error for v in vals), default=0.0),
        )

    # -- analytic certificates -------------------------------------------

    def var_bound(self, n: int):
        """Upper bound for var_n g, or None."""
        return None

    def svar_sq_bound(self, n: int):
        """Upper bound for (svar_n sqrt g)^2, or None."""
        return None

    def svar_summable(self):
        """True/False when summability of (svar_n sqrt g)^2 is certified, else None."""
        return None

    def var_log_bound(self, n: int):
        """Upper bound for var_n log g (math.inf when unbounded), or None."""
        return None

    # -- sampling helpers -------------------------------------------------

    def random_context(self, rng: np.random.Generator) -> Context:
        return random_context(self.alphabet, rng)

    def adversarial_contexts(self) -> list:
        syms = self.alphabet.truncate(3)
        out = [Context.const(s) for s in syms]
        if len(syms) > 1:
            out.append(Context.periodic(syms[:2]))
        return out

    def probe_symbols(self, ctx: Context, rng: np.random.Generator) -> tuple:
        if self.alphabet.is_finite:
            return self.candidates(ctx)
        ranks = list(range(6)) + rng.integers(6, 64, size=2).tolist()
        syms = [self.alphabet.symbol_at(r) for r in ranks]
        return tuple(s for s in syms if self.allowed(s, ctx))


# ---------------------------------------------------------------------------
# weighted context series  sum_{k>=1} w_k f(x_{k-1})
# ---------------------------------------------------------------------------


def _weighted_series(weights: PowerWeights, ctx: Context, f, f_range, tol: float, offset: int = 1):
    """sum_{j>=0} w_{offset+j} f(ctx_j) with a certified error.

    The head is summed directly (or cut where the remaining weight is below
    tol/4, using the midpoint of the f-range for the rest); the periodic tail
    is summed exactly by residue classes with Hurwitz zeta.
    """
    head = ctx.head
    H = len(head)
    fmin, fmax = f_range
    span = fmax - fmin
    cut = math.inf
    if span > 0:
        cut = weights.cutoff(tol / 4) - offset + 1
    if H > cut:
        L = max(int(cut), 0)
        w = weights.first(offset + L - 1)[offset - 1:]
        vals = f(head[:L].astype(float))
        part = float(np.dot(w, vals))
        rest = weights.tail(offset + L)
        value = part + rest * (fmin + fmax) / 2
        err = rest * span / 2 + 4 * _EPS * (L + 1) * weights.total() * max(abs(fmin), abs(fmax))
        return value, err
    w = weights.first(offset + H - 1)[offset - 1:]
    part = float(np.dot(w, f(head.astype(float)))) if H else 0.0
    p = ctx.period
    tvals = f(np.asarray(ctx.tail, dtype=float))
    starts = offset + H + np.arange(p)
    sums, errs = weights.class_sum(starts, p, with_error=True)
    value = part + float(np.dot(sums, tvals))
    bound = max(abs(fmin), abs(fmax))
    err = float(np.sum(errs)) * bound + 4 * _EPS * (H + p + 1) * weights.total() * bound
    return value, err


# ---------------------------------------------------------------------------
# registry members
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Ex11Params:
    """p_i = (q-1) q^{-i} for i >= 1 (so sum p_i = 1) and exponent alpha > 0."""

    alpha: float = 0.5
    q: float = 2.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ConfigError("ex11 needs alpha > 0")
        if not self.q > 1:
            raise ConfigError("ex11 needs a geometric base q > 1")

    def p(self, i):
        return (self.q - 1) * self.q ** (-np.asarray(i, dtype=float))

    def p_tail(self, M: int) -> float:
        """sum_{i > M} p_i."""
        return self.q ** (-M)


class Ex11(GFunction):
    """Countable alphabet {0,1,2,...}: g(i,x) = p_i b(x) for i >= 1,
    g(0,x) = 1 - b(x), with b(x) = zeta(3+alpha)^{-1} sum_k k^{-(3+alpha)} / (1 + x_{k-1}).

    Square-summable s-variation although var_n log g is infinite.
    """

    kind = "ex11"
    description = (
        "countable alphabet, g(i,x)=p_i b(x), g(0,x)=1-b(x); svar-summable, var(log g) infinite, g has zeros"
    )

    def __init__(self, alpha: float = 0.5, q: float = 2.0):
        self.params = Ex11Params(alpha, q)
        self.alphabet = Alphabet("naturals")
        self.s = 3.0 + self.params.alpha
        self.weights = PowerWeights(self.s, 1.0 / riemann_zeta(self.s))

    @property
    def spec_string(self):
        return f"ex11:alpha={self.params.alpha:g},p=geom{self.params.q:g}"

    @staticmethod
    def _f(c):
        return 1.0 / (1.0 + c)

    def b(self, ctx: Context, tol: float = DEFAULT_TOL) -> Evaluation:
        v, e = _weighted_series(self.weights, ctx, self._f, (0.0, 1.0), tol)
        return Evaluation(min(max(v, 0.0), 1.0), e)

    def _evaluate(self, sigma, ctx, tol):
        b, e = self.b(ctx, tol)
        if sigma == 0:
            return 1.0 - b, e + _EPS
        p = float(self.params.p(sigma))
        return p * b, p * e + _EPS * p

    def tail_mass_bound(self, ctx, M):
        b, e = self.b(ctx)
        return (b + e) * self.params.p_tail(int(M))

    def distribution(self, ctx, M=None, cutoff=SAMPLING_CUTOFF, tol=DEFAULT_TOL):
        b, e = self.b(ctx, tol)
        if e > tol:
            raise PrecisionUnavailable(f"{self.spec_string}: error {e:.3g} exceeds tol {tol:.3g}")
        if M is None:
            hi = b + e
            M = 1 if hi <= cutoff else max(1, math.ceil(math.log(hi / cutoff) / math.log(self.params.q)))
        M = int(M)
        probs = np.empty(M + 1)
        probs[0] = 1.0 - b
        probs[1:] = self.params.p(np.arange(1, M + 1)) * b
        return SymbolDistribution(np.arange(M + 1), probs, (b + e) * self.params.p_tail(M), e + _EPS)

    def var_b_bound(self, n: int) -> float:
        """var_n b: contexts agreeing on coordinates 0..n differ from k = n+2 on."""
        return float(self.weights.tail(n + 2))

    def var_bound(self, n):
        return float(self.weights.tail(n + 1))

    def svar_sq_bound(self, n):
        # sqrt(var_n b) dominates the sharper 2 var_n b because var_n b <= 1/4
        return math.sqrt(self.var_b_bound(n))

    def svar_sq_bounds(self, n: np.ndarray) -> np.ndarray:
        return np.sqrt(self.weights.tail(np.asarray(n) + 2.0))

    def svar_summable(self):
        return True

    def var_log_bound(self, n):
        return math.inf

    def adversarial_contexts(self):
        return [
            Context.const(0),
            Context.const(1),
            Context.const(1000),
            Context.periodic((0, 1000)),
            Context((0, 0, 0), (10**6,)),
        ]


class Hulse(GFunction):
    """Binary alphabet: g = a_n when x_0..x_{n-1} = 0, x_n = 1 and
    g = 1 - a_n when x_0 = x_n = 1 with zeros in between; a_n = a + d n^{-r}.

    On the all-zeros context the limit value ``a`` is used.
    """

    kind = "hulse"
    description = "Hulse's binary example: unique g-measure with no variation hypothesis on a_n"

    def __init__(self, a: float = 0.5, d: float = 0.3, r: float = 1.0):
        self.a, self.d, self.r = float(a), float(d), float(r)
        if not 0 < self.a < 1:
            raise ConfigError("hulse needs 0 < a < 1")
        if self.r <= 0:
            raise ConfigError("hulse needs r > 0")
        # a_n is monotone in n, so its range is spanned by a_1 and the limit a
        if not 0 < self.a + self.d < 1:
            raise ConfigError("hulse needs 0 < a_1 = a + d < 1")
        self.alphabet = Alphabet.range(2)

    @property
    def spec_string(self):
        return f"hulse:a={self.a:g},d={self.d:g},r={self.r:g}"

    def a_n(self, n):
        return self.a + self.d * np.asarray(n, dtype=float) ** (-self.r)

    @staticmethod
    def first_one(ctx: Context):
        hits = np.flatnonzero(ctx.head == 1)
        if hits.size:
            return int(hits[0])
        if 1 in ctx.tail:
            return len(ctx.head) + ctx.tail.index(1)
        return None

    def _evaluate(self, sigma, ctx, tol):
        m = self.first_one(ctx)
        an = self.a if m is None else float(self.a_n(m + 1))
        return (an if sigma == 0 else 1.0 - an), _EPS

    def var_bound(self, n):
        return abs(self.d) * (n + 1) ** (-self.r)

    def svar_sq_bound(self, n):
        an = float(self.a_n(n + 2))
        return (math.sqrt(an) - math.sqrt(self.a)) ** 2 + (math.sqrt(1 - an) - math.sqrt(1 - self.a)) ** 2

    def svar_summable(self):
        return self.r > 0.5 or self.d == 0

    def adversarial_contexts(self):
        return [Context.const(0), Context.const(1), Context((0,) * 5, (1,)), Context.periodic((0, 1))]


class Spin(GFunction):
    """Alphabet {+1,-1}: g(+-1, x) = phi(+- sum_i a_i x_{i-1}), phi(t) = e^t / (e^t + e^{-t}),
    with a_i = scale * i^{-beta}."""

    kind = "spin"
    description = "spin chain g(+-1,x)=phi(+-sum a_i x_i); beta <= 3/2 gives mutually singular chains"

    def __init__(self, beta: float = 1.5, scale: float = 1.0):
        if not beta > 1:
            raise ConfigError("spin needs a_i = c i^-beta with beta > 1")
        self.a = PowerWeights(beta, scale)
        self.alphabet = Alphabet.finite((1, -1))

    @property
    def beta(self):
        return self.a.power

    @property
    def spec_string(self):
        s = f"spin:a=pow{self.a.power:g}"
        if self.a.scale != 1.0:
            s += f",scale={self.a.scale:g}"
        return s

    @staticmethod
    def phi(t):
        return 1.0 / (1.0 + np.exp(-2.0 * np.asarray(t, dtype=float)))

    def field(self, ctx: Context, tol: float = DEFAULT_TOL) -> Evaluation:
        """h(x) = sum_{i>=1} a_i x_{i-1}."""
        v, e = _weighted_series(self.a, ctx, lambda c: c, (-1.0, 1.0), tol)
        return Evaluation(v, e)

    def init_fields(self, ctx: Context, N: int) -> np.ndarray:
        """sum_{j>=0} a_{n+j} ctx_j for n = 1..N (the part of the field at
        step n contributed by the initial context)."""
        n = np.arange(1, N + 1, dtype=float)
        H = len(ctx.head)
        out = np.zeros(N)
        if H:
            a = self.a.first(N + H)
            for j, c in enumerate(ctx.head.tolist()):
                if c:
                    out += c * a[j:j + N]
        p = ctx.period
        for r, c in enumerate(ctx.tail):
            if c:
                out += c * self.a.class_sum(n + H + r, p)
        return out

    def _evaluate(self, sigma, ctx, tol):
        h, e = self.field(ctx, 2 * tol)
        return float(self.phi(sigma * h)), e / 2 + _EPS

    def var_bound(self, n):
        # |phi'| <= 1/2 and the fields differ by at most 2 sum_{i>n} a_i
        return float(self.a.tail(n + 1))

    def svar_sq_bound(self, n):
        t = float(self.a.tail(n + 2))
        return 2 * (2 * _SQRT_PHI_LIPSCHITZ * t) ** 2

    def svar_sq_bounds(self, n: np.ndarray) -> np.ndarray:
        t = self.a.tail(np.asarray(n, dtype=float) + 2)
        return 2 * (2 * _SQRT_PHI_LIPSCHITZ * t) ** 2

    def svar_summable(self):
        return self.beta > 1.5

    def var_log_bound(self, n):
        # |d/dt log phi(t)| <= 2
        return 4 * float(self.a.tail(n + 1))

    def adversarial_contexts(self):
        return [Context.const(1), Context.const(-1), Context.periodic((1, -1)), Context((1,) * 4, (-1,))]


class RandomWalkThird(GFunction):
    """Alphabet Z with the nearest-neighbour constraint |x_n - x_{n+1}| <= 1 and g = 1/3.

    The constraint leaves exactly three admissible predecessors of every
    context, so the alphabet must be Z (on N the symbol 0 has only two).
    """

    kind = "randomwalk"
    description = "nearest-neighbour subshift on Z with g = 1/3: no finite g-measure (mass escapes)"
    depth = 1

    def __init__(self):
        self.alphabet = Alphabet("integers")

    @property
    def spec_string(self):
        return "randomwalk"

    def allowed(self, sigma, ctx):
        return abs(sigma - ctx.coordinate(0)) <= 1

    def candidates(self, ctx, M=None):
        c = ctx.coordinate(0)
        near = sorted((c - 1, c, c + 1), key=self.alphabet.rank)
        if M is None:
            return tuple(near)
        return tuple(s for s in near if abs(s) <= M)

    def tail_mass_bound(self, ctx, M):
        if M is None:
            return 0.0
        c = ctx.coordinate(0)
        return sum(abs(s) > M for s in (c - 1, c, c + 1)) / 3.0

    def distribution(self, ctx, M=None, cutoff=SAMPLING_CUTOFF, tol=DEFAULT_TOL):
        syms = self.candidates(ctx, M)
        return SymbolDistribution(syms, np.full(len(syms), 1.0 / 3.0), self.tail_mass_bound(ctx, M), _EPS)

    def _evaluate(self, sigma, ctx, tol):
        return 1.0 / 3.0, _EPS

    def var_bound(self, n):
        return 0.0

    def svar_sq_bound(self, n):
        return 0.0

    def svar_summable(self):
        return True

    def var_log_bound(self, n):
        return 0.0

    def adversarial_contexts(self):
        return [Context.const(0), Context.const(50), Context.const(-50), Context.periodic((0, 1))]

    def probe_symbols(self, ctx, rng):
        return self.candidates(ctx)


class TableG(GFunction):
    """Depth-k g on {0..S-1} from a row-major table of shape (S^k, S).

    The row of a context is the base-S number (c_0 c_1 ... c_{k-1}) with
    c_0 the most significant digit.
    """

    kind = "markov"
    description = "finite alphabet, depth-k table-driven g (exact oracle workhorse)"

    def __init__(self, probs, alphabet_size: int, depth: int, validate: bool = True, source: str | None = None):
        S, k = int(alphabet_size), int(depth)
        if S < 1 or k < 0:
            raise ConfigError("table needs alphabet_size >= 1 and depth >= 0")
        try:
            table = np.array(probs, dtype=float).reshape(S**k, S)
        except ValueError:
            raise ConfigError(f"table must have shape {S**k} x {S}") from None
        if validate:
            if np.any(table < 0) or np.any(table > 1):
                raise ConfigError("table entries must lie in [0, 1]")
            bad = np.flatnonzero(np.abs(table.sum(axis=1) - 1.0) > 1e-12)
            if bad.size:
                raise ConfigError(f"table row {int(bad[0])} does not sum to 1 within 1e-12")
        table.flags.writeable = False
        self.table = table
        self.S, self.depth = S, k
        self.alphabet = Alphabet.range(S)
        self.source = source

    @classmethod
    def from_json(cls, path) -> "TableG":
        try:
            data = json.loads(Path(path).read_text())
            return cls(data["probs"], data["alphabet_size"], data["depth"], source=str(path))
        except (OSError, KeyError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot load table {path}: {exc}") from None

    def to_json(self, path) -> None:
        Path(path).write_text(
            json.dumps({"alphabet_size": self.S, "depth": self.depth, "probs": self.table.tolist()}, indent=1)
        )

    @property
    def spec_string(self):
        if self.source:
            return f"markov:file={self.source}"
        return f"markov:S={self.S},k={self.depth}"

    def row_index(self, ctx: Context) -> int:
        idx = 0
        for c in ctx.prefix(self.depth).tolist():
            if not 0 <= c < self.S:
                raise OutsideSubshift(f"context symbol {c} outside alphabet")
            idx = idx * self.S + c
        return idx

    def row_context(self, row: int) -> Context:
        digits = []
        for _ in range(self.depth):
            row, d = divmod(row, self.S)
            digits.append(d)
        return Context(digits[::-1], (0,))

    def _evaluate(self, sigma, ctx, tol):
        return float(self.table[self.row_index(ctx), sigma]), 0.0

    def distribution(self, ctx, M=None, cutoff=SAMPLING_CUTOFF, tol=DEFAULT_TOL):
        return SymbolDistribution(np.arange(self.S), self.table[self.row_index(ctx)].copy(), 0.0, 0.0)

    def _blocks(self, agree: int, values: np.ndarray) -> np.ndarray:
        return values.reshape(self.S**agree, self.S ** (self.depth - agree), self.S)

    def var_bound(self, n):
        if n >= self.depth:
            return 0.0
        blk = self._blocks(n, self.table)
        return float(np.max(blk.max(axis=1) - blk.min(axis=1)))

    def svar_sq_bound(self, n):
        agree = n + 1
        if agree >= self.depth:
            return 0.0
        blk = self._blocks(agree, np.sqrt(self.table))
        hi = blk.max(axis=1, keepdims=True)
        lo = blk.min(axis=1, keepdims=True)
        dev = np.maximum(hi - blk, blk - lo)
        return float(np.max(np.sum(dev**2, axis=2)))

    def svar_summable(self):
        return True

    def var_log_bound(self, n):
        if n >= self.depth:
            return 0.0
        with np.errstate(divide="ignore"):
            logs = np.log(self.table)
        blk = self._blocks(n, logs)
        hi, lo = blk.max(axis=1), blk.min(axis=1)
        if np.any(np.isneginf(lo) & np.isfinite(hi)):
            return math.inf
        diff = np.where(np.isneginf(hi), 0.0, hi - lo)
        return float(np.max(diff))

    def random_context(self, rng):
        return random_context(self.alphabet, rng, max_head=self.depth + 4)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def evaluate(g: GFunction, sigma: int, x: Context, tol: float = DEFAULT_TOL) -> Evaluation:
    return g.evaluate(sigma, x, tol)


def normalization_residual(g: GFunction, x: Context, M=None) -> float:
    """Normalization defect at ``x`` not explained by the certified tail bound.

    Zero for a healthy g; positive values flag a broken g.
    """
    if not g.alphabet.is_finite and M is None:
        M = 64
    syms = g.candidates(x, M)
    vals = [g.evaluate(s, x) for s in syms]
    total = math.fsum(v.value for v in vals)
    err = sum(v.error for v in vals) + 4 * _EPS * (len(vals) + 1)
    tail = g.tail_mass_bound(x, M)
    return max(0.0, (1.0 - total) - tail - err, (total - 1.0) - err)


def _partner(ctx: Context, agree: int, g: GFunction, rng: np.random.Generator, adversarial=None) -> Context:
    rest = adversarial if adversarial is not None else g.random_context(rng)
    return concat(ctx.prefix(agree), rest)


def _certified_gap(g, sigma, x, y, sqrt=False):
    try:
        ex = g.evaluate(sigma, x, 1e-12)
        ey = g.evaluate(sigma, y, 1e-12)
    except OutsideSubshift:
        return None
    if sqrt:
        gap = abs(math.sqrt(ex.value) - math.sqrt(ey.value)) - math.sqrt(ex.error) - math.sqrt(ey.error)
    else:
        gap = abs(ex.value - ey.value) - ex.error - ey.error
    return max(gap, 0.0)


def var_estimate(g: GFunction, n: int, budget: int = 2000, rng_seed: int = 0) -> Bracket:
    """Bracket for var_n g: the largest certified gap over ``budget`` sampled
    pairs agreeing on point coordinates 0..n, and the analytic bound."""
    if n < 0:
        raise ValueError("n must be non-negative")
    rng = np.random.default_rng(rng_seed)
    adv = g.adversarial_contexts()
    best = 0.0
    for t in range(max(budget, 1)):
        x = g.random_context(rng) if t % 2 else concat(g.random_context(rng).prefix(n), adv[t // 2 % len(adv)])
        y = _partner(x, n, g, rng, adv[rng.integers(len(adv))] if t % 3 == 0 else None)
        for sigma in g.probe_symbols(x, rng):
            gap = _certified_gap(g, sigma, x, y)
            if gap is not None and gap > best:
                best = gap
    return Bracket(best, g.var_bound(n))


def svar_estimate(g: GFunction, n: int, budget: int = 2000, rng_seed: int = 0, partners: int = 16) -> Bracket:
    """Bracket for (svar_n sqrt g)^2.

    Lower bound: for sampled anchors x, sum over symbols of the squared
    largest sqrt-gap against sampled partners agreeing with x on context
    coordinates 0..n; maximised over anchors.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    rng = np.random.default_rng(rng_seed)
    adv = g.adversarial_contexts()
    best = 0.0
    for t in range(max(budget // partners, 1)):
        x = g.random_context(rng) if t % 2 else concat(g.random_context(rng).prefix(n + 1), adv[t // 2 % len(adv)])
        ys = [_partner(x, n + 1, g, rng, a) for a in adv]
        ys += [_partner(x, n + 1, g, rng) for _ in range(max(partners - len(adv), 1))]
        total = 0.0
        for sigma in g.probe_symbols(x, rng):
            dev = max((_certified_gap(g, sigma, x, y, sqrt=True) or 0.0) for y in ys)
            total += dev * dev
        best = max(best, total)
    return Bracket(best, g.svar_sq_bound(n))


@dataclass
class PositivityResult:
    status: str  # "strictly-positive-so-far" | "zero-found"
    witness: tuple | None = None  # (sigma, context, value)
    checked: int = 0

    @property
    def positive(self) -> bool:
        return self.status == "strictly-positive-so-far"


def positivity_probe(g: GFunction, budget: int = 2000, rng_seed: int = 0, zero_tol: float = 1e-12) -> PositivityResult:
    """Search for a (near-)zero of g; adversarial corners first, then random contexts."""
    if isinstance(g, TableG):
        rows, cols = np.nonzero(g.table <= zero_tol)
        if rows.size:
            r, s = int(rows[0]), int(cols[0])
            return PositivityResult("zero-found", (s, g.row_context(r), float(g.table[r, s])), g.table.size)
        return PositivityResult("strictly-positive-so-far", None, g.table.size)
    rng = np.random.default_rng(rng_seed)
    contexts = list(g.adversarial_contexts())
    checked = 0
    for t in range(max(budget, len(contexts))):
        x = contexts[t] if t < len(contexts) else g.random_context(rng)
        for sigma in g.probe_symbols(x, rng):
            v = g.evaluate(sigma, x)
            checked += 1
            if v.value + v.error <= zero_tol:
                return PositivityResult("zero-found", (sigma, x, v.value), checked)
    return PositivityResult("strictly-positive-so-far", None, checked)


# ---------------------------------------------------------------------------
# registry and spec strings
# ---------------------------------------------------------------------------


def ex11(p: str | float = "geom2", alpha: float = 0.5) -> Ex11:
    q = _parse_geom(p) if isinstance(p, str) else float(p)
    return Ex11(alpha=float(alpha), q=q)


def hulse(a: float = 0.5, d: float = 0.3, r: float = 1.0) -> Hulse:
    return Hulse(a, d, r)


def spin(a: str | float = "pow1.5", scale: float = 1.0) -> Spin:
    beta = _parse_pow(a) if isinstance(a, str) else float(a)
    return Spin(beta, float(scale))


def randomwalk_third() -> RandomWalkThird:
    return RandomWalkThird()


def markov(table, k: int | None = None, alphabet_size: int | None = None, validate: bool = True) -> TableG:
    table = np.asarray(table, dtype=float)
    if alphabet_size is None:
        alphabet_size = table.shape[-1]
    if k is None:
        k = round(math.log(table.size // alphabet_size, alphabet_size)) if alphabet_size > 1 else 0
    return TableG(table, alphabet_size, k, validate=validate)


@dataclass(frozen=True)
class RegistryEntry:
    name: str
    factory: object
    example: str
    summary: str = field(default="")


REGISTRY = {
    "ex11": RegistryEntry("ex11", ex11, "ex11:alpha=0.5,p=geom2", Ex11.description),
    "hulse": RegistryEntry("hulse", hulse, "hulse:a=0.5,d=0.3,r=1", Hulse.description),
    "spin": RegistryEntry("spin", spin, "spin:a=pow1.5", Spin.description),
    "randomwalk": RegistryEntry("randomwalk", randomwalk_third, "randomwalk", RandomWalkThird.description),
    "markov": RegistryEntry("markov", markov, "markov:file=table.json", TableG.description),
}


def _parse_geom(text: str) -> float:
    if not text.startswith("geom"):
        raise ConfigError(f"p must be geom<q>, got {text!r}")
    try:
        return float(text[4:])
    except ValueError:
        raise ConfigError(f"bad geometric base in {text!r}") from None


def _parse_pow(text: str) -> float:
    if not text.startswith("pow"):
        raise ConfigError(f"a must be pow<beta>, got {text!r}")
    try:
        return float(text[3:])
    except ValueError:
        raise ConfigError(f"bad exponent in {text!r}") from None


def parse_gfn(text: str, base_dir: str | Path | None = None) -> GFunction:
    """Build a registry g-function from e.g. ``"ex11:alpha=0.5,p=geom2"``."""
    name, _, body = text.strip().partition(":")
    if name == "randomwalk_third":
        name = "randomwalk"
    if name not in REGISTRY:
        raise ConfigError(f"unknown g-function {name!r}; known: {', '.join(REGISTRY)}")
    kw = {}
    for item in filter(None, (s.strip() for s in body.split(","))):
        key, eq, val = item.partition("=")
        if not eq:
            raise ConfigError(f"bad parameter {item!r} in {text!r}")
        kw[key.strip()] = val.strip()
    try:
        if name == "markov":
            if set(kw) != {"file"}:
                raise ConfigError("markov needs exactly file=<table.json>")
            path = Path(kw["file"])
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            g = TableG.from_json(path)
            g.source = kw["file"]
            return g
        if name == "ex11":
            return ex11(p=kw.pop("p", "geom2"), alpha=float(kw.pop("alpha", 0.5)), **_no_extra(kw, text))
        if name == "spin":
            return spin(a=kw.pop("a", "pow1.5"), scale=float(kw.pop("scale", 1.0)), **_no_extra(kw, text))
        if name == "hulse":
            args = {k: float(kw.pop(k)) for k in ("a", "d", "r") if k in kw}
            return hulse(**args, **_no_extra(kw, text))
        return randomwalk_third(**_no_extra(kw, text))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad parameters in {text!r}: {exc}") from None


def _no_extra(kw: dict, text: str) -> dict:
    if kw:
        raise ConfigError(f"unknown parameters {sorted(kw)} in {text!r}")
    return {}
