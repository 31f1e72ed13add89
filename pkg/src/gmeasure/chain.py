"""Simulation of g-chains.

At step n the chain adds the symbol x_{-n} in front of the current context
with probability g(x_{-n} . x^(n-1)).  ``added`` words are stored in order of
addition (x_{-1}, x_{-2}, ...); the context after n steps is the reversed
word followed by the initial context.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .errors import ConfigError, HeavyTail
from .gfunctions import SAMPLING_CUTOFF, GFunction, Spin, SymbolDistribution, TableG
from .seqspace import Context, format_context, parse_context


@dataclass(frozen=True)
class InitialCondition:
    """Point mass on a context, or a finite mixture of point masses."""

    components: tuple  # ((weight, Context), ...)

    def __post_init__(self):
        if not self.components:
            raise ConfigError("initial condition needs at least one component")
        w = [c[0] for c in self.components]
        if any(x <= 0 for x in w):
            raise ConfigError("mixture weights must be positive")
        if abs(math.fsum(w) - 1.0) > 1e-12:
            raise ConfigError("mixture weights must sum to 1 within 1e-12")

    @classmethod
    def point(cls, ctx: Context) -> "InitialCondition":
        return cls(((1.0, ctx),))

    @classmethod
    def mixture(cls, pairs) -> "InitialCondition":
        return cls(tuple((float(w), c) for w, c in pairs))

    @property
    def is_point(self) -> bool:
        return len(self.components) == 1

    @property
    def context(self) -> Context:
        if not self.is_point:
            raise ValueError("mixture initial condition has no single context")
        return self.components[0][1]

    @property
    def weights(self) -> np.ndarray:
        return np.array([c[0] for c in self.components])

    @property
    def contexts(self) -> list:
        return [c[1] for c in self.components]

    def literal(self) -> str:
        if self.is_point:
            return format_context(self.context)
        return "|".join(f"{w!r}@{format_context(c)}" for w, c in self.components)


def parse_init(text) -> InitialCondition:
    """``const:0`` style literal, or ``w1@ctx1|w2@ctx2`` for a mixture."""
    if isinstance(text, InitialCondition):
        return text
    if isinstance(text, Context):
        return InitialCondition.point(text)
    parts = str(text).split("|")
    if len(parts) == 1 and "@" not in parts[0]:
        return InitialCondition.point(parse_context(parts[0]))
    pairs = []
    for part in parts:
        w, sep, lit = part.partition("@")
        if not sep:
            raise ConfigError(f"mixture component needs weight@context: {part!r}")
        try:
            pairs.append((float(w), parse_context(lit)))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    return InitialCondition.mixture(pairs)


class RngStream:
    """Reproducible uniform stream for one path: PCG64 seeded from
    (master seed, path index).  The k-th uniform is the same whether draws
    are taken one at a time or in blocks."""

    _BLOCK = 1024

    def __init__(self, seed: int, path_index: int = 0):
        self.seed = int(seed)
        self.path_index = int(path_index)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.path_index,))
        self._gen = np.random.Generator(np.random.PCG64(ss))
        self._buf = np.empty(0)
        self._pos = 0
        self.counter = 0

    def __repr__(self):
        return f"RngStream(seed={self.seed}, path_index={self.path_index}, counter={self.counter})"

    def uniform(self) -> float:
        if self._pos >= len(self._buf):
            self._buf = self._gen.random(self._BLOCK)
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        self.counter += 1
        return float(u)

    def uniforms(self, n: int) -> np.ndarray:
        left = self._buf[self._pos:self._pos + n]
        self._pos += len(left)
        out = left if len(left) == n else np.concatenate([left, self._gen.random(n - len(left))])
        self.counter += n
        return out


@dataclass
class PathState:
    """Initial condition plus the word of added symbols (x_{-1}, ..., x_{-n})."""

    init: InitialCondition
    added: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    cutoff_events: int = 0
    proposals: int = 0
    accepts: int = 0

    @property
    def n(self) -> int:
        return len(self.added)

    def context(self) -> Context:
        """x^(n) for a point initial condition."""
        y = self.init.context
        head = np.concatenate([self.added[::-1].astype(np.int64), y.head])
        return Context._from_array(head, y.tail)


def _context_from(buf: np.ndarray, n: int, y: Context, depth) -> Context:
    """Context after n added symbols stored in ``buf[:n]``, keeping only the
    first ``depth`` coordinates of the word when ``depth`` is finite."""
    take = n if depth == math.inf else min(n, int(depth))
    head = np.concatenate([buf[n - take:n][::-1], y.head])
    return Context._from_array(head, y.tail)


class ChainTracker:
    """Incremental conditional distributions for one initial condition along
    an externally supplied symbol sequence.

    For a mixture the component weights are the posterior weights given the
    symbols added so far (prior weights at step 1).
    """

    def __init__(self, g: GFunction, init: InitialCondition, capacity: int, M=None,
                 cutoff: float = SAMPLING_CUTOFF, tol: float = 1e-9):
        self.g, self.init = g, init
        self.buf = np.empty(max(capacity, 1), dtype=np.int64)
        self.n = 0
        self.M, self.cutoff, self.tol = M, cutoff, tol
        self.logw = np.log(init.weights)
        self._dists = None

    def _grow(self):
        self.buf = np.concatenate([self.buf, np.empty(len(self.buf), dtype=np.int64)])

    def component_distributions(self) -> list:
        if self._dists is None:
            self._dists = [
                self.g.distribution(_context_from(self.buf, self.n, y, self.g.depth), self.M, self.cutoff, self.tol)
                for y in self.init.contexts
            ]
        return self._dists

    def posterior(self) -> np.ndarray:
        w = np.exp(self.logw - np.max(self.logw))
        return w / w.sum()

    def distribution(self) -> SymbolDistribution:
        dists = self.component_distributions()
        if len(dists) == 1:
            return dists[0]
        post = self.posterior()
        acc: dict = {}
        for wj, dj in zip(post, dists):
            for s, p in zip(dj.symbols.tolist(), dj.probs.tolist()):
                acc[s] = acc.get(s, 0.0) + wj * p
        rank = self.g.alphabet.rank
        syms = sorted(acc, key=rank)
        return SymbolDistribution(
            syms,
            [acc[s] for s in syms],
            float(sum(wj * dj.tail_mass for wj, dj in zip(post, dists))),
            max(dj.error for dj in dists),
        )

    def push(self, sigma: int) -> None:
        if len(self.init.components) > 1:
            for j, (dj, y) in enumerate(zip(self.component_distributions(), self.init.contexts)):
                p = dj.prob(sigma)
                if p == 0.0 and sigma not in dj.symbols and self.g.allowed(sigma, _context_from(self.buf, self.n, y, self.g.depth)):
                    p = self.g.evaluate(sigma, _context_from(self.buf, self.n, y, self.g.depth), self.tol).value
                self.logw[j] += math.log(p) if p > 0 else -math.inf
        if self.n == len(self.buf):
            self._grow()
        self.buf[self.n] = sigma
        self.n += 1
        self._dists = None


def conditional_distribution(
    g: GFunction,
    added: Sequence[int],
    init,
    M=None,
    cutoff: float = SAMPLING_CUTOFF,
    tol: float = 1e-9,
) -> SymbolDistribution:
    """Law of the next added symbol given the word added so far.

    Point init y: sigma -> g(sigma . reversed(added) . y).  Finite mixture:
    the posterior-weighted average of the component laws.
    """
    init = parse_init(init)
    tr = ChainTracker(g, init, len(added) + 1, M, cutoff, tol)
    for s in added:
        tr.push(int(s))
    return tr.distribution()


def inverse_cdf(dist: SymbolDistribution, u: float) -> int:
    """First symbol (enumeration order) whose cumulative probability exceeds u."""
    cum = np.cumsum(dist.probs)
    total = cum[-1] if len(cum) else 0.0
    if dist.tail_mass > 0.0:
        u = u * total
    idx = int(np.searchsorted(cum, u, side="right"))
    if idx >= len(cum):
        pos = np.flatnonzero(dist.probs > 0)
        if pos.size == 0:
            raise ValueError("distribution has no positive mass")
        idx = int(pos[-1])
    return int(dist.symbols[idx])


def sample_symbol(dist: SymbolDistribution, rng: RngStream, cutoff: float = SAMPLING_CUTOFF) -> int:
    """Inverse-CDF draw; the unenumerated tail (at most ``cutoff``) is dropped
    and the enumerated part renormalized."""
    if dist.tail_mass > cutoff:
        raise HeavyTail(f"tail mass {dist.tail_mass:.3g} above cutoff {cutoff:g}")
    return inverse_cdf(dist, rng.uniform())


def envelope_sample(g: GFunction, ctx: Context, envelope, rng: RngStream, max_proposals: int = 10**6):
    """Exact draw from g(. ctx) by rejection from K * pi.  Returns (symbol, proposals)."""
    for k in range(1, max_proposals + 1):
        sigma = envelope.sample(rng.uniform())
        u = rng.uniform()
        if not g.allowed(sigma, ctx):
            continue
        if u * envelope.K * envelope.prob(sigma) <= g.evaluate(sigma, ctx).value:
            return sigma, k
    raise HeavyTail(f"no acceptance after {max_proposals} proposals")


def _kernel_engine(g: GFunction, init: InitialCondition) -> str | None:
    if not init.is_point:
        return None
    if isinstance(g, TableG) and g.depth >= 0:
        return "table"
    if isinstance(g, Spin):
        return "linear"
    return None


def simulate_path(
    g: GFunction,
    init,
    steps: int,
    rng: RngStream,
    sampler: str = "inverse_cdf",
    envelope=None,
    engine: str = "auto",
    M=None,
    cutoff: float = SAMPLING_CUTOFF,
) -> PathState:
    """Run ``steps`` transitions of the g-chain from ``init``.

    ``engine="auto"`` hands table-driven and spin g-functions with a point
    initial condition to the path kernels; ``"generic"`` forces the
    step-by-step evaluator.  Both consume one uniform per step, so they
    produce the same path for the same stream.
    """
    if steps < 0:
        raise ValueError("steps must be non-negative")
    init = parse_init(init)
    if sampler not in ("inverse_cdf", "envelope"):
        raise ConfigError(f"unknown sampler {sampler!r}")
    if sampler == "envelope" and envelope is None:
        raise ConfigError("envelope sampler needs an envelope")
    kind = _kernel_engine(g, init) if engine == "auto" and sampler == "inverse_cdf" else None
    if kind == "table":
        state = g.row_index(init.context)
        w, _, _ = kernels.table_pair_path(g.table, g.depth, state, state, rng.uniforms(steps))
        return PathState(init, w)
    if kind == "linear":
        fb = g.init_fields(init.context, steps)
        w, _, _ = kernels.linear_pair_path(g.a.first(max(steps, 1)), fb, np.zeros(steps), rng.uniforms(steps))
        return PathState(init, w)

    tr = ChainTracker(g, init, steps, M, cutoff)
    state = PathState(init)
    for _ in range(steps):
        if sampler == "envelope":
            ctx = _context_from(tr.buf, tr.n, init.context, g.depth)
            sigma, k = envelope_sample(g, ctx, envelope, rng)
            state.proposals += k
            state.accepts += 1
        else:
            dist = tr.distribution()
            sigma = sample_symbol(dist, rng, cutoff)
            state.cutoff_events += dist.tail_mass > 0.0
        tr.push(sigma)
    state.added = tr.buf[:tr.n].copy()
    return state


def path_metadata(g: GFunction, init: InitialCondition, rng: RngStream) -> dict:
    return {
        "gfn": g.spec_string,
        "init": init.literal(),
        "seed": rng.seed,
        "path_index": rng.path_index,
        "enumeration_order": g.alphabet.order_name,
    }


def write_path_csv(path, state: PathState, meta: dict) -> None:
    lines = [f"# {k}: {v}" for k, v in meta.items()]
    lines.append("step,symbol")
    lines += [f"{i},{s}" for i, s in enumerate(state.added.tolist(), start=1)]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
