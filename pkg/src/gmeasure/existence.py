"""Domination envelopes g(sigma x) <= K pi(sigma) and their checks.

An envelope certifies tightness on countable alphabets and doubles as the
proposal law for exact rejection sampling in ``chain.envelope_sample``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, EnvelopeInvalid
from .gfunctions import Ex11, GFunction
from .seqspace import Alphabet, Context, format_context

_SUM_TOL = 1e-12


@dataclass
class Envelope:
    """K >= 1 and a probability vector pi over the alphabet.

    ``pi_head`` lists explicit probabilities; ``tail`` continues pi beyond
    them.  Supported tails: ``{"form": "none"}`` and
    ``{"form": "geometric", "first": r, "mass": m, "ratio": q}`` meaning
    pi(symbol of rank r + j) = m q^j.
    """

    K: float
    alphabet: Alphabet
    pi_head: dict
    tail: dict = field(default_factory=lambda: {"form": "none"})
    provenance: str = "user"

    def __post_init__(self):
        if not self.K >= 1:
            raise ConfigError("envelope needs K >= 1")
        if any(p < 0 for p in self.pi_head.values()):
            raise ConfigError("envelope pi must be non-negative")
        form = self.tail.get("form", "none")
        if form == "geometric":
            if not 0 <= self.tail["ratio"] < 1:
                raise ConfigError("geometric tail needs ratio in [0, 1)")
            heads = [self.alphabet.rank(s) for s in self.pi_head]
            if heads and max(heads) >= self.tail["first"]:
                raise ConfigError("geometric tail overlaps the explicit head")
        elif form != "none":
            raise ConfigError(f"unknown tail form {form!r}")
        total = self.total()
        if abs(total - 1.0) > _SUM_TOL:
            raise ConfigError(f"envelope pi sums to {total!r}, not 1")
        order = sorted(self.pi_head, key=self.alphabet.rank)
        self._head_syms = order
        self._head_cum = np.cumsum([self.pi_head[s] for s in order])

    def tail_total(self) -> float:
        if self.tail.get("form") == "geometric":
            return self.tail["mass"] / (1.0 - self.tail["ratio"])
        return 0.0

    def total(self) -> float:
        return math.fsum(self.pi_head.values()) + self.tail_total()

    def prob(self, sigma: int) -> float:
        if sigma in self.pi_head:
            return self.pi_head[sigma]
        if self.tail.get("form") == "geometric" and sigma in self.alphabet:
            j = self.alphabet.rank(sigma) - self.tail["first"]
            if j >= 0:
                return self.tail["mass"] * self.tail["ratio"] ** j
        return 0.0

    def sample(self, u: float) -> int:
        """Inverse CDF in enumeration order."""
        idx = int(np.searchsorted(self._head_cum, u, side="right"))
        if idx < len(self._head_syms):
            return self._head_syms[idx]
        if self.tail.get("form") != "geometric" or self.tail["mass"] == 0:
            return self._head_syms[-1]
        # remaining v in [0, mass / (1 - ratio)): geometric inverse CDF
        v = u - (float(self._head_cum[-1]) if len(self._head_cum) else 0.0)
        m, q = self.tail["mass"], self.tail["ratio"]
        if q == 0:
            j = 0
        else:
            frac = min(max(1.0 - v * (1.0 - q) / m, 1e-300), 1.0)
            j = max(int(math.floor(math.log(frac) / math.log(q))), 0)
        return self.alphabet.symbol_at(self.tail["first"] + j)

    def to_json(self) -> dict:
        tail = dict(self.tail)
        form = tail.pop("form", "none")
        return {
            "K": self.K,
            "pi": {str(s): p for s, p in sorted(self.pi_head.items(), key=lambda kv: self.alphabet.rank(kv[0]))},
            "tail": {"form": form, "params": tail},
            "provenance": self.provenance,
        }

    @classmethod
    def from_json(cls, data: dict, alphabet: Alphabet) -> "Envelope":
        tail = {"form": data["tail"]["form"], **data["tail"].get("params", {})}
        pi = {int(s): float(p) for s, p in data["pi"].items()}
        return cls(float(data["K"]), alphabet, pi, tail, data.get("provenance", "user"))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2)
            fh.write("\n")


def uniform_envelope(g: GFunction, K: float | None = None) -> Envelope:
    """pi uniform on a finite alphabet with K = |S| (always dominates)."""
    if not g.alphabet.is_finite:
        raise ConfigError("uniform envelope needs a finite alphabet")
    S = g.alphabet.size
    return Envelope(float(S if K is None else K), g.alphabet, {s: 1.0 / S for s in g.alphabet}, provenance="example-specific")


def ex11_envelope(g: Ex11) -> Envelope:
    """K = 2, pi(0) = 1/2, pi(i) = p_i / 2: g(i,x) = p_i b(x) <= p_i and
    g(0,x) = 1 - b(x) <= 1."""
    q = g.params.q
    tail = {"form": "geometric", "first": 1, "mass": 0.5 * (q - 1) / q, "ratio": 1.0 / q}
    return Envelope(2.0, g.alphabet, {0: 0.5}, tail, "example-specific")


def derived_envelope(g: GFunction) -> Envelope:
    if isinstance(g, Ex11):
        return ex11_envelope(g)
    if g.alphabet.is_finite:
        return uniform_envelope(g)
    raise ConfigError(f"no built-in envelope for {g.spec_string}")


def envelope_from_var1(g: GFunction, x0: Context, var1_bound: float | None = None) -> Envelope:
    """K = exp(var1_bound), pi(sigma) = g(sigma . x0).

    ``var1_bound`` must bound |log g(p) - log g(p')| over points p, p' that
    share their first symbol (so the contexts are arbitrary).  Without it the
    analytic ``var_log_bound(0)`` of g is used.
    """
    dist = g.distribution(x0)
    zero = [int(s) for s, p in zip(dist.symbols, dist.probs) if p <= 0]
    if zero:
        raise EnvelopeInvalid(f"g({zero[0]} . {format_context(x0)}) = 0: envelope invalid at x0")
    if var1_bound is None:
        var1_bound = g.var_log_bound(0)
        if var1_bound is None:
            raise ConfigError(f"{g.spec_string} has no analytic log-variation bound")
    if not math.isfinite(var1_bound) or var1_bound < 0:
        raise EnvelopeInvalid(f"log-variation bound {var1_bound} does not give a finite K")
    pi = {int(s): float(p) for s, p in zip(dist.symbols, dist.probs)}
    # countable alphabets: the unlisted tail (< 1e-12) is not represented
    total = math.fsum(pi.values())
    if abs(total - 1.0) > _SUM_TOL:
        pi = {s: p / total for s, p in pi.items()}
    return Envelope(math.exp(var1_bound), g.alphabet, pi, {"form": "none"}, "var1-derived")


@dataclass
class DominationResult:
    status: str  # holds-so-far | violation
    min_slack: float
    witness: dict | None
    checked: int

    @property
    def holds(self) -> bool:
        return self.status == "holds-so-far"

    def to_json(self) -> dict:
        return {"status": self.status, "min_slack": self.min_slack, "witness": self.witness, "checked": self.checked}


def domination_check(g: GFunction, env: Envelope, contexts: int = 1000, seed: int = 0) -> DominationResult:
    """Falsifier for g(sigma x) <= K pi(sigma): sampled and corner contexts,
    all symbols for finite alphabets, a spread of ranks otherwise.

    A violation is reported only when it exceeds the evaluation error.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    ctxs = list(g.adversarial_contexts())
    if not g.alphabet.is_finite:
        ctxs += [Context.const(g.alphabet.symbol_at(r)) for r in (10, 100, 1000)]
    ctxs += [g.random_context(rng) for _ in range(contexts)]
    min_slack = math.inf
    witness = None
    checked = 0
    for ctx in ctxs:
        for s in g.probe_symbols(ctx, rng):
            ev = g.evaluate(s, ctx)
            slack = env.K * env.prob(s) - ev.value
            checked += 1
            if slack < min_slack:
                min_slack = slack
                if slack < -ev.error - 4 * np.finfo(float).eps:
                    witness = {"symbol": int(s), "context": format_context(ctx), "margin": slack}
    status = "violation" if witness is not None else "holds-so-far"
    return DominationResult(status, float(min_slack), witness, checked)


def rejection_acceptance(g: GFunction, env: Envelope, ctx: Context, proposals: int, rng) -> tuple:
    """Run ``proposals`` rejection proposals at ``ctx``.  Returns
    (accepted, proposals); the acceptance rate is exactly 1/K in law."""
    dist = g.distribution(ctx)
    table = dict(zip(dist.symbols.tolist(), dist.probs.tolist()))
    accepted = 0
    for _ in range(proposals):
        sigma = env.sample(rng.uniform())
        u = rng.uniform()
        if not g.allowed(sigma, ctx):
            continue
        value = table[sigma] if sigma in table else g.evaluate(sigma, ctx).value
        if u * env.K * env.prob(sigma) <= value:
            accepted += 1
    return accepted, proposals
