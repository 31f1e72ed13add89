"""Symbols, alphabets and one-sided contexts.

A context is an element of S^{Z+} stored as a finite head followed by a
periodic tail word (a constant tail is a period-1 word).  Coordinate 0 is
the symbol closest to the "present"; prepending a symbol shifts every
coordinate up by one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import ConfigError

DISAGREE_AT_0 = -1


@dataclass(frozen=True)
class Alphabet:
    """Symbol set with a fixed enumeration order.

    ``kind`` is ``"finite"`` (explicit ``symbols`` tuple, enumerated in the
    stored order), ``"naturals"`` (0, 1, 2, ...) or ``"integers"``
    (0, +1, -1, +2, -2, ...).
    """

    kind: str
    symbols: tuple = ()

    @classmethod
    def finite(cls, symbols) -> "Alphabet":
        return cls("finite", tuple(int(s) for s in symbols))

    @classmethod
    def range(cls, size: int) -> "Alphabet":
        return cls.finite(range(size))

    @property
    def is_finite(self) -> bool:
        return self.kind == "finite"

    @property
    def size(self):
        return len(self.symbols) if self.is_finite else math.inf

    @property
    def order_name(self) -> str:
        if self.kind == "finite":
            return ",".join(_fmt_symbol(s, self) for s in self.symbols)
        if self.kind == "naturals":
            return "0,1,2,..."
        return "0,+1,-1,+2,-2,..."

    def __contains__(self, s) -> bool:
        if self.kind == "finite":
            return s in self.symbols
        if self.kind == "naturals":
            return int(s) == s and s >= 0
        return int(s) == s

    def rank(self, s: int) -> int:
        """Position of ``s`` in the enumeration order."""
        if self.kind == "finite":
            return self.symbols.index(s)
        if self.kind == "naturals":
            return int(s)
        return 2 * s - 1 if s > 0 else -2 * s

    def symbol_at(self, r: int) -> int:
        if self.kind == "finite":
            return self.symbols[r]
        if self.kind == "naturals":
            return r
        return (r + 1) // 2 if r % 2 else -(r // 2)

    def __iter__(self) -> Iterator[int]:
        if self.is_finite:
            yield from self.symbols
            return
        r = 0
        while True:
            yield self.symbol_at(r)
            r += 1

    def truncate(self, M) -> tuple:
        """Retained symbols under truncation rank ``M``.

        Finite alphabets ignore ``M``.  Countable alphabets keep every symbol
        whose code has magnitude at most ``M``, in enumeration order.
        """
        if self.is_finite:
            return self.symbols
        if M is None:
            raise ValueError("countable alphabet needs a truncation rank")
        M = int(M)
        if self.kind == "naturals":
            return tuple(range(M + 1))
        return tuple(self.symbol_at(r) for r in range(2 * M + 1))

    def random_symbols(self, rng: np.random.Generator, size, scale: float = 3.0) -> np.ndarray:
        if self.is_finite:
            return np.asarray(self.symbols, dtype=np.int64)[rng.integers(len(self.symbols), size=size)]
        mag = rng.geometric(1.0 / (1.0 + scale), size=size) - 1
        if self.kind == "naturals":
            return mag.astype(np.int64)
        sign = np.where(rng.random(size) < 0.5, -1, 1)
        return (sign * mag).astype(np.int64)


def _fmt_symbol(s: int, alphabet: Alphabet | None = None) -> str:
    signed = alphabet is not None and (alphabet.kind == "integers" or any(x < 0 for x in alphabet.symbols))
    return f"{s:+d}" if signed and s != 0 else str(s)


class Context:
    """One-sided sequence: ``head`` then ``tail`` repeated forever.

    Immutable value type; equality is structural on (head, tail).
    """

    __slots__ = ("_head", "_tail", "_hash")

    def __init__(self, head: Sequence[int] = (), tail: Sequence[int] = (0,)):
        h = np.array(head, dtype=np.int64).reshape(-1)
        h.flags.writeable = False
        t = tuple(int(s) for s in tail)
        if not t:
            raise ValueError("tail word must be non-empty")
        object.__setattr__(self, "_head", h)
        object.__setattr__(self, "_tail", t)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("Context is immutable")

    @classmethod
    def const(cls, symbol: int, head: Sequence[int] = ()) -> "Context":
        return cls(head, (symbol,))

    @classmethod
    def periodic(cls, word: Sequence[int]) -> "Context":
        return cls((), word)

    @classmethod
    def _from_array(cls, head: np.ndarray, tail: tuple) -> "Context":
        # trusted fast path for the simulators: no copy, no validation
        obj = cls.__new__(cls)
        head.flags.writeable = False
        object.__setattr__(obj, "_head", head)
        object.__setattr__(obj, "_tail", tail)
        object.__setattr__(obj, "_hash", None)
        return obj

    @property
    def head(self) -> np.ndarray:
        return self._head

    @property
    def tail(self) -> tuple:
        return self._tail

    @property
    def period(self) -> int:
        return len(self._tail)

    def coordinate(self, i: int) -> int:
        if i < 0:
            raise IndexError("coordinates are non-negative")
        n = len(self._head)
        if i < n:
            return int(self._head[i])
        return self._tail[(i - n) % len(self._tail)]

    def prefix(self, length: int) -> np.ndarray:
        """First ``length`` coordinates as an int64 array."""
        n = len(self._head)
        if length <= n:
            return self._head[:length]
        extra = length - n
        reps = -(-extra // len(self._tail))
        fill = np.tile(np.asarray(self._tail, dtype=np.int64), reps)[:extra]
        return np.concatenate([self._head, fill])

    def symbols_used(self) -> set:
        return set(self._head.tolist()) | set(self._tail)

    def __eq__(self, other):
        if not isinstance(other, Context):
            return NotImplemented
        return self._tail == other._tail and np.array_equal(self._head, other._head)

    def __hash__(self):
        if self._hash is None:
            object.__setattr__(self, "_hash", hash((self._head.tobytes(), self._tail)))
        return self._hash

    def __repr__(self):
        head = self._head.tolist()
        if len(head) > 12:
            head = head[:12] + ["..."]
        return f"Context(head={head}, tail={list(self._tail)})"

    def literal(self) -> str:
        return format_context(self)


def coordinate(ctx: Context, i: int) -> int:
    return ctx.coordinate(i)


def prepend(sigma: int, ctx: Context) -> Context:
    """The context sigma . ctx (a preimage of ``ctx`` under the shift)."""
    head = np.empty(len(ctx.head) + 1, dtype=np.int64)
    head[0] = sigma
    head[1:] = ctx.head
    return Context._from_array(head, ctx.tail)


def concat(word: Sequence[int], ctx: Context) -> Context:
    """``word`` placed in coordinates 0..len-1, followed by ``ctx``."""
    head = np.concatenate([np.asarray(word, dtype=np.int64).reshape(-1), ctx.head])
    return Context._from_array(head, ctx.tail)


def agree_depth(x: Context, y: Context):
    """Largest n with x_i == y_i for all i <= n.

    Returns ``math.inf`` for identical sequences and ``DISAGREE_AT_0`` (-1)
    when coordinate 0 already differs.
    """
    span = max(len(x.head), len(y.head)) + math.lcm(x.period, y.period)
    diff = np.flatnonzero(x.prefix(span) != y.prefix(span))
    if diff.size == 0:
        return math.inf
    return int(diff[0]) - 1


def _parse_symbols(text: str) -> list:
    text = text.strip()
    if not text:
        return []
    try:
        return [int(tok) for tok in text.split(",")]
    except ValueError:
        raise ConfigError(f"bad symbol list {text!r}") from None


def parse_context(text: str) -> Context:
    """Parse ``const:<s>``, ``periodic:<s0>,<s1>,...`` or
    ``word:<s0>,<s1>,...;tail=<s>``."""
    kind, sep, body = text.strip().partition(":")
    if not sep:
        raise ConfigError(f"bad context literal {text!r}")
    if kind == "const":
        syms = _parse_symbols(body)
        if len(syms) != 1:
            raise ConfigError(f"const context needs one symbol: {text!r}")
        return Context.const(syms[0])
    if kind == "periodic":
        syms = _parse_symbols(body)
        if not syms:
            raise ConfigError(f"empty periodic word: {text!r}")
        return Context.periodic(syms)
    if kind == "word":
        word, _, rest = body.partition(";")
        tail = [0]
        if rest:
            key, eq, val = rest.partition("=")
            if key.strip() != "tail" or not eq:
                raise ConfigError(f"bad word context {text!r}")
            tail = _parse_symbols(val)
            if not tail:
                raise ConfigError(f"empty tail in {text!r}")
        return Context(_parse_symbols(word), tail)
    raise ConfigError(f"unknown context kind {kind!r}")


def format_context(ctx: Context) -> str:
    signed = any(s < 0 for s in ctx.symbols_used())
    fmt = (lambda s: f"{s:+d}" if s else "0") if signed else str
    if len(ctx.head) == 0:
        if ctx.period == 1:
            return f"const:{fmt(ctx.tail[0])}"
        return "periodic:" + ",".join(fmt(s) for s in ctx.tail)
    word = ",".join(fmt(int(s)) for s in ctx.head)
    if ctx.period == 1:
        return f"word:{word};tail={fmt(ctx.tail[0])}"
    # word + periodic tail has no literal form; spell out one period in the head
    return f"word:{word};tail={','.join(fmt(s) for s in ctx.tail)}"


def random_context(
    alphabet: Alphabet,
    rng: np.random.Generator,
    max_head: int = 12,
    scale: float = 3.0,
) -> Context:
    """Random context with a random head and a constant or periodic tail."""
    head = alphabet.random_symbols(rng, int(rng.integers(0, max_head + 1)), scale)
    period = int(rng.integers(1, 4))
    tail = alphabet.random_symbols(rng, period, scale)
    return Context(head, tail)
