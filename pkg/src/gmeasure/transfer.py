"""Finite-memory truncations of g and what they say about g-measures.

A depth-k approximation keeps the words of length k over a truncated
alphabet as states.  From state w = (c_0, ..., c_{k-1}) the next symbol
sigma is drawn with probability g(sigma . w . tailfill) renormalized over the
retained symbols, and the chain moves to (sigma, c_0, ..., c_{k-2}).  The
mass dropped by the truncation is kept per state rather than hidden.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .chain import RngStream, parse_init, simulate_path
from .errors import ConfigError, InstanceTooLarge, NoUniqueSolution, PrecisionUnavailable
from .gfunctions import GFunction, positivity_probe
from .seqspace import Context

DEFAULT_STATE_CAP = 200_000
DENSE_CAP = 4096
# l1 increments of pi P - pi bottom out at a few ulps per row entry
TOL_FLOOR = 64 * np.finfo(float).eps


def _word_str(word) -> str:
    return " ".join(str(s) for s in word)


@dataclass
class MarkovApprox:
    g: GFunction
    k: int
    M: int | None
    tailfill: Context
    symbols: tuple
    states: list
    kernel: sp.csr_matrix
    escaped: np.ndarray
    exact: bool
    _index: dict = field(default_factory=dict, repr=False)

    @property
    def n_states(self) -> int:
        return len(self.states)

    def index(self, word) -> int:
        return self._index[tuple(word)]

    def dense(self) -> np.ndarray:
        return self.kernel.toarray()

    def kernel_rows(self):
        """(from_state, symbol, prob) triplets in state order."""
        P = self.kernel
        for i, w in enumerate(self.states):
            lo, hi = P.indptr[i], P.indptr[i + 1]
            for j, p in zip(P.indices[lo:hi].tolist(), P.data[lo:hi].tolist()):
                yield _word_str(w), self.states[j][0], p


def _valid_word(g: GFunction, word: tuple, tailfill: Context) -> bool:
    # adjacency inside the word only; the fill is an artefact of truncation
    for i in range(len(word) - 1):
        if not g.allowed(word[i], Context._from_array(np.array(word[i + 1:], dtype=np.int64), tailfill.tail)):
            return False
    return True


def build_markov_approx(
    g: GFunction,
    k: int,
    M: int | None = None,
    tailfill: Context | str | None = None,
    max_states: int = DEFAULT_STATE_CAP,
) -> MarkovApprox:
    """Depth-k, rank-M surrogate of g.  Exact when g has depth <= k on a
    finite alphabet."""
    if k < 1:
        raise ConfigError("depth k must be >= 1")
    if not g.alphabet.is_finite:
        if M is None or M < 2:
            raise ConfigError("countable alphabets need truncation M >= 2")
    if tailfill is None:
        tailfill = Context.const(g.alphabet.symbol_at(0))
    elif isinstance(tailfill, str):
        tailfill = parse_init(tailfill).context
    symbols = g.alphabet.truncate(M)
    if len(symbols) ** k > max_states:
        raise InstanceTooLarge(f"{len(symbols)}^{k} states exceed the cap {max_states}")
    states = [w for w in itertools.product(symbols, repeat=k) if _valid_word(g, w, tailfill)]
    index = {w: i for i, w in enumerate(states)}
    rows, cols, vals = [], [], []
    escaped = np.zeros(len(states))
    for i, w in enumerate(states):
        ctx = Context._from_array(np.array(w, dtype=np.int64), tailfill.tail)
        probs = {}
        for s in g.candidates(ctx, M):
            nxt = (s,) + w[:-1]
            if nxt in index:
                probs[index[nxt]] = probs.get(index[nxt], 0.0) + g.evaluate(s, ctx).value
        total = math.fsum(probs.values())
        if total <= 0:
            raise ConfigError(f"state {_word_str(w)} keeps no mass after truncation")
        escaped[i] = max(0.0, 1.0 - total)
        for j, p in probs.items():
            if p > 0:
                rows.append(i)
                cols.append(j)
                vals.append(p / total)
    P = sp.csr_matrix((vals, (rows, cols)), shape=(len(states), len(states)))
    P.sort_indices()
    exact = g.depth <= k and g.alphabet.is_finite
    return MarkovApprox(g, k, M, tailfill, tuple(symbols), states, P, escaped, exact, index)


@dataclass
class StationaryResult:
    distribution: np.ndarray
    residual: float
    iterations: int
    flag: str  # converged | max-iter | periodic-suspect
    nullspace_dim: int | None = None


def _residual(P: sp.csr_matrix, pi: np.ndarray) -> float:
    return float(np.abs(P.T @ pi - pi).sum())


def power_iteration(ma: MarkovApprox, start=None, tol: float = 1e-12, max_iter: int = 100_000) -> StationaryResult:
    """pi <- pi P until the l1 increment drops below ``tol``.

    A period-2 oscillation (pi_t close to pi_{t-2} but not to pi_{t-1}) stops
    the iteration with flag ``periodic-suspect`` and returns the average of
    the last two iterates, which is the stationary law of P^2 averaged over
    the cycle.
    """
    if not tol >= TOL_FLOOR:
        raise PrecisionUnavailable(f"tolerance {tol:g} is below the attainable {TOL_FLOOR:.2g}")
    PT = ma.kernel.T.tocsr()
    pi = np.full(ma.n_states, 1.0 / ma.n_states) if start is None else np.asarray(start, dtype=float).copy()
    if pi.shape != (ma.n_states,) or np.any(pi < 0) or abs(pi.sum() - 1.0) > 1e-9:
        raise ValueError("start must be a distribution on the states")
    prev = None
    for t in range(max_iter):
        nxt = PT @ pi
        nxt /= nxt.sum()
        step = float(np.abs(nxt - pi).sum())
        if step < tol:
            return StationaryResult(pi, _residual(ma.kernel, pi), t, "converged")
        back = float(np.abs(nxt - prev).sum()) if prev is not None else math.inf
        # a slowly damped oscillation also returns close to pi_{t-2}; demand a
        # genuinely non-shrinking step as well
        if back < tol and step > 1e4 * back:
            avg = 0.5 * (pi + nxt)
            return StationaryResult(avg, _residual(ma.kernel, avg), t, "periodic-suspect")
        prev, pi = pi, nxt
    return StationaryResult(pi, _residual(ma.kernel, pi), max_iter, "max-iter")


def exact_stationary(ma: MarkovApprox, dense_cap: int = DENSE_CAP) -> StationaryResult:
    """Dense solve of pi (P - I) = 0, sum pi = 1."""
    n = ma.n_states
    if n > dense_cap:
        raise InstanceTooLarge(f"{n} states exceed the dense cap {dense_cap}")
    A = ma.dense().T - np.eye(n)
    ns = scipy.linalg.null_space(A, rcond=1e-10)
    dim = ns.shape[1]
    if dim != 1:
        raise NoUniqueSolution(dim, f"stationary system has nullspace dimension {dim}")
    lhs = np.vstack([A, np.ones((1, n))])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    pi = np.linalg.lstsq(lhs, rhs, rcond=None)[0]
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    return StationaryResult(pi, _residual(ma.kernel, pi), 0, "converged", dim)


def tv_distance(p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("distributions live on different state spaces")
    return 0.5 * float(np.abs(p - q).sum())


def marginal(ma: MarkovApprox, pi: np.ndarray, length: int) -> dict:
    """Law of the first ``length`` coordinates under a state distribution."""
    out: dict = {}
    for w, p in zip(ma.states, pi.tolist()):
        key = w[:length]
        out[key] = out.get(key, 0.0) + p
    return out


@dataclass
class UniquenessReport:
    states: int
    exact: bool
    max_tv: float
    tv_matrix: np.ndarray
    flags: list
    limits: list
    hypothesis: dict
    label: str
    tailfill_shift: float | None
    max_escaped: float

    def to_json(self) -> dict:
        return {
            "states": self.states,
            "exact": self.exact,
            "max_tv": self.max_tv,
            "tv_matrix": self.tv_matrix.tolist(),
            "flags": self.flags,
            "hypothesis": self.hypothesis,
            "label": self.label,
            "tailfill_shift": self.tailfill_shift,
            "max_escaped": self.max_escaped,
        }


def _starts(n: int, count: int, rng: np.random.Generator) -> list:
    """Point masses at distinct random states, then random mixtures."""
    out = []
    for j in rng.permutation(n)[:count].tolist():
        e = np.zeros(n)
        e[j] = 1.0
        out.append(e)
    while len(out) < count:
        out.append(rng.dirichlet(np.ones(n)))
    return out


def uniqueness_probe(
    g: GFunction,
    k: int,
    M: int | None = None,
    starts: int = 10,
    tol: float = 1e-10,
    seed: int = 0,
    tailfill=None,
    max_iter: int = 100_000,
    unique_tv: float = 1e-8,
) -> UniquenessReport:
    """Run power iteration from several starts and compare the limits.

    The outcome is evidence about the finite surrogate only.  When the
    positivity probe finds no zero and the s-variation bounds are certified
    square-summable, theory predicts a single g-measure and the label says
    whether the surrogate agrees.
    """
    if starts < 2:
        raise ValueError("starts must be >= 2")
    if not tol >= TOL_FLOOR:
        raise PrecisionUnavailable(f"tolerance {tol:g} is below the attainable {TOL_FLOOR:.2g}")
    inner = max(tol * 1e-2, TOL_FLOOR)
    ma = build_markov_approx(g, k, M, tailfill)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    # the increment tolerance is tighter than the requested limit accuracy
    results = [power_iteration(ma, s, tol=inner, max_iter=max_iter) for s in _starts(ma.n_states, starts, rng)]
    limits = [r.distribution for r in results]
    m = len(limits)
    tv = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            tv[i, j] = tv[j, i] = tv_distance(limits[i], limits[j])
    max_tv = float(tv.max())
    flags = [r.flag for r in results]

    positive = positivity_probe(g, budget=500, rng_seed=seed).status == "strictly-positive-so-far"
    summable = g.svar_summable()
    hyp = {"positive_so_far": positive, "svar_square_summable": summable, "finite_alphabet": g.alphabet.is_finite}
    unique = max_tv < unique_tv and all(f == "converged" for f in flags)
    if any(f == "periodic-suspect" for f in flags):
        label = "periodic-suspect"
    elif positive and summable:
        label = "consistent" if unique else "inconsistent"
    else:
        label = "unique-surrogate" if unique else "non-unique-surrogate"

    shift = None
    if not ma.exact:
        alt_fill = Context.const(g.alphabet.symbol_at(1))
        if tailfill is None or alt_fill != ma.tailfill:
            alt = build_markov_approx(g, k, M, alt_fill)
            pa = power_iteration(alt, tol=inner, max_iter=max_iter).distribution
            m1 = marginal(ma, limits[0], k)
            m2 = marginal(alt, pa, k)
            keys = sorted(set(m1) | set(m2))
            shift = tv_distance([m1.get(w, 0.0) for w in keys], [m2.get(w, 0.0) for w in keys])
    return UniquenessReport(
        ma.n_states, ma.exact, max_tv, tv, flags, limits, hyp, label, shift, float(ma.escaped.max())
    )


@dataclass
class EscapeReport:
    n: np.ndarray
    mean_abs: np.ndarray
    exponent: float
    window: tuple
    occupancy: np.ndarray

    def to_json(self) -> dict:
        return {
            "exponent": self.exponent,
            "window": [min(self.window), max(self.window)] if self.window else [],
            "n": self.n.tolist(),
            "mean_abs": self.mean_abs.tolist(),
            "occupancy": self.occupancy.tolist(),
            "final_occupancy": float(self.occupancy[-1]) if len(self.occupancy) else None,
        }


def escape_diagnostic(
    g: GFunction,
    init,
    steps: int,
    paths: int,
    seed: int = 0,
    window: int = 5,
    sampler: str = "inverse_cdf",
    envelope=None,
) -> EscapeReport:
    """Growth of E|x_{-n}| and occupancy of the symbols of rank <= 2*window
    (|sigma| <= window for Z, 0..window for N).

    The exponent is the least-squares slope of log E|x_{-n}| against log n
    over n in [steps/100, steps]; finite alphabets report 0.
    """
    init = parse_init(init)
    X = np.empty((paths, steps), dtype=np.int64)
    for p in range(paths):
        X[p] = simulate_path(g, init, steps, RngStream(seed, p), sampler=sampler, envelope=envelope).added
    n = np.arange(1, steps + 1)
    mean_abs = np.abs(X).mean(axis=0)
    win = tuple(g.alphabet.truncate(window)) if not g.alphabet.is_finite else tuple(g.alphabet)
    occ = np.isin(X, win).mean(axis=0)
    if g.alphabet.is_finite:
        exponent = 0.0
    else:
        lo = max(steps // 100, 1)
        sel = (n >= lo) & (mean_abs > 0)
        exponent = float(np.polyfit(np.log(n[sel]), np.log(mean_abs[sel]), 1)[0]) if sel.sum() >= 2 else math.nan
    cps = np.unique(np.concatenate([2 ** np.arange(int(math.log2(steps)) + 1), [steps]])) if steps else np.array([], int)
    return EscapeReport(cps, mean_abs[cps - 1], exponent, win, occ[cps - 1])


# -- artifacts ----------------------------------------------------------------


def _write(path, header, rows, columns):
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(columns)
    wr.writerows(rows)
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def write_kernel_csv(path, ma: MarkovApprox, header=()) -> None:
    _write(path, header, ((w, s, repr(p)) for w, s, p in ma.kernel_rows()), ["from_state", "symbol", "prob"])


def write_stationary_csv(path, ma: MarkovApprox, pi, header=()) -> None:
    _write(path, header, ((_word_str(w), repr(float(p))) for w, p in zip(ma.states, pi)), ["state_word", "prob"])


def write_json(path, data: dict) -> None:
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2)
        fh.write("\n")
