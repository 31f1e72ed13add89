"""Likelihood ratios and the Hellinger process for pairs of g-chains.

Paths are simulated under the chain started from ``init_b`` (the measure
written mu-tilde below) and scored against the chain started from
``init_a`` (mu).  Along a path

    alpha_n = p~_n(x_{-n}) / p_n(x_{-n}),     Z_n = prod alpha_k,
    d_n     = sum_sigma (sqrt p_n(sigma) - sqrt p~_n(sigma))^2,
    B_n     = sum d_k,      Y_n = sum tlog alpha_k.

B_n stays bounded almost surely exactly when mu-tilde is absolutely
continuous with respect to mu (given local absolute continuity), which is
what the verdict in ``acs_diagnostic`` tries to read off finite runs.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .chain import ChainTracker, InitialCondition, RngStream, parse_init, sample_symbol
from .gfunctions import SAMPLING_CUTOFF, GFunction, Spin, SymbolDistribution, TableG

CONVERGE_THRESHOLD = 0.01
CONVERGE_FRACTION = 0.95
DIVERGE_SLOPE = 0.05
VERDICTS = ("converges", "diverges", "inconclusive", "not_locally_absolutely_continuous")


def hellinger_sq(p, q, p_tail: float = 0.0, q_tail: float = 0.0) -> tuple:
    """Squared Hellinger distance between two (sub-)probability vectors on a
    shared enumeration, as an interval [lo, hi] covering the unlisted tails."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("p and q must share an enumeration")
    if np.any(p < 0) or np.any(q < 0) or p_tail < 0 or q_tail < 0:
        raise ValueError("invalid distribution: negative mass")
    lo = float(np.sum((np.sqrt(p) - np.sqrt(q)) ** 2))
    return lo, lo + p_tail + q_tail


def tlog(x):
    """log truncated to [-1, 1]; tlog(0) = -1 and tlog(inf) = 1."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.clip(np.log(x), -1.0, 1.0)
    return float(out) if out.ndim == 0 else out


def _aligned(pi: SymbolDistribution, pt: SymbolDistribution):
    """Both distributions on the union of their enumerated symbols."""
    if len(pi) == len(pt) and np.array_equal(pi.symbols, pt.symbols):
        return pi.probs, pt.probs
    syms = np.union1d(pi.symbols, pt.symbols)
    a = np.zeros(len(syms))
    b = np.zeros(len(syms))
    a[np.searchsorted(syms, pi.symbols)] = pi.probs
    b[np.searchsorted(syms, pt.symbols)] = pt.probs
    return a, b


@dataclass(frozen=True)
class HellingerRecord:
    """Per-step increments along one path; the running processes are derived."""

    alpha: np.ndarray
    d: np.ndarray
    d_lo: np.ndarray
    d_hi: np.ndarray

    @classmethod
    def empty(cls) -> "HellingerRecord":
        z = np.empty(0)
        return cls(z, z, z, z)

    @classmethod
    def from_increments(cls, alpha, d, d_lo=None, d_hi=None) -> "HellingerRecord":
        d = np.asarray(d, dtype=float)
        return cls(
            np.asarray(alpha, dtype=float),
            d,
            d if d_lo is None else np.asarray(d_lo, dtype=float),
            d if d_hi is None else np.asarray(d_hi, dtype=float),
        )

    @property
    def n(self) -> int:
        return len(self.alpha)

    @property
    def B(self) -> np.ndarray:
        return np.cumsum(self.d)

    @property
    def logZ(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.cumsum(np.log(self.alpha))

    @property
    def Y(self) -> np.ndarray:
        return np.cumsum(tlog(self.alpha)) if self.n else np.empty(0)

    @property
    def singular_step(self):
        """First step (1-based) with alpha = inf, or None."""
        idx = np.flatnonzero(np.isinf(self.alpha))
        return int(idx[0]) + 1 if idx.size else None

    @property
    def uncertainty(self) -> float:
        return float(np.sum(self.d_hi - self.d_lo))


def step_update(rec: HellingerRecord, pi: SymbolDistribution, pi_tilde: SymbolDistribution, sigma: int) -> HellingerRecord:
    """Append one step: pi is the law under mu, pi_tilde under mu-tilde, and
    sigma the observed (mu-tilde sampled) symbol."""
    pt = pi_tilde.prob(sigma)
    p = pi.prob(sigma)
    alpha = pt / p if p > 0 else math.inf
    a, b = _aligned(pi, pi_tilde)
    lo, hi = hellinger_sq(a, b, pi.tail_mass, pi_tilde.tail_mass)
    hi = min(hi, 2.0)
    return HellingerRecord(
        np.append(rec.alpha, alpha),
        np.append(rec.d, 0.5 * (lo + hi)),
        np.append(rec.d_lo, lo),
        np.append(rec.d_hi, hi),
    )


# ---------------------------------------------------------------------------
# pair paths
# ---------------------------------------------------------------------------


def _pair_engine(g: GFunction, init_a: InitialCondition, init_b: InitialCondition):
    if not (init_a.is_point and init_b.is_point):
        return None
    if isinstance(g, TableG):
        return "table"
    if isinstance(g, Spin):
        return "linear"
    return None


def pair_path(
    g: GFunction,
    init_a,
    init_b,
    steps: int,
    rng: RngStream,
    engine: str = "auto",
    M=None,
    cutoff: float = SAMPLING_CUTOFF,
):
    """Simulate one path under ``init_b`` and score it against ``init_a``.

    Returns (symbols, HellingerRecord).
    """
    init_a, init_b = parse_init(init_a), parse_init(init_b)
    kind = _pair_engine(g, init_a, init_b) if engine == "auto" else None
    if kind == "table":
        sa, sb = g.row_index(init_a.context), g.row_index(init_b.context)
        w, alpha, d = kernels.table_pair_path(g.table, g.depth, sa, sb, rng.uniforms(steps))
        return w, HellingerRecord.from_increments(alpha, d)
    if kind == "linear":
        fb = g.init_fields(init_b.context, steps)
        delta = g.init_fields(init_a.context, steps) - fb
        w, alpha, d = kernels.linear_pair_path(g.a.first(max(steps, 1)), fb, delta, rng.uniforms(steps))
        return w, HellingerRecord.from_increments(alpha, d)

    ta = ChainTracker(g, init_a, steps, M, cutoff)
    tb = ChainTracker(g, init_b, steps, M, cutoff)
    alpha = np.empty(steps)
    lo = np.empty(steps)
    hi = np.empty(steps)
    for i in range(steps):
        pi, pt = ta.distribution(), tb.distribution()
        sigma = sample_symbol(pt, rng, cutoff)
        p = pi.prob(sigma)
        alpha[i] = pt.prob(sigma) / p if p > 0 else math.inf
        a, b = _aligned(pi, pt)
        lo[i], h = hellinger_sq(a, b, pi.tail_mass, pt.tail_mass)
        hi[i] = min(h, 2.0)
        ta.push(sigma)
        tb.push(sigma)
    return tb.buf[:steps].copy(), HellingerRecord(alpha, 0.5 * (lo + hi), lo, hi)


# ---------------------------------------------------------------------------
# verdict
# ---------------------------------------------------------------------------


def checkpoints(steps: int) -> list:
    """Dyadic steps up to ``steps`` plus powers of ten, steps/10, steps/4,
    steps/2 and steps itself."""
    pts = set()
    k = 1
    while k <= steps:
        pts.add(k)
        k *= 2
    k = 10
    while k <= steps:
        pts.add(k)
        k *= 10
    pts.update(m for m in (steps // 10, steps // 4, steps // 2, steps) if m >= 1)
    return sorted(pts)


def svar_bound_sequence(g: GFunction, steps: int):
    """Per-step bound on d_n: 2 at n = 1, and (svar_{n-2} sqrt g)^2 bounds for
    n >= 2, or None when g has no analytic s-variation bound."""
    if steps < 1 or g.svar_sq_bound(0) is None:
        return None
    out = np.empty(steps)
    out[0] = 2.0
    if steps > 1:
        n = np.arange(0, steps - 1)
        vec = getattr(g, "svar_sq_bounds", None)
        if vec is not None:
            out[1:] = vec(n)
        else:
            vals = []
            for k in n.tolist():
                v = g.svar_sq_bound(k)
                vals.append(v)
                if v == 0.0 and g.depth != math.inf:
                    vals += [0.0] * (len(n) - len(vals))
                    break
            out[1:] = vals
    return np.minimum(out, 2.0)


@dataclass
class AcsVerdict:
    verdict: str
    slope: float
    slope_ci: tuple
    final_increment_q95: float
    converged_fraction: float
    checkpoints: list
    B: np.ndarray  # paths x checkpoints
    logZ: np.ndarray
    Y: np.ndarray
    bound_check: dict = field(default_factory=dict)
    uncertainty: float = 0.0
    singular_witness: dict | None = None
    swapped: "AcsVerdict | None" = None

    def median_B(self, n: int) -> float:
        return float(np.median(self.B[:, self.checkpoints.index(n)]))

    def to_json(self) -> dict:
        out = {
            "verdict": self.verdict,
            "slope": self.slope,
            "slope_ci": list(self.slope_ci),
            "final_increment_q95": self.final_increment_q95,
            "converged_fraction": self.converged_fraction,
            "paths": int(self.B.shape[0]),
            "steps": int(self.checkpoints[-1]) if self.checkpoints else 0,
            "median_B": {str(n): float(np.median(self.B[:, j])) for j, n in enumerate(self.checkpoints)},
            "bound_check": self.bound_check,
            "uncertainty": self.uncertainty,
        }
        if self.singular_witness is not None:
            out["singular_witness"] = self.singular_witness
        if self.swapped is not None:
            out["swapped"] = self.swapped.to_json()
        return out

    def diagnostic_rows(self):
        for p in range(self.B.shape[0]):
            for j, n in enumerate(self.checkpoints):
                yield p, n, float(self.B[p, j]), float(self.logZ[p, j]), float(self.Y[p, j])


def _decade_slope(B: np.ndarray) -> float:
    """Least-squares slope of B_n against ln n over n in [N/10, N]."""
    N = len(B)
    n = np.unique(np.geomspace(max(N // 10, 1), N, 50).astype(int))
    x = np.log(n)
    y = B[n - 1]
    x = x - x.mean()
    denom = float(np.dot(x, x))
    return float(np.dot(x, y - y.mean()) / denom) if denom > 0 else 0.0


def _bootstrap_median_ci(values: np.ndarray, seed: int, reps: int = 2000) -> tuple:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(2**32 - 1,)))
    idx = rng.integers(0, len(values), size=(reps, len(values)))
    meds = np.median(values[idx], axis=1)
    return float(np.quantile(meds, 0.025)), float(np.quantile(meds, 0.975))


def acs_diagnostic(
    g: GFunction,
    init_a,
    init_b,
    paths: int = 32,
    steps: int = 10_000,
    seed: int = 0,
    symmetric: bool = False,
    engine: str = "auto",
    M=None,
    enforce_minimums: bool = True,
) -> AcsVerdict:
    """Simulate ``paths`` chains under ``init_b``, accumulate the Hellinger
    process against ``init_a`` and classify its growth.

    converges: B_{2m} - B_m < 0.01 on both of the last two dyadic windows for
    at least 95% of paths.  diverges: the median over paths of the slope of
    B_n against ln n on the last decade exceeds 0.05 and the bootstrap 95%
    interval of that median lies above 0.  A path with alpha = inf ends the
    run with the verdict ``not_locally_absolutely_continuous``.
    """
    if enforce_minimums and (paths < 8 or steps < 100):
        raise ValueError("acs_diagnostic needs paths >= 8 and steps >= 100")
    init_a, init_b = parse_init(init_a), parse_init(init_b)
    cps = checkpoints(steps)
    cidx = np.array(cps) - 1
    bounds = svar_bound_sequence(g, steps)
    cum_bound = np.cumsum(bounds) if bounds is not None else None
    B_cp, Z_cp, Y_cp = [], [], []
    slopes, finals, conv = [], [], []
    uncertainty = 0.0
    step_violations = cum_violations = 0
    max_excess = -math.inf
    witness = None
    for p in range(paths):
        rng = RngStream(seed, p)
        w, rec = pair_path(g, init_a, init_b, steps, rng, engine=engine, M=M)
        B = rec.B
        B_cp.append(B[cidx])
        Z_cp.append(rec.logZ[cidx])
        Y_cp.append(rec.Y[cidx])
        uncertainty = max(uncertainty, rec.uncertainty)
        s = rec.singular_step
        if s is not None:
            witness = {"path": p, "step": s, "cylinder": w[:s].tolist()[-64:], "symbol": int(w[s - 1])}
            break
        slopes.append(_decade_slope(B))
        finals.append(B[-1] - B[max(steps // 10, 1) - 1])
        h, q = B[steps // 2 - 1], B[steps // 4 - 1]
        conv.append(B[-1] - h < CONVERGE_THRESHOLD and h - q < CONVERGE_THRESHOLD)
        if bounds is not None:
            tol = 1e-9
            step_violations += int(np.sum(rec.d_lo > bounds + tol))
            cum_violations += int(np.sum(B > 2.0 + cum_bound + tol * np.arange(1, steps + 1)))
            max_excess = max(max_excess, float(np.max(rec.d_lo - bounds)))

    B_arr, Z_arr, Y_arr = np.array(B_cp), np.array(Z_cp), np.array(Y_cp)
    bound_check = {"available": bounds is not None}
    if bounds is not None:
        bound_check.update(
            step_violations=step_violations,
            cumulative_violations=cum_violations,
            max_step_excess=max_excess,
            bound_at_N=float(2.0 + cum_bound[-1]),
        )
    if witness is not None:
        verdict = AcsVerdict(
            "not_locally_absolutely_continuous", math.nan, (math.nan, math.nan), math.nan, 0.0,
            cps, B_arr, Z_arr, Y_arr, bound_check, uncertainty, witness,
        )
    else:
        slopes_a = np.array(slopes)
        med = float(np.median(slopes_a))
        ci = _bootstrap_median_ci(slopes_a, seed)
        frac = float(np.mean(conv))
        if frac >= CONVERGE_FRACTION:
            label = "converges"
        elif med > DIVERGE_SLOPE and ci[0] > 0:
            label = "diverges"
        else:
            label = "inconclusive"
        verdict = AcsVerdict(
            label, med, ci, float(np.quantile(finals, 0.95)), frac,
            cps, B_arr, Z_arr, Y_arr, bound_check, uncertainty,
        )
    if symmetric:
        verdict.swapped = acs_diagnostic(g, init_b, init_a, paths, steps, seed, False, engine, M, enforce_minimums)
    return verdict


def write_diagnostic_csv(path, verdict: AcsVerdict, header: list[str] = ()) -> None:
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["path", "checkpoint_n", "B_n", "logZ_n", "Y_n"])
    for row in verdict.diagnostic_rows():
        wr.writerow([row[0], row[1], repr(row[2]), repr(row[3]), repr(row[4])])
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def write_verdict_json(path, verdict: AcsVerdict, meta: dict | None = None) -> None:
    out = dict(meta or {})
    out.update(verdict.to_json())
    with open(path, "w") as fh:
        json.dump(out, fh, indent=2, sort_keys=False, allow_nan=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# the constant in (1/C)(1-sqrt x)^2 <= x tlog x + x tlog^2 x + 1 - x <= C (1-sqrt x)^2
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CScan:
    C: float
    argmax: float
    points: int


def c_middle(x):
    """x tlog x + x (tlog x)^2 + 1 - x, with the value 1 at x = 0."""
    x = np.asarray(x, dtype=float)
    t = tlog(x)
    return x * t + x * t * t + 1.0 - x


def c_inequality_scan(grid) -> CScan:
    x = np.asarray(grid, dtype=float)
    if np.any(x < 0):
        raise ValueError("grid must be non-negative")
    den = (1.0 - np.sqrt(x)) ** 2
    keep = den > 0
    x, den = x[keep], den[keep]
    ratio = c_middle(x) / den
    score = np.maximum(ratio, 1.0 / ratio)
    j = int(np.argmax(score))
    return CScan(float(score[j]), float(x[j]), int(x.size))
