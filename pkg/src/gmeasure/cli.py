"""Command-line experiment runner.

Every subcommand resolves its parameters as defaults < ``--config`` JSON <
explicit flags, writes its artifacts into ``--out`` with the resolved
configuration embedded, and exits 0 (ok), 1 (failed check), 2 (bad
configuration), 3 (numerical precision) or 4 (instance too large).
"""
from __future__ import annotations

import argparse
import csv
import datetime
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .chain import RngStream, parse_init, path_metadata, simulate_path
from .errors import ConfigError, GMeasureError
from .existence import (
    derived_envelope,
    domination_check,
    envelope_from_var1,
)
from .gfunctions import (
    REGISTRY,
    normalization_residual,
    parse_gfn,
    positivity_probe,
    svar_estimate,
    var_estimate,
)
from .hellinger import acs_diagnostic, write_diagnostic_csv
from .seqspace import Context, parse_context
from .transfer import (
    TOL_FLOOR,
    build_markov_approx,
    escape_diagnostic,
    exact_stationary,
    power_iteration,
    tv_distance,
    uniqueness_probe,
    write_kernel_csv,
    write_stationary_csv,
)

DEFAULTS = {
    "simulate": {"gfn": None, "init": None, "steps": 1000, "paths": 1, "seed": 0, "sampler": "inverse_cdf", "M": None},
    "hellinger": {
        "gfn": None, "init_a": None, "init_b": None, "paths": 32, "steps": 10000, "seed": 0,
        "symmetric": False, "M": None,
    },
    "svar": {"gfn": None, "n_max": 10000, "points": 200, "sample_budget": 0, "seed": 0},
    "transfer": {"gfn": None, "depth": 1, "M": None, "starts": 10, "tol": 1e-10, "seed": 0, "tailfill": None},
    "escape": {"gfn": None, "init": None, "steps": 10000, "paths": 64, "seed": 0, "window": 5, "sampler": "inverse_cdf"},
    "envelope": {"gfn": None, "x0": None, "var1_bound": None, "contexts": 1000, "seed": 0},
    "check": {"gfn": None, "contexts": 100, "seed": 0, "budget": 200},
}
REQUIRED = {
    "simulate": ("gfn", "init"),
    "hellinger": ("gfn", "init_a", "init_b"),
    "svar": ("gfn",),
    "transfer": ("gfn",),
    "escape": ("gfn", "init"),
    "envelope": ("gfn",),
    "check": ("gfn",),
}


@dataclass
class ExperimentConfig:
    command: str
    params: dict = field(default_factory=dict)

    @classmethod
    def resolve(cls, command: str, file_values: dict, cli_values: dict) -> "ExperimentConfig":
        if command not in DEFAULTS:
            raise ConfigError(f"unknown command {command!r}")
        params = dict(DEFAULTS[command])
        unknown = set(file_values) - set(params) - {"command"}
        if unknown:
            raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
        params.update({k: v for k, v in file_values.items() if k != "command"})
        params.update({k: v for k, v in cli_values.items() if v is not None and k in params})
        missing = [k for k in REQUIRED[command] if params.get(k) is None]
        if missing:
            raise ConfigError(f"{command} needs --{missing[0].replace('_', '-')}")
        return cls(command, params)

    def to_json(self) -> str:
        return json.dumps({"command": self.command, **self.params}, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        data = json.loads(text)
        cmd = data.pop("command")
        return cls.resolve(cmd, data, {})


def _meta(cfg: ExperimentConfig, timestamp: bool) -> dict:
    meta = {"tool": f"gmeasure {__version__}", "config": json.loads(cfg.to_json()), "seed": cfg.params.get("seed")}
    if timestamp:
        meta["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    return meta


def _header(meta: dict) -> list:
    lines = [f"tool: {meta['tool']}", f"config: {json.dumps(meta['config'], sort_keys=True)}", f"seed: {meta['seed']}"]
    if "timestamp" in meta:
        lines.append(f"timestamp: {meta['timestamp']}")
    return lines


def _json_safe(x):
    if isinstance(x, dict):
        return {str(k): _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return _json_safe(x.tolist())
    if hasattr(x, "literal"):
        return x.literal()
    return x


def _write_json(path: Path, meta: dict, body: dict) -> None:
    path.write_text(json.dumps(_json_safe({"meta": meta, **body}), indent=2) + "\n")


def _write_csv(path: Path, header: list, columns: list, rows) -> None:
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(columns)
    wr.writerows(rows)
    path.write_text(buf.getvalue())


def _gfn(cfg: ExperimentConfig, base_dir):
    return parse_gfn(cfg.params["gfn"], base_dir=base_dir)


def _init(g, text):
    """Initial condition whose contexts only use symbols of g's alphabet."""
    init = parse_init(text)
    for ctx in init.contexts:
        bad = [s for s in ctx.symbols_used() if s not in g.alphabet]
        if bad:
            raise ConfigError(f"initial context {ctx.literal()} uses symbol {bad[0]} outside the alphabet")
    return init


# -- subcommands --------------------------------------------------------------


def cmd_simulate(cfg, out: Path, meta: dict, base_dir) -> dict:
    p = cfg.params
    g = _gfn(cfg, base_dir)
    init = _init(g, p["init"])
    env = derived_envelope(g) if p["sampler"] == "envelope" else None
    files = []
    for i in range(int(p["paths"])):
        rng = RngStream(int(p["seed"]), i)
        state = simulate_path(g, init, int(p["steps"]), rng, sampler=p["sampler"], envelope=env, M=p["M"])
        pm = path_metadata(g, init, rng)
        lines = _header(meta) + [f"{k}: {v}" for k, v in pm.items() if k != "seed"]
        lines.append(f"cutoff_events: {state.cutoff_events}")
        if env is not None:
            lines.append(f"proposals: {state.proposals}")
        name = "path.csv" if int(p["paths"]) == 1 else f"path_{i:04d}.csv"
        _write_csv(out / name, lines, ["step", "symbol"], enumerate(state.added.tolist(), start=1))
        files.append(name)
    return {"files": files}


def cmd_hellinger(cfg, out: Path, meta: dict, base_dir) -> dict:
    p = cfg.params
    g = _gfn(cfg, base_dir)
    v = acs_diagnostic(
        g, _init(g, p["init_a"]), _init(g, p["init_b"]), int(p["paths"]), int(p["steps"]),
        int(p["seed"]), symmetric=bool(p["symmetric"]), M=p["M"],
    )
    write_diagnostic_csv(out / "hellinger.csv", v, _header(meta))
    body = v.to_json()
    _write_json(out / "verdict.json", meta, body)
    return {"verdict": v.verdict, "slope": v.slope, "slope_ci": list(v.slope_ci),
            "final_increment_q95": v.final_increment_q95}


def svar_table(g, n_max: int, points: int):
    """Rows (n, var_bound, svar_sq_bound, partial sum up to n) on a log grid,
    the partial sums being exact over every n <= n_max."""
    if g.svar_sq_bound(0) is None:
        raise ConfigError(f"{g.spec_string} has no analytic s-variation bound")
    n_all = np.arange(0, n_max + 1)
    vec = getattr(g, "svar_sq_bounds", None)
    sv = vec(n_all) if vec is not None else np.array([g.svar_sq_bound(int(n)) for n in n_all])
    partial = np.cumsum(sv)
    grid = np.unique(np.concatenate([[0], np.geomspace(1, n_max, points).astype(int)]))
    rows = [(int(n), g.var_bound(int(n)), float(sv[n]), float(partial[n])) for n in grid]
    return rows, sv, partial


def loglog_slope(n: np.ndarray, y: np.ndarray) -> float:
    sel = (n > 0) & (y > 0)
    return float(np.polyfit(np.log(n[sel]), np.log(y[sel]), 1)[0])


def cmd_svar(cfg, out: Path, meta: dict, base_dir) -> dict:
    p = cfg.params
    g = _gfn(cfg, base_dir)
    n_max = int(p["n_max"])
    rows, sv, partial = svar_table(g, n_max, int(p["points"]))
    sampled = []
    if int(p["sample_budget"]) > 0:
        for n in (0, 1, 2, 4, 8):
            vb = var_estimate(g, n, int(p["sample_budget"]), int(p["seed"]))
            sb = svar_estimate(g, n, int(p["sample_budget"]), int(p["seed"]))
            sampled.append({"n": n, "var": list(vb), "svar_sq": list(sb)})
    _write_csv(out / "svar.csv", _header(meta), ["n", "var_bound", "svar_sq_bound", "partial_sum"],
               ((n, repr(v) if v is not None else "", repr(s), repr(ps)) for n, v, s, ps in rows))
    lo = max(n_max // 100, 1)
    n = np.arange(lo, n_max + 1)
    body = {
        "slope": loglog_slope(n, sv[lo:]) if n_max >= 10 else None,
        "slope_range": [lo, n_max],
        "partial_sum": float(partial[-1]),
        "cauchy_increment": float(partial[-1] - partial[max(n_max // 10, 1)]),
        "cauchy_range": [max(n_max // 10, 1), n_max],
        "summable_certified": g.svar_summable(),
        "sampled": sampled,
    }
    _write_json(out / "svar.json", meta, body)
    return {k: body[k] for k in ("slope", "partial_sum", "cauchy_increment", "summable_certified")}


def cmd_transfer(cfg, out: Path, meta: dict, base_dir) -> dict:
    p = cfg.params
    g = _gfn(cfg, base_dir)
    k, M = int(p["depth"]), p["M"]
    rep = uniqueness_probe(g, k, M, int(p["starts"]), float(p["tol"]), int(p["seed"]), p["tailfill"])
    ma = build_markov_approx(g, k, M, p["tailfill"])
    pi = power_iteration(ma, tol=max(float(p["tol"]) * 1e-2, TOL_FLOOR))
    body = rep.to_json()
    body["power_iteration"] = {"flag": pi.flag, "iterations": pi.iterations, "residual": pi.residual}
    try:
        ex = exact_stationary(ma)
        body["oracle_tv"] = tv_distance(ex.distribution, pi.distribution)
    except GMeasureError as exc:
        body["oracle_tv"] = None
        body["oracle_error"] = str(exc)
    write_kernel_csv(out / "kernel.csv", ma, _header(meta))
    write_stationary_csv(out / "stationary.csv", ma, pi.distribution, _header(meta))
    _write_json(out / "transfer.json", meta, body)
    return {"max_tv": rep.max_tv, "label": rep.label, "oracle_tv": body["oracle_tv"]}


def cmd_escape(cfg, out: Path, meta: dict, base_dir) -> dict:
    p = cfg.params
    g = _gfn(cfg, base_dir)
    env = derived_envelope(g) if p["sampler"] == "envelope" else None
    rep = escape_diagnostic(g, _init(g, p["init"]), int(p["steps"]), int(p["paths"]), int(p["seed"]),
                            int(p["window"]), p["sampler"], env)
    _write_csv(out / "escape.csv", _header(meta), ["n", "mean_abs", "occupancy"],
               ((int(n), repr(float(m)), repr(float(o))) for n, m, o in zip(rep.n, rep.mean_abs, rep.occupancy)))
    body = rep.to_json()
    _write_json(out / "escape.json", meta, body)
    return {"exponent": rep.exponent, "final_occupancy": body["final_occupancy"]}


def cmd_envelope(cfg, out: Path, meta: dict, base_dir) -> dict:
    p = cfg.params
    g = _gfn(cfg, base_dir)
    if p["x0"] is not None:
        bound = None if p["var1_bound"] is None else float(p["var1_bound"])
        env = envelope_from_var1(g, parse_context(p["x0"]), bound)
    else:
        env = derived_envelope(g)
    res = domination_check(g, env, int(p["contexts"]), int(p["seed"]))
    _write_json(out / "envelope.json", meta, {"envelope": env.to_json(), "domination": res.to_json()})
    if not res.holds:
        raise _CheckFailed(f"domination violated: {res.witness}")
    return {"K": env.K, "status": res.status, "min_slack": res.min_slack}


class _CheckFailed(GMeasureError):
    kind = "check_failed"
    exit_code = 1


def run_checks(g, contexts: int = 100, seed: int = 0, budget: int = 200) -> dict:
    """Normalization, depth invariance, positivity and var/svar sandwiches."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    ctxs = g.adversarial_contexts() + [g.random_context(rng) for _ in range(contexts)]
    norm = max(normalization_residual(g, x) for x in ctxs)
    out = {"normalization_max_residual": norm, "normalization_ok": norm <= 1e-9}
    if g.depth != math.inf:
        bad = 0
        for x in ctxs[:20]:
            head = x.prefix(int(g.depth))
            y = Context(head.tolist(), (g.alphabet.symbol_at(0 if g.alphabet.size == 1 else 1),))
            for s in g.candidates(x):
                bad += g.evaluate(s, x).value != g.evaluate(s, y).value
        out["depth_invariance_ok"] = bad == 0
    pos = positivity_probe(g, budget=budget, rng_seed=seed)
    out["positivity"] = {"status": pos.status, "witness": pos.witness}
    sandwich = []
    ok = True
    for n in (0, 1, 2, 4, 8):
        vb = var_estimate(g, n, budget, seed)
        sb = svar_estimate(g, n, budget, seed)
        good = (vb.upper is None or vb.lower <= vb.upper + 1e-12) and (sb.upper is None or sb.lower <= sb.upper + 1e-12)
        ok &= good
        sandwich.append({"n": n, "var": list(vb), "svar_sq": list(sb), "ok": good})
    out["sandwich"] = sandwich
    out["sandwich_ok"] = ok
    out["ok"] = out["normalization_ok"] and ok and out.get("depth_invariance_ok", True)
    return out


def cmd_check(cfg, out: Path, meta: dict, base_dir) -> dict:
    p = cfg.params
    g = _gfn(cfg, base_dir)
    body = run_checks(g, int(p["contexts"]), int(p["seed"]), int(p["budget"]))
    _write_json(out / "check.json", meta, body)
    if not body["ok"]:
        raise _CheckFailed("invariant check failed; see check.json")
    return {"ok": True}


COMMANDS = {
    "simulate": cmd_simulate,
    "hellinger": cmd_hellinger,
    "svar": cmd_svar,
    "transfer": cmd_transfer,
    "escape": cmd_escape,
    "envelope": cmd_envelope,
    "check": cmd_check,
}


# -- argument parsing ---------------------------------------------------------


def _common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="JSON file with parameter values (flags override)")
    sp.add_argument("--out", default=".", help="output directory (default: current)")
    sp.add_argument("--no-timestamp", action="store_true", help="omit the timestamp from artifact headers")
    sp.add_argument("--gfn", help="g-function, e.g. ex11:alpha=0.5,p=geom2 or markov:file=m.json")
    sp.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gmeasure", description="g-function and g-chain experiments")
    ap.add_argument("--version", action="version", version=f"gmeasure {__version__} ({kernels.BACKEND} kernels)")
    sub = ap.add_subparsers(dest="command", required=True)

    ex = sub.add_parser("examples", help="built-in g-function gallery")
    ex.add_argument("action", choices=["list"])
    ex.add_argument("--json", action="store_true")

    s = sub.add_parser("simulate", help="simulate g-chain paths")
    _common(s)
    s.add_argument("--init")
    s.add_argument("--steps", type=int)
    s.add_argument("--paths", type=int)
    s.add_argument("--sampler", choices=["inverse_cdf", "envelope"])
    s.add_argument("--M", type=int, help="alphabet truncation rank (countable alphabets)")

    h = sub.add_parser("hellinger", help="Hellinger process and absolute-continuity verdict")
    _common(h)
    h.add_argument("--init-a", dest="init_a")
    h.add_argument("--init-b", dest="init_b")
    h.add_argument("--paths", type=int)
    h.add_argument("--steps", type=int)
    h.add_argument("--symmetric", action="store_true", default=None)
    h.add_argument("--M", type=int)

    v = sub.add_parser("svar", help="tabulate var/svar bounds and partial sums")
    _common(v)
    v.add_argument("--n-max", dest="n_max", type=int)
    v.add_argument("--points", type=int)
    v.add_argument("--sample-budget", dest="sample_budget", type=int)

    t = sub.add_parser("transfer", help="depth-k surrogate stationary measures and uniqueness probe")
    _common(t)
    t.add_argument("--depth", type=int)
    t.add_argument("--M", type=int)
    t.add_argument("--starts", type=int)
    t.add_argument("--tol", type=float)
    t.add_argument("--tailfill")

    e = sub.add_parser("escape", help="escape-of-mass diagnostic")
    _common(e)
    e.add_argument("--init")
    e.add_argument("--steps", type=int)
    e.add_argument("--paths", type=int)
    e.add_argument("--window", type=int)
    e.add_argument("--sampler", choices=["inverse_cdf", "envelope"])

    n = sub.add_parser("envelope", help="derive a domination envelope and check it")
    _common(n)
    n.add_argument("--x0", help="reference context; derive K from the log-variation bound")
    n.add_argument("--var1-bound", dest="var1_bound", type=float)
    n.add_argument("--contexts", type=int)

    c = sub.add_parser("check", help="invariant suite for one g-function")
    _common(c)
    c.add_argument("--contexts", type=int)
    c.add_argument("--budget", type=int)
    return ap


def _examples(as_json: bool) -> int:
    if as_json:
        print(json.dumps([{"name": e.name, "example": e.example, "summary": e.summary} for e in REGISTRY.values()], indent=2))
    else:
        width = max(len(e.example) for e in REGISTRY.values())
        for e in REGISTRY.values():
            print(f"{e.example:<{width}}  {e.summary}")
    return 0


def _fail(exc: Exception, code: int, kind: str) -> int:
    msg = str(exc).replace("\n", " ")
    print(f"gmeasure: error kind={kind} exit={code} message={json.dumps(msg)}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "examples":
        return _examples(args.json)
    try:
        file_values, base_dir = {}, None
        if args.config:
            try:
                file_values = json.loads(Path(args.config).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {args.config}: {exc}") from None
            base_dir = Path(args.config).resolve().parent
            if file_values.get("command", args.command) != args.command:
                raise ConfigError(f"config is for {file_values['command']!r}, not {args.command!r}")
        cfg = ExperimentConfig.resolve(args.command, file_values, vars(args))
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        meta = _meta(cfg, not args.no_timestamp)
        summary = COMMANDS[args.command](cfg, out, meta, base_dir)
    except GMeasureError as exc:
        return _fail(exc, exc.exit_code, exc.kind)
    except ValueError as exc:
        return _fail(exc, 2, "config")
    print(json.dumps(_json_safe(summary)))
    return 0


if __name__ == "__main__":
    sys.exit(main())
