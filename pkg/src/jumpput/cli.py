"""Command-line front end.

    price run <config.json>
    price at <config.json> --spot X --maturity T
    price selftest

Exit status: 0 on success, 1 on configuration errors, 2 when a proven
property of the iterates fails on the discrete solution.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .exceptions import (
    BadJumpMeasure,
    ConfigError,
    InvariantViolated,
    NegativeIntensity,
    NegativeRate,
    NonPositiveHorizon,
    NonPositiveSigma,
    NonPositiveStrike,
    OutOfRange,
    ValidationError,
)
from .grid import DEFAULT_WIDTH, build_grid
from .iteration import check_fixed_point, run_fixed_point
from .jump_measure import DEFAULT_NODES, JumpMeasure
from .lcp_solver import SolverConfig, residual_check
from .model import ModelParams, validate
from .oracles import McConfig, binomial_american_put, lsmc_american_put, merton_european_put

ORACLE_KINDS = ("merton_european", "binomial", "lsmc")
_MISSING = object()


def fmt(v):
    return "nan" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.12g}"


def jnum(v):
    if v is None or math.isnan(v) or math.isinf(v):
        return None
    return float(f"{v:.12g}")


class _Section:
    """Strict reader for one JSON object: unknown keys are errors."""

    def __init__(self, data, path):
        if not isinstance(data, dict):
            raise ConfigError(path, "expected an object")
        self.data = data
        self.path = path
        self.seen = set()

    def _p(self, key):
        return f"{self.path}.{key}" if self.path else key

    def get(self, key, kind, default=_MISSING):
        self.seen.add(key)
        if key not in self.data or self.data[key] is None:
            if default is _MISSING:
                raise ConfigError(self._p(key), "required field missing")
            return default
        val = self.data[key]
        if kind is float:
            if isinstance(val, bool) or not isinstance(val, (int, float)):
                raise ConfigError(self._p(key), f"expected a number, got {val!r}")
            return float(val)
        if kind is int:
            if isinstance(val, bool) or not isinstance(val, int):
                raise ConfigError(self._p(key), f"expected an integer, got {val!r}")
            return val
        if kind is bool:
            if not isinstance(val, bool):
                raise ConfigError(self._p(key), f"expected true/false, got {val!r}")
            return val
        if kind is str:
            if not isinstance(val, str):
                raise ConfigError(self._p(key), f"expected a string, got {val!r}")
            return val
        return val

    def section(self, key, required=False):
        self.seen.add(key)
        if key not in self.data:
            if required:
                raise ConfigError(self._p(key), "required section missing")
            return _Section({}, self._p(key))
        return _Section(self.data[key], self._p(key))

    def close(self):
        extra = sorted(set(self.data) - self.seen)
        if extra:
            raise ConfigError(self._p(extra[0]), "unknown key")


@dataclass
class OracleRequest:
    kind: str
    spots: list
    steps: int = 2000
    mc: McConfig | None = None


@dataclass
class RunConfig:
    params: ModelParams
    M: int = 200
    N: int = 100
    width: float = DEFAULT_WIDTH
    solver: SolverConfig = field(default_factory=SolverConfig)
    tol: float | None = None
    max_iter: int | None = None
    use_refined_bound: bool = False
    oracles: list = field(default_factory=list)
    output_dir: Path = Path("price_output")


_PARAM_PATHS = {
    NonPositiveSigma: "model.sigma",
    NonPositiveStrike: "model.K",
    NonPositiveHorizon: "model.T0",
    NegativeRate: "model.r",
    NegativeIntensity: "model.lambda",
    BadJumpMeasure: "model.jump",
}


def _parse_jump(sec: _Section):
    kind = sec.get("kind", str)
    try:
        if kind == "lognormal":
            jm = JumpMeasure.lognormal(sec.get("m", float), sec.get("s", float),
                                       sec.get("nodes", int, DEFAULT_NODES))
        elif kind == "discrete":
            atoms = sec.get("atoms", list)
            weights = sec.get("weights", list)
            jm = JumpMeasure.discrete(atoms, weights)
        else:
            raise ConfigError(sec._p("kind"), f"expected 'lognormal' or 'discrete', got {kind!r}")
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(sec.path, str(exc)) from None
    sec.close()
    return jm


def parse_config(data) -> RunConfig:
    root = _Section(data, "")
    model = root.section("model", required=True)
    r = model.get("r", float)
    sigma = model.get("sigma", float)
    lam = model.get("lambda", float)
    K = model.get("K", float)
    T0 = model.get("T0", float)
    jump = _parse_jump(model.section("jump")) if model.data.get("jump") is not None else JumpMeasure.point()
    model.seen.add("jump")
    model.close()
    params = ModelParams(r, sigma, lam, K, T0, jump)
    try:
        validate(params)
    except ValidationError as exc:
        raise ConfigError(_PARAM_PATHS.get(type(exc), "model"), str(exc)) from None

    grid = root.section("grid")
    M = grid.get("M", int, 200)
    N = grid.get("N", int, 100)
    width = grid.get("width", float, DEFAULT_WIDTH)
    grid.close()

    sol = root.section("solver")
    kwargs = dict(
        theta=sol.get("theta", float, 0.5),
        rannacher_steps=sol.get("rannacher_steps", int, 2),
        lcp_method=sol.get("lcp_method", str, "brennan_schwartz"),
        psor_omega=sol.get("psor_omega", float, 1.2),
        psor_tol=sol.get("psor_tol", float, None),
        psor_max_iter=sol.get("psor_max_iter", int, 100_000),
    )
    sol.close()
    try:
        solver = SolverConfig(**kwargs)
    except ValidationError as exc:
        raise ConfigError("solver", str(exc)) from None

    it = root.section("iteration")
    tol = it.get("tol", float, None)
    max_iter = it.get("max_iter", int, None)
    use_refined = it.get("use_refined_bound", bool, False)
    it.close()
    if tol is not None and not tol > 0:
        raise ConfigError("iteration.tol", "must be > 0")
    if max_iter is not None and max_iter < 1:
        raise ConfigError("iteration.max_iter", "must be >= 1")

    oracles = []
    root.seen.add("oracles")
    raw = data.get("oracles", [])
    if not isinstance(raw, list):
        raise ConfigError("oracles", "expected a list")
    for k, item in enumerate(raw):
        sec = _Section(item, f"oracles[{k}]")
        kind = sec.get("kind", str)
        if kind not in ORACLE_KINDS:
            raise ConfigError(sec._p("kind"), f"expected one of {ORACLE_KINDS}")
        spots = sec.get("spots", list, [K])
        if not all(isinstance(s, (int, float)) and not isinstance(s, bool) and s >= 0 for s in spots):
            raise ConfigError(sec._p("spots"), "spots must be non-negative numbers")
        req = OracleRequest(kind, [float(s) for s in spots])
        if kind == "binomial":
            if lam != 0:
                raise ConfigError(sec._p("kind"), "the binomial oracle needs model.lambda = 0")
            req.steps = sec.get("steps", int, 2000)
        elif kind == "lsmc":
            try:
                req.mc = McConfig(paths=sec.get("paths", int, 100_000), steps=sec.get("steps", int, 200),
                                  seed=sec.get("seed", int, 12345),
                                  basis_degree=sec.get("basis_degree", int, 3),
                                  antithetic=sec.get("antithetic", bool, True))
            except ValidationError as exc:
                raise ConfigError(sec.path, str(exc)) from None
        elif jump.kind != "lognormal" and lam > 0:
            raise ConfigError(sec._p("kind"), "the Merton series needs lognormal jumps")
        sec.close()
        oracles.append(req)

    out = root.get("output_dir", str, "price_output")
    root.close()
    return RunConfig(params, M, N, width, solver, tol, max_iter, use_refined, oracles, Path(out))


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"{path} is not valid JSON: {exc}") from None
    return parse_config(data)


def solve(cfg: RunConfig):
    try:
        grid = build_grid(cfg.params, cfg.M, cfg.N, cfg.width)
    except ValidationError as exc:
        raise ConfigError("grid", str(exc)) from None
    res = run_fixed_point(cfg.params, grid, cfg.solver, tol=cfg.tol, max_iter=cfg.max_iter,
                          use_refined=cfg.use_refined_bound)
    return grid, res


def quote_oracles(cfg: RunConfig):
    quotes = []
    T = cfg.params.T0
    for req in cfg.oracles:
        for x in req.spots:
            if req.kind == "merton_european":
                q = merton_european_put(cfg.params, x, T)
            elif req.kind == "binomial":
                q = binomial_american_put(cfg.params, x, T, req.steps)
            else:
                q = lsmc_american_put(cfg.params, x, T, req.mc)
            quotes.append({"kind": req.kind, "method": q.method, "x": jnum(x), "T": jnum(T),
                           "price": jnum(q.price), "std_error": jnum(q.std_error)})
    return quotes


def write_outputs(out: Path, grid, res, quotes):
    out.mkdir(parents=True, exist_ok=True)
    v = res.surface.values
    lines = ["T,x,value"]
    for j, T in enumerate(grid.t):
        lines.extend(f"{fmt(T)},{fmt(x)},{fmt(v[i, j])}" for i, x in enumerate(grid.x))
    (out / "value_surface.csv").write_text("\n".join(lines) + "\n")
    b = res.boundary
    lines = ["T,c,fit_slope"]
    lines.extend(f"{fmt(T)},{fmt(c)},{fmt(s)}" for T, c, s in zip(b.t, b.c, b.fit_slope))
    (out / "boundary.csv").write_text("\n".join(lines) + "\n")
    conv = [{k: (jnum(val) if isinstance(val, float) else val) for k, val in r.to_dict().items()}
            for r in res.reports]
    (out / "convergence.json").write_text(json.dumps(conv, indent=2) + "\n")
    (out / "oracle_quotes.json").write_text(json.dumps(quotes, indent=2) + "\n")


def cmd_run(args):
    cfg = load_config(args.config)
    grid, res = solve(cfg)
    quotes = quote_oracles(cfg)
    write_outputs(cfg.output_dir, grid, res, quotes)
    last = res.reports[-1]
    print(f"iterations={last.n} terminated_by={res.terminated_by} gap={fmt(last.gap)} "
          f"price_at_K={fmt(res.surface.at(cfg.params.K, cfg.params.T0))} "
          f"output_dir={cfg.output_dir}")
    for w in res.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 0


def cmd_at(args):
    cfg = load_config(args.config)
    x, T = args.spot, args.maturity
    if not (x >= 0 and 0 <= T <= cfg.params.T0):
        raise OutOfRange(f"need spot >= 0 and 0 <= maturity <= {cfg.params.T0}, got spot={x}, maturity={T}")
    grid, res = solve(cfg)
    x_eval = min(x, grid.x[-1])
    price = res.surface.at(x_eval, T)
    last = res.reports[-1]
    print(f"x={fmt(x)} T={fmt(T)} price={fmt(price)} apriori_bound={fmt(last.apriori_bound)} "
          f"refined_bound={fmt(last.refined_bound)} iterations={last.n}")
    return 0


SELFTEST_CASES = {
    "black_scholes": ModelParams(0.05, 0.2, 0.0, 100.0, 1.0),
    "merton_lognormal": ModelParams(0.05, 0.2, 0.3, 100.0, 0.5, JumpMeasure.lognormal(-0.045, 0.3)),
    "two_point_jumps": ModelParams(0.05, 0.25, 0.5, 100.0, 1.0, JumpMeasure.discrete([0.7, 1.3], [0.5, 0.5])),
}


def selftest(M=200, N=100, out=None):
    """Run the invariant suite on three built-in parameter sets; True if all pass."""
    out = sys.stdout if out is None else out
    all_ok = True
    for name, params in SELFTEST_CASES.items():
        grid = build_grid(params, M, N)
        config = SolverConfig()
        tol = 1e-4 * params.K
        checks = []
        try:
            res = run_fixed_point(params, grid, config, tol=tol)
            checks.append(("invariants", True, f"{res.n} iterations"))
            rep = residual_check(res.surface, res.source, params, grid, config)
            checks.append(("residual_continuation", rep.continuation_max <= 1e-4 * params.K,
                           fmt(rep.continuation_max)))
            checks.append(("residual_stopping", rep.stopping_max_positive <= 1e-6 * params.K,
                           fmt(rep.stopping_max_positive)))
            defect = check_fixed_point(res.surface, params, grid, config)
            checks.append(("fixed_point_defect", defect <= 2 * tol, fmt(defect)))
            ratios = [r.ratio for r in res.reports[2:] if r.ratio is not None]
            q = params.lam / (params.lam + params.r) if params.lam else 0.0
            checks.append(("contraction_ratio", all(r <= q + 0.05 for r in ratios),
                           fmt(max(ratios)) if ratios else "n/a"))
        except InvariantViolated as exc:
            checks.append(("invariants", False, str(exc)))
        for check, ok, detail in checks:
            all_ok &= ok
            print(f"{'PASS' if ok else 'FAIL'} {name} {check} {detail}", file=out)
    return all_ok


def cmd_selftest(args):
    return 0 if selftest() else 2


def build_parser():
    parser = argparse.ArgumentParser(prog="price", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="solve a configuration and write surfaces and reports")
    p.add_argument("config")
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("at", help="price one (spot, maturity) point")
    p.add_argument("config")
    p.add_argument("--spot", type=float, required=True)
    p.add_argument("--maturity", type=float, required=True)
    p.set_defaults(func=cmd_at)
    p = sub.add_parser("selftest", help="invariant suite on built-in parameter sets")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvariantViolated as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
