"""Scenario runner.

A scenario is a YAML document with flat sections::

    seed: 7
    output: out/dyadic
    kernel: {name: dyadic}
    init: {point: 0.0}
    functions: [{name: identity}]
    reference: {name: lebesgue, atoms: 65536}
    estimator: {name: marginal_convergence, t_grid: [1, 2, 3], exact: true}
    bounds: {constant: 1.0, rate: 0.6931471805599453}

``wergodic run scenario.yaml`` executes it, writes ``curve.csv`` (and
``fit.csv`` when a rate fit is requested) plus ``report.json`` under
``output``, and exits with 0 (all bounds pass), 2 (some bound fails),
3 (only inconclusive verdicts besides passes) or 1 (error).
"""

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import yaml
from scipy.stats import norm

from . import ergodic as E
from . import io, oracle
from .errors import ConfigError, WergodicError
from .kernels import (
    PathSegment,
    ar1_kernel,
    default_diffusion,
    delay_sde_kernel,
    dyadic_kernel,
    finite_kernel,
)
from .measures import DiscreteMeasure, lebesgue_midpoints

EXIT_OK, EXIT_ERROR, EXIT_FAIL, EXIT_INCONCLUSIVE = 0, 1, 2, 3


@dataclass(frozen=True)
class Component:
    name: str
    build: Callable
    params: dict
    summary: str = ""


@dataclass
class Registry:
    kernels: dict = field(default_factory=dict)
    estimators: dict = field(default_factory=dict)
    functions: dict = field(default_factory=dict)

    def add(self, table, component):
        getattr(self, table)[component.name] = component
        return component


# -- kernels -----------------------------------------------------------------

def _build_finite(params, base):
    if "chain_csv" in params:
        return finite_kernel(io.load_chain(base / params["chain_csv"]))
    if "P" not in params:
        raise ConfigError("finite kernel needs 'P' or 'chain_csv'", field="kernel.P")
    return finite_kernel(params["P"], dist=params.get("dist"))


def _build_delay(params, base):
    diffusion = params.get("diffusion", "default")
    if diffusion == "default":
        G, check = default_diffusion, True
    elif diffusion == "zero":
        G, check = (lambda u: np.zeros_like(u)), False
    else:
        raise ConfigError(f"unknown diffusion {diffusion!r}", field="kernel.diffusion")
    return delay_sde_kernel(G, float(params.get("dt", 1 / 64)), float(params.get("delta", 1.0)),
                            check=check)


# -- test functions ----------------------------------------------------------

def _fn_values(params, kernel):
    if "values" not in params:
        raise ConfigError("needs 'values'", field="functions.values")
    return E.state_values(params["values"], kernel.space)


# -- estimators --------------------------------------------------------------

@dataclass
class Context:
    kernel: object
    init: object
    functions: list
    params: dict
    seed: int
    reference_spec: dict
    workers: object = None
    _reference: object = None

    def get(self, key, default=None):
        return self.params.get(key, default)

    def require(self, key):
        if key not in self.params:
            raise ConfigError("missing required parameter", field=f"estimator.{key}")
        return self.params[key]

    @property
    def function(self):
        if not self.functions:
            raise ConfigError("estimator needs at least one test function", field="functions")
        return self.functions[int(self.get("function", 0))]

    @property
    def reference(self):
        if self._reference is None:
            self._reference = build_reference(self.kernel, self.reference_spec, self.init,
                                              self.seed, self.workers)
        return self._reference

    def pi_ref(self):
        if "pi_ref" in self.params:
            return float(self.params["pi_ref"])
        return self.reference.expect(self.function)

    def point(self, key):
        return parse_point(self.kernel, self.require(key), f"estimator.{key}")


def build_reference(kernel, cfg, init, seed, workers=None):
    name = cfg.get("name", "default")
    if name == "default":
        name = {"dyadic": "lebesgue", "finite": "stationary", "ar1": "gaussian",
                "delay_sde": "long_run"}[kernel.name]
    if name == "lebesgue":
        return lebesgue_midpoints(int(cfg.get("atoms", 2**16)))
    if name == "stationary":
        if kernel.name != "finite":
            raise ConfigError("'stationary' reference needs a finite kernel", field="reference.name")
        return oracle.stationary_distribution(kernel.params["chain"])
    if name == "gaussian":
        if kernel.name != "ar1":
            raise ConfigError("'gaussian' reference needs the ar1 kernel", field="reference.name")
        m = int(cfg.get("atoms", 4096))
        sd = math.sqrt(kernel.params["stationary_var"])
        return DiscreteMeasure.uniform(sd * norm.ppf((np.arange(m) + 0.5) / m))
    if name == "long_run":
        return E.long_run_reference(kernel, init, float(cfg.get("t_burn", 20.0)),
                                    int(cfg.get("n", 2000)), int(cfg.get("seed", seed + 1)),
                                    workers)
    raise ConfigError(f"unknown reference {name!r}", field="reference.name")


def _grid(ctx):
    return [float(t) if not float(t).is_integer() else int(t) for t in ctx.require("t_grid")]


def _run_lp(ctx):
    return E.lp_error_curve(ctx.kernel, ctx.init, ctx.function, float(ctx.get("p", 2)), _grid(ctx),
                            ctx.pi_ref(), int(ctx.get("n", 1000)), ctx.seed, ctx.workers)


def _run_second_moment(ctx):
    return E.second_moment_curve(ctx.kernel, ctx.init, ctx.function, ctx.pi_ref(), _grid(ctx),
                                 int(ctx.get("n", 1000)), ctx.seed, ctx.workers)


def _run_marginal(ctx):
    return E.marginal_convergence(ctx.kernel, ctx.init, ctx.reference, _grid(ctx),
                                  int(ctx.get("n", 1000)), ctx.seed, bool(ctx.get("exact", False)),
                                  int(ctx.get("n_boot", 32)), ctx.workers)


def _run_uniform(ctx):
    return E.uniform_condition_curve(
        ctx.kernel, ctx.init, ctx.reference, _grid(ctx), list(ctx.require("s_grid")),
        int(ctx.get("n_outer", 200)), int(ctx.get("n_inner", 200)), ctx.seed,
        int(ctx.get("budget", E.DEFAULT_BUDGET)), ctx.workers,
    )


def _run_contraction(ctx):
    x2 = ctx.point("x2")
    grid = _grid(ctx)
    vals = [E.contraction_factor(ctx.kernel, ctx.init, x2, t, int(ctx.get("n", 2000)), ctx.seed,
                                 bool(ctx.get("exact", True)), ctx.workers) for t in grid]
    n = 0 if ctx.get("exact", True) and ctx.kernel.has_exact else int(ctx.get("n", 2000))
    return E.ConvergenceCurve.from_estimates(grid, [E.Estimate(v, 0.0, n) for v in vals],
                                             estimator="contraction", t_grid=grid)


def _run_lipschitz(ctx):
    pairs = [(parse_point(ctx.kernel, a, "estimator.pairs"),
              parse_point(ctx.kernel, b, "estimator.pairs")) for a, b in ctx.require("pairs")]
    grid = _grid(ctx)
    vals = [E.lipschitz_constant_estimate(ctx.kernel, ctx.function, t, pairs,
                                          int(ctx.get("n", 2000)), ctx.seed,
                                          bool(ctx.get("exact", True)), ctx.workers) for t in grid]
    return E.ConvergenceCurve.from_estimates(grid, [E.Estimate(v, 0.0, 0) for v in vals],
                                             estimator="lipschitz", t_grid=grid)


def _run_invariance(ctx):
    grid = _grid(ctx)
    ests = [E.invariance_check(ctx.kernel, ctx.reference, ctx.functions, t,
                               int(ctx.get("n", 10000)), ctx.seed, bool(ctx.get("exact", False)),
                               ctx.workers) for t in grid]
    return E.ConvergenceCurve.from_estimates(grid, ests, estimator="invariance", t_grid=grid)


def _run_coupling(ctx):
    return E.synchronous_coupling_curve(ctx.kernel, ctx.init, ctx.point("x2"), _grid(ctx),
                                        int(ctx.get("n", 2000)), ctx.seed, ctx.workers)


def _run_rate_fit(ctx):
    if "window" not in ctx.params:
        ctx.params["window"] = None
    return _run_marginal(ctx)


_COMMON = {"name": "component name", "t_grid": "list of times", "window": "[lo, hi] rate-fit window"}
_MC = {"n": "sample count", "function": "index into functions (default 0)"}


def default_registry():
    reg = Registry()
    reg.add("kernels", Component("dyadic", lambda p, b: dyadic_kernel(), {"name": "dyadic"},
                                 "x -> x/2 + X, X uniform on {0, 1/2}"))
    reg.add("kernels", Component("finite", _build_finite,
                                 {"name": "finite", "P": "row-stochastic matrix",
                                  "dist": "distance matrix (default discrete metric)",
                                  "chain_csv": "chain file (k matrix rows, then k distance rows)"},
                                 "finite-state chain"))
    reg.add("kernels", Component("ar1", lambda p, b: ar1_kernel(float(p.get("rho", 0.5)),
                                                                float(p.get("sigma", 1.0))),
                                 {"name": "ar1", "rho": "in (0, 1)", "sigma": "> 0"},
                                 "Gaussian AR(1) under 1 ∧ |x - y|"))
    reg.add("kernels", Component("delay_sde", _build_delay,
                                 {"name": "delay_sde", "dt": "mesh dividing 1 (default 1/64)",
                                  "delta": "metric scale (default 1)",
                                  "diffusion": "'default' (1 + tanh/2) or 'zero'"},
                                 "Euler-Maruyama delay equation on path segments"))

    def est(name, runner, extra, summary):
        reg.add("estimators", Component(name, runner, {**_COMMON, **extra}, summary))

    est("lp_error", _run_lp, {**_MC, "p": "exponent >= 1", "pi_ref": "target pi(f)"},
        "(E|A_t f - pi(f)|^p)^(1/p) over t_grid")
    est("marginal_convergence", _run_marginal,
        {"n": "sample count", "exact": "use exact pushforward", "n_boot": "bootstrap replicates"},
        "W1(p^t(x, .), reference) over t_grid")
    est("uniform_condition", _run_uniform,
        {"s_grid": "list of s", "n_outer": "outer samples", "n_inner": "inner samples",
         "budget": "cap on n_outer*n_inner*|s_grid|"},
        "sup_s E[W1(p^t(y, .), reference)], y ~ p^s(x, .)")
    est("contraction", _run_contraction,
        {"n": "sample count", "x2": "second point", "exact": "use exact pushforward"},
        "W1(p^t(x1, .), p^t(x2, .)) / d(x1, x2)")
    est("lipschitz", _run_lipschitz,
        {**_MC, "pairs": "list of [x, y]", "exact": "use exact pushforward"},
        "max |P_t f(x) - P_t f(y)| / d(x, y)")
    est("invariance", _run_invariance,
        {"n": "sample count", "exact": "use exact pushforward"},
        "max_f |reference(P_t f) - reference(f)|")
    est("second_moment", _run_second_moment, {**_MC, "pi_ref": "target pi(f)"},
        "E[(A_t f)^2] - pi(f)^2")
    est("rate_fit", _run_rate_fit,
        {"n": "sample count", "exact": "use exact pushforward", "n_boot": "bootstrap replicates"},
        "marginal_convergence followed by a log-linear fit")
    est("coupling", _run_coupling, {"n": "sample count", "x2": "second point"},
        "mean d(X_t, Y_t) under synchronous coupling")

    for name, make, summary in [
        ("identity", E.identity, "f(x) = x"),
        ("square", E.square, "f(x) = x^2"),
        ("cos_pi", E.cos_pi, "f(x) = cos(pi x)"),
        ("tanh", E.tanh_point, "f(x) = tanh(x)"),
    ]:
        reg.add("functions", Component(name, lambda p, k, make=make: make(), {"name": name}, summary))
    reg.add("functions", Component("constant", lambda p, k: E.constant(float(p.get("c", 0.0))),
                                   {"name": "constant", "c": "value"}, "f(x) = c"))
    reg.add("functions", Component("values", _fn_values, {"name": "values", "values": "per state"},
                                   "f(i) = values[i] on finite chains"))
    reg.add("functions", Component(
        "tanh_endpoint", lambda p, k: E.tanh_endpoint(k.params.get("delta", 1.0)),
        {"name": "tanh_endpoint"}, "tanh of the right endpoint of a path segment"))
    return reg


def list_components(registry=None):
    registry = default_registry() if registry is None else registry
    lines = []
    for title, table in (("kernels", registry.kernels), ("estimators", registry.estimators),
                         ("functions", registry.functions)):
        if not table:
            continue
        lines.append(f"{title}:")
        for comp in table.values():
            lines.append(f"  {comp.name}: {comp.summary}")
            for key, desc in comp.params.items():
                if key != "name":
                    lines.append(f"      {key}: {desc}")
    return "\n".join(lines)


# -- config parsing -----------------------------------------------------------

TOP_KEYS = {"seed", "output", "kernel", "init", "functions", "reference", "estimator", "bounds"}
INIT_KEYS = {"point", "segment", "from_reference"}
REFERENCE_KEYS = {"name", "atoms", "t_burn", "n", "seed"}
BOUND_KEYS = {"ceilings", "constant", "rate", "min_rate"}


def _line_map(text):
    """Map dotted key paths to 1-based source lines."""
    lines = {}

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for key, value in node.value:
                path = f"{prefix}.{key.value}" if prefix else str(key.value)
                lines[path] = key.start_mark.line + 1
                walk(value, path)
        elif isinstance(node, yaml.SequenceNode):
            for i, item in enumerate(node.value):
                path = f"{prefix}[{i}]"
                lines[path] = item.start_mark.line + 1
                walk(item, path)

    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return lines
    if root is not None:
        walk(root, "")
    return lines


@dataclass
class Scenario:
    seed: int
    kernel: dict
    init: dict
    functions: list
    reference: dict
    estimator: dict
    bounds: dict
    output: object = None


def parse_scenario(text, registry=None):
    registry = default_registry() if registry is None else registry
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"invalid YAML: {getattr(exc, 'problem', exc)}",
                          line=mark.line + 1 if mark else None) from None
    lines = _line_map(text)

    def err(msg, path):
        return ConfigError(msg, field=path, line=lines.get(path))

    if not isinstance(raw, dict):
        raise ConfigError("scenario must be a mapping of sections")
    for key in raw:
        if key not in TOP_KEYS:
            raise err(f"unknown key (allowed: {', '.join(sorted(TOP_KEYS))})", str(key))
    if "seed" not in raw:
        raise ConfigError("a seed is required", field="seed")
    if not isinstance(raw["seed"], int) or isinstance(raw["seed"], bool) or raw["seed"] < 0:
        raise err("seed must be a nonnegative integer", "seed")

    def section(name, required=True):
        value = raw.get(name, {} if not required else None)
        if value is None:
            raise ConfigError("section is required", field=name)
        if not isinstance(value, dict):
            raise err("must be a mapping", name)
        return dict(value)

    def check_keys(mapping, allowed, prefix):
        for key in mapping:
            if key not in allowed:
                raise err(f"unknown key (allowed: {', '.join(sorted(allowed))})", f"{prefix}.{key}")

    def resolve(mapping, table, prefix):
        name = mapping.get("name")
        if name is None:
            raise err("missing 'name'", prefix)
        comp = getattr(registry, table).get(name)
        if comp is None:
            known = ", ".join(sorted(getattr(registry, table))) or "none registered"
            raise err(f"unknown name {name!r} (known: {known})", f"{prefix}.name")
        check_keys(mapping, comp.params, prefix)
        return comp

    kernel = section("kernel")
    resolve(kernel, "kernels", "kernel")
    estimator = section("estimator")
    resolve(estimator, "estimators", "estimator")
    init = section("init", required=False)
    check_keys(init, INIT_KEYS, "init")
    reference = section("reference", required=False)
    check_keys(reference, REFERENCE_KEYS, "reference")
    bounds = section("bounds", required=False)
    check_keys(bounds, BOUND_KEYS, "bounds")
    if ("constant" in bounds) != ("rate" in bounds):
        raise err("'constant' and 'rate' must be given together", "bounds")

    functions = raw.get("functions", [])
    if not isinstance(functions, list):
        raise err("must be a list", "functions")
    for i, fn in enumerate(functions):
        if not isinstance(fn, dict):
            raise err("must be a mapping", f"functions[{i}]")
        resolve(fn, "functions", f"functions[{i}]")

    for key in ("n", "n_outer", "n_inner", "n_boot", "budget"):
        if key in estimator and (not isinstance(estimator[key], int) or estimator[key] < 0
                                 or (key != "n_boot" and estimator[key] == 0)):
            raise err("must be a positive integer", f"estimator.{key}")
    for key in ("t_grid", "s_grid"):
        if key in estimator:
            grid = estimator[key]
            if not isinstance(grid, list) or not grid or any(
                    not isinstance(v, (int, float)) or v < 0 for v in grid):
                raise err("must be a nonempty list of nonnegative numbers", f"estimator.{key}")
    if "ceilings" in bounds and len(bounds["ceilings"]) != len(estimator.get("t_grid", [])):
        raise err("needs one ceiling per t_grid entry", "bounds.ceilings")

    return Scenario(raw["seed"], kernel, init, functions, reference, estimator, bounds,
                    raw.get("output"))


def parse_point(kernel, value, path):
    if kernel.name == "delay_sde":
        dt = kernel.params["dt"]
        if isinstance(value, (int, float)):
            return PathSegment.constant(value, dt)
        return PathSegment(value, dt)
    if kernel.name == "finite":
        k = kernel.params["chain"].k
        if not isinstance(value, int) or not 0 <= value < k:
            raise ConfigError(f"state index must be an integer in [0, {k})", field=path)
        return value
    if not isinstance(value, (int, float)):
        raise ConfigError("expected a number", field=path)
    return float(value)


# -- verdicts and reports -----------------------------------------------------

@dataclass
class Verdict:
    bound: str
    t: float
    value: float
    half_width: float
    ceiling: float
    status: str
    margin: float


def judge(bound, t, value, half_width, ceiling):
    """Pass needs value + half_width <= ceiling; fail needs value - half_width > ceiling."""
    if value + half_width <= ceiling:
        status = "pass"
    elif value - half_width > ceiling:
        status = "fail"
    else:
        status = "inconclusive"
    return Verdict(bound, float(t), float(value), float(half_width), float(ceiling), status,
                   float(ceiling - value - half_width))


def verdicts_for(bounds, curve, fit):
    out = []
    if "ceilings" in bounds:
        for (t, v, h, _), c in zip(curve.entries(), bounds["ceilings"]):
            out.append(judge("ceiling", t, v, h, float(c)))
    if "constant" in bounds:
        C, r = float(bounds["constant"]), float(bounds["rate"])
        for t, v, h, _ in curve.entries():
            out.append(judge(f"{C}*exp(-{r}*t)", t, v, h, C * math.exp(-r * t)))
    if "min_rate" in bounds:
        if fit is None:
            raise ConfigError("'min_rate' needs a rate fit (set estimator.window)",
                              field="bounds.min_rate")
        # a fitted rate carries no half-width, so this verdict is pass/fail only
        target = float(bounds["min_rate"])
        status = "pass" if fit.c >= target else "fail"
        out.append(Verdict("min_rate", None, fit.c, 0.0, target, status, fit.c - target))
    return out


@dataclass
class Report:
    scenario: dict
    curve: object
    fit: object
    verdicts: list
    files: list = field(default_factory=list)

    @property
    def exit_code(self):
        statuses = {v.status for v in self.verdicts}
        if "fail" in statuses:
            return EXIT_FAIL
        if "inconclusive" in statuses:
            return EXIT_INCONCLUSIVE
        return EXIT_OK

    def to_dict(self):
        return {
            "scenario": self.scenario,
            "grids": {k: self.curve.meta[k] for k in ("t_grid", "s_grid") if k in self.curve.meta},
            "curve": [dict(zip(("t", "value", "half_width", "n"), e)) for e in self.curve.entries()],
            "fit": None if self.fit is None else asdict(self.fit),
            "verdicts": [asdict(v) for v in self.verdicts],
            "exit_code": self.exit_code,
        }

    def summary(self):
        sc = self.scenario
        lines = [
            f"kernel {sc['kernel']['name']}, estimator {sc['estimator']['name']}, seed {sc['seed']}",
        ]
        for key in ("t_grid", "s_grid"):
            if key in self.curve.meta:
                lines.append(f"{key}: {self.curve.meta[key]}")
        for t, v, h, n in self.curve.entries():
            lines.append(f"  t={t:g}  value={v:.6g}  ±{h:.3g}  (n={n})")
        if self.fit is not None:
            f = self.fit
            lines.append(f"fit: C={f.C:.6g} c={f.c:.6g} residual={f.residual:.3g} "
                         f"window=[{f.window[0]:g}, {f.window[1]:g}]")
        for v in self.verdicts:
            at = "" if v.t is None else f" t={v.t:g}"
            lines.append(f"  [{v.status.upper()}] {v.bound}{at}: {v.value:.6g} ±{v.half_width:.3g}"
                         f" vs {v.ceiling:.6g} (margin {v.margin:.3g})")
        counts = {s: sum(v.status == s for v in self.verdicts) for s in ("pass", "fail", "inconclusive")}
        lines.append(f"verdicts: {counts['pass']} pass, {counts['fail']} fail, "
                     f"{counts['inconclusive']} inconclusive")
        return "\n".join(lines)


def _init_point(kernel, init, reference_spec, seed, workers):
    if init.get("from_reference"):
        return build_reference(kernel, reference_spec, None, seed, workers)
    if "segment" in init:
        return parse_point(kernel, init["segment"], "init.segment")
    if "point" in init:
        return parse_point(kernel, init["point"], "init.point")
    return parse_point(kernel, 0 if kernel.name == "finite" else 0.0, "init.point")


def run_scenario(text, base_dir=".", registry=None, workers=None):
    """Parse, execute and (if ``output`` is set) write the scenario's artifacts."""
    registry = default_registry() if registry is None else registry
    sc = parse_scenario(text, registry)
    base = Path(base_dir)
    kernel = registry.kernels[sc.kernel["name"]].build(sc.kernel, base)
    init = _init_point(kernel, sc.init, sc.reference, sc.seed, workers)
    fns = [registry.functions[f["name"]].build(f, kernel) for f in sc.functions]
    ctx = Context(kernel, init, fns, dict(sc.estimator), sc.seed, sc.reference, workers)
    curve = registry.estimators[sc.estimator["name"]].build(ctx)
    fit = None
    if "window" in ctx.params:
        fit = E.rate_fit(curve, ctx.params["window"])
    report = Report(
        {"seed": sc.seed, "kernel": sc.kernel, "init": sc.init, "functions": sc.functions,
         "reference": sc.reference, "estimator": sc.estimator, "bounds": sc.bounds},
        curve, fit, verdicts_for(sc.bounds, curve, fit),
    )
    if sc.output is not None:
        out = base / sc.output
        io.write_curve(curve, out / "curve.csv")
        report.files.append(str(out / "curve.csv"))
        if fit is not None:
            io.write_fit(fit, out / "fit.csv")
            report.files.append(str(out / "fit.csv"))
        with open(out / "report.json", "w") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True, default=_json_default,
                      allow_nan=False)
            fh.write("\n")
        report.files.append(str(out / "report.json"))
    return report


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def oracle_check(path, out=None):
    """Validate a chain file and print its exact invariant quantities."""
    out = sys.stdout if out is None else out
    chain = io.load_chain(path)
    pi = oracle.stationary_vector(chain)
    fixed = float(np.abs(pi @ chain.P - pi).max())
    ck = 0.0
    for n in range(11):
        Pn = np.linalg.matrix_power(chain.P, n)
        for m in range(11 - n):
            ck = max(ck, float(np.abs(np.linalg.matrix_power(chain.P, n + m)
                                      - Pn @ np.linalg.matrix_power(chain.P, m)).max()))
    print(f"states: {chain.k}", file=out)
    print("stationary: " + " ".join(repr(float(p)) for p in pi), file=out)
    print(f"fixed-point residual: {fixed:.3e}", file=out)
    print(f"chapman-kolmogorov residual (n+m<=10): {ck:.3e}", file=out)
    ok = fixed <= 1e-12 and ck <= 1e-12
    print("ok" if ok else "FAILED", file=out)
    return EXIT_OK if ok else EXIT_FAIL


def main(argv=None, registry=None):
    parser = argparse.ArgumentParser(prog="wergodic", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute a scenario file")
    p_run.add_argument("config")
    sub.add_parser("list", help="list registered kernels, estimators and test functions")
    p_oracle = sub.add_parser("oracle-check", help="validate a finite chain CSV")
    p_oracle.add_argument("chain")
    args = parser.parse_args(argv)

    try:
        if args.command == "list":
            text = list_components(registry)
            if text:
                print(text)
            return EXIT_OK
        if args.command == "oracle-check":
            return oracle_check(args.chain)
        path = Path(args.config)
        report = run_scenario(path.read_text(), base_dir=path.parent, registry=registry)
        print(report.summary())
        return report.exit_code
    except (WergodicError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
