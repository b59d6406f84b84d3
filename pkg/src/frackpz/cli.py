"""Configuration-driven command line: solve | verify | sweep | info.

Config files are flat key = value text (dotted keys, # comments) or JSON.
Outputs are bit-reproducible for a fixed config and seed: report.json with
sorted keys and solution/sweep CSV with 17 significant digits.

Exit codes: 0 success, 1 config error, 2 nonconvergence, 3 verification
failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import (
    CRITICAL,
    SUBCRITICAL,
    SUBCRITICAL_LOW,
    SUPERCRITICAL,
    DomainSpec,
    GridFunction,
    ProblemParams,
    critical_exponents,
    finite_gradient,
)
from .solvers import (
    LinearSolver,
    SolveReport,
    _jsonify,
    equation_residual,
    measure_C0,
    monotone_iteration,
    picard_potential,
    schauder_iterate,
    schauder_lambda_star,
)
from .sources import SourceSpec


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    params: ProblemParams
    source: SourceSpec
    solver: str = "auto"
    grid_n: int = 128
    tol_outer: float = 1e-6
    tol_inner: float = 1e-8
    sweep_min: float = 0.0
    sweep_max: float = 0.0
    sweep_count: int = 0
    output_dir: str = "out"
    seed: int = 20240817
    verify_alpha: float = 0.0
    verify_sigma: float = 0.0
    verify_r1: float = 0.0
    raw: dict = field(default_factory=dict)


def _parse_kv_text(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, val = stripped.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def _coerce(val: str):
    low = val.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("inf", "infinity"):
        return math.inf
    try:
        return int(val)
    except ValueError:
        pass
    try:
        return float(val)
    except ValueError:
        return val


def load_config(path: str | Path, overrides: dict | None = None) -> RunConfig:
    text = Path(path).read_text()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        flat = _flatten(json.loads(text))
    else:
        flat = {k: _coerce(v) for k, v in _parse_kv_text(text).items()}
    if overrides:
        flat.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_dict(flat)


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def config_from_dict(flat: dict) -> RunConfig:
    try:
        grid_n = int(flat.get("grid_n", flat.get("domain.grid_n", 128)))
        kind = flat.get("domain.kind", "interval")
        if kind == "interval":
            domain = DomainSpec(kind="interval", grid_n=grid_n,
                                a=float(flat.get("domain.a", -1.0)),
                                b=float(flat.get("domain.b", 1.0)))
        elif kind == "ball":
            domain = DomainSpec(kind="ball", grid_n=grid_n,
                                radius=float(flat.get("domain.radius", 1.0)),
                                dim=int(flat.get("params.N", 1)))
        else:
            raise ConfigError(f"unknown domain.kind {kind!r}")
        params = ProblemParams(
            N=int(flat.get("params.N", 1)),
            s=float(flat["params.s"]),
            q=float(flat["params.q"]),
            lam=float(flat.get("params.lambda", flat.get("params.lam", 0.0))),
            m=float(flat.get("params.m", math.inf)),
            domain=domain,
        )
        skind = flat.get("source.kind", "constant")
        source = SourceSpec(
            kind=skind,
            value=float(flat.get("source.value", 1.0)),
            theta=float(flat.get("source.theta", 0.0)),
            radius=float(flat.get("source.radius", 0.0)),
            lo=float(flat.get("source.lo", 0.0)),
            hi=float(flat.get("source.hi", 0.0)),
        )
        return RunConfig(
            params=params,
            source=source,
            solver=str(flat.get("solver", "auto")),
            grid_n=grid_n,
            tol_outer=float(flat.get("tolerances.outer", 1e-6)),
            tol_inner=float(flat.get("tolerances.inner", 1e-8)),
            sweep_min=float(flat.get("sweep.lambda_min", 0.0)),
            sweep_max=float(flat.get("sweep.lambda_max", 0.0)),
            sweep_count=int(flat.get("sweep.count", 0)),
            output_dir=str(flat.get("output_dir", "out")),
            seed=int(flat.get("seed", 20240817)),
            verify_alpha=float(flat.get("verify.alpha", 0.0)),
            verify_sigma=float(flat.get("verify.sigma", 0.0)),
            verify_r1=float(flat.get("verify.r1", 0.0)),
            raw=flat,
        )
    except ConfigError:
        raise
    except KeyError as e:
        raise ConfigError(f"missing required key {e}")
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e))


def route_solver(cfg: RunConfig) -> str:
    if cfg.solver != "auto":
        return cfg.solver
    regime = critical_exponents(cfg.params).regime
    if regime in (SUBCRITICAL, SUBCRITICAL_LOW):
        return "monotone"
    return "schauder"


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_solution_csv(path: Path, u: GridFunction, s: float, q: float,
                       lam: float, fvals: np.ndarray, op) -> None:
    lap = op.apply(u).values
    grad = finite_gradient(u).values
    res = lap - grad ** q - lam * fvals
    with open(path, "w") as fh:
        fh.write("x,u,grad_u,residual\n")
        for x, uu, gg, rr in zip(u.domain.nodes, u.values, grad, res):
            fh.write(f"{_fmt(x)},{_fmt(uu)},{_fmt(gg)},{_fmt(rr)}\n")


def run_single(cfg: RunConfig, lam: float | None = None,
               want_solution: bool = True) -> tuple[SolveReport, dict]:
    params = cfg.params
    if lam is not None:
        params = ProblemParams(N=params.N, s=params.s, q=params.q, lam=lam,
                               m=params.m, domain=params.domain)
    method = route_solver(cfg)
    meta = {"solver": method, "regime": critical_exponents(params).regime}
    if method == "monotone":
        w_super = None
        if params.domain.kind == "ball" and params.N > 2 * params.s:
            from .supersolutions import bump_lambda_admissible
            lam_adm, w_super = bump_lambda_admissible(
                params.domain, params.s, params.q, cfg.source)
            meta["bump_lambda_admissible"] = lam_adm
            if w_super is not None and params.lam > lam_adm:
                w_super = None   # bound not valid at this lambda
        rep = monotone_iteration(params, cfg.source, w_super=w_super,
                                 tol_outer=cfg.tol_outer, tol_inner=cfg.tol_inner)
    elif method == "picard":
        rep = picard_potential(params, cfg.source)
    elif method == "schauder":
        C0, probe = measure_C0(params)
        norm_f = cfg.source.lm_norm(params.domain, params.m)
        l_star, lam_star = schauder_lambda_star(params, norm_f, C0)
        meta.update({"C0": C0, "C0_probe": probe, "l_star": l_star,
                     "lambda_star": lam_star})
        # the analytic lambda* is sufficient, not necessary: keep iterating
        # past a set-E breach and record convergence (sweeps bracket the
        # empirical threshold this way)
        rep = schauder_iterate(params, cfg.source, l_star, lam=params.lam,
                               tol=cfg.tol_outer, abort_on_breach=False,
                               minimality_check=False)
    else:
        raise ConfigError(f"unknown solver {cfg.solver!r}")
    return rep, meta


def cmd_solve(cfg: RunConfig, outdir: Path) -> int:
    rep, meta = run_single(cfg)
    outdir.mkdir(parents=True, exist_ok=True)
    doc = rep.to_dict()
    doc["meta"] = _jsonify(meta)
    doc["config"] = _jsonify(cfg.raw)
    doc["seed"] = cfg.seed
    (outdir / "report.json").write_text(json.dumps(doc, sort_keys=True, indent=1))
    if rep.solution is not None:
        solver = LinearSolver(cfg.params.domain, cfg.params.s, method="matrix")
        write_solution_csv(outdir / "solution.csv", rep.solution, cfg.params.s,
                           cfg.params.q, cfg.params.lam,
                           cfg.source.on_grid(cfg.params.domain).values, solver.op)
    if rep.iterates:
        # decimated iterate snapshots; Picard snapshots live on the
        # potential box, so the row count follows the snapshots themselves
        size = rep.iterates[0].size
        with open(outdir / "iterates.csv", "w") as fh:
            fh.write("node," + ",".join(f"snapshot_{k}"
                                        for k in range(len(rep.iterates))) + "\n")
            for i in range(size):
                vals = ",".join(_fmt(snap[i]) for snap in rep.iterates)
                fh.write(f"{i},{vals}\n")
    return 0 if rep.converged else 2


def cmd_sweep(cfg: RunConfig, outdir: Path, jobs: int | None = None) -> int:
    if cfg.sweep_count < 1:
        raise ConfigError("sweep requires sweep.count >= 1 and a lambda range")
    lams = np.linspace(cfg.sweep_min, cfg.sweep_max, cfg.sweep_count)
    jobs = jobs or os.cpu_count() or 1

    def work(i):
        lam = float(lams[i])
        try:
            rep, _ = run_single(cfg, lam=lam, want_solution=False)
            sup = float(np.max(np.abs(rep.solution.values))) if rep.solution else math.nan
            return (i, lam, rep.converged, rep.iterations, rep.residual_l1, sup)
        except Exception:
            return (i, lam, False, 0, math.nan, math.nan)

    with ThreadPoolExecutor(max_workers=jobs) as ex:
        rows = sorted(ex.map(work, range(len(lams))))
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "sweep.csv", "w") as fh:
        fh.write("lambda,converged,iterations,final_residual,sup_norm\n")
        for _, lam, conv, its, res, sup in rows:
            fh.write(f"{_fmt(lam)},{int(conv)},{its},{_fmt(res)},{_fmt(sup)}\n")
    conv_lams = [lam for _, lam, conv, *_ in rows if conv]
    lam_emp = max(conv_lams) if conv_lams else math.nan
    doc = {"lambda_star_empirical": lam_emp,
           "n_points": len(rows), "seed": cfg.seed}
    regime = critical_exponents(cfg.params).regime
    if regime in (CRITICAL, SUPERCRITICAL):
        C0, probe = measure_C0(cfg.params)
        norm_f = cfg.source.lm_norm(cfg.params.domain, cfg.params.m)
        _, lam_star = schauder_lambda_star(cfg.params, norm_f, C0)
        doc["lambda_star_analytic"] = lam_star
        doc["analytic_is_lower_bound"] = bool(
            math.isnan(lam_emp) or lam_emp >= lam_star * (1 - 1e-9))
    (outdir / "sweep.json").write_text(json.dumps(_jsonify(doc), sort_keys=True,
                                                  indent=1))
    return 0


def cmd_verify(cfg: RunConfig, target: str, outdir: Path) -> int:
    from . import diagnostics as dg
    params = cfg.params
    dom = params.domain
    outdir.mkdir(parents=True, exist_ok=True)
    doc: dict
    ok: bool
    if target == "greenbounds":
        from .operators.green import ball_green_build
        if dom.kind != "ball":
            raise ConfigError("greenbounds verification needs a ball domain")
        coarse = DomainSpec(kind="ball", grid_n=dom.grid_n // 2,
                            radius=dom.radius, dim=dom.dim)
        rep_c = dg.check_green_bounds(ball_green_build(coarse, params.s),
                                      seed=cfg.seed)
        rep_f = dg.check_green_bounds(ball_green_build(dom, params.s),
                                      seed=cfg.seed)
        drift = rep_f.fitted_constant / rep_c.fitted_constant
        ok = rep_c.passed and rep_f.passed and 0.5 < drift < 2.0
        scatter = rep_f.extra.pop("scatter")
        rep_c.extra.pop("scatter", None)
        with open(outdir / "greenbounds_scatter.csv", "w") as fh:
            fh.write("ratio,dist,d_x\n")
            for row in scatter:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
        doc = {"fitted_coarse": rep_c.fitted_constant,
               "fitted_fine": rep_f.fitted_constant,
               "gradient_constant": rep_f.extra["gradient_constant"],
               "violations": rep_f.violations, "drift": drift,
               "samples": rep_f.samples, "pass": ok}
    elif target == "m00":
        rep = dg.check_m00(cfg.source, params)
        ok = rep.passed
        doc = {"C1": rep.C1, "C1_fine": rep.C1_fine, "drift": rep.drift,
               "pass": ok}
    elif target == "hardy":
        c1 = dg.hardy_constant(dom, params.s)
        fine = DomainSpec(kind=dom.kind, grid_n=2 * dom.grid_n, a=dom.a,
                          b=dom.b, radius=dom.radius, dim=dom.dim)
        c2 = dg.hardy_constant(fine, params.s)
        drift = abs(c2 / c1 - 1.0)
        ok = c1 > 0 and drift < 0.1
        doc = {"constant": c1, "constant_fine": c2, "drift": drift, "pass": ok}
    elif target == "supersolution":
        from .supersolutions import (PowerSupersolSpec, bump_lambda_admissible,
                                     power_lambda_admissible)
        candidates = {}
        if dom.kind == "ball" and params.N / (params.N - 2 * params.s + 1) \
                < params.q < 2 * params.s:
            spec = PowerSupersolSpec.make(params.N, params.s, params.q,
                                          shift=2.0 * dom.radius)
            candidates["power"] = power_lambda_admissible(
                spec, dom, cfg.source.on_grid(dom))
        if dom.kind == "ball" and params.N > 2 * params.s:
            lam_b, _wb = bump_lambda_admissible(dom, params.s, params.q,
                                               cfg.source)
            candidates["bump"] = lam_b
        if not candidates:
            raise ConfigError("no supersolution family for these parameters")
        family = max(candidates, key=candidates.get)
        lam_adm = candidates[family]
        ok = params.lam <= lam_adm
        doc = {"family": family, "families": candidates,
               "lambda_admissible": lam_adm, "lambda": params.lam, "pass": ok}
    elif target == "comparison":
        doc, ok = _verify_comparison(cfg)
    elif target == "singularweight":
        alpha = cfg.verify_alpha or 0.5 * (1 + 2 * params.s)
        rep = dg.singular_weight_study(alpha, dom, params.s)
        ok = rep.monotone and rep.saturated and rep.two_sided
        doc = {"alpha": alpha, "sup_norms": rep.sup_norms,
               "monotone": rep.monotone, "saturated": rep.saturated,
               "seminorm_ratio_stable": rep.seminorm_ratio_stable,
               "seminorm_ratio_growing": rep.seminorm_ratio_growing,
               "pass": ok}
    elif target == "bootstrap":
        sigma = cfg.verify_sigma or 4.0 * params.N / (2 * params.s - 1)
        p_star = params.N / (params.N - 2 * params.s + 1)
        r1 = cfg.verify_r1 or 0.5 * (1.0 + p_star)
        seq, exited = dg.exponent_bootstrap(params.N, sigma, params.s, r1)
        ok = exited and bool(np.all(np.diff(seq) > 0))
        doc = {"sigma": sigma, "r1": r1, "steps": len(seq),
               "ladder": seq.tolist() if len(seq) <= 50 else seq[:50].tolist(),
               "exited": exited, "pass": ok}
    else:
        raise ConfigError(f"unknown verification target {target!r}")
    (outdir / f"verify_{target}.json").write_text(
        json.dumps(_jsonify(doc), sort_keys=True, indent=1))
    return 0 if ok else 3


def _verify_comparison(cfg: RunConfig) -> tuple[dict, bool]:
    """Canonical harness instance: truncated iterate vs verified supersolution."""
    from . import diagnostics as dg
    from .solvers import truncated_step
    params = cfg.params
    dom = params.domain
    solver = LinearSolver(dom, params.s)
    fv = cfg.source.on_grid(dom)
    u0 = GridFunction(dom, np.zeros(dom.grid_n))
    u_n, _ = truncated_step(u0, 8.0, params.q, params.lam, fv, solver)
    g = GridFunction(dom, truncation_g(u_n, params, fv))
    b = GridFunction(dom, params.q * np.maximum(
        finite_gradient(u_n).values, 1.0) ** (params.q - 1.0))
    sigma = 2.0 * params.N / (2 * params.s - 1)
    rep = dg.comparison_check(u_n, u_n, lambda gr: np.zeros_like(gr), b, sigma,
                              g, params.s, op=solver.op)
    ok = rep.verdict == "HOLDS"
    return ({"verdict": rep.verdict, "failed_hypothesis": rep.failed_hypothesis,
             "min_gap": rep.min_gap, "pass": ok}, ok)


def truncation_g(u: GridFunction, params: ProblemParams, fv: GridFunction):
    from .solvers import truncation_nonlinearity
    return truncation_nonlinearity(finite_gradient(u).values, params.q, 8.0) \
        + params.lam * fv.values


def cmd_info(cfg: RunConfig) -> int:
    exps = critical_exponents(cfg.params)
    info = {
        "regime": exps.regime,
        "p_star": exps.p_star,
        "critical_q": exps.critical_q,
        "regularity_cap": exps.regularity_cap,
        "alpha0": exps.alpha0,
        "solver": route_solver(cfg),
        "grid_n": cfg.grid_n,
        "h": cfg.params.domain.h,
    }
    print(json.dumps(_jsonify(info), sort_keys=True, indent=1))
    return 0


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="frackpz",
                                 description="stationary fractional KPZ workbench")
    ap.add_argument("command", choices=["solve", "verify", "sweep", "info"])
    ap.add_argument("target", nargs="?", default=None,
                    help="verification target (verify command)")
    ap.add_argument("--config", required=True)
    ap.add_argument("--out", default=None)
    ap.add_argument("--jobs", type=int, default=None)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--grid", type=int, default=None)
    args = ap.parse_args(argv)
    try:
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.grid is not None:
            overrides["grid_n"] = args.grid
        cfg = load_config(args.config, overrides)
        outdir = Path(os.environ.get("FRACKPZ_OUT") or args.out or cfg.output_dir)
        if args.command == "info":
            return cmd_info(cfg)
        if args.command == "solve":
            return cmd_solve(cfg, outdir)
        if args.command == "sweep":
            return cmd_sweep(cfg, outdir, jobs=args.jobs)
        if args.command == "verify":
            if not args.target:
                raise ConfigError("verify needs a target: greenbounds|m00|hardy|"
                                  "supersolution|comparison|singularweight|bootstrap")
            return cmd_verify(cfg, args.target, outdir)
        raise ConfigError(f"unknown command {args.command}")
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
