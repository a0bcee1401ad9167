"""Command-line entry point.

Subcommands::

    nuhawkes hawkes simulate    [--paths N] [--method thinning|cluster] [--bivariate]
    nuhawkes resolvent compute  [--horizon H] [--step S]
    nuhawkes cir simulate       [--paths N] [--horizon H] [--step S] [--scheme exact|euler]
    nuhawkes heston simulate    [--paths N] [--horizon H] [--step S]
    nuhawkes limit check --experiment NAME [--emit-plot-data]
    nuhawkes estimate cir --input FILE [--dt DT]

Every run is a deterministic function of (config, seed): the master seed
comes from ``NUH_SEED`` if set, else ``--seed``, else ``sim.seed`` in the
config, else 0.  Output files embed the config hash and seed as ``#``
metadata lines (CSV) or top-level fields (JSON); no timestamps are written.

Exit codes: 0 success; 1 validation error; 2 an experiment reported
``passed=false``; 3 internal assertion (thinning bound or solver clamps).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import limits
from ._backend import backend_name, set_num_threads
from .calibration import estimate_cir, implied_branching_ratio
from .config import (
    build_kernel,
    build_regime,
    build_shape,
    config_hash,
    get_float,
    get_int,
    load_config,
)
from .diffusion import CIRParams, HestonParams, cir_path, heston_paths
from .errors import (
    BoundViolation,
    ClampBudgetExceeded,
    NuhawkesError,
    ValidationError,
)
from .grid import GridFunction
from .hawkes import BivariateKernelSpec, simulate_bivariate, simulate_cluster, simulate_thinning
from .kernels import Exponential, PowerLaw
from .resolvent import compute_resolvent, default_step, resolvent_l1, rho_limit_density

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_EXPERIMENT_FAILED = 2
EXIT_INTERNAL = 3

EXPERIMENTS = (
    "cir-marginal",
    "cir-mean",
    "integrated-count",
    "degenerate",
    "geometric-sum",
    "heavy-tail",
    "heston-price",
    "covariation",
    # extras beyond the core set:
    "martingale-qv",
    "variance-blowup",
)


def _diag(event: str, **fields) -> None:
    print(json.dumps({"event": event, **fields}, sort_keys=True), file=sys.stderr)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _resolve_seed(args, cfg) -> int:
    env = os.environ.get("NUH_SEED")
    if env is not None:
        return int(env)
    if args.seed is not None:
        return args.seed
    return get_int(cfg, "sim.seed", 0)


def _load_cfg(args) -> dict:
    cfg = load_config(args.config) if args.config else {}
    for item in args.set or []:
        if "=" not in item:
            raise ValidationError(f"--set expects key=value, got {item!r}")
        k, _, v = item.partition("=")
        cfg[k.strip()] = v.strip()
    return cfg


def _csv_header(fh, cfg_hash: str, seed: int, columns) -> None:
    fh.write(f"# config_hash={cfg_hash}\n")
    fh.write(f"# seed={seed}\n")
    fh.write(f"# backend={backend_name()}\n")
    fh.write(",".join(columns) + "\n")


def _write_report(path: Path, cfg_hash: str, seed: int, report) -> None:
    payload = {
        "config_hash": cfg_hash,
        "seed": seed,
        "backend": backend_name(),
        "report": report.to_dict(),
    }
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", "utf-8")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_hawkes_simulate(args) -> int:
    cfg = _load_cfg(args)
    seed = _resolve_seed(args, cfg)
    chash = config_hash(cfg)
    regime = build_regime(cfg)
    n_paths = args.paths if args.paths is not None else get_int(cfg, "sim.paths", 1)
    horizon = args.horizon or get_float(cfg, "sim.horizon", regime.T)
    cap = get_int(cfg, "sim.event_cap", 10_000_000)
    method = args.method or cfg.get("sim.method", "thinning")
    bivariate = args.bivariate or cfg.get("sim.bivariate", "0") in ("1", "true")

    out = Path(args.out) / "events.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8") as fh:
        _csv_header(fh, chash, seed, ("path_id", "time", "mark"))
        for i in range(n_paths):
            if bivariate:
                kernels = BivariateKernelSpec(
                    Exponential(get_float(cfg, "price.beta1", 1.0)),
                    get_float(cfg, "price.w1", 0.6),
                    Exponential(get_float(cfg, "price.beta2", 1.0)),
                    get_float(cfg, "price.w2", 0.4),
                    regime.a_T,
                )
                path = simulate_bivariate(kernels, regime.mu, horizon, seed, i, cap)
                for t, mk in zip(path.jumps, path.marks):
                    fh.write(f"{i},{_fmt(t)},{int(mk)}\n")
            else:
                kernel = build_kernel(cfg, regime)
                if method == "thinning":
                    path = simulate_thinning(kernel, regime.mu, horizon, seed, i, cap)
                elif method == "cluster":
                    path = simulate_cluster(kernel, regime.mu, horizon, seed, i, cap)
                else:
                    raise ValidationError(f"unknown sim.method {method!r}")
                for t in path.jumps:
                    fh.write(f"{i},{_fmt(t)},0\n")
    _diag("wrote", file=str(out), paths=n_paths)
    return EXIT_OK


def _cmd_resolvent_compute(args) -> int:
    cfg = _load_cfg(args)
    seed = _resolve_seed(args, cfg)
    chash = config_hash(cfg)
    regime = build_regime(cfg)
    kernel = build_kernel(cfg, regime)
    step = args.step or get_float(cfg, "resolvent.step", default_step(kernel))
    if args.horizon:
        horizon = args.horizon
    else:
        scale = kernel.time_scale / (1.0 - kernel.a_T)
        horizon = get_float(cfg, "resolvent.horizon", 8.0 * scale)
    horizon = round(horizon / step) * step
    psi = compute_resolvent(kernel, horizon, step)
    norm = resolvent_l1(kernel)
    try:
        limit_vals = rho_limit_density(kernel, regime, psi.times / regime.T)
    except NuhawkesError:
        limit_vals = np.full(psi.values.size, math.nan)

    out = Path(args.out) / "resolvent.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8") as fh:
        _csv_header(fh, chash, seed, ("t", "psi_T", "rho_T", "rho_limit"))
        for t, v, lim in zip(psi.times, psi.values, limit_vals):
            rho = regime.T * v / norm
            fh.write(f"{_fmt(t)},{_fmt(v)},{_fmt(rho)},{_fmt(lim)}\n")
    _diag("wrote", file=str(out), points=int(psi.values.size))
    return EXIT_OK


def _cir_params_from_cfg(cfg, regime, price_model: bool) -> CIRParams:
    if "cir.kappa" in cfg:
        return CIRParams(
            kappa=get_float(cfg, "cir.kappa"),
            theta=get_float(cfg, "cir.theta"),
            nu=get_float(cfg, "cir.nu"),
            x0=get_float(cfg, "cir.x0", 0.0),
        )
    kernel = build_kernel(cfg, regime)
    if price_model:
        return CIRParams.from_price_regime(regime.lam, kernel.mean, regime.mu)
    return CIRParams.from_hawkes_regime(regime.lam, kernel.mean, regime.mu)


def _cmd_cir_simulate(args) -> int:
    cfg = _load_cfg(args)
    seed = _resolve_seed(args, cfg)
    chash = config_hash(cfg)
    regime = build_regime(cfg)
    params = _cir_params_from_cfg(cfg, regime, price_model=False)
    n_paths = args.paths if args.paths is not None else get_int(cfg, "sim.paths", 1)
    horizon = args.horizon or get_float(cfg, "sim.horizon", 1.0)
    step = args.step or get_float(cfg, "sim.step", 1.0 / 500.0)
    scheme = args.scheme or cfg.get("sim.scheme", "exact")

    out = Path(args.out) / "cir.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8") as fh:
        _csv_header(fh, chash, seed, ("path_id", "t", "X"))
        for i in range(n_paths):
            cpath = cir_path(params, horizon, step, seed, i, scheme=scheme)
            for t, x in zip(cpath.x.times, cpath.x.values):
                fh.write(f"{i},{_fmt(t)},{_fmt(x)}\n")
    _diag("wrote", file=str(out), paths=n_paths)
    return EXIT_OK


def _cmd_heston_simulate(args) -> int:
    cfg = _load_cfg(args)
    seed = _resolve_seed(args, cfg)
    chash = config_hash(cfg)
    regime = build_regime(cfg)
    w1 = get_float(cfg, "price.w1", 0.6)
    w2 = get_float(cfg, "price.w2", 0.4)
    kernels = BivariateKernelSpec(
        Exponential(get_float(cfg, "price.beta1", 1.0)),
        w1,
        Exponential(get_float(cfg, "price.beta2", 1.0)),
        w2,
        regime.a_T,
    )
    cir = CIRParams.from_price_regime(regime.lam, kernels.joint_mean, regime.mu)
    params = HestonParams(cir=cir, price_scale=kernels.price_scale)
    n_paths = args.paths if args.paths is not None else get_int(cfg, "sim.paths", 1)
    horizon = args.horizon or get_float(cfg, "sim.horizon", 1.0)
    step = args.step or get_float(cfg, "sim.step", 1.0 / 500.0)

    out = Path(args.out) / "heston.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8") as fh:
        _csv_header(fh, chash, seed, ("path_id", "t", "C", "P"))
        for i in range(n_paths):
            c, p = heston_paths(params, horizon, step, seed, i)
            for t, cv, pv in zip(c.times, c.values, p.values):
                fh.write(f"{i},{_fmt(t)},{_fmt(cv)},{_fmt(pv)}\n")
    _diag("wrote", file=str(out), paths=n_paths)
    return EXIT_OK


def _run_experiment(name: str, cfg: dict, seed: int, threads: int):
    """Build and run the named experiment from the config (acceptance-scale
    parameters are the defaults).  Returns a list of reports."""
    shape = build_shape(cfg)
    lam = get_float(cfg, "regime.lambda", 1.0)
    mu = get_float(cfg, "regime.mu", 1.0)

    if name == "geometric-sum":
        return [
            limits.run_geometric_sum(
                shape=shape,
                T=get_float(cfg, "regime.T", 1000.0),
                lam=lam,
                mu=mu,
                n=get_int(cfg, "experiment.n", 5000),
                threshold=get_float(cfg, "experiment.threshold", 0.05),
                null_runs=get_int(cfg, "experiment.null_runs", 100),
                seed=seed,
            )
        ]
    if name in ("cir-mean", "integrated-count"):
        mean_rep, count_rep = limits.run_cir_mean_and_count(
            shape=shape,
            T=get_float(cfg, "regime.T", 2000.0),
            lam=lam,
            mu=mu,
            paths=get_int(cfg, "experiment.paths", 1000),
            grid_step=1.0 / get_int(cfg, "experiment.grid_points", 500),
            seed=seed,
            threads=threads,
            collect_curve=name == "cir-mean",
        )
        return [mean_rep if name == "cir-mean" else count_rep]
    if name == "cir-marginal":
        return [
            limits.run_cir_marginal(
                shape=shape,
                T=get_float(cfg, "regime.T", 5000.0),
                lam=lam,
                mu=mu,
                paths=get_int(cfg, "experiment.paths", 1000),
                paths_doubled=get_int(cfg, "experiment.paths_doubled", 300),
                threshold=get_float(cfg, "experiment.threshold", 0.08),
                seed=seed,
                threads=threads,
            )
        ]
    if name == "martingale-qv":
        return [
            limits.run_martingale_qv(
                shape=shape,
                T=get_float(cfg, "regime.T", 5000.0),
                lam=lam,
                mu=mu,
                paths=get_int(cfg, "experiment.paths", 500),
                threshold=get_float(cfg, "experiment.threshold", 0.05),
                seed=seed,
                threads=threads,
            )
        ]
    if name == "degenerate":
        ts = [
            float(t)
            for t in cfg.get("experiment.Ts", "1000,4000,16000").split(",")
            if t.strip()
        ]
        exponent = get_float(cfg, "experiment.exponent", 0.5)
        schedule = [(t, 1.0 - t**-exponent) for t in ts]
        return [
            limits.check_degenerate_regime(
                shape,
                mu,
                schedule,
                paths_per_T=get_int(cfg, "experiment.paths", 200),
                seed=seed,
                threads=threads,
            )
        ]
    if name == "variance-blowup":
        ts = [
            float(t)
            for t in cfg.get("experiment.Ts", "200,400,800").split(",")
            if t.strip()
        ]
        exponent = get_float(cfg, "experiment.exponent", 1.5)
        schedule = [(t, 1.0 - t**-exponent) for t in ts]
        return [
            limits.run_variance_blowup(
                shape,
                mu,
                schedule,
                paths_per_T=get_int(cfg, "experiment.paths", 200),
                seed=seed,
                threads=threads,
            )
        ]
    if name in ("heston-price", "covariation"):
        price_rep, cov_rep = limits.run_heston_price(
            w1=get_float(cfg, "price.w1", 0.6),
            w2=get_float(cfg, "price.w2", 0.4),
            beta1=get_float(cfg, "price.beta1", 1.0),
            beta2=get_float(cfg, "price.beta2", 1.0),
            T=get_float(cfg, "regime.T", 5000.0),
            lam=lam,
            mu=mu,
            paths=get_int(cfg, "experiment.paths", 1000),
            seed=seed,
            threads=threads,
        )
        return [price_rep if name == "heston-price" else cov_rep]
    if name == "heavy-tail":
        if not isinstance(shape, PowerLaw):
            shape = PowerLaw(
                get_float(cfg, "kernel.alpha", 0.5), get_float(cfg, "kernel.x0", 1.0)
            )
        return [
            limits.run_heavy_tail(
                alpha=shape.alpha,
                x0=shape.x0,
                T=get_float(cfg, "regime.T", 10_000.0),
                lam=lam,
                n=get_int(cfg, "experiment.n", 10_000),
                threshold=get_float(cfg, "experiment.threshold", 0.05),
                seed=seed,
            )
        ]
    raise ValidationError(f"unknown experiment {name!r}")


def _cmd_limit_check(args) -> int:
    cfg = _load_cfg(args)
    seed = _resolve_seed(args, cfg)
    chash = config_hash(cfg)
    threads = args.threads or get_int(cfg, "sim.threads", 0) or limits.default_threads()
    set_num_threads(threads)
    reports = _run_experiment(args.experiment, cfg, seed, threads)

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    code = EXIT_OK
    for report in reports:
        _write_report(outdir / f"{report.test_name}.json", chash, seed, report)
        _diag(
            "report",
            test=report.test_name,
            statistic=report.statistic,
            threshold=report.threshold,
            passed=report.passed,
        )
        if args.emit_plot_data and "curve" in report.metadata:
            curve = report.metadata["curve"]
            with (outdir / f"{report.test_name}_curve.csv").open(
                "w", encoding="utf-8"
            ) as fh:
                _csv_header(fh, chash, seed, ("x", "y", "yerr", "reference"))
                for x, y, e, r in zip(
                    curve["t"], curve["mean"], curve["se"], curve["target"]
                ):
                    fh.write(f"{_fmt(x)},{_fmt(y)},{_fmt(e)},{_fmt(r)}\n")
        if not report.passed:
            code = EXIT_EXPERIMENT_FAILED
    return code


def _cmd_estimate_cir(args) -> int:
    cfg = _load_cfg(args)
    seed = _resolve_seed(args, cfg)
    chash = config_hash(cfg)
    data = np.loadtxt(args.input, delimiter=",", comments="#", skiprows=args.skip_header)
    if data.ndim != 2 or data.shape[1] < 2:
        raise ValidationError("input CSV must carry (t, X) columns")
    t, x = data[:, 0], data[:, 1]
    dt = args.dt or float(np.median(np.diff(t)))
    est = estimate_cir(GridFunction(step=dt, values=x), dt)
    payload = {
        "config_hash": chash,
        "seed": seed,
        "estimate": {k: float(v) for k, v in est.to_dict().items()},
    }
    if args.horizon_T:
        a_hat, a_se = implied_branching_ratio(est, args.horizon_T)
        payload["implied_branching_ratio"] = {"a_T_hat": a_hat, "se": a_se}
    out = Path(args.out) / "estimate.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", "utf-8")
    _diag("wrote", file=str(out))
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    p.add_argument("--seed", type=int, default=None, help="master seed (NUH_SEED overrides)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--threads", type=int, default=0, help="worker threads (0 = all cores)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nuhawkes",
        description="Nearly unstable Hawkes processes and their diffusion limits",
    )
    top = parser.add_subparsers(dest="group", required=True)

    hawkes = top.add_parser("hawkes", help="point-process simulation")
    hsub = hawkes.add_subparsers(dest="action", required=True)
    sim = hsub.add_parser("simulate", help="simulate Hawkes paths to CSV")
    _add_common(sim)
    sim.add_argument("--paths", type=int, default=None)
    sim.add_argument("--method", choices=("thinning", "cluster"), default=None)
    sim.add_argument("--bivariate", action="store_true")
    sim.add_argument("--horizon", type=float, default=None)
    sim.set_defaults(func=_cmd_hawkes_simulate)

    resolvent = top.add_parser("resolvent", help="renewal resolvent")
    rsub = resolvent.add_subparsers(dest="action", required=True)
    comp = rsub.add_parser("compute", help="compute psi_T / rho_T to CSV")
    _add_common(comp)
    comp.add_argument("--horizon", type=float, default=None)
    comp.add_argument("--step", type=float, default=None)
    comp.set_defaults(func=_cmd_resolvent_compute)

    cir = top.add_parser("cir", help="CIR limit diffusion")
    csub = cir.add_subparsers(dest="action", required=True)
    csim = csub.add_parser("simulate", help="simulate CIR paths to CSV")
    _add_common(csim)
    csim.add_argument("--paths", type=int, default=None)
    csim.add_argument("--horizon", type=float, default=None)
    csim.add_argument("--step", type=float, default=None)
    csim.add_argument("--scheme", choices=("exact", "euler"), default=None)
    csim.set_defaults(func=_cmd_cir_simulate)

    heston = top.add_parser("heston", help="Heston limit of the price model")
    hesub = heston.add_subparsers(dest="action", required=True)
    hsim = hesub.add_parser("simulate", help="simulate (C, P) paths to CSV")
    _add_common(hsim)
    hsim.add_argument("--paths", type=int, default=None)
    hsim.add_argument("--horizon", type=float, default=None)
    hsim.add_argument("--step", type=float, default=None)
    hsim.set_defaults(func=_cmd_heston_simulate)

    limit = top.add_parser("limit", help="limit-theorem experiments")
    lsub = limit.add_subparsers(dest="action", required=True)
    check = lsub.add_parser("check", help="run one experiment, emit a JSON report")
    _add_common(check)
    check.add_argument("--experiment", choices=EXPERIMENTS, required=True)
    check.add_argument("--emit-plot-data", action="store_true")
    check.set_defaults(func=_cmd_limit_check)

    estimate = top.add_parser("estimate", help="parameter recovery")
    esub = estimate.add_subparsers(dest="action", required=True)
    ecir = esub.add_parser("cir", help="CIR parameter estimation from a CSV path")
    _add_common(ecir)
    ecir.add_argument("--input", required=True, help="CSV with (t, X) columns")
    ecir.add_argument("--dt", type=float, default=None)
    ecir.add_argument("--skip-header", type=int, default=0)
    ecir.add_argument("--horizon-T", type=float, default=None)
    ecir.set_defaults(func=_cmd_estimate_cir)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (BoundViolation, ClampBudgetExceeded) as exc:
        _diag("error", type=type(exc).__name__, message=str(exc))
        return EXIT_INTERNAL
    except NuhawkesError as exc:
        _diag("error", type=type(exc).__name__, message=str(exc))
        return EXIT_VALIDATION
    except (OSError, ValueError) as exc:
        _diag("error", type=type(exc).__name__, message=str(exc))
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
