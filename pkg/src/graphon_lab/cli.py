"""Command-line entry point: ``graphon-lab {synth,fit,ewa,eval,experiment}``.

Exit codes: 0 on success, 2 on configuration errors, 3 on numerical
failures.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .aggregation import HyperGrid, default_grid, ewa_weights, temperature
from .core import NoiseModel, induced_mean
from .estimation import FitConfig, lloyd_fit
from .evaluation import delta_tilde, mse_theta, oracle_fit, rate_bound
from .experiments import (
    ExperimentSpec,
    emit_outputs,
    fit_grid,
    run_experiment,
)
from .io import (
    dump_json,
    load_json,
    load_matrix,
    model_from_dict,
    report_to_dict,
    save_matrix,
)
from .synthesis import SynthConfig, make_standard_graphon, synthesize, true_assignments
from .core import AssignmentMatrix

__all__ = ["main"]


def _noise_from_args(args) -> NoiseModel:
    kind = args.noise
    if kind == "bernoulli":
        return NoiseModel.bernoulli()
    if args.noise_param is None:
        raise ValueError(f"--noise {kind} needs --noise-param")
    if kind == "binomial":
        return NoiseModel.binomial(int(args.noise_param))
    if kind == "scaled_poisson":
        return NoiseModel.scaled_poisson(float(args.noise_param))
    return NoiseModel.gaussian(float(args.noise_param))


def _graphon_from_meta(meta: dict):
    g = meta["graphon"]
    return make_standard_graphon(g["kind"], **g["params"])


def _cmd_synth(args) -> int:
    params = {"rho": args.rho}
    if args.setup in ("rand", "cos"):
        params.update({"K": args.K, "L": args.L})
    if args.setup == "rand":
        params["seed"] = args.seed
    graphon = make_standard_graphon(args.setup, **params)
    noise = _noise_from_args(args)
    config = SynthConfig(
        n=args.n, m=args.m, graphon=graphon, noise=noise, seed=args.seed,
        with_second_copy=args.second_copy, missing_p=args.missing_p,
    )
    obs = synthesize(config)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    save_matrix(outdir / "H.csv", obs.H)
    save_matrix(outdir / "theta_star.csv", obs.theta_star)
    if obs.H_prime is not None:
        save_matrix(outdir / "H_prime.csv", obs.H_prime)
    if obs.mask is not None:
        save_matrix(outdir / "mask.csv", obs.mask)
    U, V = obs.latents
    dump_json(outdir / "latents.json", {"U": U, "V": V})
    dump_json(
        outdir / "meta.json",
        {
            "n": args.n,
            "m": args.m,
            "noise_model": noise.to_dict(),
            "rho": args.rho,
            "seed": args.seed,
            "missing_p": args.missing_p,
            "with_second_copy": bool(args.second_copy),
            "graphon": {"kind": args.setup, "params": params},
        },
    )
    print(f"wrote observation set to {outdir}")
    return 0


def _cmd_fit(args) -> int:
    H = load_matrix(args.input)
    cfg = FitConfig(
        K=args.K, L=args.L, n0=args.n0, m0=args.m0, init=args.init,
        restarts=args.restarts, max_iters=args.max_iters,
        tol_gamma=args.tol, seed=args.seed,
    )
    cfg.validate_for(*H.shape)
    report = lloyd_fit(H, cfg)
    dump_json(args.output, report_to_dict(report))
    print(
        f"fit K={args.K} L={args.L}: cost {report.final_cost:.6g} "
        f"after {report.iterations} iterations -> {args.output}"
    )
    return 0


def _cmd_ewa(args) -> int:
    H = load_matrix(args.input)
    H_prime = load_matrix(args.input_prime)
    n, m = H.shape
    if args.grid == "default":
        grid = default_grid(n, m)
    else:
        grid = HyperGrid(tuple(tuple(e) for e in load_json(args.grid)["entries"]))
    grid.validate_for(n, m)
    if args.beta == "auto":
        if args.noise is None:
            raise ValueError("--beta auto needs --noise (and --noise-param)")
        beta = temperature(_noise_from_args(args))
    else:
        beta = float(args.beta)
        if beta <= 0:
            raise ValueError("beta must be positive")
    reports = fit_grid(H, grid, seed=args.seed)
    entries = list(grid)
    residuals = np.empty(len(entries))
    for i, entry in enumerate(entries):
        diff = H_prime - induced_mean(reports[entry].model)
        residuals[i] = np.einsum("ij,ij->", diff, diff)
    weights = ewa_weights(residuals, beta)
    aggregate = np.zeros((n, m))
    for w, entry in zip(weights, entries):
        if w > 1e-15:
            aggregate += w * induced_mean(reports[entry].model)
    out = Path(args.output)
    agg_path = out.with_name(out.stem + "_aggregate.csv")
    save_matrix(agg_path, aggregate)
    dump_json(
        out,
        {
            "beta": beta,
            "grid": [list(e) for e in entries],
            "weights": weights,
            "aggregate_path": str(agg_path),
        },
    )
    print(f"aggregated {len(entries)} fits (beta={beta:.6g}) -> {out}")
    return 0


def _cmd_eval(args) -> int:
    model = model_from_dict(load_json(args.model))
    theta_star = load_matrix(args.truth)
    theta_hat = induced_mean(model)
    metrics = args.metrics.split(",")
    out = {}
    meta = load_json(args.meta) if args.meta else None
    if "mse" in metrics:
        out["mse_theta"] = mse_theta(theta_hat, theta_star)
    if "delta" in metrics:
        if meta is None or args.latents is None:
            raise ValueError("--metrics delta needs --meta and --latents")
        lat = load_json(args.latents)
        graphon = _graphon_from_meta(meta)
        out["delta_tilde"] = delta_tilde(
            theta_hat, graphon, np.asarray(lat["U"]), np.asarray(lat["V"])
        )
    if "oracle" in metrics:
        if meta is None or args.latents is None or args.input is None:
            raise ValueError("--metrics oracle needs --meta, --latents and --input")
        lat = load_json(args.latents)
        graphon = _graphon_from_meta(meta)
        if graphon.family != "piecewise_constant":
            raise ValueError("oracle metric needs a piecewise-constant truth")
        r, c = true_assignments(
            graphon, np.asarray(lat["U"]), np.asarray(lat["V"])
        )
        oracle = oracle_fit(
            load_matrix(args.input),
            AssignmentMatrix(theta_star.shape[0], graphon.K, r),
            AssignmentMatrix(theta_star.shape[1], graphon.L, c),
        )
        out["oracle_mse"] = mse_theta(induced_mean(oracle), theta_star)
    if "rate" in metrics:
        if meta is None:
            raise ValueError("--metrics rate needs --meta")
        noise = NoiseModel.from_dict(meta["noise_model"])
        out["rate_bound"] = rate_bound(
            noise, meta["rho"], model.n, model.m, model.K, model.L
        )
    dump_json(args.output, out)
    print(f"wrote metrics {sorted(out)} -> {args.output}")
    return 0


def _cmd_experiment(args) -> int:
    spec_dict = load_json(args.config)
    if args.reps is not None:
        spec_dict["reps"] = args.reps
    if args.seed is not None:
        spec_dict["seed"] = args.seed
    if args.name is not None:
        spec_dict["name"] = args.name
    spec = ExperimentSpec.from_dict(spec_dict)
    result = run_experiment(spec)
    paths = emit_outputs(result, args.outdir, formats=args.formats.split(","))
    for kind, path in sorted(paths.items()):
        print(f"{kind}: {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphon-lab",
        description="simulate, fit, aggregate and evaluate bipartite block models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic observation set")
    p.add_argument("--setup", choices=("rand", "cos", "hoelder"), default="rand")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--K", type=int, default=4)
    p.add_argument("--L", type=int, default=4)
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--noise", choices=("bernoulli", "binomial", "scaled_poisson", "gaussian"), default="bernoulli")
    p.add_argument("--noise-param", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--second-copy", action="store_true")
    p.add_argument("--missing-p", type=float, default=None)
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("fit", help="fit one block model")
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--n0", type=int, default=0)
    p.add_argument("--m0", type=int, default=0)
    p.add_argument("--init", choices=("spectral", "random"), default="spectral")
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--max-iters", type=int, default=40)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("ewa", help="aggregate fits over a hyperparameter grid")
    p.add_argument("--grid", default="default", help="'default' or a grid JSON file")
    p.add_argument("--beta", default="auto", help="'auto' (from --noise) or a value")
    p.add_argument("--noise", choices=("bernoulli", "binomial", "gaussian"), default=None)
    p.add_argument("--noise-param", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--input", required=True)
    p.add_argument("--input-prime", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_ewa)

    p = sub.add_parser("eval", help="error metrics for a fitted model")
    p.add_argument("--model", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--latents", default=None)
    p.add_argument("--meta", default=None, help="meta.json (for delta/oracle/rate)")
    p.add_argument("--input", default=None, help="H.csv (for the oracle metric)")
    p.add_argument("--metrics", default="mse")
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("experiment", help="run a full experiment spec")
    p.add_argument("--config", required=True)
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--name", default=None)
    p.add_argument("--outdir", default=".")
    p.add_argument("--formats", default="csv,json,svg")
    p.set_defaults(func=_cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
