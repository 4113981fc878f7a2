"""Command-line entry point: ``dynspec {period,eigen,reproduce,check}``.

Exit codes: 0 success, 1 an acceptance predicate failed, 2 bad configuration.
Outputs land under ``$DYNSPEC_OUTPUT`` (default ``./dynspec_output``) unless
``--out`` is given.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import eigen as eg
from .envs import (
    CircleEnv,
    LifeGameEnv,
    LinearSystemEnv,
    NoiseModel,
    load_lifegame_fixture,
    load_matrix,
    random_unit_vectors,
    stream_rng,
)
from .errors import BudgetError, ConfigError, DomainError
from .harness import KINDS, _csv_text, _jsonable, load_config, run_experiment, score_spectrum
from .linalg import distinct_eigen_oracle
from .period import PeriodConfig, estimate_period
from .properties import run_property_suite

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def output_root() -> Path:
    return Path(os.environ.get("DYNSPEC_OUTPUT", "dynspec_output"))


def _out_path(arg: str | None, default_name: str) -> Path:
    p = Path(arg) if arg else output_root() / default_name
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _theta(d: int, theta_seed: int) -> np.ndarray:
    return random_unit_vectors(d, 1, stream_rng(theta_seed, "theta"))[0]


def cmd_period(args) -> int:
    noise_kind = args.noise or ("gaussian" if args.env == "lifegame" else "uniform")
    noise = NoiseModel(noise_kind, args.R if noise_kind != "none" else 0.0, args.seed)
    if args.env == "lifegame":
        grid, cells = load_lifegame_fixture(args.fixture)
        env = LifeGameEnv(grid, cells, noise)
        defaults = dict(rho=0.98, L_max=10, B=math.sqrt(5), r_margin=0.0)
    elif args.env == "circle":
        env = CircleEnv(noise=noise)
        defaults = dict(rho=0.3, L_max=8, B=2.0, r_margin=0.25)
    else:
        M = load_matrix(args.matrix_file)
        env = LinearSystemEnv(M, _theta(M.shape[0], args.theta_seed), noise)
        defaults = dict(rho=0.98, L_max=10, B=1.0, r_margin=0.0)
    cfg = PeriodConfig(
        rho=args.rho if args.rho is not None else defaults["rho"],
        delta=args.delta,
        L_max=args.lmax if args.lmax is not None else defaults["L_max"],
        d=env.dim,
        R=args.R,
        B=args.ball_radius if args.ball_radius is not None else defaults["B"],
        r_margin=args.r_margin if args.r_margin is not None else defaults["r_margin"],
        budget=args.budget,
    )
    est = estimate_period(env, cfg)
    out = _out_path(args.out, f"period_{args.env}_{args.seed}.json")
    out.write_text(json.dumps(_jsonable(est.to_dict()), indent=2, sort_keys=True) + "\n")
    rows = est.spectrum_rows()
    header = list(rows[0]) if rows else ["dimension", "beta", "ell", "s", "q", "value", "hit"]
    out.with_name(out.stem + "_spectrum.csv").write_text(
        _csv_text(header, [[r[k] for k in header] for r in rows])
    )
    print(f"beta = {est.beta}  (T_p = {est.T_p}, eps = {est.eps:.6g}, pulls = {est.total_pulls})")
    return EXIT_OK


def cmd_eigen(args) -> int:
    M = load_matrix(args.matrix_file)
    d = M.shape[0]
    theta = _theta(d, args.theta_seed)
    N = args.N or args.c_sim * eg.min_effective_N(args.L, d, args.Delta, args.ball_radius, args.kappa)
    env = LinearSystemEnv(M, theta, NoiseModel(args.noise, args.R if args.noise != "none" else 0.0, args.seed))
    out = _out_path(args.out, f"eigen_{args.seed}_c{args.c_sim}.json")
    if args.reconstruct_r is not None:
        cfg = eg.EigenConfig(N=N, L=args.L, d=d, delta=args.delta, R=args.R, Delta=args.Delta,
                             kappa=args.kappa, B=args.ball_radius, seed=args.seed, unsafe=args.unsafe)
        lam = eg.reconstruct_unit_eigenvalues(env, cfg, args.reconstruct_r)
        refs = distinct_eigen_oracle(M, theta, 1, 1.0)
        score = score_spectrum(lam, refs)
        out.write_text(json.dumps(_jsonable({"N": N, "eigenvalues": list(lam), "references": refs,
                                             "max_error": score["max_error"]}), indent=2, sort_keys=True) + "\n")
        print("recovered:", ", ".join(f"{z.real:+.4f}{z.imag:+.4f}i" for z in lam))
        return EXIT_OK
    cfg = eg.EigenConfig(N=N, L=args.L, d=d, delta=args.delta, R=args.R, Delta=args.Delta,
                         kappa=args.kappa, B=args.ball_radius, seed=args.seed, unsafe=args.unsafe)
    est = eg.estimate_eigen_map(env, cfg)
    refs = distinct_eigen_oracle(M, theta, d, 1.0)
    score = score_spectrum(est.spectrum, refs)
    body = {**est.to_dict(), "N": N, "references": refs, "max_error": score["max_error"]}
    out.write_text(json.dumps(_jsonable(body), indent=2, sort_keys=True) + "\n")
    out.with_name(out.stem + "_errors.csv").write_text(
        _csv_text(["c_sim", "eigenvalue_error"], [[args.c_sim, repr(score["max_error"])]])
    )
    print("spectrum:", ", ".join(f"{z.real:+.4f}{z.imag:+.4f}i" for z in est.spectrum))
    print(f"gamma = {est.gamma_used:.5g}, N = {N}, pulls = {est.pulls_used}, max error = {score['max_error']:.4g}")
    return EXIT_OK


def cmd_reproduce(args) -> int:
    seeds = tuple(args.seeds) if args.seeds else None
    outdir = args.out or str(output_root() / args.experiment)
    cfg = load_config(args.experiment, args.config, seeds=seeds, output_dir=outdir, workers=args.workers)
    rep = run_experiment(cfg)
    print(json.dumps(_jsonable(rep.aggregate), indent=2, sort_keys=True))
    print(f"{cfg.kind}: {'PASS' if rep.passed else 'FAIL'}  (report in {outdir})")
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_check(args) -> int:
    results = run_property_suite()
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dynspec", description="Period and eigenvalue estimation from bandit rewards")
    sub = p.add_subparsers(dest="command", required=True)

    pp = sub.add_parser("period", help="estimate an aliquot nearly period")
    pp.add_argument("--env", choices=["lifegame", "circle", "linear"], default="lifegame")
    pp.add_argument("--seed", type=int, default=1234)
    pp.add_argument("--rho", type=float)
    pp.add_argument("--delta", type=float, default=0.2)
    pp.add_argument("--lmax", type=int)
    pp.add_argument("--r-margin", type=float)
    pp.add_argument("--budget", type=int)
    pp.add_argument("--R", type=float, default=0.3)
    pp.add_argument("--noise", choices=["gaussian", "uniform", "none"])
    pp.add_argument("--ball-radius", type=float)
    pp.add_argument("--matrix-file", help="matrix for --env linear")
    pp.add_argument("--theta-seed", type=int, default=1234)
    pp.add_argument("--fixture", help="LifeGame grid file")
    pp.add_argument("--out")
    pp.set_defaults(func=cmd_period)

    pe = sub.add_parser("eigen", help="estimate unit-circle eigenvalues of a hidden linear system")
    pe.add_argument("--matrix-file")
    pe.add_argument("--theta-seed", type=int, default=1234)
    pe.add_argument("--L", type=int, default=24)
    pe.add_argument("--c-sim", type=int, default=1)
    pe.add_argument("--N", type=int, help="effective sample size (overrides --c-sim)")
    pe.add_argument("--delta", type=float, default=0.2)
    pe.add_argument("--R", type=float, default=0.3)
    pe.add_argument("--Delta", type=float, default=0.1)
    pe.add_argument("--kappa", type=float, default=6.0)
    pe.add_argument("--ball-radius", type=float, default=1.0)
    pe.add_argument("--noise", choices=["gaussian", "uniform", "none"], default="uniform")
    pe.add_argument("--seed", type=int, default=1234)
    pe.add_argument("--reconstruct-r", type=int)
    pe.add_argument("--unsafe", action="store_true", help="allow N below the required size")
    pe.add_argument("--out")
    pe.set_defaults(func=cmd_eigen)

    pr = sub.add_parser("reproduce", help="run a full experiment and its pass/fail predicate")
    pr.add_argument("--experiment", choices=KINDS, required=True)
    pr.add_argument("--config", help="INI settings file (default: packaged defaults)")
    pr.add_argument("--seeds", type=int, nargs="+")
    pr.add_argument("--workers", type=int)
    pr.add_argument("--out")
    pr.set_defaults(func=cmd_reproduce)

    pc = sub.add_parser("check", help="run numerical self-checks")
    pc.add_argument("--suite", choices=["properties"], default="properties")
    pc.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DomainError, BudgetError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
