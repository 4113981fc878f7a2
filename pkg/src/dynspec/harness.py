"""Experiment orchestration: settings, per-seed runs, pass/fail predicates and reports.

Settings live in an INI file (``data/defaults.ini`` is the checked-in default).
Every run is a pure function of its settings and seed, so seeds can be farmed
out to a process pool and the joined report is byte-identical across reruns.
Timing goes to a separate file so it never perturbs ``report.json``.
"""
from __future__ import annotations

import configparser
import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from datetime import datetime, timezone
from importlib import resources
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
from .errors import ConfigError
from .linalg import distinct_eigen_oracle, match_eigenvalues
from .period import PeriodConfig, estimate_period, is_aliquot_nearly_period, required_samples
from .properties import run_property_suite

KINDS = ("period-lifegame", "period-circle", "eigen-permshrink", "eigen-rate", "property-suite")


@dataclass(frozen=True)
class LifegameSettings:
    rho: float = 0.98
    delta: float = 0.2
    L_max: int = 10
    R: float = 0.3
    noise: str = "gaussian"
    ball_radius: float = math.sqrt(5)
    r_margin: float = 0.0
    expected_beta: int = 8


@dataclass(frozen=True)
class CircleSettings:
    mu: float = 0.001
    alpha: float = math.pi
    L: int = 5
    rho: float = 0.3
    delta: float = 0.2
    L_max: int = 8
    R: float = 0.3
    noise: str = "uniform"
    ball_radius: float = 2.0
    r_margin: float = 0.25
    initial_radius: float = 1.0
    initial_angle: float = 0.0


@dataclass(frozen=True)
class EigenSettings:
    L: int = 24
    kappa: float = 6.0
    Delta: float = 0.1
    delta: float = 0.2
    R: float = 0.3
    noise: str = "uniform"
    ball_radius: float = 1.0
    c_sim: tuple = (1, 5, 10, 30)
    theta_seed: int = 1234
    tolerances: tuple = ((1, 0.03), (30, 0.005))
    matrix_file: str | None = None


@dataclass(frozen=True)
class RateSettings:
    matrix: tuple = ((0.0, -1.0, 0.0), (1.0, 0.0, 0.0), (0.0, 0.0, 0.5))
    L: int = 4
    kappa: float = 1.0
    Delta: float = 0.5
    delta: float = 0.2
    R: float = 0.3
    noise: str = "uniform"
    ball_radius: float = 1.0
    N_ladder: tuple = (65536, 262144, 1048576)
    theta_seed: int = 1234
    arm_seed: int = 1234
    seeds: tuple = tuple(range(1001, 1011))
    band: tuple = (1.5, 3.0)


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    seeds: tuple = (1234, 2345, 3456, 4567)
    output_dir: str | None = None
    workers: int = 1
    lifegame: LifegameSettings = field(default_factory=LifegameSettings)
    circle: CircleSettings = field(default_factory=CircleSettings)
    eigen: EigenSettings = field(default_factory=EigenSettings)
    rate: RateSettings = field(default_factory=RateSettings)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment {self.kind!r}; choose from {', '.join(KINDS)}")
        if self.workers < 1:
            raise ConfigError("workers must be positive")

    def snapshot(self) -> dict:
        out = {"kind": self.kind, "seeds": list(self.seeds)}
        section = {
            "period-lifegame": "lifegame",
            "period-circle": "circle",
            "eigen-permshrink": "eigen",
            "eigen-rate": "rate",
        }.get(self.kind)
        if section:
            out[section] = _jsonable(asdict(getattr(self, section)))
        return out


# ---------- INI parsing ----------

def _parse_value(raw: str, default):
    raw = raw.strip()
    if isinstance(default, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if isinstance(default, tuple):
        if raw == "":
            return ()
        if ";" in raw:
            return tuple(tuple(float(v) for v in row.split()) for row in raw.split(";"))
        if ":" in raw:
            return tuple((int(k), float(v)) for k, v in (tok.split(":") for tok in raw.split()))
        toks = raw.split()
        sample = default[0] if default else 0
        return tuple(int(t) if isinstance(sample, int) else float(t) for t in toks)
    if default is None:
        return raw or None
    return raw


def _section(cls, items: dict, name: str):
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    base = cls()
    for key, raw in items.items():
        if key not in known:
            raise ConfigError(f"[{name}] unknown key {key!r}")
        try:
            kwargs[key] = _parse_value(raw, getattr(base, key))
        except ValueError as e:
            raise ConfigError(f"[{name}] {key}: {e}") from e
    return replace(base, **kwargs)


def defaults_path() -> Path:
    return Path(str(resources.files("dynspec") / "data" / "defaults.ini"))


def load_config(kind: str, path: str | Path | None = None, **overrides) -> ExperimentConfig:
    """Read settings for ``kind`` from an INI file (the packaged defaults when ``path`` is None)."""
    parser = configparser.ConfigParser(inline_comment_prefixes=None)
    parser.optionxform = str
    p = Path(path) if path is not None else defaults_path()
    if not p.is_file():
        raise ConfigError(f"config file {p} not found")
    parser.read(p)
    run = dict(parser["run"]) if parser.has_section("run") else {}
    kwargs = {"kind": kind}
    if "seeds" in run:
        kwargs["seeds"] = tuple(int(s) for s in run["seeds"].split())
    if "workers" in run:
        kwargs["workers"] = int(run["workers"])
    for name, cls in (("lifegame", LifegameSettings), ("circle", CircleSettings),
                      ("eigen", EigenSettings), ("rate", RateSettings)):
        items = dict(parser[name]) if parser.has_section(name) else {}
        kwargs[name] = _section(cls, items, name)
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**kwargs)


# ---------- report ----------

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (complex, np.complexfloating)):
        return [float(np.real(x)), float(np.imag(x))]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


@dataclass
class RunReport:
    kind: str
    config: dict
    results: list
    aggregate: dict
    passed: bool
    pulls: int
    wall_clock: float = 0.0
    timestamp: str = ""
    tables: dict = field(default_factory=dict)

    def to_json(self) -> str:
        body = {
            "kind": self.kind,
            "config": self.config,
            "results": self.results,
            "aggregate": self.aggregate,
            "passed": self.passed,
            "pulls": self.pulls,
        }
        return json.dumps(_jsonable(body), indent=2, sort_keys=True) + "\n"

    def write(self, outdir: str | Path) -> Path:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(self.to_json())
        (out / "timing.json").write_text(
            json.dumps({"timestamp": self.timestamp, "wall_clock_s": self.wall_clock}, indent=2) + "\n"
        )
        for name, text in self.tables.items():
            (out / name).write_text(text)
        return out


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# ---------- per-seed tasks (top-level so they pickle) ----------

def _noise(kind: str, R: float, seed: int) -> NoiseModel:
    return NoiseModel(kind, R if kind != "none" else 0.0, seed)


def run_lifegame_seed(s: LifegameSettings, seed: int) -> dict:
    grid, cells = load_lifegame_fixture()
    env = LifeGameEnv(grid, cells, _noise(s.noise, s.R, seed))
    cfg = PeriodConfig(rho=s.rho, delta=s.delta, L_max=s.L_max, d=len(cells), R=s.R,
                       B=s.ball_radius, r_margin=s.r_margin)
    est = estimate_period(env, cfg)
    return {"seed": seed, **est.to_dict(), "spectrum": est.spectrum_rows()}


def run_circle_seed(s: CircleSettings, seed: int) -> dict:
    env = CircleEnv(mu=s.mu, alpha=s.alpha, L=s.L, radius=s.initial_radius, angle=s.initial_angle,
                    noise=_noise(s.noise, s.R, seed))
    cfg = PeriodConfig(rho=s.rho, delta=s.delta, L_max=s.L_max, d=2, R=s.R,
                       B=s.ball_radius, r_margin=s.r_margin)
    traj = env.peek_trajectory(2 * required_samples(cfg))
    est = estimate_period(env, cfg)
    anp = is_aliquot_nearly_period(traj, est.beta, s.rho, math.sqrt(2), s.mu, s.L)
    return {"seed": seed, **est.to_dict(), "anp": bool(anp), "spectrum": est.spectrum_rows()}


def _eigen_references(M: np.ndarray, theta: np.ndarray, d: int) -> list[complex]:
    return distinct_eigen_oracle(M, theta, d, 1.0)


def score_spectrum(spectrum, references) -> dict:
    """Match nonzero estimates to references; unmatched estimates must be exactly zero."""
    nz = [complex(z) for z in spectrum if z != 0]
    matched = match_eigenvalues(nz, references)
    used = sum(m is not None for m in matched)
    errs = [abs(m - r) if m is not None else math.inf for m, r in zip(matched, references)]
    return {
        "matched": matched,
        "errors": errs,
        "max_error": max(errs) if errs else 0.0,
        "extras_zero": len(nz) == used,
    }


def run_eigen_seed(s: EigenSettings, seed: int, c_sim: int) -> dict:
    M = load_matrix(s.matrix_file)
    d = M.shape[0]
    theta = s.ball_radius * random_unit_vectors(d, 1, stream_rng(s.theta_seed, "theta"))[0]
    N = c_sim * eg.min_effective_N(s.L, d, s.Delta, s.ball_radius, s.kappa)
    cfg = eg.EigenConfig(N=N, L=s.L, d=d, delta=s.delta, R=s.R, Delta=s.Delta, kappa=s.kappa,
                         B=s.ball_radius, seed=seed)
    env = LinearSystemEnv(M, theta, _noise(s.noise, s.R, seed))
    est = eg.estimate_eigen_map(env, cfg)
    refs = _eigen_references(M, theta, d)
    score = score_spectrum(est.spectrum, refs)
    target = eg.target_matrix(M, theta, est.arms)
    return {
        "seed": seed,
        "c_sim": c_sim,
        "N": N,
        "gamma": est.gamma_used,
        "pulls": est.pulls_used,
        "spectrum": list(est.spectrum),
        "singular_values_A0": list(est.singular_values),
        "references": refs,
        "target_error": float(np.linalg.norm(est.output_matrix - target, 2)),
        **score,
    }


def run_rate_seed(s: RateSettings, seed: int, N: int) -> dict:
    """One noise realization on the fixed instance ``(M, theta, arms)``; ``seed`` drives the noise only."""
    M = np.array(s.matrix, dtype=float)
    d = M.shape[0]
    theta = s.ball_radius * random_unit_vectors(d, 1, stream_rng(s.theta_seed, "theta"))[0]
    arms = eg.draw_arms(d, stream_rng(s.arm_seed, "arms"))
    cfg = eg.EigenConfig(N=N, L=s.L, d=d, delta=s.delta, R=s.R, Delta=s.Delta, kappa=s.kappa,
                         B=s.ball_radius, seed=seed)
    env = LinearSystemEnv(M, theta, _noise(s.noise, s.R, seed))
    est = eg.estimate_eigen_map(env, cfg, arms=arms)
    target = eg.target_matrix(M, theta, arms)
    return {
        "seed": seed,
        "N": N,
        "gamma": est.gamma_used,
        "rank_kept": int(np.sum(est.singular_values >= est.gamma_used)),
        "error": float(np.linalg.norm(est.output_matrix - target, 2)),
    }


def _star(args):
    fn, *rest = args
    return fn(*rest)


def _map(tasks: list, workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [_star(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_star, tasks))


# ---------- experiments ----------

def _period_report(cfg: ExperimentConfig, results: list, expected: int, circle: bool) -> RunReport:
    ok = [r["beta"] == expected and (r.get("anp", True)) for r in results]
    rows = [
        [r["seed"], row["dimension"], row["beta"], row["ell"], row["s"], row["q"], repr(row["value"]), row["hit"]]
        for r in results
        for row in r["spectrum"]
    ]
    slim = [{k: v for k, v in r.items() if k != "spectrum"} for r in results]
    agg = {"expected_beta": expected, "successes": int(sum(ok)), "runs": len(results)}
    if circle:
        agg["anp_confirmed"] = int(sum(r["anp"] for r in results))
    return RunReport(
        kind=cfg.kind,
        config=cfg.snapshot(),
        results=slim,
        aggregate=agg,
        passed=bool(results) and all(ok),
        pulls=int(sum(r["total_pulls"] for r in results)),
        tables={
            "results.csv": _csv_text(["seed", "beta", "total_pulls"] + (["anp"] if circle else []),
                                     [[r["seed"], r["beta"], r["total_pulls"]] + ([int(r["anp"])] if circle else [])
                                      for r in results]),
            "spectrum.csv": _csv_text(["seed", "dimension", "beta", "ell", "s", "q", "abs_R", "hit"], rows),
        },
    )


def _eigen_report(cfg: ExperimentConfig, results: list) -> RunReport:
    s = cfg.eigen
    agg = {"per_c_sim": {}}
    passed = True
    for c in s.c_sim:
        rs = [r for r in results if r["c_sim"] == c]
        entry = {
            "median_max_error": float(np.median([r["max_error"] for r in rs])) if rs else None,
            "mean_target_error": float(np.mean([r["target_error"] for r in rs])) if rs else None,
        }
        tol = dict(s.tolerances).get(c)
        if tol is not None:
            good = sum(r["max_error"] <= tol and r["extras_zero"] for r in rs)
            entry.update(tolerance=tol, within=int(good), runs=len(rs), passed=good * 2 > len(rs))
            passed &= entry["passed"]
        agg["per_c_sim"][str(c)] = entry
    agg["references"] = results[0]["references"] if results else []
    rep = RunReport(
        kind=cfg.kind,
        config=cfg.snapshot(),
        results=results,
        aggregate=agg,
        passed=bool(passed and results),
        pulls=int(sum(r["pulls"] for r in results)),
    )
    rep.tables = {
        "eigen_table.csv": emit_table(rep, "csv"),
        "eigen_table.md": emit_table(rep, "markdown"),
        "eigen_errors.csv": _csv_text(
            ["c_sim", "seed", "eigenvalue_error", "target_error"],
            [[r["c_sim"], r["seed"], repr(r["max_error"]), repr(r["target_error"])] for r in results],
        ),
    }
    return rep


def _rate_report(cfg: ExperimentConfig, results: list) -> RunReport:
    s = cfg.rate
    means = [float(np.mean([r["error"] for r in results if r["N"] == N])) for N in s.N_ladder]
    factors = [a / b for a, b in zip(means, means[1:])]
    lo, hi = s.band
    ok = [lo <= f <= hi for f in factors]
    return RunReport(
        kind=cfg.kind,
        config=cfg.snapshot(),
        results=results,
        aggregate={"N": list(s.N_ladder), "mean_error": means, "factors": factors, "band": list(s.band)},
        passed=bool(factors) and all(ok),
        pulls=int(sum(N + 2 * N * len(s.matrix) ** 2 for N in s.N_ladder) * len(s.seeds)),
        tables={"rate.csv": _csv_text(["N", "mean_error"], [[N, repr(m)] for N, m in zip(s.N_ladder, means)])},
    )


def run_experiment(cfg: ExperimentConfig) -> RunReport:
    """Run every seed of ``cfg``, assemble the report and write it when ``output_dir`` is set."""
    t0 = time.perf_counter()
    if cfg.kind == "period-lifegame":
        res = _map([(run_lifegame_seed, cfg.lifegame, s) for s in cfg.seeds], cfg.workers)
        rep = _period_report(cfg, res, cfg.lifegame.expected_beta, circle=False)
    elif cfg.kind == "period-circle":
        res = _map([(run_circle_seed, cfg.circle, s) for s in cfg.seeds], cfg.workers)
        rep = _period_report(cfg, res, cfg.circle.L, circle=True)
    elif cfg.kind == "eigen-permshrink":
        tasks = [(run_eigen_seed, cfg.eigen, s, c) for c in cfg.eigen.c_sim for s in cfg.seeds]
        rep = _eigen_report(cfg, _map(tasks, cfg.workers))
    elif cfg.kind == "eigen-rate":
        tasks = [(run_rate_seed, cfg.rate, s, N) for N in cfg.rate.N_ladder for s in cfg.rate.seeds]
        rep = _rate_report(cfg, _map(tasks, cfg.workers))
    else:
        props = run_property_suite()
        rep = RunReport(
            kind=cfg.kind,
            config=cfg.snapshot(),
            results=[{"name": p.name, "passed": bool(p.passed), "detail": p.detail} for p in props],
            aggregate={"passed": int(sum(bool(p.passed) for p in props)), "total": len(props)},
            passed=all(bool(p.passed) for p in props),
            pulls=0,
        )
    rep.wall_clock = time.perf_counter() - t0
    rep.timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    if cfg.output_dir:
        rep.write(cfg.output_dir)
    return rep


# ---------- tables ----------

def _fmt(z) -> str:
    if z is None:
        return "nan"
    z = complex(z)
    return f"{z.real:.6f}{z.imag:+.6f}j"


def emit_table(report: RunReport, format: str = "csv") -> str:
    """Eigenvalue table: one row per (C_sim, seed), one column per reference eigenvalue."""
    if report.kind != "eigen-permshrink":
        raise ConfigError(f"no eigenvalue table for experiment {report.kind!r}")
    refs = report.aggregate.get("references", [])
    header = ["c_sim", "seed"] + [f"lambda_{i + 1}" for i in range(len(refs))] + ["max_error"]
    rows = [
        [str(r["c_sim"]), str(r["seed"])] + [_fmt(m) for m in r["matched"]] + [f"{r['max_error']:.6f}"]
        for r in report.results
    ]
    if format == "csv":
        return _csv_text(header, rows)
    if format == "markdown":
        lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
        lines += ["| " + " | ".join(row) + " |" for row in rows]
        return "\n".join(lines) + "\n"
    raise ConfigError(f"unknown table format {format!r}")
