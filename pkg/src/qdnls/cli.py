"""Command line front end: ``qdnls <experiment> --config <path> [--out DIR] [--seed N]``.

Configs are flat ``key = value`` files; ``#`` starts a comment. Coefficients
are exact rationals written as integers or ``p/q``. Lists are comma
separated. Each run writes its tables, a ``manifest.json`` echoing the
config, versions and seed, and plot-data series where a sweep makes sense.

Exit codes: 0 success, 2 configuration error, 3 non-convergence,
4 blow-up guard, 5 cost guard.
"""

from __future__ import annotations

import argparse
import json
import math
import platform
import sys
import time
from dataclasses import dataclass, fields
from fractions import Fraction
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .dynamics import (
    energy,
    mass,
    picard_solve,
    residual_series,
    small_data,
    step_evolve,
)
from .errors import BlowUpError, ConfigError, CostGuardError, IrrationalRatioError, NonConvergenceError
from .estimates import bilinear_ratio, fit_delta, strichartz_ratio, trilinear_J
from .norms import vp_variation_exhaustive, vp_variation_norm, ys_norm
from .projections import Trajectory, is_dyadic
from .resonance import classify, common_sigma, scan_min_ratio, to_rational
from .results import ResultTable, emit_plot_data, fit_loglog_slope, format_value
from .spectral import FieldTriple, FrequencyLattice, write_snapshot

__all__ = ["ExperimentConfig", "parse_config", "load_config", "run", "main", "EXPERIMENTS"]

EXIT_OK, EXIT_CONFIG, EXIT_NONCONV, EXIT_BLOWUP, EXIT_COST = 0, 2, 3, 4, 5
EXPERIMENTS = ("simulate", "picard", "resonance-scan", "strichartz", "bilinear", "trilinear", "vnorm-selftest")


def _ints(text: str) -> tuple:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _rationals(text: str) -> tuple:
    return tuple(to_rational(x) for x in text.split(",") if x.strip())


def _real(text: str) -> float:
    """Float, or an exact ``p/q`` turned into a float."""
    return float(Fraction(text.strip())) if "/" in text else float(text)


def _pos_or_inf(text: str) -> float:
    return math.inf if text.strip().lower() in ("inf", "infinity") else _real(text)


@dataclass
class ExperimentConfig:
    experiment: str = "simulate"
    d: int = 2
    K: tuple = (16,)
    alpha: Fraction = Fraction(1)
    beta: Fraction = Fraction(2)
    gamma: Fraction = Fraction(3)
    T: float | None = None  # None: 1 for dynamics, min(1, period) for trilinear
    dt: float = 1e-3
    tol: float = 1e-10
    trials: int = 20
    seed: int = 0
    out: str = ""
    # data for simulate / picard
    data: str = "small"
    size: float = 1e-2
    width: float = 2.0
    max_iter: int = 50
    guard: float = 1e6
    # estimate experiments
    N: tuple = (4, 8, 16)
    p: float = 4.0
    sigma: Fraction = Fraction(1)
    H: tuple = (16, 32, 64)
    L: int = 4
    case: str = "HHL"
    sigma1: Fraction = Fraction(1)
    sigma2: Fraction = Fraction(1)
    sigmas: tuple = (Fraction(1), Fraction(-2), Fraction(-3))
    N3: tuple = (8, 8, 2)
    C_split: float | None = None
    mode: str = "nonresonant"
    J_data: str = "random"
    n_t: int = 8
    path_len: int = 12

    @property
    def coeffs(self) -> tuple:
        return (self.alpha, self.beta, self.gamma)

    def echo(self) -> dict:
        return {f.name: format_value(getattr(self, f.name)) for f in fields(self)}


_PARSERS = {
    "experiment": str,
    "d": int,
    "K": _ints,
    "alpha": to_rational,
    "beta": to_rational,
    "gamma": to_rational,
    "T": _real,
    "dt": _real,
    "tol": _real,
    "trials": int,
    "seed": int,
    "out": str,
    "data": str,
    "size": _real,
    "width": _real,
    "max_iter": int,
    "guard": _real,
    "N": _ints,
    "p": _pos_or_inf,
    "sigma": to_rational,
    "H": _ints,
    "L": int,
    "case": str,
    "sigma1": to_rational,
    "sigma2": to_rational,
    "sigmas": _rationals,
    "N3": _ints,
    "C_split": _real,
    "mode": str,
    "J_data": str,
    "n_t": int,
    "path_len": int,
}


def parse_config(text: str, experiment: str | None = None) -> ExperimentConfig:
    """Parse flat ``key = value`` text into a validated config."""
    cfg = ExperimentConfig()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            setattr(cfg, key, _PARSERS[key](value))
        except TypeError as exc:
            raise ConfigError(f"line {lineno}: {key}: {exc}") from exc
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"line {lineno}: cannot parse {key} = {value!r}") from exc
    if experiment is not None:
        cfg.experiment = experiment
    validate(cfg)
    return cfg


def load_config(path, experiment: str | None = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, experiment)


def _need(cond: bool, msg: str):
    if not cond:
        raise ConfigError(msg)


def _need_dyadic(values, name):
    for v in values:
        _need(is_dyadic(v), f"{name} = {v} is not dyadic")


def validate(cfg: ExperimentConfig) -> None:
    """Check every precondition of the target operation before dispatch."""
    e = cfg.experiment
    _need(e in EXPERIMENTS, f"unknown experiment {e!r}; choose from {', '.join(EXPERIMENTS)}")
    _need(1 <= cfg.d <= 4, "d must be in 1..4")
    _need(len(cfg.K) >= 1 and all(k >= 1 for k in cfg.K), "K must be positive")
    _need(cfg.trials >= 1, "trials must be >= 1")
    if e in ("simulate", "picard"):
        _need(len(cfg.K) == 1, "simulate/picard take a single K")
        _need(all(c != 0 for c in cfg.coeffs), "coefficients must be nonzero")
        if cfg.T is None:
            cfg.T = 1.0
        _need(cfg.T > 0 and cfg.dt > 0, "T and dt must be positive")
        _need(cfg.data in ("small", "zero"), "data must be 'small' or 'zero'")
        _need(cfg.size >= 0, "size must be nonnegative")
        _need(cfg.tol > 0, "tol must be positive")
        if e == "picard":
            _need(math.ceil(cfg.T / cfg.dt - 1e-9) >= 4, "picard needs at least 4 steps")
    elif e == "resonance-scan":
        _need(all(c != 0 for c in cfg.coeffs), "coefficients must be nonzero")
    elif e == "strichartz":
        _need_dyadic(cfg.N, "N")
        _need(cfg.p >= 1 and not math.isinf(cfg.p), "p must be finite and >= 1")
        _need(cfg.sigma != 0, "sigma must be nonzero")
    elif e == "bilinear":
        _need_dyadic(cfg.H + (cfg.L,), "H/L")
        _need(cfg.case in ("HL", "HHL"), "case must be HL or HHL")
        _need(cfg.sigma1 != 0 and cfg.sigma2 != 0, "sigma1, sigma2 must be nonzero")
        if cfg.case == "HHL":
            _need(all(h >= 4 * cfg.L for h in cfg.H), "HHL needs H >= 4L")
            _need(cfg.sigma1 + cfg.sigma2 != 0, "HHL needs sigma1 + sigma2 != 0")
        else:
            _need(all(h >= cfg.L for h in cfg.H), "HL needs H >= L")
    elif e == "trilinear":
        _need(len(cfg.N3) == 3, "N3 must list three dyadic frequencies")
        _need_dyadic(cfg.N3, "N3")
        _need(max(cfg.N3) >= 2, "trilinear needs N_max >= 2")
        _need(len(cfg.sigmas) == 3 and all(s != 0 for s in cfg.sigmas), "sigmas must be three nonzero rationals")
        _need(cfg.mode in ("nonresonant", "resonant-demo"), "mode must be nonresonant or resonant-demo")
        _need(cfg.J_data in ("random", "witness"), "J_data must be random or witness")
        s1, s2, s3 = cfg.sigmas
        if cfg.T is not None:
            period = 2 * math.pi / float(common_sigma(cfg.sigmas))
            _need(0 < cfg.T <= period, f"T must lie in (0, {period:.6g}], the common period")
        if cfg.mode == "nonresonant":
            _need(s1 * s2 * s3 * (1 / s1 + 1 / s2 + 1 / s3) > 0,
                  "resonant sigma triple; set mode = resonant-demo")
    elif e == "vnorm-selftest":
        _need(2 <= cfg.path_len <= 12, "path_len must be in 2..12")


# --- experiments ------------------------------------------------------------


def _initial_data(cfg, lat, rng) -> FieldTriple:
    if cfg.data == "zero" or cfg.size == 0:
        return FieldTriple.zeros(lat)
    return small_data(lat, rng, cfg.size, 1.0, cfg.width)


def _run_simulate(cfg, out: Path, info: dict) -> list:
    lat = FrequencyLattice(cfg.d, cfg.K[0])
    rng = np.random.default_rng(cfg.seed)
    data = _initial_data(cfg, lat, rng)
    sol = step_evolve(data, cfg.coeffs, cfg.T, cfg.dt, guard=cfg.guard)
    res = residual_series(sol, cfg.coeffs) if sol.n >= 5 else np.full(sol.n, np.nan)
    tab = ResultTable.for_params(("step", "t", "M", "H", "residual"), cfg.echo(), cfg.seed)
    for j in range(sol.n):
        st = sol.state_at(j)
        tab.add(j, float(sol.times[j]), mass(st), energy(st, cfg.coeffs), float(res[j]))
    tab.to_csv(out / "conservation.csv")
    final = sol.state_at(sol.n - 1)
    for name, f in zip("uvw", final):
        with open(out / f"final_{name}.snap", "wb") as fh:
            write_snapshot(f, fh)
    M, H = tab.column("M"), tab.column("H")
    info["mass_drift"] = abs(M[-1] - M[0]) / M[0] if M[0] else 0.0
    info["energy_drift"] = abs(H[-1] - H[0]) / abs(H[0]) if H[0] else 0.0
    return ["conservation.csv", "final_u.snap", "final_v.snap", "final_w.snap"]


def _picard_table(cfg, report) -> ResultTable:
    tab = ResultTable.for_params(("iterate", "difference", "ratio"), cfg.echo(), cfg.seed)
    for row in report.as_rows():
        tab.add(*row)
    return tab


def _run_picard(cfg, out: Path, info: dict) -> list:
    lat = FrequencyLattice(cfg.d, cfg.K[0])
    rng = np.random.default_rng(cfg.seed)
    data = _initial_data(cfg, lat, rng)
    try:
        sol, report = picard_solve(data, cfg.coeffs, cfg.T, cfg.tol, cfg.max_iter, dt=cfg.dt)
    except NonConvergenceError as exc:
        _picard_table(cfg, exc.report).to_csv(out / "picard.csv")
        info["report"] = {"reason": exc.report.reason, "iterates": exc.report.iterates}
        info["outputs"] = ["picard.csv"]
        raise
    _picard_table(cfg, report).to_csv(out / "picard.csv")
    info["report"] = {"iterates": report.iterates, "final_residual": report.final_residual,
                      "converged": report.converged}
    return ["picard.csv"]


def _run_resonance(cfg, out: Path, info: dict) -> list:
    tri = classify(*cfg.coeffs)
    info["classification"] = {"hh_nonresonant": tri.hh_nonresonant, "hl_nonresonant": tri.hl_nonresonant,
                              "same_sign": tri.same_sign}
    cols = ("sigma1", "sigma2", "sigma3", "K", "d", "min_ratio_num", "min_ratio_den", "witness")
    tab = ResultTable.for_params(cols, cfg.echo(), cfg.seed)
    for K in cfg.K:
        r = scan_min_ratio(cfg.coeffs, K, cfg.d)
        tab.add(*cfg.coeffs, K, cfg.d, r.min_ratio.numerator, r.min_ratio.denominator, r.witness)
    tab.to_csv(out / "resonance.csv")
    return ["resonance.csv"]


def _sup_table(cfg, xname, pairs) -> ResultTable:
    tab = ResultTable.for_params((xname, "sup_ratio"), cfg.echo(), cfg.seed)
    for x, y in pairs:
        tab.add(x, y)
    return tab


def _concat(tables) -> ResultTable:
    head = tables[0]
    rows = [r for t in tables for r in t.rows]
    return ResultTable(head.columns, rows, dict(head.provenance), {})


def _run_strichartz(cfg, out: Path, info: dict) -> list:
    tabs = []
    for N in cfg.N:
        t = strichartz_ratio(N, cfg.p, cfg.sigma, cfg.d, cfg.trials, cfg.seed, n_t=cfg.n_t)
        tabs.append(t)
    full = _concat(tabs)
    full.provenance = ResultTable.for_params((), cfg.echo(), cfg.seed).provenance
    full.to_csv(out / "strichartz.csv")
    sups = [(N, max(t.column("value"))) for N, t in zip(cfg.N, tabs)]
    summary = _sup_table(cfg, "N", sups)
    summary.to_csv(out / "strichartz_sup.csv")
    emit_plot_data(summary, "N", "sup_ratio", "log-log", out / "strichartz_loglog.dat")
    if len(sups) >= 2:
        info["slope"] = fit_loglog_slope(*zip(*sups))
        info["slope_limit"] = cfg.d / 4 - 0.5 + 0.15
    return ["strichartz.csv", "strichartz_sup.csv", "strichartz_loglog.dat"]


def _run_bilinear(cfg, out: Path, info: dict) -> list:
    tabs = [bilinear_ratio(H, cfg.L, cfg.case, cfg.sigma1, cfg.sigma2, cfg.d, cfg.trials, cfg.seed)
            for H in cfg.H]
    full = _concat(tabs)
    full.provenance = ResultTable.for_params((), cfg.echo(), cfg.seed).provenance
    full.to_csv(out / "bilinear.csv")
    sups = [(H, max(t.column("value"))) for H, t in zip(cfg.H, tabs)]
    summary = _sup_table(cfg, "H", sups)
    summary.to_csv(out / "bilinear_sup.csv")
    emit_plot_data(summary, "H", "sup_ratio", "log-log", out / "bilinear_loglog.dat")
    if len(tabs) >= 2:
        info["delta"] = fit_delta(tabs)
    return ["bilinear.csv", "bilinear_sup.csv", "bilinear_loglog.dat"]


def _run_trilinear(cfg, out: Path, info: dict) -> list:
    tab = trilinear_J(*cfg.N3, sigmas=cfg.sigmas, T=cfg.T, C_split=cfg.C_split, trials=cfg.trials,
                      seed=cfg.seed, d=cfg.d, mode=cfg.mode, data=cfg.J_data)
    tab.provenance = ResultTable.for_params((), cfg.echo(), cfg.seed).provenance
    tab.to_csv(out / "trilinear.csv")
    info["trilinear"] = {k: format_value(v) for k, v in tab.meta.items()}
    info["max_identity_error"] = max(tab.column("identity_error"))
    info["max_J1_over_norms"] = max(tab.column("J1_over_norms"))
    return ["trilinear.csv"]


def _run_vnorm(cfg, out: Path, info: dict) -> list:
    rng = np.random.default_rng(cfg.seed)
    cols = ("trial", "n", "dynamic_program", "exhaustive", "abs_diff")
    tab = ResultTable.for_params(cols, cfg.echo(), cfg.seed)
    for i in range(cfg.trials):
        n = int(rng.integers(2, cfg.path_len + 1))
        z = rng.standard_normal((2, n, 2))
        path = z[0] + 1j * z[1]
        a = vp_variation_norm(path, 2.0)
        b = vp_variation_exhaustive(path, 2.0)
        tab.add(i, n, a, b, abs(a - b))
    tab.to_csv(out / "vnorm.csv")
    lat = FrequencyLattice(min(cfg.d, 2), min(cfg.K[0], 8))
    phi = lat.random_field(rng, 1)
    traj = Trajectory.free(phi, float(cfg.sigma), 16, 0.05)
    info["y0_free"] = ys_norm(traj, float(cfg.sigma), 0.0)
    info["y0_datum"] = float(np.linalg.norm(phi.coeffs))
    info["max_abs_diff"] = max(tab.column("abs_diff"))
    return ["vnorm.csv"]


_DISPATCH = {
    "simulate": _run_simulate,
    "picard": _run_picard,
    "resonance-scan": _run_resonance,
    "strichartz": _run_strichartz,
    "bilinear": _run_bilinear,
    "trilinear": _run_trilinear,
    "vnorm-selftest": _run_vnorm,
}


def _manifest(cfg, status, code, outputs, info, started: float) -> dict:
    return {
        "experiment": cfg.experiment,
        "status": status,
        "exit_code": code,
        "seed": cfg.seed,
        "config": cfg.echo(),
        "outputs": outputs,
        "info": {k: (v if isinstance(v, (dict, list, str, int)) or v is None else format_value(v))
                 for k, v in info.items()},
        "versions": {"qdnls": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "started": time.strftime("%Y-%m-%dT%H:%M:%S", time.localtime(started)),
        "elapsed_s": round(time.time() - started, 3),
    }


def run(cfg: ExperimentConfig, out=None) -> int:
    """Run one experiment, write artifacts into ``out`` and return the exit code."""
    out = Path(out or cfg.out or f"runs/{cfg.experiment}")
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    info: dict = {}
    outputs: list = []
    try:
        outputs = _DISPATCH[cfg.experiment](cfg, out, info)
        status, code = "ok", EXIT_OK
    except NonConvergenceError as exc:
        status, code = f"non-convergence: {exc}", EXIT_NONCONV
        outputs = info.pop("outputs", [])
    except BlowUpError as exc:
        status, code = f"blow-up: {exc}", EXIT_BLOWUP
        info.update({"step": exc.step, "t": exc.t})
    except CostGuardError as exc:
        status, code = f"cost guard: {exc}", EXIT_COST
    except (ConfigError, IrrationalRatioError) as exc:
        status, code = f"config error: {exc}", EXIT_CONFIG
    with open(out / "manifest.json", "w") as fh:
        json.dump(_manifest(cfg, status, code, outputs, info, started), fh, indent=2, sort_keys=True)
    return code


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qdnls", description=__doc__.split("\n\n")[0])
    ap.add_argument("experiment", choices=EXPERIMENTS + ("plot",))
    ap.add_argument("--config", help="flat key = value config file")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--seed", type=int, help="override the config seed")
    ap.add_argument("--table", help="plot: CSV table to read")
    ap.add_argument("--x", help="plot: x column")
    ap.add_argument("--y", help="plot: y column")
    ap.add_argument("--transform", default="linear", choices=("linear", "log-log"))
    return ap


def _read_table(path) -> ResultTable:
    import csv

    with open(path) as fh:
        lines = fh.read().splitlines()
    body = [ln for ln in lines if not ln.startswith("#")]
    reader = csv.reader(body)
    cols = next(reader)
    return ResultTable(cols, [tuple(r) for r in reader])


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.experiment == "plot":
        if not (args.table and args.x and args.y):
            print("qdnls plot needs --table, --x and --y", file=sys.stderr)
            return EXIT_CONFIG
        try:
            tab = _read_table(args.table)
            text, dropped = emit_plot_data(tab, args.x, args.y, args.transform, args.out)
        except (OSError, KeyError, ValueError) as exc:
            print(f"qdnls: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        if args.out is None:
            sys.stdout.write(text)
        return EXIT_OK
    if not args.config:
        print("qdnls: --config is required", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config, args.experiment)
    except ConfigError as exc:
        print(f"qdnls: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        cfg.seed = args.seed
    code = run(cfg, args.out)
    if code != EXIT_OK:
        man = json.loads((Path(args.out or cfg.out or f"runs/{cfg.experiment}") / "manifest.json").read_text())
        print(f"qdnls: {man['status']}", file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
