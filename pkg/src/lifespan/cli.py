"""Command-line front end: ``lifespan {norms,bounds,sweep,solve,check}``.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.
Every table is written as CSV plus a whitespace ``.dat`` twin for gnuplot.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np
from scipy import fft as sfft

from . import fieldio
from .bounds import compute_bounds
from .config import ConfigError, ExperimentConfig, load_config, set_value
from .data import (
    FIELD_NAMES,
    SWEEP_COLUMNS,
    OscillatoryParams,
    family_sweep_values,
    named_field,
)
from .fitting import fit_exponent
from .spaces import (
    INF,
    NormEntry,
    NormReport,
    besov_norm_dyadic,
    besov_norm_heat,
    bmo_inv_norm,
    sobolev_norm,
)
from .spectral import GridError, MixedNormSpec, SpectralVectorField, lebesgue_norm, mixed_norm

log = logging.getLogger("lifespan")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


class UsageError(Exception):
    pass


class NumericError(Exception):
    pass


# ---------------------------------------------------------------------------
# output helpers


def _num(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def table_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_num(r[c]) if c in r else "" for c in columns])
    return buf.getvalue()


def csv_to_dat(text: str) -> str:
    """Whitespace table with a ``#`` header; booleans become 1/0, blanks NaN, text is quoted."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        return ""
    lines = ["# " + " ".join(rows[0])]
    for r in rows[1:]:
        cells = []
        for v in r:
            if v == "true":
                cells.append("1")
            elif v == "false":
                cells.append("0")
            elif v == "":
                cells.append("NaN")
            else:
                try:
                    float(v)
                    cells.append(v)
                except ValueError:
                    cells.append('"' + v.replace('"', "'") + '"')
        lines.append(" ".join(cells))
    return "\n".join(lines) + "\n"


def write_table(out_dir: Path, stem: str, text: str):
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / f"{stem}.csv").write_text(text)
    (out_dir / f"{stem}.dat").write_text(csv_to_dat(text))
    log.info("wrote %s/%s.csv", out_dir, stem)


# ---------------------------------------------------------------------------
# inputs


def load_input(cfg: ExperimentConfig, grid=None):
    """Resolve ``run.data``: a generator name or ``file:<path>`` to an LSL1 field."""
    spec = cfg.run.data
    if spec.startswith("file:") or spec.endswith(".lsl"):
        path = spec[5:] if spec.startswith("file:") else spec
        try:
            return fieldio.read_field(path)
        except (OSError, fieldio.FormatError) as err:
            raise UsageError(f"cannot load field {path}: {err}") from err
    grid = grid or cfg.make_grid()
    if spec not in FIELD_NAMES:
        raise UsageError(f"unknown data {spec!r}; choose from {', '.join(FIELD_NAMES)} or file:<path>")
    params = None
    if spec == "oscillatory":
        f = cfg.family
        params = OscillatoryParams(min(f.eps), f.alpha, f.kappa, f.eta, f.c0_const)
    amp = 1.0 if cfg.family.amplitude == "normalized" else None
    try:
        return named_field(spec, grid, cfg.run.seed, params, cfg.make_profile(), amp)
    except GridError as err:
        raise UsageError(str(err)) from err


def _parse_float(tok):
    return INF if tok.lower() in ("inf", "infinity") else float(tok)


def compute_norms(a, tokens, tg, pad=2.0) -> NormReport:
    """Evaluate norm tokens such as ``L2``, ``Linf``, ``H:0.5``, ``Bheat:1:inf:2``, ``BMO-1``."""
    rep = NormReport()
    rep.metadata["vector_norm"] = "max over components (Besov, Sobolev); pointwise modulus (Lebesgue)"
    for raw in tokens:
        tok = raw.strip()
        if not tok:
            continue
        head, *args = tok.split(":")
        try:
            if head in ("L2", "L4", "Linf") and not args:
                p = {"L2": 2, "L4": 4, "Linf": INF}[head]
                variant = "parseval" if p == 2 else "sampled"
                rep.add(NormEntry("L^p", 0.0, p, "", variant, lebesgue_norm(a, p, pad)))
            elif head in ("H", "Hdyadic") and len(args) == 1:
                s = float(args[0])
                variant = "fourier" if head == "H" else "dyadic"
                comps = a.components if isinstance(a, SpectralVectorField) else (a,)
                val = max(sobolev_norm(c, s, variant) for c in comps)
                rep.add(NormEntry("H^s", s, 2, 2, variant, val))
            elif head in ("Bheat", "Bdyadic") and len(args) == 3:
                sigma, p, q = float(args[0]), _parse_float(args[1]), _parse_float(args[2])
                if head == "Bheat":
                    if np.any(a.coeffs):
                        r = besov_norm_heat(a, sigma, p, q, tg, pad, full=True)
                        rep.add(NormEntry("B", sigma, p, q, "heat", r.value, r.residual))
                    else:
                        rep.add(NormEntry("B", sigma, p, q, "heat", 0.0))
                else:
                    val = besov_norm_dyadic(a, sigma, p, q, pad=pad) if np.any(a.coeffs) else 0.0
                    rep.add(NormEntry("B", sigma, p, q, "dyadic", val))
            elif head == "mixed" and len(args) == 2:
                spec = MixedNormSpec(_parse_float(args[0]), _parse_float(args[1]))
                comps = a.components if isinstance(a, SpectralVectorField) else (a,)
                val = max(mixed_norm(c, spec, pad) for c in comps)
                rep.add(NormEntry("L^pv_v L^ph_h", 0.0, spec.p_vertical, spec.p_horizontal, "sampled", val))
            elif head == "BMO-1" and not args:
                if not isinstance(a, SpectralVectorField):
                    raise UsageError("BMO-1 needs a vector field")
                rep.add(NormEntry("BMO^-1", 1.0, INF, INF, "heat+carleson", bmo_inv_norm(a, tg, pad)))
            else:
                raise UsageError(f"unknown norm token {tok!r}")
        except (ValueError, IndexError) as err:
            if isinstance(err, UsageError):
                raise
            raise UsageError(f"bad norm token {tok!r}: {err}") from err
    return rep


# ---------------------------------------------------------------------------
# commands


def cmd_norms(cfg: ExperimentConfig, out: Path):
    a = load_input(cfg)
    tg = cfg.make_time_grid(a.grid)
    tokens = [t for t in cfg.run.norms.replace(" ", "").split(",") if t]
    rep = compute_norms(a, tokens, tg)
    write_table(out, "norms", rep.to_csv())
    return EXIT_OK


def cmd_bounds(cfg: ExperimentConfig, out: Path):
    a = load_input(cfg)
    if not isinstance(a, SpectralVectorField):
        raise UsageError("bounds need a vector field")
    tg = cfg.make_time_grid(a.grid)
    try:
        rep = compute_bounds(a, cfg.family.gamma, cfg.make_constants(), tg, with_bmo=True)
    except ValueError as err:
        raise UsageError(str(err)) from err
    for flag in rep.flags:
        log.warning("%s", flag)
    eps = alpha = None
    if cfg.run.data == "oscillatory":
        eps, alpha = min(cfg.family.eps), cfg.family.alpha
    write_table(out, "bounds", rep.to_csv(eps, alpha))
    return EXIT_OK


SWEEP_FITS = ("norm_f_bsig", "q0", "q1", "t_fp", "t_l", "t_fp_phys", "t_l_phys", "norm_d3u0_b32")


def sweep_fits(points, sigmas, gammas):
    """Fitted log-log slopes of the sweep quantities against ``eps``."""
    rows = []

    def add(name, param, pts):
        if len(pts) < 3:
            return
        try:
            fit = fit_exponent(pts)
        except ValueError:
            return
        rows.append({"quantity": name, "param": param, "slope": fit.slope, "intercept": fit.intercept, "r2": fit.r2})

    for s in sigmas:
        add("norm_f_bsig", s, [(p.eps, p.norm_f[s]) for p in points])
    for g in gammas:
        add("t_fp", g, [(p.eps, p.t_fp[g]) for p in points])
        add("t_fp_phys", g, [(p.eps, p.t_fp_phys[g]) for p in points])
    add("q0", "", [(p.eps, p.q0) for p in points])
    add("q1", "", [(p.eps, p.q1) for p in points])
    add("norm_d3u0_b32", "", [(p.eps, p.nd3) for p in points])
    add("t_l", "", [(p.eps, p.t_l) for p in points])
    add("t_l_phys", "", [(p.eps, p.t_l_phys) for p in points])
    return rows


def cmd_sweep(cfg: ExperimentConfig, out: Path):
    f = cfg.family
    grid = cfg.make_grid()
    tg = cfg.make_time_grid(grid)

    def skip(eps, err):
        log.warning("eps = %g skipped: %s", eps, err)

    try:
        points = family_sweep_values(
            f.eps, f.alpha, cfg.make_profile(), grid, f.sigma, f.gamma, f.kappa, f.eta, f.c0_const,
            cfg.make_constants(), tg, workers=cfg.run.threads, on_skip=skip,
        )
    except ValueError as err:
        raise UsageError(str(err)) from err
    rows = [r for p in points for r in p.rows()]
    write_table(out, "sweep", table_csv(SWEEP_COLUMNS, rows))
    fits = sweep_fits(points, f.sigma, f.gamma)
    write_table(out, "fits", table_csv(("quantity", "param", "slope", "intercept", "r2"), fits))
    for r in fits:
        log.info("slope %-14s %-5s %+.4f (r2 %.4f)", r["quantity"], _num(r["param"]), r["slope"], r["r2"])
    if len(points) < 3:
        raise NumericError("fewer than 3 resolved eps values; no fit possible")
    return EXIT_OK


def cmd_solve(cfg: ExperimentConfig, out: Path):
    from .solver import d3_energy_check, energy_identity_check, fluctuation_check, integrate, leray_inequality_holds

    u0 = load_input(cfg)
    if not isinstance(u0, SpectralVectorField):
        raise UsageError("the solver needs a vector field")
    try:
        traj = integrate(u0, cfg.make_solver())
    except ValueError as err:
        raise UsageError(str(err)) from err
    write_table(out, "ledger", traj.ledger.to_csv())
    fieldio.write_field(out / "final.lsl", traj.final)
    tg = cfg.make_time_grid(u0.grid)
    from .bounds import ingredients

    ing = ingredients(u0, tg)
    fl = fluctuation_check(traj, u0, ing=ing)
    d3 = d3_energy_check(traj, u0, ing=ing)
    checks = [
        {"check": "status", "value": traj.status, "pass": traj.status == "completed"},
        {"check": "energy_identity_drift", "value": energy_identity_check(traj), "pass": energy_identity_check(traj) < 1e-6},
        {"check": "leray_inequality", "value": leray_inequality_holds(traj), "pass": leray_inequality_holds(traj)},
        {"check": "max_divergence", "value": traj.max_divergence, "pass": traj.max_divergence <= 1e-10},
        {"check": "fluctuation_ratio", "value": fl.ratio, "pass": fl.ratio <= cfg.solver.c_check and not fl.flag},
        {"check": "d3_energy_ratio", "value": d3.ratio, "pass": d3.ratio <= cfg.solver.c_check and not d3.flag},
    ]
    write_table(out, "checks", table_csv(("check", "value", "pass"), checks))
    if traj.status != "completed":
        raise NumericError(f"loss of resolution at t = {traj.failure_time:.6g}")
    return EXIT_OK


def run_invariant_suite(cfg: ExperimentConfig):
    """Fast invariant checks on small grids; returns ``[(name, value, passed)]``."""
    from .bounds import t_l_over_t_star, m_l_and_t_star, t_l
    from .data import make_divfree_random
    from .solver import SolverConfig, energy_identity_check, integrate, leray_inequality_holds
    from .spaces import TimeGrid
    from .spectral import Grid, divergence_residual, forward, heat_flow, leray_project

    out = []
    g = Grid(16)
    tg = TimeGrid.default(g)
    x = g.coords()
    cos1 = forward(np.cos(x[0]), g)
    b = besov_norm_heat(cos1, 1.0, INF, INF, tg)
    out.append(("besov_heat_cos_1_inf_inf", b, abs(b / (1 / math.sqrt(2 * math.e)) - 1) < 1e-2))
    b2 = besov_norm_heat(cos1, 1.0, INF, 2, tg)
    out.append(("besov_heat_cos_1_inf_2", b2, abs(b2 / math.sqrt(0.5) - 1) < 1e-2))
    worst_div, worst_emb = 0.0, 0.0
    for seed in range(cfg.run.seed, cfg.run.seed + 5):
        v = make_divfree_random(g, seed, (0, 1))
        worst_div = max(worst_div, divergence_residual(leray_project(heat_flow(v, 0.1))))
        c = v.components[0]
        worst_emb = max(worst_emb, besov_norm_heat(c, 1.0, INF, 2, tg) / (4 * sobolev_norm(c, 0.5)))
    out.append(("leray_heat_divergence", worst_div, worst_div <= 1e-10))
    out.append(("embedding_b1inf2_over_4h12", worst_emb, worst_emb <= 1.0))
    shear = named_field("shear", g)
    traj = integrate(shear, SolverConfig(dt=1e-2, t_end=0.2, sample_every=5))
    err = float(np.max(np.abs(traj.final.values()[0] - math.exp(-0.2) * np.cos(x[1]))))
    out.append(("shear_exact_solution", err, err <= 1e-8))
    fix = named_field("fixture", g)
    traj = integrate(fix, SolverConfig(dt=1e-2, t_end=0.2, sample_every=5))
    drift = energy_identity_check(traj)
    out.append(("energy_identity_drift", drift, drift < 1e-6))
    out.append(("leray_energy_inequality", leray_inequality_holds(traj), leray_inequality_holds(traj)))
    consts = cfg.make_constants()
    tl = t_l(fix, consts, tg)
    _, ts = m_l_and_t_star(fix, consts, tg)
    gap = abs(tl / ts / t_l_over_t_star(consts) - 1)
    out.append(("t_l_t_star_identity", gap, gap <= 1e-12))
    rep = compute_bounds(shear, (0.25,), consts, tg, with_bmo=False)
    out.append(("shear_linear_regime", rep.t_l, math.isinf(rep.t_l) and rep.q0 == 0))
    return out


def cmd_check(cfg: ExperimentConfig, out: Path):
    results = run_invariant_suite(cfg)
    rows = [{"check": n, "value": v, "pass": bool(p)} for n, v, p in results]
    write_table(out, "check", table_csv(("check", "value", "pass"), rows))
    for n, v, p in results:
        print(f"{'PASS' if p else 'FAIL'} {n} {_num(v)}")
    if not all(p for _, _, p in results):
        raise NumericError("invariant suite failed")
    return EXIT_OK


COMMANDS = {"norms": cmd_norms, "bounds": cmd_bounds, "sweep": cmd_sweep, "solve": cmd_solve, "check": cmd_check}


# ---------------------------------------------------------------------------
# argument handling


def _float_list(text):
    from .config import _floats

    try:
        return _floats(text)
    except ValueError as err:
        raise argparse.ArgumentTypeError(str(err)) from err


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with [grid] [time] [constants] [family] [solver] [run] sections")
    common.add_argument("--grid", type=int, help="grid points per axis (power of two)")
    common.add_argument("--box", help="box length, e.g. 6.283 or pi or 2pi")
    common.add_argument("--eps", type=_float_list, help="comma-separated eps list, fractions allowed (1/8,1/16)")
    common.add_argument("--alpha", type=float)
    common.add_argument("--gamma", type=_float_list, help="comma-separated gamma list")
    common.add_argument("--kappa", type=float)
    common.add_argument("--eta", type=float)
    common.add_argument("--data", help=f"generator ({', '.join(FIELD_NAMES)}) or file:<path.lsl>")
    common.add_argument("--norms", help="comma-separated norm tokens (norms command)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int, help="worker threads (default: LSL_THREADS or 1)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="lifespan", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("norms", parents=[common], help="norms of a stored or generated field")
    sub.add_parser("bounds", parents=[common], help="life-span lower bounds of a field")
    sub.add_parser("sweep", parents=[common], help="bounds over the oscillating family and fitted exponents")
    sub.add_parser("solve", parents=[common], help="run the solver and its ledger checks")
    sub.add_parser("check", parents=[common], help="fast invariant suite")
    return parser


def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    threads = os.environ.get("LSL_THREADS")
    if threads and args.threads is None:
        try:
            set_value(cfg, "run", "threads", int(threads))
        except ValueError as err:
            raise ConfigError(f"LSL_THREADS must be an integer, got {threads!r}") from err
    overrides = [
        ("grid", "n", args.grid), ("family", "eps", args.eps), ("family", "alpha", args.alpha),
        ("family", "gamma", args.gamma), ("family", "kappa", args.kappa), ("family", "eta", args.eta),
        ("run", "data", args.data), ("run", "norms", args.norms), ("run", "out", args.out),
        ("run", "seed", args.seed), ("run", "threads", args.threads),
    ]
    if args.box is not None:
        from .config import _box

        try:
            overrides.append(("grid", "box", _box(args.box)))
        except ValueError as err:
            raise ConfigError(f"bad --box {args.box!r}") from err
    for section, key, value in overrides:
        if value is not None:
            set_value(cfg, section, key, value)
    return cfg.validate()


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        with sfft.set_workers(cfg.run.threads):
            return COMMANDS[args.command](cfg, Path(cfg.run.out))
    except (ConfigError, UsageError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
