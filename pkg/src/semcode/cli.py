"""Command-line entry point: ``semcode <command> [options]``.

Exit codes: 0 success, 1 validation-suite failure, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import config as config_mod
from .codec import build_codebook, integer_lengths
from .errors import InvalidParameterError, NumericalError
from .experiments import (
    SweepSpec,
    argmin_row,
    calibrate_w,
    lambda_minima,
    sweep_cost,
    sweep_k,
    sweep_lambda,
    table1,
)
from .optimizer import solve_source
from .probability import parse_pmf_spec, truncate
from .simulator import SimConfig, SimStats, aggregate, analytic_vs_empirical_report, run_replications
from .timeliness import PenaltyConfig

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

SIM_COLUMNS = ["seed", "T", "generated", "admitted", "blocked", "deliveries", "mean_y", "mean_y2",
               "mean_s", "mean_w", "eta", "time_avg_penalty", "empirical_j"]
SWEEP_K_COLUMNS = ["case", "lambda", "n", "s", "w", "alpha", "beta", "k", "q_k", "mu", "E_L", "E_L2",
                   "E_Q", "cost_term", "J_SoI", "status"]
SWEEP_LAMBDA_COLUMNS = ["case", "k", "lambda", "n", "s", "w", "alpha", "beta", "q_k", "gamma", "mu",
                        "E_L", "E_L2", "E_Q", "cost_term", "J_SoI", "status", "is_min"]
SWEEP_COST_COLUMNS = ["case", "lambda", "n", "s", "w", "k", "costparam", "q_k", "mu", "E_L", "E_L2",
                      "E_Q", "cost_term", "J_SoI", "status"]
TABLE1_COLUMNS = ["lambda", "k_star", "costparam_star", "J_SoI_star"]


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path: Path, columns, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row.get(c)) for c in columns])
    path.write_text(buf.getvalue())


# -- configuration -----------------------------------------------------------

_FLAG_KEYS = {
    "pmf": str, "case": str, "rho": float, "kappa": int, "w": float, "alpha": float, "beta": float,
    "lam": float, "k": int, "lambdas": str, "ks": str, "costparams": str, "horizon": float,
    "seed": int, "warmup_fraction": float, "replications": int, "lengths_file": str, "out": str,
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML run configuration")
    for key, typ in _FLAG_KEYS.items():
        flag = "--lambda" if key == "lam" else "--" + key.replace("_", "-")
        p.add_argument(flag, dest=key, type=typ, default=None)
    p.add_argument("--integer-lengths", dest="use_integer_lengths", action="store_const", const=True,
                   default=None, help="use rounded-up integer lengths as service times")
    p.add_argument("--calibrate-w", dest="calibrate_w", action="store_const", const=True, default=None,
                   help="replace w by the balancing weight at k=n before running")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                   help="worker processes for sweeps and replications")


def _resolve(args) -> config_mod.RunConfig:
    overrides = {k: getattr(args, k, None) for k in list(_FLAG_KEYS) + ["use_integer_lengths", "calibrate_w"]}
    return config_mod.resolve(args.config, overrides)


def _penalty(rc) -> PenaltyConfig:
    return PenaltyConfig(rc.case, rho=rc.rho, kappa=rc.kappa, w=rc.w, alpha=rc.alpha, beta=rc.beta)


def _setup(args):
    rc = _resolve(args)
    pmf = parse_pmf_spec(rc.pmf)
    cfg = _penalty(rc)
    if rc.calibrate_w:
        cfg = cfg.replace(w=calibrate_w(pmf, cfg, rc.lam))
    out = Path(rc.out)
    config_mod.write_resolved(rc, out)
    return rc, pmf, cfg, out


def _zipf_s(rc):
    kind, _, rest = rc.pmf.partition(":")
    if kind.strip().lower() == "zipf":
        return float(rest.split(":")[1])
    return None


def _spec(rc, pmf, cfg, jobs) -> SweepSpec:
    return SweepSpec(pmf=pmf, cfg=cfg, lambdas=tuple(rc.lambdas), ks=tuple(rc.ks) or None,
                     costparams=tuple(rc.costparams), zipf_s=_zipf_s(rc), jobs=jobs)


# -- commands ----------------------------------------------------------------

def _read_lengths_file(path, integer: bool) -> list[float]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    col = "length_int" if integer and rows and rows[0].get("length_int") else "length_real"
    try:
        return [float(r[col]) for r in rows]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidParameterError(f"{path}: missing or bad column {col}", "lengths_file") from exc


def cmd_optimize(args) -> int:
    rc, pmf, cfg, out = _setup(args)
    src = truncate(pmf, rc.k)
    sol = solve_source(cfg, src, rc.lam)
    ints = integer_lengths(sol.lengths)
    book = build_codebook(ints)
    rows = []
    for j, idx in enumerate(src.indices):
        rows.append(dict(index=idx + 1, p_tilde=pmf.probs[idx], p_cond=src.cond_probs[j],
                         length_real=sol.lengths[j], length_int=ints[j], codeword=book.codewords[j]))
    write_csv(out / "lengths.csv", ["index", "p_tilde", "p_cond", "length_real", "length_int", "codeword"], rows)
    print(f"k={src.k} q_k={src.q_k:.6g} gamma={src.gamma(rc.lam):.6g} w={cfg.w:.6g}")
    print(f"mu={sol.mu:.10g} E[L]={sol.EL:.10g} E[L^2]={sol.EL2:.10g}")
    print(f"kraft={sol.kraft_sum:.15g} kkt_residual={sol.kkt_residual:.3e}")
    print(f"E[Q]={sol.expected_q:.10g} cost={sol.cost_term:.10g} J_SoI={sol.j_soi:.10g}")
    return EXIT_OK


def cmd_codebook(args) -> int:
    rc, pmf, cfg, out = _setup(args)
    src = truncate(pmf, rc.k)
    if rc.lengths_file:
        real = _read_lengths_file(rc.lengths_file, integer=False)
    else:
        real = solve_source(cfg, src, rc.lam).lengths
    book = build_codebook(integer_lengths(real))
    rows = [dict(index=src.indices[j] + 1, length=book.int_lengths[j], codeword=book.codewords[j])
            for j in range(book.size)]
    write_csv(out / "codebook.csv", ["index", "length", "codeword"], rows)
    print(f"{book.size} codewords, kraft={float(book.kraft_sum()):.6g}")
    return EXIT_OK


def _stats_row(st: SimStats) -> dict:
    d = st.as_dict()
    d["T"] = d.pop("horizon")
    return d


def cmd_simulate(args) -> int:
    rc, pmf, cfg, out = _setup(args)
    src = truncate(pmf, rc.k)
    gamma = src.gamma(rc.lam)
    analytic_cfg = cfg.replace(kappa=1) if cfg.kappa != 1 else cfg
    sol = solve_source(analytic_cfg, src, rc.lam)
    if rc.lengths_file:
        lengths = _read_lengths_file(rc.lengths_file, integer=rc.use_integer_lengths)
    else:
        lengths = list(sol.lengths)
    sim = SimConfig(rc.lam, rc.horizon, rc.seed, rc.warmup_fraction, rc.use_integer_lengths)
    stats = run_replications(src, lengths, cfg, sim, rc.replications, jobs=args.jobs)
    rows = [_stats_row(s) for s in stats]
    if len(stats) > 1:
        agg = aggregate(stats)
        agg["T"] = agg.pop("horizon")
        agg["seed"] = "mean"
        rows.append(agg)
        qs = np.array([s.mean_q for s in stats])
        summary = SimStats(seed=rc.seed, degenerate=any(s.degenerate for s in stats),
                           **{**{k: v for k, v in aggregate(stats).items()},
                              "q_stderr": float(np.std(qs, ddof=1) / math.sqrt(qs.size)),
                              "generated": int(round(agg["generated"])), "admitted": int(round(agg["admitted"])),
                              "blocked": int(round(agg["blocked"])), "deliveries": int(round(agg["deliveries"])),
                              "cycles": int(round(agg["cycles"]))})
    else:
        summary = stats[0]
    write_csv(out / "sim.csv", SIM_COLUMNS, rows)
    report = analytic_vs_empirical_report(summary, sol, gamma, cfg)
    text = "\n".join(report.lines()) + "\n"
    if cfg.kappa != 1:
        text += "note: analytic E[Q] shown for kappa=1; simulated penalty uses kappa=%d\n" % cfg.kappa
    (out / "report.txt").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def _sweep_dict(r) -> dict:
    return {"case": r.case, "lambda": r.lam, "n": r.n, "s": r.s, "w": r.w, "alpha": r.alpha, "beta": r.beta,
            "k": r.k, "q_k": r.q_k, "gamma": r.gamma, "mu": r.mu, "E_L": r.EL, "E_L2": r.EL2, "E_Q": r.EQ,
            "cost_term": r.cost_term, "J_SoI": r.j_soi, "status": r.status, "costparam": r.alpha}


def cmd_sweep_k(args) -> int:
    rc, pmf, cfg, out = _setup(args)
    spec = _spec(rc, pmf, cfg, args.jobs)
    rows = sweep_k(spec)
    write_csv(out / "sweep_k.csv", SWEEP_K_COLUMNS, [_sweep_dict(r) for r in rows])
    for lam in sorted(spec.lambdas):
        best = argmin_row([r for r in rows if r.lam == lam])
        if best is None:
            print(f"lambda={lam:g}: all points failed")
        else:
            print(f"lambda={lam:g}: k*={best.k} J_SoI*={best.j_soi:.10g}")
    return EXIT_OK


def cmd_sweep_lambda(args) -> int:
    rc, pmf, cfg, out = _setup(args)
    spec = _spec(rc, pmf, cfg, args.jobs)
    if not rc.ks:
        n = pmf.n
        spec = SweepSpec(spec.pmf, spec.cfg, spec.lambdas,
                         tuple(sorted({max(1, n // 10), max(1, n // 4), max(1, n // 2), n})),
                         spec.costparams, spec.zipf_s, spec.jobs)
    rows = sweep_lambda(spec)
    minima = lambda_minima(rows)
    dicts = []
    for r in rows:
        d = _sweep_dict(r)
        d["is_min"] = minima.get(r.k) is r
        dicts.append(d)
    write_csv(out / "sweep_lambda.csv", SWEEP_LAMBDA_COLUMNS, dicts)
    for k, r in sorted(minima.items()):
        print(f"k={k}: lambda*={r.lam:g} J_SoI*={r.j_soi:.10g}")
    return EXIT_OK


def cmd_sweep_cost(args) -> int:
    rc, pmf, cfg, out = _setup(args)
    spec = _spec(rc, pmf, cfg, args.jobs)
    rows = sweep_cost(spec, rc.lam)
    write_csv(out / "sweep_cost.csv", SWEEP_COST_COLUMNS, [_sweep_dict(r) for r in rows])
    best = argmin_row(rows)
    if best is not None:
        print(f"lambda={rc.lam:g}: joint argmin k*={best.k} alpha=beta*={best.alpha:g} J_SoI*={best.j_soi:.10g}")
    return EXIT_OK


def cmd_table1(args) -> int:
    rc, pmf, cfg, out = _setup(args)
    spec = _spec(rc, pmf, cfg, args.jobs)
    rows = table1(spec)
    write_csv(out / "table1.csv", TABLE1_COLUMNS,
              [{"lambda": r["lam"], "k_star": r["k_star"], "costparam_star": r["costparam_star"],
                "J_SoI_star": r["j_soi_star"]} for r in rows])
    for r in rows:
        print(f"lambda={r['lam']:g}: k*={r['k_star']} alpha=beta*={r['costparam_star']:g} "
              f"J_SoI*={r['j_soi_star']:.10g}")
    print("note: alpha=beta* is the joint J_SoI argmin over the cost grid; J_SoI grows with the cost "
          "weights, so this tends to the smallest grid value and need not match published tables")
    return EXIT_OK


def cmd_validate(args) -> int:
    from .validate import SUITES, run_suites

    names = args.suite or None
    if names:
        bad = [n for n in names if n not in SUITES]
        if bad:
            print(f"unknown suite: {', '.join(bad)} (choose from {', '.join(SUITES)})", file=sys.stderr)
            return EXIT_CONFIG
    results = run_suites(names, mu_fault=args.inject_mu_fault)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_VALIDATION


COMMANDS = {
    "optimize": cmd_optimize,
    "codebook": cmd_codebook,
    "simulate": cmd_simulate,
    "sweep-k": cmd_sweep_k,
    "sweep-lambda": cmd_sweep_lambda,
    "sweep-cost": cmd_sweep_cost,
    "table1": cmd_table1,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="semcode", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        if name == "validate":
            p.add_argument("--suite", action="append", help="run only this suite (repeatable)")
            p.add_argument("--inject-mu-fault", type=float, default=0.0, help=argparse.SUPPRESS)
        else:
            _add_common(p)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except InvalidParameterError as exc:
        field = f" [{exc.field}]" if exc.field else ""
        print(f"configuration error{field}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
