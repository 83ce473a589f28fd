"""Parameter sweeps over k, lambda and the cost weights."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import CalibrationError, SemcodeError, SweepFailureError
from .optimizer import solve_source
from .probability import SourcePmf, truncate
from .timeliness import PenaltyConfig

REFERENCE_LAMBDAS = (0.5, 1.0, 5.0, 10.0, 20.0)
COST_GRID = tuple(float(v) for v in np.linspace(0.0, 10.0, 21))


@dataclass(frozen=True)
class SweepSpec:
    pmf: SourcePmf
    cfg: PenaltyConfig
    lambdas: tuple[float, ...] = REFERENCE_LAMBDAS
    ks: tuple[int, ...] | None = None
    costparams: tuple[float, ...] = COST_GRID
    zipf_s: float | None = None
    jobs: int = 1

    def k_grid(self) -> tuple[int, ...]:
        return tuple(self.ks) if self.ks else tuple(range(1, self.pmf.n + 1))


@dataclass(frozen=True)
class Row:
    case: str
    lam: float
    n: int
    s: float | None
    w: float
    alpha: float
    beta: float
    k: int
    q_k: float
    gamma: float
    mu: float = float("nan")
    EL: float = float("nan")
    EL2: float = float("nan")
    EQ: float = float("nan")
    cost_term: float = float("nan")
    j_soi: float = float("nan")
    status: str = "ok"
    lengths: tuple[float, ...] = field(default=(), repr=False, compare=False)

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def evaluate(pmf: SourcePmf, cfg: PenaltyConfig, lam: float, k: int, s=None) -> Row:
    """Solve one grid point; failures are recorded in ``status``."""
    src = truncate(pmf, k)
    gamma = src.gamma(lam)
    base = dict(case=cfg.case.value, lam=float(lam), n=pmf.n, s=s, w=cfg.w,
                alpha=cfg.alpha, beta=cfg.beta, k=k, q_k=src.q_k, gamma=gamma)
    try:
        sol = solve_source(cfg, src, lam)
    except SemcodeError as exc:
        return Row(**base, status=f"{type(exc).__name__}: {exc}")
    return Row(**base, mu=sol.mu, EL=sol.EL, EL2=sol.EL2, EQ=sol.expected_q,
               cost_term=sol.cost_term, j_soi=sol.j_soi, lengths=sol.lengths)


def _evaluate_args(args):
    return evaluate(*args)


def _map(tasks, jobs):
    if jobs <= 1 or len(tasks) < 2:
        return [_evaluate_args(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(_evaluate_args, tasks, chunksize=8))


def argmin_row(rows):
    """First row with the smallest J_SoI among successful rows (ties -> earliest)."""
    best = None
    for r in rows:
        if r.ok and math.isfinite(r.j_soi) and (best is None or r.j_soi < best.j_soi):
            best = r
    return best


def sweep_k(spec: SweepSpec, lam: float | None = None) -> list[Row]:
    """One row per k (ascending) for each lambda in ``spec.lambdas``, or for ``lam`` only."""
    lams = (lam,) if lam is not None else spec.lambdas
    tasks = [(spec.pmf, spec.cfg, l, k, spec.zipf_s) for l in sorted(lams) for k in sorted(spec.k_grid())]
    return _map(tasks, spec.jobs)


def find_optimal_k(spec: SweepSpec, lam: float) -> tuple[int, float]:
    rows = sweep_k(spec, lam)
    best = argmin_row(rows)
    if best is None:
        raise SweepFailureError(f"every k failed at lambda={lam}")
    return best.k, best.j_soi


def sweep_lambda(spec: SweepSpec) -> list[Row]:
    """Rows ordered by (k, lambda)."""
    tasks = [(spec.pmf, spec.cfg, l, k, spec.zipf_s) for k in sorted(spec.k_grid()) for l in sorted(spec.lambdas)]
    return _map(tasks, spec.jobs)


def lambda_minima(rows) -> dict[int, Row]:
    """Per-k row with the lowest J_SoI over lambda."""
    by_k: dict[int, list[Row]] = {}
    for r in rows:
        by_k.setdefault(r.k, []).append(r)
    return {k: argmin_row(rs) for k, rs in by_k.items() if argmin_row(rs) is not None}


def sweep_cost(spec: SweepSpec, lam: float) -> list[Row]:
    """Surface over k and alpha=beta at a fixed lambda; rows ordered by (k, costparam)."""
    tasks = []
    for k in sorted(spec.k_grid()):
        for c in spec.costparams:
            tasks.append((spec.pmf, spec.cfg.replace(alpha=c, beta=c), lam, k, spec.zipf_s))
    return _map(tasks, spec.jobs)


def table1(spec: SweepSpec) -> list[dict]:
    """Joint (k, alpha=beta) argmin of J_SoI for each lambda."""
    out = []
    for lam in sorted(spec.lambdas):
        best = argmin_row(sweep_cost(spec, lam))
        if best is None:
            raise SweepFailureError(f"every point failed at lambda={lam}")
        out.append(dict(lam=lam, k_star=best.k, costparam_star=best.alpha, j_soi_star=best.j_soi))
    return out


def calibrate_w(pmf: SourcePmf, cfg: PenaltyConfig, lam: float, k_ref: int | None = None,
                max_iter: int = 20, rtol: float = 1e-6) -> float:
    """Weight that balances E[Q] against the weighted coding cost at ``k_ref``.

    Fixed-point iteration ``w <- E[Q](w) / cost(w)`` starting from ``cfg.w``,
    where ``cost`` is the unweighted quadratic length cost at the solved
    lengths.
    """
    k_ref = pmf.n if k_ref is None else k_ref
    src = truncate(pmf, k_ref)
    w = cfg.w
    trace = []
    for _ in range(max_iter):
        sol = solve_source(cfg.replace(w=w), src, lam)
        raw_cost = sol.cost_term / w
        if not (raw_cost > 0 and sol.expected_q > 0):
            raise CalibrationError(
                f"cannot balance E[Q]={sol.expected_q:.6g} against cost {raw_cost:.6g}", trace
            )
        w_new = sol.expected_q / raw_cost
        trace.append((w, sol.expected_q, sol.cost_term))
        if abs(w_new - w) <= rtol * abs(w):
            return w
        w = w_new
    raise CalibrationError(f"no convergence after {max_iter} iterations", trace)
