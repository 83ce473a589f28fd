"""Discrete-event simulation of the bufferless status-update link.

Arrivals are Poisson(lambda) and carry a symbol drawn from the full pmf.
Only admitted symbols (the ``k`` least probable) may be transmitted; an
admitted arrival that finds the channel busy is blocked. A transmission of
symbol ``i`` takes ``lengths[i]`` time units, after which the receiver age
drops to that service time. The age starts at 0 at t=0.

The time integral of the age penalty is computed exactly, in two
independent groupings (delivery intervals, and the per-cycle areas Q plus
the trailing Q_inf), which must agree to rounding.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields

import numpy as np

from .codec import integer_lengths
from .errors import InvalidParameterError
from .probability import TruncatedSource
from .timeliness import PenaltyConfig, expected_q, penalty_segment_integral

RENEWAL_RTOL = 1e-6


@dataclass(frozen=True)
class SimConfig:
    lam: float
    horizon: float
    seed: int = 0
    warmup_fraction: float = 0.01
    use_integer_lengths: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise InvalidParameterError("lambda must be finite and > 0", "lambda")
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise InvalidParameterError("horizon must be finite and > 0", "horizon")
        if not 0 <= self.warmup_fraction < 1:
            raise InvalidParameterError("warmup_fraction must be in [0, 1)", "warmup_fraction")
        if isinstance(self.seed, bool) or int(self.seed) != self.seed or not 0 <= self.seed < 2 ** 64:
            raise InvalidParameterError("seed must be an integer in [0, 2**64)", "seed")


@dataclass(frozen=True)
class CycleRecord:
    y: float
    s: float
    w: float
    q_exact: float


@dataclass(frozen=True)
class SimStats:
    seed: int
    horizon: float
    generated: int
    admitted: int
    blocked: int
    deliveries: int
    mean_y: float
    mean_y2: float
    mean_s: float
    mean_s2: float
    mean_w: float
    eta: float
    time_avg_penalty: float
    sum_q_over_T: float
    mean_q: float
    q_stderr: float
    empirical_j: float
    cycles: int
    degenerate: bool

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class SimResult:
    """Summary statistics plus per-cycle arrays (after warm-up)."""

    stats: SimStats
    y: np.ndarray
    s: np.ndarray
    w: np.ndarray
    q: np.ndarray

    def records(self) -> list[CycleRecord]:
        return [CycleRecord(*vals) for vals in zip(self.y.tolist(), self.s.tolist(),
                                                   self.w.tolist(), self.q.tolist())]


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator; replication ``r`` uses ``base_seed + r``."""
    return np.random.Generator(np.random.Philox(int(seed)))


def _arrivals(rng, lam, horizon, probs):
    mean_count = lam * horizon
    chunk = int(mean_count + 6.0 * math.sqrt(mean_count) + 64)
    parts = []
    last = 0.0
    while True:
        t = last + np.cumsum(rng.exponential(1.0 / lam, chunk))
        parts.append(t)
        last = float(t[-1])
        if last >= horizon:
            break
    times = np.concatenate(parts)
    times = times[: np.searchsorted(times, horizon, side="left")]
    cdf = np.cumsum(probs)
    sym = np.searchsorted(cdf, rng.random(times.size), side="right")
    np.minimum(sym, len(probs) - 1, out=sym)
    return times, sym


def _serve(adm_times: np.ndarray, service: np.ndarray):
    """Indices of admitted arrivals that find the channel idle."""
    times = adm_times.tolist()
    serv = service.tolist()
    m = len(times)
    picked = []
    i = 0
    while i < m:
        picked.append(i)
        # arrivals strictly before the end of service are blocked
        i = bisect_left(times, times[i] + serv[i], i + 1)
    return np.asarray(picked, dtype=np.int64)


def run_events(adm_times, adm_service, generated, admitted, cfg: PenaltyConfig,
               horizon: float, warmup_fraction: float, seed: int = 0) -> SimResult:
    """Serve a given admitted arrival stream and integrate the penalty.

    Exposed separately from :func:`simulate` so that arrival streams can be
    constructed by hand.
    """
    adm_times = np.asarray(adm_times, dtype=float)
    adm_service = np.asarray(adm_service, dtype=float)
    started = _serve(adm_times, adm_service) if adm_times.size else np.zeros(0, dtype=np.int64)
    t = adm_times[started]
    s = adm_service[started]
    done = t + s
    ok = done <= horizon
    t, s, done = t[ok], s[ok], done[ok]
    n_del = int(t.size)

    # fictitious fresh delivery at t=0 prepended (generation 0, service 0)
    tt = np.concatenate(([0.0], t))
    ss = np.concatenate(([0.0], s))
    dd = np.concatenate(([0.0], done))

    # grouping 1: age is linear from ss[j] on [dd[j], dd[j+1]), last piece to T
    dur = np.diff(np.concatenate((dd, [horizon])))
    total_delivery = math.fsum(penalty_segment_integral(cfg, ss, dur).tolist())

    # grouping 2: Q_j = F(Y_j + S_{j+1}) - F(S_{j+1}), plus Q_inf = F(T - t_N)
    w_gap = tt[1:] - dd[:-1]
    y_gap = ss[:-1] + w_gap
    s_next = ss[1:]
    q = (penalty_segment_integral(cfg, np.zeros_like(y_gap), y_gap + s_next)
         - penalty_segment_integral(cfg, np.zeros_like(s_next), s_next))
    q = np.atleast_1d(np.asarray(q, dtype=float))
    q_inf = penalty_segment_integral(cfg, 0.0, horizon - tt[-1])
    total_q = math.fsum(q.tolist()) + q_inf

    # complete cycles start at a real delivery: j = 1 .. N-1
    start = tt[1:-1]
    keep = start >= warmup_fraction * horizon
    cy = y_gap[1:][keep]
    cs = ss[1:-1][keep]
    cw = w_gap[1:][keep]
    cq = q[1:][keep]
    n_cyc = int(cy.size)
    degenerate = n_cyc < 2

    def mean(a):
        return float(np.mean(a)) if a.size else float("nan")

    mean_q = mean(cq)
    q_se = float(np.std(cq, ddof=1) / math.sqrt(n_cyc)) if n_cyc > 1 else float("nan")
    cost = mean(cfg.w * (cfg.alpha * cs + cfg.beta * cs * cs))
    stats = SimStats(
        seed=int(seed),
        horizon=float(horizon),
        generated=int(generated),
        admitted=int(admitted),
        blocked=int(admitted - started.size),
        deliveries=n_del,
        mean_y=mean(cy),
        mean_y2=mean(cy * cy),
        mean_s=mean(cs),
        mean_s2=mean(cs * cs),
        mean_w=mean(cw),
        eta=(n_del - 1) / horizon,
        time_avg_penalty=total_delivery / horizon,
        sum_q_over_T=total_q / horizon,
        mean_q=mean_q,
        q_stderr=q_se,
        empirical_j=mean_q + cost,
        cycles=n_cyc,
        degenerate=degenerate,
    )
    return SimResult(stats, cy, cs, cw, cq)


def simulate(source: TruncatedSource, lengths, cfg: PenaltyConfig, sim: SimConfig) -> SimResult:
    """Simulate one replication.

    Parameters
    ----------
    source : TruncatedSource
        Admitted symbol set; arrivals are drawn from ``source.parent``.
    lengths : array_like
        Service time of each admitted symbol, in truncated-index order.
    cfg : PenaltyConfig
        Penalty whose time average is integrated (any ``kappa`` for PDT).
    sim : SimConfig
    """
    lengths = np.asarray(lengths, dtype=float).ravel()
    if lengths.size != source.k:
        raise InvalidParameterError(f"need {source.k} lengths, got {lengths.size}", "lengths")
    if sim.use_integer_lengths:
        lengths = np.asarray(integer_lengths(lengths), dtype=float)
    if np.any(~np.isfinite(lengths)) or np.any(lengths < 0) or (source.k > 1 and np.any(lengths <= 0)):
        raise InvalidParameterError("service times must be > 0 (0 only for k=1)", "lengths")
    rng = make_rng(sim.seed)
    parent = source.parent
    times, sym = _arrivals(rng, sim.lam, sim.horizon, parent.as_array())
    offset = parent.n - source.k
    adm = sym >= offset
    adm_times = times[adm]
    service = lengths[sym[adm] - offset]
    return run_events(adm_times, service, times.size, adm_times.size, cfg,
                      sim.horizon, sim.warmup_fraction, sim.seed)


def _one(args):
    source, lengths, cfg, sim = args
    return simulate(source, lengths, cfg, sim).stats


def run_replications(source, lengths, cfg, sim: SimConfig, replications: int, jobs: int = 1) -> list[SimStats]:
    """Replication ``r`` runs with seed ``sim.seed + r``; results in replication order."""
    if replications < 1:
        raise InvalidParameterError("replications must be >= 1", "replications")
    tasks = []
    for r in range(replications):
        cfg_r = SimConfig(sim.lam, sim.horizon, sim.seed + r, sim.warmup_fraction, sim.use_integer_lengths)
        tasks.append((source, tuple(np.asarray(lengths, dtype=float).tolist()), cfg, cfg_r))
    if jobs <= 1 or replications == 1:
        return [_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(_one, tasks))


def aggregate(stats: list[SimStats]) -> dict:
    """Across-replication means (integer counts averaged as floats)."""
    out = {}
    for f in fields(SimStats):
        if f.name in ("seed", "degenerate"):
            continue
        out[f.name] = float(np.mean([getattr(s, f.name) for s in stats]))
    return out


@dataclass(frozen=True)
class ComparisonReport:
    degenerate: bool
    mean_q: float
    q_stderr: float
    analytic_q: float
    analytic_q_at_empirical: float
    taylor_gap: float
    eta: float
    eta_mean_q: float
    time_avg_penalty: float
    sum_q_over_T: float
    renewal_gap: float
    mean_y: float
    analytic_mean_y: float
    mean_y2: float
    analytic_mean_y2: float
    mean_w: float
    gamma: float
    inverse_mean_y: float

    def lines(self) -> list[str]:
        if self.degenerate:
            return ["degenerate run: fewer than two complete delivery cycles"]
        return [
            f"mean Q (sim)            {self.mean_q:.6g} +- {self.q_stderr:.3g}",
            f"E[Q] analytic           {self.analytic_q:.6g}",
            f"E[Q] at sim moments     {self.analytic_q_at_empirical:.6g}",
            f"relative gap            {self.taylor_gap:.4%}",
            f"eta * mean Q            {self.eta_mean_q:.6g}",
            f"time-average penalty    {self.time_avg_penalty:.6g}",
            f"(sum Q + Q_inf) / T     {self.sum_q_over_T:.6g}  (rel diff {self.renewal_gap:.2e})",
            f"mean Y / E[L]+gamma     {self.mean_y:.6g} / {self.analytic_mean_y:.6g}",
            f"mean Y^2 / formula      {self.mean_y2:.6g} / {self.analytic_mean_y2:.6g}",
            f"mean W / gamma          {self.mean_w:.6g} / {self.gamma:.6g}",
            f"eta / (1 / mean Y)      {self.eta:.6g} / {self.inverse_mean_y:.6g}",
        ]


def analytic_vs_empirical_report(stats: SimStats, solution, gamma: float, cfg: PenaltyConfig) -> ComparisonReport:
    """Compare one run against the analytic moment and penalty formulas.

    ``taylor_gap`` is ``(mean Q - E[Q]) / mean Q``; for EDT and LDT this
    measures the second-order approximation, for PDT with kappa=1 it is
    pure sampling noise.
    """
    EL, EL2 = solution.EL, solution.EL2
    analytic_y = EL + gamma
    analytic_y2 = EL2 + 2 * gamma * EL + 2 * gamma ** 2
    renewal_gap = abs(stats.time_avg_penalty - stats.sum_q_over_T) / (1.0 + abs(stats.time_avg_penalty))
    try:
        aq = expected_q(cfg, EL, EL2, gamma)
        aq_emp = expected_q(cfg, stats.mean_s, stats.mean_s2, stats.mean_w) if not stats.degenerate else float("nan")
    except Exception:
        aq = aq_emp = float("nan")
    gap = (stats.mean_q - aq) / stats.mean_q if stats.mean_q else float("nan")
    return ComparisonReport(
        degenerate=stats.degenerate,
        mean_q=stats.mean_q,
        q_stderr=stats.q_stderr,
        analytic_q=aq,
        analytic_q_at_empirical=aq_emp,
        taylor_gap=gap,
        eta=stats.eta,
        eta_mean_q=stats.eta * stats.mean_q,
        time_avg_penalty=stats.time_avg_penalty,
        sum_q_over_T=stats.sum_q_over_T,
        renewal_gap=renewal_gap,
        mean_y=stats.mean_y,
        analytic_mean_y=analytic_y,
        mean_y2=stats.mean_y2,
        analytic_mean_y2=analytic_y2,
        mean_w=stats.mean_w,
        gamma=gamma,
        inverse_mean_y=1.0 / stats.mean_y if stats.mean_y else float("nan"),
    )
