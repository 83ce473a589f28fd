"""Self-check suites run by ``semcode validate``.

Each suite returns a :class:`SuiteResult`; a suite fails on its first bad
case and reports it.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .optimizer import kraft_sum, lengths_given_mu, solve, solve_source, stationarity_residual
from .probability import truncate, uniform_pmf, zipf_pmf
from .simulator import SimConfig, simulate
from .special import lambert_w0
from .timeliness import Case, PenaltyConfig, QuadraticForm, quadratic_form

KRAFT_TOL = 1e-9
KKT_TOL = 1e-8
LAMBERT_TOL = 1e-12
ORACLE_SLACK = 1e-3


@dataclass
class SuiteResult:
    name: str
    passed: bool
    cases: int
    seconds: float
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        s = f"[{tag}] {self.name}: {self.cases} cases in {self.seconds:.2f}s"
        return s + (f" -- {self.detail}" if self.detail else "")


def lambertw_suite(n_log: int = 10 ** 6, n_neg: int = 10 ** 3) -> SuiteResult:
    t0 = time.perf_counter()
    y_pos = np.logspace(-12, 12, n_log)
    y_neg = np.linspace(-math.exp(-1.0), 0.0, n_neg, endpoint=False)
    y = np.concatenate((y_pos, y_neg))
    w = lambert_w0(y)
    rel = np.abs(w * np.exp(w) - y) / np.maximum(np.abs(y), 1.0)
    worst = int(np.argmax(rel))
    ok = bool(rel[worst] <= LAMBERT_TOL and np.all(w >= -1.0))
    detail = "" if ok else f"y={y[worst]!r} residual={rel[worst]:.3e}"
    return SuiteResult("lambertw", ok, y.size, time.perf_counter() - t0, detail)


def kkt_grid_cases():
    pmfs = [("zipf(100,0.4)", zipf_pmf(100, 0.4)), ("uniform(100)", uniform_pmf(100))]
    for case in Case:
        for lam in (0.5, 1.0, 5.0, 10.0, 20.0):
            for k in (1, 2, 5, 10, 18, 50, 100):
                for label, pmf in pmfs:
                    yield PenaltyConfig(case, rho=0.5, w=1.0, alpha=1.0, beta=1.0), lam, k, label, pmf


def check_solution(qf, probs, lengths, mu):
    """Return a failure message, or '' when Kraft, KKT, sign and order hold."""
    lengths = np.asarray(lengths, dtype=float)
    p = np.asarray(probs, dtype=float)
    ks = kraft_sum(lengths)
    if abs(ks - 1.0) > KRAFT_TOL:
        return f"kraft={ks!r}"
    if p.size > 1:
        res = stationarity_residual(qf, p, lengths, mu)
        if res > KKT_TOL:
            return f"kkt residual={res:.3e}"
    if np.any(lengths < 0):
        return "negative length"
    order = np.argsort(-p, kind="stable")
    if np.any(np.diff(lengths[order]) < -1e-12):
        return "lengths not monotone in probability"
    return ""


def kkt_suite(mu_fault: float = 0.0) -> SuiteResult:
    """Kraft/KKT grid; ``mu_fault`` perturbs the multiplier (negative control)."""
    t0 = time.perf_counter()
    n = 0
    for cfg, lam, k, label, pmf in kkt_grid_cases():
        n += 1
        src = truncate(pmf, k)
        qf = quadratic_form(cfg, src.gamma(lam))
        sol = solve(qf, src.cond_array(), cfg)
        lengths, mu = sol.lengths_array(), sol.mu
        if mu_fault and k > 1:
            mu = mu + mu_fault
            lengths = lengths_given_mu(qf, src.cond_array(), mu)
        msg = check_solution(qf, src.cond_array(), lengths, mu)
        if msg:
            where = f"{cfg.case.value} lambda={lam} k={k} {label}: {msg}"
            return SuiteResult("kkt", False, n, time.perf_counter() - t0, where)
    return SuiteResult("kkt", True, n, time.perf_counter() - t0)


def _objective(qf: QuadraticForm, p, L):
    EL = L @ p
    EL2 = (L * L) @ p
    return qf.A * EL2 + qf.B * EL * EL + qf.C * EL + qf.D


def _coordinate_caps(qf, p, f_cap, upper):
    # f >= p_i (A l_i^2 + C l_i) + (1 - p_i) min_x (A x^2 + C x) + D, with the B term >= 0
    floor_other = min(0.0, -qf.C * qf.C / (4.0 * qf.A))
    caps = []
    for pi in p:
        budget = (f_cap - qf.D - (1.0 - pi) * floor_other) / pi
        disc = qf.C * qf.C + 4.0 * qf.A * budget
        cap = (-qf.C + math.sqrt(disc)) / (2.0 * qf.A) if disc >= 0 else 0.0
        caps.append(min(upper, max(cap, 0.0)))
    return caps


def grid_oracle_min(qf: QuadraticForm, probs, step: float = 0.005, upper: float = 20.0,
                    band: float = 0.002, chunk: int = 64) -> float:
    """Brute-force minimum of the objective over a Kraft band on a length grid.

    Grid points are ``step * i`` in ``[0, upper]`` per coordinate, kept when
    ``|sum 2**-l - 1| <= band``. Points with Kraft sum above 1 are made
    feasible by shifting every length up by ``log2(kraft)`` before the
    objective is evaluated, so the returned value is attained by a feasible
    point. The last coordinate is enumerated only inside the band, and
    coordinates are capped where the objective provably exceeds the value
    of the Shannon lengths ``-log2 p`` (plus a margin).
    """
    p = np.asarray(probs, dtype=float)
    k = p.size
    if k not in (2, 3):
        raise ValueError("grid oracle supports 2 or 3 symbols")
    shannon = -np.log2(p)
    f_cap = float(_objective(qf, p, shannon[None, :])[0]) + 1.0
    caps = _coordinate_caps(qf, p, f_cap, upper)
    n_idx = [int(math.floor(c / step + 1e-9)) for c in caps]
    grids = [np.arange(m + 1) * step for m in n_idx]

    def scan(prefix):
        # prefix: (m, k-1) lengths; enumerate the last coordinate in the band
        r = 1.0 - np.exp2(-prefix).sum(axis=1)
        hi_k = r + band
        lo_k = r - band
        ok = hi_k > 0
        prefix, lo_k, hi_k = prefix[ok], lo_k[ok], hi_k[ok]
        if prefix.size == 0:
            return math.inf
        l_min = -np.log2(np.minimum(hi_k, 1.0))
        with np.errstate(divide="ignore"):
            l_max = np.where(lo_k > 0, -np.log2(np.maximum(lo_k, 1e-300)), np.inf)
        i_lo = np.maximum(np.ceil(l_min / step - 1e-9), 0).astype(np.int64)
        i_hi = np.minimum(np.floor(np.minimum(l_max, 1e9) / step + 1e-9), n_idx[-1]).astype(np.int64)
        counts = np.maximum(i_hi - i_lo + 1, 0)
        total = int(counts.sum())
        if total == 0:
            return math.inf
        rows = np.repeat(np.arange(prefix.shape[0]), counts)
        starts = np.repeat(i_lo, counts)
        offs = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
        last = (starts + offs) * step
        L = np.column_stack((prefix[rows], last))
        kraft = np.exp2(-L).sum(axis=1)
        inband = np.abs(kraft - 1.0) <= band
        L, kraft = L[inband], kraft[inband]
        if L.size == 0:
            return math.inf
        shift = np.log2(np.maximum(kraft, 1.0))
        return float(np.min(_objective(qf, p, L + shift[:, None])))

    best = math.inf
    if k == 2:
        best = scan(grids[0][:, None])
    else:
        g1, g2 = grids[0], grids[1]
        for start in range(0, g1.size, chunk):
            a = g1[start:start + chunk]
            prefix = np.column_stack((np.repeat(a, g2.size), np.tile(g2, a.size)))
            best = min(best, scan(prefix))
    return best


def random_oracle_problems(count: int, seed: int = 2024):
    """Deterministic random (qf, probs) pairs with 2 or 3 symbols."""
    rng = np.random.Generator(np.random.Philox(seed))
    cases = list(Case)
    out = []
    for i in range(count):
        k = 2 + int(rng.integers(0, 2))
        p = np.sort(rng.dirichlet(np.ones(k)))[::-1]
        p = np.maximum(p, 0.02)
        p = np.sort(p / p.sum())[::-1]
        case = cases[i % 3]
        cfg = PenaltyConfig(case, rho=float(rng.uniform(0.1, 1.0)), w=float(rng.uniform(0.5, 2.0)),
                            alpha=float(rng.uniform(0.0, 2.0)), beta=float(rng.uniform(0.1, 2.0)))
        gamma = float(rng.uniform(0.2, 5.0))
        out.append((quadratic_form(cfg, gamma), p))
    return out


def bruteforce_suite(count: int = 6) -> SuiteResult:
    t0 = time.perf_counter()
    for i, (qf, p) in enumerate(random_oracle_problems(count)):
        sol = solve(qf, p)
        oracle = grid_oracle_min(qf, p)
        if sol.j_soi > oracle + ORACLE_SLACK:
            return SuiteResult("bruteforce", False, i + 1, time.perf_counter() - t0,
                               f"problem {i}: solver {sol.j_soi:.9g} > oracle {oracle:.9g}")
    return SuiteResult("bruteforce", True, count, time.perf_counter() - t0)


def renewal_suite(horizon: float = 2e4) -> SuiteResult:
    t0 = time.perf_counter()
    pmf = zipf_pmf(100, 0.4)
    n = 0
    for case in Case:
        for k in (1, 18, 100):
            for kappa in ((1, 2) if case is Case.PDT else (1,)):
                n += 1
                cfg = PenaltyConfig(case, rho=0.5, kappa=kappa)
                src = truncate(pmf, k)
                lengths = solve_source(PenaltyConfig(case, rho=0.5), src, 5.0).lengths
                st = simulate(src, lengths, cfg, SimConfig(5.0, horizon, seed=n)).stats
                gap = abs(st.time_avg_penalty - st.sum_q_over_T) / (1.0 + abs(st.time_avg_penalty))
                if not gap <= 1e-6:
                    return SuiteResult("renewal", False, n, time.perf_counter() - t0,
                                       f"{case.value} kappa={kappa} k={k}: relative gap {gap:.3e}")
    return SuiteResult("renewal", True, n, time.perf_counter() - t0)


SUITES = {
    "lambertw": lambertw_suite,
    "kkt": kkt_suite,
    "bruteforce": bruteforce_suite,
    "renewal": renewal_suite,
}


def run_suites(names=None, mu_fault: float = 0.0) -> list[SuiteResult]:
    names = list(SUITES) if not names else list(names)
    out = []
    for name in names:
        if name not in SUITES:
            raise KeyError(name)
        if name == "kkt":
            out.append(kkt_suite(mu_fault=mu_fault))
        else:
            out.append(SUITES[name]())
    return out
