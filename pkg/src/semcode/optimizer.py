"""Optimal real codeword lengths under a Kraft equality.

Minimizes ``A E[L^2] + B E[L]^2 + C E[L] + D`` subject to
``sum 2**-l_i = 1``. Stationarity gives each length in closed form through
the principal Lambert W branch once the multiplier ``mu`` is known; ``mu``
is then located by a bracketed root search on the Kraft sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConstraintViolationError,
    DegenerateObjectiveError,
    InvalidParameterError,
    NoSolutionError,
    NumericRangeError,
)
from .probability import entropy_bits
from .special import lambert_w0_exp
from .timeliness import PenaltyConfig, QuadraticForm, expected_q, quadratic_form

LN2 = math.log(2.0)
KRAFT_TOL = 1e-12
MAX_ITER = 200
MAX_EXPANSIONS = 200
NEG_LENGTH_TOL = 1e-9


@dataclass(frozen=True)
class CodewordSolution:
    lengths: tuple[float, ...]
    mu: float
    EL: float
    EL2: float
    kraft_sum: float
    expected_q: float
    cost_term: float
    j_soi: float
    kkt_residual: float
    iterations: int = 0

    def lengths_array(self) -> np.ndarray:
        return np.asarray(self.lengths, dtype=float)


def _probs(probs) -> np.ndarray:
    p = np.asarray(probs, dtype=float).ravel()
    if p.size == 0 or np.any(~np.isfinite(p)) or np.any(p <= 0):
        raise InvalidParameterError("probabilities must be finite and > 0", "probs")
    if abs(math.fsum(p) - 1.0) > 1e-9:
        raise InvalidParameterError("probabilities must sum to 1", "probs")
    return p


def _check_qf(qf: QuadraticForm):
    if not qf.A > 0:
        raise DegenerateObjectiveError("quadratic form needs A > 0")


def lengths_given_mu(qf: QuadraticForm, probs, mu: float) -> np.ndarray:
    """Stationary lengths for a fixed multiplier.

    ``E[L]`` is taken from the aggregated stationarity condition under the
    Kraft equality, so the result is only meaningful near the root; away
    from it lengths may be negative.
    """
    _check_qf(qf)
    if not (math.isfinite(mu) and mu > 0):
        raise InvalidParameterError(f"mu must be finite and > 0, got {mu!r}", "mu")
    p = np.asarray(probs, dtype=float)
    two_a = 2.0 * qf.A
    el_mu = (mu * LN2 - qf.C) / (two_a + 2.0 * qf.B)
    e = 2.0 * qf.B * el_mu + qf.C
    # log of the Lambert argument mu ln2^2 / (2A p) * 2**(e / 2A); stays finite
    log_y = math.log(mu * LN2 * LN2 / two_a) - np.log(p) + e * LN2 / two_a
    x = lambert_w0_exp(log_y)
    # -log2(2A p x / (mu ln2^2)) simplifies via x e^x = y
    lengths = np.asarray(x, dtype=float) / LN2 - e / two_a
    if not np.all(np.isfinite(lengths)):
        raise NumericRangeError(f"non-finite lengths at mu={mu!r} (log argument range exceeded)")
    return lengths


def kraft_sum(lengths) -> float:
    return math.fsum(np.exp2(-np.asarray(lengths, dtype=float)))


def objective_at(qf: QuadraticForm, probs, lengths) -> float:
    p = np.asarray(probs, dtype=float)
    l = np.asarray(lengths, dtype=float)
    if p.shape != l.shape:
        raise InvalidParameterError(
            f"{l.size} lengths for {p.size} probabilities", "lengths"
        )
    if not np.all(np.isfinite(l)):
        raise InvalidParameterError("lengths must be finite", "lengths")
    EL = float(np.dot(p, l))
    EL2 = float(np.dot(p, l * l))
    return qf.value(EL, EL2)


def stationarity_residual(qf: QuadraticForm, probs, lengths, mu: float) -> float:
    p = np.asarray(probs, dtype=float)
    l = np.asarray(lengths, dtype=float)
    EL = float(np.dot(p, l))
    r = 2 * qf.A * p * l + 2 * qf.B * p * EL + qf.C * p - mu * LN2 * np.exp2(-l)
    return float(np.max(np.abs(r)))


def _finish(qf, p, lengths, mu, cfg, iterations) -> CodewordSolution:
    EL = float(np.dot(p, lengths))
    EL2 = float(np.dot(p, lengths * lengths))
    obj = qf.value(EL, EL2)
    if cfg is not None:
        eq = expected_q(cfg, EL, EL2, qf.gamma)
        cost = cfg.coding_cost(lengths, p)
    else:
        eq, cost = obj, 0.0
    return CodewordSolution(
        lengths=tuple(float(v) for v in lengths),
        mu=float(mu),
        EL=EL,
        EL2=EL2,
        kraft_sum=kraft_sum(lengths),
        expected_q=float(eq),
        cost_term=float(cost),
        j_soi=float(eq + cost),
        kkt_residual=stationarity_residual(qf, p, lengths, mu),
        iterations=iterations,
    )


def solve(
    qf: QuadraticForm,
    probs,
    cfg: PenaltyConfig | None = None,
    *,
    tol: float = KRAFT_TOL,
    max_iter: int = MAX_ITER,
) -> CodewordSolution:
    """Optimal real lengths for the conditional pmf ``probs``.

    Parameters
    ----------
    qf : QuadraticForm
        Objective coefficients, see :func:`semcode.timeliness.quadratic_form`.
    probs : array_like
        Conditional probabilities of the admitted symbols.
    cfg : PenaltyConfig, optional
        Used only to split the objective into ``expected_q`` and
        ``cost_term``. Without it both the objective and ``expected_q``
        carry the full value and ``cost_term`` is 0.
    tol, max_iter
        The root search stops at ``|kraft - 1| <= tol`` or after ``max_iter`` steps.

    Raises
    ------
    NoSolutionError
        The Kraft sum never crosses 1 within the bracket expansions.
    ConstraintViolationError
        A length at the root is negative.
    """
    _check_qf(qf)
    p = _probs(probs)
    if p.size == 1:
        # Kraft equality pins the only length to 0 bits
        return _finish(qf, p, np.zeros(1), max(qf.C, 0.0) / LN2, cfg, 0)

    def h(mu):
        return kraft_sum(lengths_given_mu(qf, p, mu)) - 1.0

    mu0 = (2.0 * (qf.A + qf.B) * entropy_bits(p) + qf.C) / LN2
    if not mu0 > 0:
        mu0 = 1.0
    lo = hi = mu0
    h_lo = h_hi = h(mu0)
    for _ in range(MAX_EXPANSIONS):
        if h_lo > -tol:
            break
        lo /= 4.0
        h_lo = h(lo)
    else:
        raise NoSolutionError(
            f"Kraft sum stays below 1 as mu -> 0 (h({lo:.3g})={h_lo:.3g}); "
            "the unconstrained optimum is strictly inside the Kraft region"
        )
    for _ in range(MAX_EXPANSIONS):
        if h_hi < tol:
            break
        hi *= 4.0
        h_hi = h(hi)
    else:
        raise NoSolutionError(f"Kraft sum stays above 1 up to mu={hi:.3g}")
    mu = lo if abs(h_lo) < abs(h_hi) else hi
    best = min(abs(h_lo), abs(h_hi))
    if best > tol and not (h_lo > 0 > h_hi):
        raise NoSolutionError("Kraft sum is not decreasing across the bracket")
    # Illinois regula falsi on log(mu); every step keeps the sign bracket,
    # and a plain bisection step is forced whenever the bracket shrinks slowly
    x_lo, x_hi = math.log(lo), math.log(hi)
    side = 0
    iterations = 0
    width = x_hi - x_lo
    while best > tol and iterations < max_iter:
        iterations += 1
        if iterations % 4 == 0 and (x_hi - x_lo) > 0.5 * width:
            x_mid = 0.5 * (x_lo + x_hi)
        else:
            x_mid = (x_lo * h_hi - x_hi * h_lo) / (h_hi - h_lo)
            if not x_lo < x_mid < x_hi:
                x_mid = 0.5 * (x_lo + x_hi)
        if iterations % 4 == 0:
            width = x_hi - x_lo
        if not x_lo < x_mid < x_hi:
            break
        h_mid = h(math.exp(x_mid))
        if abs(h_mid) < best:
            mu, best = math.exp(x_mid), abs(h_mid)
        if h_mid > 0:
            x_lo, h_lo = x_mid, h_mid
            if side == 1:
                h_hi *= 0.5
            side = 1
        elif h_mid < 0:
            x_hi, h_hi = x_mid, h_mid
            if side == -1:
                h_lo *= 0.5
            side = -1
        else:
            break

    lengths = lengths_given_mu(qf, p, mu)
    worst = int(np.argmin(lengths))
    if lengths[worst] < -NEG_LENGTH_TOL:
        raise ConstraintViolationError(
            f"length {lengths[worst]:.6g} < 0 at symbol {worst} (mu={mu:.6g})", worst
        )
    lengths = np.maximum(lengths, 0.0)
    return _finish(qf, p, lengths, mu, cfg, iterations)


def solve_source(cfg: PenaltyConfig, source, lam: float, **kwargs) -> CodewordSolution:
    """Convenience wrapper: build the quadratic form for ``source`` at rate ``lam`` and solve."""
    qf = quadratic_form(cfg, source.gamma(lam))
    return solve(qf, source.cond_array(), cfg, **kwargs)
