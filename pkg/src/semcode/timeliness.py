"""Age penalty functions and the quadratic objective they induce.

Three lateness penalties of the age ``x`` are supported::

    EDT  g(x) = exp(rho * x)
    LDT  g(x) = ln(rho * x)
    PDT  g(x) = rho * x**kappa

The mean cycle penalty E[Q] for EDT and LDT uses a second-order Taylor
expansion of the cycle area; for PDT with kappa=1 it is exact. The
simulator integrates ``g`` exactly, so the gap can be measured.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    DegenerateObjectiveError,
    DomainError,
    InvalidParameterError,
    UnsupportedCaseError,
)


class Case(str, Enum):
    EDT = "edt"
    LDT = "ldt"
    PDT = "pdt"

    @classmethod
    def parse(cls, value) -> "Case":
        if isinstance(value, Case):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise InvalidParameterError(
                f"case must be one of edt, ldt, pdt; got {value!r}", "case"
            ) from None


def _finite(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise InvalidParameterError(f"{name} must be a finite number, got {value!r}", name)
    return float(value)


@dataclass(frozen=True)
class PenaltyConfig:
    case: Case
    rho: float = 0.5
    kappa: int = 1
    w: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "case", Case.parse(self.case))
        rho = _finite("rho", self.rho)
        w = _finite("w", self.w)
        alpha = _finite("alpha", self.alpha)
        beta = _finite("beta", self.beta)
        if isinstance(self.kappa, bool) or int(self.kappa) != self.kappa or self.kappa < 1:
            raise InvalidParameterError(f"kappa must be a positive integer, got {self.kappa!r}", "kappa")
        if rho < 0:
            raise InvalidParameterError("rho must be >= 0", "rho")
        if self.case is Case.LDT and rho == 0:
            raise InvalidParameterError("LDT needs rho > 0", "rho")
        if w <= 0:
            raise InvalidParameterError("w must be > 0", "w")
        if alpha < 0:
            raise InvalidParameterError("alpha must be >= 0", "alpha")
        if beta < 0:
            raise InvalidParameterError("beta must be >= 0", "beta")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "kappa", int(self.kappa))

    def coding_cost(self, lengths, probs) -> float:
        """Weighted quadratic length cost ``w * sum p (alpha l + beta l^2)``."""
        l = np.asarray(lengths, dtype=float)
        p = np.asarray(probs, dtype=float)
        return float(self.w * np.dot(p, self.alpha * l + self.beta * l * l))

    def replace(self, **changes) -> "PenaltyConfig":
        fields = dict(case=self.case, rho=self.rho, kappa=self.kappa, w=self.w,
                      alpha=self.alpha, beta=self.beta)
        fields.update(changes)
        return PenaltyConfig(**fields)


@dataclass(frozen=True)
class QuadraticForm:
    """Objective ``A E[L^2] + B E[L]^2 + C E[L] + D`` for a fixed gamma."""

    A: float
    B: float
    C: float
    D: float
    gamma: float

    def value(self, EL: float, EL2: float) -> float:
        return self.A * EL2 + self.B * EL * EL + self.C * EL + self.D


def penalty_value(cfg: PenaltyConfig, delta):
    d = np.asarray(delta, dtype=float)
    if cfg.case is Case.EDT:
        out = np.exp(cfg.rho * d)
    elif cfg.case is Case.LDT:
        if np.any(d <= 0):
            raise DomainError("LDT penalty needs delta > 0", "delta")
        out = np.log(cfg.rho * d)
    else:
        if np.any(d < 0):
            raise DomainError("PDT penalty needs delta >= 0", "delta")
        out = cfg.rho * d ** cfg.kappa
    return float(out) if out.ndim == 0 else out


def penalty_segment_integral(cfg: PenaltyConfig, age_start, duration):
    """Exact ``integral_0^duration g(age_start + t) dt``.

    Vectorized over ``age_start`` and ``duration``. Removable singularities
    (EDT at rho=0, LDT at age 0) use their limits.
    """
    a = np.asarray(age_start, dtype=float)
    d = np.asarray(duration, dtype=float)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(d))):
        raise InvalidParameterError("segment bounds must be finite", "age_start")
    if np.any(a < 0) or np.any(d < 0):
        raise DomainError("segment needs age_start >= 0 and duration >= 0", "age_start")
    rho = cfg.rho
    if cfg.case is Case.EDT:
        if rho == 0.0:
            out = d * 1.0
        else:
            out = np.exp(rho * a) * np.expm1(rho * d) / rho
    elif cfg.case is Case.LDT:
        b = a + d
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            # d ln(rho b) + a ln(b/a) - d, with a ln(b/a) -> 0 as a -> 0
            # log(b) - log(a) once d > a: no cancellation, and d/a may overflow
            a_safe = np.where(a > 0, a, 1.0)
            ratio = np.where(d > a, np.log(np.where(b > 0, b, 1.0)) - np.log(a_safe),
                             np.log1p(d / a_safe))
            tail = np.where(a > 0, a * ratio, 0.0)
            head = np.where(d > 0, d * np.log(rho * np.where(b > 0, b, 1.0)), 0.0)
        out = head + tail - d
    else:
        m = cfg.kappa + 1
        # binomial expansion of (a+d)^m - a^m keeps every term non-negative
        acc = np.zeros(np.broadcast(a, d).shape)
        for j in range(1, m + 1):
            acc = acc + math.comb(m, j) * a ** (m - j) * d ** j
        out = rho * acc / m
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


def _require_analytic(cfg: PenaltyConfig):
    if cfg.case is Case.PDT and cfg.kappa != 1:
        raise UnsupportedCaseError(
            f"analytic PDT supports kappa=1 only (got kappa={cfg.kappa})"
        )


def expected_q(cfg: PenaltyConfig, EL: float, EL2: float, gamma: float) -> float:
    """Mean cycle penalty as a function of the length moments."""
    _require_analytic(cfg)
    if not gamma > 0:
        raise InvalidParameterError("gamma must be > 0", "gamma")
    r = cfg.rho
    if cfg.case is Case.EDT:
        return 0.5 * r * EL2 + r * EL * EL + (1 + 2 * r * gamma) * EL + r * gamma ** 2 + gamma
    if cfg.case is Case.LDT:
        return r * EL2 + 2 * r * EL * EL + 2 * (2 * r * gamma - 1) * EL + 2 * r * gamma ** 2 - 2 * gamma
    return 0.5 * r * EL2 + r * EL * EL + 2 * r * gamma * EL + r * gamma ** 2


def quadratic_form(cfg: PenaltyConfig, gamma: float) -> QuadraticForm:
    _require_analytic(cfg)
    if not (math.isfinite(gamma) and gamma > 0):
        raise InvalidParameterError("gamma must be finite and > 0", "gamma")
    r, w, al, be = cfg.rho, cfg.w, cfg.alpha, cfg.beta
    if cfg.case is Case.EDT:
        qf = QuadraticForm(r / 2 + w * be, r, 1 + 2 * r * gamma + w * al, r * gamma ** 2 + gamma, gamma)
    elif cfg.case is Case.LDT:
        qf = QuadraticForm(r + w * be, 2 * r, 4 * r * gamma - 2 + w * al, 2 * r * gamma ** 2 - 2 * gamma, gamma)
    else:
        qf = QuadraticForm(r / 2 + w * be, r, 2 * r * gamma + w * al, r * gamma ** 2, gamma)
    if not qf.A > 0:
        raise DegenerateObjectiveError(
            "E[L^2] coefficient is zero (rho = beta = 0); objective has no Lambert-W solution"
        )
    return qf
