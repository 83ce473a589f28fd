"""Finite source distributions and semantic truncation."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidParameterError

SUM_TOL = 1e-12
RENORM_TOL = 1e-9


@dataclass(frozen=True)
class SourcePmf:
    """Descending-sorted probability mass function over ``n`` symbols.

    Symbol ``i`` (0-based here) is the ``i+1``-th most probable realization.
    """

    probs: tuple[float, ...]
    label: str = ""

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        if not probs:
            raise InvalidParameterError("pmf must contain at least one symbol", "pmf")
        if any(not math.isfinite(p) or p <= 0.0 for p in probs):
            raise InvalidParameterError("pmf entries must be finite and > 0", "pmf")
        if any(a < b for a, b in zip(probs, probs[1:])):
            raise InvalidParameterError("pmf must be sorted non-increasing", "pmf")
        total = math.fsum(probs)
        if abs(total - 1.0) > SUM_TOL:
            raise InvalidParameterError(
                f"pmf sums to {total!r}, expected 1 within {SUM_TOL}", "pmf"
            )
        object.__setattr__(self, "probs", probs)

    @property
    def n(self) -> int:
        return len(self.probs)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)


@dataclass(frozen=True)
class TruncatedSource:
    """The ``k`` least probable symbols of ``parent``, renormalized."""

    parent: SourcePmf
    k: int
    indices: tuple[int, ...] = field(init=False)
    q_k: float = field(init=False)
    cond_probs: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        n = self.parent.n
        if isinstance(self.k, bool) or int(self.k) != self.k or not 1 <= self.k <= n:
            raise InvalidParameterError(f"k must be an integer in [1, {n}], got {self.k!r}", "k")
        k = int(self.k)
        object.__setattr__(self, "k", k)
        indices = tuple(range(n - k, n))
        sel = self.parent.probs[n - k:]
        q = math.fsum(sel)
        cond = [p / q for p in sel]
        if k == n:
            # no filtering: keep the parent probabilities bit-for-bit
            q = 1.0
            cond = list(self.parent.probs)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "q_k", q)
        object.__setattr__(self, "cond_probs", tuple(cond))

    def cond_array(self) -> np.ndarray:
        return np.asarray(self.cond_probs, dtype=float)

    def gamma(self, lam: float) -> float:
        """Mean inter-arrival time of admitted packets, ``1 / (lam * q_k)``."""
        if not (math.isfinite(lam) and lam > 0):
            raise InvalidParameterError(f"lambda must be finite and > 0, got {lam!r}", "lambda")
        return 1.0 / (lam * self.q_k)


def _check_n(n) -> int:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise InvalidParameterError(f"n must be a positive integer, got {n!r}", "n")
    return int(n)


def zipf_pmf(n: int, s: float) -> SourcePmf:
    """Zipf(n, s) pmf, ``P(x) = x**-s / sum_j j**-s`` for ``x = 1..n``."""
    n = _check_n(n)
    if not (isinstance(s, (int, float)) and math.isfinite(s) and s >= 0):
        raise InvalidParameterError(f"s must be finite and >= 0, got {s!r}", "s")
    if s == 0:
        return uniform_pmf(n, label=f"zipf({n},{s!r})")
    weights = [x ** (-float(s)) for x in range(1, n + 1)]
    total = math.fsum(weights)
    probs = [w / total for w in weights]
    return SourcePmf(tuple(probs), label=f"zipf({n},{s!r})")


def uniform_pmf(n: int, label: str | None = None) -> SourcePmf:
    n = _check_n(n)
    return SourcePmf((1.0 / n,) * n, label=label or f"uniform({n})")


def truncate(pmf: SourcePmf, k: int) -> TruncatedSource:
    """Keep the ``k`` least probable symbols (always the last ``k`` indices)."""
    return TruncatedSource(pmf, k)


def pmf_from_values(values, label: str = "custom") -> SourcePmf:
    """Build a pmf from arbitrary-order positive values.

    The values are sorted descending (stable, so ties keep input order) and
    the permutation is appended to ``label``. Sums within ``RENORM_TOL`` of 1
    are renormalized; anything further off is rejected.
    """
    vals = [float(v) for v in values]
    if not vals:
        raise InvalidParameterError("pmf must contain at least one symbol", "pmf")
    if any(not math.isfinite(v) or v <= 0 for v in vals):
        raise InvalidParameterError("pmf entries must be finite and > 0", "pmf")
    total = math.fsum(vals)
    if abs(total - 1.0) > RENORM_TOL:
        raise InvalidParameterError(
            f"pmf sums to {total!r}; more than {RENORM_TOL} away from 1", "pmf"
        )
    order = sorted(range(len(vals)), key=lambda i: -vals[i])
    probs = [vals[i] / total for i in order]
    # renormalize once more so the fsum check in SourcePmf is met after division
    total2 = math.fsum(probs)
    probs = [p / total2 for p in probs]
    # division can break ties-order by one ulp; enforce monotonicity
    for i in range(1, len(probs)):
        if probs[i] > probs[i - 1]:
            probs[i] = probs[i - 1]
    if order != list(range(len(vals))):
        label = f"{label};perm={','.join(str(i) for i in order)}"
    return SourcePmf(tuple(probs), label=label)


def load_pmf_csv(path) -> SourcePmf:
    """Load a ``index,prob`` CSV file (any row order, any probability order)."""
    path = Path(path)
    rows = []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["index", "prob"]:
            raise InvalidParameterError(f"{path}: header must be 'index,prob'", "pmf")
        for row in reader:
            try:
                rows.append((int(row["index"]), float(row["prob"])))
            except (TypeError, ValueError) as exc:
                raise InvalidParameterError(f"{path}: bad row {row!r}", "pmf") from exc
    rows.sort(key=lambda r: r[0])
    idx = [r[0] for r in rows]
    if len(set(idx)) != len(idx):
        raise InvalidParameterError(f"{path}: duplicate index", "pmf")
    pmf = pmf_from_values([r[1] for r in rows], label=f"file({path.name})")
    if ";perm=" in pmf.label:
        # report the permutation in terms of the file's own indices
        head, perm = pmf.label.split(";perm=")
        mapped = ",".join(str(idx[int(i)]) for i in perm.split(","))
        pmf = SourcePmf(pmf.probs, label=f"{head};perm={mapped}")
    return pmf


def parse_pmf_spec(spec: str) -> SourcePmf:
    """Parse ``zipf:N:S``, ``uniform:N`` or ``file:PATH``."""
    kind, _, rest = spec.partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "zipf":
            n, s = rest.split(":")
            return zipf_pmf(int(n), float(s))
        if kind == "uniform":
            return uniform_pmf(int(rest))
        if kind == "file":
            return load_pmf_csv(rest)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidParameterError):
            raise
        raise InvalidParameterError(f"cannot parse pmf spec {spec!r}", "pmf") from exc
    raise InvalidParameterError(f"unknown pmf kind in {spec!r}", "pmf")


def entropy_bits(probs) -> float:
    p = np.asarray(probs, dtype=float)
    return float(-np.sum(p * np.log2(p)))
