"""Principal branch of the Lambert W function.

Vectorized over numpy arrays: an asymptotic/series starting guess refined
with Halley's method. Only ``W_0`` is provided.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, InvalidParameterError

INV_E = math.exp(-1.0)
MAX_ITER = 50
_STEP_TOL = 1e-16


def _initial_guess(y: np.ndarray) -> np.ndarray:
    w = np.empty_like(y)

    near_branch = y < -0.25
    if near_branch.any():
        # series in p = sqrt(2(e*y + 1)) about the branch point
        p = np.sqrt(np.maximum(2.0 * (math.e * y[near_branch] + 1.0), 0.0))
        w[near_branch] = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3

    small = ~near_branch & (y <= 3.0)
    if small.any():
        ys = y[small]
        # log1p is exact at 0 and a fair guess up to e
        w[small] = np.where(np.abs(ys) < 1e-3, ys - ys * ys + 1.5 * ys ** 3, np.log1p(ys))

    large = y > 3.0
    if large.any():
        l1 = np.log(y[large])
        l2 = np.log(l1)
        w[large] = l1 - l2 + l2 / l1
    return w


def _halley(y: np.ndarray, w: np.ndarray) -> np.ndarray:
    active = np.ones(y.shape, dtype=bool)
    for _ in range(MAX_ITER):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        wi = w[idx]
        yi = y[idx]
        ew = np.exp(wi)
        f = wi * ew - yi
        wp1 = wi + 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            denom = ew * wp1 - (wi + 2.0) * f / (2.0 * wp1)
            dw = np.where(denom != 0.0, f / denom, 0.0)
        dw = np.where(np.isfinite(dw), dw, 0.0)
        w_new = np.maximum(wi - dw, -1.0)
        w[idx] = w_new
        # below 1e-16 relative the step is ulp noise; accept a few ulps
        tol = np.maximum(_STEP_TOL * (1.0 + np.abs(w_new)), 4.0 * np.spacing(np.abs(w_new)))
        done = np.abs(w_new - wi) <= tol
        active[idx[done]] = False
    return w


def lambert_w0(y):
    """Principal-branch Lambert W: the ``w >= -1`` solving ``w * exp(w) = y``.

    Parameters
    ----------
    y : float or array_like
        Arguments, all ``>= -1/e``.

    Returns
    -------
    float or ndarray
        Same shape as ``y``; a Python float for scalar input.

    Raises
    ------
    InvalidParameterError
        Any argument is NaN or infinite.
    DomainError
        Any argument is below ``-1/e``.
    """
    scalar = np.ndim(y) == 0
    arr = np.atleast_1d(np.asarray(y, dtype=float)).ravel()
    if not np.all(np.isfinite(arr)):
        raise InvalidParameterError("lambert_w0 argument must be finite", "y")
    # allow one ulp of slack below -1/e, where float(-1/e) itself lands
    if np.any(arr < -INV_E * (1.0 + 2e-16)):
        raise DomainError("lambert_w0 is undefined below -1/e", "y")
    w = _halley(arr, _initial_guess(arr))
    w[arr == 0.0] = 0.0
    w[arr <= -INV_E] = -1.0
    if scalar:
        return float(w[0])
    return w.reshape(np.shape(y))


def lambert_w0_exp(t):
    """``W_0(exp(t))`` without forming ``exp(t)``.

    For ``t`` beyond the float range of ``exp`` this solves
    ``w + log(w) = t`` by Halley iteration; elsewhere it defers to
    :func:`lambert_w0`.
    """
    scalar = np.ndim(t) == 0
    tt = np.atleast_1d(np.asarray(t, dtype=float)).ravel()
    if np.any(np.isnan(tt)) or np.any(tt == np.inf):
        raise InvalidParameterError("lambert_w0_exp argument must be finite", "t")
    out = np.empty_like(tt)
    big = tt > 600.0
    if (~big).any():
        out[~big] = lambert_w0(np.exp(tt[~big]))
    if big.any():
        tb = tt[big]
        w = tb - np.log(tb)
        for _ in range(MAX_ITER):
            f = w + np.log(w) - tb
            fp = 1.0 + 1.0 / w
            fpp = -1.0 / (w * w)
            dw = f / (fp - 0.5 * f * fpp / fp)
            w = w - dw
            if np.all(np.abs(dw) <= np.maximum(_STEP_TOL * (1.0 + np.abs(w)), 4.0 * np.spacing(w))):
                break
        out[big] = w
    if scalar:
        return float(out[0])
    return out.reshape(np.shape(t))
