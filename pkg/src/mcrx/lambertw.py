"""Principal branch of the Lambert W function for real arguments.

``lambert_w0(x)`` solves ``w * exp(w) = x`` for ``w >= -1`` on the domain
``x >= -1/e``.  Initial guesses come from the branch-point expansion, a small
argument series or the asymptotic ``log x - log log x``; Halley iteration then
polishes them to machine precision.

``wright_omega(z)`` returns ``W0(exp(z))`` without forming ``exp(z)``, which
keeps the pulse model usable when its Lambert argument would overflow.

Both functions accept scalars or array-likes and return the same shape
(a Python float for scalar input).
"""
import math

import numpy as np

from .errors import DomainError

__all__ = ["lambert_w0", "wright_omega", "BRANCH_POINT", "BRANCH_TOLERANCE"]

# 1/e as an unevaluated double-double sum, so x + 1/e is exact near the branch point.
_INV_E_HI = 0.36787944117144233
_INV_E_LO = -1.2428753672788363e-17

BRANCH_POINT = -_INV_E_HI
BRANCH_TOLERANCE = 1e-12

_STEP_TOL = 1e-14
_MAX_ITER = 40

# W0(-1/e + d) = -1 + p - p^2/3 + 11/72 p^3 - ...,  p = sqrt(2 e d)
_BRANCH_SERIES = (
    -1.0,
    1.0,
    -1.0 / 3.0,
    11.0 / 72.0,
    -43.0 / 540.0,
    769.0 / 17280.0,
    -221.0 / 8505.0,
    680863.0 / 43545600.0,
    -1963.0 / 204120.0,
)


def _branch_series(p, nterms=len(_BRANCH_SERIES)):
    out = np.zeros_like(p)
    for c in reversed(_BRANCH_SERIES[:nterms]):
        out = out * p + c
    return out


def _halley_direct(w, x):
    """Halley iteration on w*exp(w) - x; used for moderate arguments."""
    active = np.ones(w.shape, dtype=bool)
    for _ in range(_MAX_ITER):
        if not active.any():
            break
        wa = w[active]
        xa = x[active]
        ew = np.exp(wa)
        f = wa * ew - xa
        wp1 = wa + 1.0
        denom = ew * wp1 - (wa + 2.0) * f / (2.0 * wp1)
        with np.errstate(divide="ignore", invalid="ignore"):
            dw = np.where(f == 0.0, 0.0, f / denom)
        wa = wa - dw
        w[active] = wa
        done = np.abs(dw) <= _STEP_TOL * np.abs(wa)
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    return w


def _halley_log(w, logx):
    """Halley iteration on w + log(w) - log(x); valid for w > 0."""
    active = np.ones(w.shape, dtype=bool)
    for _ in range(_MAX_ITER):
        if not active.any():
            break
        wa = w[active]
        g = wa + np.log(wa) - logx[active]
        g1 = 1.0 + 1.0 / wa
        g2 = -1.0 / (wa * wa)
        dw = g / (g1 - 0.5 * g * g2 / g1)
        wa = np.maximum(wa - dw, 0.5 * wa)
        w[active] = wa
        done = np.abs(dw) <= _STEP_TOL * np.abs(wa)
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    return w


def _w0_array(x):
    out = np.full(x.shape, np.nan)
    finite = np.isfinite(x)
    out[np.isposinf(x)] = np.inf

    d = (x + _INV_E_HI) + _INV_E_LO
    bad = finite & (d < -BRANCH_TOLERANCE)
    if bad.any():
        worst = x[bad].min()
        raise DomainError(
            f"lambert_w0 argument {worst!r} lies below the branch point -1/e"
        )
    d = np.where(finite, np.maximum(d, 0.0), 0.0)
    p = np.sqrt(2.0 * math.e * d)

    near = finite & (p < 1e-3)
    out[near] = _branch_series(p[near])

    # moderate arguments: Halley on the direct form
    mid = finite & ~near & (x <= math.e)
    if mid.any():
        xm = x[mid]
        pm = p[mid]
        guess = np.where(
            xm < -0.25,
            _branch_series(pm, 4),
            np.where(np.abs(xm) < 1e-3, xm - xm * xm + 1.5 * xm ** 3, np.log1p(xm)),
        )
        # W0(x) < x for x > 0 and log1p is a lower bound there: midpoint is closer
        guess = np.where(xm > 0.5, 0.5 * (guess + 0.6 * xm / (1 + 0.25 * xm)), guess)
        out[mid] = _halley_direct(guess.astype(float), xm)

    big = finite & (x > math.e)
    if big.any():
        lx = np.log(x[big])
        llx = np.log(lx)
        guess = lx - llx + llx / lx
        out[big] = _halley_log(guess, lx)
    return out


def lambert_w0(x):
    """Principal branch ``W0(x)`` for real ``x >= -1/e``.

    Arguments up to ``BRANCH_TOLERANCE`` below ``-1/e`` are treated as the
    branch point itself and return ``-1``; anything further below raises
    :class:`DomainError`.
    """
    arr = np.asarray(x, dtype=float)
    res = _w0_array(np.atleast_1d(arr).ravel()).reshape(arr.shape)
    if res.ndim == 0:
        return float(res)
    return res


def wright_omega(z):
    """``W0(exp(z))`` for real ``z``, computed without overflow."""
    arr = np.asarray(z, dtype=float)
    zf = np.atleast_1d(arr).ravel()
    out = np.empty_like(zf)
    small = zf < 1.0
    if small.any():
        out[small] = _w0_array(np.exp(zf[small]))
    large = ~small
    if large.any():
        zl = zf[large]
        guess = zl - np.log(zl) + np.log(zl) / zl
        guess = np.where(np.isfinite(zl), np.maximum(guess, 0.5), zl)
        res = np.array(guess)
        fin = np.isfinite(zl)
        res[fin] = _halley_log(guess[fin], zl[fin])
        out[large] = res
    res = out.reshape(arr.shape)
    if res.ndim == 0:
        return float(res)
    return res
