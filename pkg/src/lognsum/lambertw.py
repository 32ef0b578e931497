"""Principal branch of the Lambert W function on [0, inf)."""

import math

import numpy as np

from .errors import DomainError

_MAX_ITER = 50
_E = math.e


def _w_scalar(a: float) -> float:
    if a == 0.0:
        return 0.0
    if a <= _E:
        # Halley on w e^w - a
        w = math.log1p(a)
        for _ in range(_MAX_ITER):
            ew = math.exp(w)
            f = w * ew - a
            wp1 = w + 1.0
            dw = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
            w -= dw
            if abs(dw) <= 4e-16 * abs(w):
                break
        return w
    # Halley on w + log w - log a; avoids overflow of e^w for huge a
    la = math.log(a)
    w = la - math.log(la)
    for _ in range(_MAX_ITER):
        g = w + math.log(w) - la
        g1 = 1.0 + 1.0 / w
        g2 = -1.0 / (w * w)
        dw = 2.0 * g * g1 / (2.0 * g1 * g1 - g * g2)
        w -= dw
        if abs(dw) <= 4e-16 * w:
            break
    return w


def _w_array(a: np.ndarray) -> np.ndarray:
    out = np.zeros_like(a)
    small = (a > 0) & (a <= _E)
    if small.any():
        x = a[small]
        w = np.log1p(x)
        for _ in range(_MAX_ITER):
            ew = np.exp(w)
            f = w * ew - x
            wp1 = w + 1.0
            dw = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
            w = w - dw
            if np.all(np.abs(dw) <= 4e-16 * np.abs(w)):
                break
        out[small] = w
    big = a > _E
    if big.any():
        la = np.log(a[big])
        w = la - np.log(la)
        for _ in range(_MAX_ITER):
            g = w + np.log(w) - la
            g1 = 1.0 + 1.0 / w
            g2 = -1.0 / (w * w)
            dw = 2.0 * g * g1 / (2.0 * g1 * g1 - g * g2)
            w = w - dw
            if np.all(np.abs(dw) <= 4e-16 * w):
                break
        out[big] = w
    return out


def lambert_w(a):
    """Principal-branch Lambert W for nonnegative real arguments.

    Solves ``w * exp(w) == a`` by Halley iteration, started from
    ``log1p(a)`` for ``a <= e`` and from ``log(a) - log(log(a))`` above.
    For large ``a`` the iteration runs on ``w + log(w) = log(a)`` so that
    ``exp(w)`` never has to be formed.

    Parameters
    ----------
    a : float or array_like
        Argument(s), each finite and >= 0.

    Returns
    -------
    float or numpy.ndarray
        W(a); scalar in, float out.

    Raises
    ------
    DomainError
        If any argument is negative, NaN or infinite.
    """
    if np.ndim(a) == 0:
        x = float(a)
        if not math.isfinite(x) or x < 0.0:
            raise DomainError(f"lambert_w needs a finite a >= 0, got {a!r}")
        return _w_scalar(x)
    arr = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
        raise DomainError("lambert_w needs finite, nonnegative arguments")
    return _w_array(arr)
