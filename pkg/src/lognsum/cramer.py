"""Saddlepoint (Cramer) function of the lognormal: closed form and refinement."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConvergenceError, DomainError
from .laplace import LognormalModel, QuadratureConfig, cumulants


def gamma_of_x(model: LognormalModel, x: float) -> float:
    """Positive root of ``g^2 + (1 + log x) g - sigma^2/2 + log x = 0``.

    This is the value of ``W(theta sigma^2)`` at which the approximate
    lognormal tilted law has mean ``x``.
    """
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"x must be > 0, got {x!r}")
    lx = math.log(x)
    return 0.5 * (-1.0 - lx + math.sqrt((1.0 - lx) ** 2 + 2.0 * model.s2))


def theta_tilde(model: LognormalModel, x: float) -> float:
    """Closed-form approximation ``gamma e^gamma / sigma^2`` of ``theta(x)``."""
    g = gamma_of_x(model, x)
    if g <= 0.0:
        raise DomainError(
            f"x={x!r} is not in the left tail (need x < exp(sigma^2/2) = {model.mean:.6g})"
        )
    return g * math.exp(g) / model.s2


@dataclass(frozen=True)
class SaddleSolve:
    x: float
    gamma_x: float
    theta_tilde: float
    theta: float
    iterations: int
    residual: float


def theta_solve(model: LognormalModel, x: float, cfg: Optional[QuadratureConfig] = None,
                tol: float = 1e-10, max_iter: int = 25) -> SaddleSolve:
    """Solve ``kappa'(theta) = -x`` by Newton-Raphson from :func:`theta_tilde`.

    Stops when ``|kappa'(theta) + x| / x <= tol``.  A step that would leave
    ``theta > 0`` is halved until it does not.
    """
    g = gamma_of_x(model, x)
    th0 = theta_tilde(model, x)
    th = th0
    c = cumulants(model, th, cfg)
    resid = c.d1 + x
    it = 0
    while abs(resid) > tol * x:
        if it >= max_iter:
            raise ConvergenceError(
                f"Newton-Raphson for theta(x) did not converge in {max_iter} steps "
                f"(x={x}, last theta={th}, residual={resid})",
                last=th,
            )
        step = resid / c.d2
        new = th - step
        while new <= 0.0:
            step *= 0.5
            new = th - step
        th = new
        c = cumulants(model, th, cfg)
        resid = c.d1 + x
        it += 1
    return SaddleSolve(x=float(x), gamma_x=g, theta_tilde=th0, theta=th,
                       iterations=it, residual=resid)


@dataclass(frozen=True)
class LemmaResiduals:
    """Scaled remainders of the three small-``u`` expansions of ``gamma``.

    Each array holds ``(actual - claimed expansion) * |log u|^p`` where
    ``p`` is the power the claimed remainder term carries.
    """

    u: np.ndarray
    log_abs: np.ndarray
    gamma_minus_log: np.ndarray
    limit1: np.ndarray
    limit2: np.ndarray
    limit3: np.ndarray


# (coefficient, remainder power) for each expansion.  "stated" is the
# commonly quoted form.  Expanding the square root exactly gives half of each
# coefficient, and the third remainder is then only O(L^-1).
LEMMA_CONSTANTS = {
    "stated": ((1.0, 2), (1.0, 1), (1.0, 2)),
    "exact": ((0.5, 2), (0.5, 1), (0.5, 1)),
}


def asymptotic_lemma_check(model: LognormalModel, u_grid: Sequence[float],
                           constants: str = "stated") -> LemmaResiduals:
    """Evaluate the scaled remainders of

    * ``gamma(u) = L + c1 sigma^2 / L + O(L^-p1)``
    * ``u theta~(u) = L / sigma^2 + c2 + O(L^-p2)``
    * ``(gamma^2 - L^2) / (2 sigma^2) = c3 + O(L^-p3)``

    with ``L = |log u|``.  ``constants`` picks the ``(c, p)`` pairs from
    :data:`LEMMA_CONSTANTS`.
    """
    (c1, p1), (c2, p2), (c3, p3) = LEMMA_CONSTANTS[constants]
    u = np.asarray(u_grid, dtype=float)
    if np.any(u <= 0) or np.any(u > 0.1):
        raise DomainError("u_grid must lie in (0, 0.1]")
    s2 = model.s2
    L = -np.log(u)
    g = np.array([gamma_of_x(model, v) for v in u])
    ut = u * g * np.exp(g) / s2
    return LemmaResiduals(
        u=u,
        log_abs=L,
        gamma_minus_log=g - L,
        limit1=(g - L - c1 * s2 / L) * L ** p1,
        limit2=(ut - L / s2 - c2) * L ** p2,
        limit3=((g * g - L * L) / (2.0 * s2) - c3) * L ** p3,
    )
