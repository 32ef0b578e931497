"""Saddlepoint approximations to the density and CDF of a lognormal sum.

Both are evaluated at ``S_n = n x`` on the left tail, where the saddlepoint
``theta(x)`` solving ``kappa'(theta) = -x`` exists and is positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import erfcx

from .cramer import theta_solve
from .errors import DomainError
from .laplace import CumulantSet, LognormalModel, QuadratureConfig, cumulants

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_SERIES_FROM = 12.0
_SERIES_TERMS = 40

# Divisor of the zeta3^2 B6 term.  72 = 2 * 6^2 is the Edgeworth value.
# The reference second-order tables under golden/ were generated with 76.
B6_DIVISOR = 72.0
TABLE_B6_DIVISOR = 76.0


def _mills_tail(lam: float, lead: int) -> float:
    # sum_{j>=lead} (-1)^j (2j-1)!! / lam^(2j), the tail of lam*M(lam)
    # with M the Mills ratio sqrt(2 pi) e^{lam^2/2} Phi(-lam).
    inv = 1.0 / (lam * lam)
    term = 1.0
    for j in range(1, lead + 1):
        term *= -(2 * j - 1) * inv
    total = 0.0
    for j in range(lead, lead + _SERIES_TERMS):
        total += term
        term *= -(2 * j + 1) * inv
    return total


def b_functions(lam: float):
    """Return ``(B0, B3, B4, B6)`` at ``lam > 0``.

    ``B0 = lam e^{lam^2/2} Phi(-lam)`` via the scaled complementary error
    function.  Beyond ``lam = 12`` the higher B's, whose closed forms
    cancel to a few leading digits, are summed from the asymptotic series
    of the Mills ratio instead.
    """
    lam = float(lam)
    if not lam > 0.0:
        raise DomainError(f"lambda must be > 0, got {lam!r}")
    b0 = lam * 0.5 * float(erfcx(lam / math.sqrt(2.0)))
    if lam < _SERIES_FROM:
        l2 = lam * lam
        l3 = l2 * lam
        l4 = l2 * l2
        l6 = l4 * l2
        b3 = -(l3 * b0 - (l3 - lam) * _INV_SQRT_2PI)
        b4 = l4 * b0 - (l4 - l2) * _INV_SQRT_2PI
        b6 = l6 * b0 - (l6 - l4 + 3.0 * l2) * _INV_SQRT_2PI
        return b0, b3, b4, b6
    # lam*M = 1 - 1/l^2 + 3/l^4 - 15/l^6 + ...; each B keeps a tail of it
    b3 = -_INV_SQRT_2PI * lam ** 3 * _mills_tail(lam, 2)
    b4 = _INV_SQRT_2PI * lam ** 4 * _mills_tail(lam, 2)
    b6 = _INV_SQRT_2PI * lam ** 6 * _mills_tail(lam, 3)
    return b0, b3, b4, b6


@dataclass(frozen=True)
class SaddlepointResult:
    n: int
    x: float
    theta_x: float
    kappa_star: float
    lambda_n: float
    pdf1: float
    pdf2: float
    cdf1: float
    cdf2: float
    zeta3: float
    zeta4: float
    iterations: int


def _check(n: int, order: int = 1):
    if int(n) < 1:
        raise DomainError("n must be >= 1")
    if order not in (1, 2):
        raise DomainError(f"order must be 1 or 2, got {order!r}")


def _log_pdf1(n: int, x: float, c: CumulantSet) -> float:
    ks = c.kappa + x * c.theta
    return n * ks - 0.5 * math.log(2.0 * math.pi * n * c.d2)


def _pdf_bracket(n: int, c: CumulantSet, correction: str) -> float:
    if correction == "daniels":
        sign = -1.0
    elif correction == "plus":
        sign = 1.0
    else:
        raise DomainError(f"correction must be 'daniels' or 'plus', got {correction!r}")
    return 1.0 + (c.zeta4 / 8.0 + sign * 5.0 * c.zeta3 ** 2 / 24.0) / n


def _cdf_parts(n: int, x: float, c: CumulantSet, b6_divisor: float):
    ks = c.kappa + x * c.theta
    lam = c.theta * math.sqrt(n * c.d2)
    b0, b3, b4, b6 = b_functions(lam)
    z3, z4 = c.zeta3, c.zeta4
    corr = (z3 * b3 / (6.0 * math.sqrt(n)) + z4 * b4 / (24.0 * n)
            + z3 * z3 * b6 / (b6_divisor * n))
    log_pre = n * ks - math.log(lam)
    return ks, lam, log_pre, b0, corr


def saddlepoint(model: LognormalModel, n: int, x: float,
                cfg: Optional[QuadratureConfig] = None,
                correction: str = "daniels",
                b6_divisor: float = B6_DIVISOR) -> SaddlepointResult:
    """All first- and second-order quantities at ``(n, x)``."""
    _check(n)
    sol = theta_solve(model, x, cfg)
    c = cumulants(model, sol.theta, cfg)
    ks, lam, log_pre, b0, corr = _cdf_parts(n, x, c, b6_divisor)
    lp1 = _log_pdf1(n, x, c)
    pdf1 = math.exp(lp1)
    return SaddlepointResult(
        n=int(n), x=float(x), theta_x=sol.theta, kappa_star=ks, lambda_n=lam,
        pdf1=pdf1, pdf2=pdf1 * _pdf_bracket(n, c, correction),
        cdf1=math.exp(log_pre) * b0, cdf2=math.exp(log_pre) * (b0 + corr),
        zeta3=c.zeta3, zeta4=c.zeta4, iterations=sol.iterations,
    )


def density_approx(model: LognormalModel, n: int, x: float, order: int = 2,
                   cfg: Optional[QuadratureConfig] = None,
                   correction: str = "daniels") -> float:
    """Saddlepoint approximation of the density of ``S_n`` at ``n x``.

    ``correction`` picks the sign of the ``zeta3^2`` term in the
    second-order bracket: ``"daniels"`` (``-5 zeta3^2 / 24``, the default)
    or ``"plus"`` (``+5 zeta3^2 / 24``).
    """
    _check(n, order)
    sol = theta_solve(model, x, cfg)
    c = cumulants(model, sol.theta, cfg)
    val = math.exp(_log_pdf1(n, x, c))
    if order == 2:
        val *= _pdf_bracket(n, c, correction)
    return val


def log_cdf_approx(model: LognormalModel, n: int, x: float, order: int = 2,
                   cfg: Optional[QuadratureConfig] = None,
                   b6_divisor: float = B6_DIVISOR) -> float:
    """Natural log of :func:`cdf_approx`, finite where the CDF underflows.

    Returns ``nan`` if the second-order bracket is not positive.
    """
    _check(n, order)
    sol = theta_solve(model, x, cfg)
    c = cumulants(model, sol.theta, cfg)
    _, _, log_pre, b0, corr = _cdf_parts(n, x, c, b6_divisor)
    bracket = b0 if order == 1 else b0 + corr
    return log_pre + math.log(bracket) if bracket > 0.0 else math.nan


def cdf_approx(model: LognormalModel, n: int, x: float, order: int = 2,
               cfg: Optional[QuadratureConfig] = None,
               b6_divisor: float = B6_DIVISOR) -> float:
    """Saddlepoint approximation of ``P(S_n <= n x)``.

    Order 1 is ``exp(n kappa*) e^{lam^2/2} Phi(-lam)``; order 2 adds the
    ``B3``, ``B4`` and ``B6`` corrections.  Pass
    ``b6_divisor=TABLE_B6_DIVISOR`` to reproduce the reference
    second-order tables.  Values below ~1e-308 underflow to 0; use
    :func:`log_cdf_approx` there.
    """
    _check(n, order)
    sol = theta_solve(model, x, cfg)
    c = cumulants(model, sol.theta, cfg)
    _, _, log_pre, b0, corr = _cdf_parts(n, x, c, b6_divisor)
    bracket = b0 if order == 1 else b0 + corr
    return math.exp(log_pre) * bracket


def logconcavity_bound(model: LognormalModel) -> float:
    """The lognormal density is log-concave on ``(0, e^{1 - sigma^2})``."""
    return math.exp(1.0 - model.s2)


def cdf_grid(model: LognormalModel, n: int, xs, order: int = 2,
             cfg: Optional[QuadratureConfig] = None, **kw) -> np.ndarray:
    return np.array([cdf_approx(model, n, x, order, cfg, **kw) for x in xs])
