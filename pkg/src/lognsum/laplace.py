"""Laplace transform of the LN(0, sigma^2) law and its cumulant transform.

The moments ``L_k(theta) = E[X^k exp(-theta X)]`` are evaluated by a
trapezoid rule in a variable that is centred at the mode of the integrand
and scaled by its curvature, so the relative accuracy does not degrade as
``theta`` grows.  Closed-form Lambert-W approximations and unbiased
importance-sampling estimators of ``L(theta)`` and ``L(theta)^n`` live here
as well.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import DomainError, InsufficientSampleError
from .estimate import Z95, MonteCarloEstimate
from .lambertw import lambert_w

QUAD_NODES_ENV = "LOGNSUM_QUAD_NODES"

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_QUAD_RTOL = 1e-10
_TAIL_CUTOFF = 1e-20
_MAX_REFINE = 8


@dataclass(frozen=True)
class LognormalModel:
    """LN(0, sigma^2): the law of ``exp(sigma Z)`` with ``Z ~ N(0, 1)``."""

    sigma: float

    def __post_init__(self):
        s = float(self.sigma)
        if not math.isfinite(s) or s <= 0.0:
            raise DomainError(f"sigma must be finite and > 0, got {self.sigma!r}")
        object.__setattr__(self, "sigma", s)

    @property
    def s2(self) -> float:
        return self.sigma * self.sigma

    @property
    def mean(self) -> float:
        return math.exp(0.5 * self.s2)

    def pdf(self, x):
        """Density; zero for ``x <= 0``.  Accepts scalars or arrays."""
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        pos = x > 0
        lx = np.log(x[pos])
        out[pos] = np.exp(-lx * lx / (2.0 * self.s2) - lx - _LOG_SQRT_2PI) / self.sigma
        return out if out.ndim else float(out)

    def cdf(self, x):
        from scipy.special import ndtr

        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        pos = x > 0
        out[pos] = ndtr(np.log(x[pos]) / self.sigma)
        return out if out.ndim else float(out)


def _default_nodes() -> int:
    raw = os.environ.get(QUAD_NODES_ENV)
    return int(raw) if raw else 64


@dataclass(frozen=True)
class QuadratureConfig:
    """Trapezoid settings for :func:`laplace_k`.

    ``nodes`` is the starting density (points per unit of the scaled
    variable); it is doubled until the relative change drops below 1e-10.
    ``halfwidth`` is the initial truncation, widened automatically while
    the integrand at either end is still above 1e-20.  ``c0`` switches
    between the two curvature scales.
    """

    c0: float = 2.0
    nodes: int = field(default_factory=_default_nodes)
    halfwidth: float = 10.0

    def __post_init__(self):
        if self.c0 <= 0:
            raise DomainError("c0 must be positive")
        if self.nodes < 32:
            raise DomainError("nodes must be >= 32")
        if self.halfwidth < 10:
            raise DomainError("halfwidth must be >= 10")


def _cfg(cfg: Optional[QuadratureConfig]) -> QuadratureConfig:
    return cfg if cfg is not None else QuadratureConfig()


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not math.isfinite(theta) or theta <= 0.0:
        raise DomainError(
            f"the Laplace transform is evaluated only for theta > 0, got {theta!r}"
        )
    return theta


def quad_scale(w: float, sigma: float, c0: float = 2.0) -> float:
    """Scale ``tau`` putting ``2 h0(-tau)`` close to one."""
    tau = sigma / math.sqrt(1.0 + w)
    if tau <= c0:
        return tau
    return math.sqrt(w * w + 2.0 * w + sigma * sigma) - w


def _half_h1(u: np.ndarray, tau: float, w: float, s2: float) -> np.ndarray:
    # h1(u)/2 = h0(tau u), h0(z) = (w/s2)(e^z - 1 - z) + z^2/(2 s2)
    z = tau * u
    with np.errstate(over="ignore"):
        return (w / s2) * (np.expm1(z) - z) + z * z / (2.0 * s2)


def _edge(tau: float, w: float, s2: float, start: float, sign: float) -> float:
    a = start
    while math.exp(-float(_half_h1(np.array([sign * a]), tau, w, s2)[0])) > _TAIL_CUTOFF:
        a *= 2.0
        if a > 1e6:
            break
    return a


def _scaled_integral(tau: float, w: float, s2: float, cfg: QuadratureConfig) -> float:
    """Integral of exp(-h1(u)/2) du by step-halving trapezoid."""
    left = _edge(tau, w, s2, cfg.halfwidth, -1.0)
    right = _edge(tau, w, s2, cfg.halfwidth, 1.0)
    nodes = cfg.nodes
    prev = None
    for _ in range(_MAX_REFINE):
        step = 1.0 / nodes
        u = np.arange(-math.ceil(left * nodes), math.ceil(right * nodes) + 1) * step
        f = np.exp(-_half_h1(u, tau, w, s2))
        # endpoints are negligible, so the plain sum is the trapezoid rule
        total = step * float(np.sum(f))
        if prev is not None and abs(total - prev) <= _QUAD_RTOL * total:
            return total
        prev = total
        nodes *= 2
    return total


def log_laplace_k(model: LognormalModel, theta: float, k: int = 0,
                  cfg: Optional[QuadratureConfig] = None) -> float:
    """``log E[X^k exp(-theta X)]`` for ``k`` in 0..4 and ``theta > 0``."""
    theta = _check_theta(theta)
    if k not in (0, 1, 2, 3, 4):
        raise DomainError(f"k must be in 0..4, got {k!r}")
    cfg = _cfg(cfg)
    s2 = model.s2
    # log of theta s2 e^{k s2}, kept in log form against overflow
    w = lambert_w(math.exp(math.log(theta) + math.log(s2) + k * s2))
    h_min = w * w / (2.0 * s2) + w / s2 - 0.5 * s2 * k * k
    tau = quad_scale(w, model.sigma, cfg.c0)
    integral = _scaled_integral(tau, w, s2, cfg)
    return -h_min + math.log(tau) - _LOG_SQRT_2PI - math.log(model.sigma) + math.log(integral)


def laplace_k(model: LognormalModel, theta: float, k: int = 0,
              cfg: Optional[QuadratureConfig] = None) -> float:
    """``E[X^k exp(-theta X)]``; see :func:`log_laplace_k`."""
    return math.exp(log_laplace_k(model, theta, k, cfg))


@dataclass(frozen=True)
class CumulantSet:
    """kappa(theta) = log L(theta) and its first four derivatives."""

    theta: float
    kappa: float
    d1: float
    d2: float
    d3: float
    d4: float

    @property
    def zeta3(self) -> float:
        return self.d3 / self.d2 ** 1.5

    @property
    def zeta4(self) -> float:
        return self.d4 / (self.d2 * self.d2)

    @property
    def tilted_mean(self) -> float:
        return -self.d1


def cumulants(model: LognormalModel, theta: float,
              cfg: Optional[QuadratureConfig] = None) -> CumulantSet:
    logs = [log_laplace_k(model, theta, k, cfg) for k in range(5)]
    m1, m2, m3, m4 = (math.exp(logs[k] - logs[0]) for k in range(1, 5))
    # derivatives of log E exp(-theta X): odd orders flip sign
    d1 = -m1
    d2 = m2 - m1 * m1
    d3 = -(m3 - 3.0 * m2 * m1 + 2.0 * m1 ** 3)
    d4 = m4 - 4.0 * m3 * m1 - 3.0 * m2 * m2 + 12.0 * m2 * m1 * m1 - 6.0 * m1 ** 4
    return CumulantSet(theta=float(theta), kappa=logs[0], d1=d1, d2=d2, d3=d3, d4=d4)


# ---------------------------------------------------------------------------
# closed-form approximations
# ---------------------------------------------------------------------------

def _w_theta(model: LognormalModel, theta: float, k: int = 0) -> float:
    theta = float(theta)
    if not math.isfinite(theta) or theta < 0.0:
        raise DomainError(f"theta must be finite and >= 0, got {theta!r}")
    if theta == 0.0:
        return 0.0
    return lambert_w(math.exp(math.log(theta) + math.log(model.s2) + k * model.s2))


def log_laplace_tilde(model: LognormalModel, theta: float) -> float:
    """``log L~(theta) = -(W^2 + 2W) / (2 sigma^2)`` with ``W = W(theta sigma^2)``.

    This is the centring constant of the importance-sampling estimator and
    an upper bound on ``log L(theta)``.
    """
    w = _w_theta(model, theta)
    return -(w * w + 2.0 * w) / (2.0 * model.s2)


def log_laplace_asymptotic(model: LognormalModel, theta: float,
                           with_root: bool = True) -> float:
    val = log_laplace_tilde(model, theta)
    if with_root:
        val -= 0.5 * math.log1p(_w_theta(model, theta))
    return val


def laplace_asymptotic(model: LognormalModel, theta: float,
                       with_root: bool = True) -> float:
    """Lambert-W approximation of ``L(theta)``.

    ``with_root=True`` keeps the ``(1 + W)^(-1/2)`` factor; this is the
    variant that reproduces the reference ``n = 256`` table of
    ``L~^n``.  ``with_root=False`` gives :func:`log_laplace_tilde`.
    """
    return math.exp(log_laplace_asymptotic(model, theta, with_root))


def moment_asymptotic(model: LognormalModel, theta: float, k: int) -> float:
    """Lambert-W approximation of ``E[X^k exp(-theta X)]`` (mode expansion)."""
    w = _w_theta(model, theta, k)
    s2 = model.s2
    return math.exp(-(w * w + 2.0 * w - k * k * s2 * s2) / (2.0 * s2)) / math.sqrt(1.0 + w)


def control_variate_mean(model: LognormalModel, theta: float) -> float:
    """``E[L~(theta) exp(-(W/sigma^2) Y^2)]`` for ``Y ~ N(0, sigma^2)``.

    Gaussian integral: ``L~(theta) / sqrt(1 + 2W)``.
    """
    w = _w_theta(model, theta)
    return math.exp(log_laplace_tilde(model, theta)) / math.sqrt(1.0 + 2.0 * w)


# ---------------------------------------------------------------------------
# Monte Carlo estimators of L(theta) and L(theta)^n
# ---------------------------------------------------------------------------

RngLike = Union[np.random.Generator, int, None]


def as_generator(rng: RngLike):
    """Return ``(generator, seed)``; ``seed`` is None when a Generator is passed."""
    if isinstance(rng, np.random.Generator):
        return rng, None
    return np.random.default_rng(rng), rng


def log_is_weight(model: LognormalModel, theta: float, y):
    """``log theta(y)``: ``-(W/sigma^2)(e^y - 1 - y)``, always <= 0."""
    w = _w_theta(model, theta)
    y = np.asarray(y, dtype=float)
    return -(w / model.s2) * (np.expm1(y) - y)


def laplace_is_estimate(model: LognormalModel, theta: float, rng: RngLike = None,
                        size=None):
    """Unbiased single-draw estimate(s) ``L~(theta) * exp(log_is_weight(Y))``."""
    gen, _ = as_generator(rng)
    y = gen.normal(0.0, model.sigma, size=size)
    val = np.exp(log_laplace_tilde(model, theta) + log_is_weight(model, theta, y))
    return float(val) if size is None else val


STRATEGIES = ("plain_power", "bias_corrected", "product")


def laplace_power_estimate(model: LognormalModel, theta: float, n: int, R: int,
                           strategy: str = "product",
                           rng: RngLike = None) -> MonteCarloEstimate:
    """Estimate ``L(theta)^n`` from ``R`` replications.

    ``plain_power``
        ``l^n`` with ``l`` the mean of ``R`` single-draw estimates; the
        half-width comes from the delta method, ``n l^(n-1) t / sqrt(R)``.
    ``bias_corrected``
        ``l^n - n(n-1) l^(n-2) t^2 / (2R)``, same half-width.
    ``product``
        Average over ``R`` replications of a product of ``n`` independent
        single-draw estimates.  Unbiased.
    """
    if strategy not in STRATEGIES:
        raise DomainError(f"unknown strategy {strategy!r}; pick one of {STRATEGIES}")
    n = int(n)
    R = int(R)
    if n < 1:
        raise DomainError("n must be >= 1")
    if R < 2:
        raise InsufficientSampleError("need R >= 2 replications")
    gen, seed = as_generator(rng)
    log_lt = log_laplace_tilde(model, theta)

    if strategy == "product":
        chunk = max(1, (1 << 20) // n)
        sums = np.empty(R)
        done = 0
        while done < R:
            m = min(chunk, R - done)
            y = gen.normal(0.0, model.sigma, size=(m, n))
            sums[done:done + m] = log_is_weight(model, theta, y).sum(axis=1)
            done += m
        vals = np.exp(sums)
        mean = float(vals.mean())
        sd = float(vals.std(ddof=1))
        log_value = n * log_lt + math.log(mean)
        log_hw = n * log_lt + math.log(Z95 * sd / math.sqrt(R)) if sd > 0 else -math.inf
        return MonteCarloEstimate(math.exp(log_value), math.exp(log_hw), log_value, R, seed)

    y = gen.normal(0.0, model.sigma, size=R)
    vals = np.exp(log_is_weight(model, theta, y))
    mean = float(vals.mean())
    t = float(vals.std(ddof=1))
    log_l = log_lt + math.log(mean)
    log_t = log_lt + math.log(t) if t > 0 else -math.inf
    log_value = n * log_l
    if strategy == "bias_corrected":
        rel = n * (n - 1) * math.exp(2.0 * (log_t - log_l)) / (2.0 * R)
        log_value = log_value + math.log1p(-rel) if rel < 1.0 else -math.inf
    log_hw = math.log(Z95 * n) + (n - 1) * log_l + log_t - 0.5 * math.log(R)
    return MonteCarloEstimate(math.exp(log_value), math.exp(log_hw), log_value, R, seed)
