"""The exponentially tilted lognormal family and exact samplers for it.

``F_theta`` has density ``exp(-theta x - kappa(theta)) f(x)`` with ``f`` the
LN(0, sigma^2) density.  Closed-form approximations of ``F_theta`` and two
acceptance-rejection samplers (uniform test against the untilted law, and a
Gamma proposal) are provided, plus a selector that picks whichever sampler
accepts more often.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gammainc, gammaln, log_ndtr, ndtr
from scipy.stats import truncnorm

from .errors import DomainError, SamplerCapError
from .lambertw import lambert_w
from .laplace import (LognormalModel, QuadratureConfig, RngLike, as_generator,
                      log_laplace_asymptotic, log_laplace_k)

MAX_PROPOSALS = 10 ** 9
ALGORITHMS = ("naive", "gamma", "auto")


def _check_theta(theta: float, strict: bool = False) -> float:
    theta = float(theta)
    bad = theta <= 0.0 if strict else theta < 0.0
    if not math.isfinite(theta) or bad:
        need = "> 0" if strict else ">= 0"
        raise DomainError(f"theta must be finite and {need}, got {theta!r}")
    return theta


@dataclass(frozen=True)
class TiltedParams:
    """Lognormal approximation ``LN(mu_theta, sigma2_theta)`` of ``F_theta``."""

    theta: float
    w: float
    mu_theta: float
    sigma2_theta: float

    @classmethod
    def from_theta(cls, model: LognormalModel, theta: float) -> "TiltedParams":
        theta = _check_theta(theta)
        w = lambert_w(theta * model.s2)
        return cls(theta=theta, w=w, mu_theta=-w, sigma2_theta=model.s2 / (1.0 + w))


@dataclass(frozen=True)
class SamplerReport:
    draws_accepted: int
    proposals_used: int
    empirical_acceptance: float
    algorithm: str

    @classmethod
    def build(cls, accepted: int, used: int, algorithm: str) -> "SamplerReport":
        rate = accepted / used if used else 1.0
        return cls(int(accepted), int(used), rate, algorithm)


# ---------------------------------------------------------------------------
# moments and closed-form CDFs
# ---------------------------------------------------------------------------

def tilted_mean_var_asymptotic(model: LognormalModel, theta: float):
    """Mean and variance of ``LN(mu_theta, sigma2_theta)``."""
    p = TiltedParams.from_theta(model, theta)
    mean = math.exp(p.mu_theta + 0.5 * p.sigma2_theta)
    var = math.exp(2.0 * p.mu_theta + p.sigma2_theta) * math.expm1(p.sigma2_theta)
    return mean, var


def tilted_mean_exact(model: LognormalModel, theta: float,
                      cfg: Optional[QuadratureConfig] = None) -> float:
    """``L_1(theta) / L_0(theta)``; ``e^{sigma^2/2}`` at ``theta = 0``."""
    theta = _check_theta(theta)
    if theta == 0.0:
        return model.mean
    return math.exp(log_laplace_k(model, theta, 1, cfg) - log_laplace_k(model, theta, 0, cfg))


def _check_x(x):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("x must be > 0")
    return x


def _scalar(out):
    return float(out) if np.ndim(out) == 0 else out


def gamma_shape(model: LognormalModel, theta: float) -> float:
    """``alpha = W(theta sigma^2 e^{-sigma^2}) / sigma^2``."""
    theta = _check_theta(theta, strict=True)
    s2 = model.s2
    return lambert_w(math.exp(math.log(theta) + math.log(s2) - s2)) / s2


def approx_cdf_lognormal(model: LognormalModel, theta: float, x):
    """``Phi((log x - mu_theta) / sigma_theta)``; exact at ``theta = 0``."""
    p = TiltedParams.from_theta(model, theta)
    x = _check_x(x)
    return _scalar(ndtr((np.log(x) - p.mu_theta) / math.sqrt(p.sigma2_theta)))


def approx_cdf_gamma(model: LognormalModel, theta: float, x):
    """CDF of ``Gamma(alpha + 1, rate=theta)``."""
    a = gamma_shape(model, theta)
    x = _check_x(x)
    return _scalar(gammainc(a + 1.0, theta * x))


def approx_cdf_normal(model: LognormalModel, theta: float, x):
    """Normal law with the mean and variance of the Gamma approximation."""
    a = gamma_shape(model, theta)
    x = _check_x(x)
    mean = (a + 1.0) / theta
    sd = math.sqrt(a + 1.0) / theta
    return _scalar(ndtr((x - mean) / sd))


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------

def _batch(remaining: int, rate: float) -> int:
    rate = min(max(rate, 1e-6), 1.0)
    return int(min(max(1.2 * remaining / rate + 16, 64), 1 << 22))


def sample_naive(model: LognormalModel, theta: float, rng: RngLike = None,
                 size: Optional[int] = None, max_proposals: int = MAX_PROPOSALS,
                 method: str = "auto"):
    """Propose ``X ~ LN(0, sigma^2)`` and keep it with probability ``e^{-theta X}``.

    Returns ``(draws, report)``; ``draws`` is a float when ``size`` is None.

    ``method="literal"`` runs the proposal loop as written and raises
    :class:`SamplerCapError` once ``max_proposals`` proposals pass without an
    acceptance.  ``method="skip"`` simulates the same proposal stream in
    aggregate (see :func:`_naive_skip`), so its cost no longer grows like
    ``1 / L(theta)``; it raises :class:`SamplerCapError` only when the
    proposal count would overflow a double.  ``"auto"`` uses the literal loop while the expected
    number of proposals per draw stays below ``SKIP_FROM``.
    """
    theta = _check_theta(theta)
    if method not in ("auto", "literal", "skip"):
        raise DomainError(f"method must be 'auto', 'literal' or 'skip', got {method!r}")
    gen, _ = as_generator(rng)
    want = 1 if size is None else int(size)
    log_rate = log_laplace_asymptotic(model, theta) if theta > 0 else 0.0
    if method == "skip" or (method == "auto" and -log_rate > math.log(SKIP_FROM)):
        out, used = _naive_skip(model, theta, gen, want, log_rate)
        report = SamplerReport.build(want, used, "naive")
        return (float(out[0]) if size is None else out), report
    out = np.empty(want)
    got = used = dry = 0
    rate = math.exp(log_rate)
    while got < want:
        m = _batch(want - got, rate)
        x = np.exp(gen.normal(0.0, model.sigma, size=m))
        keep = np.log(gen.random(m)) <= -theta * x
        idx = np.flatnonzero(keep)
        if idx.size == 0:
            used += m
            dry += m
            if dry >= max_proposals:
                raise SamplerCapError(
                    f"naive sampler used {dry} proposals without an acceptance "
                    f"(theta={theta}); use the gamma-proposal sampler"
                )
            continue
        take = idx[: want - got]
        out[got:got + take.size] = x[take]
        got += take.size
        # a finished run stops right after its last accepted proposal
        used += int(take[-1]) + 1 if got == want else m
        dry = 0
        rate = max(idx.size / m, 1e-6)
    report = SamplerReport.build(want, used, "naive")
    return (float(out[0]) if size is None else out), report


SKIP_FROM = 1e4
# the aggregated proposal count is carried as a double
_MAX_LOG_COUNT = 700.0


def _naive_strata(model: LognormalModel, theta: float, log_rate: float):
    """Edges in ``g = log(X) / sigma`` for the aggregated naive sampler.

    Below the first edge the stratum mass is ``< 1e-6 L``; beyond the last
    edge ``e^{-theta X}`` is below ``e^{-60} L``.  In between each stratum is
    narrow enough that ``e^{-theta X}`` varies by at most a factor ``e^{0.5}``.
    """
    s = model.sigma
    g = -1.0
    while log_ndtr(g) > log_rate - 14.0:
        g -= 0.5
    top = math.log(max((-log_rate + 60.0) / theta, 1e-300)) / s
    edges = [g]
    while g < top:
        g += min(0.25, 0.5 / (theta * s * math.exp(s * g)))
        edges.append(g)
    return np.array(edges)


def _log_normal_mass(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """``log(Phi(hi) - Phi(lo))`` without cancellation in either tail."""
    upper = lo >= 0.0
    a = np.where(upper, -hi, lo)
    b = np.where(upper, -lo, hi)
    la, lb = log_ndtr(a), log_ndtr(b)
    with np.errstate(divide="ignore"):
        return lb + np.log1p(-np.exp(la - lb))


def _naive_skip(model: LognormalModel, theta: float, gen: np.random.Generator,
                want: int, log_rate: float):
    # Envelope over strata of g = log(X)/sigma: a literal proposal lands in
    # stratum j w.p. q_j and passes a first thinning w.p. b_j (the largest
    # e^{-theta X} there).  Survivors form an envelope trial; the number of
    # literal proposals per trial is Geometric(B), B = sum q_j b_j.  A trial
    # draws X from the truncated law and is kept w.p. e^{-theta X} / b_j.
    # Draws and proposal count follow the literal loop's law.
    s = model.sigma
    edges = _naive_strata(model, theta, log_rate)
    lo = np.concatenate(([-np.inf], edges))
    hi = np.concatenate((edges, [np.inf]))
    log_b = np.concatenate(([0.0], -theta * np.exp(s * edges)))
    log_w = _log_normal_mass(lo, hi) + log_b
    top = log_w.max()
    log_B = top + math.log(np.exp(log_w - top).sum())
    if -log_B > _MAX_LOG_COUNT:
        raise SamplerCapError(
            f"naive sampler needs about exp({-log_B:.1f}) proposals per draw "
            f"(theta={theta}); the count overflows, use the gamma-proposal sampler"
        )
    p = np.exp(log_w - log_B)
    p /= p.sum()
    out = np.empty(want)
    got = trials = 0
    rate = 0.5
    while got < want:
        m = _batch(want - got, rate)
        j = gen.choice(p.size, size=m, p=p)
        g = np.atleast_1d(truncnorm.rvs(lo[j], hi[j], random_state=gen))
        x = np.exp(s * g)
        keep = np.log(gen.random(m)) <= -theta * x - log_b[j]
        idx = np.flatnonzero(keep)
        if idx.size == 0:
            trials += m
            continue
        take = idx[: want - got]
        out[got:got + take.size] = x[take]
        got += take.size
        trials += int(take[-1]) + 1 if got == want else m
        rate = idx.size / m
    # Geometric(B) = floor(E / -log(1 - B)) + 1 with E ~ Exp(1)
    lam = -math.log1p(-math.exp(log_B)) if log_B > -30.0 else math.exp(log_B)
    e = gen.standard_exponential(trials)
    used = int(math.fsum(np.floor(e / lam))) + trials
    return out, used


def sample_gamma_ar(model: LognormalModel, theta: float, rng: RngLike = None,
                    size: Optional[int] = None):
    """Gamma-proposal acceptance-rejection.

    ``Z ~ Gamma(alpha + 1, rate=alpha)`` is kept when
    ``log U <= -log(Z)^2 / (2 sigma^2)`` and returned as ``m Z`` with
    ``m = w / (theta sigma^2)``.
    """
    theta = _check_theta(theta, strict=True)
    gen, _ = as_generator(rng)
    s2 = model.s2
    a = gamma_shape(model, theta)
    m_scale = a / theta
    want = 1 if size is None else int(size)
    out = np.empty(want)
    got = used = 0
    rate = 0.5
    while got < want:
        m = _batch(want - got, rate)
        z = gen.gamma(a + 1.0, 1.0 / a, size=m)
        lz = np.log(z)
        keep = np.log(gen.random(m)) <= -lz * lz / (2.0 * s2)
        idx = np.flatnonzero(keep)
        if idx.size == 0:
            used += m
            rate = 1.0 / (used + 1)
            continue
        take = idx[: want - got]
        out[got:got + take.size] = m_scale * z[take]
        got += take.size
        used += int(take[-1]) + 1 if got == want else m
        rate = idx.size / m
    report = SamplerReport.build(want, used, "gamma")
    return (float(out[0]) if size is None else out), report


def acceptance_prob_gamma(model: LognormalModel, theta: float,
                          cfg: Optional[QuadratureConfig] = None) -> float:
    """Probability that one Gamma proposal is accepted."""
    a = gamma_shape(model, theta)
    s2 = model.s2
    b = s2 * (a + 1.0)
    log_p = ((a + 1.0) * math.log(a) - gammaln(a + 1.0)
             + 0.5 * math.log(2.0 * math.pi) + math.log(model.sigma)
             + 0.5 * s2 * (a + 1.0) ** 2
             + log_laplace_k(model, math.exp(math.log(a) + b), 0, cfg))
    return min(1.0, math.exp(log_p))


def choose_sampler(model: LognormalModel, theta: float,
                   cfg: Optional[QuadratureConfig] = None) -> str:
    """``"naive"`` or ``"gamma"``, whichever has the larger acceptance rate."""
    theta = _check_theta(theta)
    if theta == 0.0:
        return "naive"
    p_naive = math.exp(log_laplace_asymptotic(model, theta))
    return "gamma" if acceptance_prob_gamma(model, theta, cfg) > p_naive else "naive"


def sample(model: LognormalModel, theta: float, rng: RngLike = None,
           size: Optional[int] = None, algo: str = "auto",
           cfg: Optional[QuadratureConfig] = None):
    """Draw from ``F_theta`` with the named algorithm; returns ``(draws, report)``."""
    if algo not in ALGORITHMS:
        raise DomainError(f"algo must be one of {ALGORITHMS}, got {algo!r}")
    if algo == "auto":
        algo = choose_sampler(model, theta, cfg)
    if algo == "naive":
        return sample_naive(model, theta, rng, size)
    return sample_gamma_ar(model, theta, rng, size)


def sample_auto(model: LognormalModel, theta: float, rng: RngLike = None,
                size: Optional[int] = None, cfg: Optional[QuadratureConfig] = None):
    """Exact draw(s) from ``F_theta`` using the sampler that accepts more often."""
    return sample(model, theta, rng, size, "auto", cfg)[0]
