"""Importance-sampling estimators of ``P(S_n <= n x)`` and of the density of
``S_n`` at ``n x`` on the left tail.

Summands are drawn from the tilted law ``F_theta`` at ``theta = theta~(x)``
and reweighted by the likelihood ratio ``L(theta)^n e^{theta S_n}``.  All
weights are formed in log space around the shift ``n log L + theta n x``,
so the per-replication values lie in ``[0, 1]`` (CDF) and the final
estimate is ``exp(shift) * mean``.

Replications are grouped into fixed blocks of :data:`BLOCK` rows.  Block
``b`` draws from ``SeedSequence(seed, spawn_key=(stream, b))``, and block
summaries are merged in block order, so results depend only on
``(seed, R, parameters)`` and never on the number of workers.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .cramer import theta_tilde
from .errors import DomainError, InsufficientSampleError
from .estimate import Z95, MonteCarloEstimate
from .laplace import (LognormalModel, QuadratureConfig, log_is_weight,
                      log_laplace_k, log_laplace_tilde)
from .tilted import choose_sampler, sample

__all__ = [
    "BLOCK", "LAPLACE_MODES", "PDF_VARIANTS", "DegenerateSampleWarning",
    "EfficiencyDiagnostic", "MonteCarloEstimate", "cdf_is_estimate",
    "efficiency_diagnostic", "naive_estimate", "pdf_is_estimate",
]

BLOCK = 4096
LAPLACE_MODES = ("numeric", "is_product", "is_single")
PDF_VARIANTS = ("A", "B")

# independent substreams of one seed
_STREAM_X = 0
_STREAM_L = 1
_STREAM_PRODUCT = 2


class DegenerateSampleWarning(UserWarning):
    """Every replication returned zero; the estimate is reported as 0."""


def _block_rng(seed: int, stream: int, b: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, b)))


def _blocks(R: int):
    return [(b, min(BLOCK, R - b * BLOCK)) for b in range((R + BLOCK - 1) // BLOCK)]


def _moments(vals: np.ndarray):
    mean = float(vals.mean())
    return vals.size, mean, float(((vals - mean) ** 2).sum())


def _combine(parts):
    # Chan et al. pairwise update, applied in block order
    n, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in parts:
        tot = n + nb
        delta = mb - mean
        mean += delta * nb / tot
        m2 += m2b + delta * delta * n * nb / tot
        n = tot
    return n, mean, m2


# ---------------------------------------------------------------------------
# per-block kernels (module level so worker processes can import them)
# ---------------------------------------------------------------------------

def _tilted_block(sigma, theta, n, algo, seed, b, m):
    gen = _block_rng(seed, _STREAM_X, b)
    draws, _ = sample(LognormalModel(sigma), theta, gen, size=m * n, algo=algo)
    return draws.reshape(m, n)


def cdf_block_values(task):
    """Per-replication ``(S_n, scaled weight)`` for one block of the CDF estimator."""
    sigma, theta, n, x, algo, mode, seed, b, m = task
    X = _tilted_block(sigma, theta, n, algo, seed, b, m)
    S = X.sum(axis=1)
    d = S - n * x
    log_v = np.where(d < 0, theta * d, -np.inf)
    if mode == "is_product":
        gen = _block_rng(seed, _STREAM_PRODUCT, b)
        y = gen.normal(0.0, sigma, size=(m, n))
        log_v = log_v + log_is_weight(LognormalModel(sigma), theta, y).sum(axis=1)
    return S, np.exp(log_v)


def _cdf_block(task):
    return _moments(cdf_block_values(task)[1])


def _pdf_block(task):
    sigma, theta, n, x, algo, variant, seed, b, m = task
    model = LognormalModel(sigma)
    X = _tilted_block(sigma, theta, n, algo, seed, b, m)
    S = X.sum(axis=1, keepdims=True)
    rest = S - X
    f = model.pdf(n * x - rest)
    if variant == "B":
        # f vanishes unless rest < n x, so the exponent is clipped at 0
        vals = (f * np.exp(theta * np.minimum(rest - n * x, 0.0))).mean(axis=1)
    else:
        vals = np.exp(theta * (S[:, 0] - n * x)) * f.mean(axis=1)
    return _moments(vals)


def _naive_block(task):
    sigma, n, x, seed, b, m = task
    gen = _block_rng(seed, _STREAM_X, b)
    S = np.exp(gen.normal(0.0, sigma, size=(m, n))).sum(axis=1)
    return _moments((S <= n * x).astype(float))


def _run(kernel, tasks, workers: Optional[int]):
    if workers is None or workers <= 1 or len(tasks) == 1:
        return [kernel(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(kernel, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


# ---------------------------------------------------------------------------
# public estimators
# ---------------------------------------------------------------------------

def _check(n: int, R: int, n_min: int = 1):
    if int(n) < n_min:
        raise DomainError(f"n must be >= {n_min}, got {n!r}")
    if int(R) < 2:
        raise InsufficientSampleError("need R >= 2 replications")
    return int(n), int(R)


def _finish(log_shift: float, stats, seed, R, extra_rel2: float = 0.0) -> MonteCarloEstimate:
    cnt, mean, m2 = stats
    if mean <= 0.0:
        warnings.warn("degenerate sample: every replication was zero",
                      DegenerateSampleWarning, stacklevel=3)
        return MonteCarloEstimate(0.0, 0.0, -math.inf, R, seed, degenerate=True)
    sd = math.sqrt(m2 / (cnt - 1))
    log_value = log_shift + math.log(mean)
    rel = math.sqrt((Z95 * sd / (math.sqrt(cnt) * mean)) ** 2 + extra_rel2)
    value = math.exp(log_value)
    return MonteCarloEstimate(value, value * rel, log_value, R, seed)


def _laplace_single(model: LognormalModel, theta: float, R: int, seed: int):
    """``log`` of the mean of ``R`` single-draw estimates of ``L(theta)`` and
    the squared relative 95% half-width of that mean."""
    gen = _block_rng(seed, _STREAM_L, 0)
    w = np.exp(log_is_weight(model, theta, gen.normal(0.0, model.sigma, size=R)))
    mean = float(w.mean())
    rel = Z95 * float(w.std(ddof=1)) / (math.sqrt(R) * mean)
    return log_laplace_tilde(model, theta) + math.log(mean), rel * rel


def cdf_is_estimate(model: LognormalModel, n: int, x: float, R: int,
                    laplace_mode: str = "numeric", seed: int = 0,
                    workers: Optional[int] = None,
                    cfg: Optional[QuadratureConfig] = None,
                    laplace_R: Optional[int] = None) -> MonteCarloEstimate:
    """Estimate ``P(S_n <= n x)`` from ``R`` tilted replications.

    ``laplace_mode`` fixes how ``L(theta)^n`` enters the weight:

    ``numeric``
        quadrature value; the estimator is unbiased.
    ``is_product``
        an independent product of ``n`` single-draw importance-sampling
        estimates of ``L`` inside each replication; also unbiased.
    ``is_single``
        ``l^n`` with ``l`` the mean of ``laplace_R`` (default ``R``)
        single-draw estimates from a separate stream, shared by all
        replications.  Biased upward for ``n > 1``; the half-width adds the
        delta-method term ``n * rel(l)``.
    """
    n, R = _check(n, R)
    if laplace_mode not in LAPLACE_MODES:
        raise DomainError(f"laplace_mode must be one of {LAPLACE_MODES}, got {laplace_mode!r}")
    theta = theta_tilde(model, x)
    algo = choose_sampler(model, theta, cfg)
    mode = "is_product" if laplace_mode == "is_product" else "plain"
    tasks = [(model.sigma, theta, n, float(x), algo, mode, seed, b, m) for b, m in _blocks(R)]
    stats = _combine(_run(_cdf_block, tasks, workers))
    extra = 0.0
    if laplace_mode == "numeric":
        log_l = log_laplace_k(model, theta, 0, cfg)
    elif laplace_mode == "is_product":
        log_l = log_laplace_tilde(model, theta)
    else:
        log_l, rel2 = _laplace_single(model, theta, int(laplace_R or R), seed)
        extra = n * n * rel2
    return _finish(n * log_l + theta * n * x, stats, seed, R, extra)


def pdf_is_estimate(model: LognormalModel, n: int, x: float, R: int,
                    variant: str = "B", seed: int = 0,
                    workers: Optional[int] = None,
                    cfg: Optional[QuadratureConfig] = None) -> MonteCarloEstimate:
    """Estimate the density of ``S_n`` at ``n x`` by conditioning on ``S_{n,-i}``.

    Variant ``B`` weights each leave-one-out term by
    ``exp(theta S_{n,-i} + (n - 1) kappa)``; variant ``A`` weights the whole
    replication by ``exp(theta S_n + n kappa)``.  Both are unbiased.
    """
    n, R = _check(n, R, n_min=2)
    if variant not in PDF_VARIANTS:
        raise DomainError(f"variant must be 'A' or 'B', got {variant!r}")
    theta = theta_tilde(model, x)
    algo = choose_sampler(model, theta, cfg)
    kappa = log_laplace_k(model, theta, 0, cfg)
    tasks = [(model.sigma, theta, n, float(x), algo, variant, seed, b, m) for b, m in _blocks(R)]
    stats = _combine(_run(_pdf_block, tasks, workers))
    k = n - 1 if variant == "B" else n
    return _finish(k * kappa + theta * n * x, stats, seed, R)


def naive_estimate(model: LognormalModel, n: int, x: float, R: int, seed: int = 0,
                   workers: Optional[int] = None) -> MonteCarloEstimate:
    """Crude Monte Carlo: the fraction of untilted replications with ``S_n <= n x``."""
    n, R = _check(n, R)
    if not x > 0:
        raise DomainError(f"x must be > 0, got {x!r}")
    tasks = [(model.sigma, n, float(x), seed, b, m) for b, m in _blocks(R)]
    stats = _combine(_run(_naive_block, tasks, workers))
    return _finish(0.0, stats, seed, R)


@dataclass(frozen=True)
class EfficiencyDiagnostic:
    """Per-``x`` relative error and MSE proxy of the ``is_single`` estimator.

    ``mse_ratio`` is ``(se^2 + (estimate - alpha)^2) / alpha^(2 - epsilon)``
    with ``alpha`` the numeric-mode estimate at the same ``x``.  Points where
    either estimate is degenerate hold NaN and are flagged in ``degenerate``.
    """

    x_grid: np.ndarray
    alpha: np.ndarray
    rel_err: np.ndarray
    mse_ratio: np.ndarray
    epsilon: float
    degenerate: np.ndarray


def efficiency_diagnostic(model: LognormalModel, n: int, x_grid: Sequence[float], R: int,
                          epsilon: float = 0.2, seed: int = 0,
                          workers: Optional[int] = None,
                          cfg: Optional[QuadratureConfig] = None) -> EfficiencyDiagnostic:
    xs = np.asarray(x_grid, dtype=float)
    if xs.ndim != 1 or xs.size == 0 or np.any(np.diff(xs) >= 0):
        raise DomainError("x_grid must be a non-empty, strictly decreasing sequence")
    if not epsilon > 0:
        raise DomainError("epsilon must be > 0")
    alpha = np.full(xs.size, np.nan)
    rel = np.full(xs.size, np.nan)
    ratio = np.full(xs.size, np.nan)
    bad = np.zeros(xs.size, dtype=bool)
    for i, x in enumerate(xs):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateSampleWarning)
            ref = cdf_is_estimate(model, n, x, R, "numeric", seed, workers, cfg)
            est = cdf_is_estimate(model, n, x, R, "is_single", seed + 1, workers, cfg)
        if ref.degenerate or est.degenerate:
            bad[i] = True
            continue
        alpha[i] = ref.value
        rel[i] = est.rel_err
        mse = est.std_error ** 2 + (est.value - ref.value) ** 2
        ratio[i] = math.exp(math.log(mse) - (2.0 - epsilon) * ref.log_value)
    return EfficiencyDiagnostic(xs, alpha, rel, ratio, float(epsilon), bad)
