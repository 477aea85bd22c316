"""
Gaussian random-walk functionals and the heavy-traffic approximations.

M_beta is the all-time maximum of a random walk with N(-beta, 1) steps and

    c0 = -ln P(M_beta = 0),   c1 = E M_beta,   c2 = Var M_beta.

The classical approximation scales these by sigma at the hedge
beta = (s - mu) / sigma; the robust one uses the corrected hedge beta_n and
scale sigma_tilde obtained from a saddle-point expansion of the exact
contour integrals.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import erfcx

from .errors import ModelError
from .metrics import StationaryMetrics
from .model import QueueInstance

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class GaussMoments:
    beta: float
    c0: float
    c1: float
    c2: float
    err: float = 0.0

    @property
    def p0(self) -> float:
        return math.exp(-self.c0)


@dataclass(frozen=True)
class HedgeParams:
    """Corrected hedge and scale for the robust approximation.

    beta is the nominal hedge (s - mu) / sigma, beta_n the corrected hedge,
    sigma_n = sqrt(a b (b + 1)) and sigma_tilde = beta_n (b + rho) / (1 - rho).
    """

    beta: float
    beta_n: float
    sigma_n: float
    sigma_tilde: float


@lru_cache(maxsize=16)
def _legendre(n: int):
    return np.polynomial.legendre.leggauss(n)


def _log1m_exp(x):
    """ln(1 - e^-x) for x > 0."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < math.log(2.0)
    out[small] = np.log(-np.expm1(-x[small]))
    out[~small] = np.log1p(-np.exp(-x[~small]))
    return out


def _gl_integrals(beta: float, T: float, n: int):
    # split at beta/sqrt(2): the integrands vary on that scale near t = 0
    knots = sorted({0.0, min(beta / _SQRT2, T), T})
    x, w = _legendre(n)
    acc = np.zeros(3)
    half_b2 = 0.5 * beta * beta
    for lo, hi in zip(knots[:-1], knots[1:]):
        if hi <= lo:
            continue
        t = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        wt = 0.5 * (hi - lo) * w
        u = half_b2 + t * t
        kernel = 1.0 / np.expm1(u)  # e^-u / (1 - e^-u)
        acc[0] += np.sum(wt * (beta / _SQRT2) / u * _log1m_exp(u))
        acc[1] += np.sum(wt * t * t / u * kernel)
        acc[2] += np.sum(wt * t * t / (u * u) * kernel)
    c0 = -acc[0] / math.pi
    c1 = _SQRT2 / math.pi * acc[1]
    c2 = _SQRT2 * beta / math.pi * acc[2]
    return np.array([c0, c1, c2])


def gauss_max_moments(beta: float, tol: float = 1e-14, nodes: int = 200) -> GaussMoments:
    """c0, c1, c2 from the real semi-infinite integral representations.

    Gauss-Legendre on [0, T] with T = sqrt(ln(1/tol)) + beta (the integrands
    decay like exp(-t^2)); the error estimate compares against twice the
    number of nodes.
    """
    if not beta > 0:
        raise ModelError(f"beta must be > 0, got {beta!r}")
    T = math.sqrt(math.log(1.0 / tol)) + beta
    coarse = _gl_integrals(beta, T, nodes)
    fine = _gl_integrals(beta, T, 2 * nodes)
    err = float(np.max(np.abs(fine - coarse))) + math.exp(-T * T)
    return GaussMoments(beta, float(fine[0]), float(fine[1]), float(fine[2]), err)


def gauss_terms(beta: float, k):
    """P(S_k > 0), E[S_k^+], E[(S_k^+)^2] for S_k ~ N(-k beta, k)."""
    k = np.asarray(k, dtype=float)
    x = beta * np.sqrt(k)
    # Phi(-x) = erfcx(x/sqrt2) e^{-x^2/2} / 2 and phi(x) = e^{-x^2/2}/sqrt(2 pi)
    g = np.exp(-0.5 * x * x)
    mills = 0.5 * erfcx(x / _SQRT2)
    p = g * mills
    e1 = np.sqrt(k) * g * (1.0 / _SQRT2PI - x * mills)
    e2 = k * g * ((1.0 + x * x) * mills - x / _SQRT2PI)
    return p, np.maximum(e1, 0.0), np.maximum(e2, 0.0)


def gauss_series_oracle(beta: float, tol: float = 1e-14, k_max: int = 10_000_000) -> GaussMoments:
    """c0, c1, c2 by summing the Spitzer series of the Gaussian walk.

    Terms decay at least like exp(-k beta^2 / 2); summation stops once the
    geometric bound on the remainder falls below ``tol``.
    """
    if not beta > 0:
        raise ModelError(f"beta must be > 0, got {beta!r}")
    if beta < 0.05:
        warnings.warn(f"slow convergence of the Gaussian series for beta={beta}", RuntimeWarning)
    q = math.exp(-0.5 * beta * beta)
    sums = np.zeros(3)
    parts = [[], [], []]
    start, chunk = 1, 4096
    while True:
        k = np.arange(start, start + chunk, dtype=float)
        terms = [t / k for t in gauss_terms(beta, k)]
        for acc, t in zip(parts, terms):
            acc.append(t)
        last = max(float(t[-1]) for t in terms)
        # ratio of consecutive terms is below q for all later k
        if last * q / (1.0 - q) < tol or start + chunk > k_max:
            break
        start += chunk
        chunk = min(chunk * 2, 1 << 20)
    for i in range(3):
        sums[i] = math.fsum(np.concatenate(parts[i]))
    return GaussMoments(beta, float(sums[0]), float(sums[1]), float(sums[2]), last * q / (1.0 - q))


def classical_approx(inst: QueueInstance, tol: float = 1e-14) -> StationaryMetrics:
    """Leading-order heavy-traffic approximation at the nominal hedge."""
    beta = inst.beta
    gm = gauss_max_moments(beta, tol)
    sigma = inst.sigma
    return StationaryMetrics(
        mean=sigma * gm.c1,
        variance=inst.sigma2 * gm.c2,
        p0=math.exp(-gm.c0),
        method="classical",
        err={"mean": sigma * gm.err, "variance": inst.sigma2 * gm.err, "p0": gm.err},
        info={"beta": beta, "c0": gm.c0, "c1": gm.c1, "c2": gm.c2},
    )


def hedge_params(a: float, b: float, s: float) -> HedgeParams:
    """Corrected hedge for real-valued capacity ``s`` (s > a b)."""
    mu = a * b
    if not s > mu:
        raise ModelError("capacity must exceed mean arrivals")
    sigma = math.sqrt(a * b * (b + 1.0))
    rho = mu / s
    one_minus_rho = (s - mu) / s
    beta = (s - mu) / sigma
    beta_n = math.sqrt(s * (one_minus_rho / (b + 1.0)) ** 2 * (1.0 + b / rho))
    sigma_tilde = beta_n * (b + rho) / one_minus_rho
    return HedgeParams(beta=beta, beta_n=beta_n, sigma_n=sigma, sigma_tilde=sigma_tilde)


def hedge_identity_residuals(hp: HedgeParams, b: float) -> tuple[float, float]:
    """Relative residuals of the two closed-form identities satisfied by the hedge.

    beta_n^2 = beta^2 (1 - 1 / (1 + b + sigma/beta)) and
    sigma_tilde = (beta_n / beta) sigma + beta_n b.
    """
    alt = hp.beta**2 * (1.0 - 1.0 / (1.0 + b + hp.sigma_n / hp.beta))
    r1 = abs(hp.beta_n**2 - alt) / alt
    alt_sigma = hp.beta_n / hp.beta * hp.sigma_n + hp.beta_n * b
    r2 = abs(hp.sigma_tilde - alt_sigma) / alt_sigma
    return r1, r2


def robust_hedge(inst: QueueInstance, check: bool = True) -> HedgeParams:
    hp = hedge_params(inst.a, inst.b, inst.s)
    if check:
        r1, r2 = hedge_identity_residuals(hp, inst.b)
        if r1 > 1e-12 or r2 > 1e-12:
            raise ArithmeticError(f"hedge identities violated: {r1:.3g}, {r2:.3g}")
    return hp


def hedge_from_regime(n: float, beta: float, delta: float) -> HedgeParams:
    """Hedge along mu = n, sigma^2 = n^(2 delta), s = n + beta n^delta (real n)."""
    b = n ** (2.0 * delta - 1.0) - 1.0
    if not b > 0:
        raise ModelError(f"need n > 1 for an overdispersed regime point, got n={n!r}")
    return hedge_params(n / b, b, n + beta * n**delta)


def robust_approx(inst: QueueInstance, tol: float = 1e-14, variance_reading: str = "squared") -> StationaryMetrics:
    """Saddle-point-corrected approximation at hedge beta_n and scale sigma_tilde.

    ``variance_reading`` picks the exponent in the variance integral:
    ``"squared"`` uses beta_n^2 / 2 throughout; ``"printed"`` keeps the mixed
    beta_n / 2 and beta_n^2 / 2 exponents for diagnostics.
    """
    hp = robust_hedge(inst)
    b, rho = inst.b, inst.rho
    gm = gauss_max_moments(hp.beta_n, tol)
    mean = hp.sigma_tilde * gm.c1
    p0 = math.exp(-(b + rho) / (b + 1.0) * gm.c0)
    factor = 0.5 * ((b + 1.0) / (b + rho) + 1.0)
    if variance_reading == "squared":
        var = hp.sigma_tilde**2 * gm.c2 * factor
    elif variance_reading == "printed":
        var = hp.sigma_tilde**2 * factor * _printed_variance_c2(hp.beta_n)
    else:
        raise ValueError(f"unknown variance reading {variance_reading!r}")
    return StationaryMetrics(
        mean=mean,
        variance=var,
        p0=p0,
        method="robust",
        err={"mean": hp.sigma_tilde * gm.err, "variance": hp.sigma_tilde**2 * gm.err, "p0": gm.err},
        info={"beta": hp.beta, "beta_n": hp.beta_n, "sigma_tilde": hp.sigma_tilde,
              "c0": gm.c0, "c1": gm.c1, "c2": gm.c2, "variance_reading": variance_reading},
    )


def _printed_variance_c2(beta_n: float, nodes: int = 400) -> float:
    """c2-like integral with the kernel exponents taken literally as beta_n / 2."""
    T = math.sqrt(math.log(1e14)) + beta_n
    x, w = _legendre(nodes)
    t = 0.5 * T * (x + 1.0)
    wt = 0.5 * T * w
    num = np.exp(-0.5 * beta_n - t * t)
    den = -np.expm1(-0.5 * beta_n**2 - t * t)
    integral = np.sum(wt * t * t / (0.5 * beta_n + t * t) ** 2 * num / den)
    return _SQRT2 * beta_n / math.pi * float(integral)
