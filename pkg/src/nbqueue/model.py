"""
Arrival law, queue instance and the analytic quantities shared by all engines.

Arrivals per slot are Gamma-Poisson (negative binomial): the Poisson rate is
Gamma distributed with shape ``a`` and scale ``b``, so the slot count has

    pgf  A(z) = (1 + b (1 - z))^(-a),   mean a b,   variance a b (b + 1).

A queue instance adds an integer service capacity ``s`` per slot and the
queue evolves by the Lindley recursion Q' = max(Q + A - s, 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import ConvergenceError, ModelError


@dataclass(frozen=True)
class ArrivalModel:
    """Negative binomial arrival law with Gamma shape ``a`` and scale ``b``."""

    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and self.a > 0):
            raise ModelError(f"shape a must be finite and > 0, got {self.a!r}")
        if not (math.isfinite(self.b) and self.b > 0):
            raise ModelError(f"scale b must be finite and > 0, got {self.b!r}")

    @property
    def mean(self) -> float:
        return self.a * self.b

    @property
    def variance(self) -> float:
        return self.a * self.b * (self.b + 1.0)

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)

    @property
    def radius(self) -> float:
        """Radius of analyticity of the pgf, 1 + 1/b."""
        return 1.0 + 1.0 / self.b


@dataclass(frozen=True)
class QueueInstance:
    """Arrival law plus an integer capacity ``s`` served per slot."""

    arrivals: ArrivalModel
    s: int

    def __post_init__(self):
        s = self.s
        if isinstance(s, (bool, np.bool_)) or not isinstance(s, (int, np.integer)):
            if isinstance(s, float) and s.is_integer():
                object.__setattr__(self, "s", int(s))
            else:
                raise ModelError(f"capacity s must be an integer, got {s!r}")
        else:
            object.__setattr__(self, "s", int(s))
        if self.s < 1:
            raise ModelError(f"capacity s must be >= 1, got {self.s}")
        if not self.arrivals.mean < self.s:
            raise ModelError(
                f"unstable instance: mean arrivals {self.arrivals.mean!r} >= s={self.s}"
            )

    @classmethod
    def from_ab(cls, a: float, b: float, s: int) -> "QueueInstance":
        return cls(ArrivalModel(a, b), s)

    @property
    def a(self) -> float:
        return self.arrivals.a

    @property
    def b(self) -> float:
        return self.arrivals.b

    @property
    def mu(self) -> float:
        return self.arrivals.mean

    @property
    def sigma2(self) -> float:
        return self.arrivals.variance

    @property
    def sigma(self) -> float:
        return self.arrivals.sd

    @property
    def rho(self) -> float:
        return self.mu / self.s

    @property
    def slack(self) -> float:
        """s - mu, computed without forming 1 - rho."""
        return self.s - self.mu

    @property
    def beta(self) -> float:
        """Hedge recovered from s = mu + beta * sigma."""
        return self.slack / self.sigma


@dataclass(frozen=True)
class RegimePoint:
    """Point on the scaling path mu = n, sigma^2 = n^(2 delta), s = n + beta n^delta."""

    n: float
    delta: float
    beta: float


@dataclass(frozen=True)
class SaddleData:
    """Saddle point, outer zero and curvature of g(z) = -ln z + ln A(z) / s.

    ``g_sp`` is g(z_sp) itself; exp(s * g_sp) is the Chernoff factor of one
    random-walk step and drives the tail bounds used by the exact engines.
    """

    z_sp: float
    r0: float
    g_dd_sp: float
    g_sp: float


def from_mean_variance(mu: float, sigma2: float) -> ArrivalModel:
    """Gamma-Poisson law with the given mean and (strictly larger) variance."""
    if not (mu > 0 and math.isfinite(mu)):
        raise ModelError(f"mean must be finite and > 0, got {mu!r}")
    if not (sigma2 > mu and math.isfinite(sigma2)):
        raise ModelError(
            f"variance must exceed the mean (overdispersion), got mu={mu!r}, sigma2={sigma2!r}"
        )
    excess = sigma2 - mu
    return ArrivalModel(a=mu * mu / excess, b=excess / mu)


def _log_base(model: ArrivalModel, z):
    """ln(1 + b (1 - z)) on the principal branch."""
    z = np.asarray(z)
    if np.iscomplexobj(z):
        return np.log(1.0 + model.b * (1.0 - z))
    return np.log1p(model.b * (1.0 - z))


def pgf(model: ArrivalModel, z):
    """Probability generating function (1 + b(1 - z))^(-a), principal branch.

    Accepts scalars or arrays, real or complex. Points on the branch cut
    z in [1 + 1/b, inf) are rejected.
    """
    zz = np.asarray(z)
    base = 1.0 + model.b * (1.0 - zz)
    on_cut = (np.imag(base) == 0) & (np.real(base) <= 0)
    if np.any(on_cut):
        raise ModelError(f"z on the branch cut [1 + 1/b, inf) = [{model.radius}, inf)")
    if np.iscomplexobj(zz):
        out = np.exp(-model.a * np.log(base))
    else:
        out = np.exp(-model.a * np.log1p(model.b * (1.0 - zz)))
    return out[()] if out.ndim == 0 else out


def log_pmf(model: ArrivalModel, j):
    j = np.asarray(j, dtype=float)
    if np.any(j < 0):
        raise ModelError("pmf index must be >= 0")
    a, b = model.a, model.b
    return (
        gammaln(a + j)
        - gammaln(a)
        - gammaln(j + 1.0)
        - a * math.log1p(b)
        + j * (math.log(b) - math.log1p(b))
    )


def pmf(model: ArrivalModel, j):
    """P(A = j) via log-gamma arithmetic; vectorised over ``j``."""
    out = np.exp(log_pmf(model, j))
    return out[()] if out.ndim == 0 else out


def _solve_monotone(fun, dfun, lo, hi, x0, tol, max_iter=200):
    """Newton on an increasing function, falling back to bisection inside [lo, hi]."""
    x = min(max(x0, lo), hi)
    for _ in range(max_iter):
        f = fun(x)
        if abs(f) < tol:
            return x
        if f > 0:
            hi = x
        else:
            lo = x
        d = dfun(x)
        step = x - f / d if d > 0 else None
        if step is None or not (lo < step < hi):
            step = 0.5 * (lo + hi)
        if step == x:
            return x
        x = step
    raise ConvergenceError(f"root solve did not converge (last residual {fun(x)!r})", x)


def regime_instance(s: int, beta: float, delta: float) -> tuple[QueueInstance, RegimePoint]:
    """Instance on the path mu = n, sigma^2 = n^(2 delta) with capacity ``s``.

    Solves n + beta * n^delta = s for real n > 1; only ``s`` is integral.
    """
    if not 0.5 < delta < 1.0:
        raise ModelError(f"delta must lie in (1/2, 1), got {delta!r}")
    if not beta > 0:
        raise ModelError(f"beta must be > 0, got {beta!r}")
    if int(s) != s or s < 2:
        raise ModelError(f"s must be an integer >= 2, got {s!r}")
    s = int(s)
    if s <= 1.0 + beta:
        raise ModelError(f"no regime point with n > 1 for s={s}, beta={beta}")

    n = _solve_monotone(
        lambda x: x + beta * x**delta - s,
        lambda x: 1.0 + beta * delta * x ** (delta - 1.0),
        1.0,
        float(s),
        # sigma ~ n^delta is small relative to s for large s
        s - beta * s**delta,
        tol=1e-12 * max(1.0, s),
    )
    model = from_mean_variance(n, n ** (2.0 * delta))
    return QueueInstance(model, s), RegimePoint(n=n, delta=delta, beta=beta)


def g_real(inst: QueueInstance, x):
    """g(1 + x) for real x, written with log1p to keep accuracy near z = 1."""
    x = np.asarray(x, dtype=float)
    return -np.log1p(x) - (inst.a / inst.s) * np.log1p(-inst.b * x)


def s_g(inst: QueueInstance, z):
    """s * g(z) = -s ln z - a ln(1 + b(1 - z)) for complex z (principal logs)."""
    z = np.asarray(z, dtype=complex)
    return -inst.s * np.log(z) - inst.a * np.log(1.0 + inst.b * (1.0 - z))


def g_prime(inst: QueueInstance, z):
    return -1.0 / z + inst.rho / (1.0 + (1.0 - z) * inst.b)


def saddle_data(inst: QueueInstance) -> SaddleData:
    """Saddle point z_sp, outer zero r0 of z^s - A(z), and g''(z_sp)."""
    b, rho = inst.b, inst.rho
    one_minus_rho = inst.slack / inst.s
    x_sp = one_minus_rho / (rho + b)
    z_sp = 1.0 + x_sp
    g_dd = (1.0 + b / rho) / z_sp**2
    g_sp = float(g_real(inst, x_sp))

    # r0 = 1 + x with g(1 + x) = 0 on (x_sp, 1/b); g is increasing there
    x_hi = 1.0 / b
    if not (g_sp < 0):
        raise ConvergenceError(f"g(z_sp) = {g_sp!r} is not negative; invalid instance")

    def dg(x):
        return -1.0 / (1.0 + x) + rho / (1.0 - b * x)

    x0 = 2.0 * one_minus_rho / (rho * b + 1.0)
    if not x_sp < x0 < x_hi:
        x0 = 0.5 * (x_sp + x_hi)
    # g -> +inf at x_hi, so the bracket always changes sign for stable input
    x_r0 = _solve_monotone(
        lambda x: float(g_real(inst, x)), dg, x_sp, x_hi * (1.0 - 1e-15), x0, tol=1e-15
    )
    return SaddleData(z_sp=z_sp, r0=1.0 + x_r0, g_dd_sp=g_dd, g_sp=g_sp)
