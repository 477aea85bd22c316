"""
Independent reference solutions: a truncated Markov chain and a simulator.

Neither uses the random-walk series or the contour integrals, so both can
serve as ground truth for the exact engines. The Gaussian Spitzer series
oracle lives in ``asymptotics`` and is re-exported here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

from .asymptotics import gauss_series_oracle, robust_approx
from .errors import ConvergenceError, ModelError
from .metrics import StationaryMetrics
from .model import QueueInstance, pmf, saddle_data

__all__ = ["MarkovConfig", "SimConfig", "markov_stationary", "simulate", "gauss_series_oracle"]


@dataclass(frozen=True)
class MarkovConfig:
    """Truncation level and stationarity tolerance for the chain on {0..K}.

    ``K=None`` picks mean + 40 sd from the robust approximation and doubles
    until the mass in the top state is below ``tol``.
    """

    K: Optional[int] = None
    tol: float = 1e-12
    max_K: int = 20_000


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    warmup: Optional[int] = None
    periods: int = 1_000_000
    batches: int = 20
    shards: int = 1
    chunk: int = 1 << 18

    def __post_init__(self):
        if self.batches < 2:
            raise ModelError("need at least 2 batches for a confidence interval")
        if self.periods // self.batches < 1000:
            raise ModelError("periods / batches must be >= 1000")
        if self.shards < 1 or self.batches % self.shards:
            raise ModelError("batches must be a positive multiple of shards")


def _transition_matrix(inst: QueueInstance, K: int) -> np.ndarray:
    s = inst.s
    p = pmf(inst.arrivals, np.arange(K + s + 1))
    cdf = np.cumsum(p)
    # upper tails P(A >= x) taken from the survival function: 1 - cdf would
    # leave an absolute error of order eps that swamps the stationary tail
    sf = stats.nbinom.sf(np.arange(-1, K + s), inst.a, 1.0 / (1.0 + inst.b))
    P = np.zeros((K + 1, K + 1))
    for i in range(K + 1):
        # next state j = min(max(i + A - s, 0), K)
        lo = s - i  # A <= lo gives j = 0
        if lo >= 0:
            P[i, 0] = cdf[lo]
            start = lo + 1
        else:
            start = 0
        hi = K + s - i  # A >= hi gives j = K
        if start < hi:
            P[i, start - lo: K] = p[start:hi]
        P[i, K] += sf[hi]
    # absorb the residual rounding so that rows are stochastic
    P /= P.sum(axis=1, keepdims=True)
    return P


def _stationary(P: np.ndarray, tol: float, max_squarings: int = 64) -> tuple[np.ndarray, int]:
    """Power iteration accelerated by repeated squaring of the transition matrix."""
    M = P.copy()
    for n in range(1, max_squarings + 1):
        M = M @ M
        M /= M.sum(axis=1, keepdims=True)
        pi = M[0]
        if np.max(np.abs(M[-1] - pi)) < tol:
            break
    else:
        raise ConvergenceError("Markov power iteration did not converge", M[0])
    # a few plain steps remove the rounding left by the squarings
    for _ in range(4):
        pi = pi @ P
        pi /= pi.sum()
    return pi, n


def _solve_chain(inst: QueueInstance, K: int, tol: float):
    P = _transition_matrix(inst, K)
    pi, squarings = _stationary(P, tol)
    resid = float(np.abs(pi @ P - pi).sum())
    return pi, squarings, resid


def markov_stationary(inst: QueueInstance, cfg: MarkovConfig = MarkovConfig()) -> StationaryMetrics:
    """Stationary metrics of Q' = max(Q + A - s, 0) truncated to {0..K}.

    The top state absorbs all overflow, so its probability estimates the tail
    mass P(Q >= K). The stationary tail is geometric with ratio 1 / r0, which
    bounds the moments lost to truncation.
    """
    if cfg.K is None:
        approx = robust_approx(inst)
        K = int(math.ceil(approx.mean + 40.0 * approx.sd)) + inst.s
    else:
        K = int(cfg.K)
    if K < 1:
        raise ModelError("truncation level K must be >= 1")
    adaptive = cfg.K is None
    while True:
        pi, squarings, resid = _solve_chain(inst, K, cfg.tol)
        tail = float(pi[-1])
        if tail < cfg.tol or not adaptive:
            break
        if 2 * K > cfg.max_K:
            break
        K *= 2

    j = np.arange(K + 1, dtype=float)
    mean = math.fsum(j * pi)
    var = math.fsum((j - mean) ** 2 * pi)
    p0 = float(pi[0])

    # geometric tail with ratio q = 1 / r0 beyond K
    q = 1.0 / saddle_data(inst).r0
    g = q / (1.0 - q)
    err_mean = tail * g + resid * K
    err_var = tail * (K + g) ** 2 * (1.0 + g) + resid * K * K
    info = {"K": K, "tail_mass": tail, "squarings": squarings, "residual": resid}
    result = StationaryMetrics(
        mean, var, p0, "markov", {"mean": err_mean, "variance": err_var, "p0": tail + resid}, info
    )
    if tail >= cfg.tol:
        raise ConvergenceError(f"tail mass {tail:.3g} at K={K} exceeds tol={cfg.tol:g}", result)
    return result


def sample_arrivals(inst: QueueInstance, size: int, rng: np.random.Generator) -> np.ndarray:
    """Gamma-Poisson draws: rate ~ Gamma(a, scale b), count ~ Poisson(rate)."""
    lam = rng.gamma(inst.a, inst.b, size)
    return rng.poisson(lam)


def _run_shard(inst: QueueInstance, rng, warmup: int, periods: int, batches: int, chunk: int):
    s = inst.s
    q = 0
    left = warmup
    while left > 0:
        n = min(chunk, left)
        q = int(_lindley(q, sample_arrivals(inst, n, rng) - s)[-1])
        left -= n
    size = periods // batches
    stats_ = np.zeros((batches, 3))
    for bi in range(batches):
        acc = np.zeros(3)
        left = size
        while left > 0:
            n = min(chunk, left)
            path = _lindley(q, sample_arrivals(inst, n, rng) - s)
            q = int(path[-1])
            pf = path.astype(float)
            acc += (pf.sum(), (pf * pf).sum(), float(np.count_nonzero(path == 0)))
            left -= n
        stats_[bi] = acc / size
    return stats_


def _lindley(q0: int, steps: np.ndarray) -> np.ndarray:
    """Q_1..Q_n of Q' = max(Q + X, 0) from Q_0 = q0, via Q_n = S_n - min(-q0, min S_k)."""
    S = np.cumsum(steps, dtype=np.int64)
    floor = np.minimum(np.minimum.accumulate(S), -q0)
    return S - floor


def _ci(values: np.ndarray, level: float = 0.95) -> tuple[float, float, float]:
    m = float(np.mean(values))
    se = float(np.std(values, ddof=1)) / math.sqrt(len(values))
    h = float(stats.t.ppf(0.5 + level / 2.0, len(values) - 1)) * se
    return m, m - h, m + h


def simulate(inst: QueueInstance, cfg: SimConfig = SimConfig()) -> StationaryMetrics:
    """Monte Carlo estimate with batch-means 95% confidence intervals.

    Periods are split over ``cfg.shards`` independent streams spawned from the
    seed, so results depend only on (seed, shards). Each shard runs its own
    warm-up (default 10 / (1 - rho) periods, at least 10^4).
    """
    warmup = cfg.warmup
    if warmup is None:
        warmup = max(10_000, int(math.ceil(10.0 / (1.0 - inst.rho))))
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.shards)
    per_shard = cfg.periods // cfg.shards
    per_batches = cfg.batches // cfg.shards
    blocks = [
        _run_shard(inst, np.random.default_rng(c), warmup, per_shard, per_batches, cfg.chunk)
        for c in children
    ]
    B = np.vstack(blocks)
    m1, m2, z = B[:, 0], B[:, 1], B[:, 2]
    mean, lo_m, hi_m = _ci(m1)
    # delta-method pseudo-values: their average is mean(m2) - mean(m1)^2, and
    # unlike per-batch m2 - m1^2 they carry no downward bias of order Var(m1)
    mbar = float(np.mean(m1))
    var, lo_v, hi_v = _ci(m2 - 2.0 * mbar * m1 + mbar * mbar)
    p0, lo_p, hi_p = _ci(z)
    ci = {"mean": (lo_m, hi_m), "variance": (lo_v, hi_v), "p0": (lo_p, hi_p)}
    err = {k: 0.5 * (v[1] - v[0]) for k, v in ci.items()}
    info = {"ci95": ci, "seed": cfg.seed, "periods": per_shard * cfg.shards, "batches": len(B),
            "warmup": warmup, "shards": cfg.shards}
    return StationaryMetrics(mean, var, p0, "montecarlo", err, info)
