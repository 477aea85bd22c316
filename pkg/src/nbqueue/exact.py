"""
Exact stationary metrics by three independent routes.

* Spitzer series over the random walk S_k = N_k - k s, where the k-slot
  arrival total N_k is negative binomial with shape k a and the same scale b.
* Pollaczek contour integrals on a circle between z = 1 and the outer zero r0.
* Root factorisation through the s - 1 zeros of z^s - A(z) in the unit disk.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc
from scipy.stats import nbinom

from .errors import ConvergenceError, ModelError
from .metrics import StationaryMetrics
from .model import QueueInstance, saddle_data
from .roots import RootSet, find_roots_fixed_point

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class SpitzerTerms:
    """Per-step quantities of the random walk, one entry per k.

    p_pos = P(S_k > 0), e_plus = E[S_k^+], e_plus_sq = E[(S_k^+)^2].
    """

    k: np.ndarray
    p_pos: np.ndarray
    e_plus: np.ndarray
    e_plus_sq: np.ndarray


def _terms_closed(inst: QueueInstance, k: np.ndarray):
    # Partial moments of N ~ NB(r, p) above m follow from
    # (j + 1) P(N = j + 1) = q (r + j) P(N = j), leaving only P(N = m) and
    # P(N > m) = I_q(m + 1, r) to evaluate.
    a, b, s = inst.a, inst.b, inst.s
    r = k * a
    m = k * float(s)
    # log-gamma differences lose ~eps * r of accuracy at large k; the Boost
    # pmf behind scipy.stats.nbinom does not
    pm = nbinom.pmf(m, r, 1.0 / (1.0 + b))
    tail = betainc(m + 1.0, r, b / (1.0 + b))
    e1 = b * (r + m) * pm + (b * r - m) * tail
    e2 = b * (r + m) * (pm + tail) + (b * (1.0 + r + m) - m * (1.0 + b)) * e1
    # deep-tail cancellation can leave tiny negative values
    return tail, np.maximum(e1, 0.0), np.maximum(e2, 0.0)


def _terms_summed(inst: QueueInstance, k: np.ndarray, tol: float = 1e-18, block: int = 4096):
    """Same quantities by explicit summation of the negative binomial upper tail."""
    a, b, s = inst.a, inst.b, inst.s
    q = b / (1.0 + b)
    out = np.zeros((3, len(k)))
    for i, kk in enumerate(k):
        r = kk * a
        m = int(kk) * s
        acc = [0.0, 0.0, 0.0]
        j0 = m + 1
        while True:
            j = np.arange(j0, j0 + block, dtype=float)
            pj = nbinom.pmf(j, r, 1.0 / (1.0 + b))
            x = j - m
            acc[0] += math.fsum(pj)
            acc[1] += math.fsum(x * pj)
            acc[2] += math.fsum(x * x * pj)
            j_last = j[-1]
            ratio = (r + j_last) / (j_last + 1.0) * q
            bound_ratio = ratio if r >= 1.0 else q
            if bound_ratio < 1.0:
                x_last = j_last - m
                g = bound_ratio / (1.0 - bound_ratio)
                rem = pj[-1] * (
                    x_last**2 * g + 2 * x_last * g / (1 - bound_ratio) + g * (1 + bound_ratio) / (1 - bound_ratio) ** 2
                )
                if rem < tol * max(acc[2], 1e-300) or rem < 1e-300:
                    break
            j0 += block
        out[:, i] = acc
    return out[0], out[1], out[2]


def spitzer_terms(inst: QueueInstance, k, method: str = "closed") -> SpitzerTerms:
    """P(S_k > 0), E[S_k^+] and E[(S_k^+)^2] for the given steps ``k``.

    ``method="closed"`` uses incomplete-beta tails with recurrence-derived
    partial moments; ``method="sum"`` sums the tail explicitly and is meant as
    an independent check.
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))
    if np.any(k < 1) or np.any(k != np.round(k)):
        raise ModelError("steps k must be positive integers")
    if method == "closed":
        p, e1, e2 = _terms_closed(inst, k)
    elif method == "sum":
        p, e1, e2 = _terms_summed(inst, k)
    else:
        raise ValueError(f"unknown method {method!r}")
    return SpitzerTerms(k.astype(int), p, e1, e2)


def _spitzer_tail_bounds(inst: QueueInstance, K, sd=None):
    """Bounds on sum_{k > K} of the three series (Chernoff at the saddle point).

    E[z^{S_k}] = h^k with h = exp(s g(z)); at z = z_sp this gives
    P(S_k > 0) <= h^k, E[S_k^+] <= h^k / (e theta), E[(S_k^+)^2] <= 4 h^k / (e theta)^2
    with theta = ln z_sp.
    """
    sd = sd or saddle_data(inst)
    log_h = inst.s * sd.g_sp
    one_minus_h = -math.expm1(log_h)
    theta = math.log1p(sd.z_sp - 1.0)
    K = np.asarray(K, dtype=float)
    base = np.exp((K + 1.0) * log_h) / ((K + 1.0) * one_minus_h)
    return base, base / (math.e * theta), base * 4.0 / (math.e * theta) ** 2


def spitzer_metrics(
    inst: QueueInstance, tol: float = 1e-12, k_max: int = 1_000_000, chunk: int = 1 << 16
) -> StationaryMetrics:
    """Mean, variance and P(Q = 0) from the Spitzer series.

    The number of steps K is the smallest for which the tail bound of every
    series is below ``tol``. Raises ConvergenceError (with partial sums in
    ``.partial``) if that K exceeds ``k_max``.
    """
    if not tol > 0:
        raise ValueError("tol must be > 0")
    sd = saddle_data(inst)

    def worst(K):
        return max(float(x) for x in _spitzer_tail_bounds(inst, K, sd))

    lo, hi = 1, 1
    while worst(hi) >= tol and hi < k_max:
        lo, hi = hi, min(2 * hi, k_max)
    while lo < hi:
        mid = (lo + hi) // 2
        if worst(mid) < tol:
            hi = mid
        else:
            lo = mid + 1
    K = hi
    converged = worst(K) < tol

    s_p, s_1, s_2 = [], [], []
    for start in range(1, K + 1, chunk):
        k = np.arange(start, min(start + chunk, K + 1), dtype=float)
        p, e1, e2 = _terms_closed(inst, k)
        s_p.append(p / k)
        s_1.append(e1 / k)
        s_2.append(e2 / k)
    sum_p = math.fsum(np.concatenate(s_p))
    mean = math.fsum(np.concatenate(s_1))
    var = math.fsum(np.concatenate(s_2))
    p0 = math.exp(-sum_p)

    b_p, b_1, b_2 = (float(x) for x in _spitzer_tail_bounds(inst, K, sd))
    # terms carry ~1e-12 relative error from log-gamma and incomplete-beta
    rel = 1e-12
    err = {
        "mean": b_1 + rel * mean,
        "variance": b_2 + rel * var,
        "p0": p0 * (b_p + rel * sum_p),
    }
    info = {"K": K, "tail_bounds": {"p": b_p, "mean": b_1, "variance": b_2}}
    result = StationaryMetrics(mean, var, p0, "spitzer", err, info)
    if not converged:
        raise ConvergenceError(
            f"Spitzer series needs more than k_max={k_max} steps (rho={inst.rho:.6g})", result
        )
    return result


# -- Pollaczek contour integrals ---------------------------------------------


def _clog1p(w):
    """log(1 + w) for complex w, accurate for small |w|."""
    x, y = w.real, w.imag
    return 0.5 * np.log1p(2.0 * x + x * x + y * y) + 1j * np.arctan2(y, 1.0 + x)


def _cexpm1(w):
    x, y = w.real, w.imag
    em1 = np.expm1(x)
    re = em1 * np.cos(y) - 2.0 * np.sin(0.5 * y) ** 2
    return re + 1j * (em1 + 1.0) * np.sin(y)


def _pollaczek_sums(inst: QueueInstance, radius: float, theta: np.ndarray, weights: np.ndarray):
    s, a, b = inst.s, inst.a, inst.b
    sn = np.sin(theta)
    # z - 1 without cancellation
    w = (radius - 1.0) - 2.0 * radius * np.sin(0.5 * theta) ** 2 + 1j * radius * sn
    z = 1.0 + w
    sg = -s * _clog1p(w) - a * _clog1p(-b * w)
    h = np.exp(sg)
    one_minus_h = -_cexpm1(sg)
    gp = -1.0 / z + inst.rho / (1.0 - b * w)
    # f'/f = s/z - s g' h / (1 - h); the s/z part integrates to zero against all
    # three kernels on |z| > 1, so only the second part is kept.
    F = -s * gp * h / one_minus_h
    g_mean = F / (-w) * z
    g_var = z * z * F / (w * w) * -1.0
    g_lp = -_clog1p(-1.0 / z) * F * z
    min_gap = float(np.min(np.abs(one_minus_h)))
    sums = tuple(float(np.sum(weights * g.real)) for g in (g_mean, g_var, g_lp))
    return sums, min_gap


def pollaczek_metrics(
    inst: QueueInstance,
    nodes: int | None = None,
    radius: float | None = None,
    tol: float | None = 1e-13,
    max_nodes: int = 1 << 23,
) -> StationaryMetrics:
    """Mean, variance and P(Q = 0) from Pollaczek contour integrals.

    Trapezoidal rule in the angle on |z| = radius (default: geometric mean of
    z_sp and r0), using conjugate symmetry so that only the upper half circle
    is evaluated. The node count starts at ``nodes`` (or an estimate from the
    width of the analyticity annulus) and doubles until two successive
    estimates agree to ``tol`` relative; with ``tol=None`` exactly ``nodes``
    nodes are used. ``err`` is the difference to the half-grid estimate.
    """
    sd = saddle_data(inst)
    R = math.sqrt(sd.z_sp * sd.r0) if radius is None else float(radius)
    if not 1.0 < R < sd.r0:
        raise ModelError(f"contour radius {R!r} outside (1, r0) = (1, {sd.r0!r})")
    strip = min(math.log(R), math.log(sd.r0 / R))
    if nodes is None:
        if tol is None:
            raise ValueError("fixed-node evaluation needs an explicit node count")
        n = max(64, 2 * inst.s, int(8.0 / strip))
        nodes = 1 << (n - 1).bit_length()
    if nodes < 64 or nodes % 2:
        raise ValueError("nodes must be an even integer >= 64")

    # half circle: theta_j = 2 pi j / N, j = 0..N/2; interior nodes count twice
    N = nodes
    theta = 2.0 * np.pi * np.arange(N // 2 + 1) / N
    wts = np.full(theta.size, 2.0)
    wts[0] = wts[-1] = 1.0
    # the even-indexed subset is the N/2 rule
    sums_half, _ = _pollaczek_sums(inst, R, theta[::2], wts[::2])
    sums, gap = _pollaczek_sums(inst, R, theta, wts)

    def estimates(raw, n):
        mean, var, lp = (x / n for x in raw)
        return np.array([mean, var, lp])

    prev = estimates(sums_half, N // 2)
    cur = estimates(sums, N)
    while tol is not None:
        diff = np.abs(cur - prev)
        if np.all(diff <= tol * np.maximum(1.0, np.abs(cur))):
            break
        if 2 * N > max_nodes:
            raise ConvergenceError(
                f"Pollaczek quadrature not converged with {N} nodes",
                _pollaczek_result(cur, prev, N, R, gap, converged=False),
            )
        theta_new = 2.0 * np.pi * (2 * np.arange(N // 2) + 1) / (2 * N)
        extra, gap_new = _pollaczek_sums(inst, R, theta_new, np.full(theta_new.size, 2.0))
        sums = tuple(x + y for x, y in zip(sums, extra))
        gap = min(gap, gap_new)
        N *= 2
        prev, cur = cur, estimates(sums, N)

    if gap < 1e-13:
        warnings.warn(f"|1 - h| = {gap:.3g} on the contour; integrand lost precision", RuntimeWarning)
    return _pollaczek_result(cur, prev, N, R, gap)


def _pollaczek_result(cur, prev, N, R, gap, converged=True):
    mean, var, lp = cur
    p0 = math.exp(lp)
    diff = np.abs(cur - prev)
    err = {"mean": float(diff[0]), "variance": float(diff[1]), "p0": float(p0 * diff[2])}
    info = {"nodes": N, "radius": R, "min_abs_one_minus_h": gap, "converged": converged,
            "precision_loss": gap < 1e-13}
    return StationaryMetrics(float(mean), float(var), p0, "pollaczek", err, info)


# -- root factorisation ------------------------------------------------------


def roots_metrics(inst: QueueInstance, roots: RootSet | None = None) -> StationaryMetrics:
    """Mean and P(Q = 0) from the zeros of z^s - A(z) in the unit disk.

    mean = sigma^2 / (2 (s - mu)) - (s - 1 + mu) / 2 + sum_k 1 / (1 - z_k)
    p0   = (s - mu) / A(0) * prod_k z_k / (z_k - 1)

    No variance is produced by this route (``variance`` is None).
    """
    if roots is None:
        roots = find_roots_fixed_point(inst)
    s = inst.s
    if len(roots.roots) != s - 1 or roots.status != "ok":
        raise ModelError(
            f"incomplete root set: {len(roots.roots)} of {s - 1} roots, status {roots.status!r}"
        )
    z = np.asarray(roots.roots, dtype=complex)
    inv = 1.0 / (1.0 - z)
    mean_c = inst.sigma2 / (2.0 * inst.slack) - (s - 1 + inst.mu) / 2.0 + np.sum(inv)
    log_prod = np.sum(np.log(z / (z - 1.0))) if s > 1 else 0.0
    log_p0 = math.log(inst.slack) + inst.a * math.log1p(inst.b) + log_prod
    p0_c = np.exp(log_p0)

    # first-order propagation of root residuals. With A(z) = z^s at a root,
    # f'(z) = z^(s-1) (s - a b z / (1 + b (1 - z))); working with the relative
    # residual 1 - A(z) z^-s avoids underflow of both factors for small |z|.
    if s > 1:
        log_ratio = -inst.a * np.log(1.0 + inst.b * (1.0 - z)) - s * np.log(z)
        rel_res = np.abs(_cexpm1(log_ratio))
        slope = np.abs(s - inst.a * inst.b * z / (1.0 + inst.b * (1.0 - z)))
        dz = np.abs(z) * (rel_res + _EPS) / slope
        err_mean = float(np.sum(dz * np.abs(inv) ** 2)) + 64 * _EPS * abs(mean_c)
        err_p0 = float(abs(p0_c) * np.sum(dz * np.abs(1.0 / z - 1.0 / (z - 1.0)))) + 64 * _EPS * abs(p0_c)
    else:
        err_mean = 64 * _EPS * abs(mean_c)
        err_p0 = 64 * _EPS * abs(p0_c)
    info = {
        "root_method": roots.method,
        "imag_mean": float(abs(np.imag(mean_c))),
        "imag_p0": float(abs(np.imag(p0_c))),
    }
    return StationaryMetrics(
        float(np.real(mean_c)), None, float(np.real(p0_c)), "roots",
        {"mean": err_mean, "p0": err_p0}, info,
    )
