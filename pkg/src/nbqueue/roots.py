"""
Zeros of z^s - A(z) inside the unit disk.

Two independent finders: successive substitution z <- w_k A(z)^(1/s) with
w_k the s-th roots of unity, and the Buermann-Lagrange series for the
inverse of z (1 + b(1 - z))^(a/s) = w. A winding-number count on a circle
checks that the expected number of zeros was found.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import ConvergenceError
from .model import QueueInstance


@dataclass(frozen=True)
class RootSet:
    """The s - 1 zeros of z^s - A(z) in |z| < 1, ordered by k = 1..s-1.

    ``status`` is ``"ok"`` when every root met the tolerance. The
    Buermann-Lagrange finder reports ``"diverged"`` (with empty arrays) when
    its convergence test fails.
    """

    roots: np.ndarray
    residuals: np.ndarray
    iterations: np.ndarray
    method: str
    status: str = "ok"
    info: dict = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        return self.status == "ok" and len(self.roots) > 0

    def __len__(self):
        return len(self.roots)


def residual(inst: QueueInstance, z):
    """|z^s - A(z)|."""
    z = np.asarray(z, dtype=complex)
    return np.abs(z**inst.s - np.exp(-inst.a * np.log(1.0 + inst.b * (1.0 - z))))


def _mirror(half: np.ndarray, s: int) -> np.ndarray:
    """Complete roots for k = 1..s-1 from those for k = 1..floor(s/2)."""
    out = np.empty(s - 1, dtype=half.dtype)
    h = len(half)
    out[:h] = half
    # k and s - k are conjugate
    for k in range(h + 1, s):
        out[k - 1] = np.conj(half[s - k - 1])
    return out


def find_roots_fixed_point(
    inst: QueueInstance, tol: float = 1e-15, max_iter: int = 200_000
) -> RootSet:
    """Iterate z <- w_k A(z)^(1/s) from z = 0 for k = 1..s-1.

    All roots are iterated together. Roots near z = 1 converge slowly (the
    contraction factor approaches rho), so a component whose step ratio
    stagnates above 1/2 is extrapolated with Aitken's delta-squared.
    Conjugate symmetry is used: only k <= s/2 are iterated.
    """
    s, a, b = inst.s, inst.a, inst.b
    if s == 1:
        return RootSet(np.zeros(0, complex), np.zeros(0), np.zeros(0, int), "fixed_point")
    alpha = a / s
    k = np.arange(1, s // 2 + 1)
    w = np.exp(2j * np.pi * k / s)
    if s % 2 == 0:
        w[-1] = -1.0

    n = len(k)
    z = np.zeros(n, dtype=complex)
    z_prev1 = np.zeros(n, dtype=complex)
    z_prev2 = np.zeros(n, dtype=complex)
    prev_dz = np.full(n, np.inf)
    since = np.zeros(n, dtype=int)
    iters = np.zeros(n, dtype=int)
    active = np.ones(n, dtype=bool)

    for it in range(1, max_iter + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        x = z[idx]
        x_new = w[idx] * np.exp(-alpha * np.log(1.0 + b * (1.0 - x)))
        dz = np.abs(x_new - x)
        ratio = dz / prev_dz[idx]
        prev_dz[idx] = dz
        z_prev2[idx] = z_prev1[idx]
        z_prev1[idx] = x
        z[idx] = x_new
        since[idx] += 1
        iters[idx] = it

        done = dz <= tol * np.maximum(1.0, np.abs(x_new))
        active[idx[done]] = False

        # Aitken delta-squared on components converging linearly and slowly
        slow = ~done & (ratio > 0.5) & (ratio < 1.0) & (since[idx] >= 2)
        if np.any(slow):
            sel = idx[slow]
            x0, x1, x2 = z_prev2[sel], z_prev1[sel], z[sel]
            d2 = x2 - 2.0 * x1 + x0
            with np.errstate(divide="ignore", invalid="ignore"):
                acc = x2 - (x2 - x1) ** 2 / d2
            good = np.isfinite(acc) & (np.abs(acc) < 1.0)
            z[sel[good]] = acc[good]
            since[sel[good]] = 0
            prev_dz[sel[good]] = np.inf

    roots = _mirror(z, s)
    its = _mirror(iters.astype(float), s).astype(int)
    if s % 2 == 0:
        roots[s // 2 - 1] = roots[s // 2 - 1].real
    res = residual(inst, roots)
    status = "ok" if not active.any() else "not_converged"
    return RootSet(roots, res, its, "fixed_point", status, {"max_iter": max_iter, "tol": tol})


def bl_radius_factor(inst: QueueInstance) -> float:
    """1 / r_BL: asymptotic ratio of consecutive Buermann-Lagrange terms.

    Below 1 for every stable instance and tends to 1 as rho -> 1.
    """
    b, rho = inst.b, inst.rho
    t = rho / b
    one_minus_rho = inst.slack / inst.s
    # ln((b + rho)/(b + 1)) = log1p(-(1 - rho)/(b + 1))
    log_q = (t + 1.0) * math.log1p(-one_minus_rho / (b + 1.0)) - t * math.log(rho)
    return math.exp(log_q)


def _bl_log_coeffs(inst: QueueInstance, n_terms: int) -> np.ndarray:
    """ln of d * Gamma(l alpha + l - 1) / (Gamma(l + 1) Gamma(l alpha)) * c^l, l = 1..n."""
    a, b, s = inst.a, inst.b, inst.s
    alpha = a / s
    ell = np.arange(1, n_terms + 1, dtype=float)
    log_c = math.log(b) - (alpha + 1.0) * math.log1p(b)
    log_d = math.log1p(b) - math.log(b)
    return (
        log_d
        + gammaln(ell * alpha + ell - 1.0)
        - gammaln(ell + 1.0)
        - gammaln(ell * alpha)
        + ell * log_c
    )


def bl_terms_needed(inst: QueueInstance, tol: float) -> float:
    """Estimated number of series terms for a remainder below ``tol``."""
    q = bl_radius_factor(inst)
    if q >= 1.0:
        return math.inf
    alpha = inst.a / inst.s
    # Stirling form of the coefficient magnitude: D l^(-3/2) (q/c)^l c^l d
    log_D = 0.5 * math.log(alpha) - 1.5 * math.log1p(alpha) - 0.5 * math.log(2 * math.pi)
    log_d = math.log1p(inst.b) - math.log(inst.b)
    target = math.log(tol) + math.log1p(-q)
    ell = 1.0
    while ell < 1e9:
        if log_D + log_d - 1.5 * math.log(ell) + ell * math.log(q) < target:
            return ell
        ell *= 1.25
    return math.inf


def find_roots_bl(inst: QueueInstance, terms: int = 20_000, tol: float = 1e-14) -> RootSet:
    """Zeros from the Buermann-Lagrange series z_k = sum_l t_l w_k^l.

    The series converges geometrically with ratio ``bl_radius_factor``. If the
    number of terms needed to reach ``tol`` exceeds ``terms`` the series is
    declared divergent for practical purposes and no roots are returned.
    """
    s = inst.s
    q = bl_radius_factor(inst)
    need = bl_terms_needed(inst, tol)
    info = {"radius_factor": q, "terms_needed": need, "terms_max": terms, "tol": tol}
    if s == 1:
        return RootSet(np.zeros(0, complex), np.zeros(0), np.zeros(0, int), "buermann_lagrange", info=info)
    if not need <= terms:
        empty = np.zeros(0)
        return RootSet(empty.astype(complex), empty, empty.astype(int), "buermann_lagrange", "diverged", info)

    n_terms = int(min(terms, max(8, math.ceil(1.5 * need))))
    log_t = _bl_log_coeffs(inst, n_terms)
    t = np.exp(log_t)
    # remainder bound: terms beyond n decay at ratio at most q
    tail = t[-1] * q / (1.0 - q)
    info.update(terms_used=n_terms, remainder_bound=float(tail))

    k = np.arange(1, s // 2 + 1)
    ell = np.arange(1, n_terms + 1)
    half = np.empty(len(k), dtype=complex)
    for i, kk in enumerate(k):
        # w^l with exact reduction of the exponent mod s
        phase = np.exp(2j * np.pi * ((kk * ell) % s) / s)
        half[i] = np.sum(t * phase)
    if s % 2 == 0:
        half[-1] = half[-1].real
    roots = _mirror(half, s)
    res = residual(inst, roots)
    its = np.full(s - 1, n_terms, dtype=int)
    return RootSet(roots, res, its, "buermann_lagrange", "ok", info)


def _winding(fun, r: float, n_init: int, max_depth: int = 64) -> float:
    """Winding number of fun(r e^{i theta}) about 0, with adaptive refinement.

    A segment is accepted once the chord and the midpoint deviation are small
    relative to the modulus at its ends, so no loop around 0 fits inside it.
    """
    theta = np.linspace(0.0, 2 * np.pi, n_init + 1)
    vals = fun(r * np.exp(1j * theta))
    total = 0.0
    stack = [(theta[i], theta[i + 1], vals[i], vals[i + 1], 0) for i in range(n_init)][::-1]
    while stack:
        t0, t1, v0, v1, depth = stack.pop()
        tm = 0.5 * (t0 + t1)
        vm = complex(fun(np.array([r * np.exp(1j * tm)]))[0])
        scale = min(abs(v0), abs(v1), abs(vm))
        if scale == 0.0:
            raise ConvergenceError("function vanishes on the counting contour")
        smooth = abs(v1 - v0) < 0.25 * scale and abs(vm - 0.5 * (v0 + v1)) < 0.25 * scale
        if smooth or depth >= max_depth:
            total += np.angle(v1 / v0)
        else:
            stack.append((tm, t1, vm, v1, depth + 1))
            stack.append((t0, tm, v0, vm, depth + 1))
    return total / (2 * np.pi)


def count_zeros(inst: QueueInstance, radius: float) -> int:
    """Number of zeros of z^s - A(z) in |z| < radius by the argument principle.

    Uses z^s - A(z) = z^s (1 - h(z)) with h = A(z) z^-s, so the count is s plus
    the winding number of 1 - h. ``radius`` must stay below 1 + 1/b.
    """
    s, a, b = inst.s, inst.a, inst.b
    if not 0 < radius < inst.arrivals.radius:
        raise ValueError("counting radius must lie in (0, 1 + 1/b)")

    def one_minus_h(z):
        return 1.0 - np.exp(-a * np.log(1.0 + b * (1.0 - z)) - s * np.log(z))

    wind = _winding(one_minus_h, radius, n_init=max(256, 16 * s))
    return s + int(round(wind))
