"""Exponential-tilting martingale parameters for the n-step walk.

The pricing kernel is Z_n = exp(-a_n w - b_n) in the terminal walk value w.
The per-step factorization exp(-a zeta/sqrt(n) - b/n) reduces the martingale
condition to one scalar equation in a:

    log L((1-a)/sqrt(n)) = log L(-a/sqrt(n)),

with L the innovation's Laplace transform, after which b_n = n log L(-a_n/sqrt(n))
normalizes the kernel to unit expectation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BracketError
from .lattice import FiniteRV, log_laplace, moments, terminal_distribution

BISECT_TOL = 1e-13


@dataclass(frozen=True)
class EsscherParams:
    n: int
    a: float
    b: float


def _martingale_gap(rv: FiniteRV, n: int, a: float) -> float:
    """g(a); strictly decreasing with a unique root at a_n."""
    s = math.sqrt(n)
    return log_laplace(rv, (1.0 - a) / s) - log_laplace(rv, -a / s)


def _martingale_gap_prime(rv: FiniteRV, n: int, a: float) -> float:
    s = math.sqrt(n)

    def kprime(lam):
        w = rv.probs * np.exp(lam * rv.values - log_laplace(rv, lam))
        return float(w @ rv.values)

    return (kprime(-a / s) - kprime((1.0 - a) / s)) / s


def solve_esscher(rv: FiniteRV, n: int) -> EsscherParams:
    """Bisect the martingale equation for a_n, then normalize for b_n.

    g(a) tends to v_max/sqrt(n) > 0 as a -> -inf and v_min/sqrt(n) < 0 as
    a -> +inf (bounded support), so a sign-changing bracket always exists;
    expansion from [-1, 2] is defensive only.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    lo, hi = -1.0, 2.0
    g_lo, g_hi = _martingale_gap(rv, n, lo), _martingale_gap(rv, n, hi)
    for _ in range(200):
        if g_lo > 0.0:
            break
        lo -= (hi - lo)
        g_lo = _martingale_gap(rv, n, lo)
    else:
        raise BracketError("no positive bracket endpoint for the martingale equation")
    for _ in range(200):
        if g_hi < 0.0:
            break
        hi += (hi - lo)
        g_hi = _martingale_gap(rv, n, hi)
    else:
        raise BracketError("no negative bracket endpoint for the martingale equation")
    while hi - lo > BISECT_TOL:
        mid = 0.5 * (lo + hi)
        g_mid = _martingale_gap(rv, n, mid)
        if g_mid == 0.0:
            lo = hi = mid
            break
        if g_mid > 0.0:
            lo = mid
        else:
            hi = mid
    a = 0.5 * (lo + hi)
    b = n * log_laplace(rv, -a / math.sqrt(n))
    return EsscherParams(n=n, a=a, b=b)


def asymptotic_a(rv: FiniteRV, n: int) -> float:
    """Two-term expansion 1/2 + E[zeta^3] / (24 sqrt(n))."""
    third = moments(rv)[2]
    return 0.5 + third / (24.0 * math.sqrt(n))


def Z_n_of(params: EsscherParams, w):
    """Discrete pricing kernel exp(-a_n w - b_n)."""
    return np.exp(log_Z_n_of(params, w))


def log_Z_n_of(params: EsscherParams, w):
    return -params.a * np.asarray(w, dtype=float) - params.b


def ratio_bound_C(rv: FiniteRV, n_list, merge_tol: float = 1e-9):
    """Uniform kernel-ratio bound: C with 1/C <= Z_n/Z <= C on every lattice.

    Returns (C, envelope) where C = exp(max |log Z_n - log Z|) over all
    lattice atoms and n in n_list, and envelope is the analytic bound
    max_n [ |a_n - 1/2| K sqrt(n) + |b_n - 1/8| ] with K the support bound.
    """
    n_list = list(n_list)
    if not n_list:
        raise ValueError("n_list must be nonempty")
    K = rv.support_bound
    worst = 0.0
    envelope = 0.0
    for n in n_list:
        params = solve_esscher(rv, n)
        dist = terminal_distribution(rv, n, merge_tol=merge_tol)
        dev = np.abs(
            (-params.a * dist.w - params.b) - (-0.5 * dist.w - 0.125)
        )
        worst = max(worst, float(np.max(dev)))
        envelope = max(
            envelope,
            abs(params.a - 0.5) * K * math.sqrt(n) + abs(params.b - 0.125),
        )
    return math.exp(worst), envelope
