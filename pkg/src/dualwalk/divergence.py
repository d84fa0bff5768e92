"""Dual value functions with poles: the density-reciprocal construction.

Taking V equal to the reciprocal of the kernel's density near zero makes the
dual integrand there exactly a power of the integration variable, so the
dual value E[V(y Z)] flips between divergent and finite at y = e^{-1/4}.
Truncated integrals on a deep epsilon ladder classify each side numerically.
A separate doubling-exponent series realizes the regime where both the dual
value and its derivative stay finite at the pole.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .bsm import log_z_density_from_log
from .conjugate import ArgScaledV, UtilitySpec, conjugate_U

DIVERGENCE_THRESHOLD = math.exp(-0.25)
LN2 = math.log(2.0)

SLOPE_TOL = 0.05        # fitted log I vs log(1/eps) slope declaring divergence
CAUCHY_TOL = 1e-6       # absolute increment declaring convergence
TREND_TOL = 0.01        # local slopes may not collapse by more than this
DEFAULT_Z0 = 0.1
DEFAULT_EPSILONS = tuple(10.0 ** (-4.0 * j) for j in range(1, 21))

SERIES_TERM_TOL = 1e-16
LINEAR_OVERFLOW = 1e300


def log_V0(y):
    """log of the density-reciprocal conjugate 1/f."""
    return -log_z_density_from_log(np.log(np.asarray(y, dtype=float)))


def V0(y):
    """sqrt(pi/2) * y * exp(2 (ln y + 1/8)^2), the reciprocal of the kernel density."""
    return np.exp(log_V0(y))


def V0_stationary_point(lo: float = 0.3, hi: float = 1.5, tol: float = 1e-12) -> float:
    """Numerically locate where V0 stops decreasing (bisect a finite-difference sign).

    Analytically (d/dy) log V0 = (4 ln y + 3/2)/y, putting the minimum at
    e^{-3/8}; measured rather than assumed, since published descriptions of
    the decreasing region disagree with the derivative's sign change.
    """
    h = 1e-7

    def slope(y):
        return float(log_V0(y * (1 + h)) - log_V0(y * (1 - h)))

    a, b = lo, hi
    if not slope(a) < 0 < slope(b):
        raise ValueError("stationary point not bracketed by [lo, hi]")
    while b - a > tol:
        mid = 0.5 * (a + b)
        if slope(mid) < 0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


class DensityReciprocalV(UtilitySpec):
    """Dual spec equal to 1/f on (0, z0], continued by a C1 hyperbola tail.

    The tail a/(y + c) matches value and slope at z0 and keeps the extension
    positive, convex, decreasing, with V'(infinity) = 0; divergence behavior
    depends only on (0, z0), which the tail never touches.
    """

    family = "prop1b_v0"

    def __init__(self, z0: float = DEFAULT_Z0):
        if z0 <= 0:
            raise ValueError("z0 must be positive")
        if not _v0_decreasing_convex_on(z0):
            raise ValueError(
                f"V0 is not decreasing and convex on (0, {z0}]; choose z0 <= "
                f"{default_z0():g}"
            )
        self.z0 = float(z0)
        v0 = float(V0(z0))
        d0 = float(_V0prime(z0))     # negative
        self._tail_c = -v0 / d0 - z0
        self._tail_a = v0 * v0 / (-d0)

    def V(self, y):
        y = np.asarray(y, dtype=float)
        inner = y <= self.z0
        out = np.empty_like(y)
        out[inner] = V0(y[inner])
        out[~inner] = self._tail_a / (y[~inner] + self._tail_c)
        return out if out.ndim else float(out)

    def log_V(self, log_y):
        log_y = np.asarray(log_y, dtype=float)
        inner = log_y <= math.log(self.z0)
        out = np.empty_like(log_y)
        out[inner] = -log_z_density_from_log(log_y[inner])
        out[~inner] = math.log(self._tail_a) - np.log(
            np.exp(log_y[~inner]) + self._tail_c
        )
        return out if out.ndim else float(out)

    def Vprime(self, y):
        y = np.asarray(y, dtype=float)
        inner = y <= self.z0
        out = np.empty_like(y)
        out[inner] = _V0prime(y[inner])
        out[~inner] = -self._tail_a / (y[~inner] + self._tail_c) ** 2
        return out if out.ndim else float(out)

    def I(self, y):
        return -self.Vprime(y)

    def U(self, x):
        return conjugate_U(self, float(x))[0]

    def Uprime(self, x):
        return conjugate_U(self, float(x))[1]

    def to_json(self):
        import json

        return json.dumps({"family": "prop1b_v0", "z0": self.z0})


def _V0prime(y):
    y = np.asarray(y, dtype=float)
    return V0(y) * (4.0 * np.log(y) + 1.5) / y


def _v0_decreasing_convex_on(z0: float, points: int = 200) -> bool:
    """Finite-difference check that V0 is decreasing and convex on (0, z0]."""
    y = np.geomspace(z0 * 1e-6, z0, points)
    v = V0(y)
    if not np.all(np.diff(v) < 0):
        return False
    s = np.diff(v) / np.diff(y)
    return bool(np.all(np.diff(s) > 0))


def default_z0(max_z: float = DEFAULT_Z0) -> float:
    """Largest z <= max_z passing the decreasing/convex check (halving downward)."""
    z = max_z
    for _ in range(60):
        if _v0_decreasing_convex_on(z):
            return z
        z *= 0.5
    raise RuntimeError("no valid z0 found")


@dataclass(frozen=True)
class DivergenceScan:
    """Truncated dual integrals I(eps) and their divergence classification."""

    y: float
    z0: float
    epsilons: tuple
    truncated_integrals: tuple
    fitted_slope: float
    local_slopes: tuple
    classification: str   # diverges | converges | inconclusive

    def __post_init__(self):
        vals = self.truncated_integrals
        if any(b < a * (1 - 1e-12) for a, b in zip(vals, vals[1:])):
            raise ValueError("truncated integrals must be nondecreasing")


def _segment_integral(v_spec, y, z_lo, z_hi):
    """Integral of V(y z) f(z) dz on [z_lo, z_hi], in log-z coordinates.

    The integrand is exp(log V(y e^s) + log f(e^s) + s); a running offset
    keeps the exponentials in range even when f underflows linear floats.
    """
    s_lo, s_hi = math.log(z_lo), math.log(z_hi)
    log_V = v_spec.log_V if hasattr(v_spec, "log_V") else None

    def log_integrand(s):
        s = np.asarray(s, dtype=float)
        if log_V is not None:
            lv = log_V(s + math.log(y))
        else:
            lv = np.log(v_spec.V(np.exp(s + math.log(y))))
        return lv + log_z_density_from_log(s) + s

    # offset by the max over the endpoints and midpoint; integrand is monotone
    # or single-peaked in s for the densities handled here
    probe = np.array([s_lo, 0.5 * (s_lo + s_hi), s_hi])
    offset = float(np.max(log_integrand(probe)))

    def integrand(s):
        return math.exp(float(log_integrand(s)) - offset)

    val, _ = quad(integrand, s_lo, s_hi, limit=400)
    return val * math.exp(offset)


def divergence_scan(y: float, z0: float = DEFAULT_Z0, epsilons=DEFAULT_EPSILONS,
                    v_spec=None) -> DivergenceScan:
    """Classify E[V(y Z); Z < z0] as divergent or convergent from truncations.

    Integrals accumulate segment by segment down the epsilon ladder, so they
    are nondecreasing by construction.  Divergence shows up as a persistent
    positive slope of log I against log(1/eps); convergence as Cauchy
    increments below CAUCHY_TOL; anything else is reported inconclusive,
    which near the threshold is the honest answer.
    """
    if y <= 0:
        raise ValueError("y must be positive")
    eps = sorted(set(float(e) for e in epsilons), reverse=True)
    if not eps or eps[0] >= z0:
        raise ValueError("epsilons must be positive and below z0")
    if v_spec is None:
        v_spec = DensityReciprocalV(z0)
    integrals = []
    total = _segment_integral(v_spec, y, eps[0], z0)
    integrals.append(total)
    for hi, lo in zip(eps[:-1], eps[1:]):
        total += _segment_integral(v_spec, y, lo, hi)
        integrals.append(total)

    log_inv_eps = np.log(1.0 / np.array(eps))
    log_I = np.log(np.array(integrals))
    design = np.column_stack([log_inv_eps, np.ones_like(log_inv_eps)])
    (fitted_slope, _), *_ = np.linalg.lstsq(design, log_I, rcond=None)
    local = np.diff(log_I) / np.diff(log_inv_eps)

    cauchy = abs(integrals[-1] - integrals[-2]) if len(integrals) > 1 else math.inf
    trend_ok = local.size >= 2 and local[-1] >= local[0] - TREND_TOL
    if cauchy < CAUCHY_TOL:
        classification = "converges"
    elif fitted_slope > SLOPE_TOL and trend_ok and local[-1] > SLOPE_TOL / 2:
        classification = "diverges"
    else:
        classification = "inconclusive"
    return DivergenceScan(
        y=y,
        z0=z0,
        epsilons=tuple(eps),
        truncated_integrals=tuple(integrals),
        fitted_slope=float(fitted_slope),
        local_slopes=tuple(float(s) for s in local),
        classification=classification,
    )


def shift_V(v_spec, y0: float):
    """Move the dual's divergence pole to y0: V^{y0}(y) = V((e^{-1/4}/y0) y)."""
    if y0 <= 0:
        raise ValueError("y0 must be positive")
    return ArgScaledV(v_spec, DIVERGENCE_THRESHOLD / y0)


def doubling_series_v(y: float) -> float:
    """sum_k y^{-(2^k - 1)} / (2^k (2^k - 1)); +inf sentinel below y = 1.

    For y >= 1 the terms decay faster than 4^{-k}, giving absolute error
    below 1e-12 at the stopping rule; for y < 1 partial sums overflow the
    sentinel bound quickly and +inf is returned in-band.
    """
    return _doubling_sum(y, derivative=False)


def doubling_series_vprime(y: float) -> float:
    """-sum_k y^{-2^k} / 2^k with the same sentinel convention."""
    s = _doubling_sum(y, derivative=True)
    return -s if math.isfinite(s) else -math.inf


def _doubling_sum(y: float, derivative: bool) -> float:
    if y <= 0:
        raise ValueError("y must be positive")
    log_y = math.log(y)
    total = 0.0
    k = 1
    while k < 20000:
        two_k = 2.0**k
        if derivative:
            log_term = -two_k * log_y - k * LN2
        else:
            log_term = -(two_k - 1.0) * log_y - k * LN2 - math.log(two_k - 1.0)
        if log_term > 690.0:
            return math.inf
        term = math.exp(log_term)
        total += term
        if total > LINEAR_OVERFLOW:
            return math.inf
        if term < SERIES_TERM_TOL * max(total, 1.0) and y >= 1.0:
            break
        if y < 1.0 and k > 1100:
            # log_y < 0 makes log_term blow past 690 long before this
            return math.inf
        k += 1
    return total
