"""Utility families and Legendre-Fenchel machinery.

Each family exposes the quintet U, U', I = (U')^{-1}, V, V' in closed form
where available; the generic transforms :func:`conjugate_V` and
:func:`conjugate_U` supply the numeric fallback.  V is convex and strictly
decreasing, U strictly concave and increasing, and V' = -I throughout.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq
from scipy.special import logsumexp

from .errors import BracketError, NormalizationError
from .optimize import bracket_min, golden_min

ROOT_XTOL = 1e-12        # relative, in x, for U'(x) = y inversions
GOLDEN_LOG_TOL = 1e-10   # absolute, in log y, for conjugate_U
SERIES_EXIT_NATS = 40.0  # drop series terms this far below the running sum


class UtilitySpec:
    """Interface shared by all utility families."""

    family = "abstract"

    def U(self, x):
        raise NotImplementedError

    def Uprime(self, x):
        raise NotImplementedError

    def I(self, y):
        """Inverse marginal utility (U')^{-1}."""
        raise NotImplementedError

    def V(self, y):
        raise NotImplementedError

    def Vprime(self, y):
        return -self.I(y)

    def shift(self, c: float) -> "ShiftedUtility":
        """U + c (and therefore V + c); marginal quantities are unchanged."""
        return ShiftedUtility(self, c)

    def to_json(self) -> str:
        raise NotImplementedError(f"{self.family} has no wire format")


@dataclass(frozen=True)
class CRRA(UtilitySpec):
    """U(x) = x^gamma / gamma for gamma in (0, 1)."""

    gamma: float
    family = "crra"

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ValueError("CRRA gamma must lie in (0, 1)")

    def U(self, x):
        return np.power(x, self.gamma) / self.gamma

    def Uprime(self, x):
        return np.power(x, self.gamma - 1.0)

    def I(self, y):
        return np.power(y, -1.0 / (1.0 - self.gamma))

    def V(self, y):
        g = self.gamma
        return (1.0 - g) / g * np.power(y, -g / (1.0 - g))

    def Vprime(self, y):
        return -self.I(y)

    def to_json(self):
        return json.dumps({"family": "crra", "gamma": self.gamma})


def power_utility(alpha: float, beta: float, x):
    """Closed-form utility conjugate to V(y) = beta * y^{-alpha}.

    U(x) = (1+alpha) * alpha^{-alpha/(1+alpha)} * beta^{1/(1+alpha)}
           * x^{alpha/(1+alpha)}.
    """
    if alpha <= 0 or beta <= 0:
        raise ValueError("alpha and beta must be positive")
    a = alpha
    expo = a / (1.0 + a)
    return (1.0 + a) * np.exp(
        -expo * math.log(a) + math.log(beta) / (1.0 + a) + expo * np.log(x)
    )


def log_power_utility(alpha: float, log_beta: float, log_x: float) -> float:
    """log of :func:`power_utility` with beta and x given in log form."""
    a = alpha
    return (
        math.log1p(a)
        - a / (1.0 + a) * math.log(a)
        + (log_beta + a * log_x) / (1.0 + a)
    )


def power_conjugate_value(c: float, alpha: float, x: float):
    """inf_y [c * y^{-alpha} + x * y], the exact conjugate of a power dual.

    Equals (1+alpha) * c^{1/(1+alpha)} * (x/alpha)^{alpha/(1+alpha)}; used as
    an independent oracle for the numeric inversion.
    """
    a = alpha
    return (1.0 + a) * math.exp(
        math.log(c) / (1.0 + a) + a / (1.0 + a) * (math.log(x) - math.log(a))
    )


@dataclass(frozen=True)
class PowerConjugate(UtilitySpec):
    """Family defined through its dual: V(y) = beta * y^{-alpha}."""

    alpha: float
    beta: float
    family = "power_conjugate"

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be positive")

    def U(self, x):
        return power_utility(self.alpha, self.beta, x)

    def Uprime(self, x):
        # y solving I(y) = x
        return np.power(self.alpha * self.beta / np.asarray(x, dtype=float),
                        1.0 / (self.alpha + 1.0))

    def I(self, y):
        return self.alpha * self.beta * np.power(y, -self.alpha - 1.0)

    def V(self, y):
        return self.beta * np.power(y, -self.alpha)

    def Vprime(self, y):
        return -self.I(y)

    def log_V(self, log_y):
        return math.log(self.beta) - self.alpha * np.asarray(log_y, dtype=float)

    def to_json(self):
        return json.dumps(
            {"family": "power_conjugate", "alpha": self.alpha, "beta": self.beta}
        )


@dataclass(frozen=True)
class SeriesConjugate(UtilitySpec):
    """V(y) = sum_k exp(log_beta_k) * y^{-alpha_k}, alpha_k strictly increasing.

    Coefficients are carried in log form: the growth-certificate terms have
    log_beta_k thousands of nats below zero while alpha_k grows without
    bound, so linear-space coefficients would underflow.
    """

    alphas: np.ndarray
    log_betas: np.ndarray
    family = "series_conjugate"

    def __post_init__(self):
        alphas = np.asarray(self.alphas, dtype=float)
        log_betas = np.asarray(self.log_betas, dtype=float)
        if alphas.ndim != 1 or alphas.shape != log_betas.shape or alphas.size == 0:
            raise ValueError("alphas and log_betas must be matching 1-d arrays")
        if np.any(alphas <= 0):
            raise ValueError("series exponents must be positive")
        if not np.all(np.diff(alphas) > 0):
            raise ValueError("series exponents must be strictly increasing")
        alphas.flags.writeable = False
        log_betas.flags.writeable = False
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "log_betas", log_betas)

    def _term_logs(self, log_y: float) -> np.ndarray:
        return self.log_betas - self.alphas * log_y

    def log_V(self, log_y: float) -> float:
        """log V at log y, summing terms until they fall SERIES_EXIT_NATS under.

        Term logs are monotone in k away from log_y = 0, so the scan runs from
        the dominant end and exits early; the dropped tail is bounded by
        (number dropped) * exp(-SERIES_EXIT_NATS) relative.
        """
        logs = self._term_logs(log_y)
        order = range(len(logs)) if log_y >= 0 else range(len(logs) - 1, -1, -1)
        kept = []
        best = -math.inf
        for k in order:
            lk = logs[k]
            if lk < best - SERIES_EXIT_NATS and len(kept) > 0:
                break
            kept.append(lk)
            best = max(best, lk)
        return float(logsumexp(np.array(kept)))

    def V(self, y):
        y = np.asarray(y, dtype=float)
        if y.ndim == 0:
            return math.exp(self.log_V(math.log(float(y))))
        return np.array([math.exp(self.log_V(math.log(v))) for v in y])

    def log_Vprime_mag(self, log_y: float) -> float:
        """log |V'|(log y); V' = -sum alpha_k beta_k y^{-alpha_k - 1}."""
        logs = self._term_logs(log_y) + np.log(self.alphas) - log_y
        return float(logsumexp(logs))

    def Vprime(self, y):
        y = np.asarray(y, dtype=float)
        if y.ndim == 0:
            return -math.exp(self.log_Vprime_mag(math.log(float(y))))
        return np.array([-math.exp(self.log_Vprime_mag(math.log(v))) for v in y])

    def I(self, y):
        return -self.Vprime(y)

    def U(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            return conjugate_U(self, float(x))[0]
        return np.array([conjugate_U(self, float(v))[0] for v in x])

    def Uprime(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            return conjugate_U(self, float(x))[1]
        return np.array([conjugate_U(self, float(v))[1] for v in x])

    def to_json(self):
        terms = [
            {"alpha": float(a), "log_beta": float(lb)}
            for a, lb in zip(self.alphas, self.log_betas)
        ]
        return json.dumps({"family": "series_conjugate", "terms": terms})


@dataclass(frozen=True)
class NumericU(UtilitySpec):
    """Utility tabulated on a log-spaced grid; shape-preserving interpolation."""

    x_grid: np.ndarray
    u_values: np.ndarray
    family = "numeric_u"

    def __post_init__(self):
        x = np.asarray(self.x_grid, dtype=float)
        u = np.asarray(self.u_values, dtype=float)
        if not np.all(np.diff(x) > 0):
            raise ValueError("x grid must be strictly increasing")
        if not np.all(np.diff(u) > 0):
            raise ValueError("tabulated U must be strictly increasing")
        x.flags.writeable = False
        u.flags.writeable = False
        object.__setattr__(self, "x_grid", x)
        object.__setattr__(self, "u_values", u)
        interp = PchipInterpolator(np.log(x), u, extrapolate=False)
        object.__setattr__(self, "_interp", interp)
        object.__setattr__(self, "_dinterp", interp.derivative())

    def U(self, x):
        return self._interp(np.log(x))

    def Uprime(self, x):
        x = np.asarray(x, dtype=float)
        return self._dinterp(np.log(x)) / x

    def I(self, y):
        y = np.asarray(y, dtype=float)
        lo, hi = math.log(self.x_grid[0]), math.log(self.x_grid[-1])

        def solve(yv):
            return math.exp(
                brentq(lambda t: float(self.Uprime(math.exp(t))) - yv, lo, hi,
                       xtol=1e-14)
            )

        if y.ndim == 0:
            return solve(float(y))
        return np.array([solve(v) for v in y])

    def V(self, y):
        return conjugate_V(self, y)


class ShiftedUtility(UtilitySpec):
    """U + c; the conjugate shifts by the same constant."""

    def __init__(self, base: UtilitySpec, c: float):
        self.base = base
        self.c = float(c)
        self.family = base.family + "+shift"

    def U(self, x):
        return self.base.U(x) + self.c

    def Uprime(self, x):
        return self.base.Uprime(x)

    def I(self, y):
        return self.base.I(y)

    def V(self, y):
        return self.base.V(y) + self.c

    def Vprime(self, y):
        return self.base.Vprime(y)


class ArgScaledV(UtilitySpec):
    """Dual with rescaled argument: V(y) = base.V(scale * y).

    Moves any divergence pole of the base dual from y* to y*/scale.
    """

    def __init__(self, base: UtilitySpec, scale: float):
        if scale <= 0:
            raise ValueError("scale must be positive")
        self.base = base
        self.scale = float(scale)
        self.family = base.family + "*scaled"

    def V(self, y):
        return self.base.V(self.scale * np.asarray(y, dtype=float))

    def Vprime(self, y):
        return self.scale * self.base.Vprime(self.scale * np.asarray(y, dtype=float))

    def I(self, y):
        return -self.Vprime(y)

    def log_V(self, log_y):
        return self.base.log_V(log_y + math.log(self.scale))

    def U(self, x):
        return conjugate_U(self, float(x))[0]

    def Uprime(self, x):
        return conjugate_U(self, float(x))[1]


def utility_from_json(text: str) -> UtilitySpec:
    """Parse the utility wire format (see each family's to_json)."""
    doc = json.loads(text)
    family = doc.get("family")
    if family == "crra":
        return CRRA(float(doc["gamma"]))
    if family == "power_conjugate":
        return PowerConjugate(float(doc["alpha"]), float(doc["beta"]))
    if family == "series_conjugate":
        terms = doc["terms"]
        alphas = np.array([t["alpha"] for t in terms], dtype=float)
        log_betas = np.array([t["log_beta"] for t in terms], dtype=float)
        return SeriesConjugate(alphas, log_betas)
    if family == "prop1b_v0":
        from .divergence import DensityReciprocalV

        return DensityReciprocalV(float(doc["z0"]))
    raise ValueError(f"unknown utility family {family!r}")


def conjugate_V(u_spec: UtilitySpec, y: float) -> float:
    """V(y) = U(I(y)) - y * I(y), solving U'(x) = y when I is not closed form."""
    if y <= 0:
        raise ValueError("y must be positive")
    closed = type(u_spec).V is not UtilitySpec.V and not isinstance(u_spec, NumericU)
    if closed:
        return float(u_spec.V(y))
    # bracket U'(x) = y on a log-x grid; U' is strictly decreasing
    lo, hi = -1.0, 1.0
    for _ in range(200):
        if float(u_spec.Uprime(math.exp(lo))) > y:
            break
        lo -= (hi - lo)
    else:
        raise BracketError(f"could not bracket U'=y below; searched down to x=e^{lo}")
    for _ in range(200):
        if float(u_spec.Uprime(math.exp(hi))) < y:
            break
        hi += (hi - lo)
    else:
        raise BracketError(f"could not bracket U'=y above; searched up to x=e^{hi}")
    t = brentq(lambda s: float(u_spec.Uprime(math.exp(s))) - y, lo, hi,
               xtol=ROOT_XTOL, rtol=8.881784197001252e-16)
    x = math.exp(t)
    return float(u_spec.U(x)) - y * x


def conjugate_U(v_spec, x: float, y_guess: float = 1.0):
    """U(x) = inf_y [V(y) + x*y] by golden section on log y.

    ``v_spec`` may be a UtilitySpec or any object with a callable ``V``;
    a bare callable is also accepted.  Returns (value, argmin y).
    """
    if x <= 0:
        raise ValueError("x must be positive")
    V = v_spec.V if hasattr(v_spec, "V") else v_spec

    def f(t):
        return float(V(math.exp(t))) + x * math.exp(t)

    a, b = bracket_min(f, t0=math.log(y_guess), step=1.0)
    t_star, f_star = golden_min(f, a, b, tol=GOLDEN_LOG_TOL)
    return f_star, math.exp(t_star)


def asymptotic_elasticity(u_spec: UtilitySpec, x_grid):
    """Tail estimate of the elasticity limsup x U'(x) / U(x).

    Returns (sup over the grid's top decade, the raw tail values).  This is a
    finite-sample estimate of a limsup, not the limsup itself.  Raises
    NormalizationError when U is not strictly positive on the grid.
    """
    x = np.asarray(x_grid, dtype=float)
    u = np.asarray(u_spec.U(x), dtype=float)
    if np.any(u <= 0):
        raise NormalizationError(
            "U is non-positive on the grid; shift U (e.g. u_spec.shift(c)) so "
            "that U > 0 before estimating elasticity"
        )
    e = x * np.asarray(u_spec.Uprime(x), dtype=float) / u
    tail = x >= x.max() / 10.0
    return float(np.max(e[tail])), e[tail]


@dataclass(frozen=True)
class MajorantBound:
    """Power-law envelope V(y) <= L * y^{-alpha} on y_range."""

    L: float
    alpha: float
    y_range: tuple

    def __post_init__(self):
        if self.L <= 0 or self.alpha <= 0:
            raise ValueError("majorant needs L > 0 and alpha > 0")


def fit_majorant(v_spec, y_grid) -> MajorantBound:
    """Least-squares power-law fit of V, then inflate L to a true gridwise bound."""
    y = np.asarray(y_grid, dtype=float)
    V = v_spec.V if hasattr(v_spec, "V") else v_spec
    vals = np.asarray(V(y), dtype=float)
    if np.any(vals <= 0):
        raise NormalizationError(
            "V must be positive on the grid to fit a majorant; shift U first"
        )
    log_y = np.log(y)
    design = np.column_stack([-log_y, np.ones_like(log_y)])
    (alpha, log_L), *_ = np.linalg.lstsq(design, np.log(vals), rcond=None)
    if alpha <= 0:
        raise ValueError(f"fitted exponent {alpha!r} is not positive")
    # smallest L making the bound hold at every grid point
    L = float(np.max(vals * np.power(y, alpha)))
    return MajorantBound(L=max(L, math.exp(log_L)), alpha=float(alpha),
                         y_range=(float(y.min()), float(y.max())))
