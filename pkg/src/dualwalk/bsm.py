"""Closed forms and quadrature for the lognormal (continuous-time) economy.

The pricing kernel is Z = exp(-w/2 - 1/8) with w standard normal at the
horizon; dual values v(y) = E[V(y Z)] reduce to Gauss-Hermite quadrature, and
for power-law duals to the exact factor phi(alpha) = exp((alpha^2+alpha)/8).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EvaluationError

LINEAR_NATS_MAX = 700.0  # materialize linear values only below this log magnitude
DEFAULT_QUAD_ORDER = 200

_hermite_cache: dict = {}


def _gh_nodes(order: int):
    """Gauss-Hermite nodes/weights rescaled for a standard normal weight."""
    if order not in _hermite_cache:
        t, w = np.polynomial.hermite.hermgauss(order)
        _hermite_cache[order] = (t * math.sqrt(2.0), w / math.sqrt(math.pi))
    return _hermite_cache[order]


def Z_of(w):
    """Pricing kernel exp(-w/2 - 1/8) as a function of the terminal walk value."""
    return np.exp(log_Z_of(w))


def log_Z_of(w):
    return -0.5 * np.asarray(w, dtype=float) - 0.125


def z_density(y):
    """Density of Z under the physical measure: lognormal(-1/8, 1/4)."""
    return np.exp(log_z_density(np.asarray(y, dtype=float)))


def log_z_density(y):
    y = np.asarray(y, dtype=float)
    return log_z_density_from_log(np.log(y))


def log_z_density_from_log(s):
    """log f(e^s); stable deep into the tails where f underflows."""
    s = np.asarray(s, dtype=float)
    return 0.5 * math.log(2.0 / math.pi) - s - 2.0 * (s + 0.125) ** 2


def v_bsm(v_spec, y: float, quad_order: int = DEFAULT_QUAD_ORDER) -> float:
    """Dual value E[V(y Z)] by Gauss-Hermite quadrature in the normal variable.

    The kernel change of variable is exact, so the integrand is smooth in w
    for power-law and series duals; order 200 reaches quadrature saturation
    for moderate exponents.
    """
    if y <= 0:
        raise ValueError("y must be positive")
    nodes, weights = _gh_nodes(quad_order)
    V = v_spec.V if hasattr(v_spec, "V") else v_spec
    vals = np.asarray(V(y * Z_of(nodes)), dtype=float)
    if not np.all(np.isfinite(vals)):
        i = int(np.argmax(~np.isfinite(vals)))
        raise EvaluationError(
            f"dual integrand non-finite at quadrature node w={nodes[i]!r}"
        )
    return float(weights @ vals)


def v_bsm_diverges(v_spec, y: float, base_order: int = 100, doublings: int = 3,
                   growth_factor: float = 10.0) -> bool:
    """Heuristic divergence sentinel: value keeps growing as order doubles.

    Used near dual poles where E[V(y Z)] is infinite; a convergent quadrature
    stabilizes under order doubling, a divergent one keeps climbing.
    """
    vals = []
    order = base_order
    for _ in range(doublings + 1):
        try:
            vals.append(v_bsm(v_spec, y, quad_order=order))
        except (EvaluationError, OverflowError):
            return True
        order *= 2
    increasing = all(b > a for a, b in zip(vals, vals[1:]))
    return increasing and vals[-1] > growth_factor * max(vals[0], 1e-300)


def phi(alpha: float) -> float:
    """exp((alpha^2 + alpha) / 8); overflows for alpha ~ 75, use log_phi then."""
    lp = log_phi(alpha)
    if lp > LINEAR_NATS_MAX:
        raise OverflowError(f"phi({alpha}) is {lp:.1f} nats; use log_phi")
    return math.exp(lp)


def log_phi(alpha: float) -> float:
    return (alpha * alpha + alpha) / 8.0


def v_bsm_power(alpha: float, beta: float, y: float) -> float:
    """Closed-form dual value beta * phi(alpha) * y^{-alpha}."""
    lv = log_v_bsm_power(alpha, y, log_beta=math.log(beta))
    if abs(lv) > LINEAR_NATS_MAX:
        raise OverflowError(
            f"v_bsm_power is {lv:.1f} nats; use log_v_bsm_power"
        )
    return math.exp(lv)


def log_v_bsm_power(alpha: float, y: float, log_beta: float = 0.0) -> float:
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if y <= 0:
        raise ValueError("y must be positive")
    return log_beta + log_phi(alpha) - alpha * math.log(y)


def u_bsm_power(alpha: float, beta: float, x: float) -> float:
    """Primal value exp(alpha/8) * U_{alpha,beta}(x) for the power family."""
    from .conjugate import power_utility

    return math.exp(alpha / 8.0) * power_utility(alpha, beta, x)


def log_u_bsm_power(alpha: float, log_beta: float, log_x: float) -> float:
    from .conjugate import log_power_utility

    return alpha / 8.0 + log_power_utility(alpha, log_beta, log_x)


@dataclass(frozen=True)
class ValueCurve:
    """Sampled value function with its expected convexity sign.

    convexity_sign: +1 convex, -1 concave, 0 unconstrained.
    """

    arg_name: str
    args: np.ndarray
    values: np.ndarray
    convexity_sign: int = 0
    source: str = ""

    def __post_init__(self):
        args = np.asarray(self.args, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if args.ndim != 1 or args.shape != values.shape or args.size < 2:
            raise ValueError("curve needs matching 1-d args/values, length >= 2")
        if not np.all(np.diff(args) > 0):
            raise ValueError("curve arguments must be strictly increasing")
        args.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "args", args)
        object.__setattr__(self, "values", values)
        if self.convexity_sign and not self.check_convexity():
            raise ValueError(
                f"curve violates expected convexity sign {self.convexity_sign}"
            )

    def check_convexity(self, slack: float = 1e-9) -> bool:
        """Second differences match convexity_sign on all interior triples."""
        if self.args.size < 3 or self.convexity_sign == 0:
            return True
        x, v = self.args, self.values
        s_left = (v[1:-1] - v[:-2]) / (x[1:-1] - x[:-2])
        s_right = (v[2:] - v[1:-1]) / (x[2:] - x[1:-1])
        curve = s_right - s_left
        scale = np.maximum(1.0, np.abs(v[1:-1]))
        return bool(np.all(self.convexity_sign * curve >= -slack * scale))

    def to_csv(self) -> str:
        """Columns arg,value,log_value (log_value is nan for values <= 0)."""
        lines = ["arg,value,log_value"]
        for a, v in zip(self.args, self.values):
            lv = math.log(v) if v > 0 else float("nan")
            lines.append(f"{a!r},{v!r},{lv!r}")
        return "\n".join(lines) + "\n"
