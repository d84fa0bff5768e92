"""Discrete-economy dual and primal value functions and their tail diagnostics.

Two dual values per n: v_n_Z prices with the continuous kernel Z under the
walk's law, v_n_Zn prices with the walk's own tilted kernel Z_n.  Their gaps
to the lognormal value and to each other are the convergence diagnostics; the
truncated-tail expectations quantify the uniform-integrability behavior that
drives those limits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bsm import Z_of, log_Z_of
from .conjugate import conjugate_U
from .esscher import EsscherParams, Z_n_of, log_Z_n_of, solve_esscher
from .lattice import (
    FiniteRV,
    LatticeDistribution,
    lattice_expect,
    lattice_log_expect,
    log_laplace,
    terminal_distribution,
)


def _dist(rv, n, dist):
    return dist if dist is not None else terminal_distribution(rv, n)


def _params(rv, n, params):
    return params if params is not None else solve_esscher(rv, n)


def v_n_Z(rv: FiniteRV, n: int, v_spec, y: float,
          dist: LatticeDistribution | None = None) -> float:
    """E[V(y Z(w))] under the exact n-step lattice law."""
    if y <= 0:
        raise ValueError("y must be positive")
    dist = _dist(rv, n, dist)
    V = v_spec.V if hasattr(v_spec, "V") else v_spec
    return lattice_expect(dist, lambda w: V(y * Z_of(w)))


def v_n_Zn(rv: FiniteRV, n: int, v_spec, y: float,
           dist: LatticeDistribution | None = None,
           params: EsscherParams | None = None) -> float:
    """E[V(y Z_n(w))] under the lattice law, with Z_n the tilted kernel."""
    if y <= 0:
        raise ValueError("y must be positive")
    dist = _dist(rv, n, dist)
    params = _params(rv, n, params)
    V = v_spec.V if hasattr(v_spec, "V") else v_spec
    return lattice_expect(dist, lambda w: V(y * Z_n_of(params, w)))


def log_v_n_Zn(rv: FiniteRV, n: int, v_spec, y: float,
               dist: LatticeDistribution | None = None,
               params: EsscherParams | None = None) -> float:
    """log E[V(y Z_n)] through the lattice in log space.

    Requires the family to expose log_V; this is the route for power and
    series duals whose values overflow linear floats.
    """
    if y <= 0:
        raise ValueError("y must be positive")
    dist = _dist(rv, n, dist)
    params = _params(rv, n, params)
    log_y = math.log(y)
    return lattice_log_expect(
        dist, lambda w: v_spec.log_V(log_y + log_Z_n_of(params, w))
    )


def u_n_relaxed(rv: FiniteRV, n: int, u_spec, x: float,
                dist: LatticeDistribution | None = None,
                params: EsscherParams | None = None,
                y_guess: float = 1.0):
    """Complete-market (budget-constraint-only) optimum inf_y [v_n_Zn(y) + x y].

    Returns (value, argmin y).  ``y_guess`` warms the bracket, e.g. with the
    argmin from a previous n.
    """
    if x <= 0:
        raise ValueError("x must be positive")
    dist = _dist(rv, n, dist)
    params = _params(rv, n, params)

    def v_oracle(y):
        return v_n_Zn(rv, n, u_spec, float(y), dist=dist, params=params)

    return conjugate_U(v_oracle, x, y_guess=y_guess)


def mgf_convergence(rv: FiniteRV, gamma: float, n: int):
    """Pair (E_n[exp(gamma w)], exp(gamma^2/2)); the walk's MGF and its limit.

    Computed through logs; see :func:`log_mgf_convergence` when the linear
    values overflow.
    """
    log_disc, log_lim = log_mgf_convergence(rv, gamma, n)
    return math.exp(log_disc), math.exp(log_lim)


def log_mgf_convergence(rv: FiniteRV, gamma: float, n: int):
    log_disc = n * log_laplace(rv, gamma / math.sqrt(n))
    return log_disc, 0.5 * gamma * gamma


@dataclass(frozen=True)
class DualEvalReport:
    """Dual values plus the four truncated tails at cutoff M.

    Negative tails are reported as magnitudes E[|V| ; V < -M]; positive tails
    as E[V ; V > M].  The identity
    value == E[V ; |V| <= M] + tail_pos - tail_neg holds exactly per kernel.
    """

    n: int
    y: float
    value_vZ: float
    value_vZn: float
    tail_neg_Z: float
    tail_pos_Z: float
    tail_neg_Zn: float
    tail_pos_Zn: float
    cutoff: float

    def __post_init__(self):
        for name in ("tail_neg_Z", "tail_pos_Z", "tail_neg_Zn", "tail_pos_Zn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        for name in ("value_vZ", "value_vZn"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


def _tails(prob, vals, M):
    neg = vals < -M
    pos = vals > M
    return float(prob[neg] @ np.abs(vals[neg])), float(prob[pos] @ vals[pos])


def tail_report(rv: FiniteRV, n: int, v_spec, y: float, M: float,
                dist: LatticeDistribution | None = None,
                params: EsscherParams | None = None) -> DualEvalReport:
    """Truncated expectations of V(y * kernel) for both kernels at cutoff M."""
    if M <= 0:
        raise ValueError("M must be positive")
    dist = _dist(rv, n, dist)
    params = _params(rv, n, params)
    V = v_spec.V if hasattr(v_spec, "V") else v_spec
    vZ = np.asarray(V(y * Z_of(dist.w)), dtype=float)
    vZn = np.asarray(V(y * Z_n_of(params, dist.w)), dtype=float)
    neg_Z, pos_Z = _tails(dist.prob, vZ, M)
    neg_Zn, pos_Zn = _tails(dist.prob, vZn, M)
    return DualEvalReport(
        n=n,
        y=y,
        value_vZ=float(dist.prob @ vZ),
        value_vZn=float(dist.prob @ vZn),
        tail_neg_Z=neg_Z,
        tail_pos_Z=pos_Z,
        tail_neg_Zn=neg_Zn,
        tail_pos_Zn=pos_Zn,
        cutoff=M,
    )
