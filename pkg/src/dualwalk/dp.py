"""True discrete-economy optima by dynamic programming.

Terminal utility depends only on terminal wealth and per-step returns are
i.i.d., so the state collapses to (step, wealth); the per-step control is the
risky fraction theta, constrained so that wealth stays strictly positive at
every atom.  Isoelastic utilities factorize the recursion into one scalar
maximization; everything else runs on a log-spaced wealth grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .conjugate import CRRA, conjugate_U
from .duals import v_n_Zn
from .esscher import solve_esscher
from .lattice import FiniteRV, terminal_distribution
from .optimize import golden_min

THETA_TOL = 1e-12
THETA_MARGIN = 1e-9          # relative pullback from the bankruptcy boundary
DEFAULT_GRID_POINTS = 2048
DEFAULT_GRID_SPAN = 1e4
BOUNDARY_MASS_LIMIT = 1e-3

RELAX_RTOL = 1e-8
RELAX_ATOL = 1e-12


@dataclass
class DPResult:
    """Value function and policy from one backward induction."""

    n: int
    family: str
    value_at: object                   # callable x -> u_n(x)
    theta: object                      # scalar (isoelastic) or list of arrays
    diagnostics: dict = field(default_factory=dict)


def _theta_interval(rv: FiniteRV, n: int):
    """Open interval of risky fractions with 1 + theta*(e^{v/sqrt n} - 1) > 0."""
    r = np.expm1(rv.values / math.sqrt(n))
    pos = r[r > 0]
    neg = r[r < 0]
    lo = -1.0 / np.max(pos) if pos.size else -math.inf
    hi = -1.0 / np.min(neg) if neg.size else math.inf
    # mean-zero, nondegenerate support gives both signs, but guard anyway
    lo = max(lo, -1e6)
    hi = min(hi, 1e6)
    margin_lo = THETA_MARGIN * max(1.0, abs(lo))
    margin_hi = THETA_MARGIN * max(1.0, abs(hi))
    return lo + margin_lo, hi - margin_hi


def crra_dp(rv: FiniteRV, n: int, gamma: float) -> DPResult:
    """Isoelastic optimum: u_n(x) = (x^gamma/gamma) * m*^n.

    m* = max_theta E[(1 + theta*(e^{zeta/sqrt n} - 1))^gamma] is a scalar
    concave maximization, identical at every step and wealth level.
    """
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    if n < 1:
        raise ValueError("n must be a positive integer")
    r = np.expm1(rv.values / math.sqrt(n))
    p = rv.probs
    lo, hi = _theta_interval(rv, n)

    def neg_m(theta):
        return -float(p @ np.power(1.0 + theta * r, gamma))

    theta_star, neg_best = golden_min(neg_m, lo, hi, tol=THETA_TOL)
    m_star = -neg_best
    log_growth = n * math.log(m_star)

    def value_at(x):
        return np.power(x, gamma) / gamma * math.exp(log_growth)

    h = 1e-6 * max(1.0, abs(theta_star))
    foc = (neg_m(theta_star - h) - neg_m(theta_star + h)) / (2.0 * h)
    return DPResult(
        n=n,
        family=f"crra({gamma})",
        value_at=value_at,
        theta=theta_star,
        diagnostics={"per_step_max": m_star, "foc_residual": abs(foc)},
    )


def _transforms(needs_signed_log):
    if needs_signed_log:
        def fwd(u):
            return np.sign(u) * np.log1p(np.abs(u))

        def inv(t):
            return np.sign(t) * np.expm1(np.abs(t))

        return fwd, inv
    return (lambda u: u), (lambda t: t)


def general_dp(rv: FiniteRV, n: int, u_spec, x_ref: float = 1.0,
               grid_points: int = DEFAULT_GRID_POINTS,
               span: float = DEFAULT_GRID_SPAN,
               theta_tol: float = 1e-10) -> DPResult:
    """Backward induction on a log wealth grid spanning [x_ref/span, x_ref*span].

    Value arrays are interpolated linearly in log wealth, through a
    sign-preserving log transform when U dips below zero.  Probability mass
    pushed past the grid edge is clamped; the run fails if that mass ever
    exceeds 0.1%.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    if x_ref <= 0:
        raise ValueError("x_ref must be positive")
    r = np.expm1(rv.values / math.sqrt(n))
    p = rv.probs
    lo, hi = _theta_interval(rv, n)
    G = np.linspace(math.log(x_ref / span), math.log(x_ref * span), grid_points)
    terminal = np.asarray(u_spec.U(np.exp(G)), dtype=float)
    fwd, inv = _transforms(bool(np.min(terminal) <= 0.0))

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    invphi2 = (3.0 - math.sqrt(5.0)) / 2.0
    shifts_cache = {}

    def objective(tv_next, theta):
        """E over atoms of V_{k+1}(x * (1 + theta r)); theta is per-node."""
        total = np.zeros_like(G)
        out_mass = np.zeros_like(G)
        for ri, pi in zip(r, p):
            target = G + np.log1p(theta * ri)
            out_mass += pi * ((target < G[0]) | (target > G[-1]))
            total += pi * inv(np.interp(target, G, tv_next))
        return total, out_mass

    tv = fwd(terminal)
    policies = []
    boundary_mass = 0.0
    for _ in range(n):
        a = np.full_like(G, lo)
        b = np.full_like(G, hi)
        c = a + invphi2 * (b - a)
        d = a + invphi * (b - a)
        fc, _ = objective(tv, c)
        fd, _ = objective(tv, d)
        while np.max(b - a) > theta_tol:
            left = fc > fd     # maximum lies in [a, d] where True
            a = np.where(left, a, c)
            b = np.where(left, d, b)
            c_new = np.where(left, a + invphi2 * (b - a), d)
            d_new = np.where(left, c, a + invphi * (b - a))
            probe = np.where(left, c_new, d_new)
            fprobe, _ = objective(tv, probe)
            fc, fd = np.where(left, fprobe, fd), np.where(left, fc, fprobe)
            c, d = c_new, d_new
        theta_k = 0.5 * (a + b)
        vals, out_mass = objective(tv, theta_k)
        boundary_mass = max(boundary_mass, float(np.max(out_mass)))
        tv = fwd(vals)
        policies.append(theta_k)
    if boundary_mass > BOUNDARY_MASS_LIMIT:
        raise RuntimeError(
            f"{boundary_mass:.2%} of probability mass left the wealth grid; "
            "widen span or recenter x_ref"
        )
    policies.reverse()   # policies[k] is the step-k rule
    values0 = tv

    def value_at(x):
        return inv(np.interp(np.log(x), G, values0))

    diag = {"boundary_mass_max": boundary_mass, "grid_points": grid_points}
    if boundary_mass > 0:
        diag["boundary_warning"] = True
    return DPResult(
        n=n,
        family=getattr(u_spec, "family", "numeric"),
        value_at=value_at,
        theta=policies,
        diagnostics=diag,
    )


def binomial_complete_u(rv: FiniteRV, n: int, u_spec, x: float) -> float:
    """Exact optimum for two-atom innovations via the dual route.

    Markets are complete and the tilted kernel is the unique pricing kernel,
    so inf_y [v_n_Zn(y) + x y] equals the dynamic-programming value; serves
    as an independent oracle for the induction.
    """
    if rv.values.size != 2:
        raise ValueError(
            "duality equals the optimum only for 2-atom innovations; "
            "use verify_relaxation for wider supports"
        )
    dist = terminal_distribution(rv, n)
    params = solve_esscher(rv, n)

    def v_oracle(y):
        return v_n_Zn(rv, n, u_spec, float(y), dist=dist, params=params)

    value, _ = conjugate_U(v_oracle, x)
    return value


def verify_relaxation(rv: FiniteRV, n: int, u_spec, x: float):
    """Check u_dp <= u_relaxed: the budget-only problem can only do better.

    Returns (u_dp, u_relaxed, ok); ok=False is a reportable failure, not an
    exception.
    """
    from .duals import u_n_relaxed

    if isinstance(u_spec, CRRA):
        u_dp = float(crra_dp(rv, n, u_spec.gamma).value_at(x))
    else:
        u_dp = float(general_dp(rv, n, u_spec, x_ref=x).value_at(x))
    u_relaxed = u_n_relaxed(rv, n, u_spec, x)[0]
    ok = u_dp <= u_relaxed * (1.0 + RELAX_RTOL) + RELAX_ATOL
    return u_dp, u_relaxed, ok
