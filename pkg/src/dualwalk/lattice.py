"""Finite-support innovations and the exact law of their scaled n-step sums.

The innovation is a mean-zero, unit-variance random variable with finitely
many atoms.  The terminal value of the scaled random walk, sum_j zeta_j/sqrt(n),
then has an exact lattice law obtained by iterated convolution; every
expectation downstream is a finite weighted sum over that lattice.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import EvaluationError, LatticeSizeError

MASS_TOL = 1e-12
MEAN_TOL = 1e-10
VAR_TOL = 1e-10
LATTICE_MASS_TOL = 1e-9
LATTICE_MEAN_TOL = 1e-8
LATTICE_VAR_TOL = 1e-7

DEFAULT_MERGE_TOL = 1e-9
DEFAULT_LATTICE_CAP = 2_000_000

# tail products below this are dropped during convolution: denormal-range
# probabilities wreck the precision of merged-value averages, and their
# contribution to any double-precision expectation is zero anyway
PROB_FLOOR = 2.2250738585072014e-308 * 1e16


@dataclass(frozen=True)
class FiniteRV:
    """Innovation with atoms (value, prob), mean zero and unit variance.

    Values are strictly increasing; the constructor validates rather than
    rescales (use :func:`standardize` to coerce raw atoms).
    """

    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        probs = np.asarray(self.probs, dtype=float)
        if values.ndim != 1 or probs.shape != values.shape:
            raise ValueError("values and probs must be 1-d arrays of equal length")
        if values.size < 2:
            raise ValueError("innovation needs at least 2 atoms")
        if not np.all(np.diff(values) > 0):
            raise ValueError("atom values must be strictly increasing")
        if np.any(probs <= 0) or np.any(probs > 1):
            raise ValueError("atom probabilities must lie in (0, 1]")
        mass = probs.sum()
        if abs(mass - 1.0) > MASS_TOL:
            raise ValueError(f"atom probabilities sum to {mass!r}, not 1")
        mean = float(probs @ values)
        if abs(mean) > MEAN_TOL:
            raise ValueError(f"mean is {mean!r}, expected 0 within {MEAN_TOL}")
        var = float(probs @ values**2)
        if abs(var - 1.0) > VAR_TOL:
            raise ValueError(f"second moment is {var!r}, expected 1 within {VAR_TOL}")
        values.flags.writeable = False
        probs.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probs", probs)

    @property
    def support_bound(self) -> float:
        """Largest |value| over the atoms."""
        return float(np.max(np.abs(self.values)))

    @classmethod
    def from_atoms(cls, atoms) -> "FiniteRV":
        """Build from an iterable of (value, prob) pairs (sorted internally)."""
        pairs = sorted((float(v), float(p)) for v, p in atoms)
        values = np.array([v for v, _ in pairs])
        probs = np.array([p for _, p in pairs])
        return cls(values, probs)

    @classmethod
    def from_json(cls, text: str) -> "FiniteRV":
        """Parse the wire format {"atoms": [{"value": v, "prob": p}, ...]}."""
        doc = json.loads(text)
        atoms = doc["atoms"]
        return cls.from_atoms((a["value"], a["prob"]) for a in atoms)

    def to_json(self) -> str:
        atoms = [
            {"value": float(v), "prob": float(p)}
            for v, p in zip(self.values, self.probs)
        ]
        return json.dumps({"atoms": atoms})

    def label(self) -> str:
        return ",".join(f"{v:g}@{p:g}" for v, p in zip(self.values, self.probs))


def standardize(values, probs) -> FiniteRV:
    """Affinely rescale raw atoms to mean zero / unit variance.

    Probabilities are renormalized to sum to one; values are shifted and
    scaled.  Convenience for user-supplied atom lists.
    """
    values = np.asarray(values, dtype=float)
    probs = np.asarray(probs, dtype=float)
    probs = probs / probs.sum()
    mean = probs @ values
    sd = math.sqrt(probs @ (values - mean) ** 2)
    if sd == 0.0:
        raise ValueError("degenerate atoms: zero variance")
    return FiniteRV((values - mean) / sd, probs)


def symmetric_binomial() -> FiniteRV:
    """+/-1 with probability 1/2 each."""
    return FiniteRV(np.array([-1.0, 1.0]), np.array([0.5, 0.5]))


def asymmetric_binomial(up: float = 2.0) -> FiniteRV:
    """Two-point innovation with uptick ``up`` > 0, mean zero, variance one.

    The downtick and probabilities are pinned by the moment conditions:
    down = -1/up and P(up) = 1/(1 + up^2).  The default reproduces the
    skewed coin {2 w.p. 1/5, -1/2 w.p. 4/5} with third moment 1.5.
    """
    if up <= 0:
        raise ValueError("uptick must be positive")
    p_up = 1.0 / (1.0 + up * up)
    return FiniteRV(np.array([-1.0 / up, up]), np.array([1.0 - p_up, p_up]))


def trinomial(p_mid: float = 0.5) -> FiniteRV:
    """Three-point innovation {-s, 0, +s} with P(0) = p_mid and variance one."""
    if not 0 < p_mid < 1:
        raise ValueError("p_mid must lie in (0, 1)")
    s = 1.0 / math.sqrt(1.0 - p_mid)
    q = (1.0 - p_mid) / 2.0
    return FiniteRV(np.array([-s, 0.0, s]), np.array([q, p_mid, q]))


def moments(rv: FiniteRV):
    """Probability-weighted power sums: (mean, second moment, third moment)."""
    p, v = rv.probs, rv.values
    return float(p @ v), float(p @ v**2), float(p @ v**3)


def laplace(rv: FiniteRV, lam: float) -> float:
    """E[exp(lam * zeta)] in linear form.

    Raises OverflowError when any exponent exceeds the float range; callers
    should switch to :func:`log_laplace`.
    """
    exponents = lam * rv.values
    if np.max(exponents) > 700.0:
        raise OverflowError(
            f"laplace exponent {np.max(exponents):.1f} overflows; use log_laplace"
        )
    return float(rv.probs @ np.exp(exponents))


def log_laplace(rv: FiniteRV, lam: float) -> float:
    """log E[exp(lam * zeta)], safe for any finite lam."""
    return float(logsumexp(np.log(rv.probs) + lam * rv.values))


def gaussian_laplace(lam: float) -> float:
    """E[exp(lam * Y)] for a standard normal Y, i.e. exp(lam^2 / 2)."""
    return math.exp(0.5 * lam * lam)


def log_gaussian_laplace(lam: float) -> float:
    return 0.5 * lam * lam


@dataclass(frozen=True)
class LatticeDistribution:
    """Exact law of the walk's terminal value: strictly increasing atoms w."""

    n: int
    w: np.ndarray
    prob: np.ndarray
    mass_residual: float = field(init=False)

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        prob = np.asarray(self.prob, dtype=float)
        if not np.all(np.diff(w) > 0):
            raise ValueError("lattice values must be strictly increasing")
        if np.any(prob <= 0):
            raise ValueError("lattice probabilities must be positive")
        residual = float(abs(prob.sum() - 1.0))
        if residual > LATTICE_MASS_TOL:
            raise ValueError(f"lattice mass off by {residual:.3e}")
        mean = float(prob @ w)
        if abs(mean) > LATTICE_MEAN_TOL:
            raise ValueError(f"lattice mean {mean!r} exceeds tolerance")
        var = float(prob @ w**2)
        if abs(var - 1.0) > LATTICE_VAR_TOL:
            raise ValueError(f"lattice second moment {var!r} exceeds tolerance")
        w.flags.writeable = False
        prob.flags.writeable = False
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "prob", prob)
        object.__setattr__(self, "mass_residual", residual)

    def __len__(self):
        return self.w.size

    def to_csv(self) -> str:
        """Wire format: columns w,prob."""
        lines = ["w,prob"]
        lines.extend(f"{w!r},{p!r}" for w, p in zip(self.w, self.prob))
        return "\n".join(lines) + "\n"


def _merge_sorted(values, probs, merge_tol):
    """Merge sorted values whose gap is <= merge_tol * max(1, |w|).

    Probabilities add; merged value is the probability-weighted average.
    merge_tol = 0 collapses exact duplicates only.
    """
    if values.size <= 1:
        return values, probs
    gaps = np.diff(values)
    scale = np.maximum(1.0, np.maximum(np.abs(values[:-1]), np.abs(values[1:])))
    new_group = gaps > merge_tol * scale
    group = np.concatenate(([0], np.cumsum(new_group)))
    n_groups = group[-1] + 1
    mass = np.bincount(group, weights=probs, minlength=n_groups)
    weighted = np.bincount(group, weights=probs * values, minlength=n_groups)
    return weighted / mass, mass


def terminal_distribution(
    rv: FiniteRV,
    n: int,
    merge_tol: float = DEFAULT_MERGE_TOL,
    cap: int = DEFAULT_LATTICE_CAP,
) -> LatticeDistribution:
    """Exact law of sum_{j<=n} zeta_j / sqrt(n) by n-fold convolution.

    Values are kept sorted and nearly-equal points are merged at every step,
    which keeps recombining supports (binomial, trinomial) linear in n.
    Raises LatticeSizeError when the point count passes ``cap``.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    if merge_tol < 0:
        raise ValueError("merge_tol must be nonnegative")
    step_v = rv.values / math.sqrt(n)
    step_p = rv.probs
    w = np.zeros(1)
    prob = np.ones(1)
    for _ in range(n):
        cand = (w[:, None] + step_v[None, :]).ravel()
        cand_p = (prob[:, None] * step_p[None, :]).ravel()
        keep = cand_p >= PROB_FLOOR
        cand, cand_p = cand[keep], cand_p[keep]
        order = np.argsort(cand, kind="stable")
        w, prob = _merge_sorted(cand[order], cand_p[order], merge_tol)
        if w.size > cap:
            raise LatticeSizeError(
                f"lattice has {w.size} points (cap {cap}); "
                "reduce n or raise merge_tol"
            )
    return LatticeDistribution(n=n, w=w, prob=prob)


def lattice_expect(dist: LatticeDistribution, g) -> float:
    """Sum of prob * g(w) over the lattice, in fixed (ascending-w) order.

    ``g`` may be vectorized over numpy arrays or scalar-valued.  A non-finite
    value at any atom raises EvaluationError naming the atom.
    """
    try:
        vals = np.asarray(g(dist.w), dtype=float)
        if vals.shape != dist.w.shape:
            raise TypeError
    except (TypeError, ValueError):
        vals = np.array([float(g(wi)) for wi in dist.w])
    bad = ~np.isfinite(vals)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise EvaluationError(
            f"integrand non-finite ({vals[i]!r}) at lattice atom w={dist.w[i]!r}"
        )
    return float(dist.prob @ vals)


def lattice_log_expect(dist: LatticeDistribution, log_g) -> float:
    """log of sum prob * exp(log_g(w)); stable for very large magnitudes."""
    try:
        vals = np.asarray(log_g(dist.w), dtype=float)
        if vals.shape != dist.w.shape:
            raise TypeError
    except (TypeError, ValueError):
        vals = np.array([float(log_g(wi)) for wi in dist.w])
    if np.any(np.isnan(vals)):
        i = int(np.argmax(np.isnan(vals)))
        raise EvaluationError(f"log-integrand is NaN at lattice atom w={dist.w[i]!r}")
    return float(logsumexp(np.log(dist.prob) + vals))
