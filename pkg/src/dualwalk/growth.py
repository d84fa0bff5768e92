"""Growth certificates: discrete optima that blow up while the lognormal stays finite.

For an innovation whose Laplace transform beats the Gaussian's at some
lambda0 > 0 (possible only when E[zeta^3] > 0), the ratio of the n-step dual
value at y = k to the lognormal dual value at y = 1/k, taken at exponent
alpha = 2*lambda0*sqrt(n), grows without bound in n.  Scheduling n_k so the
ratio passes 2^{2k} and normalizing coefficients so each term's lognormal
dual value is 2^{-k} produces a series dual whose lognormal value is finite
while the discrete optima run off to infinity along n_k.  All coefficient
arithmetic lives in log space: the exponents reach thousands of nats.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .bsm import log_v_bsm_power
from .conjugate import SeriesConjugate
from .errors import NoMarginError, SearchFailure
from .esscher import EsscherParams, solve_esscher
from .lattice import FiniteRV, log_laplace, moments

MARGIN_TOL = 1e-6
DEFAULT_N_CAP = 2**20
LN2 = math.log(2.0)


def laplace_margin(rv: FiniteRV, lam: float) -> float:
    """log L_zeta(lam) - lam^2/2: how far the innovation beats the Gaussian."""
    return log_laplace(rv, lam) - 0.5 * lam * lam


def find_lambda0(rv: FiniteRV, lambda_grid, margin_tol: float = MARGIN_TOL) -> float:
    """Smallest grid point whose Laplace margin exceeds ``margin_tol``.

    Raises NoMarginError when no grid point qualifies, which is the expected
    obstruction whenever E[zeta^3] <= 0 (e.g. the symmetric binomial, whose
    cosh transform sits below the Gaussian's for every lambda).
    """
    grid = sorted(float(l) for l in lambda_grid)
    if not grid or grid[0] <= 0:
        raise ValueError("lambda grid must contain positive values")
    best_lam, best_margin = None, -math.inf
    for lam in grid:
        margin = laplace_margin(rv, lam)
        if margin > margin_tol:
            return lam
        if margin > best_margin:
            best_lam, best_margin = lam, margin
    third = moments(rv)[2]
    raise NoMarginError(
        f"no grid lambda beats the Gaussian transform by more than {margin_tol:g} "
        f"(best margin {best_margin:.3e} at lambda={best_lam:g}; "
        f"third moment {third:.6g})",
        best_lambda=best_lam,
        best_margin=best_margin,
    )


def log2_M(rv: FiniteRV, k: int, n: int, lam0: float,
           params: EsscherParams | None = None) -> float:
    """Base-2 log of the dual-value ratio v_n_Zn(k) / v_bsm(1/k) at alpha = 2*lam0*sqrt(n).

    The coefficient beta cancels exactly, leaving pure log arithmetic:

        ln M = sqrt(n) * [-4 lam0 ln k + 2 lam0 (b_n - 1/8)]
             + n * [ln L_zeta(2 a_n lam0) - lam0^2 / 2].
    """
    if k < 1 or n < 1:
        raise ValueError("k and n must be positive integers")
    if params is None:
        params = solve_esscher(rv, n)
    s = math.sqrt(n)
    sqrt_term = s * (-4.0 * lam0 * math.log(k) + 2.0 * lam0 * (params.b - 0.125))
    n_term = n * (log_laplace(rv, 2.0 * params.a * lam0) - 0.5 * lam0 * lam0)
    return (sqrt_term + n_term) / LN2


@dataclass(frozen=True)
class CertRecord:
    k: int
    n_k: int
    alpha_k: float
    log_beta_k: float     # nats
    log2_M: float         # base-2
    log_x_k: float        # nats

    @property
    def y_k(self) -> float:
        return math.sqrt(self.k)


@dataclass(frozen=True)
class CounterexampleCertificate:
    """Per-k witnesses (n_k, alpha_k, beta_k, M, x_k) of unbounded discrete optima."""

    rv_label: str
    lambda0: float
    records: tuple

    def __post_init__(self):
        recs = tuple(self.records)
        if not recs:
            raise ValueError("certificate needs at least one record")
        for prev, rec in zip((None,) + recs[:-1], recs):
            if rec.log2_M < 2.0 * rec.k:
                raise ValueError(
                    f"record k={rec.k} has log2_M={rec.log2_M:.3f} < {2 * rec.k}"
                )
            if rec.n_k < rec.k:
                raise ValueError(f"record k={rec.k} violates n_k >= k")
            if prev is not None:
                if rec.n_k / rec.k < prev.n_k / prev.k - 1e-12:
                    raise ValueError(
                        f"n_k/k decreases from k={prev.k} to k={rec.k}"
                    )
                if rec.log_x_k <= prev.log_x_k:
                    raise ValueError(
                        f"log_x_k not strictly increasing at k={rec.k}"
                    )
        object.__setattr__(self, "records", recs)

    @property
    def strictly_increasing_ratio(self) -> bool:
        """Whether n_k/k is strictly (not just weakly) increasing."""
        ratios = [rec.n_k / rec.k for rec in self.records]
        return all(b > a for a, b in zip(ratios, ratios[1:]))

    def to_json(self) -> str:
        doc = {
            "lambda0": self.lambda0,
            "records": [
                {
                    "k": rec.k,
                    "n_k": rec.n_k,
                    "alpha_k": rec.alpha_k,
                    "log_beta_k": rec.log_beta_k,
                    "log2_M": rec.log2_M,
                    "log_x_k": rec.log_x_k,
                }
                for rec in self.records
            ],
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str, rv_label: str = "") -> "CounterexampleCertificate":
        doc = json.loads(text)
        records = tuple(
            CertRecord(
                k=int(r["k"]),
                n_k=int(r["n_k"]),
                alpha_k=float(r["alpha_k"]),
                log_beta_k=float(r["log_beta_k"]),
                log2_M=float(r["log2_M"]),
                log_x_k=float(r["log_x_k"]),
            )
            for r in doc["records"]
        )
        return cls(rv_label=rv_label, lambda0=float(doc["lambda0"]), records=records)


def _log_v_n_power(rv, params, alpha, log_beta, y):
    """log of the n-step dual value for the power family, via the per-step factorization."""
    n = params.n
    return (
        log_beta
        - alpha * math.log(y)
        + alpha * params.b
        + n * log_laplace(rv, alpha * params.a / math.sqrt(n))
    )


def _record_for(rv, k, n, lam0, params, l2m) -> CertRecord:
    alpha = 2.0 * lam0 * math.sqrt(n)
    log_beta = -k * LN2 - log_v_bsm_power(alpha, 1.0 / k)
    y_k = math.sqrt(k)
    log_vn = _log_v_n_power(rv, params, alpha, log_beta, y_k)
    log_x = math.log(alpha / y_k) + log_vn
    return CertRecord(
        k=k, n_k=n, alpha_k=alpha, log_beta_k=log_beta, log2_M=l2m, log_x_k=log_x
    )


def find_nk(rv: FiniteRV, lam0: float, k_max: int,
            n_cap: int = DEFAULT_N_CAP) -> CounterexampleCertificate:
    """Schedule search: smallest doubling n per k meeting the certificate bars.

    The k-th search starts at max(k, ceil(n_{k-1} * k / (k-1))) so that
    n_k >= k and n_k/k is nondecreasing by construction, and doubles from
    there until log2_M >= 2k *and* x_k clears x_{k-1}.  (The escape point
    x_k is increasing in n once the ratio bar is met, but the minimal n for
    the ratio alone can undershoot the previous x_k when the predecessor
    overshot its own bar through doubling granularity.)  Raises SearchFailure
    when a k would need n beyond ``n_cap``, reporting the best margin reached.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    records = []
    prev_n = None
    prev_log_x = -math.inf
    best_seen = {}
    for k in range(1, k_max + 1):
        lower = k if prev_n is None else max(k, math.ceil(prev_n * k / (k - 1)))
        n = lower
        found = None
        best = (-math.inf, None)
        while n <= n_cap:
            params = solve_esscher(rv, n)
            l2m = log2_M(rv, k, n, lam0, params=params)
            if l2m > best[0]:
                best = (l2m, n)
            if l2m >= 2.0 * k:
                rec = _record_for(rv, k, n, lam0, params, l2m)
                if rec.log_x_k > prev_log_x:
                    found = rec
                    break
            n *= 2
        best_seen[k] = best
        if found is None:
            raise SearchFailure(
                f"k={k}: no n <= {n_cap} reaches log2_M >= {2 * k} with "
                f"increasing escape point at lambda0={lam0:g}; "
                f"best log2_M={best[0]:.3f} at n={best[1]}",
                best=best_seen,
            )
        records.append(found)
        prev_n = found.n_k
        prev_log_x = found.log_x_k
    return CounterexampleCertificate(
        rv_label=rv.label(), lambda0=lam0, records=tuple(records)
    )


def build_certificate(rv: FiniteRV, lambda_grid, k_max: int,
                      n_cap: int = DEFAULT_N_CAP,
                      margin_tol: float = MARGIN_TOL) -> CounterexampleCertificate:
    """Certificate from the smallest accepted lambda that fits the search cap.

    A tiny accepted margin can push n_k past ``n_cap`` (the required n scales
    like (ln k / margin)^2), so grid points are tried in increasing order and
    the first whose schedule completes wins.
    """
    grid = sorted(float(l) for l in lambda_grid)
    accepted = [l for l in grid if laplace_margin(rv, l) > margin_tol]
    if not accepted:
        # reuse the diagnostic path
        find_lambda0(rv, grid, margin_tol=margin_tol)
    failures = []
    for lam in accepted:
        try:
            return find_nk(rv, lam, k_max, n_cap=n_cap)
        except SearchFailure as exc:
            failures.append((lam, str(exc)))
    raise SearchFailure(
        "no accepted lambda admits a certificate within the n cap: "
        + "; ".join(f"lambda={lam:g}: {msg}" for lam, msg in failures),
        best=failures,
    )


def series_from_certificate(cert: CounterexampleCertificate) -> SeriesConjugate:
    """The dual series sum_k beta_k y^{-alpha_k} built from the certificate."""
    alphas = np.array([rec.alpha_k for rec in cert.records])
    log_betas = np.array([rec.log_beta_k for rec in cert.records])
    return SeriesConjugate(alphas, log_betas)


def series_v_at_one(cert: CounterexampleCertificate) -> float:
    """Lognormal dual value of the series at y = 1: sum_k 2^{-k} k^{-alpha_k}.

    Follows from the normalization beta_k * phi(alpha_k) = 2^{-k} k^{-alpha_k};
    finite by construction, and dominated by the k=1 term.
    """
    total = 0.0
    for rec in cert.records:
        total += math.exp(-rec.k * LN2 - rec.alpha_k * math.log(rec.k))
    return total


@dataclass(frozen=True)
class GrowthRow:
    k: int
    log_x_k: float
    slope_lower_bound: float      # ((1 + alpha_k)/alpha_k) * sqrt(k)
    lower_bound_at_probe: float   # slope * x_probe, when x_probe <= x_k


def growth_certificate(rv: FiniteRV, cert: CounterexampleCertificate,
                       x_probe: float = 1.0):
    """Per-k slope witnesses: the n_k-economy optimum exceeds sqrt(k) * x on (0, x_k].

    x_k = (alpha_k / y_k) * v^{n_k}(y_k) is where the power-family optimum has
    chord slope ((1+alpha_k)/alpha_k) * y_k; concavity through the origin
    extends the bound leftward.  ``lower_bound_at_probe`` is reported as nan
    for records whose x_k falls below the probe.
    """
    rows = []
    for rec in cert.records:
        slope = (1.0 + rec.alpha_k) / rec.alpha_k * math.sqrt(rec.k)
        if math.log(x_probe) <= rec.log_x_k:
            bound = slope * x_probe
        else:
            bound = float("nan")
        rows.append(
            GrowthRow(
                k=rec.k,
                log_x_k=rec.log_x_k,
                slope_lower_bound=slope,
                lower_bound_at_probe=bound,
            )
        )
    return rows
